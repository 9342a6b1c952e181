use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const ZEROS: &str = "# first ten\n14.134725141734693790\n21.022039638771554993\n25.010857580145688763\n\
30.424876125859513210\n32.935061587739189691\n37.586178158825671257\n40.918719012147495187\n\
43.327073280914999519\n48.005150881167159727\n49.773832477672302181\n";

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("oscillax-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn oscillax<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillax")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn table_build_is_idempotent() {
    let d = scratch("table");
    let path = d.join("t.bin");
    let p = path.to_str().unwrap();
    let first = oscillax(&["table", "--limit", "100000", "--out", p]);
    assert!(first.status.success());
    let bytes = fs::read(&path).unwrap();
    let again = oscillax(&["table", "--limit", "100000", "--out", p]);
    assert!(again.status.success());
    assert!(stdout(&again).contains("nothing to do"));
    assert_eq!(fs::read(&path).unwrap(), bytes);
    let edge = d.join("edge.bin");
    assert!(oscillax(&["table", "--limit", "30", "--mode", "omega-value", "--out", edge.to_str().unwrap()]).status.success());
    let tiny = oscillax(&["table", "--limit", "29", "--out", edge.to_str().unwrap()]);
    assert_eq!(tiny.status.code(), Some(2));
    fs::remove_dir_all(&d).ok();
}

#[test]
fn run_reproduces_table_rows_and_resumes() {
    let d = scratch("run");
    let clean = d.join("clean");
    let args = |out: &PathBuf| -> Vec<String> {
        ["run", "--family", "W", "--limit", "6261", "--block-size", "500", "--out", out.to_str().unwrap()].map(String::from).to_vec()
    };
    let o = oscillax(&args(&clean));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("W: value=6195 "));
    let part = d.join("part");
    let mut a = args(&part);
    a.extend(["--stop-after-blocks".into(), "5".into()]);
    assert!(stdout(&oscillax(&a)).contains("stopped after 5 blocks"));
    let mut a = args(&part);
    a.push("--resume".into());
    assert!(oscillax(&a).status.success());
    for f in ["summary.txt", "samples_W.csv"] {
        assert_eq!(fs::read(clean.join(f)).unwrap(), fs::read(part.join(f)).unwrap(), "{f}");
    }
    fs::remove_dir_all(&d).ok();
}

#[test]
fn run_reports_thresholds() {
    let d = scratch("thr");
    let o = oscillax(&[
        "run", "--family", "S", "--alpha", "0", "--limit", "10", "--du", "0",
        "--threshold", "lower:0", "--out", d.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    // S_0 at 1..10: -1, -2, -1, 0, 1, 2, 3, 2, 1, 2
    assert!(stdout(&o).contains("violated on [1, 4] (4 integers), extreme -1.414213562 at x=2"), "{}", stdout(&o));
    fs::remove_dir_all(&d).ok();
}

#[test]
fn conjecture_exit_codes() {
    let empty = oscillax(&["conjectures", "--limit", "0"]);
    assert_eq!(empty.status.code(), Some(0));
    let o = oscillax(&["conjectures", "--limit", "100000"]);
    // S_{-3} vanishes at x = 29
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("[FAIL] S_{-3}(x) > 0 for x >= 11: violated at"));
    assert!(text.contains("[ok] S_{-4}(x) < 0 for x >= 11"));
    assert!(text.contains("[ok] proportion with 3 | n - Omega(n) > 1/3: stated onset 62"));
}

#[test]
fn single_zero_bound() {
    let d = scratch("bound");
    let z = d.join("zeros.txt");
    fs::write(&z, ZEROS).unwrap();
    let pick = d.join("pick.txt");
    fs::write(&pick, "1\n").unwrap();
    let o = oscillax(&[
        "bound", "--zeros", z.to_str().unwrap(), "--kernel", "fejer", "--big-n", "1", "--big-t", "100",
        "--assumption", pick.to_str().unwrap(), "--out", d.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("conditional on the supplied independence assumption"));
    let csv = fs::read_to_string(d.join("bound_terms.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("gamma,abs_residue,kernel_weight,contribution\n14.1347251417"));
    let sweep = oscillax(&["bound", "--zeros", z.to_str().unwrap(), "--big-t", "50", "--count", "10", "--sweep", "0.05"]);
    let rows: Vec<(f64, f64)> = stdout(&sweep)
        .lines()
        .skip_while(|l| *l != "alpha,amplitude")
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 21);
    let best = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(best.0, 0.5);
    fs::remove_dir_all(&d).ok();
}

#[test]
fn explicit_center_only_and_compare() {
    let d = scratch("explicit");
    let z = d.join("zeros.txt");
    fs::write(&z, ZEROS).unwrap();
    let o = oscillax(&[
        "explicit", "--zeros", z.to_str().unwrap(), "--big-t", "10", "--u-lo", "5", "--u-hi", "6",
        "--du", "0.5", "--out", d.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("zeros used 0"));
    let csv = fs::read_to_string(d.join("estimate.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("u,estimate"));
    // -(1 + sqrt 2)/zeta(1/2) by mpmath
    for l in csv.lines().skip(1) {
        let v: f64 = l.split_once(',').unwrap().1.parse().unwrap();
        assert!((v - 1.65316952001).abs() < 1e-10, "{l}");
    }
    let cmp = oscillax(&[
        "explicit", "--zeros", z.to_str().unwrap(), "--big-t", "49.7", "--u-lo", "8", "--u-hi", "10",
        "--compare", "--threshold", "1.6",
    ]);
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    assert!(stdout(&cmp).contains("sieve comparison: "));
    fs::remove_dir_all(&d).ok();
}

#[test]
fn selfcheck_and_errors() {
    assert!(oscillax(&["selfcheck"]).status.success());
    assert_eq!(oscillax(&["run", "--family", "Q", "--limit", "10"]).status.code(), Some(2));
    assert_eq!(oscillax(&["bound", "--zeros", "/nonexistent/zeros.txt"]).status.code(), Some(2));
}
