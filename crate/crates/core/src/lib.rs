//! Weighted Liouville-type sums by segmented sieving, and the zeta-zero machinery
//! that predicts their oscillations.

pub mod arith;
pub mod checkpoint;
pub mod conjectures;
pub mod dd;
pub mod error;
pub mod euler;
pub mod explicit;
pub mod oscillation;
pub mod primes;
pub mod residues;
pub mod run;
pub mod series;
pub mod sieve;
pub mod table;
pub mod zeta;
pub mod zeros;

pub use arith::{ExactAccumulator, Family, SumSpec};
pub use error::{Error, Result};
pub use table::{FactorTable, TableMode};
