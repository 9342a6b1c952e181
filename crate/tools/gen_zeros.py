#!/usr/bin/env python3
"""Regenerate data/zeros5000.txt: ordinates of the first 5000 nontrivial
zeros of the Riemann zeta function, one per line, ascending."""
import sys

import mpmath


def main(count: int, path: str) -> None:
    mpmath.mp.dps = 20
    with open(path, "w") as out:
        out.write(f"# first {count} zeta zero ordinates (mpmath.zetazero, 20 digits working precision)\n")
        for n in range(1, count + 1):
            gamma = mpmath.zetazero(n).imag
            out.write(mpmath.nstr(gamma, 15, strip_zeros=False) + "\n")
            if n % 250 == 0:
                out.flush()
                print(n, file=sys.stderr, flush=True)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 5000,
         sys.argv[2] if len(sys.argv) > 2 else "data/zeros5000.txt")
