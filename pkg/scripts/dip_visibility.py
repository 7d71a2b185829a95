"""Visibility lower bounds at zero delay for the two six-photon HOM targets.

Usage: python scripts/dip_visibility.py [--max-iter N] [--backend highs|simplex]

Prints the certified upper bound on P(x|n), the distinguishable-photon value
and the implied visibility floor V >= 1 - upper / classical.
"""

import argparse
import time

from photonbounds.estimator import bound, build_program, default_settings, simulate_dataset
from photonbounds.fockcore import InternalStateSet, ModeUnitary, distinguishable_transition_probability

CASES = ((0.5, (3, 3)), (5 / 6, (5, 1)))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-iter", type=int, default=4000)
    parser.add_argument("--backend", default="highs", choices=["highs", "simplex"])
    args = parser.parse_args(argv)
    grid = default_settings("beamsplitter")
    for eta, n in CASES:
        u = ModeUnitary.beamsplitter(eta)
        start = time.perf_counter()
        program = build_program(simulate_dataset(u, InternalStateSet.identical(2), grid), grid.m_cut)
        res = bound(n, n, program, backend=args.backend, max_iter=args.max_iter)
        classical = distinguishable_transition_probability(u, n, n)
        print(
            f"eta={eta:.4f} P({n}|{n}): upper={res.upper:.6g} classical={classical:.6g} "
            f"V>={1 - res.upper / classical:.6f} statuses={res.statuses} {time.perf_counter() - start:.0f} s"
        )


if __name__ == "__main__":
    main()
