"""Run the HOM-dip and tritter sweeps from scripts/configs and write CSVs to results/.

Usage: python scripts/run_sweeps.py [--threads N] [--quick] [--only NAME ...]

``--quick`` coarsens every sweep to step 1.0 (pi/2 for the phase sweep) and
caps solver iterations at 300 for a smoke run.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

from photonbounds import cli

HERE = Path(__file__).resolve().parent
CONFIGS = {
    "hom_dip_balanced": "hom-dip",
    "hom_dip_five_sixths": "hom-dip",
    "tritter_delay": "tritter",
    "tritter_phase": "tritter",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--only", nargs="*", choices=sorted(CONFIGS))
    parser.add_argument("--results", type=Path, default=HERE.parent / "results")
    args = parser.parse_args(argv)
    worst = 0
    for name in args.only or CONFIGS:
        doc = json.loads((HERE / "configs" / f"{name}.json").read_text())
        doc.pop("output", None)
        sweep = None
        if args.quick:
            doc["estimator"]["max_iter"] = 300
            s = doc["source"]["sweep"]
            step = math.pi / 2 if name == "tritter_phase" else 1.0
            sweep = (s["start"], s["stop"], step)
        cfg = cli.load_config(doc, sweep=sweep)
        out = args.results / f"{name}.csv"
        start = time.perf_counter()
        runner = cli.run_hom_dip if CONFIGS[name] == "hom-dip" else cli.run_tritter
        _, code = runner(cfg, out, threads=args.threads)
        print(f"{name}: exit {code}, {time.perf_counter() - start:.0f} s -> {out}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
