"""Run every experiment kind from configs/ and collect outputs under results/.

    python3 scripts/run_experiments.py [--seed N] [--only KIND ...]
"""

import argparse
import sys
from pathlib import Path

from gridfold.cli import main
from gridfold.config import KINDS

ROOT = Path(__file__).resolve().parent.parent


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--only", nargs="+", choices=KINDS, default=list(KINDS))
    p.add_argument("--out-dir", default=str(ROOT / "results"))
    args = p.parse_args(argv)
    worst = 0
    for kind in args.only:
        out = Path(args.out_dir) / f"{kind}.csv"
        code = main([kind, str(ROOT / "configs" / f"{kind}.yaml"), "--seed", str(args.seed), "--out", str(out)])
        print(f"{kind}: exit {code}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
