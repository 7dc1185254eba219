"""MVI success proportion per K, unrestricted and with p1 held at 1.

Writes two CSVs (plot data) into the output directory.
"""
import argparse
from pathlib import Path

from ruingame.cli import main as cli


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--k-max", type=int, default=9)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    common = ["--reps", str(args.reps), "--k-max", str(args.k_max),
              "--seed", str(args.seed), "--threads", str(args.threads)]
    cli(["sweep-convergence", *common, "--out", str(out / "sweep_unrestricted.csv")])
    cli(["sweep-convergence", *common, "--fix", "p1=1", "--out", str(out / "sweep_p1_fixed.csv")])
    for name in ("sweep_unrestricted.csv", "sweep_p1_fixed.csv"):
        print(f"== {name}")
        print((out / name).read_text())


if __name__ == "__main__":
    run()
