"""Payoff loss table at K=9 from the balanced start (3,3,3)."""
import argparse
import csv
import io

from ruingame.experiments import DELTA_V_FIELDS, ExperimentConfig, run_delta_v

# reference uniform-strategy losses, for side-by-side display
REFERENCE_UNIFORM = {
    0: (0.1995, 0.1995, 0.1995),
    2: (0.1177, 0.0462, 0.0308),
}


def run():
    ap = argparse.ArgumentParser()
    ap.add_argument("--K", type=int, default=9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    res = run_delta_v(ExperimentConfig(kind="delta-v", K=args.K, seed=args.seed))
    buf = io.StringIO()
    w = csv.DictWriter(buf, DELTA_V_FIELDS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(res["rows"])
    text = f"# K={res['K']} start={','.join(map(str, res['start']))}\n" + buf.getvalue()
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    print(text)
    for row in res["rows"]:
        ref = REFERENCE_UNIFORM.get(row["row"])
        if ref and row["status"] == "ok":
            got = tuple(round(row[f"dV_uniform{n}"], 4) for n in (1, 2, 3))
            print(f"row {row['row']}: uniform loss {got} vs reference {ref}")


if __name__ == "__main__":
    run()
