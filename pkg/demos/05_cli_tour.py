"""End-to-end run of the command line interface.

Generates a table, fits models, certifies single-target and blend
ambiguity, ranges the group rate, and sweeps stable points, all through
the installed ``topkflip`` entry point. Outputs land in a temporary
directory and the interesting lines are echoed.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def run(*args):
    cmd = [sys.executable, "-m", "topkflip.cli", *args]
    print(f"$ topkflip {' '.join(args)}")
    res = subprocess.run(cmd, capture_output=True, text=True)
    if res.returncode != 0:
        print(res.stderr.strip())
        raise SystemExit(res.returncode)
    return res


def head(path, k=6):
    for line in Path(path).read_text().splitlines()[:k]:
        print(f"    {line}")
    print()


def main():
    out = Path(tempfile.mkdtemp(prefix="topkflip_demo_"))
    table = out / "table.csv"

    run("synth", "--n", "240", "--b", "0.5", "--seed", "11", "--out", str(table))
    print(f"wrote {table}\n")

    run("fit", "--data", str(table), "--targets", "y1,y2",
        "--out", str(out / "models.json"))
    models = json.loads((out / "models.json").read_text())
    for m in models["models"]:
        print(f"model for {m['target']}: coef {[round(c, 3) for c in m['coef']]}")
    print()

    run("ambiguity-single", "--data", str(table), "--target", "y1",
        "--kappa", "12", "--epsilons", "0.005,0.02,0.05,0.1",
        "--out", str(out / "curve.csv"))
    head(out / "curve.csv", 10)

    run("ambiguity-multi", "--data", str(table), "--targets", "y1,y2",
        "--kappa", "12", "--out", str(out / "reports.jsonl"))
    lines = (out / "reports.jsonl").read_text().splitlines()
    flippable = sum(1 for l in lines[1:] if json.loads(l)["flippable"])
    print(f"blend reports: {flippable} of {len(lines) - 1} rows flippable\n")

    run("fairness-range", "--data", str(table), "--targets", "y1,y2",
        "--group", "protected", "--kappa", "20%", "--direction", "both",
        "--out", str(out / "fairness.json"))
    fair = json.loads((out / "fairness.json").read_text())
    rng = fair["report"]["tune_report"]
    print(f"protected count range on tune: [{rng['min_count']}, {rng['max_count']}], "
          f"one-hots {rng['one_hot_counts']}\n")

    run("stable-points", "--data", str(table), "--family", "index",
        "--targets", "y1,y2", "--kappa-sweep", "5,10,20",
        "--out", str(out / "stable.csv"))
    head(out / "stable.csv", 8)

    print(f"all outputs under {out}")


if __name__ == "__main__":
    main()
