"""Sweep both fig2 presets and write one CSV per preset.

    python scripts/fig2.py --out-dir data/ [--shots 100000 --seed 7]
"""

import argparse
from pathlib import Path

from wingflap.experiment import emit, preset, run_sweep


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out-dir", default="data")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("fig2-integrable", "fig2-ergodic"):
        cfg = preset(name, shots=args.shots, seed=args.seed if args.shots else None, workers=args.workers)
        result = run_sweep(cfg)
        emit(result, "csv", out / f"{name}.csv")
        bad = result.failures()
        print(f"{name}: {len(result.rows)} rows, max Re F (2nd half) = "
              f"{result.column('re_F')[len(result.rows) // 2:].max():.4f}, identity failures = {len(bad)}")


if __name__ == "__main__":
    main()
