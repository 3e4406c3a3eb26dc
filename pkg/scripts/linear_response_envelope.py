"""Relative deviation |<w> - beta var(w)/2| / (beta var(w)/2) on both fig2 presets,
restricted to points where <w^2> >= 0.1 max <w^2>. Used to pin the acceptance threshold."""

import numpy as np

from wingflap.experiment import preset, run_sweep

worst = 0.0
for name in ("fig2-integrable", "fig2-ergodic"):
    res = run_sweep(preset(name))
    beta = res.config.beta
    w2, mean, var = res.column("second_moment_w"), res.column("mean_w"), res.column("variance_w")
    sel = w2 >= 0.1 * w2.max()
    rel = np.abs(mean[sel] - beta * var[sel] / 2) / (beta * var[sel] / 2)
    print(f"{name}: {sel.sum()} points, max {rel.max():.5f}, median {np.median(rel):.5f}")
    worst = max(worst, rel.max())
print(f"envelope: {worst:.5f}")
