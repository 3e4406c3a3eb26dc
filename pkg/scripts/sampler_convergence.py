"""Median total-variation distance of sampled work histograms to the exact
distribution, ergodic preset at tau = 10, over 20 seeds."""

import numpy as np

from wingflap.sampler import empirical_distribution, sample_transitions, total_variation_distance
from wingflap.scrambling import heisenberg_wingflap
from wingflap.spectral import spectral_projectors, thermal_state
from wingflap.spin import build_h0, build_h2, build_wingflap
from wingflap.tpm import distribution_from_transitions, transition_matrix

L, g, J, h, beta, tau = 9, 0.90450849, 1.0, 0.8090169, 0.1, 10.0
h0 = build_h0(L, g)
fam = spectral_projectors(h0)
wt = heisenberg_wingflap(build_wingflap(L, 5, np.pi / 2), h0 + build_h2(L, J, h), tau / 2)
tm = transition_matrix(thermal_state(h0, beta), fam, wt)
exact = distribution_from_transitions(tm, 1e-9 * fam.spread)

for shots in (10**3, 10**4, 10**5, 10**6):
    tvd = [total_variation_distance(empirical_distribution(sample_transitions(tm, shots, s), exact.merge_tol), exact)
           for s in range(20)]
    print(f"shots={shots:>8d}  median TVD={np.median(tvd):.5f}  sqrt-scaled={np.median(tvd) * np.sqrt(shots):.3f}")
