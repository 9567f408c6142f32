"""
Simulated coincidence counting
==============================

Emulate the counting experiment with Poisson noise, estimate trajectory
probabilities and entropy production with error bars, and sweep the
coupling.
"""

import numpy as np

from photon_tpm.channel import FtadParams
from photon_tpm.clicks import RunConfig, run, sweep
from photon_tpm.tpm import SourceParams

cfg = RunConfig(SourceParams(0.77), FtadParams(0.19, 0.7), counts_per_setting=10_000, seed=1)

###############################################################################
# One run at the reference point.

rep = run(cfg)
for rec, est in zip(rep.records, rep.sigma_estimates):
    if rec.count:
        print(rec.outcome, f"n = {rec.count:5d}  P = {rec.estimated_prob:.4f} +- {rec.std_err:.4f}",
              f"sigma = {est.value:+.3f} +- {est.std_err:.3f}")
print("fidelity     :", rep.fidelity)
print("<sigma>      : %.4f +- %.4f" % rep.avg_sigma)
print("<exp(-sigma)>: %.4f +- %.4f" % rep.ft_value)

###############################################################################
# Sweep of the coupling. The fluctuation theorem should stay within its
# error bar of one across the sweep.

for r in sweep(cfg, np.linspace(0, 1, 11), max_workers=4):
    v, e = r.ft_value
    print(f"eta = {r.eta:.1f}  <exp(-sigma)> = {v:.3f} +- {e:.3f}  within 2 err: {abs(v - 1) <= 2 * e}")

###############################################################################
# Statistical error shrinks like N^(-1/2).

for n in (10**2, 10**3, 10**4, 10**5):
    errs = [run(RunConfig(cfg.src, cfg.ch, n, seed=s)).avg_sigma[1] for s in range(5)]
    print(f"N = {n:>6d}  mean std_err(<sigma>) = {np.mean(errs):.5f}")
