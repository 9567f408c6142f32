"""
A qubit coupled to a thermal reservoir
======================================

Build the four-operator channel, check that it is trace preserving, watch a
state relax toward the thermal fixed point, and compare it with the partial
swap dilation.
"""

import numpy as np

from photon_tpm import qmath
from photon_tpm.channel import (
    FtadParams,
    apply,
    build_dilation,
    build_ftad,
    choi_matrix,
    entropy_flux,
    kraus_from_dilation,
    reversal_residual,
    thermal_state,
)

np.set_printoptions(precision=4, suppress=True)

###############################################################################
# The channel at the reference point p = 0.19, eta = 0.7.

params = FtadParams(p=0.19, eta=0.7)
ch = build_ftad(params)
for j in ch.labels:
    print(f"E{j} =\n{ch[j].real}")
print("completeness residual:", ch.completeness_residual())

###############################################################################
# Repeated application drives any input toward diag(p, 1 - p).

rho = qmath.random_density_matrix(np.random.default_rng(0))
for step in range(30):
    rho = apply(ch, rho)
print("after 30 steps:\n", rho.real)
print("thermal state:\n", thermal_state(params.p))

###############################################################################
# The dilation gives the same channel. Its second operator comes out with
# the opposite sign, which leaves the channel itself unchanged.

ext = kraus_from_dilation(build_dilation(params))
for j in ch.labels:
    print(f"E{j}: dilation/direct ratio", np.round(np.sum(ext[j]) / np.sum(ch[j]), 12) if np.any(ch[j]) else "-")
print("Choi matrices agree:", np.allclose(choi_matrix(ext), choi_matrix(ch), atol=1e-14))

###############################################################################
# Entropy flux attached to each jump, and the reversal identity it satisfies.

flux = entropy_flux(params)
print("Phi =", np.round(flux.as_array(), 6))
print("sum_j exp(-Phi_j) E_j E_j^dag - I:", reversal_residual(ch, flux))
