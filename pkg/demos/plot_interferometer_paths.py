"""
Which-path structure of the optical simulator
=============================================

Propagate a polarization qubit through the displacers, plates and polarizing
beam splitters, then read off one Kraus operator per pair of longitudinal
paths.
"""

import numpy as np

from photon_tpm import qmath
from photon_tpm.channel import FtadParams, apply, build_ftad
from photon_tpm.interferometer import (
    ALL_PATHS,
    PATH_SIGN,
    PATH_TO_KRAUS,
    BlockMask,
    effective_operator,
    stages,
    final_state,
    path_probability,
)

np.set_printoptions(precision=4, suppress=True)

params = FtadParams(p=0.19, eta=0.7)
ch = build_ftad(params)
psi = qmath.PureState.qubit(0.6, 0.8)

###############################################################################
# Every stage of the propagation, by transverse and longitudinal mode.

for state in stages(psi, params):
    print(state.stage)
    for label, vec in state.terms:
        print(f"    tm={label.tm} lm_i={label.lm_initial} lm_f={label.lm_final}", np.round(vec, 4))

###############################################################################
# Each path acts as X times one Kraus operator (up to a global sign).

for path in ALL_PATHS:
    j = PATH_TO_KRAUS[path]
    m = PATH_SIGN[path] * qmath.X @ effective_operator(params, path)
    print(path, "-> E%d" % j, "match:", np.allclose(m, ch[j], atol=1e-14))

###############################################################################
# Blocking all but one path selects a single trajectory, with the
# probability of the corresponding quantum jump.

rho = psi.density_matrix()
for path in ALL_PATHS:
    j = PATH_TO_KRAUS[path]
    direct = np.trace(ch[j] @ rho @ ch[j].conj().T).real
    print(path, f"P = {path_probability(psi, params, path):.6f}  Tr(E rho E^dag) = {direct:.6f}")

###############################################################################
# With every path open, the output is the channel output flipped by X.

out = final_state(psi, params)
print(np.allclose(out, qmath.X @ apply(ch, rho) @ qmath.X, atol=1e-14))
print(BlockMask.parse("l_i:l_f,s_i:s_f"))
