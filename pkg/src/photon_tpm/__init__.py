"""Entropy production from two-point measurements on correlated photon pairs.

Modules:

- ``qmath``: small dense linear algebra (tensor products, partial traces, entropies)
- ``channel``: the FTAD channel, its partial-swap dilation and entropy fluxes
- ``interferometer``: path-by-path propagation through the optical circuit
- ``tpm``: joint TPM statistics, stochastic entropy production, fluctuation theorem
- ``clicks``: Monte Carlo coincidence counting and estimators
- ``cli``: command-line front end
"""
from .channel import (
    DilationUnitary,
    FluxTable,
    FtadParams,
    KrausChannel,
    apply,
    build_dilation,
    build_ftad,
    entropy_flux,
    kraus_from_dilation,
    reversed_channel,
)
from .clicks import ClickRecord, EstimateReport, NoiseModel, RunConfig, estimate, simulate, sweep
from .interferometer import BlockMask, PathLabel, PathState, effective_operator, evolve, final_state, path_probability
from .qmath import PureState, partial_trace_env, tensor, von_neumann_entropy
from .tpm import (
    Outcome,
    SourceParams,
    TpmDistribution,
    TrajectoryRecord,
    average_sigma,
    entropy_production,
    ft_functional,
    joint_distribution,
    system_entropy_change,
)

__version__ = "0.1.0"
