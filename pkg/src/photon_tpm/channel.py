"""Finite-temperature amplitude damping (FTAD) channel.

Kraus operators, for occupation ``p`` and coupling ``eta``::

    E1 = sqrt(p)   [[1, 0], [0, sqrt(eta)]]      E2 = sqrt(p)   [[0, sqrt(1-eta)], [0, 0]]
    E3 = sqrt(1-p) [[sqrt(eta), 0], [0, 1]]      E4 = sqrt(1-p) [[0, 0], [sqrt(1-eta), 0]]

E1, E3 leave the excitation number alone; E2 is emission (1 -> 0) and E4
excitation (0 -> 1). The labels ``j = 1..4`` are kept 1-based throughout the
public API; ``operators[j - 1]`` is ``E_j``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import qmath

KRAUS_LABELS = (1, 2, 3, 4)
COMPLETENESS_TOL = 1e-12


class InvalidChannelError(ValueError):
    pass


class InfiniteFluxError(ValueError):
    """The entropy flux diverges (p = 0 or p = 1)."""


@dataclass(frozen=True)
class FtadParams:
    """Channel parameters; ``p = sin^2(phi)`` and ``eta = cos^2(theta)`` in the optics."""

    p: float
    eta: float

    def __post_init__(self):
        for name in ("p", "eta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite real, got {v!r}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    @classmethod
    def from_angles(cls, phi: float, theta: float) -> "FtadParams":
        """Build from the wave-plate angles (radians)."""
        return cls(p=math.sin(phi) ** 2, eta=math.cos(theta) ** 2)

    @property
    def phi(self) -> float:
        return math.asin(math.sqrt(self.p))

    @property
    def theta(self) -> float:
        return math.acos(math.sqrt(self.eta))

    def matches_angles(self, phi: float, theta: float, tol: float = 1e-12) -> bool:
        return abs(self.p - math.sin(phi) ** 2) <= tol and abs(self.eta - math.cos(theta) ** 2) <= tol


def ftad_kraus_array(p, eta) -> np.ndarray:
    """Kraus operators for (broadcastable) arrays of ``p`` and ``eta``.

    Returns shape ``broadcast(p, eta).shape + (4, 2, 2)``, real-valued.
    """
    p, eta = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(eta, dtype=float))
    sp, sq = np.sqrt(p), np.sqrt(1.0 - p)
    se, sr = np.sqrt(eta), np.sqrt(1.0 - eta)
    k = np.zeros(p.shape + (4, 2, 2))
    k[..., 0, 0, 0] = sp
    k[..., 0, 1, 1] = sp * se
    k[..., 1, 0, 1] = sp * sr
    k[..., 2, 0, 0] = sq * se
    k[..., 2, 1, 1] = sq
    k[..., 3, 1, 0] = sq * sr
    return k


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple
    labels: tuple = KRAUS_LABELS
    params: FtadParams | None = None

    def __post_init__(self):
        ops = tuple(qmath.as_matrix(op) for op in self.operators)
        if not ops:
            raise InvalidChannelError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(op.shape != (d, d) for op in ops):
            raise InvalidChannelError("Kraus operators must all be square and of equal size")
        if len(self.labels) != len(ops):
            raise InvalidChannelError("one label per Kraus operator is required")
        for op in ops:
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __getitem__(self, j: int) -> np.ndarray:
        """Kraus operator by its 1-based label."""
        return self.operators[self.labels.index(j)]

    def completeness_residual(self) -> float:
        """max |sum_j E_j^dag E_j - I|."""
        s = sum(op.conj().T @ op for op in self.operators)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def is_cptp(self, tol: float = COMPLETENESS_TOL) -> bool:
        return self.completeness_residual() <= tol

    def validate(self, tol: float = COMPLETENESS_TOL) -> "KrausChannel":
        r = self.completeness_residual()
        if r > tol:
            raise InvalidChannelError(f"Kraus completeness violated: residual {r:.3e}")
        return self

    def to_dict(self) -> dict:
        out = {
            "labels": list(self.labels),
            "operators": [[[[z.real, z.imag] for z in row] for row in op] for op in self.operators],
        }
        if self.params is not None:
            out = {"p": self.params.p, "eta": self.params.eta, **out}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KrausChannel":
        ops = tuple(
            np.array([[complex(re, im) for re, im in row] for row in op], dtype=complex)
            for op in data["operators"]
        )
        params = FtadParams(data["p"], data["eta"]) if "p" in data and "eta" in data else None
        labels = tuple(data.get("labels", range(1, len(ops) + 1)))
        return cls(ops, labels=labels, params=params)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "KrausChannel":
        return cls.from_dict(json.loads(text))

    def equals(self, other: "KrausChannel", tol: float = 0.0) -> bool:
        return (
            self.labels == other.labels
            and len(self.operators) == len(other.operators)
            and all(np.max(np.abs(a - b)) <= tol for a, b in zip(self.operators, other.operators))
        )


def build_ftad(params: FtadParams) -> KrausChannel:
    """The four FTAD Kraus operators for ``params``."""
    ops = tuple(ftad_kraus_array(params.p, params.eta).astype(complex))
    return KrausChannel(ops, KRAUS_LABELS, params).validate()


def apply(channel: KrausChannel, rho) -> np.ndarray:
    """Lambda[rho] = sum_j E_j rho E_j^dag."""
    rho = qmath.validate_density_matrix(rho)
    if rho.shape != (channel.dim, channel.dim):
        raise qmath.DimensionError(f"channel acts on dim {channel.dim}, state has shape {rho.shape}")
    channel.validate()
    out = sum(op @ rho @ op.conj().T for op in channel.operators)
    return 0.5 * (out + out.conj().T)


def thermal_state(p: float) -> np.ndarray:
    """p|0><0| + (1-p)|1><1|."""
    return np.diag([p, 1.0 - p]).astype(complex)


@dataclass(frozen=True)
class DilationUnitary:
    """Partial-swap unitary on system (x) environment plus the thermal environment state."""

    matrix: np.ndarray
    env_state: np.ndarray
    params: FtadParams

    def excitation_commutator_norm(self) -> float:
        n_tot = qmath.tensor(qmath.N1, qmath.I2) + qmath.tensor(qmath.I2, qmath.N1)
        return float(np.max(np.abs(qmath.commutator(self.matrix, n_tot))))

    def evolve(self, rho_s) -> np.ndarray:
        """tr_E[U (rho_S x rho_E) U^dag]."""
        rho_s = qmath.validate_density_matrix(rho_s)
        joint = self.matrix @ qmath.tensor(rho_s, self.env_state) @ self.matrix.conj().T
        return qmath.partial_trace_env(joint)


def build_dilation(params: FtadParams) -> DilationUnitary:
    se, sr = math.sqrt(params.eta), math.sqrt(1.0 - params.eta)
    u = np.array(
        [
            [1, 0, 0, 0],
            [0, se, -sr, 0],
            [0, sr, se, 0],
            [0, 0, 0, 1],
        ],
        dtype=complex,
    )
    return DilationUnitary(u, thermal_state(params.p), params)


def env_block(u, k: int, l: int) -> np.ndarray:
    """System operator <k|_E U |l>_E."""
    return np.asarray(u, dtype=complex).reshape(2, 2, 2, 2)[:, k, :, l]


def kraus_from_dilation(d: DilationUnitary) -> KrausChannel:
    """Kraus operators sqrt(env population) * <k|U|l> from the dilation.

    With the partial swap of ``build_dilation`` the emission operator comes out
    as ``-E2``; the other three agree with ``build_ftad`` entrywise. No real
    qubit-environment unitary can give all four with positive signs, since
    unitarity forces ``E1^dag E4 + E2^dag E3 = 0``. The sign does not change
    the channel.
    """
    p = d.params.p
    u = d.matrix
    ops = (
        math.sqrt(p) * env_block(u, 0, 0),
        math.sqrt(p) * env_block(u, 1, 0),
        math.sqrt(1.0 - p) * env_block(u, 1, 1),
        math.sqrt(1.0 - p) * env_block(u, 0, 1),
    )
    return KrausChannel(ops, KRAUS_LABELS, d.params)


@dataclass(frozen=True)
class FluxTable:
    """Entropy flux per Kraus label, in nats.

    ``divergent[j-1]`` is 0 for a finite entry, +1 / -1 for a flux at +inf / -inf;
    the matching ``values`` entries are then meaningless (kept at 0).
    """

    values: tuple
    divergent: tuple = (0, 0, 0, 0)

    @property
    def finite(self) -> bool:
        return not any(self.divergent)

    def __getitem__(self, j: int) -> float:
        if self.divergent[j - 1]:
            raise InfiniteFluxError(f"flux for j={j} is infinite")
        return self.values[j - 1]

    def as_array(self) -> np.ndarray:
        if not self.finite:
            raise InfiniteFluxError("entropy flux is infinite for p in {0, 1}")
        return np.array(self.values, dtype=float)


def jump_flux(p):
    """ln(p / (1 - p)) for arrays strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    return np.log(p / (1.0 - p))


def entropy_flux(params: FtadParams, check: bool = True) -> FluxTable:
    """Fluxes (0, ln p/(1-p), 0, -ln p/(1-p)) fixed by the time-reversal condition.

    With ``check`` the reversal identity sum_j e^{-Phi_j} E_j E_j^dag = I is
    verified numerically; a violation raises ``InvalidChannelError``.
    """
    p = params.p
    if p == 0.0:
        return FluxTable((0.0, 0.0, 0.0, 0.0), (0, -1, 0, 1))
    if p == 1.0:
        return FluxTable((0.0, 0.0, 0.0, 0.0), (0, 1, 0, -1))
    f = math.log(p / (1.0 - p))
    table = FluxTable((0.0, f, 0.0, -f))
    if check:
        r = reversal_residual(build_ftad(params), table)
        if r > COMPLETENESS_TOL:
            raise InvalidChannelError(f"time-reversal condition violated: residual {r:.3e}")
    return table


def reversal_residual(channel: KrausChannel, flux: FluxTable) -> float:
    """max |sum_j e^{-Phi_j} E_j E_j^dag - I|."""
    phi = flux.as_array()
    s = sum(math.exp(-f) * op @ op.conj().T for f, op in zip(phi, channel.operators))
    return float(np.max(np.abs(s - np.eye(channel.dim))))


def reversed_channel(channel: KrausChannel, flux: FluxTable) -> KrausChannel:
    """Time-reversed Kraus operators e^{-Phi_j/2} E_j^dag."""
    phi = flux.as_array()
    ops = tuple(math.exp(-f / 2.0) * op.conj().T for f, op in zip(phi, channel.operators))
    return KrausChannel(ops, channel.labels, channel.params)


def kraus_residual(a: KrausChannel, b: KrausChannel) -> float:
    """Largest entrywise difference between corresponding Kraus operators."""
    if a.labels != b.labels:
        raise InvalidChannelError("channels have different Kraus labels")
    return max(float(np.max(np.abs(x - y))) for x, y in zip(a.operators, b.operators))


def kraus_residual_up_to_sign(a: KrausChannel, b: KrausChannel) -> float:
    """As ``kraus_residual`` but each operator pair may differ by an overall sign."""
    if a.labels != b.labels:
        raise InvalidChannelError("channels have different Kraus labels")
    return max(
        min(float(np.max(np.abs(x - y))), float(np.max(np.abs(x + y))))
        for x, y in zip(a.operators, b.operators)
    )


def choi_matrix(channel: KrausChannel) -> np.ndarray:
    """sum_j vec(E_j) vec(E_j)^dag, row-major vec; independent of Kraus phases."""
    vecs = [op.reshape(-1) for op in channel.operators]
    return sum(np.outer(v, v.conj()) for v in vecs)
