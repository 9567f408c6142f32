"""Two-point-measurement statistics of the FTAD process.

The A-photon of the pair ``sqrt(delta)|00> + sqrt(1-delta)|11>`` fixes the
initial outcome ``gamma`` (probability ``p_gamma = (delta, 1-delta)``), the
S-photon's final polarization gives ``gamma'`` and the open interferometer
path gives the Kraus label ``j``::

    P(gamma, gamma', j) = p_gamma |<gamma'| E_j |gamma>|^2
    sigma(gamma, gamma', j) = ln(p_gamma / pfinal_gamma') + Phi_j

All entropies are in nats. Outcome tables are indexed ``[gamma, gamma', j-1]``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import qmath
from .channel import FtadParams, FluxTable, InfiniteFluxError, build_ftad, entropy_flux, ftad_kraus_array, jump_flux

# sigma status flags
FINITE = "finite"
UNDEFINED = "undefined"  # final marginal is zero
NEG_INF = "-inf"
POS_INF = "+inf"

CSV_COLUMNS = ("gamma", "gamma_prime", "j", "probability", "sigma")


class Outcome(NamedTuple):
    gamma: int
    gamma_prime: int
    j: int

    @property
    def index(self) -> tuple:
        return (self.gamma, self.gamma_prime, self.j - 1)


ALL_OUTCOMES = tuple(Outcome(g, gp, j) for g in (0, 1) for gp in (0, 1) for j in (1, 2, 3, 4))
# the only trajectories compatible with excitation conservation
SUPPORT = (
    Outcome(0, 0, 1),
    Outcome(1, 1, 1),
    Outcome(1, 0, 2),
    Outcome(0, 0, 3),
    Outcome(1, 1, 3),
    Outcome(0, 1, 4),
)


@dataclass(frozen=True)
class SourceParams:
    delta: float

    def __post_init__(self):
        d = self.delta
        if not isinstance(d, (int, float, np.floating, np.integer)) or not math.isfinite(d) or not 0.0 <= d <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {d!r}")
        object.__setattr__(self, "delta", float(d))

    @property
    def p_initial(self) -> np.ndarray:
        return np.array([self.delta, 1.0 - self.delta])

    def pair_state(self) -> qmath.PureState:
        """|psi_SA> on S (x) A, S the slow index."""
        return qmath.PureState(np.array([math.sqrt(self.delta), 0, 0, math.sqrt(1.0 - self.delta)]))

    def reduced_state(self) -> np.ndarray:
        """tr_A |psi_SA><psi_SA| = diag(delta, 1 - delta)."""
        return qmath.partial_trace_env(self.pair_state().density_matrix())


def joint_probs(delta, p, eta) -> np.ndarray:
    """P(gamma, gamma', j) for broadcastable parameter arrays; shape ``(..., 2, 2, 4)``."""
    delta = np.asarray(delta, dtype=float)
    kraus = ftad_kraus_array(p, eta)  # (..., j, gamma', gamma)
    delta, kraus = np.broadcast_arrays(delta[..., None, None, None], kraus)
    delta = delta[..., 0, 0, 0]
    p_init = np.stack([delta, 1.0 - delta], axis=-1)
    trans = np.abs(kraus) ** 2
    # -> (..., gamma, gamma', j)
    return p_init[..., :, None, None] * np.moveaxis(trans, -3, -1).swapaxes(-3, -2)


def sigma_table(p_initial, p_final, flux) -> np.ndarray:
    """ln(p_gamma / pfinal_gamma') + Phi_j, shape ``(..., 2, 2, 4)``; inf/nan allowed."""
    p_initial, p_final, flux = (np.asarray(a, dtype=float) for a in (p_initial, p_final, flux))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            np.log(p_initial)[..., :, None, None]
            - np.log(p_final)[..., None, :, None]
            + flux[..., None, None, :]
        )


@dataclass(frozen=True)
class TpmDistribution:
    probs: np.ndarray  # (2, 2, 4)
    p_initial: np.ndarray
    p_final: np.ndarray
    source: SourceParams
    channel: FtadParams

    def __getitem__(self, outcome) -> float:
        return float(self.probs[Outcome(*outcome).index])

    def nonzero(self) -> dict:
        return {o: self[o] for o in ALL_OUTCOMES if self[o] > 0.0}

    def path_probability(self, j: int) -> float:
        return float(self.probs[:, :, j - 1].sum())

    def to_dict(self) -> dict:
        return {
            "delta": self.source.delta,
            "p": self.channel.p,
            "eta": self.channel.eta,
            "probs": [[list(map(float, row)) for row in block] for block in self.probs],
            "p_initial": list(map(float, self.p_initial)),
            "p_final": list(map(float, self.p_final)),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TpmDistribution":
        return cls(
            probs=np.array(data["probs"], dtype=float),
            p_initial=np.array(data["p_initial"], dtype=float),
            p_final=np.array(data["p_final"], dtype=float),
            source=SourceParams(data["delta"]),
            channel=FtadParams(data["p"], data["eta"]),
        )

    def equals(self, other: "TpmDistribution") -> bool:
        return (
            self.source == other.source
            and self.channel == other.channel
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.p_initial, other.p_initial)
            and np.array_equal(self.p_final, other.p_final)
        )


def joint_distribution(src: SourceParams, ch: FtadParams) -> TpmDistribution:
    probs = joint_probs(src.delta, ch.p, ch.eta)
    p_final = probs.sum(axis=(0, 2))
    for a in (probs, p_final):
        a.setflags(write=False)
    return TpmDistribution(probs, src.p_initial, p_final, src, ch)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One trajectory; ``sigma`` is None unless ``status == "finite"``."""

    outcome: Outcome
    probability: float
    sigma: float | None
    status: str = FINITE

    def to_dict(self) -> dict:
        return {
            "gamma": self.outcome.gamma,
            "gamma_prime": self.outcome.gamma_prime,
            "j": self.outcome.j,
            "probability": self.probability,
            "sigma": self.sigma,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectoryRecord":
        return cls(Outcome(d["gamma"], d["gamma_prime"], d["j"]), d["probability"], d["sigma"], d["status"])


def _sigma_status(log_pi: float, log_pf: float, phi: float, phi_div: int) -> tuple:
    if math.isinf(log_pf):
        return None, UNDEFINED
    neg = math.isinf(log_pi) or phi_div < 0
    pos = phi_div > 0
    if neg and pos:
        return None, UNDEFINED
    if neg:
        return None, NEG_INF
    if pos:
        return None, POS_INF
    return log_pi - log_pf + phi, FINITE


def entropy_production(dist: TpmDistribution, flux: FluxTable | None = None) -> list:
    """Stochastic entropy production for all 16 trajectories, supported or not."""
    if flux is None:
        flux = entropy_flux(dist.channel)
    with np.errstate(divide="ignore"):
        log_pi = np.log(dist.p_initial)
        log_pf = np.log(dist.p_final)
    records = []
    for o in ALL_OUTCOMES:
        sigma, status = _sigma_status(
            float(log_pi[o.gamma]), float(log_pf[o.gamma_prime]), flux.values[o.j - 1], flux.divergent[o.j - 1]
        )
        records.append(TrajectoryRecord(o, float(dist.probs[o.index]), sigma, status))
    return records


def _supported_sigmas(records: Iterable[TrajectoryRecord]) -> list:
    out = []
    for r in records:
        if r.probability == 0.0:
            continue
        if r.status != FINITE:
            raise ValueError(f"trajectory {tuple(r.outcome)} has probability {r.probability} but sigma is {r.status}")
        out.append((r.probability, r.sigma))
    return out


def average_sigma(records: Iterable[TrajectoryRecord]) -> float:
    """<sigma> over the trajectories; zero-probability ones contribute nothing."""
    return math.fsum(p * s for p, s in _supported_sigmas(records))


def ft_functional(records: Iterable[TrajectoryRecord]) -> float:
    """<exp(-sigma)>, equal to 1 by the integral fluctuation theorem."""
    return math.fsum(p * math.exp(-s) for p, s in _supported_sigmas(records))


def sigma_distribution(records: Iterable[TrajectoryRecord]) -> dict:
    """Probability mass of each distinct finite sigma value (rounded to 1e-12)."""
    out: dict = {}
    for p, s in _supported_sigmas(records):
        key = round(s, 12)
        out[key] = out.get(key, 0.0) + p
    return dict(sorted(out.items()))


def system_entropy_change(src: SourceParams, ch: FtadParams) -> tuple:
    """(<ln p_gamma / pfinal_gamma'>, S(Lambda[rho_S]) - S(rho_S))."""
    from .channel import apply

    dist = joint_distribution(src, ch)
    lhs = 0.0
    terms = []
    for o in ALL_OUTCOMES:
        pr = dist[o]
        if pr > 0.0:
            terms.append(pr * (math.log(dist.p_initial[o.gamma]) - math.log(dist.p_final[o.gamma_prime])))
    lhs = math.fsum(terms)
    rho_s = src.reduced_state()
    rhs = qmath.von_neumann_entropy(apply(build_ftad(ch), rho_s)) - qmath.von_neumann_entropy(rho_s)
    return lhs, rhs


def path_marginals(dist: TpmDistribution) -> np.ndarray:
    """P(j), j = 1..4."""
    return dist.probs.sum(axis=(0, 1))


def grid_functionals(delta, p, eta) -> dict:
    """Vectorized <sigma>, <exp(-sigma)> and the entropy bookkeeping on a grid.

    Parameters must lie strictly inside (0, 1). Returns arrays of the broadcast
    shape under keys ``avg_sigma``, ``ft``, ``delta_s`` (system entropy change
    from the final and initial marginals) and ``flux_term`` (sum_j Phi_j P(j)).
    """
    delta, p, eta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (delta, p, eta)))
    if np.any((delta <= 0) | (delta >= 1) | (p <= 0) | (p >= 1) | (eta < 0) | (eta > 1)):
        raise ValueError("grid_functionals needs delta, p in (0, 1) and eta in [0, 1]")
    probs = joint_probs(delta, p, eta)
    p_init = np.stack([delta, 1.0 - delta], axis=-1)
    p_fin = probs.sum(axis=(-3, -1))
    f = jump_flux(p)
    flux = np.stack([np.zeros_like(f), f, np.zeros_like(f), -f], axis=-1)
    sig = sigma_table(p_init, p_fin, flux)
    # p_final > 0 whenever delta, p are interior, so sigma is finite everywhere
    weighted = probs * sig
    ft_terms = probs * np.exp(-sig)
    h_init = -np.sum(p_init * np.log(p_init), axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_fin = -np.sum(np.where(p_fin > 0, p_fin * np.log(p_fin), 0.0), axis=-1)
    return {
        "avg_sigma": weighted.sum(axis=(-3, -2, -1)),
        "ft": ft_terms.sum(axis=(-3, -2, -1)),
        "delta_s": h_fin - h_init,
        "flux_term": np.sum(flux * probs.sum(axis=(-3, -2)), axis=-1),
    }


def records_to_csv(records: Iterable[TrajectoryRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        o = r.outcome
        sigma = format(r.sigma, ".17g") if r.status == FINITE else r.status
        w.writerow([o.gamma, o.gamma_prime, o.j, format(r.probability, ".17g"), sigma])
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        o = Outcome(int(row["gamma"]), int(row["gamma_prime"]), int(row["j"]))
        s = row["sigma"]
        status = s if s in (UNDEFINED, NEG_INF, POS_INF) else FINITE
        out.append(TrajectoryRecord(o, float(row["probability"]), float(s) if status == FINITE else None, status))
    return out


def exact_report(src: SourceParams, ch: FtadParams) -> dict:
    """Everything the exact computation produces, as plain JSON-ready data."""
    dist = joint_distribution(src, ch)
    flux = entropy_flux(ch)
    records = entropy_production(dist, flux)
    lhs, rhs = system_entropy_change(src, ch)
    try:
        avg, ft = average_sigma(records), ft_functional(records)
    except ValueError:
        avg = ft = None
    return {
        "distribution": dist.to_dict(),
        "flux": {"values": list(flux.values), "divergent": list(flux.divergent)},
        "trajectories": [r.to_dict() for r in records],
        "avg_sigma": avg,
        "ft_value": ft,
        "entropy_change": {"trajectory_average": lhs, "von_neumann": rhs},
    }
