"""Monte Carlo emulation of the coincidence-counting experiment.

Each blocked-path configuration leaves one Kraus path open; the coincidences
registered in that configuration are split over the four (gamma, gamma')
detector pairs. ``counts_per_setting`` is the coincidence budget ``N``: the
configuration for path ``j`` collects ``N_j ~ Poisson(N P(j))`` clicks, so that
with all four settings combined the expected total is ``N``.

Random numbers come from numpy's PCG64 bit generator, seeded through
``SeedSequence(seed, spawn_key=(index,))`` so every sweep point owns an
independent stream.

Uncertainties are first-order (delta-method) propagations of the Poisson
variance of each count, with an empty bin assigned variance 1.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import FtadParams, entropy_flux
from .tpm import (
    ALL_OUTCOMES,
    FINITE,
    NEG_INF,
    UNDEFINED,
    Outcome,
    SourceParams,
    TpmDistribution,
    joint_distribution,
)

REPORT_CSV_COLUMNS = ("eta", "gamma", "gamma_prime", "j", "count", "est_prob", "std_err", "sigma", "sigma_err")

# outcome index arrays, in ALL_OUTCOMES order
_G = np.array([o.gamma for o in ALL_OUTCOMES])
_GP = np.array([o.gamma_prime for o in ALL_OUTCOMES])
_J = np.array([o.j for o in ALL_OUTCOMES])


class NoiseModel(str, enum.Enum):
    MULTINOMIAL = "multinomial"
    POISSON_PER_OUTCOME = "poisson_per_outcome"


@dataclass(frozen=True)
class RunConfig:
    src: SourceParams
    ch: FtadParams
    counts_per_setting: int = 10_000
    seed: int = 0
    noise_model: NoiseModel = NoiseModel.POISSON_PER_OUTCOME
    index: int = 0  # stream index within a sweep

    def __post_init__(self):
        n = self.counts_per_setting
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"counts_per_setting must be a positive integer, got {n!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "noise_model", NoiseModel(self.noise_model))

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(self.seed), spawn_key=(int(self.index),))))


@dataclass(frozen=True)
class ClickRecord:
    outcome: Outcome
    count: int
    estimated_prob: float
    std_err: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.outcome.gamma,
            "gamma_prime": self.outcome.gamma_prime,
            "j": self.outcome.j,
            "count": self.count,
            "estimated_prob": self.estimated_prob,
            "std_err": self.std_err,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClickRecord":
        return cls(Outcome(d["gamma"], d["gamma_prime"], d["j"]), d["count"], d["estimated_prob"], d["std_err"])


def _poisson_var(counts: np.ndarray) -> np.ndarray:
    return np.maximum(counts, 1).astype(float)


def records_from_counts(counts) -> list:
    """ClickRecords for a count vector in ``ALL_OUTCOMES`` order."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total <= 0:
        raise ValueError("a run needs at least one coincidence")
    err = np.sqrt(_poisson_var(counts)) / total
    return [ClickRecord(o, int(c), int(c) / total, float(e)) for o, c, e in zip(ALL_OUTCOMES, counts, err)]


def simulate(cfg: RunConfig, dist: TpmDistribution | None = None) -> list:
    """Draw one simulated data set of coincidence counts."""
    if dist is None:
        dist = joint_distribution(cfg.src, cfg.ch)
    probs = np.array([dist[o] for o in ALL_OUTCOMES])
    probs = np.clip(probs, 0.0, None)
    rng = cfg.rng()
    n = cfg.counts_per_setting
    if cfg.noise_model is NoiseModel.MULTINOMIAL:
        counts = rng.multinomial(n, probs / probs.sum())
    else:
        counts = np.zeros(len(ALL_OUTCOMES), dtype=np.int64)
        for j in (1, 2, 3, 4):
            sel = _J == j
            pj = probs[sel].sum()
            if pj <= 0.0:
                continue
            n_j = rng.poisson(n * pj)
            counts[sel] = rng.multinomial(n_j, probs[sel] / pj)
        if counts.sum() == 0:
            raise ValueError("simulated run registered no coincidences; raise counts_per_setting")
    return records_from_counts(counts)


@dataclass(frozen=True)
class SigmaEstimate:
    outcome: Outcome
    value: float | None
    std_err: float | None
    status: str = FINITE

    def to_dict(self) -> dict:
        return {
            "gamma": self.outcome.gamma,
            "gamma_prime": self.outcome.gamma_prime,
            "j": self.outcome.j,
            "value": self.value,
            "std_err": self.std_err,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SigmaEstimate":
        return cls(Outcome(d["gamma"], d["gamma_prime"], d["j"]), d["value"], d["std_err"], d["status"])


@dataclass(frozen=True)
class EstimateReport:
    records: tuple
    sigma_estimates: tuple
    avg_sigma: tuple  # (value, std_err)
    ft_value: tuple  # (value, std_err)
    fidelity: float
    eta: float
    p_initial: tuple = ()
    p_final: tuple = ()
    p_final_theory: tuple = ()

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "records": [r.to_dict() for r in self.records],
            "sigma_estimates": [s.to_dict() for s in self.sigma_estimates],
            "avg_sigma": list(self.avg_sigma),
            "ft_value": list(self.ft_value),
            "fidelity": self.fidelity,
            "p_initial": list(self.p_initial),
            "p_final": list(self.p_final),
            "p_final_theory": list(self.p_final_theory),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateReport":
        return cls(
            records=tuple(ClickRecord.from_dict(r) for r in d["records"]),
            sigma_estimates=tuple(SigmaEstimate.from_dict(s) for s in d["sigma_estimates"]),
            avg_sigma=tuple(d["avg_sigma"]),
            ft_value=tuple(d["ft_value"]),
            fidelity=d["fidelity"],
            eta=d["eta"],
            p_initial=tuple(d["p_initial"]),
            p_final=tuple(d["p_final"]),
            p_final_theory=tuple(d["p_final_theory"]),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "EstimateReport":
        return cls.from_dict(json.loads(text))

    def csv_rows(self) -> list:
        rows = []
        for r, s in zip(self.records, self.sigma_estimates):
            o = r.outcome
            sigma = format(s.value, ".17g") if s.status == FINITE else s.status
            sigma_err = format(s.std_err, ".17g") if s.std_err is not None else ""
            rows.append(
                [
                    format(self.eta, ".17g"),
                    o.gamma,
                    o.gamma_prime,
                    o.j,
                    r.count,
                    format(r.estimated_prob, ".17g"),
                    format(r.std_err, ".17g"),
                    sigma,
                    sigma_err,
                ]
            )
        return rows


def bhattacharyya(p, q) -> float:
    """sum_i sqrt(p_i q_i)."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    return float(min(1.0, np.sum(np.sqrt(np.clip(p, 0, None) * np.clip(q, 0, None)))))


def _marginals(counts: np.ndarray) -> tuple:
    r = np.array([counts[_G == g].sum() for g in (0, 1)], dtype=float)
    m = np.array([counts[_GP == g].sum() for g in (0, 1)], dtype=float)
    return r, m


def _sigma_hat(counts: np.ndarray, flux: np.ndarray) -> tuple:
    """Per-outcome sigma from counts; returns (values, status list)."""
    r, m = _marginals(counts)
    values = np.full(len(ALL_OUTCOMES), np.nan)
    status = []
    for k, o in enumerate(ALL_OUTCOMES):
        if m[o.gamma_prime] == 0:
            status.append(UNDEFINED)
        elif r[o.gamma] == 0:
            status.append(NEG_INF)
        else:
            values[k] = math.log(r[o.gamma]) - math.log(m[o.gamma_prime]) + flux[o.j - 1]
            status.append(FINITE)
    return values, status


def avg_sigma_from_counts(counts, flux) -> float:
    counts = np.asarray(counts, dtype=float)
    s, status = _sigma_hat(counts, np.asarray(flux, dtype=float))
    live = counts > 0
    if any(status[k] != FINITE for k in np.flatnonzero(live)):
        raise ValueError("a trajectory with counts has an undefined entropy production")
    return float(np.sum(counts[live] * s[live]) / counts.sum())


def ft_from_counts(counts, flux) -> float:
    counts = np.asarray(counts, dtype=float)
    s, status = _sigma_hat(counts, np.asarray(flux, dtype=float))
    live = counts > 0
    if any(status[k] != FINITE for k in np.flatnonzero(live)):
        raise ValueError("a trajectory with counts has an undefined entropy production")
    return float(np.sum(counts[live] * np.exp(-s[live])) / counts.sum())


def _avg_sigma_grad(counts: np.ndarray, s: np.ndarray, value: float) -> np.ndarray:
    # marginal-count derivatives cancel: d<sigma>/dn_i = (sigma_i - <sigma>) / T
    total = counts.sum()
    return np.where(np.isfinite(s), s - value, 0.0) / total


def _ft_grad(counts: np.ndarray, flux: np.ndarray, value: float) -> np.ndarray:
    total = counts.sum()
    r, m = _marginals(counts)
    ephi = np.exp(-flux[_J - 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(r[_G] > 0, m[_GP] * ephi / r[_G], 0.0)
        a = [np.sum(np.where((_GP == g) & (r[_G] > 0), counts * ephi / r[_G], 0.0)) for g in (0, 1)]
        b = [np.sum(np.where(_G == g, counts * w, 0.0)) / r[g] if r[g] > 0 else 0.0 for g in (0, 1)]
    return (w - value + np.array(a)[_GP] - np.array(b)[_G]) / total


def _sigma_grad(k: int, counts: np.ndarray) -> np.ndarray:
    r, m = _marginals(counts)
    o = ALL_OUTCOMES[k]
    return (_G == o.gamma) / r[o.gamma] - (_GP == o.gamma_prime) / m[o.gamma_prime]


def estimate(records, dist: TpmDistribution) -> EstimateReport:
    """Estimators of probabilities, sigma, <sigma> and <exp(-sigma)> from clicks.

    ``dist`` is the exact distribution at the run's parameters: it supplies the
    channel setting for the entropy flux and the reference for the fidelity.
    Both marginals p_gamma and pfinal_gamma' are estimated from the clicks.
    """
    records = tuple(records)
    by_outcome = {r.outcome: r for r in records}
    counts = np.array([by_outcome[o].count if o in by_outcome else 0 for o in ALL_OUTCOMES], dtype=float)
    if counts.sum() <= 0:
        raise ValueError("no coincidences to estimate from")
    var = _poisson_var(counts)
    flux_table = entropy_flux(dist.channel)
    flux = flux_table.as_array()
    s, status = _sigma_hat(counts, flux)

    sig_est = []
    for k, o in enumerate(ALL_OUTCOMES):
        if status[k] == FINITE:
            g = _sigma_grad(k, counts)
            sig_est.append(SigmaEstimate(o, float(s[k]), float(math.sqrt(np.sum(g * g * var))), FINITE))
        else:
            sig_est.append(SigmaEstimate(o, None, None, status[k]))

    avg = avg_sigma_from_counts(counts, flux)
    avg_err = math.sqrt(np.sum(_avg_sigma_grad(counts, s, avg) ** 2 * var))
    ft = ft_from_counts(counts, flux)
    ft_err = math.sqrt(np.sum(_ft_grad(counts, flux, ft) ** 2 * var))

    est = counts / counts.sum()
    exact = np.array([dist[o] for o in ALL_OUTCOMES])
    r, m = _marginals(counts)
    return EstimateReport(
        records=tuple(records_from_counts(counts)) if len(records) != len(ALL_OUTCOMES) else records,
        sigma_estimates=tuple(sig_est),
        avg_sigma=(avg, avg_err),
        ft_value=(ft, ft_err),
        fidelity=bhattacharyya(est, exact),
        eta=dist.channel.eta,
        p_initial=tuple(float(x) for x in r / counts.sum()),
        p_final=tuple(float(x) for x in m / counts.sum()),
        p_final_theory=tuple(float(x) for x in dist.p_final),
    )


def run(cfg: RunConfig) -> EstimateReport:
    dist = joint_distribution(cfg.src, cfg.ch)
    return estimate(simulate(cfg, dist), dist)


def sweep(cfg_base: RunConfig, eta_values, max_workers: int | None = None) -> list:
    """One report per eta; point ``i`` uses stream ``(seed, i)``.

    ``max_workers > 1`` spreads the points over threads; results are identical
    to the serial run.
    """
    etas = [float(e) for e in eta_values]
    cfgs = [
        replace(cfg_base, ch=FtadParams(cfg_base.ch.p, eta), index=i)
        for i, eta in enumerate(etas)
    ]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(run, cfgs))
    return [run(c) for c in cfgs]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_COLUMNS)
    for rep in reports:
        w.writerows(rep.csv_rows())
    return buf.getvalue()
