"""Stepwise propagation of the S-photon through the FTAD interferometer.

The photon carries polarization (``|0>`` = H, ``|1>`` = V), a transverse mode
(TM: ``u``/``d``), the longitudinal mode picked at PBS1 (``s_i``/``l_i``) and
the one picked at PBS2 (``s_f``/``l_f``). A state is a map from path label to
the (sub-normalized) polarization vector carried on that label.

Optical elements, in order:

========  ===============================================================
psi1      BD1: H goes to ``u``, V to ``d``
psi2      HWP at 45 deg on ``d``
psi3      HWP at phi/2 on both TMs
psi4      PBS1: H transmitted into ``s_i``, V reflected into ``l_i``
psi5      arm plates: ``l_i`` -- u at -45 deg, d at -(45 deg + theta/2);
          ``s_i`` -- u at theta/2, d compensator
psi6      PBS2 (H from ``s_i`` and V from ``l_i`` exit in ``s_f``), a 45 deg
          HWP on ``u`` in both output arms, then BD2 (``s_f``: H shifted
          d -> u) and BD3 (``l_f``: V shifted u -> d)
========  ===============================================================

Half-wave plates act as the reflection ``[[cos 2a, sin 2a], [sin 2a, -cos 2a]]``.
Compensating 0-deg plates only equalize path lengths and are taken as identity.
With these conventions the stage-6 amplitudes are::

    l_i s_f:  sin(phi) b sin(theta) |1>
    l_i l_f: -sin(phi) (a |1> + b cos(theta) |0>)
    s_i s_f:  cos(phi) (a cos(theta) |1> + b |0>)
    s_i l_f:  cos(phi) a sin(theta) |0>

so each path applies ``X E_j`` (``-X E_1`` for ``l_i l_f``). Coherence between
different longitudinal modes is discarded when the arms are recombined.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import qmath
from .channel import FtadParams

STAGES = ("psi0", "psi1", "psi2", "psi3", "psi4", "psi5", "psi6")

S_I, L_I = "s_i", "l_i"
S_F, L_F = "s_f", "l_f"

# path (lm_initial, lm_final) -> Kraus label, and the sign of X E_j on that path
PATH_TO_KRAUS = {(L_I, L_F): 1, (L_I, S_F): 2, (S_I, S_F): 3, (S_I, L_F): 4}
KRAUS_TO_PATH = {j: path for path, j in PATH_TO_KRAUS.items()}
PATH_SIGN = {(L_I, L_F): -1, (L_I, S_F): 1, (S_I, S_F): 1, (S_I, L_F): 1}
ALL_PATHS = tuple(PATH_TO_KRAUS)


def hwp(angle: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``angle`` radians."""
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    # exact zeros at multiples of 45 deg so that e.g. psi2 is exactly |0>
    c, s = (0.0 if abs(c) < 1e-15 else c), (0.0 if abs(s) < 1e-15 else s)
    return np.array([[c, s], [s, -c]], dtype=complex)


@dataclass(frozen=True, order=True)
class PathLabel:
    tm: str | None = None
    lm_initial: str | None = None
    lm_final: str | None = None

    def __post_init__(self):
        if self.tm not in (None, "u", "d"):
            raise ValueError(f"bad transverse mode {self.tm!r}")
        if self.lm_initial not in (None, S_I, L_I):
            raise ValueError(f"bad initial longitudinal mode {self.lm_initial!r}")
        if self.lm_final not in (None, S_F, L_F):
            raise ValueError(f"bad final longitudinal mode {self.lm_final!r}")
        if self.lm_final is not None and self.lm_initial is None:
            raise ValueError("lm_final set before lm_initial")

    @property
    def path(self) -> tuple | None:
        if self.lm_final is None:
            return None
        return (self.lm_initial, self.lm_final)


@dataclass(frozen=True)
class BlockMask:
    """Set of open (lm_initial, lm_final) paths."""

    allowed: frozenset = frozenset(ALL_PATHS)

    def __post_init__(self):
        allowed = frozenset(tuple(p) for p in self.allowed)
        if not allowed:
            raise ValueError("at least one path must be open")
        bad = allowed - set(ALL_PATHS)
        if bad:
            raise ValueError(f"unknown paths {sorted(bad)}")
        object.__setattr__(self, "allowed", allowed)

    @classmethod
    def only(cls, *paths) -> "BlockMask":
        return cls(frozenset(paths))

    @classmethod
    def for_kraus(cls, j: int) -> "BlockMask":
        """Block three paths, leaving the one implementing E_j."""
        return cls(frozenset([KRAUS_TO_PATH[j]]))

    @classmethod
    def parse(cls, text: str) -> "BlockMask":
        """Parse e.g. ``"l_i:l_f,s_i:s_f"`` or ``"all"``."""
        if text.strip() == "all":
            return cls()
        paths = []
        for item in text.split(","):
            lmi, _, lmf = item.strip().partition(":")
            paths.append((lmi.strip(), lmf.strip()))
        return cls(frozenset(paths))

    def initial_open(self, lm_initial: str) -> bool:
        return any(p[0] == lm_initial for p in self.allowed)


FULL_MASK = BlockMask()


@dataclass(frozen=True)
class PathState:
    """Polarization amplitudes per path label at one stage."""

    terms: tuple  # of (PathLabel, np.ndarray(2,))
    stage: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")

    def norm2(self) -> float:
        return float(sum(np.vdot(v, v).real for _, v in self.terms))

    def amplitude(self, label: PathLabel) -> np.ndarray:
        for lab, v in self.terms:
            if lab == label:
                return v
        return np.zeros(2, dtype=complex)

    def for_path(self, path) -> list:
        return [(lab, v) for lab, v in self.terms if lab.path == tuple(path)]

    def to_records(self) -> list:
        return [
            {
                "pol": [[float(z.real), float(z.imag)] for z in v],
                "tm": lab.tm,
                "lm_i": lab.lm_initial,
                "lm_f": lab.lm_final,
            }
            for lab, v in self.terms
        ]


def _state(amps: dict, stage: str) -> PathState:
    terms = tuple(sorted(((lab, np.asarray(v, dtype=complex)) for lab, v in amps.items()), key=lambda t: t[0]))
    for _, v in terms:
        v.setflags(write=False)
    return PathState(terms, stage)


def _add(amps: dict, label: PathLabel, vec) -> None:
    if label in amps:
        amps[label] = amps[label] + vec
    else:
        amps[label] = np.asarray(vec, dtype=complex)


def _apply_plates(state: PathState, plate_for, stage: str) -> PathState:
    out = {}
    for lab, v in state.terms:
        m = plate_for(lab)
        _add(out, lab, v if m is None else m @ v)
    return _state(out, stage)


def _beam_displacer_1(state: PathState) -> PathState:
    (lab, v), = state.terms
    out = {}
    _add(out, PathLabel("u"), np.array([v[0], 0]))
    _add(out, PathLabel("d"), np.array([0, v[1]]))
    return _state(out, "psi1")


def _pbs1(state: PathState, mask: BlockMask) -> PathState:
    out = {}
    for lab, v in state.terms:
        if mask.initial_open(S_I):
            _add(out, PathLabel(lab.tm, S_I), np.array([v[0], 0]))
        if mask.initial_open(L_I):
            _add(out, PathLabel(lab.tm, L_I), np.array([0, v[1]]))
    return _state(out, "psi4")


def _arm_plate(params: FtadParams):
    th = params.theta
    plates = {
        (L_I, "u"): hwp(-math.pi / 4),
        (L_I, "d"): hwp(-(math.pi / 4 + th / 2)),
        (S_I, "u"): hwp(th / 2),
        (S_I, "d"): None,
    }
    return lambda lab: plates[(lab.lm_initial, lab.tm)]


def _pbs2_and_recombine(state: PathState, mask: BlockMask) -> PathState:
    h, v_ = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    split = {}
    for lab, vec in state.terms:
        # PBS2 transmits H and reflects V; s_i and l_i enter from opposite ports
        h_out, v_out = (S_F, L_F) if lab.lm_initial == S_I else (L_F, S_F)
        for lmf, comp in ((h_out, vec[0] * h), (v_out, vec[1] * v_)):
            if (lab.lm_initial, lmf) in mask.allowed:
                _add(split, PathLabel(lab.tm, lab.lm_initial, lmf), comp)
    out = {}
    x45 = hwp(math.pi / 4)
    for lab, vec in split.items():
        if lab.tm == "u":
            vec = x45 @ vec
        tm = lab.tm
        if lab.lm_final == S_F:
            # BD2: H in d is displaced onto u, V in d stays
            if tm == "d":
                _add(out, PathLabel("u", lab.lm_initial, S_F), vec[0] * h)
                _add(out, PathLabel("d", lab.lm_initial, S_F), vec[1] * v_)
            else:
                _add(out, lab, vec)
        else:
            # BD3: V in u is displaced onto d, H in u stays
            if tm == "u":
                _add(out, PathLabel("d", lab.lm_initial, L_F), vec[1] * v_)
                _add(out, PathLabel("u", lab.lm_initial, L_F), vec[0] * h)
            else:
                _add(out, lab, vec)
    out = {lab: vec for lab, vec in out.items() if np.any(vec != 0)}
    return _state(out, "psi6")


def stages(psi0: qmath.PureState, params: FtadParams, mask: BlockMask = FULL_MASK) -> list:
    """All seven snapshots psi0..psi6."""
    if psi0.dim != 2:
        raise qmath.DimensionError("the S-photon polarization is a qubit")
    s0 = _state({PathLabel(): psi0.amplitudes.copy()}, "psi0")
    s1 = _beam_displacer_1(s0)
    s2 = _apply_plates(s1, lambda lab: hwp(math.pi / 4) if lab.tm == "d" else None, "psi2")
    s3 = _apply_plates(s2, lambda lab: hwp(params.phi / 2), "psi3")
    s4 = _pbs1(s3, mask)
    s5 = _apply_plates(s4, _arm_plate(params), "psi5")
    s6 = _pbs2_and_recombine(s5, mask)
    return [s0, s1, s2, s3, s4, s5, s6]


def evolve(psi0: qmath.PureState, params: FtadParams, mask: BlockMask = FULL_MASK) -> PathState:
    """Final (psi6) path state for the given input polarization and open paths."""
    return stages(psi0, params, mask)[-1]


def effective_operator(params: FtadParams, path) -> np.ndarray:
    """2x2 map from input amplitudes (a, b) to the polarization leaving ``path``."""
    path = tuple(path)
    if path not in PATH_TO_KRAUS:
        raise ValueError(f"unknown path {path!r}")
    mask = BlockMask.only(path)
    cols, tms = [], set()
    for basis in (qmath.PureState.qubit(1, 0), qmath.PureState.qubit(0, 1)):
        terms = evolve(basis, params, mask).for_path(path)
        tms.update(lab.tm for lab, _ in terms)
        cols.append(sum((v for _, v in terms), np.zeros(2, dtype=complex)))
    if len(tms) > 1:
        raise RuntimeError(f"path {path} leaves in more than one transverse mode")
    return np.column_stack(cols)


def final_state(psi0: qmath.PureState, params: FtadParams, mask: BlockMask = FULL_MASK) -> np.ndarray:
    """Polarization density matrix after incoherently tracing all TM/LM labels.

    Sub-normalized when paths are blocked.
    """
    rho = np.zeros((2, 2), dtype=complex)
    for _, v in evolve(psi0, params, mask).terms:
        rho += np.outer(v, v.conj())
    return rho


def path_probability(psi0: qmath.PureState, params: FtadParams, path) -> float:
    """Probability that the photon exits through ``path``."""
    path = tuple(path)
    return evolve(psi0, params, BlockMask.only(path)).norm2()


def trace_dump(psi0: qmath.PureState, params: FtadParams, mask: BlockMask = FULL_MASK) -> dict:
    """``{stage: [{pol, tm, lm_i, lm_f}, ...]}`` for every stage."""
    return {s.stage: s.to_records() for s in stages(psi0, params, mask)}


def trace_json(psi0: qmath.PureState, params: FtadParams, mask: BlockMask = FULL_MASK, **kw) -> str:
    return json.dumps(trace_dump(psi0, params, mask), **kw)
