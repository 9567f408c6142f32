import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photon_tpm import qmath
from photon_tpm.channel import FtadParams, apply, build_ftad
from photon_tpm.interferometer import (
    ALL_PATHS,
    PATH_SIGN,
    PATH_TO_KRAUS,
    BlockMask,
    PathLabel,
    effective_operator,
    evolve,
    final_state,
    path_probability,
    stages,
    trace_dump,
)
from photon_tpm.qmath import X, PureState

LI, SI, LF, SF = "l_i", "s_i", "l_f", "s_f"


def psi6_by_hand(a, b, phi, theta):
    """Stage-6 amplitudes per path written out from the closed-form expressions."""
    sp, cp, st_, ct = math.sin(phi), math.cos(phi), math.sin(theta), math.cos(theta)
    return {
        (LI, SF): ("d", np.array([0, sp * b * st_])),
        (LI, LF): ("d", -sp * np.array([b * ct, a])),
        (SI, SF): ("u", cp * np.array([b, a * ct])),
        (SI, LF): ("u", np.array([cp * a * st_, 0])),
    }


def _random_params(r):
    return FtadParams(r.uniform(), r.uniform())


@pytest.mark.parametrize("seed", range(20))
def test_psi6_matches_closed_form(seed):
    r = np.random.default_rng(seed)
    par = _random_params(r)
    psi = qmath.random_pure_state(r)
    a, b = psi.amplitudes
    out = evolve(psi, par)
    for path, (tm, vec) in psi6_by_hand(a, b, par.phi, par.theta).items():
        got = out.amplitude(PathLabel(tm, *path))
        assert np.max(np.abs(got - vec)) <= 1e-12
        # nothing leaks into the other transverse mode
        other = "u" if tm == "d" else "d"
        assert np.max(np.abs(out.amplitude(PathLabel(other, *path)))) <= 1e-12


def test_intermediate_stages_match_closed_form():
    par = FtadParams(0.19, 0.7)
    a, b = 0.6, 0.8j
    phi, th = par.phi, par.theta
    s = {st.stage: st for st in stages(PureState.qubit(a, b), par)}
    assert np.allclose(s["psi1"].amplitude(PathLabel("u")), [a, 0], atol=0)
    assert np.allclose(s["psi1"].amplitude(PathLabel("d")), [0, b], atol=0)
    pol3 = np.array([math.cos(phi), math.sin(phi)])
    for tm, c in (("u", a), ("d", b)):
        assert np.max(np.abs(s["psi3"].amplitude(PathLabel(tm)) - c * pol3)) <= 1e-15
        assert np.max(np.abs(s["psi4"].amplitude(PathLabel(tm, SI)) - c * pol3[0] * np.array([1, 0]))) <= 1e-15
        assert np.max(np.abs(s["psi4"].amplitude(PathLabel(tm, LI)) - c * pol3[1] * np.array([0, 1]))) <= 1e-15
    sp, cp = math.sin(phi), math.cos(phi)
    expect5 = {
        ("u", LI): sp * np.array([-a, 0]),
        ("d", LI): sp * b * np.array([-math.cos(th), math.sin(th)]),
        ("u", SI): cp * a * np.array([math.cos(th), math.sin(th)]),
        ("d", SI): cp * b * np.array([1, 0]),
    }
    for (tm, lmi), vec in expect5.items():
        assert np.max(np.abs(s["psi5"].amplitude(PathLabel(tm, lmi)) - vec)) <= 1e-15


@given(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False), st.floats(0, 1), st.floats(0, 1))
def test_psi2_polarization_is_exactly_h(a, p, eta):
    norm = math.sqrt(abs(a) ** 2 + 1)
    psi = PureState.qubit(a / norm, 1 / norm)
    s2 = stages(psi, FtadParams(p, eta))[2]
    for _, v in s2.terms:
        assert v[1] == 0


def test_input_zero_full_mask():
    out = evolve(PureState.qubit(1, 0), FtadParams(0.19, 0.7))
    paths = {lab.path for lab, v in out.terms if np.any(np.abs(v) > 0)}
    assert paths == {(LI, LF), (SI, SF), (SI, LF)}
    assert np.allclose(out.amplitude(PathLabel("d", LI, LF)), [0, -math.sqrt(0.19)], atol=1e-15)


def test_no_jump_limit():
    psi = PureState.qubit(0.6, 0.8)
    out = evolve(psi, FtadParams(0.3, 1.0))
    assert out.for_path((SI, LF)) == [] and out.for_path((LI, SF)) == []


def test_p_one_long_long_path():
    par = FtadParams(1.0, 0.7)
    a, b = 0.6, 0.8
    out = evolve(PureState.qubit(a, b), par, BlockMask.only((LI, LF)))
    (lab, v), = out.terms
    assert lab.path == (LI, LF)
    assert np.max(np.abs(v + np.array([b * math.cos(par.theta), a]))) <= 1e-15
    assert out.norm2() == pytest.approx(a**2 + b**2 * 0.7, abs=1e-15)


@pytest.mark.parametrize("p", np.linspace(0, 1, 10))
@pytest.mark.parametrize("eta", np.linspace(0, 1, 10))
def test_effective_operator_is_kraus(p, eta):
    par = FtadParams(p, eta)
    ch = build_ftad(par)
    total = np.zeros((2, 2), dtype=complex)
    for path, j in PATH_TO_KRAUS.items():
        m = effective_operator(par, path)
        assert np.max(np.abs(PATH_SIGN[path] * X @ m - ch[j])) <= 1e-12
        assert qmath.equal_up_to_phase(X @ m, ch[j], tol=1e-12)
        total += m.conj().T @ m
    assert np.max(np.abs(total - np.eye(2))) <= 1e-12


def test_effective_operator_reference_point():
    par = FtadParams(0.19, 0.7)
    m = effective_operator(par, (LI, LF))
    expected = -math.sin(par.phi) * np.array([[0, math.cos(par.theta)], [1, 0]])
    assert np.max(np.abs(m - expected)) <= 1e-15
    assert np.max(np.abs(X @ m + build_ftad(par)[1])) <= 1e-12
    assert not np.any(effective_operator(FtadParams(0.19, 1.0), (SI, LF)))


def test_final_state_limits():
    psi = PureState.qubit(0.6, 0.8j)
    rho0 = psi.density_matrix()
    assert np.max(np.abs(final_state(psi, FtadParams(0.4, 1.0)) - X @ rho0 @ X)) <= 1e-12
    assert np.max(np.abs(final_state(PureState.qubit(1, 0), FtadParams(0.19, 0.0)) - np.diag([0.81, 0.19]))) <= 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_final_state_matches_channel(seed):
    r = np.random.default_rng(seed)
    par = FtadParams(0.19, 0.7) if seed == 0 else _random_params(r)
    psi = qmath.random_pure_state(r)
    lhs = final_state(psi, par)
    rhs = X @ apply(build_ftad(par), psi.density_matrix()) @ X
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_path_probabilities():
    par = FtadParams(0.19, 0.7)
    assert path_probability(PureState.qubit(0, 1), par, (LI, SF)) == pytest.approx(0.19 * 0.3, abs=1e-15)
    assert path_probability(PureState.qubit(1, 0), par, (LI, SF)) == 0.0
    par1 = FtadParams(0.19, 1.0)
    psi = PureState.qubit(0.6, 0.8)
    assert path_probability(psi, par1, (LI, SF)) == 0.0
    assert path_probability(psi, par1, (SI, LF)) == 0.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100)
def test_norm_conservation(seed):
    r = np.random.default_rng(seed)
    par, psi = _random_params(r), qmath.random_pure_state(r)
    assert abs(sum(path_probability(psi, par, path) for path in ALL_PATHS) - 1) <= 1e-12
    assert abs(evolve(psi, par).norm2() - 1) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sets(st.sampled_from(ALL_PATHS), min_size=1))
@settings(max_examples=100)
def test_blocking_is_filtering(seed, allowed):
    r = np.random.default_rng(seed)
    par, psi = _random_params(r), qmath.random_pure_state(r)
    full = evolve(psi, par)
    masked = evolve(psi, par, BlockMask(frozenset(allowed)))
    expected = [(lab, v) for lab, v in full.terms if lab.path in allowed]
    assert [lab for lab, _ in masked.terms] == [lab for lab, _ in expected]
    for (_, v), (_, w) in zip(masked.terms, expected):
        assert np.array_equal(v, w)
    # surviving norm is the probability of the open configuration
    assert masked.norm2() == pytest.approx(sum(path_probability(psi, par, p) for p in allowed), abs=1e-12)


def test_mask_validation_and_parse():
    with pytest.raises(ValueError):
        BlockMask(frozenset())
    with pytest.raises(ValueError):
        BlockMask(frozenset([("s_i", "x")]))
    assert BlockMask.parse("l_i:l_f, s_i:s_f").allowed == {(LI, LF), (SI, SF)}
    assert BlockMask.parse("all") == BlockMask()
    assert BlockMask.for_kraus(2).allowed == {(LI, SF)}


def test_label_invariants():
    with pytest.raises(ValueError):
        PathLabel("u", None, "s_f")
    with pytest.raises(ValueError):
        PathLabel("x")


def test_trace_dump_shape():
    dump = trace_dump(PureState.qubit(1, 0), FtadParams(0.19, 0.7), BlockMask.only((LI, LF)))
    assert list(dump) == ["psi0", "psi1", "psi2", "psi3", "psi4", "psi5", "psi6"]
    assert all(rec["lm_f"] is None for st in list(dump.values())[:6] for rec in st)
    assert {(r["lm_i"], r["lm_f"]) for r in dump["psi6"]} == {(LI, LF)}
    rec = dump["psi6"][0]
    assert set(rec) == {"pol", "tm", "lm_i", "lm_f"}
    assert rec["pol"][1] == [pytest.approx(-math.sqrt(0.19), abs=1e-15), 0.0]
