import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from zeno_tomo.interferometer import (
    ApparatusConfig,
    ChannelProbabilities,
    ConsistencyError,
    RegimeError,
    TransferMatrix,
    beam_splitter,
    effective_transmission,
    evolve,
    in_zeno_regime,
    loop_matrix,
    sample_matrix,
    standard_probabilities,
    total_transfer,
    zeno_probabilities,
    zeno_probabilities_asymptotic,
    zeno_threshold,
    zeno_threshold_loops,
)


EPS = np.finfo(float).eps


def entries(m):
    return np.array(m.as_tuple())


def sequential_power(m, n):
    out = TransferMatrix.identity()
    for _ in range(n):
        out = out @ m
    return out


def eigen_power(cfg):
    """V**L through the complex eigendecomposition (test oracle only)."""
    v = entries(loop_matrix(cfg)).astype(complex)
    w, p = np.linalg.eig(v)
    return (p @ np.diag(w ** cfg.loops) @ np.linalg.inv(p)).real


def black_power(loops):
    """Closed form for tau = 0: B cos^L(2 theta) [[1, -tan 2 theta], [0, 0]] B^-1."""
    b = entries(beam_splitter(loops))
    two = 2 * math.pi / (4 * loops)
    core = math.cos(two) ** loops * np.array([[1.0, -math.tan(two)], [0.0, 0.0]])
    return b @ core @ b.T


# --------------------------------------------------------------------------
# config and matrices


@pytest.mark.parametrize("loops,tau", [(0, 0.5), (-3, 0.5), (2.5, 0.5), (10, -0.1), (10, 1.01)])
def test_config_rejects_invalid(loops, tau):
    with pytest.raises(ValueError):
        ApparatusConfig(loops, tau)


def test_beam_splitter_single_loop():
    b = beam_splitter(1)
    assert b.m11 == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
    assert b.m21 == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
    assert b.m12 == -b.m21


def test_beam_splitter_two_loops_half_angle_values():
    b = beam_splitter(2)
    # cos, sin(pi/8) from half-angle radicals
    assert b.m11 == pytest.approx(math.sqrt(2 + math.sqrt(2)) / 2, abs=1e-15)
    assert b.m21 == pytest.approx(math.sqrt(2 - math.sqrt(2)) / 2, abs=1e-15)
    assert b.m11 == pytest.approx(0.92388, abs=1e-5)


def test_beam_splitter_small_angle_limit():
    b = beam_splitter(10**6)
    assert b.m21 == pytest.approx(math.pi / 4e6, rel=1e-12)
    assert 1 - b.m11 < 1e-12


def test_beam_splitter_rejects_zero_loops():
    with pytest.raises(ValueError):
        beam_splitter(0)


@given(st.integers(1, 10**6))
def test_beam_splitter_is_a_rotation(loops):
    b = beam_splitter(loops)
    prod = b @ b.T
    assert prod.m11 == pytest.approx(1, abs=1e-15) and prod.m22 == pytest.approx(1, abs=1e-15)
    assert abs(prod.m12) < 1e-15
    assert b.det == pytest.approx(1, abs=1e-15)


def test_sample_matrix_not_unitary_for_gray():
    a = sample_matrix(0.5)
    aat = a @ a.T
    assert aat.m22 == 0.25


def test_loop_matrix_black_single_loop():
    v = loop_matrix(ApparatusConfig(1, 0.0))
    assert np.allclose(entries(v), [[0.5, -0.5], [0.5, -0.5]], atol=1e-15)


@pytest.mark.parametrize("loops", [1, 7, 2000])
def test_loop_matrix_white_is_double_rotation(loops):
    b = beam_splitter(loops)
    assert np.allclose(entries(loop_matrix(ApparatusConfig(loops, 1.0))), entries(b @ b), atol=1e-15)


@given(st.integers(1, 10**5), st.floats(0, 1))
def test_loop_matrix_equals_explicit_product(loops, tau):
    b = beam_splitter(loops)
    explicit = b @ sample_matrix(tau) @ b
    assert np.allclose(entries(loop_matrix(ApparatusConfig(loops, tau))), entries(explicit), atol=1e-15)


def test_loop_matrix_desk_case():
    cfg = ApparatusConfig(2000, 0.5)
    b = beam_splitter(2000)
    assert np.abs(entries(loop_matrix(cfg)) - entries(b @ sample_matrix(0.5) @ b)).max() <= 1e-15


def test_loop_matrix_determinant_is_tau():
    for tau in (0.0, 0.3, 0.97, 1.0):
        assert loop_matrix(ApparatusConfig(50, tau)).det == pytest.approx(tau, abs=1e-15)


# --------------------------------------------------------------------------
# exact evolution


@pytest.mark.parametrize("loops", [1, 2, 3, 17, 1000, 12345])
def test_white_sample_exits_orthogonal(loops):
    u_z, u_o = evolve(ApparatusConfig(loops, 1.0))
    assert abs(u_z) < 1e-12
    assert u_o == pytest.approx(1.0, abs=1e-12)


def test_black_sample_freezes_in_zeno_channel():
    prev = 0.0
    for loops in (10, 100, 1000, 10000, 100000):
        u_z, u_o = evolve(ApparatusConfig(loops, 0.0))
        assert u_z > prev
        prev = u_z
        assert abs(u_o) < 1.0 / loops
    assert prev == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("loops", [1, 2, 5, 100, 10**4])
def test_black_sample_matches_closed_form(loops):
    assert np.allclose(entries(total_transfer(ApparatusConfig(loops, 0.0))), black_power(loops), atol=1e-12)


def test_gray_evolution_matches_sequential_product():
    cfg = ApparatusConfig(50, 0.9)
    seq = sequential_power(loop_matrix(cfg), 50)
    assert np.abs(np.array(evolve(cfg)) - np.array(seq.apply(1.0, 0.0))).max() <= 1e-12


@given(st.integers(1, 2000), st.floats(0, 1))
def test_power_matches_sequential_tight(loops, tau):
    cfg = ApparatusConfig(loops, tau)
    fast = entries(total_transfer(cfg))
    slow = entries(sequential_power(loop_matrix(cfg), loops))
    scale = max(np.abs(slow).max(), 1e-300)
    assert np.abs(fast - slow).max() / scale <= 1e-12


@given(st.integers(1, 10**4), st.floats(0, 1))
def test_power_matches_sequential(loops, tau):
    cfg = ApparatusConfig(loops, tau)
    fast = entries(total_transfer(cfg))
    slow = entries(sequential_power(loop_matrix(cfg), loops))
    scale = max(np.abs(slow).max(), 1e-300)
    # a rounding error of eps in V becomes about L*eps in V^L, for either method
    assert np.abs(fast - slow).max() / scale <= 1e-12 + 16 * loops * EPS


def mp_power(loops, tau):
    with mpmath.workdps(40):
        th = mpmath.pi / (4 * loops)
        b = mpmath.matrix([[mpmath.cos(th), -mpmath.sin(th)], [mpmath.sin(th), mpmath.cos(th)]])
        p = (b * mpmath.diag([1, mpmath.mpf(tau)]) * b) ** loops
        return np.array([[float(p[i, j]) for j in range(2)] for i in range(2)])


@pytest.mark.parametrize(
    "loops,tau", [(9997, 0.5), (10**4, 0.9), (8191, 0.99), (2000, 0.97), (165, 0.8), (10**5, 0.5)]
)
def test_power_matches_high_precision(loops, tau):
    err = np.abs(entries(total_transfer(ApparatusConfig(loops, tau))) - mp_power(loops, tau)).max()
    assert err <= 1e-14 + 2 * loops * EPS


@given(st.integers(2, 5000), st.floats(0.01, 0.999))
def test_power_matches_eigendecomposition(loops, tau):
    cfg = ApparatusConfig(loops, tau)
    thr = zeno_threshold(loops)
    if abs(tau - thr) < 1e-3:
        return  # eigenbasis degenerates at the threshold
    assert np.allclose(entries(total_transfer(cfg)), eigen_power(cfg), atol=1e-9)


def test_transfer_matrix_power_small_cases():
    m = TransferMatrix(1.0, 1.0, 0.0, 1.0)
    assert m.power(0) == TransferMatrix.identity()
    assert (m ** 5).m12 == 5.0
    with pytest.raises(ValueError):
        m.power(-1)


def test_white_unitarity_over_full_loop_range():
    rng = random.Random(7)
    loops = list(range(1, 2001)) + rng.sample(range(2001, 100_000), 400) + [100_000]
    worst = 0.0
    for L in loops:
        pr = zeno_probabilities(ApparatusConfig(L, 1.0))
        worst = max(worst, abs(pr.p_z + pr.p_o - 1.0))
    assert worst <= 1e-12


@given(st.integers(1, 10**5), st.floats(0, 1))
def test_probability_loss_never_negative(loops, tau):
    u_z, u_o = evolve(ApparatusConfig(loops, tau))
    assert u_z * u_z + u_o * u_o <= 1 + 1e-12


@given(st.integers(1, 10**5), st.floats(0, 1))
def test_zeno_probabilities_valid_triple(loops, tau):
    pr = zeno_probabilities(ApparatusConfig(loops, tau))
    assert abs(sum(pr.as_tuple()) - 1) <= 1e-12
    assert all(0 <= p <= 1 for p in pr.as_tuple())


def test_zeno_probabilities_white():
    pr = zeno_probabilities(ApparatusConfig(300, 1.0))
    assert pr.p_o == pytest.approx(1, abs=1e-12)
    assert pr.p_z == pytest.approx(0, abs=1e-12)
    assert pr.p_a == pytest.approx(0, abs=1e-12)


def test_zeno_probabilities_effective_coefficient_098():
    pr = zeno_probabilities(ApparatusConfig(12000, 0.98))
    assert pr.p_a == pytest.approx(1 - 0.99 ** 2, abs=1e-3)


def test_zeno_absorption_follows_leading_order_law():
    pr = zeno_probabilities(ApparatusConfig(10_000, 0.5))
    assert pr.p_a * 4 * 10_000 / math.pi ** 2 == pytest.approx(3.0, rel=0.01)


def test_consistency_error_is_an_arithmetic_error():
    assert issubclass(ConsistencyError, ArithmeticError)


@pytest.mark.parametrize("probs", [(0.5, 0.6, -0.1), (0.5, 0.3, 0.3), (1.2, 0, 0)])
def test_channel_probabilities_validate(probs):
    with pytest.raises(ValueError):
        ChannelProbabilities(*probs)


# --------------------------------------------------------------------------
# asymptotics and thresholds


def test_asymptotic_black():
    pr = zeno_probabilities_asymptotic(ApparatusConfig(5000, 0.0))
    assert pr.p_a == pytest.approx(math.pi ** 2 / 20000, rel=1e-15)
    assert pr.p_o == 0.0


def test_asymptotic_desk_value_and_exact_agreement():
    cfg = ApparatusConfig(2000, 0.8)
    pr = zeno_probabilities_asymptotic(cfg)
    assert pr.p_a == pytest.approx(0.011103, abs=5e-7)
    assert pr.p_a == pytest.approx(9 * math.pi ** 2 / 8000, rel=1e-14)
    assert zeno_probabilities(cfg).p_a == pytest.approx(pr.p_a, rel=0.01)


def test_asymptotic_regime_check_uses_threshold():
    assert zeno_threshold(165) < 0.99
    with pytest.raises(RegimeError, match="threshold"):
        zeno_probabilities_asymptotic(ApparatusConfig(165, 0.99))
    zeno_probabilities_asymptotic(ApparatusConfig(165, 0.98))


def test_asymptotic_at_threshold_is_rejected():
    thr = zeno_threshold(40)
    with pytest.raises(RegimeError):
        zeno_probabilities_asymptotic(ApparatusConfig(40, thr))


def test_asymptotic_white_rejected():
    with pytest.raises(RegimeError):
        zeno_probabilities_asymptotic(ApparatusConfig(10**5, 1.0))


def test_asymptotic_probabilities_clamped():
    # tiny L with tau just under threshold: the leading term exceeds one
    pr = zeno_probabilities_asymptotic(ApparatusConfig(3, 0.2))
    assert pr.p_a == 1.0 and pr.p_z == 0.0


def test_asymptotic_error_scales_as_inverse_square():
    cs = []
    for L in (10**3, 10**4, 10**5):
        cfg = ApparatusConfig(L, 0.5)
        cs.append(abs(zeno_probabilities(cfg).p_a - zeno_probabilities_asymptotic(cfg).p_a) * L * L)
    assert max(cs) / min(cs) < 2


def test_threshold_single_loop():
    assert zeno_threshold(1) == 0.0


@given(st.integers(1, 10**6))
def test_threshold_lower_bound(loops):
    assert zeno_threshold(loops) > 1 - math.pi / loops


def test_threshold_loops_for_tau_09():
    assert zeno_threshold_loops(0.9) == pytest.approx(math.pi / (2 * math.asin(1 / 19)), rel=1e-15)
    assert zeno_threshold_loops(0.9) == pytest.approx(29.83, abs=0.01)
    assert in_zeno_regime(ApparatusConfig(30, 0.9))
    assert not in_zeno_regime(ApparatusConfig(29, 0.9))


@pytest.mark.parametrize("loops,real", [(30, True), (29, False)])
def test_eigenvalues_real_iff_in_zeno_regime(loops, real):
    v = loop_matrix(ApparatusConfig(loops, 0.9))
    assert (v.trace ** 2 - 4 * v.det >= 0) is real


@given(st.integers(2, 10**5))
def test_threshold_and_loop_threshold_are_inverse(loops):
    assert zeno_threshold_loops(zeno_threshold(loops)) == pytest.approx(loops, rel=1e-9)


def test_threshold_loops_white_is_infinite():
    assert zeno_threshold_loops(1.0) == math.inf


@pytest.mark.parametrize("tau", [0.5, 0.9, 0.97])
def test_zeno_limit_monotone_beyond_threshold(tau):
    start = math.floor(zeno_threshold_loops(tau)) + 1
    pz = [zeno_probabilities(ApparatusConfig(L, tau)).p_z for L in range(start, 3000)]
    assert all(b >= a for a, b in zip(pz, pz[1:]))
    assert zeno_probabilities(ApparatusConfig(10**6, tau)).p_z > 0.99


def test_absorption_increases_with_tau_in_zeno_regime():
    taus = [0.5, 0.8, 0.9, 0.95, 0.98, 0.99]
    pa = [zeno_probabilities(ApparatusConfig(12000, t)).p_a for t in taus]
    assert all(b > a for a, b in zip(pa, pa[1:]))
    std = [standard_probabilities(t)[1] for t in taus]
    assert all(b < a for a, b in zip(std, std[1:]))


# --------------------------------------------------------------------------
# standard setup and effective transmission


@pytest.mark.parametrize(
    "tau,expected",
    [(1.0, (1.0, 0.0)), (0.8, (0.64, 0.36)), (0.96, (0.9216, 0.0784)), (0.0, (0.0, 1.0))],
)
def test_standard_probabilities(tau, expected):
    assert standard_probabilities(tau) == pytest.approx(expected, abs=1e-15)


def test_standard_probabilities_rejects_out_of_range():
    with pytest.raises(ValueError):
        standard_probabilities(1.5)


def test_effective_transmission_interchange():
    t1 = effective_transmission(ApparatusConfig(12000, 0.98))
    t2 = effective_transmission(ApparatusConfig(12000, 0.99))
    assert t1 == pytest.approx(0.99, abs=0.005)
    assert t2 == pytest.approx(0.98, abs=0.005)
    assert t1 > t2


def test_effective_transmission_white():
    assert effective_transmission(ApparatusConfig(777, 1.0)) == pytest.approx(1.0, abs=1e-12)
