import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from entropy_tomography import bounds
from entropy_tomography.bounds import (
    DISPLAYS,
    EPSILON_FLAVORS,
    MissingSymbolError,
    OracleInfo,
    RateContext,
    approx_rhs,
    bernstein_level,
    bernstein_psi_level,
    bernstein_tail,
    epsilon_components,
    epsilon_threshold,
    gamma_factor,
    oracle_rhs,
)
from entropy_tomography.designs import design_constants, make_design

FULL_INFO = dict(approx_error_sq=0.01, epsilon=0.05, rank=2, a_log_S=3.0, tail_norm=0.1, log_S_norm=2.0,
                 log_S_hs=3.0, beta=1.0, lam=1.0, pop_error_l2=0.05, pop_error_trace=0.1, delta_r=0.2,
                 gamma_r=4.0)


def full_ctx(**kw):
    base = dict(m=4, n=1000, t=1.0, sigma_xi=0.3, c_xi=0.5, psi1_xi=0.4, sigma_X=0.5, sigma_XX=0.7, U=1.0,
                E_norm_sq=1.0, EX_norm=0.25)
    base.update(kw)
    return RateContext(**base)


def test_derived_rates():
    c = RateContext(m=4, n=1000, t=2.0)
    assert c.t_m == 2.0 + math.log(8)
    assert c.tau_n == 2.0 + math.log(math.log2(2000))
    assert c.t_nm == max(c.tau_n * math.log(1000), c.t_m)
    with pytest.raises(ValueError):
        RateContext(m=0, n=1)
    with pytest.raises(ValueError):
        RateContext(m=2, n=1, t=0)
    with pytest.raises(ValueError):
        RateContext(m=2, n=1, D=0)


def test_bernstein_examples():
    assert bernstein_tail(0.0, 10, 4, 1.0, 1.0) == 8.0
    assert bernstein_tail(1e-9, 10, 4, 1.0, 1.0) == pytest.approx(8.0)
    # fixed deviation t of the mean, i.e. s = n t on the sum scale
    assert bernstein_tail(200 * 0.2, 200, 4, 0.5, 1.0) < bernstein_tail(100 * 0.2, 100, 4, 0.5, 1.0)
    tm = 1 + math.log(8)
    assert bernstein_level(1.0, 100, 4, 1.0, 1.0) == pytest.approx(2 * max(math.sqrt(tm / 100), tm / 100))
    t, n, s, u = 3.0, 50, 0.4, 1.0
    assert bernstein_tail(t, n, 4, s, u) == pytest.approx(8 * math.exp(-t * t / (2 * s * s * n + 2 * u * t / 3)))


def test_bernstein_flavors():
    l2m = math.log(8)
    v = bernstein_level(1.0, 100, 4, 0.5, 1.0, flavor="sigma-tilde-bounded", sigma_tilde=0.25, C=2.0)
    assert v == pytest.approx(2 * max(0.5 * math.sqrt(l2m / 100), 0.25 * 0.1, l2m / 100, 0.01))
    with pytest.raises(MissingSymbolError):
        bernstein_level(1.0, 100, 4, 0.5, 1.0, flavor="sigma-tilde-psi1", sigma_tilde=0.2)
    with pytest.raises(ValueError):
        bernstein_level(1.0, 100, 4, 0.5, 1.0, flavor="nope", sigma_tilde=0.2)


def test_bernstein_psi_level():
    tm = 1 + math.log(8)
    # large alpha: log factor -> 1, the bounded shape
    v = bernstein_psi_level(1.0, 100, 4, 0.1, 50.0, alpha=1e9)
    assert v == pytest.approx(max(0.1 * math.sqrt(tm / 100), 50.0 * tm / 100), rel=1e-6)
    a = bernstein_psi_level(1.0, 10**6, 4, 0.5, 1.0, alpha=2.0)
    b = bernstein_psi_level(1.0, 10**6, 4, 1.0, 1.0, alpha=2.0)
    assert a == pytest.approx(0.5 * math.sqrt(tm / 1e6)) and b == pytest.approx(2 * a)
    v = bernstein_psi_level(2.0, 100, 2, 0.1, 3.0, alpha=1.0, C=1.5)
    t2 = 2 + math.log(4)
    assert v == pytest.approx(1.5 * max(0.1 * math.sqrt(t2 / 100), 3.0 * math.log(30.0) * t2 / 100))
    # ratio floored at e
    assert bernstein_psi_level(1.0, 1, 4, 1.0, 1.0, alpha=1.0) == pytest.approx(max(math.sqrt(tm), tm))
    with pytest.raises(ValueError):
        bernstein_psi_level(1.0, 1, 4, 1.0, 1.0, alpha=0.5)


def test_epsilon_examples():
    c = RateContext(m=4, n=100, t=1.0, sigma_xi=1.0, c_xi=0.0)
    tm = 1 + math.log(8)
    assert epsilon_threshold(c, "subgaussian") == pytest.approx(math.sqrt(4 * tm / 100))
    c = RateContext(m=4, n=100, t=1.0, sigma_xi=1.0, c_xi=1.0)
    assert epsilon_threshold(c, "pauli") == pytest.approx(max(0.5 * math.sqrt(tm / 100), 0.5 * tm / 100))
    assert epsilon_threshold(c, "completion") == pytest.approx(max(0.5 * math.sqrt(tm / 100), tm / 100))
    vals = [epsilon_threshold(full_ctx(n=n), "bounded") for n in (10, 100, 1000, 10**4)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(MissingSymbolError, match="sigma_X"):
        epsilon_threshold(RateContext(m=4, n=10, sigma_xi=1.0, c_xi=1.0), "bounded")
    with pytest.raises(ValueError):
        epsilon_threshold(c, "nope")


def test_epsilon_unbounded_variant():
    c = full_ctx()
    comps = epsilon_components(c, "bounded", unbounded_noise=True)
    ratio = max(c.psi1_xi * c.U / (c.sigma_xi * c.sigma_X), math.e)
    assert comps["linear_term"] == pytest.approx(max(c.psi1_xi * c.U * math.log(ratio), c.U**2) * c.t_m / c.n)


def test_gamma_branches():
    c = full_ctx(E_norm_sq=0.25)
    assert gamma_factor(c, 0.25) == 4.0  # eps >= E||X||^2: the m branch
    assert gamma_factor(c, 4 * 0.25) == 4.0
    assert gamma_factor(c, 0.01) == pytest.approx(4 * 0.5 / 0.1)
    assert gamma_factor(c, 0.0) == math.inf


def test_low_rank_display_arithmetic():
    c = RateContext(m=4, n=10**4, t=1.0, sigma_xi=1.0)
    for approx in (0.0, 0.003):
        rep = oracle_rhs(c, "sg-low-rank", OracleInfo(rank=1, approx_error_sq=approx))
        expect = max(c.t_m * 4 * math.log(4e4) ** 2 / 1e4, 4 * max(c.tau_n * math.log(1e4), c.t_m) / 1e4)
        assert rep.value == pytest.approx(expect + 2 * approx, rel=1e-12)
    one = oracle_rhs(c, "sg-low-rank", OracleInfo(rank=1)).components["variance"]
    two = oracle_rhs(c, "sg-low-rank", OracleInfo(rank=2)).components["variance"]
    assert two == pytest.approx(2 * one)


def test_sharp_oracle_branch_elimination():
    c = full_ctx()
    info = OracleInfo(**{**FULL_INFO, "a_log_S": 0.0, "tail_norm": 0.0, "approx_error_sq": 0.0})
    rep = oracle_rhs(c, "bd-oracle", info)
    n = c.n
    block = max(c.sigma_xi**2 * (c.m * 2 + c.tau_n) / n, c.c_xi * c.U * max(c.tau_n, c.t_m) / n,
                c.U**2 * c.t_m / n)
    assert rep.value == pytest.approx(block)


@pytest.mark.parametrize("tag", sorted(DISPLAYS))
def test_recombination_and_csv(tag):
    rep = oracle_rhs(full_ctx(), tag, OracleInfo(**FULL_INFO))
    assert rep.value == pytest.approx(rep.recombine())
    assert rep.value == pytest.approx(rep.offset + rep.scale * max(rep.components.values()))
    assert len(rep.csv_header()) == len(rep.csv_row())
    assert rep.csv_row()[0] == tag


@pytest.mark.parametrize("tag", sorted(DISPLAYS))
def test_monotone_in_arguments(tag):
    info = OracleInfo(**FULL_INFO)

    def val(**kw):
        i = OracleInfo(**{**FULL_INFO, **kw.pop("info", {})})
        return oracle_rhs(full_ctx(**kw), tag, i).value

    base = oracle_rhs(full_ctx(), tag, info).value
    assert val(t=2.0) >= base - 1e-15
    assert val(sigma_xi=0.6) >= base - 1e-15
    assert val(info={"rank": 4}) >= base - 1e-15
    ns = [val(n=n) for n in (100, 1000, 10**4, 10**5)]
    assert all(a >= b - 1e-15 for a, b in zip(ns, ns[1:]))


def test_missing_symbols_and_unknown_tags():
    with pytest.raises(MissingSymbolError, match="rank"):
        oracle_rhs(full_ctx(), "sg-low-rank", OracleInfo())
    with pytest.raises(MissingSymbolError, match="c_xi"):
        oracle_rhs(RateContext(m=4, n=10, sigma_xi=1.0), "pauli-rank-oracle", OracleInfo(rank=1))
    with pytest.raises(ValueError):
        oracle_rhs(full_ctx(), "nope", OracleInfo())
    with pytest.raises(ValueError):
        oracle_rhs(full_ctx(), "sg-low-rank", OracleInfo(rank=1), unbounded_noise=True)


def test_unbounded_noise_variant_differs():
    info = OracleInfo(**FULL_INFO)
    a = oracle_rhs(full_ctx(), "bd-oracle", info)
    b = oracle_rhs(full_ctx(), "bd-oracle", info, unbounded_noise=True)
    assert "noise_log" in b.components and "noise_log" not in a.components


def test_approx_examples():
    c = RateContext(m=4, n=1)
    assert approx_rhs(c, "penalty-norm", {"epsilon": 0.1, "log_S_norm": 3.0}) == pytest.approx(0.3)
    assert approx_rhs(c, "alignment", {"epsilon": 0.0, "a_log_S": 5.0, "distance": 0.2}) == pytest.approx(0.04)
    v = approx_rhs(c, "low-rank", {"epsilon": 0.1, "Lambda": 4.0, "rank": 1, "E_norm_sq": 1.0})
    assert v == pytest.approx(0.01 * (16 * math.log(41) ** 2 + 1))
    v = approx_rhs(c, "gibbs", {"epsilon": 0.1, "diag_moment": 0.5, "delta_r": 0.1, "a_H": 2.0})
    assert v == pytest.approx(24 * 0.5 * 0.01 + 4 * 0.01)
    with pytest.raises(MissingSymbolError):
        approx_rhs(c, "gibbs", {"epsilon": 0.1})
    with pytest.raises(ValueError):
        approx_rhs(c, "nope", {"epsilon": 0.1})


def test_with_design_copies_constants():
    consts = design_constants(make_design("pauli", m=4))
    c = RateContext(m=4, n=100).with_design(consts)
    assert c.U == pytest.approx(0.5) and c.sigma_X == consts.sigma_X and c.EX_norm == consts.EX_norm


@given(st.floats(0.01, 10), st.integers(1, 10**5), st.sampled_from([2, 4, 8, 16]))
def test_bernstein_tail_monotone_in_t(t, n, m):
    a = bernstein_tail(t, n, m, 0.3, 1.0)
    b = bernstein_tail(1.5 * t, n, m, 0.3, 1.0)
    assert b <= a and 0 < a <= 2 * m


@given(st.sampled_from(EPSILON_FLAVORS), st.integers(1, 10**6))
def test_epsilon_threshold_is_max_of_components(flavor, n):
    c = full_ctx(n=n)
    assert epsilon_threshold(c, flavor) == max(epsilon_components(c, flavor).values())


def test_display_registry_describes_each_tag():
    for tag, (fn, unbounded_ok, desc) in DISPLAYS.items():
        assert callable(fn) and isinstance(unbounded_ok, bool) and desc
    assert bounds.APPROX_DISPLAYS == ("penalty-norm", "alignment", "low-rank", "gibbs")
    assert np.isfinite(oracle_rhs(full_ctx(), "bd-rough", OracleInfo(**FULL_INFO), unbounded_noise=True).value)
