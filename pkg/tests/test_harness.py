import math
from dataclasses import replace

import numpy as np
import pytest

from entropy_tomography.bounds import bernstein_tail, epsilon_threshold
from entropy_tomography.designs import make_design
from entropy_tomography.harness import (
    ExperimentSpec,
    calibrate_D,
    derive_seed,
    emit_csv,
    emit_plotdata,
    error_metrics,
    load_config,
    make_state,
    ols_slope,
    rate_context,
    read_csv,
    resolve_epsilon,
    row_values,
    run_bernstein_suite,
    run_population_props,
    run_recovery,
    run_scaling_sweep,
)
from entropy_tomography.states import random_density


def small_spec(**kw):
    base = dict(design="pauli", k=2, rank=1, sigma=0.1, ns=(200,), reps=3, seed=7)
    base.update(kw)
    return ExperimentSpec(**base)


def strip_timing(text):
    lines = text.splitlines()
    return [",".join(line.split(",")[:-1]) for line in lines]


def test_spec_validation():
    with pytest.raises(ValueError, match="design"):
        ExperimentSpec(design="nope", m=4)
    with pytest.raises(ValueError, match="exactly one"):
        ExperimentSpec(design="pauli", k=2, epsilon=0.1, epsilon_D=1.0)
    with pytest.raises(ValueError, match="rank"):
        ExperimentSpec(design="pauli", k=2, rank=5)
    with pytest.raises(ValueError, match="metrics"):
        ExperimentSpec(design="pauli", k=2, metrics=("bogus",))
    with pytest.raises(ValueError):
        ExperimentSpec(design="pauli", k=2, ns=(0,))
    with pytest.raises(ValueError):
        ExperimentSpec(design="pauli", k=2, noise="uniform", sigma=0.0)
    assert small_spec().digest() == small_spec().digest() != small_spec(seed=8).digest()


def test_epsilon_resolution():
    s = small_spec(epsilon_D=0.5)
    expect = 0.5 * epsilon_threshold(rate_context(s, 200), "pauli")
    assert resolve_epsilon(s, 200) == pytest.approx(expect)
    assert resolve_epsilon(small_spec(epsilon=0.02, epsilon_D=None), 200) == 0.02
    ctx = rate_context(small_spec(noise="uniform", sigma=0.3), 100)
    assert ctx.c_xi == 0.3 and ctx.sigma_xi == pytest.approx(0.3 / math.sqrt(3))


def test_seed_derivation():
    a = derive_seed(1, 2, 3)
    assert a == derive_seed(1, 2, 3) and 0 <= a < 2**64
    assert len({derive_seed(1, g, r) for g in range(10) for r in range(10)}) == 100


def test_state_recipes():
    rho = make_state(small_spec(rank=2), 5)
    assert np.sum(np.linalg.eigvalsh(rho) > 1e-12) == 2
    u = make_state(small_spec(rank=2, state="uniform"), 5)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(u))[-2:], 0.5, atol=1e-12)


def test_error_metrics(rng):
    dist = make_design("pauli", m=4)
    rho = random_density(4, 4, rng)
    zero = error_metrics(rho, rho, dist, ("l2pi", "hs", "trace", "hellinger", "kl-sym", "fidelity"))
    assert all(abs(v) < 1e-8 for v in zero.values())
    pure = random_density(4, 1, rng)
    assert error_metrics(pure, rho, dist, ("kl-sym",))["kl-sym"] == math.inf
    e = error_metrics(pure, rho, dist, ("l2pi", "hs"))
    assert e["l2pi"] == pytest.approx(e["hs"] / 16)


def test_recovery_rows_and_determinism(tmp_path):
    spec = small_spec(ns=(100, 300))
    rows = run_recovery(spec)
    assert len(rows) == 6
    assert all(r.converged and r.monotone and r.residual <= r.tol_stat for r in rows)
    again = run_recovery(spec, workers=3)
    cols = ["seed", "epsilon", "l2pi", "hs", "trace", "iterations", "residual"]
    assert [row_values(r, cols) for r in rows] == [row_values(r, cols) for r in again]
    a, b = emit_csv(rows, tmp_path / "a.csv"), emit_csv(again, tmp_path / "b.csv")
    assert strip_timing(a.read_text()) == strip_timing(b.read_text())


def test_noiseless_complete_basis_recovery():
    spec = ExperimentSpec(design="mc-uniform", m=3, rank=2, sigma=0.0, ns=(400,), epsilon=1e-8,
                          epsilon_D=None, reps=3, metrics=("trace",))
    rows = run_recovery(spec)
    assert np.median([r.metrics["trace"] for r in rows]) <= 1e-3


def test_more_data_helps():
    spec = ExperimentSpec(design="pauli", k=3, rank=1, sigma=0.1, ns=(500, 2000), reps=10, seed=3,
                          epsilon_D=0.01)
    rows = run_recovery(spec)
    med = [np.median([r.metrics["l2pi"] for r in rows if r.n == n]) for n in (500, 2000)]
    assert med[1] < med[0]


def test_csv_roundtrip_and_header_only(tmp_path):
    rows = run_recovery(small_spec(reps=2))
    p = emit_csv(rows, tmp_path / "r.csv")
    back = read_csv(p)
    assert back == rows
    header = p.read_text().splitlines()[0].split(",")
    assert header[:10] == ["spec_hash", "axis", "x", "n", "rank", "sigma", "m", "rep", "seed", "epsilon"]
    assert header[-1] == "wall_time"
    empty = emit_csv([], tmp_path / "e.csv")
    assert len(empty.read_text().splitlines()) == 1
    assert read_csv(empty) == []
    plot = emit_plotdata(rows, tmp_path / "p.csv").read_text().splitlines()
    assert plot[0] == "axis,x,median,q25,q75" and len(plot) == 2


def test_sweep_report():
    spec = small_spec(reps=4, epsilon_D=0.01)
    rep = run_scaling_sweep(spec, "n", [200, 800, 3200], n_boot=200)
    assert rep.ci[0] <= rep.slope <= rep.ci[1]
    assert rep.slope < 0
    assert len(rep.rows) == 12
    with pytest.raises(ValueError, match="at least 3"):
        run_scaling_sweep(spec, "n", [100, 200])
    with pytest.raises(ValueError, match="axis"):
        run_scaling_sweep(spec, "depth", [1, 2, 3])


def test_sweep_over_m_and_sigma():
    rep = run_scaling_sweep(small_spec(reps=2), "m", [2, 4, 8], n_boot=10)
    assert sorted({r.m for r in rep.rows}) == [2, 4, 8]
    rep = run_scaling_sweep(small_spec(reps=2), "sigma", [0.05, 0.1, 0.2], n_boot=10)
    assert sorted({r.sigma for r in rep.rows}) == [0.05, 0.1, 0.2]


def test_ols_slope():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert ols_slope(x, 3 * x**-1.5) == pytest.approx(-1.5)


def test_calibrate_D():
    best, scores = calibrate_D(small_spec(reps=2), grid=(0.01, 0.1, 1.0))
    assert best in scores and scores[best] == min(scores.values())


def test_bernstein_suite_consistency():
    dist = make_design("mc-uniform", m=3)
    tab = run_bernstein_suite(dist, 30, 2000, rng=1)
    assert len(tab.t) == 20 and tab.violations == 0
    expect = [bernstein_tail(30 * t, 30, 3, tab.sigma_X, tab.U) for t in tab.t]
    np.testing.assert_array_equal(tab.bound, expect)
    beyond = run_bernstein_suite(dist, 30, 500, t_grid=[10.0], rng=1)
    assert beyond.empirical[0] == 0.0 <= beyond.bound[0]
    with pytest.raises(ValueError):
        run_bernstein_suite(make_design("gauss", m=3), 10, 10)


def test_population_props_path(rng):
    dist = make_design("pauli", m=4)
    rho = random_density(4, 4, rng)
    rows = run_population_props(dist, rho, [1e-1, 1e-2, 1e-3])
    assert all(r.penalty_norm_ok and r.alignment_ok and r.converged for r in rows)
    lhs = [r.error_sq for r in rows]
    assert lhs[0] > lhs[1] > lhs[2]


def test_load_config(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text("[experiment]\ndesign = pauli\nk = 3\nns = 500, 1000\nsigma = 0.2\nknown_design = yes\n"
                 "[sweep]\naxis = n\nvalues = 1,2,3\n")
    cfg = load_config(p)
    spec = ExperimentSpec(**cfg["experiment"])
    assert spec.ns == (500, 1000) and spec.k == 3 and spec.known_design and spec.sigma == 0.2
    assert cfg["sweep"] == {"axis": "n", "values": "1,2,3"}
    p.write_text("[experiment]\nbogus = 1\n")
    with pytest.raises(ValueError, match="bogus"):
        load_config(p)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.ini")


def test_known_design_runs():
    rows = run_recovery(replace(small_spec(), known_design=True))
    assert all(r.converged for r in rows)
