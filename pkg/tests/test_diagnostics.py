import math
from dataclasses import replace

import numpy as np
import pytest

from sublevel.coarse import sample_operator
from sublevel.diagnostics import (
    NEWTON_THRESHOLD,
    approx_decrements,
    decrement_stream,
    degeneracy_chain,
    escape_rate,
    escape_threshold,
    eta,
    eta_hat,
    lemma_items,
    newton_decrement,
    newton_reference,
    omega,
    omega_star,
    phase_report,
    probe_lemma_chain,
    probe_newton_quadratic,
    run_probes,
    spectral_ratio,
    suboptimality_bounds,
    trial_seed,
)
from sublevel.errors import DomainError, NotApplicable, NotPositiveDefinite
from sublevel.optimizers import MethodConfig, run
from sublevel.problems import Quadratic, SyntheticSpec, generate_synthetic, objective_from_spec
from sublevel.spectral import TruncatedSpectrum, dense_symmetric_eig, floor_spectrum


def test_omega_values():
    assert omega(0.0) == 0.0
    assert omega(1.0) == pytest.approx(1.0 - math.log(2.0))
    assert omega_star(0.0) == 0.0
    assert omega_star(0.5) == pytest.approx(-0.5 + math.log(2.0))


@pytest.mark.parametrize("x", np.linspace(0.0, 0.68, 18))
def test_omega_star_below_square(x):
    """omega_star(x) <= x^2 on [0, 0.68]."""
    assert omega(x) <= omega_star(x) <= x * x + 1e-15


@pytest.mark.parametrize("func, x", [(omega, -0.1), (omega_star, 1.0), (omega_star, -1e-9),
                                     (eta, 0.0), (eta, 1.5), (eta_hat, 1.0), (eta_hat, -0.1)])
def test_scalar_domains(func, x):
    with pytest.raises(DomainError):
        func(x)


def test_thresholds():
    assert eta(1.0) == pytest.approx(NEWTON_THRESHOLD)
    assert eta_hat(0.0) == pytest.approx(NEWTON_THRESHOLD)
    assert eta(0.5) < eta(0.9) < eta(1.0)
    assert eta_hat(0.9) < eta_hat(0.1)


def test_newton_decrement_of_identity_quadratic():
    x = np.array([3.0, 4.0])
    assert newton_decrement(Quadratic.identity(2), x) == pytest.approx(5.0)


def test_newton_decrement_matches_explicit_inverse(loglinear):
    x = np.zeros(loglinear.dim)
    g = loglinear.gradient(x)
    explicit = math.sqrt(g @ np.linalg.solve(loglinear.dense_hessian(x), g))
    assert newton_decrement(loglinear, x) == pytest.approx(explicit, rel=1e-10)


def test_newton_decrement_needs_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        newton_decrement(Quadratic(np.diag([1.0, -1.0])), np.ones(2))


def _reduced_spectrum(obj, x, op, rank):
    return floor_spectrum(*dense_symmetric_eig(obj.reduced_hessian(x, op)), rank)


@pytest.mark.parametrize("seed", range(10))
def test_decrement_chain(logistic, seed):
    """sqrt(sigma_N/sigma_p+1) galerkin <= sigmasvd <= galerkin <= newton with exact spectra."""
    rng = np.random.default_rng(seed)
    x = 0.5 * rng.standard_normal(logistic.dim)
    coarse = int(rng.integers(3, logistic.dim))
    op = sample_operator(logistic.dim, coarse, rng)
    spectrum = _reduced_spectrum(logistic, x, op, int(rng.integers(1, coarse)))
    full = floor_spectrum(*dense_symmetric_eig(logistic.dense_hessian(x)), coarse)
    report = lemma_items(logistic, x, op, spectrum, full)
    assert report.holds, [check.describe() for check in report.failures()]


def test_rank_n_minus_one_reproduces_galerkin(logistic, rng):
    x = 0.3 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, 12, seed=1)
    report = approx_decrements(logistic, x, op, _reduced_spectrum(logistic, x, op, 11))
    assert report.sigmasvd == pytest.approx(report.galerkin, rel=1e-10)


def test_full_subspace_reproduces_newton(logistic, rng):
    x = 0.3 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, logistic.dim, seed=2, allow_full=True)
    report = approx_decrements(logistic, x, op, _reduced_spectrum(logistic, x, op, 5))
    assert report.galerkin == pytest.approx(report.newton, rel=1e-10)


def test_chain_detects_wrong_floor(logistic, rng):
    """Flooring below sigma_p+1 inflates the coarse decrement past the Galerkin one."""
    x = 0.5 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, 15, seed=3)
    exact = _reduced_spectrum(logistic, x, op, 3)
    broken = TruncatedSpectrum(exact.vectors, exact.values, floor=exact.floor / 100.0)
    assert not approx_decrements(logistic, x, op, broken).chain_holds()
    assert not lemma_items(logistic, x, op, broken).holds


def test_lemma_probe_passes():
    result = probe_lemma_chain(seed=1, triples=5)
    assert result.passed, [check.describe() for check in result.failures()]


def test_sandwich_at_minimizer():
    bounds = suboptimality_bounds(Quadratic.identity(3), np.zeros(3), 0.0)
    assert bounds.gap == 0.0 and bounds.lower == 0.0 and bounds.upper == 0.0
    assert bounds.holds and bounds.quadratic


def test_sandwich_needs_small_decrement():
    with pytest.raises(NotApplicable):
        suboptimality_bounds(Quadratic.identity(2), np.array([3.0, 4.0]), 0.0)


@pytest.mark.parametrize("cfg", [
    MethodConfig("newton", max_iters=30),
    MethodConfig("lowrank", coarse_dim=15, max_iters=60, grad_tol=1e-10),
    MethodConfig("sigmasvd", coarse_dim=12, rank=6, max_iters=80, grad_tol=1e-10),
], ids=lambda cfg: cfg.method)
def test_sandwich_along_trace(loglinear, cfg):
    x0 = np.zeros(loglinear.dim)
    f_star = newton_reference(loglinear, x0).final.f
    trace = run(loglinear, x0, cfg, keep_iterates=True)
    checked = 0
    for x in trace.iterates:
        if newton_decrement(loglinear, x) < 1:
            bounds = suboptimality_bounds(loglinear, x, f_star)
            assert bounds.holds and bounds.quadratic is not False
            checked += 1
    assert checked > 0


def test_phase_report_on_quadratic(rng):
    a = rng.standard_normal((6, 6))
    obj = Quadratic(a @ a.T + np.eye(6), 10.0 * rng.standard_normal(6))
    trace = run(obj, np.zeros(6), MethodConfig("newton", max_iters=5), keep_iterates=True)
    lam = decrement_stream(obj, trace)
    report = phase_report(trace, [1.0] * len(trace), lam)
    assert report.threshold == pytest.approx(NEWTON_THRESHOLD)
    assert report.entered and report.holds


def test_phase_report_multilevel_kind(logistic):
    cfg = MethodConfig("sigmasvd", coarse_dim=15, rank=10, max_iters=20, grad_tol=1e-9)
    trace = run(logistic, np.zeros(logistic.dim), cfg, keep_iterates=True)
    report = phase_report(trace, None, decrement_stream(logistic, trace), kind="multilevel")
    assert 0.0 <= report.epsilon < 1.0
    assert 0.0 < report.threshold <= NEWTON_THRESHOLD


def test_phase_report_argument_checks(logistic):
    trace = run(logistic, np.zeros(logistic.dim), MethodConfig("newton", max_iters=2),
                keep_iterates=True)
    lam = decrement_stream(logistic, trace)
    with pytest.raises(ValueError):
        phase_report(trace, None, lam, kind="full")
    with pytest.raises(ValueError):
        phase_report(trace, [1.0], lam[:-1])
    with pytest.raises(ValueError):
        decrement_stream(logistic, run(logistic, np.zeros(logistic.dim), MethodConfig("gd", max_iters=1)))


def test_escape_threshold():
    assert escape_threshold(0.25, 0.01) == pytest.approx(0.05)
    assert escape_threshold(1.0, -1.0) == 0.0


def test_trial_seeds_differ():
    seeds = {trial_seed(7, t) for t in range(20)}
    assert len(seeds) == 20
    assert trial_seed(7, 3) == trial_seed(7, 3)


@pytest.fixture
def saddle():
    spec = SyntheticSpec(m=200, n=12, distribution="saddle", seed=4)
    return objective_from_spec("nls", spec), generate_synthetic(spec).probe


def test_escape_rate_ignores_thread_count(saddle):
    obj, probe = saddle
    cfg = MethodConfig("sigmasvd", coarse_dim=8, rank=3, mode="truncated", max_iters=10)
    threshold = 0.5 * obj.value(probe)
    single = escape_rate(obj, probe, cfg, trials=6, seed=11, threshold=threshold, threads=1)
    pooled = escape_rate(obj, probe, cfg, trials=6, seed=11, threshold=threshold, threads=8)
    assert single == pooled
    assert 0.0 <= single.probability <= 1.0


def test_deterministic_method_escapes_all_or_nothing(saddle):
    obj, probe = saddle
    result = escape_rate(obj, probe, MethodConfig("gd", max_iters=5), trials=4, seed=0,
                         threshold=0.5 * obj.value(probe))
    assert result.successes in (0, 4)
    assert len(set(result.best_values)) == 1


def test_escape_rate_needs_trials(saddle):
    obj, probe = saddle
    with pytest.raises(ValueError):
        escape_rate(obj, probe, MethodConfig("gd"), trials=0, seed=0, threshold=0.0)


def test_degeneracy_chain():
    """With nothing discarded SigmaSVD and LowRankNewton reproduce the Newton direction."""
    obj = objective_from_spec("logistic", SyntheticSpec(m=400, n=80, seed=8), reg=1e-3)
    x = 0.3 * np.random.default_rng(8).standard_normal(obj.dim)
    report = degeneracy_chain(obj, x, seed=8)
    assert report.holds, [check.describe() for check in report.checks]


def test_newton_quadratic_probe():
    assert probe_newton_quadratic(seed=3).passed


def test_probes_report_errors(monkeypatch):
    from sublevel import diagnostics
    from sublevel.errors import SingularHessian

    def broken(seed):
        raise SingularHessian("boom")

    monkeypatch.setattr(diagnostics, "PROBES", (broken,))
    results = run_probes(seed=0)
    assert len(results) == 1
    assert not results[0].passed
    assert results[0].error == "SingularHessian: boom"
    assert results[0].to_dict()["passed"] is False


@pytest.mark.slow
def test_escape_rate_grows_with_coarse_dim():
    """With one subspace per run, larger subspaces leave the saddle more often while GD and AGD stay."""
    spec = SyntheticSpec(m=2000, n=500, distribution="saddle", seed=0)
    obj = objective_from_spec("nls", spec)
    x0 = generate_synthetic(spec).probe
    assert np.linalg.eigvalsh(obj.dense_hessian(x0)).min() < 0
    reference = newton_reference(obj, x0, method="cubic", max_iters=300)
    assert reference.final.f < 1e-2 * obj.value(x0)
    threshold = escape_threshold(obj.value(x0), reference.final.f)

    for method in ("gd", "agd"):
        stuck = escape_rate(obj, x0, MethodConfig(method, max_iters=500), trials=2, seed=0,
                            threshold=threshold)
        assert stuck.probability == 0.0, method

    rates = []
    for fraction in (0.1, 0.13, 0.26, 0.36, 0.42, 0.46):
        cfg = MethodConfig("sigmasvd", coarse_dim=round(fraction * spec.n), rank=10, mode="truncated",
                           resample="fixed", max_iters=150)
        rates.append(escape_rate(obj, x0, cfg, trials=50, seed=0, threshold=threshold, threads=4).probability)
    assert all(low <= high for low, high in zip(rates, rates[1:])), rates
    assert rates[-1] - rates[0] >= 0.5, rates


@pytest.mark.slow
def test_lemma_chain_on_many_triples():
    result = probe_lemma_chain(seed=2, triples=100)
    assert result.passed, [check.describe() for check in result.failures()]


FAST_PHASE_RUNS = [
    ("sigmasvd", MethodConfig("sigmasvd", coarse_dim=50, rank=25, max_iters=100, grad_tol=1e-8)),
    ("lowrank", MethodConfig("lowrank", coarse_dim=90, max_iters=100, grad_tol=1e-8)),
]


@pytest.mark.slow
@pytest.mark.parametrize("name, cfg", FAST_PHASE_RUNS, ids=[run[0] for run in FAST_PHASE_RUNS])
def test_fast_phase_and_sandwich_on_barrier(name, cfg):
    """Unit steps, decreasing lambda and ||g|| <= 1e-8 in most runs; the sandwich on every iterate."""
    good = 0
    for seed in range(20):
        obj = objective_from_spec("loglinear", SyntheticSpec(m=1000, n=100, distribution="loglinear", seed=seed))
        x0 = np.zeros(obj.dim)
        trace = run(obj, x0, replace(cfg, seed=seed), keep_iterates=True)
        lam = decrement_stream(obj, trace)
        if name == "lowrank":
            ratios = [spectral_ratio(obj, x, cfg.coarse_dim) for x in trace.iterates]
            report = phase_report(trace, ratios, lam, kind="full")
        else:
            report = phase_report(trace, None, lam, kind="multilevel")
        good += report.entered and report.holds and trace.final.grad_norm <= 1e-8

        f_star = newton_reference(obj, x0).final.f
        for k, x in enumerate(trace.iterates):
            if lam[k] >= 1:
                continue
            bounds = suboptimality_bounds(obj, x, f_star)
            assert bounds.holds, (seed, k, bounds)
            assert bounds.quadratic is not False, (seed, k, bounds)
    assert good >= 18
