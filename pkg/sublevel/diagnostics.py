"""Decrements, self-concordance auxiliaries and executable convergence checks.

Nothing here is used by the optimizers themselves; these functions inspect
iterates and traces after the fact. Inequalities are compared with a
relative slack of 1e-9 unless stated otherwise.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np
import scipy.linalg

from sublevel.coarse import SamplingOperator, sample_operator
from sublevel.errors import DomainError, NotApplicable, NotPositiveDefinite, SublevelError
from sublevel.logs import get_logger
from sublevel.optimizers import (
    MethodConfig,
    iteration_rng,
    lowrank_inverse,
    newton_direction,
    run,
    sigmasvd_inverse,
)
from sublevel.problems import Objective, Quadratic, SyntheticSpec, objective_from_spec
from sublevel.spectral import LowRankInverse, TruncatedSpectrum, dense_symmetric_eig, floor_spectrum
from sublevel.trace import IterationTrace

log = get_logger(__name__)

REL_SLACK = 1e-9
NEWTON_THRESHOLD = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(slots=True, frozen=True)
class InequalityCheck:
    """One evaluated inequality lhs <= rhs (or equality, for identities)."""

    name: str
    lhs: float
    rhs: float
    holds: bool

    def describe(self) -> str:
        verdict = "ok" if self.holds else "VIOLATED"
        return f"{self.name}: {self.lhs:.10e} vs {self.rhs:.10e} ({verdict})"


def _leq(name: str, lhs: float, rhs: float, rel: float = REL_SLACK, tol: float = 0.0) -> InequalityCheck:
    bound = rhs + rel * max(abs(lhs), abs(rhs)) + tol
    return InequalityCheck(name, float(lhs), float(rhs), bool(lhs <= bound))


def _eq(name: str, lhs: float, rhs: float, rel: float = REL_SLACK, tol: float = 1e-14) -> InequalityCheck:
    close = abs(lhs - rhs) <= rel * max(abs(lhs), abs(rhs)) + tol
    return InequalityCheck(name, float(lhs), float(rhs), bool(close))


def newton_decrement(obj: Objective, x: np.ndarray) -> float:
    """lambda(x) = sqrt(g^T H^{-1} g) through a Cholesky solve.

    Raises:
        NotPositiveDefinite: the Hessian at x is not positive definite.
    """

    g = obj.gradient(x)
    try:
        factor = scipy.linalg.cho_factor(obj.dense_hessian(x))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("Hessian is not positive definite at x.") from exc
    return math.sqrt(max(float(g @ scipy.linalg.cho_solve(factor, g)), 0.0))


def _hnorm(h: np.ndarray, v: np.ndarray) -> float:
    return math.sqrt(max(float(v @ (h @ v)), 0.0))


@dataclass(slots=True, frozen=True)
class DecrementReport:
    """Exact and approximate decrements at one point.

    Attributes:
        newton (float): lambda, the exact Newton decrement.
        galerkin (float): the decrement of the exact Galerkin model.
        sigmasvd (float): the decrement through the floored coarse inverse.
        full (float): the decrement through a floored full-space inverse
            (NaN unless a full spectrum was supplied).
        error (float): sqrt(lambda^2 - sigmasvd^2).
        coarse_ratio (float): sigma_N / sigma_{p+1} of the reduced Hessian.
        full_ratio (float): sigma_n / sigma_{N+1} of the full Hessian (NaN
            unless a full spectrum was supplied).
    """

    newton: float
    galerkin: float
    sigmasvd: float
    error: float
    coarse_ratio: float
    full: float = math.nan
    full_ratio: float = math.nan

    def chain(self, rel: float = REL_SLACK) -> list[InequalityCheck]:
        checks = [
            _leq("sqrt(sigma_N/sigma_p+1) * galerkin <= sigmasvd",
                 math.sqrt(max(self.coarse_ratio, 0.0)) * self.galerkin, self.sigmasvd, rel),
            _leq("sigmasvd <= galerkin", self.sigmasvd, self.galerkin, rel),
            _leq("galerkin <= newton", self.galerkin, self.newton, rel),
        ]
        if not math.isnan(self.full):
            checks += [
                _leq("sqrt(sigma_n/sigma_N+1) * newton <= full",
                     math.sqrt(max(self.full_ratio, 0.0)) * self.newton, self.full, rel),
                _leq("full <= newton", self.full, self.newton, rel),
            ]
        return checks

    def chain_holds(self, rel: float = REL_SLACK) -> bool:
        return all(check.holds for check in self.chain(rel))


def approx_decrements(
    obj: Objective,
    x: np.ndarray,
    op: SamplingOperator,
    spectrum: TruncatedSpectrum,
    full_spectrum: Optional[TruncatedSpectrum] = None,
) -> DecrementReport:
    """Evaluates every decrement at x for a given subspace and reduced spectrum.

    `spectrum` is the floored spectrum of the reduced Hessian on `op`;
    `full_spectrum`, if given, is a floored spectrum of the full Hessian.
    """

    x = np.asarray(x, dtype=float)
    g = obj.gradient(x)
    h = obj.dense_hessian(x)
    lam = newton_decrement(obj, x)

    reduced = obj.reduced_hessian(x, op)
    rg = op.restrict(g)
    galerkin = math.sqrt(max(float(rg @ scipy.linalg.solve(reduced, rg, assume_a="sym")), 0.0))
    sigmasvd = math.sqrt(max(float(g @ LowRankInverse(spectrum, op).apply(g)), 0.0))
    if sigmasvd > lam * (1.0 + 1e-10) + 1e-14:
        log.warning("sigmasvd decrement %.6e exceeds the Newton decrement %.6e", sigmasvd, lam)
    error = math.sqrt(max(lam ** 2 - sigmasvd ** 2, 0.0))
    sigma_n = float(scipy.linalg.eigvalsh(reduced)[0])

    full, full_ratio = math.nan, math.nan
    if full_spectrum is not None:
        full = math.sqrt(max(float(g @ full_spectrum.solve(g)), 0.0))
        full_ratio = float(scipy.linalg.eigvalsh(h)[0]) / full_spectrum.floor

    return DecrementReport(
        newton=lam,
        galerkin=galerkin,
        sigmasvd=sigmasvd,
        error=error,
        coarse_ratio=sigma_n / spectrum.floor,
        full=full,
        full_ratio=full_ratio,
    )


@dataclass(slots=True, frozen=True)
class LemmaReport:
    decrements: DecrementReport
    checks: tuple[InequalityCheck, ...]

    @property
    def holds(self) -> bool:
        return all(check.holds for check in self.checks)

    def failures(self) -> list[InequalityCheck]:
        return [check for check in self.checks if not check.holds]


def lemma_items(
    obj: Objective,
    x: np.ndarray,
    op: SamplingOperator,
    spectrum: TruncatedSpectrum,
    full_spectrum: Optional[TruncatedSpectrum] = None,
    rel: float = REL_SLACK,
) -> LemmaReport:
    """Evaluates the decrement identities and bounds relating the coarse step to Newton's.

    With d the Newton direction and d_hat = -P Q_H^{-1} R g:

        d^T H d_hat = sigmasvd^2
        d_hat^T H d_hat <= sigmasvd^2
        ||H^{1/2}(d - d_hat)|| <= error
        sqrt(sigma_N/sigma_{p+1}) galerkin <= sigmasvd <= galerkin <= newton

    With a full spectrum the full-space analogues are checked as well.
    """

    x = np.asarray(x, dtype=float)
    report = approx_decrements(obj, x, op, spectrum, full_spectrum)
    g = obj.gradient(x)
    h = obj.dense_hessian(x)
    d = newton_direction(obj, x, g)
    d_hat = -LowRankInverse(spectrum, op).apply(g)
    scale = report.newton ** 2

    checks = [
        _eq("d^T H d_hat = sigmasvd^2", float(d @ (h @ d_hat)), report.sigmasvd ** 2,
            rel, tol=1e-12 * scale),
        _leq("d_hat^T H d_hat <= sigmasvd^2", float(d_hat @ (h @ d_hat)), report.sigmasvd ** 2,
             rel, tol=1e-12 * scale),
        _leq("||H^1/2 (d - d_hat)|| <= error", _hnorm(h, d - d_hat), report.error,
             rel, tol=1e-7 * report.newton),
        *report.chain(rel),
    ]
    if full_spectrum is not None:
        d_bar = -full_spectrum.solve(g)
        checks += [
            _eq("-g^T d_bar = full^2", -float(g @ d_bar), report.full ** 2, rel, tol=1e-12 * scale),
            _leq("||d_bar||_x <= full", _hnorm(h, d_bar), report.full, rel, tol=1e-12),
            _leq("||H^1/2 (d_bar - d)|| <= (1 - sigma_n/sigma_N+1) newton", _hnorm(h, d_bar - d),
                 (1.0 - report.full_ratio) * report.newton, rel, tol=1e-7 * report.newton),
        ]
    return LemmaReport(report, tuple(checks))


def omega(x: float) -> float:
    """x - log(1 + x) for x >= 0."""

    if not x >= 0:
        raise DomainError(f"omega is defined for x >= 0, got {x}.")
    return x - math.log1p(x)


def omega_star(x: float) -> float:
    """-x - log(1 - x) for 0 <= x < 1."""

    if not 0 <= x < 1:
        raise DomainError(f"omega_star is defined for 0 <= x < 1, got {x}.")
    return -x - math.log1p(-x)


def eta(epsilon: float) -> float:
    """Quadratic-phase threshold of low-rank Newton for eigenvalue ratio epsilon in (0, 1]."""

    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}.")
    return (3.0 - math.sqrt(9.0 - 4.0 * epsilon)) / 2.0


def eta_hat(epsilon_hat: float) -> float:
    """Superlinear-phase threshold of the multilevel method for epsilon_hat in [0, 1)."""

    if not 0 <= epsilon_hat < 1:
        raise DomainError(f"epsilon_hat must lie in [0, 1), got {epsilon_hat}.")
    return (3.0 - math.sqrt(5.0 + 4.0 * epsilon_hat)) / 2.0


@dataclass(slots=True, frozen=True)
class SuboptimalityBounds:
    lower: float
    gap: float
    upper: float
    holds: bool
    quadratic: Optional[bool] = None


def suboptimality_bounds(obj: Objective, x: np.ndarray, f_star: float,
                         tol: float = 1e-8) -> SuboptimalityBounds:
    """Sandwich omega(lambda) <= f(x) - f* <= omega_star(lambda).

    When lambda <= 0.68 the bound f(x) - f* <= lambda^2 is checked as well
    and reported in `quadratic`.

    Raises:
        NotApplicable: lambda(x) >= 1.
    """

    lam = newton_decrement(obj, x)
    if lam >= 1:
        raise NotApplicable(f"the sandwich needs lambda < 1, got {lam:.6f}.")
    gap = obj.value(x) - f_star
    lower, upper = omega(lam), omega_star(lam)
    holds = lower - tol <= gap <= upper + tol
    quadratic = gap <= lam ** 2 + tol if lam <= 0.68 else None
    return SuboptimalityBounds(lower=lower, gap=gap, upper=upper, holds=holds, quadratic=quadratic)


def decrement_stream(obj: Objective, trace: IterationTrace) -> np.ndarray:
    """Exact Newton decrements at the iterates kept in `trace`."""

    if not trace.iterates:
        raise ValueError("trace has no iterates; run with keep_iterates=True.")
    return np.array([newton_decrement(obj, x) for x in trace.iterates])


def spectral_ratio(obj: Objective, x: np.ndarray, coarse_dim: int) -> float:
    """sigma_n / sigma_{N+1} of the dense Hessian at x."""

    values = scipy.linalg.eigvalsh(obj.dense_hessian(x))[::-1]
    return float(values[-1] / values[coarse_dim])


PhaseKind = Literal["full", "multilevel"]


@dataclass(slots=True, frozen=True)
class PhaseReport:
    """Where a trace enters its fast-convergence region and how it behaves there.

    Attributes:
        kind (str): 'full' uses eta(epsilon) with epsilon the smallest
            eigenvalue ratio; 'multilevel' uses eta_hat with epsilon_hat
            computed from the smallest observed ratio of the approximate to
            the exact decrement.
        epsilon (float): epsilon or epsilon_hat.
        threshold (float): eta or eta_hat.
        entry (int, optional): first k with lambda_k <= threshold.
        unit_steps (bool): every step after entry had t = 1.
        decreasing (bool): lambda strictly decreased after entry.
        contraction (ndarray): lambda_{k+1} / lambda_k for every k.
    """

    kind: PhaseKind
    epsilon: float
    threshold: float
    entry: Optional[int]
    unit_steps: bool
    decreasing: bool
    contraction: np.ndarray = field(repr=False)

    @property
    def entered(self) -> bool:
        return self.entry is not None

    @property
    def holds(self) -> bool:
        return self.unit_steps and self.decreasing


def phase_report(
    trace: IterationTrace,
    ratios: Optional[Sequence[float]],
    newton_decrements: Sequence[float],
    kind: PhaseKind = "full",
    noise_floor: float = 1e-12,
) -> PhaseReport:
    """Classifies the iterates of a trace into the damped and the fast phase.

    Args:
        trace (IterationTrace): run with its decrement and step columns filled.
        ratios (sequence, optional): per-iterate sigma_n / sigma_{N+1}; needed
            for kind 'full'.
        newton_decrements (sequence): exact lambda at every trace row.
        kind (str): 'full' or 'multilevel'.
        noise_floor (float): decrements below this are at rounding level and
            excluded from the decrease and unit-step checks.
    """

    lam = np.asarray(newton_decrements, dtype=float)
    steps = trace.column("step")
    if lam.shape[0] != len(trace):
        raise ValueError(f"got {lam.shape[0]} decrements for {len(trace)} trace rows.")

    if kind == "full":
        if ratios is None or len(ratios) == 0:
            raise ValueError("kind 'full' needs the per-iterate eigenvalue ratios.")
        epsilon = float(np.clip(np.min(ratios), np.finfo(float).tiny, 1.0))
        threshold = eta(epsilon)
    else:
        approx = trace.column("decrement")
        usable = (lam > noise_floor) & np.isfinite(approx)
        m_hat = float(np.min(approx[usable] / lam[usable])) if usable.any() else 1.0
        epsilon = math.sqrt(max(1.0 - min(m_hat, 1.0) ** 2, 0.0))
        threshold = eta_hat(min(epsilon, 1.0 - 1e-16))

    inside = np.nonzero(lam <= threshold)[0]
    entry = int(inside[0]) if inside.size else None
    with np.errstate(divide="ignore", invalid="ignore"):
        contraction = lam[1:] / lam[:-1]

    unit_steps, decreasing = True, True
    if entry is not None:
        active = np.arange(entry, len(lam))
        active = active[lam[active] > noise_floor]
        for k in active:
            if np.isfinite(steps[k]) and steps[k] != 1.0:
                unit_steps = False
            if k + 1 < len(lam) and not lam[k + 1] < lam[k]:
                decreasing = False
    return PhaseReport(kind, epsilon, threshold, entry, unit_steps, decreasing, contraction)


def newton_reference(obj: Objective, x0: np.ndarray, method: Literal["newton", "cubic"] = "newton",
                     max_iters: int = 200, grad_tol: float = 1e-14) -> IterationTrace:
    """Long high-accuracy run whose final value serves as f*."""

    cfg = MethodConfig(method=method, max_iters=max_iters, grad_tol=grad_tol, eps_exit=1e-300,
                       label=f"{method}-reference")
    return run(obj, x0, cfg)


def escape_threshold(f_plateau: float, f_reference: float) -> float:
    """Value separating the saddle plateau from the minimum basin.

    The geometric mean of both values, i.e. their midpoint in log f; the
    arithmetic midpoint when either is not positive.
    """

    if f_plateau > 0 and f_reference > 0:
        return math.sqrt(f_plateau * f_reference)
    return 0.5 * (f_plateau + f_reference)


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(master), int(trial)]).generate_state(1)[0])


@dataclass(slots=True, frozen=True)
class EscapeResult:
    successes: int
    trials: int
    best_values: tuple[float, ...]

    @property
    def probability(self) -> float:
        return self.successes / self.trials


def escape_rate(
    obj: Objective,
    x0: np.ndarray,
    cfg: MethodConfig,
    trials: int,
    seed: int,
    threshold: float,
    threads: int = 1,
) -> EscapeResult:
    """Fraction of independently seeded runs whose objective drops to `threshold`.

    Trial t runs with seed trial_seed(seed, t). Trials may run on up to
    `threads` threads; results are collected in trial order, so the outcome
    does not depend on the thread count.
    """

    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}.")

    def one(trial: int) -> float:
        trace = run(obj, x0, replace(cfg, seed=trial_seed(seed, trial)))
        return float(np.min(trace.column("f")))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        best = tuple(pool.map(one, range(trials)))
    successes = sum(value <= threshold for value in best)
    log.info("%s escaped in %d/%d trials", cfg.name, successes, trials)
    return EscapeResult(successes=successes, trials=trials, best_values=best)


@dataclass(slots=True, frozen=True)
class DegeneracyReport:
    newton: np.ndarray
    sigmasvd: np.ndarray
    lowrank: np.ndarray
    checks: tuple[InequalityCheck, ...]

    @property
    def holds(self) -> bool:
        return all(check.holds for check in self.checks)


def degeneracy_chain(obj: Objective, x: np.ndarray, seed: int = 0, tol: float = 1e-8) -> DegeneracyReport:
    """Checks that the low-rank methods collapse to Newton when nothing is discarded.

    SigmaSVD with N = n and p = n - 1, and LowRankNewton with N = n - 1, keep
    the whole spectrum and must reproduce the Newton direction.
    """

    x = np.asarray(x, dtype=float)
    n = obj.dim
    g = obj.gradient(x)
    d = newton_direction(obj, x, g)

    cfg = MethodConfig("sigmasvd", coarse_dim=n, rank=n - 1, allow_full=True, seed=seed)
    rng = iteration_rng(seed, 0)
    op = sample_operator(n, n, rng, allow_full=True)
    d_sigma = -sigmasvd_inverse(obj, x, op, cfg, rng).apply(g)
    d_low = -lowrank_inverse(obj, x, MethodConfig("lowrank", coarse_dim=n - 1, seed=seed),
                             iteration_rng(seed, 0)).apply(g)

    scale = max(float(np.linalg.norm(d)), 1e-300)
    checks = (
        _leq("||d_sigmasvd - d_newton|| / ||d_newton||", float(np.linalg.norm(d_sigma - d)) / scale, tol, 0.0),
        _leq("||d_lowrank - d_newton|| / ||d_newton||", float(np.linalg.norm(d_low - d)) / scale, tol, 0.0),
    )
    return DegeneracyReport(newton=d, sigmasvd=d_sigma, lowrank=d_low, checks=checks)


def _flag(name: str, ok: bool) -> InequalityCheck:
    return InequalityCheck(name, float(ok), 1.0, bool(ok))


@dataclass(slots=True, frozen=True)
class ProbeResult:
    name: str
    checks: tuple[InequalityCheck, ...] = ()
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(check.holds for check in self.checks)

    def failures(self) -> list[InequalityCheck]:
        return [check for check in self.checks if not check.holds]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "error": self.error,
            "checks": [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds} for c in self.checks
            ],
        }


def probe_lemma_chain(seed: int = 0, triples: int = 20) -> ProbeResult:
    """Decrement identities and bounds on random (problem, subspace, rank) triples."""

    rng = np.random.default_rng(seed)
    n = 30
    checks: list[InequalityCheck] = []
    for t in range(triples):
        obj = objective_from_spec("logistic", SyntheticSpec(m=200, n=n, seed=seed + t), reg=1e-3)
        x = 0.5 * rng.standard_normal(n)
        coarse = int(rng.integers(4, n))
        rank = int(rng.integers(1, coarse))
        op = sample_operator(n, coarse, rng)
        spectrum = floor_spectrum(*dense_symmetric_eig(obj.reduced_hessian(x, op)), rank)
        full = floor_spectrum(*dense_symmetric_eig(obj.dense_hessian(x)), coarse)
        report = lemma_items(obj, x, op, spectrum, full)
        checks += [replace(c, name=f"[{t}] N={coarse} p={rank}: {c.name}") for c in report.checks]
    return ProbeResult("lemma-chain", tuple(checks))


def _loglinear(seed: int, m: int = 300, n: int = 20) -> Objective:
    return objective_from_spec("loglinear", SyntheticSpec(m=m, n=n, distribution="loglinear", seed=seed))


def probe_suboptimality(seed: int = 0) -> ProbeResult:
    """omega(lambda) <= f - f* <= omega_star(lambda) along a low-rank Newton trace."""

    obj = _loglinear(seed)
    x0 = np.zeros(obj.dim)
    f_star = newton_reference(obj, x0).final.f
    cfg = MethodConfig("lowrank", coarse_dim=obj.dim - 5, seed=seed, max_iters=60, grad_tol=1e-9)
    trace = run(obj, x0, cfg, keep_iterates=True)
    checks: list[InequalityCheck] = []
    for k, x in enumerate(trace.iterates):
        lam = newton_decrement(obj, x)
        if lam >= 1:
            continue
        bounds = suboptimality_bounds(obj, x, f_star)
        checks.append(_leq(f"[{k}] omega(lambda) <= f - f*", bounds.lower, bounds.gap, 0.0, 1e-8))
        checks.append(_leq(f"[{k}] f - f* <= omega_star(lambda)", bounds.gap, bounds.upper, 0.0, 1e-8))
        if bounds.quadratic is not None:
            checks.append(_leq(f"[{k}] f - f* <= lambda^2", bounds.gap, lam ** 2, 0.0, 1e-8))
    if not checks:
        checks.append(_flag("some iterate has lambda < 1", False))
    return ProbeResult("suboptimality", tuple(checks))


def probe_phase(seed: int = 0) -> ProbeResult:
    """Unit steps and strictly decreasing lambda once low-rank Newton enters its fast region."""

    obj = _loglinear(seed)
    coarse = obj.dim - 2
    cfg = MethodConfig("lowrank", coarse_dim=coarse, seed=seed, max_iters=60, grad_tol=1e-9)
    trace = run(obj, np.zeros(obj.dim), cfg, keep_iterates=True)
    lam = decrement_stream(obj, trace)
    ratios = [spectral_ratio(obj, x, coarse) for x in trace.iterates]
    report = phase_report(trace, ratios, lam, kind="full")
    return ProbeResult("phase", (
        _leq("min lambda <= eta", float(lam.min()), report.threshold, 0.0),
        _flag("unit steps after entry", report.unit_steps),
        _flag("lambda strictly decreasing after entry", report.decreasing),
        _flag("run converged", trace.status == "Converged"),
    ))


def probe_degeneracy(seed: int = 0) -> ProbeResult:
    obj = objective_from_spec("logistic", SyntheticSpec(m=400, n=80, seed=seed), reg=1e-3)
    x = 0.3 * np.random.default_rng(seed).standard_normal(obj.dim)
    return ProbeResult("degeneracy", degeneracy_chain(obj, x, seed=seed).checks)


def probe_newton_quadratic(seed: int = 0) -> ProbeResult:
    """Exact Newton minimizes a strictly convex quadratic in one unit step."""

    rng = np.random.default_rng(seed)
    n = 25
    basis = rng.standard_normal((n, n))
    obj = Quadratic(basis @ basis.T + n * np.eye(n), rng.standard_normal(n))
    trace = run(obj, np.zeros(n), MethodConfig("newton", max_iters=1))
    target = obj.minimizer()
    error = float(np.linalg.norm(trace.x_final - target) / np.linalg.norm(target))
    return ProbeResult("newton-quadratic", (
        _leq("||x_1 - x*|| / ||x*||", error, 1e-10, 0.0),
        _flag("unit step", trace.records[0].step == 1.0),
    ))


PROBES = (probe_lemma_chain, probe_suboptimality, probe_phase, probe_degeneracy, probe_newton_quadratic)


def run_probes(seed: int = 0) -> list[ProbeResult]:
    """Runs every probe; a probe that raises is reported as failed with its error."""

    results = []
    for probe in PROBES:
        name = probe.__name__.removeprefix("probe_").replace("_", "-")
        try:
            results.append(probe(seed))
        except (SublevelError, np.linalg.LinAlgError) as exc:
            results.append(ProbeResult(name, error=f"{type(exc).__name__}: {exc}"))
        log.info("probe %s done", name)
    return results
