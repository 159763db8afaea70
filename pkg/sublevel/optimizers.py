"""Armijo line search, the compared methods, and the shared driver loop.

Second-order methods build a direction d = -Q^{-1} g from a different
Hessian model each, then share the same exit test and step-size rule:

    newton    exact dense Hessian
    cubic     cubic-regularized model, regularizer chosen by backtracking
    lowrank   floored rank-N spectrum of the full Hessian
    newsamp   floored rank-p spectrum of a row-subsampled Hessian
    sigma     exact Galerkin model on N sampled coordinates
    sigmasvd  floored rank-p spectrum of the Galerkin (reduced) Hessian
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from sublevel.coarse import SamplingOperator, build_galerkin, sample_operator
from sublevel.errors import (
    ConfigError,
    DomainViolation,
    LineSearchFailed,
    NonFinite,
    NotApplicable,
    NotDescentDirection,
    SingularHessian,
    SingularReducedHessian,
    SublevelError,
)
from sublevel.logs import get_logger
from sublevel.problems import GLMObjective, Objective
from sublevel.profiler import PhaseTimer
from sublevel.spectral import (
    DEFAULT_NU,
    LowRankInverse,
    SpectrumMode,
    dense_symmetric_eig,
    randomized_tsvd,
)
from sublevel.trace import IterationRecord, IterationTrace, TraceStatus

log = get_logger(__name__)

MethodName = Literal["gd", "agd", "adam", "newton", "cubic", "newsamp", "lowrank", "sigma", "sigmasvd"]
METHODS: tuple[str, ...] = ("gd", "agd", "adam", "newton", "cubic", "newsamp", "lowrank", "sigma", "sigmasvd")
EXIT_LIMIT = 0.68 ** 2


@dataclass(slots=True, frozen=True)
class LineSearchConfig:
    """Backtracking parameters: accept t when f(x + t d) <= f(x) + alpha t g^T d.

    `slack` adds slack * max(1, |f(x)|) to the right-hand side so that steps
    at the rounding floor of f are not rejected.
    """

    alpha: float = 0.001
    beta: float = 0.7
    t_init: float = 1.0
    max_backtracks: int = 100
    slack: float = 1e-13

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha", f"must lie in (0, 0.5), got {self.alpha}")
        if not 0 < self.beta < 1:
            raise ConfigError("beta", f"must lie in (0, 1), got {self.beta}")
        if self.t_init <= 0:
            raise ConfigError("t_init", f"must be positive, got {self.t_init}")
        if self.max_backtracks < 0:
            raise ConfigError("max_backtracks", f"must be non-negative, got {self.max_backtracks}")
        if self.slack < 0:
            raise ConfigError("slack", f"must be non-negative, got {self.slack}")


@dataclass(slots=True, frozen=True)
class MethodConfig:
    """Everything one optimizer run needs besides the objective and x0.

    Attributes:
        method (str): one of METHODS.
        coarse_dim (int, optional): N, the subspace size (sigma, sigmasvd) or
            the kept rank of the full spectrum (lowrank).
        rank (int, optional): p, kept eigenpairs (sigmasvd, newsamp).
        sample_rows (int, optional): |S_m|, rows used by newsamp.
        mode (str): 'convex' flooring or 'truncated' absolute-value flooring.
        nu (float): eigenvalue threshold of the truncation map.
        eps_exit (float): quit when -<g, d> <= eps_exit; must lie in (0, 0.68^2).
        grad_tol (float): quit when ||g|| <= grad_tol.
        step_rule (str): 'armijo', or 'damped' for t = 1 / (1 + decrement).
        resample (str): draw a new subspace every 'iteration' or keep it 'fixed'.
        allow_full (bool): admit N = n (a permutation) for sigma/sigmasvd.
    """

    method: MethodName
    coarse_dim: Optional[int] = None
    rank: Optional[int] = None
    sample_rows: Optional[int] = None
    mode: SpectrumMode = "convex"
    nu: float = DEFAULT_NU
    eps_exit: float = 1e-20
    grad_tol: float = 0.0
    max_iters: int = 100
    seed: int = 0
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    step_rule: Literal["armijo", "damped"] = "armijo"
    resample: Literal["iteration", "fixed"] = "iteration"
    allow_full: bool = False
    momentum: float = 0.5
    adam_lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    cubic_reg: float = 1.0
    oversample: int = 10
    power_iters: int = 2
    label: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError("method", f"unknown method '{self.method}'")
        if not 0 < self.eps_exit < EXIT_LIMIT:
            raise ConfigError("eps_exit", f"must lie in (0, {EXIT_LIMIT:.4f}), got {self.eps_exit}")
        if self.mode not in ("convex", "truncated"):
            raise ConfigError("mode", f"must be 'convex' or 'truncated', got '{self.mode}'")
        if self.nu <= 0:
            raise ConfigError("nu", f"must be positive, got {self.nu}")
        if self.max_iters < 0:
            raise ConfigError("max_iters", f"must be non-negative, got {self.max_iters}")
        if self.step_rule not in ("armijo", "damped"):
            raise ConfigError("step_rule", f"unknown step rule '{self.step_rule}'")
        if self.resample not in ("iteration", "fixed"):
            raise ConfigError("resample", f"unknown resample policy '{self.resample}'")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum", f"must lie in [0, 1), got {self.momentum}")
        if self.method in ("lowrank", "sigma", "sigmasvd") and not self.coarse_dim:
            raise ConfigError("coarse_dim", f"required by method '{self.method}'")
        if self.method in ("sigmasvd", "newsamp") and not self.rank:
            raise ConfigError("rank", f"required by method '{self.method}'")
        if self.method == "newsamp" and not self.sample_rows:
            raise ConfigError("sample_rows", "required by method 'newsamp'")
        if self.method == "sigmasvd" and self.rank >= self.coarse_dim:
            raise ConfigError("rank", f"p = {self.rank} must be below N = {self.coarse_dim}")

    @property
    def name(self) -> str:
        return self.label or self.method

    def check_dimensions(self, n: int, m: Optional[int] = None):
        """Validates the size parameters against a problem of dimension n with m samples."""

        coarse = self.coarse_dim
        if self.method == "lowrank" and coarse + 1 > n:
            raise ConfigError("coarse_dim", f"lowrank needs N + 1 <= n = {n}, got N = {coarse}")
        if self.method in ("sigma", "sigmasvd"):
            upper = n if self.allow_full else n - 1
            if coarse > upper:
                raise ConfigError("coarse_dim", f"N = {coarse} exceeds the admissible {upper} for n = {n}")
        if self.method == "newsamp":
            if self.rank + 1 > n:
                raise ConfigError("rank", f"newsamp needs p + 1 <= n = {n}, got p = {self.rank}")
            if m is not None and self.sample_rows > m:
                raise ConfigError("sample_rows", f"|S_m| = {self.sample_rows} exceeds m = {m}")


@dataclass(slots=True)
class OptimizerState:
    x: np.ndarray
    f: float
    grad: np.ndarray
    k: int = 0
    previous: Optional[np.ndarray] = None
    moment1: Optional[np.ndarray] = None
    moment2: Optional[np.ndarray] = None
    cubic_reg: float = 1.0
    operator: Optional[SamplingOperator] = None
    decrement: float = math.nan
    step: float = math.nan
    floor: float = math.nan
    converged: bool = False


def iteration_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for iteration `keys` of a run seeded with `seed`.

    Streams for different (seed, keys) are independent, so traces are
    reproducible and Monte-Carlo trials do not share randomness.
    """

    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def init_state(obj: Objective, x0: np.ndarray, cfg: MethodConfig) -> OptimizerState:
    x0 = np.array(x0, dtype=float)
    return OptimizerState(x=x0, f=obj.value(x0), grad=obj.gradient(x0), cubic_reg=cfg.cubic_reg)


def armijo(
    obj: Objective,
    x: np.ndarray,
    d: np.ndarray,
    g: np.ndarray,
    cfg: LineSearchConfig = LineSearchConfig(),
    f0: Optional[float] = None,
) -> tuple[float, float]:
    """Backtracking line search on t in {t_init * beta^j}.

    A trial point outside the objective's domain counts as a failed test.

    Returns:
        tuple: (accepted step t, f(x + t d)).

    Raises:
        NotDescentDirection: g^T d >= 0.
        LineSearchFailed: no step accepted within max_backtracks reductions.
    """

    slope = float(g @ d)
    if not slope < 0:
        raise NotDescentDirection(f"g^T d = {slope:.3e} is not negative.")
    if f0 is None:
        f0 = obj.value(x)
    slack = cfg.slack * max(1.0, abs(f0))
    t = cfg.t_init
    for _ in range(cfg.max_backtracks + 1):
        try:
            f_new = obj.value(x + t * d)
        except (DomainViolation, NonFinite):
            f_new = math.inf
        if f_new <= f0 + cfg.alpha * t * slope + slack:
            return t, f_new
        t *= cfg.beta
    raise LineSearchFailed(
        f"Armijo search failed after {cfg.max_backtracks} backtracks (g^T d = {slope:.3e})."
    )


def _descend(state: OptimizerState, obj: Objective, d: np.ndarray, cfg: MethodConfig,
             decrement: float = math.nan, floor: float = math.nan, **changes) -> OptimizerState:
    """Exit test, step size and update shared by the descent methods."""

    slope = float(state.grad @ d)
    if -slope <= cfg.eps_exit:
        return replace(state, decrement=decrement, step=math.nan, floor=floor,
                       converged=True, **changes)
    with PhaseTimer.profile_block("line_search"):
        if cfg.step_rule == "damped" and np.isfinite(decrement):
            t = 1.0 / (1.0 + decrement)
            f_new = obj.value(state.x + t * d)
        else:
            t, f_new = armijo(obj, state.x, d, state.grad, cfg.line_search, f0=state.f)
    x_new = state.x + t * d
    with PhaseTimer.profile_block("gradient"):
        g_new = obj.gradient(x_new)
    return replace(state, x=x_new, f=f_new, grad=g_new, k=state.k + 1,
                   decrement=decrement, step=t, floor=floor, **changes)


def _decrement(g: np.ndarray, d: np.ndarray) -> float:
    return math.sqrt(max(-float(g @ d), 0.0))


def _hessian_operator(obj: Objective, x: np.ndarray):
    if obj.dense_hessian_ok:
        return obj.dense_hessian(x)
    return lambda block: obj.hessian_matmat(x, block)


def newton_direction(obj: Objective, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Solves H d = -g with the dense Hessian.

    Raises:
        SingularHessian: the Hessian cannot be factorized.
    """

    h = obj.dense_hessian(x)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            d = scipy.linalg.solve(h, -g, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise SingularHessian("Hessian is singular at the current iterate.") from exc
    if not np.all(np.isfinite(d)):
        raise SingularHessian("Newton system produced non-finite values.")
    return d


def lowrank_inverse(obj: Objective, x: np.ndarray, cfg: MethodConfig,
                    rng: np.random.Generator) -> LowRankInverse:
    """Floored rank-N inverse of the full Hessian."""

    spectrum = randomized_tsvd(
        _hessian_operator(obj, x), obj.dim, cfg.coarse_dim,
        oversample=cfg.oversample, power_iters=cfg.power_iters,
        seed=rng, mode=cfg.mode, nu=cfg.nu)
    return LowRankInverse(spectrum)


def newsamp_inverse(obj: Objective, x: np.ndarray, rows: np.ndarray, cfg: MethodConfig,
                    rng: np.random.Generator) -> LowRankInverse:
    if not isinstance(obj, GLMObjective):
        raise NotApplicable("newsamp needs an objective with a sum-over-samples structure.")
    estimate = obj.subsampled_hessian(x, rows)
    spectrum = randomized_tsvd(
        estimate, obj.dim, cfg.rank, oversample=cfg.oversample,
        power_iters=cfg.power_iters, seed=rng, mode=cfg.mode, nu=cfg.nu)
    return LowRankInverse(spectrum)


def sigmasvd_inverse(obj: Objective, x: np.ndarray, op: SamplingOperator, cfg: MethodConfig,
                     rng: np.random.Generator) -> LowRankInverse:
    """Floored rank-p inverse of the reduced Hessian, acting as P Q_H^{-1} R."""

    with PhaseTimer.profile_block("hessian"):
        reduced = obj.reduced_hessian(x, op)
    with PhaseTimer.profile_block("spectrum"):
        spectrum = randomized_tsvd(
            reduced, op.coarse_dim, cfg.rank, oversample=cfg.oversample,
            power_iters=cfg.power_iters, seed=rng, mode=cfg.mode, nu=cfg.nu)
    return LowRankInverse(spectrum, operator=op)


def _operator(state: OptimizerState, obj: Objective, cfg: MethodConfig,
              rng: np.random.Generator) -> SamplingOperator:
    if cfg.resample == "fixed":
        if state.operator is not None:
            return state.operator
        rng = iteration_rng(cfg.seed, 0)
    return sample_operator(obj.dim, cfg.coarse_dim, rng, allow_full=cfg.allow_full)


def step_gd(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    return _descend(state, obj, -state.grad, cfg)


def step_agd(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    """Heavy-ball extrapolation y = x + mu (x - x_prev), then an Armijo gradient step from y.

    If y leaves the objective's domain the extrapolation is dropped for this
    iteration.
    """

    x, f, g = state.x, state.f, state.grad
    if state.previous is not None and cfg.momentum > 0:
        y = x + cfg.momentum * (x - state.previous)
        try:
            f, g = obj.value(y), obj.gradient(y)
            x = y
        except (DomainViolation, NonFinite):
            pass
    d = -g
    if float(g @ g) <= cfg.eps_exit:
        return replace(state, converged=True)
    with PhaseTimer.profile_block("line_search"):
        t, f_new = armijo(obj, x, d, g, cfg.line_search, f0=f)
    x_new = x + t * d
    return replace(state, x=x_new, f=f_new, grad=obj.gradient(x_new), k=state.k + 1,
                   previous=state.x, step=t)


def step_adam(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    g = state.grad
    m1 = np.zeros_like(g) if state.moment1 is None else state.moment1
    m2 = np.zeros_like(g) if state.moment2 is None else state.moment2
    m1 = cfg.adam_beta1 * m1 + (1 - cfg.adam_beta1) * g
    m2 = cfg.adam_beta2 * m2 + (1 - cfg.adam_beta2) * g * g
    count = state.k + 1
    m1_hat = m1 / (1 - cfg.adam_beta1 ** count)
    m2_hat = m2 / (1 - cfg.adam_beta2 ** count)
    x_new = state.x - cfg.adam_lr * m1_hat / (np.sqrt(m2_hat) + cfg.adam_eps)
    return replace(state, x=x_new, f=obj.value(x_new), grad=obj.gradient(x_new), k=count,
                   moment1=m1, moment2=m2, step=cfg.adam_lr)


def step_newton(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    with PhaseTimer.profile_block("direction"):
        d = newton_direction(obj, state.x, state.grad)
    return _descend(state, obj, d, cfg, decrement=_decrement(state.grad, d))


def cubic_subproblem(h: np.ndarray, g: np.ndarray, reg: float) -> np.ndarray:
    """Global minimizer of g^T d + 1/2 d^T H d + reg/6 ||d||^3.

    The minimizer is d(r) = -(H + reg r/2 I)^{-1} g with r = ||d(r)|| and
    H + reg r/2 I positive semidefinite; r is found by a 1-D root search on
    the eigenbasis of H. In the hard case the missing norm is added along
    the eigenvector of the smallest eigenvalue.
    """

    values, vectors = dense_symmetric_eig(h)
    coeffs = vectors.T @ g
    r_low = max(0.0, -2.0 * values[-1] / reg)

    def norm_at(r: float) -> float:
        return float(np.linalg.norm(coeffs / (values + 0.5 * reg * r)))

    def gap(r: float) -> float:
        return norm_at(r) - r

    lo = r_low + 1e-12 * max(1.0, r_low)
    if np.all(coeffs == 0) and r_low == 0:
        return np.zeros_like(g)
    if gap(lo) <= 0:
        shifted = values + 0.5 * reg * r_low
        keep = shifted > 1e-14 * max(1.0, abs(values).max())
        d = -vectors[:, keep] @ (coeffs[keep] / shifted[keep])
        tail = math.sqrt(max(r_low ** 2 - float(d @ d), 0.0))
        return d + tail * vectors[:, -1]
    hi = max(2.0 * lo, 1.0)
    while gap(hi) > 0:
        hi *= 2.0
    r = scipy.optimize.brentq(gap, lo, hi, xtol=1e-14, rtol=1e-12)
    return -vectors @ (coeffs / (values + 0.5 * reg * r))


def step_cubic(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    """Cubic-regularized Newton step with a backtracking regularizer.

    The regularizer doubles until f(x + d) <= f(x) + m(d) holds for the
    model decrease m(d), and is halved after every accepted step.
    """

    g = state.grad
    if float(g @ g) <= cfg.eps_exit and state.k > 0:
        return replace(state, converged=True)
    with PhaseTimer.profile_block("hessian"):
        h = obj.dense_hessian(state.x)
    reg = state.cubic_reg
    slack = cfg.line_search.slack * max(1.0, abs(state.f))
    for _ in range(cfg.line_search.max_backtracks + 1):
        with PhaseTimer.profile_block("direction"):
            d = cubic_subproblem(h, g, reg)
        model = float(g @ d + 0.5 * d @ (h @ d) + reg / 6.0 * np.linalg.norm(d) ** 3)
        try:
            f_new = obj.value(state.x + d)
        except (DomainViolation, NonFinite):
            f_new = math.inf
        if f_new <= state.f + model + slack:
            break
        reg *= 2.0
    else:
        raise LineSearchFailed("cubic regularizer search did not find an acceptable step.")
    if model >= 0 and f_new >= state.f:
        return replace(state, converged=True, cubic_reg=reg)
    x_new = state.x + d
    return replace(state, x=x_new, f=f_new, grad=obj.gradient(x_new), k=state.k + 1,
                   step=1.0, cubic_reg=max(reg / 2.0, 1e-12))


def step_lowrank_newton(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    rng = iteration_rng(cfg.seed, state.k)
    with PhaseTimer.profile_block("spectrum"):
        inverse = lowrank_inverse(obj, state.x, cfg, rng)
    d = -inverse.apply(state.grad)
    return _descend(state, obj, d, cfg, decrement=_decrement(state.grad, d),
                    floor=inverse.spectrum.floor)


def step_newsamp(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    if not isinstance(obj, GLMObjective):
        raise NotApplicable("newsamp needs an objective with a sum-over-samples structure.")
    rng = iteration_rng(cfg.seed, state.k)
    rows = np.sort(rng.choice(obj.samples, size=cfg.sample_rows, replace=False))
    with PhaseTimer.profile_block("spectrum"):
        inverse = newsamp_inverse(obj, state.x, rows, cfg, rng)
    d = -inverse.apply(state.grad)
    return _descend(state, obj, d, cfg, decrement=_decrement(state.grad, d),
                    floor=inverse.spectrum.floor)


def step_sigma(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    """Exact Galerkin coarse correction; resamples once on a singular reduced Hessian."""

    rng = iteration_rng(cfg.seed, state.k)
    op = _operator(state, obj, cfg, rng)
    with PhaseTimer.profile_block("hessian"):
        model = build_galerkin(obj, state.x, op)
    try:
        coarse = model.direction()
    except SingularReducedHessian:
        log.debug("singular reduced Hessian at k=%d, resampling once", state.k)
        op = sample_operator(obj.dim, cfg.coarse_dim, iteration_rng(cfg.seed, state.k, 1),
                             allow_full=cfg.allow_full)
        model = build_galerkin(obj, state.x, op)
        coarse = model.direction()
    d = op.prolong(coarse)
    return _descend(state, obj, d, cfg, decrement=_decrement(state.grad, d), operator=op)


def step_sigmasvd(state: OptimizerState, obj: Objective, cfg: MethodConfig) -> OptimizerState:
    """One iteration of SigmaSVD.

    Draws the sampled subspace, builds the reduced Hessian, floors its
    randomized rank-p spectrum, forms d = -P Q_H^{-1} R g, then exits if
    -<g, d> <= eps_exit or takes a step.
    """

    rng = iteration_rng(cfg.seed, state.k)
    op = _operator(state, obj, cfg, rng)
    inverse = sigmasvd_inverse(obj, state.x, op, cfg, rng)
    d = -inverse.apply(state.grad)
    return _descend(state, obj, d, cfg, decrement=_decrement(state.grad, d),
                    floor=inverse.spectrum.floor, operator=op)


STEPS: dict[str, Callable[[OptimizerState, Objective, MethodConfig], OptimizerState]] = {
    "gd": step_gd,
    "agd": step_agd,
    "adam": step_adam,
    "newton": step_newton,
    "cubic": step_cubic,
    "newsamp": step_newsamp,
    "lowrank": step_lowrank_newton,
    "sigma": step_sigma,
    "sigmasvd": step_sigmasvd,
}


def run(
    obj: Objective,
    x0: np.ndarray,
    cfg: MethodConfig,
    max_seconds: Optional[float] = None,
    clock: Callable[[], float] = time.perf_counter,
    keep_iterates: bool = False,
) -> IterationTrace:
    """Iterates `cfg.method` from x0 and records the trace.

    Stops on the method's exit test, on ||g|| <= grad_tol, after max_iters
    steps or max_seconds, or on failure. Failures end up in the trace
    status and message; they are never raised.
    With `keep_iterates` every x_k is kept in `trace.iterates`.

    Raises:
        ConfigError: the size parameters do not fit the objective.
    """

    cfg.check_dimensions(obj.dim, getattr(obj, "samples", None))
    trace = IterationTrace(method=cfg.name)
    start = clock()
    try:
        state = init_state(obj, x0, cfg)
    except (DomainViolation, NonFinite) as exc:
        trace.status, trace.message = "DomainError", str(exc)
        trace.x_final = np.array(x0, dtype=float)
        return trace

    trace.records.append(IterationRecord(k=0, f=state.f, grad_norm=float(np.linalg.norm(state.grad))))
    if keep_iterates:
        trace.iterates.append(state.x)
    step = STEPS[cfg.method]
    status: TraceStatus = "MaxIters"

    for _ in range(cfg.max_iters):
        if trace.final.grad_norm <= cfg.grad_tol:
            status = "Converged"
            break
        if max_seconds is not None and clock() - start > max_seconds:
            trace.message = f"time budget of {max_seconds}s exhausted"
            break
        try:
            with PhaseTimer.profile_block(cfg.name):
                new = step(state, obj, cfg)
        except (DomainViolation, NonFinite) as exc:
            status, trace.message = "DomainError", str(exc)
            break
        except SublevelError as exc:
            status, trace.message = "LineSearchFailed", f"{type(exc).__name__}: {exc}"
            break

        last = trace.final
        last.decrement, last.step, last.sigma_floor = new.decrement, new.step, new.floor
        state = new
        if new.converged:
            status = "Converged"
            break
        trace.records.append(IterationRecord(
            k=state.k, f=state.f, grad_norm=float(np.linalg.norm(state.grad)),
            elapsed_s=clock() - start))
        if keep_iterates:
            trace.iterates.append(state.x)
        log.debug("%s k=%d f=%.10e |g|=%.3e t=%.3g", cfg.name, state.k, state.f,
                  trace.final.grad_norm, new.step)

    trace.status = status
    trace.x_final = state.x
    log.info("%s finished: %s after %d iterations, f=%.10e", cfg.name, status,
             len(trace) - 1, trace.final.f)
    return trace
