"""Coarse models built from uniformly sampled coordinates.

The prolongation P holds N distinct columns of the n x n identity and the
restriction is R = P^T, so R P = I_N and P R projects onto the sampled
coordinates. The Galerkin model is the second-order model of f at x_k
restricted to range(P).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

import numpy as np
import scipy.linalg

from sublevel.errors import (
    DimensionError,
    InvalidCoarseDim,
    SingularReducedHessian,
    SublevelError,
)

if TYPE_CHECKING:
    from sublevel.problems import Objective

SeedLike = Union[int, np.random.Generator, None]


@dataclass(slots=True, frozen=True)
class SamplingOperator:
    """The prolongation/restriction pair of a sampled coarse space.

    Attributes:
        fine_dim (int): n.
        indices (ndarray): the N distinct sampled coordinates (0-based).
        seed (int, optional): seed the indices were drawn with, if any.
    """

    fine_dim: int
    indices: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.intp)
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        if indices.ndim != 1 or indices.size == 0:
            raise InvalidCoarseDim("indices must be a non-empty 1-D array.")
        if indices.size > self.fine_dim:
            raise InvalidCoarseDim(
                f"coarse dimension {indices.size} exceeds fine dimension {self.fine_dim}.")
        if np.unique(indices).size != indices.size:
            raise InvalidCoarseDim("sampled indices must be distinct.")
        if indices.min() < 0 or indices.max() >= self.fine_dim:
            raise InvalidCoarseDim(f"indices must lie in [0, {self.fine_dim}).")

    @property
    def coarse_dim(self) -> int:
        return int(self.indices.size)

    def restrict(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[0] != self.fine_dim:
            raise DimensionError(
                f"restrict expects leading dimension {self.fine_dim}, got {v.shape}.")
        return v[self.indices]

    def prolong(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.ndim == 0 or w.shape[0] != self.coarse_dim:
            raise DimensionError(
                f"prolong expects leading dimension {self.coarse_dim}, got {w.shape}.")
        out = np.zeros((self.fine_dim,) + w.shape[1:])
        out[self.indices] = w
        return out

    def prolongation(self) -> np.ndarray:
        """Dense n x N matrix P."""

        return self.prolong(np.eye(self.coarse_dim))

    def restriction(self) -> np.ndarray:
        return self.prolongation().T


def sample_operator(
    fine_dim: int,
    coarse_dim: int,
    seed: SeedLike = None,
    *,
    allow_full: bool = False,
) -> SamplingOperator:
    """Draws N of n coordinates uniformly without replacement.

    Args:
        fine_dim (int): n.
        coarse_dim (int): N, with 1 <= N < n.
        seed (int or Generator): seed or an externally owned generator.
        allow_full (bool): admit N = n, giving a random permutation.

    Raises:
        InvalidCoarseDim: N outside the admissible range.
    """

    upper = fine_dim if allow_full else fine_dim - 1
    if not 1 <= coarse_dim <= upper:
        raise InvalidCoarseDim(
            f"coarse dimension must satisfy 1 <= N {'<=' if allow_full else '<'} n = "
            f"{fine_dim}, got N = {coarse_dim}."
        )
    rng = np.random.default_rng(seed)
    # prefix of a permutation: equal seeds give nested draws for growing N
    indices = rng.permutation(fine_dim)[:coarse_dim]
    return SamplingOperator(
        fine_dim=fine_dim,
        indices=indices,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
    )


def restrict(op: SamplingOperator, v: np.ndarray) -> np.ndarray:
    return op.restrict(v)


def prolong(op: SamplingOperator, w: np.ndarray) -> np.ndarray:
    return op.prolong(w)


@dataclass(slots=True, frozen=True)
class GalerkinModel:
    """F(y) = <R g, y - y0> + 1/2 <R H P (y - y0), y - y0> built at x_k."""

    anchor: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    y0: np.ndarray

    def __post_init__(self):
        for name in ("anchor", "gradient", "hessian", "y0"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        if not np.allclose(self.hessian, self.hessian.T, rtol=0, atol=1e-10):
            raise DimensionError("reduced Hessian is not symmetric.")

    @property
    def coarse_dim(self) -> int:
        return self.gradient.shape[0]

    def value(self, y: np.ndarray) -> float:
        step = np.asarray(y, dtype=float) - self.y0
        return float(self.gradient @ step + 0.5 * step @ (self.hessian @ step))

    def grad(self, y: np.ndarray) -> np.ndarray:
        return self.gradient + self.hessian @ (np.asarray(y, dtype=float) - self.y0)

    def hess(self, y: Optional[np.ndarray] = None) -> np.ndarray:
        return np.array(self.hessian)

    def direction(self) -> np.ndarray:
        """Exact minimizer offset -[R H P]^{-1} R g of the model.

        Raises:
            SingularReducedHessian: the reduced system cannot be solved.
        """

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                step = scipy.linalg.solve(self.hessian, -self.gradient, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularReducedHessian("reduced Hessian is singular.") from exc
        if not np.all(np.isfinite(step)):
            raise SingularReducedHessian("reduced Newton system produced non-finite values.")
        return step


def build_galerkin(obj: "Objective", x: np.ndarray, op: SamplingOperator) -> GalerkinModel:
    """Galerkin coarse model of `obj` at `x` over the sampled coordinates."""

    x = np.asarray(x, dtype=float)
    return GalerkinModel(
        anchor=x,
        gradient=op.restrict(obj.gradient(x)),
        hessian=obj.reduced_hessian(x, op),
        y0=op.restrict(x),
    )


@dataclass(slots=True, frozen=True)
class CoherencyReport:
    first_order: float
    second_order: float
    passed: bool
    error: Optional[str] = None


def check_coherency(
    model: GalerkinModel,
    obj: "Objective",
    op: SamplingOperator,
    x: np.ndarray,
    first_tol: float = 1e-12,
    second_tol: float = 1e-10,
) -> CoherencyReport:
    """Measures both coherency residuals of a Galerkin model against dense derivatives.

    Never raises; evaluation failures are reported in `error`.
    """

    try:
        fine_grad = obj.gradient(x)
        dense = obj.dense_hessian(x)
    except SublevelError as exc:
        return CoherencyReport(first_order=np.nan, second_order=np.nan, passed=False,
                               error=str(exc))
    first = float(np.linalg.norm(op.restrict(fine_grad) - model.grad(model.y0)))
    projected = op.restrict(op.restrict(dense).T).T
    second = float(np.max(np.abs(projected - model.hess(model.y0)), initial=0.0))
    scale = max(1.0, float(np.linalg.norm(fine_grad)))
    return CoherencyReport(
        first_order=first,
        second_order=second,
        passed=first <= first_tol * scale and second <= second_tol,
    )
