"""Symmetric eigendecompositions, truncated spectra and low-rank inverse operators.

A `TruncatedSpectrum` keeps the p leading eigenpairs of a symmetric matrix and
replaces the rest of the spectrum by the (p+1)-th eigenvalue. `LowRankInverse`
applies the inverse of that floored matrix without forming it, either on the
full space or on a sampled coarse space through P Q_H^{-1} R.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Literal, Optional, Union

import numpy as np
import scipy.linalg

from sublevel.errors import (
    DimensionError,
    InvalidMatrix,
    NotPositiveDefinite,
    RankTooLarge,
)

if TYPE_CHECKING:
    from sublevel.coarse import SamplingOperator

SpectrumMode = Literal["convex", "truncated"]
MatrixLike = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]

DEFAULT_NU = 1e-10


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(slots=True, frozen=True)
class TruncatedSpectrum:
    """Leading eigenpairs plus the eigenvalue floor of a symmetric matrix.

    In 'convex' mode the values are stored as computed and must be positive.
    In 'truncated' mode every stored value has been mapped through
    g(x) = max(|x|, nu), which keeps the operator positive definite on
    non-convex problems.

    Attributes:
        vectors (ndarray): d x p matrix with orthonormal columns.
        values (ndarray): length-p leading eigenvalues (after g in truncated mode).
        floor (float): the (p+1)-th eigenvalue (after g in truncated mode).
        mode (str): 'convex' or 'truncated'.
        nu (float): eigenvalue threshold used by g.
    """

    vectors: np.ndarray
    values: np.ndarray
    floor: float
    mode: SpectrumMode = "convex"
    nu: float = DEFAULT_NU

    def __post_init__(self):
        object.__setattr__(self, "vectors", _readonly(self.vectors))
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "floor", float(self.floor))
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.values.shape[0]:
            raise DimensionError(
                f"vectors of shape {self.vectors.shape} do not match {self.values.shape[0]} values."
            )
        if self.mode not in ("convex", "truncated"):
            raise ValueError(f"unknown spectrum mode '{self.mode}'.")
        if self.nu <= 0:
            raise ValueError(f"nu must be positive, got {self.nu}.")
        if self.floor <= 0:
            raise NotPositiveDefinite(
                f"eigenvalue floor {self.floor:.3e} is not positive; "
                "use mode='truncated' for non-convex problems."
            )

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return self.values.shape[0]

    def dense(self) -> np.ndarray:
        """Returns the floored matrix Q = floor I + U (Sigma - floor I) U^T."""

        u = self.vectors
        return self.floor * np.eye(self.dim) + (u * (self.values - self.floor)) @ u.T

    def dense_inverse(self) -> np.ndarray:
        u = self.vectors
        return (np.eye(self.dim) / self.floor
                + (u * (1.0 / self.values - 1.0 / self.floor)) @ u.T)

    def solve(self, v: np.ndarray) -> np.ndarray:
        """Applies Q^{-1} to a vector or to the columns of a matrix."""

        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim:
            raise DimensionError(f"expected leading dimension {self.dim}, got {v.shape[0]}.")
        u = self.vectors
        scale = 1.0 / self.values - 1.0 / self.floor
        coeffs = u.T @ v
        if v.ndim == 1:
            return v / self.floor + u @ (scale * coeffs)
        return v / self.floor + u @ (scale[:, None] * coeffs)


@dataclass(slots=True, frozen=True)
class LowRankInverse:
    """Implicit inverse of a floored low-rank Hessian approximation.

    Without an operator it acts on the full space. With a `SamplingOperator`
    it acts on the fine space as P Q_H^{-1} R, where the spectrum lives on
    the N sampled coordinates.
    """

    spectrum: TruncatedSpectrum
    operator: Optional["SamplingOperator"] = None

    def __post_init__(self):
        if self.operator is not None and self.operator.coarse_dim != self.spectrum.dim:
            raise DimensionError(
                f"coarse dimension {self.operator.coarse_dim} does not match "
                f"spectrum dimension {self.spectrum.dim}."
            )

    @property
    def scope(self) -> Literal["full", "coarse"]:
        return "full" if self.operator is None else "coarse"

    @property
    def dim(self) -> int:
        return self.spectrum.dim if self.operator is None else self.operator.fine_dim

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[0] != self.dim:
            raise DimensionError(
                f"{self.scope}-space inverse expects dimension {self.dim}, got {v.shape}."
            )
        if self.operator is None:
            return self.spectrum.solve(v)
        return self.operator.prolong(self.spectrum.solve(self.operator.restrict(v)))

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim))


def _check_finite_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}.")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix contains non-finite entries.")
    return a


def dense_symmetric_eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized as (A + A^T)/2 first. Ties keep the index order
    produced by the underlying solver.

    Returns:
        tuple: (eigenvalues, eigenvectors as columns).
    """

    a = _check_finite_square(a)
    values, vectors = scipy.linalg.eigh(0.5 * (a + a.T))
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def _order(values: np.ndarray, mode: SpectrumMode) -> np.ndarray:
    key = np.abs(values) if mode == "truncated" else values
    return np.argsort(-key, kind="stable")


def floor_spectrum(
    values: np.ndarray,
    vectors: np.ndarray,
    rank: int,
    mode: SpectrumMode = "convex",
    nu: float = DEFAULT_NU,
) -> TruncatedSpectrum:
    """Keeps `rank` leading eigenpairs and floors the rest of the spectrum.

    Convex mode orders by value and requires a positive floor. Truncated mode
    orders by magnitude and maps values through g(x) = max(|x|, nu).

    Args:
        values (ndarray): at least rank+1 eigenvalues, any order.
        vectors (ndarray): matching eigenvectors as columns.
        rank (int): number p of eigenpairs to keep.
        mode (str): 'convex' or 'truncated'.
        nu (float): threshold of g.

    Raises:
        RankTooLarge: fewer than rank+1 eigenpairs were supplied.
        NotPositiveDefinite: convex mode with a non-positive floor.
    """

    values = np.asarray(values, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if rank < 1:
        raise RankTooLarge(f"rank must be at least 1, got {rank}.")
    if values.shape[0] < rank + 1:
        raise RankTooLarge(
            f"need {rank + 1} eigenpairs to floor at rank {rank}, got {values.shape[0]}."
        )
    order = _order(values, mode)
    kept, floor = values[order[:rank]], values[order[rank]]
    if mode == "truncated":
        kept = np.maximum(np.abs(kept), nu)
        floor = max(abs(floor), nu)
    elif floor <= 0:
        raise NotPositiveDefinite(
            f"sigma_(p+1) = {floor:.3e} <= 0 in convex mode; use mode='truncated'."
        )
    return TruncatedSpectrum(
        vectors=vectors[:, order[:rank]], values=kept, floor=floor, mode=mode, nu=nu)


def _as_apply(a: MatrixLike) -> Callable[[np.ndarray], np.ndarray]:
    if callable(a):
        return a
    matrix = np.asarray(a, dtype=float)
    sym = 0.5 * (matrix + matrix.T)
    return lambda block: sym @ block


def randomized_eig(
    a: MatrixLike,
    dim: int,
    k: int,
    oversample: int = 10,
    power_iters: int = 2,
    seed: Union[int, np.random.Generator, None] = None,
    mode: SpectrumMode = "convex",
) -> tuple[np.ndarray, np.ndarray]:
    """Approximates the k leading eigenpairs of a symmetric operator.

    Subspace iteration on a Gaussian test block of k + oversample columns,
    re-orthonormalized after each product, followed by a Rayleigh-Ritz step.
    Falls back to a dense decomposition when the block would cover the
    whole space.
    """

    if k > dim:
        raise RankTooLarge(f"cannot extract {k} eigenpairs from dimension {dim}.")
    apply = _as_apply(a)
    block = k + oversample
    if block >= dim:
        matrix = a if not callable(a) else apply(np.eye(dim))
        values, vectors = dense_symmetric_eig(matrix)
    else:
        rng = np.random.default_rng(seed)
        q, _ = scipy.linalg.qr(apply(rng.standard_normal((dim, block))), mode="economic")
        for _ in range(power_iters):
            q, _ = scipy.linalg.qr(apply(q), mode="economic")
        small = q.T @ apply(q)
        ritz_values, ritz_vectors = scipy.linalg.eigh(0.5 * (small + small.T))
        values, vectors = ritz_values, q @ ritz_vectors
    order = _order(values, mode)[:k]
    return values[order], vectors[:, order]


def randomized_tsvd(
    a: MatrixLike,
    dim: int,
    rank: int,
    oversample: int = 10,
    power_iters: int = 2,
    seed: Union[int, np.random.Generator, None] = None,
    mode: SpectrumMode = "convex",
    nu: float = DEFAULT_NU,
) -> TruncatedSpectrum:
    """Randomized truncated spectrum of a symmetric operator.

    Computes rank+1 eigenpairs with `randomized_eig` and floors them with
    `floor_spectrum`.

    Args:
        a (ndarray or callable): the matrix, or a function applying it to a
            d x k block.
        dim (int): dimension d.
        rank (int): number p of kept eigenpairs; requires p+1 <= d.
        oversample (int): extra test columns. Defaults to 10.
        power_iters (int): subspace iterations. Defaults to 2.
        seed: seed or generator for the Gaussian test block.
        mode (str): 'convex' or 'truncated'.
        nu (float): threshold of g in truncated mode.
    """

    if rank + 1 > dim:
        raise RankTooLarge(f"rank {rank} needs rank+1 <= dimension {dim}.")
    values, vectors = randomized_eig(
        a, dim, rank + 1, oversample=oversample, power_iters=power_iters,
        seed=seed, mode=mode)
    return floor_spectrum(values, vectors, rank, mode=mode, nu=nu)


def apply_inverse(inverse: LowRankInverse, v: np.ndarray) -> np.ndarray:
    return inverse.apply(v)


def nystrom(a: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Naive Nystrom approximation A P (P^T A P)^{-1} (A P)^T from sampled columns."""

    a = _check_finite_square(a)
    cols = a[:, indices]
    core = cols[indices, :]
    try:
        factor = scipy.linalg.cho_factor(0.5 * (core + core.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("sampled principal submatrix is not positive definite.") from exc
    return cols @ scipy.linalg.cho_solve(factor, cols.T)
