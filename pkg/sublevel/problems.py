"""Objective functions with analytic derivatives.

Every data-driven objective here is a generalized linear model

    f(x) = c * sum_i loss(a_i^T x, b_i) + reg/2 * ||x||^2,

so its Hessian is c * A^T D(x) A + reg * I. Reduced Hessians R H P are
assembled from the sampled columns of A without forming H.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.optimize
from scipy.special import expit

from sublevel.coarse import SamplingOperator
from sublevel.errors import CapExceeded, DimensionError, DomainViolation, NonFinite

ProblemKind = Literal["nls", "loglinear", "logistic", "svm", "quadratic"]

DEFAULT_DENSE_CAP = 2000


def _frozen(array, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class Objective(ABC):
    """A twice differentiable objective on R^n.

    Subclasses are immutable after construction, so evaluations are
    re-entrant and may run concurrently.
    """

    kind: ProblemKind
    dense_cap: int

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @property
    def dense_hessian_ok(self) -> bool:
        return self.dim <= self.dense_cap

    @property
    def reduced_hessian_ok(self) -> bool:
        return True

    @property
    def domain_restricted(self) -> bool:
        return False

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected a point of shape ({self.dim},), got {x.shape}.")
        return x

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def hessian_vec(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        ...

    def hessian_matmat(self, x: np.ndarray, block: np.ndarray) -> np.ndarray:
        return np.column_stack([self.hessian_vec(x, col) for col in np.asarray(block).T])

    @abstractmethod
    def _dense_hessian(self, x: np.ndarray) -> np.ndarray:
        ...

    def dense_hessian(self, x: np.ndarray) -> np.ndarray:
        """Full n x n Hessian.

        Raises:
            CapExceeded: n is above `dense_cap`.
        """

        if not self.dense_hessian_ok:
            raise CapExceeded(
                f"dense Hessian of dimension {self.dim} exceeds the cap of {self.dense_cap}.")
        return self._dense_hessian(self._check_point(x))

    @abstractmethod
    def reduced_hessian(self, x: np.ndarray, op: SamplingOperator) -> np.ndarray:
        ...


class Quadratic(Objective):
    """f(x) = 1/2 x^T H x - c^T x, used as a sanity adapter."""

    kind: ProblemKind = "quadratic"

    def __init__(self, hessian: np.ndarray, linear: Optional[np.ndarray] = None,
                 dense_cap: int = DEFAULT_DENSE_CAP):
        hessian = np.asarray(hessian, dtype=float)
        self.hessian = _frozen(0.5 * (hessian + hessian.T))
        self.linear = _frozen(np.zeros(hessian.shape[0]) if linear is None else linear)
        self.dense_cap = dense_cap

    @classmethod
    def identity(cls, n: int) -> "Quadratic":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.hessian.shape[0]

    def value(self, x):
        x = self._check_point(x)
        return float(0.5 * x @ (self.hessian @ x) - self.linear @ x)

    def gradient(self, x):
        return self.hessian @ self._check_point(x) - self.linear

    def hessian_vec(self, x, v):
        return self.hessian @ np.asarray(v, dtype=float)

    def hessian_matmat(self, x, block):
        return self.hessian @ np.asarray(block, dtype=float)

    def _dense_hessian(self, x):
        return np.array(self.hessian)

    def reduced_hessian(self, x, op):
        return self.hessian[np.ix_(op.indices, op.indices)]

    def minimizer(self) -> np.ndarray:
        return np.linalg.solve(self.hessian, self.linear)


class GLMObjective(Objective):
    """Objective of the form scale * sum_i loss(a_i^T x, b_i) + reg/2 ||x||^2.

    Subclasses provide the per-sample loss and its first two derivatives with
    respect to the margin z = a_i^T x.

    Args:
        features (ndarray): m x n data matrix A.
        labels (ndarray): length-m labels b.
        reg (float): coefficient of the ||x||^2 / 2 term.
        dense_cap (int): largest n for which a dense Hessian may be formed.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, reg: float = 0.0,
                 dense_cap: int = DEFAULT_DENSE_CAP):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise DimensionError(
                f"features {features.shape} and labels {labels.shape} do not match.")
        if reg < 0:
            raise ValueError(f"regularization must be non-negative, got {reg}.")
        self.features = _frozen(features)
        self.labels = _frozen(labels)
        self.reg = float(reg)
        self.dense_cap = dense_cap

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def samples(self) -> int:
        return self.features.shape[0]

    @property
    @abstractmethod
    def scale(self) -> float:
        ...

    @abstractmethod
    def _loss(self, z: np.ndarray, b: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _d1(self, z: np.ndarray, b: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _d2(self, z: np.ndarray, b: np.ndarray) -> np.ndarray:
        ...

    def _margins(self, x: np.ndarray, rows: Optional[np.ndarray] = None) -> np.ndarray:
        x = self._check_point(x)
        a = self.features if rows is None else self.features[rows]
        return a @ x

    def _labels(self, rows: Optional[np.ndarray] = None) -> np.ndarray:
        return self.labels if rows is None else self.labels[rows]

    def value(self, x):
        x = self._check_point(x)
        total = self.scale * float(np.sum(self._loss(self._margins(x), self.labels)))
        total += 0.5 * self.reg * float(x @ x)
        if not np.isfinite(total):
            raise NonFinite(f"{self.kind} objective overflowed.")
        return total

    def gradient(self, x):
        x = self._check_point(x)
        weights = self._d1(self._margins(x), self.labels)
        return self.scale * (self.features.T @ weights) + self.reg * x

    def curvature(self, x: np.ndarray, rows: Optional[np.ndarray] = None) -> np.ndarray:
        """Diagonal D(x) of the Hessian factorization, one weight per sample."""

        return self._d2(self._margins(x, rows), self._labels(rows))

    def hessian_vec(self, x, v):
        v = np.asarray(v, dtype=float)
        d = self.curvature(x)
        return self.scale * (self.features.T @ (d * (self.features @ v))) + self.reg * v

    def hessian_matmat(self, x, block):
        block = np.asarray(block, dtype=float)
        d = self.curvature(x)
        return (self.scale * (self.features.T @ (d[:, None] * (self.features @ block)))
                + self.reg * block)

    def _gram(self, columns: np.ndarray, d: np.ndarray, scale: float) -> np.ndarray:
        gram = scale * (columns.T * d) @ columns
        gram = 0.5 * (gram + gram.T)
        gram[np.diag_indices_from(gram)] += self.reg
        return gram

    def _dense_hessian(self, x):
        return self._gram(self.features, self.curvature(x), self.scale)

    def reduced_hessian(self, x, op):
        """R H P = scale * A_S^T D A_S + reg I_N from the sampled columns A_S."""

        if op.fine_dim != self.dim:
            raise DimensionError(f"operator acts on R^{op.fine_dim}, objective on R^{self.dim}.")
        return self._gram(self.features[:, op.indices], self.curvature(x), self.scale)

    def subsampled_hessian(self, x: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Hessian estimated from a subset of samples, rescaled to the full sum."""

        rows = np.asarray(rows, dtype=np.intp)
        scale = self.scale * self.samples / rows.size
        return self._gram(self.features[rows], self.curvature(x, rows), scale)


class NonlinearLeastSquares(GLMObjective):
    """(1/m) sum_i (b_i - phi(a_i^T x))^2 with the sigmoid phi(w) = 1/(1 + e^{-w})."""

    kind: ProblemKind = "nls"

    @property
    def scale(self):
        return 1.0 / self.samples

    def _loss(self, z, b):
        return (b - expit(z)) ** 2

    def _d1(self, z, b):
        phi = expit(z)
        return -2.0 * (b - phi) * phi * (1.0 - phi)

    def _d2(self, z, b):
        phi = expit(z)
        slope = phi * (1.0 - phi)
        return 2.0 * (slope ** 2 - (b - phi) * slope * (1.0 - 2.0 * phi))


class LogLinear(GLMObjective):
    """Self-concordant barrier -sum_i log(b_i - a_i^T x) on {x : A x < b}."""

    kind: ProblemKind = "loglinear"

    @property
    def domain_restricted(self):
        return True

    @property
    def scale(self):
        return 1.0

    def _slack(self, z, b):
        slack = b - z
        if not np.all(slack > 0):
            raise DomainViolation(
                f"point leaves the domain: {int(np.sum(slack <= 0))} slack(s) non-positive.")
        return slack

    def _loss(self, z, b):
        return -np.log(self._slack(z, b))

    def _d1(self, z, b):
        return 1.0 / self._slack(z, b)

    def _d2(self, z, b):
        return 1.0 / self._slack(z, b) ** 2

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(self.labels - self._margins(x) > 0))


class Logistic(GLMObjective):
    """(1/m) sum_i log(1 + exp(-b_i a_i^T x)) + l/2 ||x||^2 with labels in {-1, +1}."""

    kind: ProblemKind = "logistic"

    @property
    def scale(self):
        return 1.0 / self.samples

    def _loss(self, z, b):
        return np.logaddexp(0.0, -b * z)

    def _d1(self, z, b):
        return -b * expit(-b * z)

    def _d2(self, z, b):
        return expit(b * z) * expit(-b * z) * b ** 2


class SvmHinge2(GLMObjective):
    """1/2 ||x||^2 + l/2 sum_i max(0, 1 - b_i a_i^T x)^2.

    The second derivative is taken almost everywhere: the active set is
    {i : 1 - b_i a_i^T x > 0} and the kink set is ignored.
    """

    kind: ProblemKind = "svm"

    def __init__(self, features, labels, penalty: float, dense_cap: int = DEFAULT_DENSE_CAP):
        super().__init__(features, labels, reg=1.0, dense_cap=dense_cap)
        if penalty <= 0:
            raise ValueError(f"hinge-2 penalty must be positive, got {penalty}.")
        self.penalty = float(penalty)

    @property
    def scale(self):
        return 0.5 * self.penalty

    def _loss(self, z, b):
        return np.maximum(0.0, 1.0 - b * z) ** 2

    def _d1(self, z, b):
        return -2.0 * b * np.maximum(0.0, 1.0 - b * z)

    def _d2(self, z, b):
        return np.where(1.0 - b * z > 0, 2.0 * b ** 2, 0.0)


def make_objective(
    kind: ProblemKind,
    features: np.ndarray,
    labels: np.ndarray,
    reg: float = 0.0,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> GLMObjective:
    """Builds a data-driven objective by kind name.

    `reg` is the l2 coefficient for 'logistic' and the hinge penalty for 'svm';
    it is ignored by 'nls' and 'loglinear'.
    """

    match kind:
        case "nls":
            return NonlinearLeastSquares(features, labels, dense_cap=dense_cap)
        case "loglinear":
            return LogLinear(features, labels, dense_cap=dense_cap)
        case "logistic":
            return Logistic(features, labels, reg=reg, dense_cap=dense_cap)
        case "svm":
            return SvmHinge2(features, labels, penalty=reg, dense_cap=dense_cap)
    raise ValueError(f"unknown problem kind '{kind}'.")


Distribution = Literal["gaussian", "loglinear", "saddle"]


@dataclass(slots=True, frozen=True)
class SyntheticSpec:
    """Recipe for a reproducible synthetic dataset.

    Attributes:
        m (int): number of samples.
        n (int): number of features.
        distribution (str): 'gaussian' (standard normal features, +/-1 labels
            from a planted logistic model), 'loglinear' (barrier data with
            labels in [1, 1 + width)) or 'saddle' (NLS data with a planted
            strict saddle).
        seed (int): generator seed.
        width (float): spread of the loglinear labels above 1.
        depth (float): plateau margin at the saddle.
        informative (int): number k of coordinates carrying the saddle.
        escape_size (float): a coordinate subspace sees negative curvature at
            the saddle iff it holds more than this many informative coordinates.
        offset (float): shift of the probe from the saddle, per informative
            coordinate, towards the minimum basin.
    """

    m: int
    n: int
    distribution: Distribution = "gaussian"
    seed: int = 0
    width: float = 0.2
    depth: float = 12.0
    informative: int = 10
    escape_size: float = 2.5
    offset: float = 1e-4

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"m and n must be positive, got m={self.m}, n={self.n}.")
        if self.distribution not in ("gaussian", "loglinear", "saddle"):
            raise ValueError(f"unknown distribution '{self.distribution}'.")
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}.")
        if self.distribution == "saddle":
            if not 1 <= self.informative <= self.n:
                raise ValueError(f"informative must lie in [1, n = {self.n}], got {self.informative}.")
            if not 0 < self.escape_size < self.informative:
                raise ValueError(f"escape_size must lie in (0, informative = {self.informative}), "
                                 f"got {self.escape_size}.")
            if self.m - max(self.m // 5, 1) < self.informative:
                raise ValueError(f"m = {self.m} leaves no confinement rows for "
                                 f"{self.informative} informative coordinates.")
            if self.depth <= 0:
                raise ValueError(f"depth must be positive, got {self.depth}.")


@dataclass(slots=True, frozen=True)
class SyntheticData:
    features: np.ndarray
    labels: np.ndarray
    probe: Optional[np.ndarray] = None


def _nls_curvature(z: float, b: float) -> float:
    phi = expit(z)
    slope = phi * (1.0 - phi)
    return 2.0 * (slope ** 2 - (b - phi) * slope * (1.0 - 2.0 * phi))


def _planted_saddle(spec: SyntheticSpec, rng: np.random.Generator) -> SyntheticData:
    """NLS data whose objective has a strict saddle on k random coordinates.

    A fifth of the rows ('plateau' rows) have ones on the k informative
    coordinates and label 1. At the saddle their margin is -depth, where they
    contribute a small gradient and a negative rank-one curvature -mu u u^T
    along u = 1/sqrt(k). Every informative coordinate also owns an equal share
    of 'confinement' rows holding a single entry beta. Their labels cancel the
    plateau gradient and their curvature is c = mu * escape_size / k. All
    other rows and columns are zero.

    The informative block of the Hessian at the saddle is c I - mu u u^T, so
    its restriction to a coordinate set T is indefinite iff |T| > escape_size.
    Raising the informative coordinates by about depth / k each crosses the
    plateau into a basin where f is orders of magnitude lower.
    """

    m, n, k = spec.m, spec.n, spec.informative
    support = np.sort(rng.choice(n, size=k, replace=False))
    plateau = max(m // 5, 1)
    share = (m - plateau) // k
    tau = spec.depth / k

    phi = expit(-spec.depth)
    pull = plateau * (1.0 - phi) * phi * (1.0 - phi)
    target = -spec.escape_size * plateau * _nls_curvature(-spec.depth, 1.0)

    def confinement(beta: float) -> tuple[float, float]:
        phi_c = expit(-beta * tau)
        label = phi_c - pull / (share * beta * phi_c * (1.0 - phi_c))
        return label, share * beta ** 2 * _nls_curvature(-beta * tau, label)

    # beta * phi'(beta * tau) increases on (0, 1/tau]
    upper = 1.0 / tau
    if confinement(upper)[1] <= target:
        raise ValueError(f"no confinement reaches the requested curvature at depth {spec.depth}.")
    beta = scipy.optimize.brentq(lambda b: confinement(b)[1] - target, 1e-12 * upper, upper, xtol=1e-15)
    label = confinement(beta)[0]
    if not 0.0 <= label <= 1.0:
        raise ValueError(f"confinement label {label:.3e} outside [0, 1] at depth {spec.depth}.")

    features = np.zeros((m, n))
    labels = np.full(m, 0.5)
    features[:plateau, support] = 1.0
    labels[:plateau] = 1.0
    for j, column in enumerate(support):
        rows = slice(plateau + j * share, plateau + (j + 1) * share)
        features[rows, column] = beta
        labels[rows] = label

    probe = np.zeros(n)
    probe[support] = -tau + spec.offset
    return SyntheticData(_frozen(features), _frozen(labels), _frozen(probe))


def generate_synthetic(spec: SyntheticSpec) -> SyntheticData:
    """Generates the features and labels described by `spec`.

    For 'loglinear' with m > n the Gaussian columns are centred and
    orthonormalized, then scaled so that A^T A = m I and A^T 1 = 0. With
    labels in [1, 1 + width) the barrier is well conditioned around the
    strictly feasible point x = 0. For 'saddle' see `_planted_saddle`;
    `probe` is the start point next to the saddle.
    """

    rng = np.random.default_rng(spec.seed)
    if spec.distribution == "saddle":
        return _planted_saddle(spec, rng)
    features = rng.standard_normal((spec.m, spec.n))

    if spec.distribution == "loglinear":
        if spec.m > spec.n:
            basis, _ = np.linalg.qr(features - features.mean(axis=0))
            features = np.sqrt(spec.m) * basis
        labels = 1.0 + spec.width * rng.random(spec.m)
        return SyntheticData(_frozen(features), _frozen(labels))

    planted = rng.standard_normal(spec.n) / np.sqrt(spec.n)
    prob = expit(features @ planted * 2.0)
    labels = np.where(rng.random(spec.m) < prob, 1.0, -1.0)
    return SyntheticData(_frozen(features), _frozen(labels))


def objective_from_spec(kind: ProblemKind, spec: SyntheticSpec, reg: float = 0.0,
                        dense_cap: int = DEFAULT_DENSE_CAP) -> GLMObjective:
    """Shortcut: generate synthetic data and wrap it in an objective.

    Labels are mapped to the convention of the objective kind. Saddle data
    is built for 'nls' only.
    """

    if spec.distribution == "saddle" and kind != "nls":
        raise ValueError(f"saddle data needs kind 'nls', got '{kind}'.")
    data = generate_synthetic(spec)
    labels = np.array(data.labels)
    if kind == "nls" and spec.distribution == "gaussian":
        labels = (labels + 1.0) / 2.0
    return make_objective(kind, data.features, labels, reg=reg, dense_cap=dense_cap)


def value(obj: Objective, x: np.ndarray) -> float:
    return obj.value(x)


def gradient(obj: Objective, x: np.ndarray) -> np.ndarray:
    return obj.gradient(x)


def hessian_vec(obj: Objective, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    return obj.hessian_vec(x, v)


def dense_hessian(obj: Objective, x: np.ndarray) -> np.ndarray:
    return obj.dense_hessian(x)


def reduced_hessian(obj: Objective, x: np.ndarray, op: SamplingOperator) -> np.ndarray:
    return obj.reduced_hessian(x, op)
