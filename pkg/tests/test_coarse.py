import numpy as np
import pytest

from sublevel.coarse import (
    GalerkinModel,
    SamplingOperator,
    build_galerkin,
    check_coherency,
    prolong,
    restrict,
    sample_operator,
)
from sublevel.errors import DimensionError, InvalidCoarseDim, SingularReducedHessian


def test_restriction_times_prolongation_is_identity():
    op = sample_operator(20, 7, seed=0)
    np.testing.assert_array_equal(op.restriction() @ op.prolongation(), np.eye(7))


def test_indices_are_distinct_and_seeded():
    first = sample_operator(50, 20, seed=11)
    second = sample_operator(50, 20, seed=11)
    assert np.unique(first.indices).size == 20
    np.testing.assert_array_equal(first.indices, second.indices)
    assert first.seed == 11


@pytest.mark.parametrize("coarse_dim", [0, 10, 11])
def test_invalid_coarse_dim(coarse_dim):
    with pytest.raises(InvalidCoarseDim):
        sample_operator(10, coarse_dim, seed=0)


def test_full_coarse_dim_is_a_permutation():
    op = sample_operator(10, 10, seed=3, allow_full=True)
    np.testing.assert_array_equal(np.sort(op.indices), np.arange(10))


def test_duplicate_indices_rejected():
    with pytest.raises(InvalidCoarseDim):
        SamplingOperator(5, np.array([1, 1]))


def test_restrict_and_prolong(rng):
    op = SamplingOperator(5, np.array([4, 1]))
    v = np.arange(5.0)
    np.testing.assert_array_equal(restrict(op, v), [4.0, 1.0])
    np.testing.assert_array_equal(prolong(op, np.array([7.0, 8.0])), [0.0, 8.0, 0.0, 0.0, 7.0])
    block = prolong(op, np.ones((2, 3)))
    assert block.shape == (5, 3)
    with pytest.raises(DimensionError):
        restrict(op, np.ones(4))


def test_reduced_hessian_is_principal_submatrix(logistic, rng):
    x = 0.1 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, 8, seed=5)
    dense = logistic.dense_hessian(x)
    np.testing.assert_allclose(logistic.reduced_hessian(x, op), dense[np.ix_(op.indices, op.indices)],
                               atol=1e-12)


def test_galerkin_model_at_anchor(logistic, rng):
    x = 0.1 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, 8, seed=6)
    model = build_galerkin(logistic, x, op)
    assert model.value(model.y0) == 0.0
    np.testing.assert_allclose(model.grad(model.y0), op.restrict(logistic.gradient(x)))
    step = model.direction()
    np.testing.assert_allclose(model.hess() @ step, -model.gradient, atol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_coherency(logistic, seed):
    """The Galerkin model matches the restricted derivatives of f."""
    rng = np.random.default_rng(seed)
    x = 0.2 * rng.standard_normal(logistic.dim)
    op = sample_operator(logistic.dim, int(rng.integers(1, logistic.dim)), seed=seed)
    report = check_coherency(build_galerkin(logistic, x, op), logistic, op, x)
    assert report.passed
    assert report.first_order <= 1e-12 and report.second_order <= 1e-10


def test_singular_reduced_hessian():
    model = GalerkinModel(anchor=np.zeros(2), gradient=np.ones(2), hessian=np.zeros((2, 2)),
                          y0=np.zeros(2))
    with pytest.raises(SingularReducedHessian):
        model.direction()


def test_ill_conditioned_reduced_hessian():
    model = GalerkinModel(anchor=np.zeros(2), gradient=np.array([1.0, 0.0]),
                          hessian=np.array([[1.0, 1.0], [1.0, np.nextafter(1.0, 2.0)]]), y0=np.zeros(2))
    with pytest.raises(SingularReducedHessian):
        model.direction()
