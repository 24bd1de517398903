import numpy as np
import pytest

from g2kernels.automorphisms import AutomorphismMap, G2Point, MoebiusMap, symmetrize
from g2kernels.curvature import bergman_curvature, bergman_curvature_on_lambda, curvature_numeric
from g2kernels.errors import DomainError, NumericalError
from g2kernels.homogeneity import (
    MultiplierSpec,
    ResidualReport,
    curvature_criterion,
    default_multiplier,
    factorization_test,
    factorization_trials,
    multiplier_log,
    propagate_curvature,
    quasi_invariance_residual,
    quasi_invariance_trials,
    reconstruct_from_fundamental,
)
from g2kernels.kernels import (
    DetCurvature,
    Power,
    Product,
    SymmetricC,
    WeightedBergman,
    as_kernel_function,
    eval_kernel,
)


def test_default_multipliers():
    assert default_multiplier(WeightedBergman(2.0)) == MultiplierSpec(1.5)
    assert default_multiplier(SymmetricC(3.0)) == MultiplierSpec(1.5)
    assert default_multiplier(DetCurvature(1.0, 0.0)) == MultiplierSpec(4.0, 1.0)
    assert default_multiplier(Power(WeightedBergman(1.0), 2.0)) == MultiplierSpec(2.0)
    prod = Product((WeightedBergman(1.0), SymmetricC(2.0)))
    assert default_multiplier(prod) == MultiplierSpec(2.0)


def test_multiplier_spec_arithmetic():
    m = MultiplierSpec(1.0, 0.5) + MultiplierSpec(2.0)
    assert m == MultiplierSpec(3.0, 0.5)
    assert m.scaled(2.0) == MultiplierSpec(6.0, 1.0)
    with pytest.raises(DomainError):
        MultiplierSpec(float("nan"))


def test_multiplier_log_vanishes_at_identity():
    ident = AutomorphismMap(MoebiusMap(-1.0, 0j))
    u1 = np.array([0.1 + 0.2j, -0.5])
    u2 = np.array([0.05j, 0.2])
    assert np.max(np.abs(multiplier_log(MultiplierSpec(1.5, 1.0), ident, u1, u2))) == 0.0


def test_residual_report_merge():
    p = G2Point(0j, 0j)
    a = ResidualReport(1e-3, (p, p), 3, None)
    b = ResidualReport(1e-5, (p, p), 4, None)
    assert a.merge(b) == b.merge(a)
    assert a.merge(b).max_relative_residual == 1e-3
    assert a.merge(b).trials == 7


@pytest.mark.parametrize("lam", [1.0, 2.5])
def test_bergman_quasi_invariance(lam):
    spec = WeightedBergman(lam)
    rep = quasi_invariance_trials(spec, default_multiplier(spec), n=50, seed=0)
    assert rep.max_relative_residual <= 1e-9
    assert rep.trials == 50


def test_wrong_exponent_fails():
    rep = quasi_invariance_trials(WeightedBergman(1.0), MultiplierSpec(0.5), n=50, seed=0)
    assert rep.max_relative_residual >= 1e-3


@pytest.mark.parametrize(
    "spec",
    [
        SymmetricC(2.0),
        Power(WeightedBergman(1.0), 0.7),
        Product((WeightedBergman(1.0), WeightedBergman(2.0))),
    ],
    ids=["symC", "power", "product"],
)
def test_other_families_quasi_invariant(spec):
    rep = quasi_invariance_trials(spec, default_multiplier(spec), n=20, seed=1)
    assert rep.max_relative_residual <= 1e-9


def test_det_curvature_quasi_invariant():
    spec = DetCurvature(1.0, 0.0)
    rep = quasi_invariance_trials(spec, default_multiplier(spec), n=5, seed=2)
    assert rep.max_relative_residual <= 1e-8


def test_residual_with_explicit_pairs():
    g = AutomorphismMap(MoebiusMap(1.0, 0.4 + 0j))
    pairs = [(symmetrize(0.1, 0.2), symmetrize(-0.3j, 0.5)), (symmetrize(0.0, 0.0), symmetrize(0.6, 0.6))]
    ok = quasi_invariance_residual(WeightedBergman(1.0), MultiplierSpec(1.0), g, pairs)
    bad = quasi_invariance_residual(WeightedBergman(1.0), MultiplierSpec(0.5), g, pairs)
    assert ok.max_relative_residual < 1e-12
    assert bad.max_relative_residual >= 1e-3
    assert ok.trials == 2


def test_sum_of_kernels_fails_factorization():
    # a sum of two quasi-invariant kernels with different multipliers
    f1 = as_kernel_function(WeightedBergman(1.0))
    f2 = as_kernel_function(WeightedBergman(2.0))

    def K(u1, u2, v1, v2):
        return f1(u1, u2, v1, v2) + f2(u1, u2, v1, v2)

    assert factorization_trials(K, n=20, seed=0).max_relative_residual > 1e-3
    assert factorization_trials(WeightedBergman(1.5), n=20, seed=0).max_relative_residual < 1e-9


def test_factorization_vanishing_kernel():
    def K(u1, u2, v1, v2):
        return np.zeros(np.broadcast(u1, v1).shape, dtype=complex)

    g = AutomorphismMap(MoebiusMap(1.0, 0.3 + 0j))
    with pytest.raises(NumericalError):
        factorization_test(K, g, [(symmetrize(0.1, 0.2), symmetrize(0.3, 0.0))])


def test_curvature_criterion_closed_and_numeric():
    grid = [0.1, 0.3, 0.5, 0.7, 0.9]
    assert curvature_criterion(WeightedBergman(1.0), grid, "closed").max_relative_residual <= 1e-8
    assert curvature_criterion(WeightedBergman(2.0), grid, "numeric").max_relative_residual <= 1e-5


def test_curvature_criterion_control():
    # a kernel on G2 that is not quasi-invariant
    def K(u1, u2, v1, v2):
        return np.exp(u1 * np.conj(v1) + 3 * u2 * np.conj(v2))

    assert curvature_criterion(K, [0.3, 0.6], "numeric").max_relative_residual > 1e-2


def test_curvature_criterion_errors():
    with pytest.raises(DomainError):
        curvature_criterion(WeightedBergman(1.0), [0.99])
    with pytest.raises(DomainError):
        curvature_criterion(SymmetricC(1.0), [0.5], "closed")
    with pytest.raises(DomainError):
        curvature_criterion(WeightedBergman(1.0), [])


@pytest.mark.parametrize("lam", [1.0, 2.0])
def test_reconstruct_from_fundamental(lam):
    spec = WeightedBergman(lam)

    def on_lambda(r):
        return eval_kernel(spec, (r, 0), (r, 0)).real

    for z in [(0.3 + 0.2j, -0.5j), (0.4, 0.4), (0.0, 0.0), (0.7, -0.1 + 0.3j)]:
        u = symmetrize(*z)
        got = reconstruct_from_fundamental(on_lambda, default_multiplier(spec), u)
        assert got == pytest.approx(eval_kernel(spec, u, u).real, rel=1e-10)


def test_reconstruct_detects_wrong_multiplier():
    spec = WeightedBergman(1.0)
    u = symmetrize(0.3 + 0.2j, -0.5j)

    def on_lambda(r):
        return eval_kernel(spec, (r, 0), (r, 0)).real

    got = reconstruct_from_fundamental(on_lambda, MultiplierSpec(0.5), u, check=False)
    assert abs(got / eval_kernel(spec, u, u).real - 1) > 1e-2


def test_propagate_curvature():
    u = symmetrize(0.2 - 0.3j, 0.6)
    K = propagate_curvature(lambda r: bergman_curvature_on_lambda(2.0, r), u)
    assert K.error_estimate < 1e-12
    num = curvature_numeric(WeightedBergman(2.0), u).entries
    assert np.max(np.abs(K.entries - num)) / np.max(np.abs(num)) < 1e-6
    assert np.allclose(K.entries, bergman_curvature(2.0, u).entries, rtol=1e-13)
