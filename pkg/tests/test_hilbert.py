import math

import numpy as np
import pytest
from scipy.special import gammaln

from mechqsr import hilbert
from mechqsr.errors import TruncationError
from mechqsr.hilbert import (DensityMatrix, displacement_matrix, make_state, ordered_moment,
                             parity_expectation)
from oracles import displacement_expm


def assert_valid(rho):
    assert np.abs(rho.elements - rho.elements.conj().T).max() < 1e-12
    assert 1 - rho.truncation_deficit - 1e-12 <= np.trace(rho.elements).real <= 1 + 1e-12
    assert np.linalg.eigvalsh(rho.elements)[0] > -1e-10


@pytest.mark.parametrize("kind,params,dim", [
    ("fock", {"n": 3}, 6),
    ("coherent", {"alpha": 1.2 - 0.4j}, None),
    ("cat", {"beta": 1.7j}, 32),
    ("thermal", {"nbar": 0.5}, 40),
    ("squeezed", {"r": 0.5}, 80),
])
def test_constructors_produce_valid_states(kind, params, dim):
    rho = make_state(kind, dim, **params)
    assert_valid(rho)
    assert rho.truncation_deficit < 1e-8


def test_coherent_zero_is_vacuum():
    rho = make_state("coherent", dim=8, alpha=0)
    expected = np.zeros((8, 8))
    expected[0, 0] = 1
    np.testing.assert_allclose(rho.elements, expected, atol=1e-15)


def test_cat_state_mean_number():
    rho = make_state("cat", dim=32, beta=1.7j)
    b2 = 1.7 ** 2
    # even cat: <n> = |b|^2 tanh |b|^2
    assert rho.mean_number() == pytest.approx(b2 * math.tanh(b2), abs=1e-10)
    assert np.all(np.abs(np.diag(rho.elements)[1::2]) < 1e-15)


def test_thermal_populations_and_deficit():
    nbar, dim = 0.5, 40
    rho = make_state("thermal", dim=dim, nbar=nbar)
    n = np.arange(dim)
    expected = nbar ** n / (1 + nbar) ** (n + 1)
    # geometric series oracle for the mass beyond the cutoff
    tail = 1.0 - math.fsum(expected)
    assert rho.truncation_deficit == pytest.approx(tail, abs=1e-15)
    assert rho.truncation_deficit < 1e-8
    np.testing.assert_allclose(np.diag(rho.elements).real, expected / expected.sum(), rtol=1e-12)


def test_squeezed_vacuum_variance():
    r = 0.6
    rho = make_state("squeezed", dim=120, r=r)
    x = hilbert.quadrature(0.0, 121)
    big = rho.padded(121)
    var_x = np.trace(big @ x @ x).real
    assert var_x == pytest.approx(math.exp(-2 * r) / 2, rel=1e-8)


def test_truncation_error_when_dim_too_small():
    with pytest.raises(TruncationError):
        make_state("coherent", dim=5, alpha=2.0)
    with pytest.raises(TruncationError):
        make_state("fock", dim=3, n=3)


@pytest.mark.parametrize("dim", [0, -2, 2.5])
def test_bad_dim_rejected(dim):
    with pytest.raises(ValueError):
        make_state("fock", dim=dim, n=0)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.1j], [0.1j, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.4]))


def test_density_matrix_is_immutable(vacuum):
    with pytest.raises(ValueError):
        vacuum.elements[0, 0] = 0.0


def test_displacement_identity():
    np.testing.assert_allclose(displacement_matrix(0, 12), np.eye(12), atol=1e-15)


def test_displacement_column_is_coherent_state():
    alpha = 0.9 - 1.3j
    d = displacement_matrix(alpha, 30)
    n = np.arange(30)
    coh = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(alpha + 0j) - 0.5 * gammaln(n + 1))
    np.testing.assert_allclose(d[:, 0], coh, atol=1e-14)


@pytest.mark.parametrize("alpha", [0.4 + 0.3j, 1.5 - 1j, -2j, 4 + 3j])
def test_displacement_matches_matrix_exponential(alpha):
    np.testing.assert_allclose(displacement_matrix(alpha, 40), displacement_expm(alpha, 40),
                               atol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.2j, -1.5 + 1.3j, 2.0])
def test_displacement_inverse(alpha):
    dim = 80
    prod = displacement_matrix(alpha, dim) @ displacement_matrix(-alpha, dim)
    # the product of truncated matrices drops paths through levels >= dim; check the
    # block well below the cutoff
    assert np.abs(prod[:20, :20] - np.eye(20)).max() < 1e-10


@pytest.mark.parametrize("a,b", [(0.3 + 0.2j, -0.5 + 0.7j), (1.0, 1j), (-0.8j, 0.6 - 0.1j)])
def test_displacement_group_law(a, b):
    dim = 90
    lhs = displacement_matrix(a, dim) @ displacement_matrix(b, dim)
    rhs = np.exp((a * np.conj(b) - np.conj(a) * b) / 2) * displacement_matrix(a + b, dim)
    assert np.abs(lhs - rhs)[:25, :25].max() < 1e-10


def test_quadrature_operators():
    dim = 10
    a = hilbert.annihilation(dim)
    np.testing.assert_allclose(hilbert.quadrature(0, dim), (a + a.T) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(hilbert.quadrature(math.pi / 2, dim), 1j * (a.T - a) / math.sqrt(2),
                               atol=1e-15)


def test_parity_expectation_values(vacuum, fock1):
    assert parity_expectation(vacuum) == 1.0
    assert parity_expectation(fock1) == -1.0
    coh = make_state("coherent", alpha=1.0)
    # Poisson-weighted alternating series
    terms = [(-1) ** n * math.exp(-1) / math.factorial(n) for n in range(60)]
    assert parity_expectation(coh) == pytest.approx(math.fsum(terms), abs=1e-12)
    assert parity_expectation(coh) == pytest.approx(math.exp(-2), abs=1e-12)


def test_parity_matches_operator_trace(cat17, thermal05):
    for rho in (cat17, thermal05):
        direct = np.trace(rho.elements @ hilbert.parity(rho.dim)).real
        assert parity_expectation(rho) == pytest.approx(direct, abs=1e-12)


def test_ordered_moments(vacuum):
    assert ordered_moment(vacuum, 1, 1, "antinormal") == pytest.approx(1.0)
    assert ordered_moment(vacuum, 1, 1, "normal") == pytest.approx(0.0)
    alpha = 0.7 - 0.2j
    coh = make_state("coherent", alpha=alpha)
    assert ordered_moment(coh, 1, 0, "normal") == pytest.approx(alpha, abs=1e-12)
    assert ordered_moment(coh, 2, 1, "normal") == pytest.approx(alpha ** 2 * np.conj(alpha), abs=1e-12)


def test_symmetric_moment_of_thermal_state():
    rho = make_state("thermal", dim=60, nbar=1.0)
    # trace oracle: (a^dag a + a a^dag)/2 = n + 1/2
    n_op = hilbert.number(61)
    big = rho.padded(61)
    oracle = np.trace(big @ n_op).real + 0.5
    assert ordered_moment(rho, 1, 1, "symmetric").real == pytest.approx(oracle, abs=1e-10)
    assert oracle == pytest.approx(1.5, abs=1e-8)


def test_moment_order_limit(vacuum):
    with pytest.raises(TruncationError):
        ordered_moment(vacuum, 2, 1, "normal")
    with pytest.raises(ValueError):
        ordered_moment(make_state("fock", dim=20, n=1), 1, 1, "weyl")
