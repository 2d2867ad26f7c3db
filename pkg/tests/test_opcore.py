import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from quadspec.opcore import (
    AntilinearOperator,
    DimensionError,
    NonFiniteError,
    ToleranceConfig,
    anticommutator,
    as_operator,
    commutator,
    identity,
    matrix_exponential,
    operator_norm,
)

S1 = np.array([[0, 1], [1, 0]], dtype=complex)
S2 = np.array([[0, -1j], [1j, 0]])
S3 = np.diag([1.0, -1.0]).astype(complex)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def complex_square(draw, max_dim=5):
    n = draw(st.integers(1, max_dim))
    re = draw(arrays(float, (n, n), elements=finite))
    im = draw(arrays(float, (n, n), elements=finite))
    return re + 1j * im


@st.composite
def complex_pair(draw, max_dim=5):
    n = draw(st.integers(1, max_dim))
    mats = []
    for _ in range(2):
        re = draw(arrays(float, (n, n), elements=finite))
        im = draw(arrays(float, (n, n), elements=finite))
        mats.append(re + 1j * im)
    return mats


def test_commutator_examples():
    b = np.arange(4.0).reshape(2, 2)
    assert np.allclose(commutator(np.eye(2), b), 0)
    assert np.allclose(commutator(S1, S2), 2j * S3)
    assert np.allclose(commutator(np.diag([1.0, 2.0]), np.diag([3.0, -1.0])), 0)


def test_anticommutator_examples():
    b = np.arange(4.0).reshape(2, 2)
    assert np.allclose(anticommutator(S1, S2), 0)
    assert np.allclose(anticommutator(np.eye(2), b), 2 * b)
    assert np.allclose(anticommutator(S1, S1), 2 * np.eye(2))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        anticommutator(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        as_operator(np.ones((2, 3)))


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        as_operator([[np.nan, 0], [0, 1]])
    with pytest.raises(NonFiniteError):
        matrix_exponential(np.array([[np.inf, 0], [0, 1]]))


def test_operator_norm_examples():
    assert operator_norm(np.zeros((3, 3))) == 0.0
    u = matrix_exponential(S2, 0.7j)
    assert operator_norm(u) == pytest.approx(1.0, abs=1e-14)
    assert operator_norm(np.diag([3, -4j])) == pytest.approx(4.0, abs=1e-14)


def test_matrix_exponential_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(matrix_exponential(a, 0), np.eye(2), atol=1e-15)
    d = np.array([0.5, -1.0, 2.0j])
    assert np.allclose(matrix_exponential(np.diag(d), 0.3), np.diag(np.exp(0.3 * d)), atol=1e-15)
    th = 0.81
    rot = np.cos(th) * np.eye(2) + 1j * np.sin(th) * S2
    assert np.allclose(matrix_exponential(S2, 1j * th), rot, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(complex_pair())
def test_commutator_norm_bound(pair):
    a, b = pair
    assert operator_norm(commutator(a, b)) <= 2 * operator_norm(a) * operator_norm(b) * (1 + 1e-12) + 1e-12


@settings(max_examples=60, deadline=None)
@given(complex_square(), st.floats(-1, 1))
def test_exponential_inverse(a, s):
    nrm = operator_norm(a)
    if nrm > 10:
        a = a * (10 / nrm)
    tol = ToleranceConfig()
    e = matrix_exponential(a, s)
    back = matrix_exponential(a, -s)
    # relative to the conditioning of exp(s a): both factors can be as large as e^{|s|*10}
    scale = operator_norm(e) * operator_norm(back)
    assert operator_norm(e @ back - identity(a.shape[0])) <= 10 * tol.abs_tol * max(1.0, scale)


@settings(max_examples=60, deadline=None)
@given(complex_square())
def test_exponential_of_antihermitian_is_unitary(a):
    x = (a - a.conj().T) / 2
    u = matrix_exponential(x)
    assert operator_norm(u.conj().T @ u - identity(a.shape[0])) <= 1e-11


@settings(max_examples=60, deadline=None)
@given(complex_square(max_dim=4), st.data())
def test_antilinear_square_matches_double_application(m, data):
    c = AntilinearOperator(m)
    n = m.shape[0]
    v = data.draw(arrays(float, (n,), elements=finite)) + 1j * data.draw(arrays(float, (n,), elements=finite))
    twice = c.apply(c.apply(v))
    assert np.allclose(twice, c.square() @ v, atol=1e-9 * (1 + np.abs(twice).max()))


def test_antilinear_composition_rule():
    rng = np.random.default_rng(1)
    m1 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m2 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    c1, c2 = AntilinearOperator(m1), AntilinearOperator(m2)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert np.allclose(c1.compose(c2), m1 @ np.conj(m2))
    assert np.allclose(c1.apply(c2.apply(v)), c1.compose(c2) @ v)
    # antilinearity
    assert np.allclose(c1.apply(1j * v), -1j * c1.apply(v))


def test_antilinear_commutation_residual():
    c = AntilinearOperator(np.eye(2))
    real_u = matrix_exponential(1j * S2, 0.4)  # real rotation
    assert c.commutation_residual(real_u) < 1e-15
    phase = np.diag([1j, 1.0])
    assert c.commutation_residual(phase) == pytest.approx(2.0)


def test_tolerance_config():
    with pytest.raises(ValueError):
        ToleranceConfig(abs_tol=-1)
    t = ToleranceConfig(abs_tol=1e-8, rel_tol=1e-3, refinement_exponent=2)
    assert t.allows(1e-8)
    assert t.allows(1e-3, scale=1.0)
    assert not t.allows(2e-3, scale=1.0)
