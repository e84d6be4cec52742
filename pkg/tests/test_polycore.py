import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from infnet.polycore import (Monomial, NotPSDError, PolynomialError, PolynomialMatrix, SymMatrix,
                             eval_dictionary, factor_transformation, graded_basis, lambda_max, sqrt_psd,
                             spectral_norm, sym_eig)

SPACECRAFT_DICT = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 1, 1), (1, 0, 1)]


def spacecraft_override():
    return PolynomialMatrix.constant(3, np.eye(3)).vstack(PolynomialMatrix(3, [
        [{(0, 1, 0): 1.0}, {}, {}],
        [{}, {(0, 0, 1): 1.0}, {}],
        [{}, {}, {(1, 0, 0): 1.0}],
    ]))


# eval_dictionary

def test_eval_dictionary_simple():
    assert np.allclose(eval_dictionary([(1, 0), (0, 1), (1, 1)], [2, 3]), [2, 3, 6])


def test_eval_dictionary_all_ones():
    assert np.allclose(eval_dictionary(SPACECRAFT_DICT, [1, 1, 1]), np.ones(6))


def test_eval_dictionary_academic():
    d = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
    assert np.allclose(eval_dictionary(d, [2, -1]), [2, -1, -2, 4, 1])


def test_eval_dictionary_dimension_mismatch():
    with pytest.raises(PolynomialError):
        eval_dictionary([(1, 0)], [1, 2, 3])


def test_monomial_product_and_degree():
    a, b = Monomial((1, 0, 2)), Monomial((0, 1, 1))
    assert (a * b).exponents == (1, 1, 3)
    assert (a * b).degree == 5
    assert a.evaluate([2.0, 5.0, 3.0]) == pytest.approx(18.0)


# factor_transformation

def test_factor_linear_dictionary_is_identity():
    psi = factor_transformation([(1, 0), (0, 1)], 2)
    assert np.allclose(psi.evaluate(np.array([0.3, -2.0])), np.eye(2))


def test_factor_accepts_spacecraft_override():
    psi = factor_transformation(SPACECRAFT_DICT, 3, spacecraft_override())
    x = np.array([0.4, -1.3, 2.2])
    assert np.allclose(psi.evaluate(x) @ x, eval_dictionary(SPACECRAFT_DICT, x))


def test_factor_lowest_index_tie_break():
    psi = factor_transformation([(1, 1)], 2)
    assert psi.cells[0][0] == {(0, 1): 1.0}
    assert psi.cells[0][1] == {}


def test_factor_rejects_constant_monomial():
    with pytest.raises(PolynomialError):
        factor_transformation([(0, 0), (1, 0)], 2)


def test_factor_rejects_bad_override():
    bad = PolynomialMatrix(2, [[{}, {(1, 0): 1.0}]])  # x1*x2 but dictionary says x1^2
    with pytest.raises(PolynomialError):
        factor_transformation([(2, 0)], 2, bad)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3).filter(lambda e: sum(e) > 0),
                min_size=1, max_size=6, unique_by=tuple))
def test_factor_identity_holds_symbolically(exps):
    n = 3
    psi = factor_transformation([tuple(e) for e in exps], n)
    xvec = PolynomialMatrix.column([tuple(int(j == k) for j in range(n)) for k in range(n)], n)
    prod = psi @ xvec
    target = PolynomialMatrix.column([tuple(e) for e in exps], n)
    assert prod.allclose(target)


# PolynomialMatrix algebra

def test_polynomial_matrix_merges_duplicates_and_evaluates():
    P = PolynomialMatrix(2, [[{(1, 0): 1.0}, {(0, 1): 2.0}]])
    Q = P + P
    assert Q.cells[0][0] == {(1, 0): 2.0}
    assert np.allclose(Q.evaluate(np.array([1.0, 3.0])), [[2.0, 12.0]])


def test_polynomial_json_roundtrip():
    P = spacecraft_override()
    assert PolynomialMatrix.from_json(P.to_json()).allclose(P)


def test_graded_basis_counts():
    assert len(graded_basis(3, 2)) == 10
    assert graded_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]


# sym_eig

def test_sym_eig_identity_and_diagonal():
    assert np.allclose(sym_eig(np.eye(3))[0], [1, 1, 1])
    assert np.allclose(sym_eig(np.diag([5.0, 1.0, 2.0]))[0], [1, 2, 5])


def test_sym_eig_spacecraft_matrix():
    P = 1e6 * np.array([[1.5232, 0.1830, -0.2349], [0.1830, 1.0210, 0.0435], [-0.2349, 0.0435, 1.9255]])
    w, _ = sym_eig(P)
    assert w[0] == pytest.approx(9.4701e5, rel=1e-3)
    assert w[-1] == pytest.approx(2.0351e6, rel=1e-3)


sym_mats = st.integers(1, 50).flatmap(
    lambda d: hnp.arrays(np.float64, (d, d), elements=st.floats(-10, 10, allow_nan=False)))


@settings(max_examples=30, deadline=None)
@given(sym_mats)
def test_sym_eig_reconstruction(A):
    M = 0.5 * (A + A.T)
    w, V = sym_eig(M)
    scale = max(np.linalg.norm(M), 1e-300)
    assert np.linalg.norm(V @ np.diag(w) @ V.T - M) <= 1e-9 * scale + 1e-300
    assert np.allclose(V.T @ V, np.eye(len(M)), atol=1e-10)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(M @ V - V * w)) <= 1e-10 * max(np.abs(M).max(), 1e-300) * len(M) + 1e-300


# sqrt_psd

def test_sqrt_psd_examples():
    assert np.allclose(sqrt_psd(np.eye(3)).to_array(), np.eye(3))
    assert np.allclose(sqrt_psd(np.diag([4.0, 9.0])).to_array(), np.diag([2.0, 3.0]))
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    A = sqrt_psd(M).to_array()
    assert np.allclose(A @ A, M, rtol=1e-10, atol=1e-12)


def test_sqrt_psd_rejects_indefinite():
    with pytest.raises(NotPSDError):
        sqrt_psd(np.diag([1.0, -1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_sqrt_psd_chain(d, seed):
    B = np.random.default_rng(seed).normal(size=(d, d))
    A = sqrt_psd(B @ B.T).to_array()  # a random PSD matrix
    A2 = sqrt_psd(A @ A).to_array()
    assert np.allclose(A2, A, atol=1e-8 * max(1.0, np.abs(A).max()))


# spectral_norm

def test_spectral_norm_examples():
    assert spectral_norm(np.zeros((2, 3))) == 0.0
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
    D = -1e-4 * np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    assert spectral_norm(D) == pytest.approx(1e-4)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2 ** 31))
def test_spectral_norm_matches_gram_eigenvalue(r, c, seed):
    M = np.random.default_rng(seed).normal(size=(r, c))
    assert spectral_norm(M) == pytest.approx(np.sqrt(lambda_max(M.T @ M)), rel=1e-10)


def test_symmatrix_structural_symmetry():
    S = SymMatrix.from_array(np.array([[2.0, 1.0], [1.0, 3.0]]))
    assert np.array_equal(S.to_array(), S.to_array().T)
    assert S.is_positive_definite()
    assert not SymMatrix.from_array(np.diag([1.0, -1.0])).is_positive_definite()
