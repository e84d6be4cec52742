"""Polynomial algebra over a subsystem state and dense symmetric linear algebra.

Polynomials are stored as dictionaries mapping exponent tuples to float
coefficients.  A :class:`PolynomialMatrix` keeps one such dictionary per cell
and can be evaluated at a single point or at a batch of points.  The
symmetric helpers (:func:`sym_eig`, :func:`sqrt_psd`, :func:`spectral_norm`)
use a cyclic Jacobi method so they do not depend on LAPACK.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

COEF_TOL = 1e-12


class PolynomialError(ValueError):
    """Raised for malformed dictionaries or failed polynomial identities."""


class NotPSDError(ValueError):
    """Raised when a matrix expected to be positive semidefinite is not."""


# ---------------------------------------------------------------------------
# monomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class Monomial:
    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise PolynomialError(f"negative exponent in {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if other.n != self.n:
            raise PolynomialError("monomials over different state dimensions")
        return Monomial(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise PolynomialError(f"expected a point of length {self.n}, got shape {x.shape}")
        return float(np.prod(x ** np.array(self.exponents)))

    def __str__(self) -> str:
        return monomial_str(self.exponents)

    @classmethod
    def var(cls, i: int, n: int) -> "Monomial":
        """The coordinate monomial x_{i+1} (zero-based ``i``)."""
        e = [0] * n
        e[i] = 1
        return cls(tuple(e))

    @classmethod
    def one(cls, n: int) -> "Monomial":
        return cls((0,) * n)


def monomial_str(exps: Sequence[int]) -> str:
    parts = []
    for j, e in enumerate(exps):
        if e == 1:
            parts.append(f"x{j + 1}")
        elif e > 1:
            parts.append(f"x{j + 1}^{e}")
    return "*".join(parts) if parts else "1"


def grlex_key(exps: Sequence[int]):
    """Sort key for graded lexicographic order (x1 > x2 > ... within a degree)."""
    return (sum(exps), tuple(-e for e in exps))


def graded_basis(n: int, max_degree: int, min_degree: int = 0) -> list[tuple[int, ...]]:
    """All exponent tuples with min_degree <= degree <= max_degree, in grlex order."""
    out = []
    for d in range(min_degree, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for j in combo:
                e[j] += 1
            out.append(tuple(e))
    return sorted(out, key=grlex_key)


def as_exponents(m) -> tuple[int, ...]:
    return m.exponents if isinstance(m, Monomial) else tuple(int(e) for e in m)


def monomial_values(exps: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate monomials (rows of ``exps``) at points ``x`` of shape (P, n) -> (P, K)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    exps = np.asarray(exps, dtype=int).reshape(-1, x.shape[1])
    out = np.ones((x.shape[0], exps.shape[0]))
    for j in range(x.shape[1]):
        col = exps[:, j]
        if not col.any():
            continue
        maxe = int(col.max())
        powers = np.ones((x.shape[0], maxe + 1))
        for e in range(1, maxe + 1):
            powers[:, e] = powers[:, e - 1] * x[:, j]
        out *= powers[:, col]
    return out


def eval_dictionary(dictionary: Sequence, x) -> np.ndarray:
    """Evaluate a list of monomials at a point; component k is prod_j x_j**e_kj."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise PolynomialError("eval_dictionary expects a single point")
    exps = [as_exponents(m) for m in dictionary]
    for e in exps:
        if len(e) != x.shape[0]:
            raise PolynomialError(f"monomial {e} does not match state dimension {x.shape[0]}")
    if not exps:
        return np.zeros(0)
    return monomial_values(np.array(exps), x[None, :])[0]


# ---------------------------------------------------------------------------
# polynomial matrices
# ---------------------------------------------------------------------------


def _clean(cell: Mapping[tuple, float]) -> dict:
    return {e: float(c) for e, c in cell.items() if c != 0.0}


class PolynomialMatrix:
    """Matrix whose entries are polynomials in ``n`` variables.

    ``cells`` is a row-major nested list of ``{exponent_tuple: coefficient}``.
    """

    __slots__ = ("n", "rows", "cols", "cells")

    def __init__(self, n: int, cells: Sequence[Sequence[Mapping[tuple, float]]]):
        self.n = int(n)
        self.rows = len(cells)
        self.cols = len(cells[0]) if self.rows else 0
        merged = []
        for row in cells:
            if len(row) != self.cols:
                raise PolynomialError("ragged polynomial matrix")
            out_row = []
            for cell in row:
                acc: dict = {}
                items = cell.items() if isinstance(cell, Mapping) else cell
                for m, c in items:
                    e = as_exponents(m)
                    if len(e) != self.n:
                        raise PolynomialError(f"monomial {e} does not match n={self.n}")
                    acc[e] = acc.get(e, 0.0) + float(c)
                out_row.append(_clean(acc))
            merged.append(tuple(out_row))
        self.cells = tuple(merged)

    # construction helpers -------------------------------------------------
    @classmethod
    def zeros(cls, n, rows, cols):
        return cls(n, [[{} for _ in range(cols)] for _ in range(rows)])

    @classmethod
    def constant(cls, n, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        zero = (0,) * n
        return cls(n, [[{zero: A[i, j]} for j in range(A.shape[1])] for i in range(A.shape[0])])

    @classmethod
    def column(cls, dictionary: Sequence, n: int | None = None):
        exps = [as_exponents(m) for m in dictionary]
        n = len(exps[0]) if n is None else n
        return cls(n, [[{e: 1.0}] for e in exps])

    @classmethod
    def from_rows(cls, n, rows: Sequence[Sequence[Sequence[tuple]]]):
        """Build from rows of cells given as ``[(exponents, coef), ...]``."""
        return cls(n, [[dict((as_exponents(m), c) for m, c in cell) for cell in row] for row in rows])

    @classmethod
    def from_coefficients(cls, n, basis: Sequence[tuple], coefs: np.ndarray):
        """``coefs`` has shape (len(basis), rows, cols)."""
        coefs = np.asarray(coefs, dtype=float)
        rows, cols = coefs.shape[1:]
        cells = [[{basis[k]: coefs[k, i, j] for k in range(len(basis))} for j in range(cols)] for i in range(rows)]
        return cls(n, cells)

    # structural -----------------------------------------------------------
    @property
    def shape(self):
        return (self.rows, self.cols)

    def monomials(self) -> list[tuple[int, ...]]:
        found = set()
        for row in self.cells:
            for cell in row:
                found.update(cell)
        return sorted(found, key=grlex_key)

    def max_degree(self) -> int:
        mons = self.monomials()
        return max((sum(e) for e in mons), default=0)

    def coefficient_tensor(self, basis: Sequence[tuple] | None = None):
        basis = self.monomials() if basis is None else [as_exponents(b) for b in basis]
        index = {e: k for k, e in enumerate(basis)}
        out = np.zeros((len(basis), self.rows, self.cols))
        for i, row in enumerate(self.cells):
            for j, cell in enumerate(row):
                for e, c in cell.items():
                    if e not in index:
                        raise PolynomialError(f"monomial {e} missing from basis")
                    out[index[e], i, j] += c
        return basis, out

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if self.shape != other.shape:
            raise PolynomialError("shape mismatch in addition")
        cells = []
        for ra, rb in zip(self.cells, other.cells):
            row = []
            for ca, cb in zip(ra, rb):
                acc = dict(ca)
                for e, c in cb.items():
                    acc[e] = acc.get(e, 0.0) + c
                row.append(acc)
            cells.append(row)
        return PolynomialMatrix(self.n, cells)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s: float):
        return PolynomialMatrix(self.n, [[{e: s * c for e, c in cell.items()} for cell in row] for row in self.cells])

    def transpose(self):
        return PolynomialMatrix(self.n, [[self.cells[i][j] for i in range(self.rows)] for j in range(self.cols)])

    @property
    def T(self):
        return self.transpose()

    def __matmul__(self, other):
        if isinstance(other, np.ndarray):
            other = PolynomialMatrix.constant(self.n, other)
        if self.cols != other.rows:
            raise PolynomialError(f"shape mismatch {self.shape} @ {other.shape}")
        cells = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc: dict = {}
                for k in range(self.cols):
                    a, b = self.cells[i][k], other.cells[k][j]
                    if not a or not b:
                        continue
                    for ea, ca in a.items():
                        for eb, cb in b.items():
                            e = tuple(p + q for p, q in zip(ea, eb))
                            acc[e] = acc.get(e, 0.0) + ca * cb
                row.append(acc)
            cells.append(row)
        return PolynomialMatrix(self.n, cells)

    def __rmatmul__(self, other):
        return PolynomialMatrix.constant(self.n, other) @ self

    def vstack(self, other):
        if self.cols != other.cols:
            raise PolynomialError("column mismatch in vstack")
        return PolynomialMatrix(self.n, list(self.cells) + list(other.cells))

    def hstack(self, other):
        if self.rows != other.rows:
            raise PolynomialError("row mismatch in hstack")
        return PolynomialMatrix(self.n, [list(a) + list(b) for a, b in zip(self.cells, other.cells)])

    # evaluation -----------------------------------------------------------
    def evaluate(self, x) -> np.ndarray:
        """Value at a point (shape (rows, cols)) or a batch (shape (P, rows, cols))."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.n:
            raise PolynomialError(f"points have dimension {pts.shape[1]}, expected {self.n}")
        basis, coefs = self.coefficient_tensor()
        if not basis:
            out = np.zeros((pts.shape[0], self.rows, self.cols))
        else:
            vals = monomial_values(np.array(basis), pts)
            out = np.einsum("pk,kij->pij", vals, coefs)
        return out[0] if single else out

    def allclose(self, other, tol: float = COEF_TOL) -> bool:
        if self.shape != other.shape:
            return False
        diff = self - other
        return all(abs(c) <= tol for row in diff.cells for cell in row for c in cell.values())

    def to_strings(self, fmt: str = "{:.8g}") -> list[list[str]]:
        return [[poly_str(cell, fmt) for cell in row] for row in self.cells]

    def to_json(self):
        return {
            "n": self.n,
            "rows": [[[[list(e), c] for e, c in sorted(cell.items(), key=lambda t: grlex_key(t[0]))] for cell in row] for row in self.cells],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(obj["n"], [[{tuple(e): c for e, c in cell} for cell in row] for row in obj["rows"]])

    def __repr__(self):
        return f"PolynomialMatrix({self.rows}x{self.cols}, n={self.n}, deg={self.max_degree()})"


def poly_str(cell: Mapping[tuple, float], fmt: str = "{:.8g}") -> str:
    if not cell:
        return "0"
    terms = []
    for e in sorted(cell, key=grlex_key):
        c = cell[e]
        mono = monomial_str(e)
        body = fmt.format(abs(c)) if mono == "1" else f"{fmt.format(abs(c))}*{mono}"
        terms.append(("-" if c < 0 else "+", body))
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


def factor_transformation(dictionary: Sequence, n: int, override: PolynomialMatrix | None = None) -> PolynomialMatrix:
    """Return Psi with Psi(x) @ x equal to the dictionary vector F(x).

    Without an override each monomial is divided by its lowest-indexed variable.
    """
    exps = [as_exponents(m) for m in dictionary]
    for e in exps:
        if len(e) != n:
            raise PolynomialError(f"monomial {e} does not match n={n}")
        if sum(e) == 0:
            raise PolynomialError("constant monomial in a state dictionary (F(0) must vanish)")
    target = PolynomialMatrix.column(exps, n)
    xvec = PolynomialMatrix.column([Monomial.var(j, n).exponents for j in range(n)], n)
    if override is not None:
        if override.shape != (len(exps), n) or override.n != n:
            raise PolynomialError(f"override shape {override.shape} does not match ({len(exps)}, {n})")
        if not (override @ xvec).allclose(target):
            raise PolynomialError("override does not satisfy Psi(x) x = F(x)")
        return override
    cells = []
    for e in exps:
        j = next(k for k, v in enumerate(e) if v > 0)
        rest = list(e)
        rest[j] -= 1
        row = [{} for _ in range(n)]
        row[j] = {tuple(rest): 1.0}
        cells.append(row)
    psi = PolynomialMatrix(n, cells)
    assert (psi @ xvec).allclose(target)
    return psi


# ---------------------------------------------------------------------------
# dense symmetric linear algebra
# ---------------------------------------------------------------------------


class SymMatrix:
    """Symmetric matrix stored as its packed lower triangle (row-major)."""

    __slots__ = ("dim", "lower")

    def __init__(self, dim: int, lower):
        lower = np.asarray(lower, dtype=float).ravel()
        if lower.shape[0] != dim * (dim + 1) // 2:
            raise ValueError("packed length does not match dimension")
        self.dim = int(dim)
        self.lower = lower.copy()
        self.lower.setflags(write=False)

    @classmethod
    def from_array(cls, A, check: bool = True, tol: float = 1e-10):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("SymMatrix requires a square array")
        if check and A.size and np.max(np.abs(A - A.T)) > tol * max(1.0, np.max(np.abs(A))):
            raise ValueError("array is not symmetric")
        idx = np.tril_indices(A.shape[0])
        return cls(A.shape[0], 0.5 * (A + A.T)[idx])

    def to_array(self) -> np.ndarray:
        A = np.zeros((self.dim, self.dim))
        A[np.tril_indices(self.dim)] = self.lower
        return A + np.tril(A, -1).T

    def __array__(self, dtype=None, copy=None):
        A = self.to_array()
        return A if dtype is None else A.astype(dtype)

    def is_positive_definite(self, tol: float = 0.0) -> bool:
        return bool(sym_eig(self)[0][0] > tol)

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


def _as_sym_array(M) -> np.ndarray:
    if isinstance(M, SymMatrix):
        return M.to_array()
    A = np.atleast_2d(np.asarray(M, dtype=float))
    return 0.5 * (A + A.T)


def _round_robin(n: int):
    """Brent-Luk style tournament: n-1 rounds of disjoint index pairs covering all pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a >= 0 and b >= 0:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(pairs)
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def sym_eig(M, max_sweeps: int = 60):
    """Eigen-decomposition of a symmetric matrix by parallel-ordered cyclic Jacobi.

    Returns ascending eigenvalues and an orthonormal matrix of eigenvectors (columns).
    """
    A = _as_sym_array(M).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V
    fro = np.linalg.norm(A)
    if fro == 0.0:
        return np.zeros(n), V
    target = 1e-14 * fro
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= target:
            break
        for pairs in rounds:
            p = np.array([a for a, _ in pairs])
            q = np.array([b for _, b in pairs])
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            R = np.eye(n)
            R[p, p] = c
            R[q, q] = c
            R[p, q] = s
            R[q, p] = -s
            A = R.T @ A @ R
            A = 0.5 * (A + A.T)
            V = V @ R
    w = A.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def sqrt_psd(M, tol: float = 1e-12) -> SymMatrix:
    """Unique symmetric PSD square root; small negative eigenvalues are clipped."""
    A = _as_sym_array(M)
    w, V = sym_eig(A)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -tol * max(scale, 1e-300):
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return SymMatrix.from_array(root, check=False)


def spectral_norm(M) -> float:
    """Largest singular value, computed from the smaller Gram matrix."""
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.size == 0 or not np.any(A):
        return 0.0
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    return float(np.sqrt(max(sym_eig(G)[0][-1], 0.0)))


def lambda_min(M) -> float:
    return float(sym_eig(M)[0][0])


def lambda_max(M) -> float:
    return float(sym_eig(M)[0][-1])
