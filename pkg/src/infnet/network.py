"""Subsystem classes, interconnection topologies and finite truncations.

A network is homogeneous: every subsystem belongs to one class and receives
``w_ij = x_j`` from the neighbours prescribed by a topology rule.  Ground-truth
dynamics live in :class:`GroundTruth`; only the data generator and the
harness-side certifiers read them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .polycore import PolynomialMatrix, as_exponents, factor_transformation, monomial_values, spectral_norm


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    """True drift and input structure: xdot = a_star F*(x) + b_star G*(x) u + D w."""

    a_star: np.ndarray
    b_star: np.ndarray
    f_star_dict: tuple
    g_star_dict: PolynomialMatrix

    def __post_init__(self):
        object.__setattr__(self, "a_star", np.atleast_2d(np.asarray(self.a_star, dtype=float)))
        object.__setattr__(self, "b_star", np.atleast_2d(np.asarray(self.b_star, dtype=float)))
        object.__setattr__(self, "f_star_dict", tuple(as_exponents(m) for m in self.f_star_dict))
        if self.a_star.shape[1] != len(self.f_star_dict):
            raise NetworkError("a_star columns must match the true drift dictionary")
        if self.b_star.shape[1] != self.g_star_dict.rows:
            raise NetworkError("b_star columns must match the rows of the true input matrix")
        basis, coefs = self.g_star_dict.coefficient_tensor()
        object.__setattr__(self, "_f_exps", np.array(self.f_star_dict, dtype=int))
        object.__setattr__(self, "_g_exps", np.array(basis, dtype=int).reshape(len(basis), -1))
        object.__setattr__(self, "_bg", np.einsum("ik,qkj->qij", self.b_star, coefs))

    def drift(self, X: np.ndarray) -> np.ndarray:
        """A* F*(x) for a batch of states X of shape (P, n)."""
        return monomial_values(self._f_exps, X) @ self.a_star.T

    def input_gain(self, X: np.ndarray) -> np.ndarray:
        """B* G*(x) for a batch of states, shape (P, n, m)."""
        vals = monomial_values(self._g_exps, np.atleast_2d(X))
        return np.einsum("pq,qij->pij", vals, self._bg)

    def input_term(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """B* G*(x) u for batches X (P, n) and U (P, m)."""
        vals = monomial_values(self._g_exps, np.atleast_2d(X))
        out = np.zeros((U.shape[0], self.a_star.shape[0]))
        for q in range(self._bg.shape[0]):
            out += vals[:, q : q + 1] * (U @ self._bg[q].T)
        return out


@dataclass
class SubsystemClass:
    n: int
    m: int
    dict_F: list
    dict_G: PolynomialMatrix
    d_block: np.ndarray
    kappa: float
    vartheta: float
    varkappa: float | None = None
    psi_override: PolynomialMatrix | None = None
    truth: GroundTruth | None = None
    name: str = "class"

    def __post_init__(self):
        self.dict_F = [as_exponents(m) for m in self.dict_F]
        self.d_block = np.atleast_2d(np.asarray(self.d_block, dtype=float))
        if any(sum(e) == 0 for e in self.dict_F):
            raise NetworkError("drift dictionary contains a constant monomial")
        if any(len(e) != self.n for e in self.dict_F):
            raise NetworkError("drift dictionary does not match n")
        if self.dict_G.cols != self.m or self.dict_G.n != self.n:
            raise NetworkError("input dictionary must be an M x m polynomial matrix over n variables")
        if self.kappa <= 0 or self.vartheta <= 0:
            raise NetworkError("kappa and vartheta must be positive")
        if self.varkappa is not None and self.varkappa <= 0:
            raise NetworkError("varkappa must be positive")

    @property
    def N(self) -> int:
        return len(self.dict_F)

    @property
    def M(self) -> int:
        return self.dict_G.rows

    def psi(self) -> PolynomialMatrix:
        return factor_transformation(self.dict_F, self.n, self.psi_override)


@dataclass(frozen=True)
class Topology:
    kind: str  # "cascade" or "forward-band"
    band: int = 1

    def __post_init__(self):
        if self.kind not in ("cascade", "forward-band"):
            raise NetworkError(f"unsupported topology {self.kind!r}")
        if self.kind == "forward-band" and self.band < 1:
            raise NetworkError("forward band width must be >= 1")

    @property
    def card(self) -> int:
        return 1 if self.kind == "cascade" else self.band

    def neighbors(self, i: int) -> list[int]:
        """Neighbour set of subsystem i (1-based) in the infinite network."""
        if i < 1:
            raise NetworkError("subsystem indices start at 1")
        if self.kind == "cascade":
            return [i - 1] if i >= 2 else []
        return list(range(i + 1, i + self.band + 1))


@dataclass
class NetworkDescriptor:
    classes: list
    topology: Topology
    class_of: Callable[[int], int] = field(default=lambda i: 0)

    def subsystem_class(self, i: int) -> SubsystemClass:
        return self.classes[self.class_of(i)]

    @property
    def card(self) -> int:
        return self.topology.card

    def assembled_d(self, i: int | None = None, card: int | None = None) -> np.ndarray:
        """D_i as the horizontal concatenation of the uniform block over the neighbours."""
        cls = self.classes[0] if i is None else self.subsystem_class(i)
        k = self.card if card is None else card
        return np.hstack([cls.d_block] * k) if k else np.zeros((cls.n, 0))


def sigma_dim(desc: NetworkDescriptor, i: int) -> int:
    """Total dimension of the neighbour states feeding subsystem i."""
    return sum(desc.subsystem_class(j).n for j in desc.topology.neighbors(i))


def d_norm(desc: NetworkDescriptor) -> float:
    """Spectral norm of the full-card D_i (equals sqrt(card) * ||D_ij|| for a uniform block)."""
    return spectral_norm(desc.assembled_d())


@dataclass
class TruncatedNetwork:
    desc: NetworkDescriptor
    size: int
    boundary: str
    neighbors: list  # neighbors[i-1] is the sorted 1-based neighbour list of subsystem i

    @property
    def n(self) -> int:
        return self.desc.classes[0].n

    def edges(self) -> list[tuple[int, int]]:
        """Wiring pairs (i, j) meaning w_ij = x_j."""
        return [(i + 1, j) for i, nb in enumerate(self.neighbors) for j in nb]

    def adjacency(self) -> sparse.csr_matrix:
        rows, cols = [], []
        for i, nb in enumerate(self.neighbors):
            rows.extend([i] * len(nb))
            cols.extend(j - 1 for j in nb)
        return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.size, self.size))

    def neighbor_sum(self, X: np.ndarray) -> np.ndarray:
        """Row i is the sum of x_j over j in M_i, for states X of shape (size, n)."""
        top = self.desc.topology
        if top.kind == "cascade":
            out = np.zeros_like(X)
            out[1:] = X[:-1]
            if self.boundary == "wrap":
                out[0] = X[-1]
            return out
        K = top.band
        if self.boundary == "wrap":
            ext = np.vstack([X, X[: K + 1]]) if K + 1 <= self.size else np.vstack([X] * (K // self.size + 2))
            C = np.vstack([np.zeros((1, X.shape[1])), np.cumsum(ext, axis=0)])
            idx = np.arange(self.size)
            return C[idx + K + 1] - C[idx + 1]
        C = np.vstack([np.zeros((1, X.shape[1])), np.cumsum(X, axis=0)])
        idx = np.arange(self.size)
        hi = np.minimum(idx + K + 1, self.size)
        lo = np.minimum(idx + 1, self.size)
        return C[hi] - C[lo]

    def coupling(self, X: np.ndarray) -> np.ndarray:
        """D_i w_i for every subsystem, using the uniform block D_ij."""
        return self.neighbor_sum(X) @ self.desc.classes[0].d_block.T

    def full_neighbor_index(self) -> int:
        """Smallest 1-based index whose neighbour set has the full cardinality."""
        for i, nb in enumerate(self.neighbors):
            if len(nb) == self.desc.card:
                return i + 1
        raise NetworkError("no subsystem of the truncation has a full neighbour set")


def instantiate_truncation(desc: NetworkDescriptor, N: int, boundary: str = "clip") -> TruncatedNetwork:
    if N < 2:
        raise NetworkError("truncation needs at least two subsystems")
    if boundary not in ("clip", "wrap"):
        raise NetworkError(f"unknown boundary policy {boundary!r}")
    if boundary == "wrap" and N <= desc.card:
        raise NetworkError(f"wrap boundary needs N > Card = {desc.card}")
    neighbors = []
    for i in range(1, N + 1):
        if desc.topology.kind == "cascade":
            nb = [i - 1] if i >= 2 else ([N] if boundary == "wrap" else [])
        else:
            raw = desc.topology.neighbors(i)
            nb = [j for j in raw if j <= N] if boundary == "clip" else [((j - 1) % N) + 1 for j in raw]
        neighbors.append(nb)
    return TruncatedNetwork(desc, N, boundary, neighbors)


def true_parameter_stack(cls: SubsystemClass, card: int = 0):
    """Embed the ground truth into dictionary coordinates: returns (A, B, D_i).

    A is n x N acting on dict_F, B is n x M acting on dict_G.  Requires the
    dictionaries to contain the true monomials.  Harness use only.
    """
    truth = cls.truth
    if truth is None:
        raise NetworkError("class has no ground truth")
    A = np.zeros((cls.n, cls.N))
    index = {e: k for k, e in enumerate(cls.dict_F)}
    for k, e in enumerate(truth.f_star_dict):
        if e not in index:
            raise NetworkError(f"true monomial {e} missing from the drift dictionary")
        A[:, index[e]] += truth.a_star[:, k]
    B = np.zeros((cls.n, cls.M))
    g_rows = [PolynomialMatrix(cls.n, [row]) for row in cls.dict_G.cells]
    for k, row in enumerate(truth.g_star_dict.cells):
        target = PolynomialMatrix(cls.n, [row])
        match = next((r for r, g in enumerate(g_rows) if g.allclose(target)), None)
        if match is None:
            raise NetworkError(f"true input row {k} missing from the input dictionary")
        B[:, match] += truth.b_star[:, k]
    D = np.hstack([cls.d_block] * card) if card else np.zeros((cls.n, 0))
    return A, B, D
