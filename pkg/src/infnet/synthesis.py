"""Data-driven ISS synthesis as a sum-of-squares program.

The robust decrease condition

    S(x) = gamma(x) Z - H(x) - (vartheta + kappa) Pbar  is PSD for every x

is compiled into an SDP: S(x) must equal (I kron m(x))^T G (I kron m(x)) for a
PSD Gram matrix G, gamma(x) = m_g(x)^T G_g m_g(x) with G_g PSD, and the
controller coefficients enter H(x) linearly.  Here H(x) has the off-diagonal
block C(x) = [Psi(x) Phi; Gdict(x) K(x); 0] and Pbar = blkdiag(Phi, 0).

The program maximises a uniform margin t with G - tI and Phi - tI PSD under the
normalisation trace(G) = 1, and bounds the condition number of Phi so the
resulting ISS gains stay small.  This module never sees the true model;
oracle checks take the true vector field as a plain callable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datagen import DataMatrices
from .polycore import PolynomialMatrix, SymMatrix, graded_basis, poly_str, sym_eig
from . import sdpsolve


class SynthesisError(ValueError):
    pass


class RecoveryError(SynthesisError):
    pass


@dataclass
class SynthesisProblem:
    data: DataMatrices
    dict_F: list
    dict_G: PolynomialMatrix
    psi: PolynomialMatrix
    kappa: float
    vartheta: float
    known_d: bool = False
    varkappa: float | None = None
    d_norm: float | None = None  # ||D||_2 in known-D mode
    deg_K: int = 2
    deg_gamma: int | None = None  # None -> twice the Gram degree
    gram_degree: int | None = None  # None -> ceil(max degree of S / 2)
    cond_max: float | None = 10.0
    state_scale: float = 1.0

    def __post_init__(self):
        if self.known_d:
            if self.data.Y is None or self.d_norm is None:
                raise SynthesisError("known-D mode needs Y and ||D||")
        else:
            if self.data.Z is None or self.varkappa is None:
                raise SynthesisError("unknown-D mode needs Z and varkappa")
        if self.kappa <= 0 or self.vartheta <= 0:
            raise SynthesisError("kappa and vartheta must be positive")
        if self.deg_K < 0:
            raise SynthesisError("deg_K must be non-negative")

    @property
    def n(self) -> int:
        return self.psi.cols

    @property
    def m(self) -> int:
        return self.dict_G.cols

    @property
    def N(self) -> int:
        return len(self.dict_F)

    @property
    def M(self) -> int:
        return self.dict_G.rows

    @property
    def s(self) -> int:
        """Rows of C(x): N + M (+ sigma in unknown-D mode)."""
        return self.N + self.M + (0 if self.known_d else self.data.W.shape[0])

    @property
    def dim(self) -> int:
        return self.n + self.s

    @property
    def data_matrix(self) -> np.ndarray:
        return np.asarray(self.data.Y if self.known_d else self.data.Z, dtype=float)

    def c_degree(self) -> int:
        return max(self.psi.max_degree(), self.dict_G.max_degree() + self.deg_K)

    def degrees(self):
        """(Gram half-degree, gamma degree) after applying defaults."""
        dc = self.c_degree()
        h = self.gram_degree
        if h is None:
            h = -(-max(dc, self.deg_gamma or 0) // 2)
        dg = 2 * h if self.deg_gamma is None else self.deg_gamma
        if dg % 2:
            raise SynthesisError("gamma must have even degree")
        if 2 * h < max(dc, dg):
            raise SynthesisError(
                f"Gram basis of degree {h} cannot express a condition matrix of degree {max(dc, dg)}")
        return h, dg


@dataclass
class SynthesisResult:
    Phi: SymMatrix
    P: SymMatrix
    K: PolynomialMatrix
    gamma: PolynomialMatrix  # 1 x 1
    alpha_lo: float
    alpha_hi: float
    rho: float
    kappa: float
    vartheta: float
    margin: float
    known_d: bool = False
    coupling_bound: float = 0.0  # varkappa or ||D||
    status: str = "optimal"
    solve_seconds: float = 0.0
    info: dict = field(default_factory=dict)

    def controller(self, X: np.ndarray) -> np.ndarray:
        """u = K(x) P x for a batch of states (P, n) -> (P, m)."""
        X = np.atleast_2d(X)
        Kx = self.K.evaluate(X)
        return np.einsum("pij,pj->pi", Kx, X @ self.P.to_array())

    def lyapunov(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.einsum("pi,ij,pj->p", X, self.P.to_array(), X)

    def controller_strings(self, fmt: str = "{:.8g}", tol: float = 0.0) -> list[str]:
        """Human-readable u_k = ... lines, coefficients of K(x) P x."""
        n = self.P.dim
        xvec = PolynomialMatrix.column([tuple(int(j == k) for j in range(n)) for k in range(n)], n)
        law = self.K @ (PolynomialMatrix.constant(n, self.P.to_array()) @ xvec)
        out = []
        for k, row in enumerate(law.cells):
            cell = {e: c for e, c in row[0].items() if abs(c) > tol}
            out.append(f"u_{k + 1} = {poly_str(cell, fmt)}")
        return out


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------


@dataclass
class CompiledCondition:
    sdp: sdpsolve.SdpProblem
    n: int
    m: int
    dim: int
    basis_S: list
    basis_K: list
    basis_gamma: list
    z_scale: float
    k_index: np.ndarray  # (len(basis_K), m, n) free-variable ids
    t_index: int
    blocks: dict  # name -> block id
    state_scale: float


def _poly_items(cell, scale):
    """Cell items with monomials rescaled for x = scale * x~."""
    return [(e, c * scale ** sum(e)) for e, c in cell.items()]


def compile_condition(problem: SynthesisProblem) -> CompiledCondition:
    n, m, N, M = problem.n, problem.m, problem.N, problem.M
    s, D = problem.s, problem.dim
    h, dg = problem.degrees()
    sc = float(problem.state_scale)
    Zraw = problem.data_matrix
    if Zraw.shape != (D, D):
        raise SynthesisError(f"data matrix has shape {Zraw.shape}, expected {(D, D)}")
    z_scale = float(np.max(np.abs(Zraw))) or 1.0
    Zn = Zraw / z_scale

    basis_S = graded_basis(n, h)
    basis_K = graded_basis(n, problem.deg_K)
    basis_g = graded_basis(n, dg // 2)
    support = graded_basis(n, 2 * h)
    a_index = {e: k for k, e in enumerate(support)}
    na, nb = len(support), len(basis_S)

    bld = sdpsolve.ProblemBuilder()
    t_id = int(bld.add_free(1, "t")[0])
    k_ids = bld.add_free(len(basis_K) * m * n, "K").reshape(len(basis_K), m, n)
    bS = bld.add_block(D * nb, "gram")
    bG = bld.add_block(len(basis_g), "gamma")
    bP = bld.add_block(n, "phi_lo")
    bphi = bld.add_block(1, "phi_shift")
    bH = bld.add_block(n, "phi_hi") if problem.cond_max is not None else None
    bld.margin_var = t_id

    # row id for entry (p, q), p <= q, and monomial alpha
    pair_id = -np.ones((D, D), dtype=np.int64)
    iu = np.triu_indices(D)
    pair_id[iu] = np.arange(len(iu[0]))
    n_rows = len(iu[0]) * na

    def row(p, q, alpha):
        if p > q:
            p, q = q, p
        return pair_id[p, q] * na + a_index[alpha]

    rows, cols, vals = [], [], []

    # Gram expansion: S_pq(x) = sum_{beta, delta} G[(p,beta),(q,delta)] x^(beta+delta)
    bsum = np.array([[a_index[tuple(a + b for a, b in zip(e1, e2))] for e2 in basis_S] for e1 in basis_S])
    coord, scale = bld.block_entry_map(bS)
    P_, Q_ = np.triu_indices(D)
    for p, q in zip(P_, Q_):
        blk_c = coord[p * nb:(p + 1) * nb, q * nb:(q + 1) * nb]
        blk_s = scale[p * nb:(p + 1) * nb, q * nb:(q + 1) * nb]
        r = pair_id[p, q] * na + bsum
        rows.append(r.ravel())
        cols.append(blk_c.ravel())
        vals.append(blk_s.ravel())
    # margin: G = G' + t I contributes t on diagonal pairs with beta = delta
    for p in range(D):
        for k, e in enumerate(basis_S):
            rows.append([pair_id[p, p] * na + bsum[k, k]])
            cols.append([t_id])
            vals.append([1.0])

    # affine right-hand side S_pq,alpha moved to the left with a minus sign
    def add_rhs(r, c, v):
        rows.append(np.atleast_1d(r))
        cols.append(np.atleast_1d(c))
        vals.append(-np.atleast_1d(np.asarray(v, dtype=float)))

    # gamma(x) Zn
    gcoord, gscale = bld.block_entry_map(bG)
    ng = len(basis_g)
    for i1 in range(ng):
        for i2 in range(ng):
            alpha = tuple(a + b for a, b in zip(basis_g[i1], basis_g[i2]))
            for p, q in zip(P_, Q_):
                z = Zn[p, q]
                if z != 0.0:
                    add_rhs(row(p, q, alpha), gcoord[i1, i2], z * gscale[i1, i2])

    # Phi = Phi_lo + (t + shift) I
    pcoord, pscale = bld.block_entry_map(bP)
    shift_c, _ = bld.entry(bphi, 0, 0)
    zero = (0,) * n

    def phi_terms(a, b):
        terms = [(pcoord[a, b], pscale[a, b])]
        if a == b:
            terms += [(t_id, 1.0), (shift_c, 1.0)]
        return terms

    # -(vartheta + kappa) Phi in the top-left block
    cst = problem.vartheta + problem.kappa
    for a in range(n):
        for b in range(a, n):
            for c_, v_ in phi_terms(a, b):
                add_rhs(row(a, b, zero), c_, -cst * v_)

    # -C(x) in the off-diagonal block: S[n + a, b] = -C_ab(x)
    for a in range(N):
        for b in range(n):
            for cidx in range(n):
                for e, coef in _poly_items(problem.psi.cells[a][cidx], sc):
                    for c_, v_ in phi_terms(cidx, b):
                        add_rhs(row(n + a, b, e), c_, -coef * v_)
    for a in range(M):
        for b in range(n):
            for cidx in range(m):
                for e, coef in _poly_items(problem.dict_G.cells[a][cidx], sc):
                    for kk, ek in enumerate(basis_K):
                        alpha = tuple(x + y for x, y in zip(e, ek))
                        add_rhs(row(n + N + a, b, alpha), k_ids[kk, cidx, b], -coef)

    A_rows = np.concatenate([np.asarray(r, dtype=np.int64).ravel() for r in rows])
    A_cols = np.concatenate([np.asarray(c, dtype=np.int64).ravel() for c in cols])
    A_vals = np.concatenate([np.asarray(v, dtype=float).ravel() for v in vals])
    bld.add_equalities(A_rows, A_cols, A_vals, np.zeros(n_rows))

    # trace normalisation: trace(G') + t * dim = 1
    diag_c = [bld.entry(bS, k, k)[0] for k in range(D * nb)]
    expr = {c_: 1.0 for c_ in diag_c}
    expr[t_id] = float(D * nb)
    bld.add_equality(expr, 1.0)

    # condition-number bound: Phi_hi = (c - 1)(t + shift) I - Phi_lo
    if bH is not None:
        cm = float(problem.cond_max)
        hcoord, hscale = bld.block_entry_map(bH)
        for a in range(n):
            for b in range(a + 1):
                e = {int(hcoord[a, b]): float(hscale[a, b])}
                e[int(pcoord[a, b])] = e.get(int(pcoord[a, b]), 0.0) + float(pscale[a, b])
                if a == b:
                    e[t_id] = e.get(t_id, 0.0) - (cm - 1.0)
                    e[shift_c] = e.get(shift_c, 0.0) - (cm - 1.0)
                bld.add_equality(e, 0.0)

    bld.set_objective({t_id: -1.0})
    sdp = bld.build()
    blocks = {"gram": bS, "gamma": bG, "phi_lo": bP, "phi_shift": bphi}
    if bH is not None:
        blocks["phi_hi"] = bH
    return CompiledCondition(sdp, n, m, D, basis_S, basis_K, basis_g, z_scale, k_ids, t_id, blocks, sc)


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------


def recover(problem: SynthesisProblem, compiled: CompiledCondition, sol: "sdpsolve.SdpSolution") -> SynthesisResult:
    if sol.status != "optimal":
        raise RecoveryError(f"solver status {sol.status}")
    return recover_any(problem, compiled, sol)


def recover_any(problem: SynthesisProblem, compiled: CompiledCondition, sol) -> SynthesisResult:
    """Recovery without the status gate, for inspecting below-margin designs."""
    n = compiled.n
    y, mats = compiled.sdp.split(sol.x)
    t = float(y[compiled.t_index])
    phi = mats[compiled.blocks["phi_lo"]] + (t + mats[compiled.blocks["phi_shift"]][0, 0]) * np.eye(n)
    return result_from_parameters(problem, phi, y[compiled.k_index], mats[compiled.blocks["gamma"]],
                                  compiled, t, sol)


def result_from_parameters(problem, phi, k_coefs, gamma_gram, compiled, margin, sol=None) -> SynthesisResult:
    n, sc = compiled.n, compiled.state_scale
    phi = 0.5 * (phi + phi.T)
    w, V = sym_eig(phi)
    if w[0] <= 0 or w[-1] / w[0] > 1e12:
        raise RecoveryError("Phi is numerically singular")
    P = (V / w) @ V.T
    P = 0.5 * (P + P.T)
    # undo the state scaling: x~ = x / sc
    kc = np.array([k_coefs[k] / sc ** sum(e) for k, e in enumerate(compiled.basis_K)])
    K = PolynomialMatrix.from_coefficients(n, compiled.basis_K, kc)
    gcells: dict = {}
    for i1, e1 in enumerate(compiled.basis_gamma):
        for i2, e2 in enumerate(compiled.basis_gamma):
            alpha = tuple(a + b for a, b in zip(e1, e2))
            gcells[alpha] = gcells.get(alpha, 0.0) + gamma_gram[i1, i2] / compiled.z_scale / sc ** sum(alpha)
    gamma = PolynomialMatrix(n, [[gcells]])
    ev = sym_eig(P)[0]
    bound = problem.d_norm if problem.known_d else problem.varkappa
    rho = float(ev[-1] * bound ** 2 / problem.vartheta)
    return SynthesisResult(
        Phi=SymMatrix.from_array(phi), P=SymMatrix.from_array(P), K=K, gamma=gamma,
        alpha_lo=float(ev[0]), alpha_hi=float(ev[-1]), rho=rho, kappa=problem.kappa,
        vartheta=problem.vartheta, margin=float(margin), known_d=problem.known_d, coupling_bound=float(bound),
        status="optimal" if sol is None else sol.status)


def iss_constants(P, coupling_bound: float, vartheta: float):
    """(alpha_lo, alpha_hi, rho) for V = x'Px: rho = lambda_max(P) * bound^2 / vartheta."""
    ev = sym_eig(P)[0]
    return float(ev[0]), float(ev[-1]), float(ev[-1] * coupling_bound ** 2 / vartheta)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def condition_matrix(problem: SynthesisProblem, result: SynthesisResult, X: np.ndarray) -> np.ndarray:
    """S(x) = gamma(x) Z - H(x) - (vartheta + kappa) Pbar at a batch of points -> (P, dim, dim)."""
    X = np.atleast_2d(X)
    n, N, M, D = problem.n, problem.N, problem.M, problem.dim
    Z = problem.data_matrix
    g = result.gamma.evaluate(X)[:, 0, 0]
    phi = result.Phi.to_array()
    S = g[:, None, None] * Z[None]
    C = np.zeros((X.shape[0], problem.s, n))
    C[:, :N] = problem.psi.evaluate(X) @ phi
    C[:, N:N + M] = problem.dict_G.evaluate(X) @ result.K.evaluate(X)
    S[:, n:, :n] -= C
    S[:, :n, n:] -= np.transpose(C, (0, 2, 1))
    S[:, :n, :n] -= (problem.vartheta + problem.kappa) * phi
    return S


def grid_points(n: int, radius: float, density: int) -> np.ndarray:
    axis = np.linspace(-radius, radius, density)
    return np.array(np.meshgrid(*[axis] * n, indexing="ij")).reshape(n, -1).T


def verify_sos_residual(problem: SynthesisProblem, result: SynthesisResult, radius: float = 1.0,
                        density: int = 9, chunk: int = 2048) -> dict:
    """Worst lambda_min of S(x) over an inf-ball grid; pass iff >= -1e-6 (1 + max ||S||)."""
    pts = grid_points(problem.n, radius, density)
    worst, worst_pt, norm = np.inf, None, 0.0
    for k in range(0, len(pts), chunk):
        S = condition_matrix(problem, result, pts[k:k + chunk])
        ev = np.linalg.eigvalsh(S)
        lo = ev[:, 0]
        j = int(np.argmin(lo))
        if lo[j] < worst:
            worst, worst_pt = float(lo[j]), pts[k + j]
        norm = max(norm, float(np.max(np.abs(ev))))
    return {"min_eig": worst, "point": worst_pt, "scale": norm,
            "pass": bool(worst >= -1e-6 * (1.0 + norm)), "points": len(pts)}


@dataclass
class CertificateReport:
    worst_slack: float
    witness_x: np.ndarray
    witness_w: np.ndarray
    passed: bool
    samples: int

    def to_dict(self):
        return {"worst_slack": self.worst_slack, "witness_x": self.witness_x.tolist(),
                "witness_w": self.witness_w.tolist(), "pass": self.passed, "samples": self.samples}


def sample_ball(rng, count: int, dim: int, radius: float) -> np.ndarray:
    """Uniform samples in the Euclidean ball, with radii spread over many scales."""
    if dim == 0:
        return np.zeros((count, 0))
    v = rng.normal(size=(count, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / dim)
    # half of the points on a logarithmic radius scale to probe small and large states
    half = count // 2
    r[:half] = radius * 10 ** rng.uniform(-4, 0, size=(half, 1))
    return v * r


def iss_slack(result: SynthesisResult, vector_field, X: np.ndarray, Wn: np.ndarray) -> np.ndarray:
    """(Vdot + kappa V - rho |w|^2) / (1 + V) under u = K(x) P x, per sample."""
    X, Wn = np.atleast_2d(X), np.atleast_2d(Wn)
    P = result.P.to_array()
    xdot = vector_field(X, result.controller(X), Wn)
    V = result.lyapunov(X)
    Vdot = 2.0 * np.einsum("pi,ij,pj->p", X, P, xdot)
    return (Vdot + result.kappa * V - result.rho * np.sum(Wn * Wn, axis=1)) / (1.0 + V)


def certify_iss_oracle(result: SynthesisResult, vector_field, w_dim: int, samples: int = 1000,
                       x_radius: float = 10.0, w_radius: float = 10.0, seed: int = 0,
                       slack_tol: float = 1e-6) -> CertificateReport:
    """Check Vdot + kappa V - rho |w|^2 <= slack_tol (1 + V) on random (x, w).

    ``vector_field(X, U, Wn)`` returns xdot for batches (P, n), (P, m), (P, w_dim);
    it encapsulates the true dynamics and is supplied by the caller.
    """
    rng = np.random.default_rng(seed)
    n = result.P.dim
    X = sample_ball(rng, samples, n, x_radius)
    Wn = sample_ball(rng, samples, w_dim, w_radius)
    X[0] = 0.0
    slack = iss_slack(result, vector_field, X, Wn)
    j = int(np.argmax(slack))
    return CertificateReport(float(slack[j]), X[j], Wn[j], bool(slack[j] <= slack_tol), samples)
