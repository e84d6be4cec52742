"""Standard-form semidefinite programming.

Problem form::

    minimize    c_f . y  +  sum_k <C_k, X_k>
    subject to  A_f y + sum_k A_k svec(X_k) = b,     X_k PSD,   y free

``svec`` stacks the lower triangle row by row and scales off-diagonal entries
by sqrt(2), so that svec(A) . svec(X) = <A, X>.  All variables live in one
coordinate vector ``[y, svec(X_1), ..., svec(X_K)]`` and the constraint map is a
sparse matrix over those coordinates.

The solver is an infeasible-start primal-dual path-following method with
Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from .polycore import SymMatrix

SQRT2 = np.sqrt(2.0)


class SdpError(ValueError):
    pass


def svec_len(d: int) -> int:
    return d * (d + 1) // 2


def svec_index(d: int):
    """Row/column indices of the svec coordinates of a d x d block."""
    return np.tril_indices(d)


def svec(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    r, c = svec_index(A.shape[0])
    v = A[r, c].copy()
    v[r != c] *= SQRT2
    return v


def smat(v: np.ndarray, d: int) -> np.ndarray:
    r, c = svec_index(d)
    vals = np.where(r == c, v, v / SQRT2)
    A = np.zeros((d, d))
    A[r, c] = vals
    A[c, r] = vals
    return A


# ---------------------------------------------------------------------------
# problem container and builder
# ---------------------------------------------------------------------------


@dataclass
class SdpProblem:
    n_free: int
    blocks: list
    c: np.ndarray
    A: sparse.csr_matrix
    b: np.ndarray
    margin_var: int | None = None  # free-variable index of the margin t, if any
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.blocks = [int(d) for d in self.blocks]
        if any(d <= 0 for d in self.blocks):
            raise SdpError("block dimensions must be positive")
        if self.n_vars == 0:
            raise SdpError("problem has no variables")
        self.c = np.asarray(self.c, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.A = sparse.csr_matrix(self.A)
        if self.A.shape != (self.b.shape[0], self.n_vars) or self.c.shape != (self.n_vars,):
            raise SdpError("inconsistent problem dimensions")

    @property
    def n_vars(self) -> int:
        return self.n_free + sum(svec_len(d) for d in self.blocks)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def offsets(self) -> list:
        off = [self.n_free]
        for d in self.blocks:
            off.append(off[-1] + svec_len(d))
        return off

    def split(self, v: np.ndarray):
        """Split a coordinate vector into (free part, list of block matrices)."""
        off = self.offsets()
        mats = [smat(v[off[k]: off[k + 1]], d) for k, d in enumerate(self.blocks)]
        return v[: self.n_free], mats

    def join(self, y: np.ndarray, mats) -> np.ndarray:
        return np.concatenate([np.asarray(y, dtype=float)] + [svec(M) for M in mats])

    def permuted(self, perm) -> "SdpProblem":
        perm = np.asarray(perm)
        return SdpProblem(self.n_free, self.blocks, self.c, self.A[perm], self.b[perm], self.margin_var, self.labels)

    def dump(self, path) -> None:
        """Plain-text sparse dump: header lines, objective triplets, constraint triplets."""
        A = self.A.tocoo()
        with open(path, "w") as fh:
            fh.write(f"free {self.n_free}\n")
            fh.write("blocks " + " ".join(str(d) for d in self.blocks) + "\n")
            fh.write(f"constraints {self.m}\n")
            for j in np.flatnonzero(self.c):
                fh.write(f"c {j} {self.c[j]:.17g}\n")
            for i in np.flatnonzero(self.b):
                fh.write(f"b {i} {self.b[i]:.17g}\n")
            for i, j, v in zip(A.row, A.col, A.data):
                fh.write(f"a {i} {j} {v:.17g}\n")

    @classmethod
    def load(cls, path) -> "SdpProblem":
        n_free, blocks, m = 0, [], 0
        cs, bs, rows, cols, vals = {}, {}, [], [], []
        with open(path) as fh:
            for line in fh:
                tok = line.split()
                if not tok:
                    continue
                if tok[0] == "free":
                    n_free = int(tok[1])
                elif tok[0] == "blocks":
                    blocks = [int(t) for t in tok[1:]]
                elif tok[0] == "constraints":
                    m = int(tok[1])
                elif tok[0] == "c":
                    cs[int(tok[1])] = float(tok[2])
                elif tok[0] == "b":
                    bs[int(tok[1])] = float(tok[2])
                elif tok[0] == "a":
                    rows.append(int(tok[1]))
                    cols.append(int(tok[2]))
                    vals.append(float(tok[3]))
        nv = n_free + sum(svec_len(d) for d in blocks)
        c = np.zeros(nv)
        for j, v in cs.items():
            c[j] = v
        b = np.zeros(m)
        for i, v in bs.items():
            b[i] = v
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(m, nv))
        return cls(n_free, blocks, c, A, b)


class ProblemBuilder:
    """Incremental construction of an :class:`SdpProblem`.

    Linear expressions are dictionaries ``{coordinate: coefficient}``; use
    :meth:`entry` to address a matrix entry X_k[i, j] (the coefficient then
    multiplies the entry value, not its svec coordinate).
    """

    def __init__(self):
        self.n_free = 0
        self.blocks: list[int] = []
        self._rows: list[int] = []
        self._cols: list = []
        self._vals: list = []
        self._b: list[float] = []
        self._c: dict = {}
        self.margin_var = None
        self.labels: dict = {}

    def add_free(self, count: int = 1, label: str | None = None) -> np.ndarray:
        if self.blocks:
            raise SdpError("declare free variables before blocks")
        idx = np.arange(self.n_free, self.n_free + count)
        self.n_free += count
        if label:
            self.labels[label] = ("free", idx)
        return idx

    def add_block(self, dim: int, label: str | None = None) -> int:
        self.blocks.append(int(dim))
        k = len(self.blocks) - 1
        if label:
            self.labels[label] = ("block", k)
        return k

    def _block_offset(self, k: int) -> int:
        return self.n_free + sum(svec_len(d) for d in self.blocks[:k])

    def entry(self, k: int, i: int, j: int):
        """(coordinate, scale) such that X_k[i, j] = scale * v[coordinate]."""
        if i < j:
            i, j = j, i
        pos = i * (i + 1) // 2 + j
        return self._block_offset(k) + pos, (1.0 if i == j else 1.0 / SQRT2)

    def block_entry_map(self, k: int):
        """Arrays (coord, scale) for every (i, j) of block k, shape (d, d)."""
        d = self.blocks[k]
        ii, jj = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        hi, lo = np.maximum(ii, jj), np.minimum(ii, jj)
        coord = self._block_offset(k) + hi * (hi + 1) // 2 + lo
        scale = np.where(ii == jj, 1.0, 1.0 / SQRT2)
        return coord, scale

    def add_equalities(self, rows, cols, vals, rhs) -> np.ndarray:
        """Append len(rhs) equality rows given local row ids, coordinates and values."""
        base = len(self._b)
        self._rows.append(np.asarray(rows, dtype=np.int64) + base)
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._vals.append(np.asarray(vals, dtype=float))
        self._b.extend(np.atleast_1d(np.asarray(rhs, dtype=float)).tolist())
        return np.arange(base, len(self._b))

    def add_equality(self, expr: dict, rhs: float) -> int:
        cols = np.array(list(expr.keys()), dtype=np.int64)
        vals = np.array(list(expr.values()), dtype=float)
        return int(self.add_equalities(np.zeros(len(cols), dtype=np.int64), cols, vals, [rhs])[0])

    def set_objective(self, expr: dict) -> None:
        self._c = dict(expr)

    def build(self) -> SdpProblem:
        nv = self.n_free + sum(svec_len(d) for d in self.blocks)
        rows = np.concatenate(self._rows) if self._rows else np.zeros(0, dtype=np.int64)
        cols = np.concatenate(self._cols) if self._cols else np.zeros(0, dtype=np.int64)
        vals = np.concatenate(self._vals) if self._vals else np.zeros(0)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self._b), nv))
        A.sum_duplicates()
        A.eliminate_zeros()
        c = np.zeros(nv)
        for j, v in self._c.items():
            c[j] += v
        return SdpProblem(self.n_free, list(self.blocks), c, A, np.array(self._b), self.margin_var, dict(self.labels))


# ---------------------------------------------------------------------------
# solution container
# ---------------------------------------------------------------------------


@dataclass
class SdpSolution:
    status: str  # optimal | infeasible | max-iterations | stalled
    x: np.ndarray  # full coordinate vector [y, svec(X_1), ...]
    free: np.ndarray
    blocks: list  # SymMatrix per PSD block
    objective: float
    dual_objective: float
    residual: float  # max |A x - b|
    min_eig: float  # smallest eigenvalue over all primal blocks
    gap: float
    iterations: int
    dual: np.ndarray  # equality multipliers
    slacks: list = field(default_factory=list)  # dual PSD blocks as arrays
    certificate: np.ndarray | None = None  # Farkas direction when infeasible
    margin: float | None = None
    seconds: float = 0.0

    def summary(self) -> dict:
        return {"status": self.status, "objective": self.objective, "dual_objective": self.dual_objective,
                "residual": self.residual, "min_eig": self.min_eig, "gap": self.gap,
                "iterations": self.iterations, "margin": self.margin, "seconds": self.seconds}


# ---------------------------------------------------------------------------
# interior-point method
# ---------------------------------------------------------------------------


class _BlockMaps:
    """Per-block views of the constraint map used by the Newton system.

    For each block the constraint matrices are also stored as padded lists of
    their full (both triangles) nonzero entries, so W A_i W can be formed as a
    small batched product.
    """

    def __init__(self, prob: SdpProblem):
        off = prob.offsets()
        A = prob.A.tocsc()
        self.free = A[:, : prob.n_free].toarray() if prob.n_free else np.zeros((prob.m, 0))
        self.blocks = []
        for k, d in enumerate(prob.blocks):
            Ak = A[:, off[k]: off[k + 1]].tocsr()
            r, c = svec_index(d)
            cf = np.where(r == c, 1.0, SQRT2)
            self.blocks.append((d, Ak, Ak.T.tocsr(), r, c, cf, self._padded(Ak, r, c)))

    @staticmethod
    def _padded(Ak, r, c):
        coo = Ak.tocoo()
        off = coo.col
        diag = r[off] == c[off]
        vals = np.where(diag, coo.data, coo.data / SQRT2)
        # off-diagonal svec entries appear in both triangles
        rows = np.concatenate([coo.row, coo.row[~diag]])
        P = np.concatenate([r[off], c[off][~diag]])
        Q = np.concatenate([c[off], r[off][~diag]])
        V = np.concatenate([vals, vals[~diag]])
        order = np.argsort(rows, kind="stable")
        rows, P, Q, V = rows[order], P[order], Q[order], V[order]
        touched, start, count = np.unique(rows, return_index=True, return_counts=True)
        width = int(count.max()) if len(count) else 0
        Pp = np.zeros((len(touched), width), dtype=np.int64)
        Qp = np.zeros_like(Pp)
        Vp = np.zeros((len(touched), width))
        slot = np.arange(len(rows)) - np.repeat(start, count)
        idx = np.repeat(np.arange(len(touched)), count)
        Pp[idx, slot], Qp[idx, slot], Vp[idx, slot] = P, Q, V
        return touched, Pp, Qp, Vp


def _schur(maps: _BlockMaps, Ws, m: int, chunk: int = 512) -> np.ndarray:
    """M_ij = <A_i, W A_j W> summed over blocks."""
    M = np.zeros((m, m))
    for (d, Ak, AkT, r, c, cf, (rows, Pp, Qp, Vp)), W in zip(maps.blocks, Ws):
        for s in range(0, len(rows), chunk):
            P, Q, V = Pp[s: s + chunk], Qp[s: s + chunk], Vp[s: s + chunk]
            left = np.transpose(W[:, P], (1, 0, 2)) * V[:, None, :]  # (c, d, K)
            T = np.matmul(left, W[Q])  # (c, d, d) = W A_i W
            sv = T[:, r, c] * cf
            M[rows[s: s + chunk], :] += (Ak @ sv.T).T
    return M


def _nt_scaling(X, S):
    """NT scaling: returns (G, lam) with G G^T = W, W S W = X, and G^-1 X G^-T = diag(lam)."""
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(S)
    U, sv, Vt = np.linalg.svd(R.T @ L)
    G = L @ Vt.T / np.sqrt(sv)
    return G, sv


def _max_step(X, dX):
    """Largest alpha with X + alpha dX PSD (inf if unbounded)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    ev = np.linalg.eigvalsh(Li @ dX @ Li.T)
    lo = ev[0]
    return np.inf if lo >= 0 else -1.0 / lo


def solve(problem: SdpProblem, tol_eq: float = 1e-8, tol_psd: float = 1e-8, max_iter: int = 200,
          tol_gap: float = 1e-9, verbose: bool = False) -> SdpSolution:
    """Primal-dual interior-point solve of an :class:`SdpProblem`.

    Stops with ``optimal`` once relative primal and dual residuals are below
    ``tol_eq`` and the relative gap is below ``tol_gap``.  A dual ray that
    certifies primal infeasibility ends the run with ``infeasible``.
    """
    t0 = time.perf_counter()
    prob = problem
    m, nf = prob.m, prob.n_free
    maps = _BlockMaps(prob)
    off = prob.offsets()
    b, c = prob.b, prob.c
    Af = maps.free
    cf_vec = c[:nf]
    C = [smat(c[off[k]: off[k + 1]], d) for k, d in enumerate(prob.blocks)]
    normA = max(1.0, sla.norm(prob.A.data) if prob.A.nnz else 1.0)
    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.linalg.norm(c)

    def A_op(y, Xs):
        v = Af @ y if nf else np.zeros(m)
        for (d, Ak, AkT, r, cc, cf, _), X in zip(maps.blocks, Xs):
            v = v + Ak @ svec(X)
        return v

    def AT_op(lam):
        return [smat(AkT @ lam, d) for (d, Ak, AkT, r, cc, cf, _) in maps.blocks]

    # starting point
    Xs, Ss = [], []
    for k, d in enumerate(prob.blocks):
        Ak = maps.blocks[k][1]
        rown = np.sqrt(np.asarray(Ak.multiply(Ak).sum(axis=1)).ravel())
        xi = max(10.0, np.sqrt(d), d * np.max((1.0 + np.abs(b)) / (1.0 + rown)))
        eta = max(10.0, np.sqrt(d), np.max(rown) if m else 0.0, np.linalg.norm(C[k]))
        Xs.append(xi * np.eye(d))
        Ss.append(eta * np.eye(d))
    y = np.zeros(nf)
    lam = np.zeros(m)
    nu = sum(prob.blocks)

    status, it = "max-iterations", 0
    cert = None
    best = None
    for it in range(1, max_iter + 1):
        ATl = AT_op(lam)
        rp = b - A_op(y, Xs)
        rf = cf_vec - (Af.T @ lam if nf else np.zeros(0))
        Rd = [C[k] - ATl[k] - Ss[k] for k in range(len(C))]
        mu = sum(np.sum(X * S) for X, S in zip(Xs, Ss)) / nu
        pobj = float(c @ prob.join(y, Xs))
        dobj = float(b @ lam)
        pinf = np.linalg.norm(rp) / nb
        dinf = np.sqrt(np.linalg.norm(rf) ** 2 + sum(np.sum(R * R) for R in Rd)) / nc
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if verbose:
            print(f"{it:3d} p={pobj:+.6e} d={dobj:+.6e} pinf={pinf:.1e} dinf={dinf:.1e} mu={mu:.1e}")
        if best is None or max(pinf, dinf, gap) < best[0]:
            best = (max(pinf, dinf, gap), y.copy(), [X.copy() for X in Xs], lam.copy(), [S.copy() for S in Ss])
        if pinf <= tol_eq and dinf <= tol_eq and gap <= tol_gap:
            status = "optimal"
            break
        # Farkas ray: b'lam > 0, A_f' lam = 0, -A_k' lam PSD
        if dobj > 0 and m:
            scale_l = dobj
            ray_f = np.linalg.norm(Af.T @ lam) / scale_l if nf else 0.0
            ray_eig = min((np.linalg.eigvalsh(-A)[0] for A in ATl), default=0.0) / scale_l
            if dobj > 1e8 and ray_f * normA < 1e-8 and ray_eig > -1e-8 and pinf > tol_eq:
                status, cert = "infeasible", lam / scale_l
                break

        Gs, lams, Ws, Ginv = [], [], [], []
        try:
            for X, S in zip(Xs, Ss):
                G, lv = _nt_scaling(X, S)
                Gs.append(G)
                lams.append(lv)
                Ws.append(G @ G.T)
                Ginv.append(np.linalg.inv(G))
        except np.linalg.LinAlgError:
            status = "stalled"
            break
        Msch = _schur(maps, Ws, m)
        K = np.zeros((m + nf, m + nf))
        K[:m, :m] = Msch
        if nf:
            K[:m, m:] = Af
            K[m:, :m] = Af.T
        # tiny row-relative regularisation keeps dependent equalities factorable
        Kreg = K.copy()
        Kreg[np.arange(m), np.arange(m)] += 1e-13 * np.maximum(np.abs(np.diag(Msch)), 1e-300)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu = sla.lu_factor(Kreg, check_finite=False)
        except (ValueError, sla.LinAlgError):
            status = "stalled"
            break

        def kkt_solve(rhs):
            z = sla.lu_solve(lu, rhs, check_finite=False)
            for _ in range(2):
                z = z + sla.lu_solve(lu, rhs - K @ z, check_finite=False)
            return z

        def direction(Rhat):
            # Rc = G Rhat G', then dX + W dS W = Rc, dS = Rd - A' dlam
            Rc = [G @ R @ G.T for G, R in zip(Gs, Rhat)]
            h = rp - A_op(np.zeros(nf), [Rc[k] - Ws[k] @ Rd[k] @ Ws[k] for k in range(len(Rc))])
            sol = kkt_solve(np.concatenate([h, rf]))
            dlam, dy = sol[:m], sol[m:]
            ATd = AT_op(dlam)
            dS = [Rd[k] - ATd[k] for k in range(len(Rd))]
            dX = [Rc[k] - Ws[k] @ dS[k] @ Ws[k] for k in range(len(Rc))]
            return dy, dX, dlam, dS

        def steps(dX, dS):
            ap = min([_max_step(X, D) for X, D in zip(Xs, dX)] + [np.inf])
            ad = min([_max_step(S, D) for S, D in zip(Ss, dS)] + [np.inf])
            return ap, ad

        # predictor
        Rhat_a = [-np.diag(lv) for lv in lams]
        try:
            dy, dX, dlam, dS = direction(Rhat_a)
            ap, ad = steps(dX, dS)
        except np.linalg.LinAlgError:
            status = "stalled"
            break
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_a = sum(np.sum((X + ap * DX) * (S + ad * DS)) for X, DX, S, DS in zip(Xs, dX, Ss, dS)) / nu
        sigma = min(1.0, max(0.0, (mu_a / mu) ** 3))
        # corrector with second-order term in the scaled space
        Rhat = []
        for k, lv in enumerate(lams):
            dXh = Ginv[k] @ dX[k] @ Ginv[k].T
            dSh = Gs[k].T @ dS[k] @ Gs[k]
            corr = dXh @ dSh
            corr = corr + corr.T
            num = 2.0 * sigma * mu * np.eye(len(lv)) - 2.0 * np.diag(lv ** 2) - corr
            Rhat.append(num / (lv[:, None] + lv[None, :]))
        try:
            dy, dX, dlam, dS = direction(Rhat)
            ap, ad = steps(dX, dS)
        except np.linalg.LinAlgError:
            status = "stalled"
            break
        frac = 0.9 + 0.09 * min(1.0, ap, ad)
        ap, ad = min(1.0, frac * ap), min(1.0, frac * ad)
        y = y + ap * dy
        Xs = [X + ap * D for X, D in zip(Xs, dX)]
        lam = lam + ad * dlam
        Ss = [S + ad * D for S, D in zip(Ss, dS)]
        Xs = [0.5 * (X + X.T) for X in Xs]
        Ss = [0.5 * (S + S.T) for S in Ss]
        if max(ap, ad) < 1e-10:
            status = "stalled"
            break

    if status in ("max-iterations", "stalled") and best is not None:
        _, y, Xs, lam, Ss = best
    x = prob.join(y, Xs)
    res = float(np.max(np.abs(prob.A @ x - b))) if m else 0.0
    min_eig = min((float(np.linalg.eigvalsh(X)[0]) for X in Xs), default=0.0)
    pobj, dobj = float(c @ x), float(b @ lam)
    if status == "optimal" and (res > tol_eq * nb or min_eig < -tol_psd):
        status = "max-iterations"
    return SdpSolution(
        status=status, x=x, free=y.copy(), blocks=[SymMatrix.from_array(X, check=False) for X in Xs],
        objective=pobj, dual_objective=dobj, residual=res, min_eig=min_eig,
        gap=abs(pobj - dobj), iterations=it, dual=lam, slacks=Ss, certificate=cert,
        seconds=time.perf_counter() - t0)


def with_margin(problem: SdpProblem) -> SdpProblem:
    """Substitute X_k = X'_k + t I in every block and maximise t.

    The new free variable t is placed first; the original free variables follow.
    The original objective is dropped.
    """
    off = problem.offsets()
    col = np.zeros(problem.m)
    for k, d in enumerate(problem.blocks):
        col += problem.A[:, off[k]: off[k + 1]] @ svec(np.eye(d))
    A = sparse.hstack([sparse.csr_matrix(col[:, None]), problem.A]).tocsr()
    c = np.zeros(problem.n_vars + 1)
    c[0] = -1.0
    return SdpProblem(problem.n_free + 1, problem.blocks, c, A, problem.b, 0, dict(problem.labels))


def _bounded(problem: SdpProblem, t_max: float) -> SdpProblem:
    """Append t + s = t_max with a 1 x 1 slack block s."""
    col = np.zeros(problem.n_vars + 1)
    col[problem.margin_var] = 1.0
    col[-1] = 1.0
    A = sparse.vstack([sparse.hstack([problem.A, sparse.csr_matrix((problem.m, 1))]),
                       sparse.csr_matrix(col[None, :])]).tocsr()
    c = np.append(problem.c, 0.0)
    return SdpProblem(problem.n_free, problem.blocks + [1], c, A, np.append(problem.b, t_max),
                      problem.margin_var, dict(problem.labels))


def solve_feasibility_with_margin(problem: SdpProblem, t_max: float = 1e3, threshold: float = 1e-7,
                                  **kw) -> SdpSolution:
    """Maximise the uniform margin t and report success iff t* > threshold.

    Problems that already carry a margin variable (and a -t objective) are used
    as given; otherwise every block receives the shift X = X' + t I.  The margin
    is capped at ``t_max`` so degenerate problems stay bounded.  The returned
    blocks are the original X_k; ``status`` is ``infeasible`` when the equalities
    admit no solution or the best margin does not exceed the threshold.
    """
    shifted = problem.margin_var is None
    base = with_margin(problem) if shifted else problem
    sol = solve(_bounded(base, t_max), **kw)
    nv = base.n_vars
    y, mats = base.split(sol.x[:nv])
    t = float(y[base.margin_var])
    if shifted:
        mats = [X + t * np.eye(len(X)) for X in mats]
        y = y[1:]
        x = problem.join(y, mats)
    else:
        x = sol.x[:nv]
    status = sol.status
    if status == "optimal" and t <= threshold:
        status = "infeasible"
    min_eig = min((float(np.linalg.eigvalsh(X)[0]) for X in mats), default=0.0)
    return SdpSolution(
        status=status, x=x, free=np.asarray(y, dtype=float).copy(),
        blocks=[SymMatrix.from_array(X, check=False) for X in mats], objective=-sol.objective,
        dual_objective=-sol.dual_objective, residual=sol.residual, min_eig=min_eig, gap=sol.gap,
        iterations=sol.iterations, dual=sol.dual[: problem.m], slacks=sol.slacks[: len(problem.blocks)],
        certificate=sol.certificate, margin=t, seconds=sol.seconds)
