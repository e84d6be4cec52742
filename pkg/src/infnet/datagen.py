"""Trajectory generation, derivative estimates and data matrices.

A whole truncated network is excited with piecewise-constant random inputs,
integrated with fixed-step RK4 and sampled every ``tau`` seconds.  Records for
individual subsystems are cut out of the network history on demand, which
keeps memory flat when a subsystem has thousands of neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import GroundTruth, TruncatedNetwork
from .polycore import PolynomialMatrix, SymMatrix, as_exponents, monomial_values

STREAM_INPUT = 1
STREAM_INIT = 2
STREAM_NOISE = 3
STREAM_SIM = 4
STREAM_EXTRA = 5

_MASK64 = (1 << 64) - 1


class DataError(ValueError):
    pass


class IntegrationDiverged(RuntimeError):
    def __init__(self, time: float):
        super().__init__(f"integration diverged (non-finite state) at t = {time:.6g}")
        self.time = time


def counter_rng(seed: int, index: int = 0, stream: int = 0, counter: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, subsystem index, stream), started at ``counter``."""
    key = np.array([int(seed) & _MASK64, ((int(index) << 16) ^ int(stream)) & _MASK64], dtype=np.uint64)
    ctr = np.array([0, int(counter) & _MASK64, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=ctr))


def excite(seed: int, index: int, t: int, amplitude: float, m: int = 1) -> np.ndarray:
    """Reproducible input for subsystem ``index`` on sample interval ``t``, uniform in [-a, a].

    Row ``t`` of the per-subsystem input stream, so it agrees with
    :func:`excitation_matrix`.
    """
    if amplitude <= 0:
        raise DataError("excitation amplitude must be positive")
    return counter_rng(seed, index, STREAM_INPUT).uniform(-amplitude, amplitude, size=(t + 1, m))[t]


def excitation_matrix(seed: int, size: int, T: int, amplitude: float, m: int) -> np.ndarray:
    """Inputs for all subsystems over T intervals, shape (T, size, m)."""
    U = np.empty((T, size, m))
    for i in range(size):
        U[:, i, :] = counter_rng(seed, i + 1, STREAM_INPUT).uniform(-amplitude, amplitude, size=(T, m))
    return U


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def network_field(trunc: TruncatedNetwork, truth: GroundTruth):
    """Return f(X, U) -> Xdot for the stacked network state X of shape (size, n)."""

    def f(X, U):
        out = truth.drift(X) + trunc.coupling(X)
        if U is not None:
            out = out + truth.input_term(X, U)
        return out

    return f


def integrate(trunc: TruncatedNetwork, truth: GroundTruth, policy, x0, tau_int: float, duration: float,
              sample_period: float | None = None):
    """Fixed-step RK4 on the truncated network.

    ``policy(k, t, X)`` returns the inputs (size, m) on sample interval k at
    time t and stage state X; pass None for the unforced system.  Returns (times, states, inputs) at the sample
    instants, with states of shape (K+1, size, n) and inputs (K, size, m).
    """
    sample_period = duration if sample_period is None else sample_period
    if sample_period <= 0 or tau_int <= 0:
        raise DataError("step sizes must be positive")
    if tau_int > sample_period / 10 + 1e-15:
        raise DataError("integration step must be at most a tenth of the sample period")
    X = np.array(x0, dtype=float).reshape(trunc.size, -1)
    if not np.all(np.isfinite(X)):
        raise DataError("initial state must be finite")
    n_samples = int(round(duration / sample_period))
    substeps = int(round(sample_period / tau_int))
    h = sample_period / substeps
    f = network_field(trunc, truth)

    def pol(k, t, Xs):
        return None if policy is None else policy(k, t, Xs)

    states = [X.copy()]
    inputs = []
    with np.errstate(over="ignore", invalid="ignore"):
        _steps(states, inputs, X, f, pol, policy, trunc.size, n_samples, substeps, sample_period, h)
    times = np.arange(n_samples + 1) * sample_period
    return times, np.array(states), np.array(inputs)


def _steps(states, inputs, X, f, pol, policy, size, n_samples, substeps, sample_period, h):
    for k in range(n_samples):
        t0 = k * sample_period
        for s in range(substeps):
            t = t0 + s * h
            k1 = f(X, pol(k, t, X))
            X2 = X + 0.5 * h * k1
            k2 = f(X2, pol(k, t + 0.5 * h, X2))
            X3 = X + 0.5 * h * k2
            k3 = f(X3, pol(k, t + 0.5 * h, X3))
            X4 = X + h * k3
            k4 = f(X4, pol(k, t + h, X4))
            X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(X)):
                raise IntegrationDiverged(t + h)
        states.append(X.copy())
        U0 = policy(k, t0, states[-2]) if policy is not None else None
        inputs.append(np.zeros((size, 0)) if U0 is None else np.asarray(U0, dtype=float))


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    tau: float
    T: int
    U: np.ndarray
    W: np.ndarray
    X: np.ndarray
    Xd: np.ndarray
    lambda_sq: SymMatrix
    seed: int
    index: int = 1
    perturbation: np.ndarray | None = None  # injected part of Xd (explicit noise mode)

    def __post_init__(self):
        if self.X.shape[1] != self.T + 1:
            raise DataError("X must hold T+1 samples")
        for name in ("U", "W", "Xd"):
            if getattr(self, name).shape[1] != self.T:
                raise DataError(f"{name} must hold T samples")

    @property
    def n(self):
        return self.X.shape[0]


@dataclass
class Collection:
    """Sampled history of a whole truncation plus per-subsystem record factory."""

    trunc: TruncatedNetwork
    tau: float
    T: int
    states: np.ndarray  # (T+1, size, n)
    inputs: np.ndarray  # (T, size, m)
    b: float
    seed: int
    noise_mode: str = "explicit"
    noise_fraction: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def perturbation(self, i: int) -> np.ndarray:
        n = self.states.shape[2]
        if self.noise_mode == "implicit" or self.b == 0:
            return np.zeros((n, self.T))
        a = self.b * self.noise_fraction
        return counter_rng(self.seed, i, STREAM_NOISE).uniform(-a, a, size=(n, self.T))

    def neighbor_rows(self, i: int) -> np.ndarray:
        nb = self.trunc.neighbors[i - 1]
        if not nb:
            return np.zeros((0, self.T))
        return np.vstack([self.states[: self.T, j - 1, :].T for j in nb])

    def neighbor_sum(self, i: int) -> np.ndarray:
        """Sum of the neighbour state rows (n x T); equals (1 ⊗ I) W for a uniform D block."""
        nb = self.trunc.neighbors[i - 1]
        out = np.zeros((self.states.shape[2], self.T))
        for j in nb:
            out += self.states[: self.T, j - 1, :].T
        return out

    def derivative_estimate(self, i: int) -> np.ndarray:
        return forward_difference(self.states[:, i - 1, :].T, self.tau) + self.perturbation(i)

    def record(self, i: int, with_w: bool = True) -> TrajectoryRecord:
        """Record of subsystem i; ``with_w=False`` leaves W empty (huge neighbour sets)."""
        if not 1 <= i <= self.trunc.size:
            raise IndexError(i)
        key = (i, with_w)
        if key not in self._cache:
            X = self.states[:, i - 1, :].T.copy()
            W = self.neighbor_rows(i) if with_w else np.zeros((0, self.T))
            self._cache[key] = TrajectoryRecord(
                tau=self.tau, T=self.T, U=self.inputs[:, i - 1, :].T.copy(), W=W, X=X,
                Xd=self.derivative_estimate(i), lambda_sq=noise_bound(self.b, X.shape[0], self.T),
                seed=self.seed, index=i, perturbation=self.perturbation(i))
        return self._cache[key]

    def __getitem__(self, i: int) -> TrajectoryRecord:
        return self.record(i)


def initial_state(seed: int, size: int, n: int, amplitude: float) -> np.ndarray:
    return counter_rng(seed, 0, STREAM_INIT).uniform(-amplitude, amplitude, size=(size, n))


def collect(trunc: TruncatedNetwork, x0, T: int, tau: float, b: float, amplitude: float, seed: int,
            noise_mode: str = "explicit", noise_fraction: float = 1.0, substeps: int = 20) -> Collection:
    """Excite every subsystem with zero-order-hold random inputs and sample T+1 states."""
    if T < 1:
        raise DataError("T must be at least 1")
    if b < 0:
        raise DataError("noise bound must be non-negative")
    if noise_mode not in ("explicit", "implicit"):
        raise DataError(f"unknown noise mode {noise_mode!r}")
    cls = trunc.desc.classes[0]
    if cls.truth is None:
        raise DataError("data generation needs the ground-truth dynamics")
    U = excitation_matrix(seed, trunc.size, T, amplitude, cls.m)

    def policy(k, t, X):
        return U[k]

    _, states, inputs = integrate(trunc, cls.truth, policy, x0, tau / substeps, T * tau, tau)
    return Collection(trunc, tau, T, states, inputs, b, seed, noise_mode, noise_fraction)


def true_derivative(coll: Collection, i: int) -> np.ndarray:
    """Exact xdot of subsystem i at the first T sample instants (harness only), n x T."""
    truth = coll.trunc.desc.classes[0].truth
    Xs = coll.states[: coll.T, i - 1, :]
    Us = coll.inputs[:, i - 1, :]
    nb_sum = coll.neighbor_sum(i).T
    return (truth.drift(Xs) + truth.input_term(Xs, Us)
            + nb_sum @ coll.trunc.desc.classes[0].d_block.T).T


def realized_noise(coll: Collection, i: int) -> np.ndarray:
    """Delta = true derivative - Xd for subsystem i (harness only)."""
    return true_derivative(coll, i) - coll.derivative_estimate(i)


# ---------------------------------------------------------------------------
# data matrices
# ---------------------------------------------------------------------------


def forward_difference(X, tau: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if tau <= 0:
        raise DataError("tau must be positive")
    if X.shape[1] < 2:
        raise DataError("forward differences need at least two samples")
    return (X[:, 1:] - X[:, :-1]) / tau


def noise_bound(b: float, n: int, T: int) -> SymMatrix:
    """Lambda Lambda^T = n b^2 T I for element-wise noise bounded by b."""
    if b < 0:
        raise DataError("noise bound must be non-negative")
    return SymMatrix.from_array(n * b * b * T * np.eye(n))


@dataclass(frozen=True)
class DataMatrices:
    J: np.ndarray
    G: np.ndarray
    W: np.ndarray
    Z: SymMatrix | None = None
    Y: SymMatrix | None = None

    @property
    def Q(self):
        return np.vstack([self.J, self.G, self.W])

    @property
    def L(self):
        return np.vstack([self.J, self.G])


def regressor_blocks(record: TrajectoryRecord, dict_F, dict_G: PolynomialMatrix):
    exps = np.array([as_exponents(m) for m in dict_F])
    Xs = record.X[:, : record.T].T
    if exps.shape[1] != Xs.shape[1]:
        raise DataError("dictionary does not match the state dimension")
    if dict_G.cols != record.U.shape[0]:
        raise DataError("input dictionary does not match the input dimension")
    J = monomial_values(exps, Xs).T
    G = np.einsum("pij,jp->ip", dict_G.evaluate(Xs), record.U)
    return J, G


def build_regressors(record: TrajectoryRecord, dict_F, dict_G: PolynomialMatrix) -> DataMatrices:
    J, G = regressor_blocks(record, dict_F, dict_G)
    return DataMatrices(J=J, G=G, W=record.W)


def assemble_Z(Xd, Q, lambda_sq) -> SymMatrix:
    Xd = np.atleast_2d(Xd)
    Q = np.atleast_2d(Q)
    LL = np.asarray(lambda_sq, dtype=float)
    if Xd.shape[1] != Q.shape[1] or LL.shape != (Xd.shape[0], Xd.shape[0]):
        raise DataError("inconsistent dimensions in Z assembly")
    top = Xd @ Xd.T - LL
    off = -Xd @ Q.T
    Z = np.block([[top, off], [off.T, Q @ Q.T]])
    return SymMatrix.from_array(Z, check=False)


def assemble_Y(Xd, D, W, L, lambda_sq) -> SymMatrix:
    Xd = np.atleast_2d(Xd)
    D = np.atleast_2d(D)
    W = np.atleast_2d(W)
    if D.size == 0 or W.size == 0:
        Xt = Xd
    else:
        if D.shape[1] != W.shape[0]:
            raise DataError("D and W are inconsistent")
        Xt = Xd - D @ W
    return assemble_Z(Xt, L, lambda_sq)


def assemble_Y_from_sum(Xd, d_block, neighbor_sum, L, lambda_sq) -> SymMatrix:
    """Y for a uniform block D_ij, using sum_j X_j instead of the full W."""
    return assemble_Z(np.atleast_2d(Xd) - np.atleast_2d(d_block) @ np.atleast_2d(neighbor_sum), L, lambda_sq)


def rank_check(Q, tol: float = 1e-9) -> dict:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    rows = Q.shape[0]
    if Q.size == 0:
        return {"rank": 0, "required": rows, "pass": rows == 0, "samples": Q.shape[1]}
    s = np.linalg.svd(Q, compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return {"rank": rank, "required": rows, "pass": rank == rows, "samples": Q.shape[1],
            "sample_count_ok": Q.shape[1] >= rows}


def consistency_matrix(Z, S) -> np.ndarray:
    """Xi = [I; S^T]^T Z [I; S^T] for a parameter stack S (n x s)."""
    Z = np.asarray(Z, dtype=float)
    S = np.atleast_2d(S)
    E = np.vstack([np.eye(S.shape[0]), S.T])
    Xi = E.T @ Z @ E
    return 0.5 * (Xi + Xi.T)


def export_csv(record: TrajectoryRecord, path) -> None:
    n, m = record.X.shape[0], record.U.shape[0]
    header = ["t"] + [f"x_{k + 1}" for k in range(n)] + [f"u_{k + 1}" for k in range(m)]
    lines = [",".join(header)]
    for k in range(record.T + 1):
        u = record.U[:, k] if k < record.T else np.full(m, np.nan)
        vals = [k * record.tau] + list(record.X[:, k]) + list(u)
        lines.append(",".join(f"{v:.17g}" for v in vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
