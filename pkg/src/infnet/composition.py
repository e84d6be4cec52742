"""Small-gain composition of subsystem ISS certificates.

Per-subsystem constants (kappa, alpha_lo, alpha_hi, rho) define the infinite
gain operator with entries rho_i / (alpha_lo_j kappa_i) on the neighbour
pattern.  For homogeneous banded networks its l1-induced norm is Card times the
uniform entry, which is compared against one.  The network Lyapunov function
is the sum of the subsystem ones (uniform weights).
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .network import TruncatedNetwork, instantiate_truncation


class CompositionError(ValueError):
    pass


@dataclass
class GainModel:
    """Per-class ISS constants plus the neighbour count of each class."""

    kappa: list
    alpha_lo: list
    alpha_hi: list
    rho: list
    card: list
    topology: str = "forward-band"

    def __post_init__(self):
        for name in ("kappa", "alpha_lo", "alpha_hi", "rho", "card"):
            setattr(self, name, [float(v) if name != "card" else int(v) for v in np.atleast_1d(getattr(self, name))])
        k = len(self.kappa)
        if any(len(getattr(self, f)) != k for f in ("alpha_lo", "alpha_hi", "rho", "card")):
            raise CompositionError("per-class lists must have equal length")
        for a, b, kap, r in zip(self.alpha_lo, self.alpha_hi, self.kappa, self.rho):
            if not (0 < a <= b < np.inf):
                raise CompositionError("need 0 < alpha_lo <= alpha_hi < inf")
            if kap <= 0:
                raise CompositionError("kappa must be positive")
            if r < 0:
                raise CompositionError("rho must be non-negative")

    @classmethod
    def homogeneous(cls, kappa, alpha_lo, alpha_hi, rho, card, topology="forward-band"):
        return cls([kappa], [alpha_lo], [alpha_hi], [rho], [card], topology)

    @classmethod
    def from_results(cls, results, cards, topology="forward-band"):
        return cls([r.kappa for r in results], [r.alpha_lo for r in results], [r.alpha_hi for r in results],
                   [r.rho for r in results], list(cards), topology)

    @property
    def classes(self) -> int:
        return len(self.kappa)


@dataclass
class CompositionResult:
    theta: float
    omega_entry: float
    norm11: float
    passed: bool
    mu: list
    kappa_inf: float
    clf_alpha_lo: float
    clf_alpha_hi: float
    epsilon: float
    column_check: bool = True

    def to_dict(self):
        return asdict(self)


def build_gain_entry(rho_i: float, alpha_lo_j: float, kappa_i: float):
    """(theta, omega) = (rho_i / alpha_lo_j, rho_i / (alpha_lo_j kappa_i))."""
    if alpha_lo_j <= 0:
        raise CompositionError("alpha_lo must be positive")
    if kappa_i <= 0:
        raise CompositionError("kappa must be positive")
    if rho_i < 0:
        raise CompositionError("rho must be non-negative")
    theta = rho_i / alpha_lo_j
    return theta, theta / kappa_i


def _require_homogeneous(model: GainModel):
    if model.topology not in ("cascade", "forward-band"):
        raise CompositionError(
            f"no closed-form column sum for topology {model.topology!r}; supply a custom column-sum bound")
    if model.classes != 1:
        raise CompositionError("closed-form column sums need a homogeneous (single-class) network")


def omega_norm_11(model: GainModel) -> float:
    """Column-sum supremum of the infinite gain matrix: Card * uniform entry."""
    _require_homogeneous(model)
    _, w = build_gain_entry(model.rho[0], model.alpha_lo[0], model.kappa[0])
    return model.card[0] * w


def small_gain(model: GainModel):
    """(pass, bound) with pass iff the l1-induced norm bound is below one."""
    bound = omega_norm_11(model)
    return bool(bound < 1.0), bound


def compute_mu_kappa(model: GainModel, epsilon: float = 1e-9):
    """Uniform weights mu = 1 and kappa_inf = (1 - norm11) kappa - epsilon.

    The column condition Card * theta <= kappa - kappa_inf is checked exactly.
    """
    ok, bound = small_gain(model)
    if not ok:
        raise CompositionError(f"small-gain condition fails: bound {bound:.6g} >= 1")
    if epsilon <= 0:
        raise CompositionError("epsilon must be positive")
    kappa = min(model.kappa)
    kappa_inf = (1.0 - bound) * kappa - epsilon
    if kappa_inf <= 0:
        raise CompositionError("epsilon too large: kappa_inf would not be positive")
    theta, _ = build_gain_entry(model.rho[0], model.alpha_lo[0], model.kappa[0])
    if model.card[0] * theta > model.kappa[0] - kappa_inf:
        raise CompositionError("column condition fails for uniform weights")
    return [1.0] * model.classes, kappa_inf


def compose_clf(model: GainModel, mu, kappa_inf: float):
    """Network CLF constants (alpha_lo, alpha_hi, kappa) for V = sum mu_i V_i."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise CompositionError("weights must be positive")
    zeta_lo, zeta_hi = min(model.alpha_lo), max(model.alpha_hi)
    return float(mu.min() * zeta_lo), float(mu.max() * zeta_hi), float(kappa_inf)


def compose(model: GainModel, epsilon: float = 1e-9) -> CompositionResult:
    """Full composition: gain entry, small-gain test and, if it passes, mu and kappa_inf."""
    _require_homogeneous(model)
    theta, w = build_gain_entry(model.rho[0], model.alpha_lo[0], model.kappa[0])
    ok, bound = small_gain(model)
    if not ok:
        return CompositionResult(theta, w, bound, False, [1.0], 0.0, 0.0, 0.0, epsilon, False)
    mu, kinf = compute_mu_kappa(model, epsilon)
    lo, hi, _ = compose_clf(model, mu, kinf)
    return CompositionResult(theta, w, bound, True, mu, kinf, lo, hi, epsilon, True)


def materialized_column_sums(model: GainModel, size: int, boundary: str = "clip") -> np.ndarray:
    """Column sums of the N x N truncation of the gain matrix (cross-check of the closed form)."""
    from .network import NetworkDescriptor, Topology

    _require_homogeneous(model)
    top = Topology("cascade") if model.topology == "cascade" else Topology("forward-band", model.card[0])
    trunc = instantiate_truncation(NetworkDescriptor([None], top), size, boundary)
    _, w = build_gain_entry(model.rho[0], model.alpha_lo[0], model.kappa[0])
    return np.asarray(trunc.adjacency().sum(axis=0)).ravel() * w


def network_decrease_check(trunc: TruncatedNetwork, result, closed_loop_field, mu=1.0, kappa_inf: float = 0.0,
                           samples: int = 200, radius: float = 10.0, seed: int = 0,
                           slack_tol: float = 1e-6) -> dict:
    """Sampled check of sum mu V_i' <= -kappa_inf sum mu V_i on a truncation.

    ``closed_loop_field(X)`` maps network states (size, n) to their time
    derivative under the synthesized controllers; it is supplied by the caller.
    The slack is normalised by 1 + V.
    """
    rng = np.random.default_rng(seed)
    n = trunc.n
    P = result.P.to_array()
    worst, witness = -np.inf, None
    for k in range(samples):
        X = rng.normal(size=(trunc.size, n))
        X *= radius * 10 ** rng.uniform(-4, 0) / max(np.linalg.norm(X), 1e-300)
        if k == 0:
            X[:] = 0.0
        Xdot = closed_loop_field(X)
        V = mu * np.einsum("pi,ij,pj->", X, P, X)
        Vdot = mu * 2.0 * np.einsum("pi,ij,pj->", X, P, Xdot)
        slack = (Vdot + kappa_inf * V) / (1.0 + V)
        if slack > worst:
            worst, witness = float(slack), X
    return {"worst_slack": worst, "pass": bool(worst <= slack_tol), "samples": samples, "witness": witness}


GAIN_HEADER = ["class", "kappa", "alpha_lo", "alpha_hi", "rho", "theta", "omega_entry", "card", "norm11", "pass"]


def gain_rows(model: GainModel, comp: CompositionResult, names=None) -> list:
    rows = []
    for c in range(model.classes):
        theta, w = build_gain_entry(model.rho[c], model.alpha_lo[c], model.kappa[c])
        rows.append([names[c] if names else str(c), model.kappa[c], model.alpha_lo[c], model.alpha_hi[c],
                     model.rho[c], theta, w, model.card[c], comp.norm11, comp.passed])
    return rows


def write_gains_csv(path, model: GainModel, comp: CompositionResult, names=None) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(GAIN_HEADER)
        for r in gain_rows(model, comp, names):
            wr.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
