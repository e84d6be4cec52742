"""Case-study networks: rigid spacecraft, Lorenz oscillators, a planar academic system.

Each system comes in two flavours: an unknown interconnection (only a bound on
the coupling norm is used) and a known interconnection block.  Physical and
experiment parameters are collected in :class:`PipelineConfig`.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import GroundTruth, NetworkDescriptor, SubsystemClass, Topology
from .polycore import PolynomialMatrix

# principal moments of inertia used for the spacecraft example
SPACECRAFT_INERTIA = (2.0, 1.5, 1.0)


@dataclass
class PipelineConfig:
    name: str
    system: str  # spacecraft | lorenz | academic
    topology: str
    card: int
    known_d: bool
    T: int
    tau: float
    b: float
    kappa: float
    vartheta: float
    varkappa: float | None
    # data generation
    data_n: int = 0  # truncation size used for data; 0 -> 2*card (clip)
    amplitude: float = 0.1
    x0_amplitude: float = 0.1
    noise_mode: str = "explicit"
    noise_fraction: float = 1.0
    seed: int = 1
    # synthesis
    deg_K: int = 2
    deg_gamma: int = 2
    cond_max: float = 10.0
    # composition
    epsilon: float = 1e-9
    # validation and simulation
    oracle_samples: int = 1000
    oracle_radius: float = 10.0
    oracle_w_radius: float = 10.0
    grid_radius: float = 1.0
    grid_density: int = 9
    decrease_samples: int = 200
    sim_n: int = 20
    sim_card: int = 0  # band width used in simulation; 0 -> card
    sim_boundary: str = "clip"
    sim_horizon: float = 10.0
    sim_ic: float = 1e4
    sim_samples: int = 201
    out: str = "out"
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def with_overrides(self, **kw):
        cfg = copy.deepcopy(self)
        for k, v in kw.items():
            if k not in self.__dataclass_fields__:
                raise KeyError(f"unknown configuration field {k!r}")
            setattr(cfg, k, v)
        return cfg


# ---------------------------------------------------------------------------
# subsystem classes
# ---------------------------------------------------------------------------


def _identity_g(n):
    return PolynomialMatrix.constant(n, np.eye(n))


def spacecraft_class(kappa, vartheta, varkappa=None, inertia=SPACECRAFT_INERTIA) -> SubsystemClass:
    J1, J2, J3 = inertia
    a_star = np.diag([(J2 - J3) / J1, (J3 - J1) / J2, (J1 - J2) / J3])
    truth = GroundTruth(
        a_star=a_star, b_star=np.diag([1 / J1, 1 / J2, 1 / J3]),
        f_star_dict=[(0, 1, 1), (1, 0, 1), (1, 1, 0)], g_star_dict=_identity_g(3))
    dict_F = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 1, 1), (1, 0, 1)]
    psi = PolynomialMatrix.constant(3, np.eye(3)).vstack(PolynomialMatrix(3, [
        [{(0, 1, 0): 1.0}, {}, {}],
        [{}, {(0, 0, 1): 1.0}, {}],
        [{}, {}, {(1, 0, 0): 1.0}],
    ]))
    d_block = -1e-4 * np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)
    return SubsystemClass(n=3, m=3, dict_F=dict_F, dict_G=_identity_g(3), d_block=d_block, kappa=kappa,
                          vartheta=vartheta, varkappa=varkappa, psi_override=psi, truth=truth, name="spacecraft")


def lorenz_class(kappa, vartheta, varkappa=None) -> SubsystemClass:
    a_star = np.array([[-10, 10, 0, 0, 0], [28, -1, 0, -1, 0], [0, 0, -8 / 3, 0, 1]], dtype=float)
    truth = GroundTruth(
        a_star=a_star, b_star=np.eye(3),
        f_star_dict=[(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 0)], g_star_dict=_identity_g(3))
    dict_F = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 0), (0, 1, 1)]
    psi = PolynomialMatrix.constant(3, np.eye(3)).vstack(PolynomialMatrix(3, [
        [{(0, 0, 1): 1.0}, {}, {}],
        [{}, {(1, 0, 0): 1.0}, {}],
        [{}, {}, {(0, 1, 0): 1.0}],
    ]))
    d_block = 1e-3 * np.diag([1.0, 0.0, -1.0])
    return SubsystemClass(n=3, m=3, dict_F=dict_F, dict_G=_identity_g(3), d_block=d_block, kappa=kappa,
                          vartheta=vartheta, varkappa=varkappa, psi_override=psi, truth=truth, name="lorenz")


def academic_class(kappa, vartheta, varkappa=None) -> SubsystemClass:
    a_star = np.array([[0, 1, 0], [-1, -1, 1]], dtype=float)
    truth = GroundTruth(
        a_star=a_star, b_star=np.array([[0.0], [1.0]]),
        f_star_dict=[(1, 0), (0, 1), (1, 1)], g_star_dict=PolynomialMatrix(2, [[{(0, 1): 1.0}]]))
    dict_F = [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
    dict_G = PolynomialMatrix(2, [[{(0, 0): 1.0}], [{(1, 0): 1.0}], [{(0, 1): 1.0}]])
    psi = PolynomialMatrix.constant(2, np.eye(2)).vstack(PolynomialMatrix(2, [
        [{}, {(1, 0): 1.0}],
        [{(1, 0): 1.0}, {}],
        [{}, {(0, 1): 1.0}],
    ]))
    d_block = 1e-4 * np.array([[0, 0], [3, 0]], dtype=float)
    return SubsystemClass(n=2, m=1, dict_F=dict_F, dict_G=dict_G, d_block=d_block, kappa=kappa,
                          vartheta=vartheta, varkappa=varkappa, psi_override=psi, truth=truth, name="academic")


_CLASS_FACTORY = {"spacecraft": spacecraft_class, "lorenz": lorenz_class, "academic": academic_class}


def build_descriptor(cfg: PipelineConfig) -> NetworkDescriptor:
    cls = _CLASS_FACTORY[cfg.system](cfg.kappa, cfg.vartheta, cfg.varkappa)
    top = Topology("cascade") if cfg.topology == "cascade" else Topology("forward-band", cfg.card)
    return NetworkDescriptor([cls], top)


def simulation_descriptor(cfg: PipelineConfig) -> NetworkDescriptor:
    desc = build_descriptor(cfg)
    if cfg.topology == "cascade":
        return desc
    band = cfg.sim_card or cfg.card
    return NetworkDescriptor(desc.classes, Topology("forward-band", band))


# ---------------------------------------------------------------------------
# the six scenarios
# ---------------------------------------------------------------------------

PRESETS = {
    "spacecraft-unknownD": PipelineConfig(
        name="spacecraft-unknownD", system="spacecraft", topology="cascade", card=1, known_d=False,
        T=70, tau=0.1, b=0.01, kappa=0.1, vartheta=1.0, varkappa=0.05,
        amplitude=1.0, x0_amplitude=0.5, cond_max=20.0, sim_ic=1e4),
    "spacecraft-knownD": PipelineConfig(
        name="spacecraft-knownD", system="spacecraft", topology="forward-band", card=1800, known_d=True,
        T=50, tau=0.1, b=0.01, kappa=0.1, vartheta=5.5, varkappa=None,
        amplitude=1.0, x0_amplitude=0.5, cond_max=10.0, sim_n=50, sim_card=10, sim_ic=1e4),
    "lorenz-unknownD": PipelineConfig(
        name="lorenz-unknownD", system="lorenz", topology="cascade", card=1, known_d=False,
        T=25, tau=0.001, b=0.001, kappa=0.1, vartheta=0.8, varkappa=0.04,
        amplitude=0.05, x0_amplitude=0.001, cond_max=20.0, sim_ic=1e6),
    "lorenz-knownD": PipelineConfig(
        name="lorenz-knownD", system="lorenz", topology="forward-band", card=1000, known_d=True,
        T=80, tau=0.001, b=0.001, kappa=2.0, vartheta=1.0, varkappa=None,
        amplitude=0.05, x0_amplitude=0.001, cond_max=1.8, sim_n=50, sim_card=10, sim_ic=1e6),
    "academic-unknownD": PipelineConfig(
        name="academic-unknownD", system="academic", topology="forward-band", card=5, known_d=False,
        T=21, tau=0.008, b=0.01, kappa=0.5, vartheta=0.5, varkappa=0.06,
        amplitude=0.5, x0_amplitude=0.3, cond_max=10.0, sim_n=50, sim_ic=1.0),
    "academic-knownD": PipelineConfig(
        name="academic-knownD", system="academic", topology="forward-band", card=500, known_d=True,
        T=50, tau=0.01, b=0.01, kappa=0.5, vartheta=0.5, varkappa=None,
        amplitude=0.5, x0_amplitude=0.3, cond_max=8.0, sim_n=50, sim_card=10, sim_ic=1.0),
}


def preset(name: str) -> PipelineConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
