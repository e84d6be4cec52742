"""End-to-end design: collect data, synthesize, compose, check and simulate.

Stages are plain functions over a :class:`PipelineConfig`; the command-line
front end strings them together and writes the files.  Functions marked
harness-side read the ground-truth model and never feed it into synthesis.
"""

from __future__ import annotations

import json
import resource
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import composition, datagen, network, sdpsolve, synthesis
from .polycore import PolynomialMatrix, SymMatrix
from .presets import PipelineConfig, build_descriptor, simulation_descriptor

MARGIN_THRESHOLD = 1e-7
# simulation stops once the state norm grows by this factor over the initial norm
BLOWUP_FACTOR = 1e6
SIM_METHOD = "BDF"

VERDICT_OK = "UGAS-certified"
VERDICT_SMALL_GAIN = "small-gain-failed"
VERDICT_INFEASIBLE = "synthesis-infeasible"
VERDICT_CERT = "certificate-failed"

EXIT_CODES = {VERDICT_OK: 0, VERDICT_SMALL_GAIN: 2, VERDICT_INFEASIBLE: 3, VERDICT_CERT: 4}

REMEDIATION = "Repeat Steps 4-14 with more collected samples T or different parameters kappa_i, vartheta_i"


class PipelineError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


@dataclass
class DataStage:
    desc: network.NetworkDescriptor
    trunc: network.TruncatedNetwork
    coll: datagen.Collection
    index: int
    record: datagen.TrajectoryRecord
    data: datagen.DataMatrices
    rank: dict
    seconds: float


def data_size(cfg: PipelineConfig) -> int:
    if cfg.data_n:
        return int(cfg.data_n)
    return 2 if cfg.topology == "cascade" else 2 * cfg.card


def collect_data(cfg: PipelineConfig) -> DataStage:
    """Simulate the data truncation and build the data matrices of one full-neighbour subsystem."""
    t0 = time.perf_counter()
    desc = build_descriptor(cfg)
    cls = desc.classes[0]
    trunc = network.instantiate_truncation(desc, data_size(cfg), "clip")
    x0 = datagen.initial_state(cfg.seed, trunc.size, cls.n, cfg.x0_amplitude)
    coll = datagen.collect(trunc, x0, cfg.T, cfg.tau, cfg.b, cfg.amplitude, cfg.seed,
                           cfg.noise_mode, cfg.noise_fraction)
    i = trunc.full_neighbor_index()
    if cfg.known_d:
        rec = coll.record(i, with_w=False)
        J, G = datagen.regressor_blocks(rec, cls.dict_F, cls.dict_G)
        L = np.vstack([J, G])
        Y = datagen.assemble_Y_from_sum(rec.Xd, cls.d_block, coll.neighbor_sum(i), L, rec.lambda_sq)
        dm = datagen.DataMatrices(J, G, np.zeros((0, cfg.T)), Y=Y)
        rank = datagen.rank_check(L)
    else:
        rec = coll.record(i)
        dm = datagen.build_regressors(rec, cls.dict_F, cls.dict_G)
        Z = datagen.assemble_Z(rec.Xd, dm.Q, rec.lambda_sq)
        dm = datagen.DataMatrices(dm.J, dm.G, dm.W, Z=Z)
        rank = datagen.rank_check(dm.Q)
    return DataStage(desc, trunc, coll, i, rec, dm, rank, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def synthesis_problem(cfg: PipelineConfig, stage: DataStage) -> synthesis.SynthesisProblem:
    cls = stage.desc.classes[0]
    common = dict(deg_K=cfg.deg_K, deg_gamma=cfg.deg_gamma, cond_max=cfg.cond_max)
    if cfg.known_d:
        return synthesis.SynthesisProblem(stage.data, cls.dict_F, cls.dict_G, cls.psi(), cfg.kappa, cfg.vartheta,
                                          True, d_norm=network.d_norm(stage.desc), **common)
    return synthesis.SynthesisProblem(stage.data, cls.dict_F, cls.dict_G, cls.psi(), cfg.kappa, cfg.vartheta,
                                      False, varkappa=cfg.varkappa, **common)


@dataclass
class SynthesisStage:
    problem: synthesis.SynthesisProblem
    compiled: synthesis.CompiledCondition
    solution: sdpsolve.SdpSolution
    result: synthesis.SynthesisResult | None
    feasible: bool
    seconds: float
    error: str | None = None


def synthesize(cfg: PipelineConfig, stage: DataStage) -> SynthesisStage:
    """Compile, solve with margin maximisation and recover the certificate.

    Recovery is attempted whenever Phi is positive definite, so that a
    below-threshold design can still be inspected; ``feasible`` records
    whether the margin cleared the threshold.
    """
    t0 = time.perf_counter()
    prob = synthesis_problem(cfg, stage)
    comp = synthesis.compile_condition(prob)
    sol = sdpsolve.solve_feasibility_with_margin(comp.sdp, threshold=MARGIN_THRESHOLD)
    result, err = None, None
    feasible = sol.status == "optimal" and sol.margin is not None and sol.margin >= MARGIN_THRESHOLD
    if sol.certificate is None:
        try:
            result = synthesis.recover_any(prob, comp, sol)
        except synthesis.RecoveryError as exc:
            err = str(exc)
    else:
        err = "equality constraints are inconsistent"
    if result is not None:
        result.solve_seconds = sol.seconds
        result.status = "optimal" if feasible else "below-margin"
    return SynthesisStage(prob, comp, sol, result, feasible, time.perf_counter() - t0, err)


# ---------------------------------------------------------------------------
# harness-side model callables
# ---------------------------------------------------------------------------


def subsystem_field(cls: network.SubsystemClass, d_full: np.ndarray):
    """xdot(X, U, W) of one subsystem with the true model (harness side)."""
    truth = cls.truth

    def f(X, U, Wn):
        out = truth.drift(X) + truth.input_term(X, U)
        if Wn.shape[1]:
            out = out + Wn @ d_full.T
        return out

    return f


def closed_loop_field(trunc: network.TruncatedNetwork, result: synthesis.SynthesisResult | None):
    """Network state (size, n) -> derivative under u_i = K(x_i) P x_i (or open loop)."""
    truth = trunc.desc.classes[0].truth

    def f(X):
        out = truth.drift(X) + trunc.coupling(X)
        if result is not None:
            out = out + truth.input_term(X, result.controller(X))
        return out

    return f


# ---------------------------------------------------------------------------
# checks and composition
# ---------------------------------------------------------------------------


def run_checks(cfg: PipelineConfig, stage: DataStage, syn: SynthesisStage) -> dict:
    res = syn.result
    cls = stage.desc.classes[0]
    card = stage.desc.card
    d_full = stage.desc.assembled_d(card=card)
    grid = synthesis.verify_sos_residual(syn.problem, res, cfg.grid_radius, cfg.grid_density)
    cert = synthesis.certify_iss_oracle(res, subsystem_field(cls, d_full), d_full.shape[1],
                                        cfg.oracle_samples, cfg.oracle_radius, cfg.oracle_w_radius, cfg.seed)
    return {"grid": {k: v for k, v in grid.items() if k != "point"} | {"point": list(map(float, grid["point"]))},
            "oracle": cert.to_dict()}


def gain_model(cfg: PipelineConfig, res: synthesis.SynthesisResult) -> composition.GainModel:
    return composition.GainModel.homogeneous(res.kappa, res.alpha_lo, res.alpha_hi, res.rho, cfg.card,
                                             "cascade" if cfg.topology == "cascade" else "forward-band")


def sim_truncation(cfg: PipelineConfig, size: int | None = None) -> network.TruncatedNetwork:
    return network.instantiate_truncation(simulation_descriptor(cfg), size or cfg.sim_n, cfg.sim_boundary)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


class _Escaped(RuntimeError):
    def __init__(self, time: float):
        super().__init__(time)
        self.time = float(time)


@dataclass
class Simulation:
    times: np.ndarray
    states: np.ndarray  # (K, size, n)
    inputs: np.ndarray  # (K, size, m)
    initial_norm: float
    final_norm: float
    min_norm: float
    ratio: float
    success: bool
    message: str = ""


def simulate(cfg: PipelineConfig, result: synthesis.SynthesisResult | None, size: int | None = None,
             horizon: float | None = None, ic: float | None = None, seed: int | None = None,
             x0: np.ndarray | None = None) -> Simulation:
    """Integrate the truncated closed loop (or open loop when result is None) with a stiff solver."""
    trunc = sim_truncation(cfg, size)
    n = trunc.n
    m = trunc.desc.classes[0].m
    horizon = cfg.sim_horizon if horizon is None else horizon
    ic = cfg.sim_ic if ic is None else ic
    seed = cfg.seed if seed is None else seed
    if x0 is None:
        x0 = datagen.counter_rng(seed, 0, datagen.STREAM_SIM).uniform(-ic, ic, size=(trunc.size, n))
    x0 = np.asarray(x0, dtype=float).reshape(trunc.size, n)
    f = closed_loop_field(trunc, result)

    limit = BLOWUP_FACTOR * max(1.0, float(np.linalg.norm(x0)))

    def rhs(t, z):
        # stop instead of chasing a finite-time blow-up with ever smaller steps
        if not np.linalg.norm(z) < limit:
            raise _Escaped(t)
        return f(z.reshape(trunc.size, n)).ravel()

    t_eval = np.linspace(0.0, horizon, cfg.sim_samples)
    # a diverging closed loop is reported through ``success``, not through warnings
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            sol = solve_ivp(rhs, (0.0, horizon), x0.ravel(), method=SIM_METHOD, t_eval=t_eval, rtol=1e-8,
                            atol=1e-12 * max(1.0, ic))
            times, states = sol.t, sol.y.T.reshape(-1, trunc.size, n)
            ok, message = bool(sol.success and np.all(np.isfinite(states))), sol.message
        except _Escaped as exc:
            times = np.array([0.0, exc.time])
            states = np.stack([x0, np.full_like(x0, np.inf)])
            ok, message = False, f"state norm exceeded {limit:.3g} at t = {exc.time:.6g}"
        if result is not None and np.all(np.isfinite(states)):
            inputs = np.array([result.controller(X) for X in states])
        else:
            inputs = np.zeros((len(states), trunc.size, m))
        norms = np.linalg.norm(states.reshape(len(states), -1), axis=1)
    n0 = float(norms[0])
    return Simulation(times, states, inputs, n0, float(norms[-1]), float(norms.min()),
                      float(norms[-1] / n0) if n0 > 0 else 0.0, ok, message)


def write_trajectories(sim: Simulation, outdir, indices=None) -> list:
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    size, n = sim.states.shape[1:]
    m = sim.inputs.shape[2]
    paths = []
    for i in (range(1, size + 1) if indices is None else indices):
        header = ["t"] + [f"x_{k + 1}" for k in range(n)] + [f"u_{k + 1}" for k in range(m)]
        rows = np.column_stack([sim.times, sim.states[:, i - 1, :], sim.inputs[:, i - 1, :]])
        p = outdir / f"traj_{i}.csv"
        with open(p, "w") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(f"{v:.17g}" for v in r) + "\n")
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def result_to_dict(res: synthesis.SynthesisResult) -> dict:
    return {
        "P": res.P.to_array().tolist(), "Phi": res.Phi.to_array().tolist(),
        "K": res.K.to_json(), "gamma": res.gamma.to_json(),
        "alpha_lo": res.alpha_lo, "alpha_hi": res.alpha_hi, "rho": res.rho, "kappa": res.kappa,
        "vartheta": res.vartheta, "margin": res.margin, "known_d": res.known_d,
        "coupling_bound": res.coupling_bound, "status": res.status,
        "controller": res.controller_strings("{:.8g}"),
    }


def result_from_dict(d: dict) -> synthesis.SynthesisResult:
    P = np.array(d["P"], dtype=float)
    return synthesis.SynthesisResult(
        Phi=SymMatrix.from_array(np.array(d["Phi"]), check=False), P=SymMatrix.from_array(P, check=False),
        K=PolynomialMatrix.from_json(d["K"]), gamma=PolynomialMatrix.from_json(d["gamma"]),
        alpha_lo=d["alpha_lo"], alpha_hi=d["alpha_hi"], rho=d["rho"], kappa=d["kappa"], vartheta=d["vartheta"],
        margin=d["margin"], known_d=d["known_d"], coupling_bound=d["coupling_bound"], status=d["status"])


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_clean(report), indent=1, sort_keys=True) + "\n"


@dataclass
class PipelineRun:
    report: dict
    timing: dict
    data: DataStage | None = None
    synthesis: SynthesisStage | None = None
    gains: composition.GainModel | None = None
    composed: composition.CompositionResult | None = None
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return self.report["verdict"]


def run_pipeline(cfg: PipelineConfig, decrease_check: bool = True) -> PipelineRun:
    """collect -> regressors -> rank -> compile -> solve -> recover -> checks -> compose."""
    timing = {}
    # the output location is not part of the design, so reports from different directories match
    config = {k: v for k, v in cfg.to_dict().items() if k != "out"}
    report = {"config": config, "seed": cfg.seed, "stages": {}}
    stage = collect_data(cfg)
    timing["collect_seconds"] = stage.seconds
    report["stages"]["data"] = {"index": stage.index, "rank": stage.rank, "T": cfg.T,
                                "noise_bound": stage.record.lambda_sq.to_array()[0, 0]}
    if not stage.rank["pass"]:
        report["stages"]["data"]["warning"] = "data matrix is rank deficient; the condition may still be feasible"
    syn = synthesize(cfg, stage)
    timing["synthesis_seconds"] = syn.seconds
    timing["solver_seconds"] = syn.solution.seconds
    sol = syn.solution
    report["stages"]["solver"] = {
        "status": sol.status, "margin": sol.margin, "iterations": sol.iterations, "residual": sol.residual,
        "gap": sol.gap, "threshold": MARGIN_THRESHOLD, "size": {"constraints": syn.compiled.sdp.m,
                                                               "blocks": syn.compiled.sdp.blocks,
                                                               "free": syn.compiled.sdp.n_free}}
    run = PipelineRun(report, timing, stage, syn)
    res = syn.result
    if res is None:
        report["verdict"] = VERDICT_INFEASIBLE
        report["message"] = syn.error or "synthesis failed"
        return _finish(run)
    report["synthesis"] = result_to_dict(res)
    t0 = time.perf_counter()
    checks = run_checks(cfg, stage, syn)
    timing["check_seconds"] = time.perf_counter() - t0
    report["checks"] = checks
    model = gain_model(cfg, res)
    comp = composition.compose(model, cfg.epsilon)
    run.gains, run.composed = model, comp
    report["composition"] = comp.to_dict()
    if not syn.feasible:
        report["verdict"] = VERDICT_INFEASIBLE
        report["message"] = f"SDP margin {sol.margin:.3g} below threshold {MARGIN_THRESHOLD:g}"
        return _finish(run)
    if not comp.passed:
        report["verdict"] = VERDICT_SMALL_GAIN
        report["message"] = REMEDIATION
        return _finish(run)
    if decrease_check:
        trunc = sim_truncation(cfg, min(cfg.sim_n, 10))
        dec = composition.network_decrease_check(trunc, res, closed_loop_field(trunc, res), 1.0, comp.kappa_inf,
                                                 cfg.decrease_samples, cfg.oracle_radius, cfg.seed)
        report["checks"]["network_decrease"] = {k: v for k, v in dec.items() if k != "witness"}
    passed = checks["grid"]["pass"] and checks["oracle"]["pass"]
    if decrease_check:
        passed = passed and report["checks"]["network_decrease"]["pass"]
    report["verdict"] = VERDICT_OK if passed else VERDICT_CERT
    if not passed:
        report["message"] = "a pointwise check of the certificate failed"
    return _finish(run)


def _finish(run: PipelineRun) -> PipelineRun:
    # process-wide high-water mark (kilobytes on Linux)
    run.timing["peak_rss_mb"] = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    return run
