"""Command-line front end.

Subcommands: pipeline, collect, synthesize, compose, simulate, report.
Configurations come from a named preset, a JSON file, or both (the file
overrides the preset it names).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import composition, datagen, pipeline
from .presets import PRESETS, PipelineConfig, preset


def load_config(args) -> PipelineConfig:
    data = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        data = json.loads(path.read_text())
    name = getattr(args, "preset", None) or data.pop("preset", None)
    if name:
        cfg = preset(name)
        cfg = cfg.with_overrides(**{k: v for k, v in data.items() if k in PipelineConfig.__dataclass_fields__})
    elif data:
        cfg = PipelineConfig.from_dict(data)
    else:
        raise SystemExit("need --preset NAME or --config PATH")
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seed=int(args.seed))
    if getattr(args, "out", None):
        cfg = cfg.with_overrides(out=args.out)
    return cfg


def _outdir(cfg: PipelineConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_report(report: dict, timing: dict | None = None) -> str:
    cfg = report.get("config", {})
    lines = [f"preset      {cfg.get('name', '?')}", f"seed        {report.get('seed')}",
             f"verdict     {report.get('verdict')}"]
    if report.get("message"):
        lines.append(f"message     {report['message']}")
    solver = report.get("stages", {}).get("solver")
    if solver:
        lines.append(f"sdp         status={solver['status']} margin={_fmt(solver['margin'])} "
                     f"iterations={solver['iterations']}")
    syn = report.get("synthesis")
    if syn:
        lines.append("P =")
        for row in syn["P"]:
            lines.append("  " + "  ".join(f"{v:+.6e}" for v in row))
        lines.append("controller:")
        lines.extend("  " + s for s in syn["controller"])
        lines.append(f"alpha_lo={_fmt(syn['alpha_lo'])} alpha_hi={_fmt(syn['alpha_hi'])} "
                     f"kappa={_fmt(syn['kappa'])} rho={_fmt(syn['rho'])}")
    checks = report.get("checks")
    if checks:
        g, o = checks["grid"], checks["oracle"]
        lines.append(f"grid        min_eig={_fmt(g['min_eig'])} pass={g['pass']}")
        lines.append(f"oracle      worst_slack={_fmt(o['worst_slack'])} pass={o['pass']}")
        if "network_decrease" in checks:
            d = checks["network_decrease"]
            lines.append(f"network     worst_slack={_fmt(d['worst_slack'])} pass={d['pass']}")
    comp = report.get("composition")
    if comp:
        lines.append(f"gains       theta={_fmt(comp['theta'])} omega={_fmt(comp['omega_entry'])} "
                     f"card={cfg.get('card')} norm11={_fmt(comp['norm11'])} pass={comp['passed']}")
        lines.append(f"clf         alpha_lo={_fmt(comp['clf_alpha_lo'])} alpha_hi={_fmt(comp['clf_alpha_hi'])} "
                     f"kappa_inf={_fmt(comp['kappa_inf'])}")
    if timing:
        lines.append("timing      " + " ".join(f"{k}={_fmt(v)}" for k, v in sorted(timing.items())))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_pipeline(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    run = pipeline.run_pipeline(cfg)
    _write(out / "report.json", pipeline.dump_report(run.report))
    _write(out / "timing.json", pipeline.dump_report(run.timing))
    if run.gains is not None:
        composition.write_gains_csv(out / "gains.csv", run.gains, run.composed, [cfg.system])
        print(f"wrote {out / 'gains.csv'}")
    _write(out / "summary.txt", render_report(run.report, run.timing))
    print(f"verdict: {run.verdict}")
    if run.verdict == pipeline.VERDICT_SMALL_GAIN:
        print(pipeline.REMEDIATION)
    return pipeline.EXIT_CODES[run.verdict]


def cmd_collect(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    stage = pipeline.collect_data(cfg)
    datagen.export_csv(stage.record, out / f"data_{stage.index}.csv")
    np.savez(out / "data.npz", X=stage.record.X, U=stage.record.U, Xd=stage.record.Xd, J=stage.data.J,
             G=stage.data.G, W=stage.data.W,
             M=np.asarray(stage.data.Y if cfg.known_d else stage.data.Z, dtype=float))
    print(f"subsystem {stage.index}: rank {stage.rank['rank']}/{stage.rank['required']}, "
          f"{stage.seconds:.2f}s; wrote {out}")
    return 0


def cmd_synthesize(args) -> int:
    cfg = load_config(args)
    out = _outdir(cfg)
    stage = pipeline.collect_data(cfg)
    syn = pipeline.synthesize(cfg, stage)
    doc = {"config": cfg.to_dict(), "solver": syn.solution.summary(), "feasible": syn.feasible}
    if syn.result is not None:
        doc["synthesis"] = pipeline.result_to_dict(syn.result)
    _write(out / "synthesis.json", pipeline.dump_report(doc))
    print(f"margin {syn.solution.margin:.4g}: {'feasible' if syn.feasible else 'infeasible'}")
    return 0 if syn.feasible else pipeline.EXIT_CODES[pipeline.VERDICT_INFEASIBLE]


def _read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"report not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from exc


def cmd_compose(args) -> int:
    if args.report:
        rep = _read_json(args.report)
        cfg = PipelineConfig.from_dict(rep["config"])
        if "synthesis" not in rep:
            print("report holds no synthesis result")
            return 1
        syn = rep["synthesis"]
        kappa, lo, hi, rho = syn["kappa"], syn["alpha_lo"], syn["alpha_hi"], syn["rho"]
        card, top, out = cfg.card, cfg.topology, Path(args.out or Path(args.report).parent)
    else:
        if None in (args.rho, args.alpha_lo, args.kappa, args.card):
            print("need --report or all of --rho --alpha-lo --kappa --card")
            return 1
        kappa, lo, rho, card = args.kappa, args.alpha_lo, args.rho, args.card
        hi = args.alpha_hi or lo
        top, out = args.topology, Path(args.out or ".")
    model = composition.GainModel.homogeneous(kappa, lo, hi, rho, card, top)
    comp = composition.compose(model, args.epsilon)
    out.mkdir(parents=True, exist_ok=True)
    composition.write_gains_csv(out / "gains.csv", model, comp)
    print(f"norm11 = {comp.norm11:.6g} ({'pass' if comp.passed else 'fail'}); kappa_inf = {comp.kappa_inf:.6g}")
    if not comp.passed:
        print(pipeline.REMEDIATION)
    return 0 if comp.passed else pipeline.EXIT_CODES[pipeline.VERDICT_SMALL_GAIN]


def cmd_simulate(args) -> int:
    rep = _read_json(args.report)
    cfg = PipelineConfig.from_dict(rep["config"])
    out = Path(args.out or Path(args.report).parent)
    result = None
    if not args.open_loop:
        if "synthesis" not in rep:
            print("report holds no controller; use --open-loop")
            return 1
        if rep.get("verdict") != pipeline.VERDICT_OK:
            print(f"warning: simulating a design with verdict {rep.get('verdict')}")
        result = pipeline.result_from_dict(rep["synthesis"])
    sim = pipeline.simulate(cfg, result, args.n, args.horizon, args.ic, args.seed)
    pipeline.write_trajectories(sim, out)
    summary = (f"mode          {'open-loop' if result is None else 'closed-loop'}\n"
               f"subsystems    {sim.states.shape[1]}\n"
               f"horizon       {sim.times[-1]:.6g}\n"
               f"initial_norm  {sim.initial_norm:.6g}\n"
               f"final_norm    {sim.final_norm:.6g}\n"
               f"min_norm      {sim.min_norm:.6g}\n"
               f"ratio         {sim.ratio:.6g}\n"
               f"solver        {'ok' if sim.success else 'failed: ' + sim.message}\n")
    _write(out / "simulation.txt", summary)
    if not sim.success:
        print("certificate contradiction: closed-loop integration failed")
        return 5
    return 0


def cmd_report(args) -> int:
    rep = _read_json(args.report)
    timing_path = Path(args.report).parent / "timing.json"
    timing = json.loads(timing_path.read_text()) if timing_path.exists() else None
    sys.stdout.write(render_report(rep, timing))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infnet", description="Data-driven controller design for infinite networks")
    sub = ap.add_subparsers(dest="command", required=True)

    def cfg_flags(p):
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    p = sub.add_parser("pipeline", help="collect, synthesize, compose and report")
    cfg_flags(p)
    p.set_defaults(func=cmd_pipeline)
    p = sub.add_parser("collect", help="generate data and export the data matrices")
    cfg_flags(p)
    p.set_defaults(func=cmd_collect)
    p = sub.add_parser("synthesize", help="collect data and solve the synthesis SDP")
    cfg_flags(p)
    p.set_defaults(func=cmd_synthesize)
    p = sub.add_parser("compose", help="small-gain composition from a report or explicit constants")
    p.add_argument("--report")
    p.add_argument("--rho", type=float)
    p.add_argument("--alpha-lo", type=float)
    p.add_argument("--alpha-hi", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--card", type=int)
    p.add_argument("--topology", default="forward-band", choices=["cascade", "forward-band"])
    p.add_argument("--epsilon", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compose)
    p = sub.add_parser("simulate", help="simulate the truncated network from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--ic", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--open-loop", action="store_true")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("report", help="render a report as text")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
