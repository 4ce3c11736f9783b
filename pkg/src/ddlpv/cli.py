"""Command-line front end: collect, check, synth, simulate, report.

Exit codes: 0 success, 1 I/O or configuration error, 2 infeasible or
ill-posed problem, 3 numerical failure (including a diverging simulation).
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import build_data_matrices, pe_check, read_dictionary, window_sweep, write_dictionary
from .core.representation import best_window
from .core.types import DISC_BOX
from .errors import (ConsistencyError, DivergenceError, IllConditionedError, IllPosedError,
                     InfeasibleError, NumericalFailure, ScheduleBoxError)
from .plant import (DiscParams, Scenario, TrajectoryLog, collect_dictionary, disturbance_scenario,
                    empirical_l2_ratio, frozen_discretization, generate_excitation,
                    recovery_times, regulation_scenario, run_closed_loop, settling_time,
                    steady_state_errors, tracking_scenario)
from .synthesis import (DISC_L2_WEIGHTS, DISC_QP_WEIGHTS, L2Weights, QuadraticWeights,
                        SynthesisResult, certify_closed_loop, synthesize)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("ddlpv")

EXIT_OK, EXIT_IO, EXIT_PROBLEM, EXIT_NUMERIC = 0, 1, 2, 3
SCENARIOS = ("tracking", "disturbance", "regulation")
RECORD_FILE, DICT_FILE, SWEEP_FILE, PE_FILE = "record.csv", "dictionary.csv", "window_sweep.csv", "pe_report.json"


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Everything a run needs; every field has a working default."""

    plant: DiscParams = field(default_factory=DiscParams)
    seed: int = 0
    cutoff_hz: float = 40.0
    amplitude: float = 10.0
    horizon: float = 1.0
    x0: tuple = (0.0, 0.0)
    offset: int | None = None  # None: best-conditioned PE window
    N_d: int = 7
    kind: str = "qp"
    qp_weights: QuadraticWeights = DISC_QP_WEIGHTS
    l2_weights: L2Weights = DISC_L2_WEIGHTS
    scenario: str = "tracking"
    scenario_options: dict = field(default_factory=dict)
    out: Path = Path("run")

    @property
    def n_samples(self) -> int:
        return int(round(self.horizon / self.plant.Ts))

    def weights(self, kind: str | None = None):
        return self.qp_weights if (kind or self.kind) == "qp" else self.l2_weights

    def validate(self) -> "RunConfig":
        if self.kind not in ("qp", "l2"):
            raise ConfigError(f"synthesis kind must be 'qp' or 'l2', got {self.kind!r}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.N_d < 1:
            raise ConfigError("N_d must be at least 1")
        required = 2 * (2 + 1)  # (1 + n_p)(n_x + n_u) for the disc
        if self.N_d < required:
            warnings.warn(f"N_d = {self.N_d} is below the excitation threshold {required}; "
                          "the dictionary cannot be persistently exciting", stacklevel=2)
        if self.n_samples < self.N_d + 1:
            raise ConfigError(f"horizon of {self.n_samples} samples is shorter than a window "
                              f"of {self.N_d + 1}")
        if self.offset is not None and not 0 <= self.offset <= self.n_samples - self.N_d - 1:
            raise ConfigError(f"window offset {self.offset} does not fit {self.n_samples} samples")
        return self

    def to_dict(self) -> dict:
        return {
            "plant": self.plant.to_dict(),
            "excitation": {"seed": self.seed, "cutoff_hz": self.cutoff_hz,
                           "amplitude": self.amplitude, "horizon": self.horizon,
                           "x0": list(self.x0)},
            "window": {"offset": "auto" if self.offset is None else self.offset, "N_d": self.N_d},
            "synthesis": {"kind": self.kind, "qp": self.qp_weights.to_dict(),
                          "l2": self.l2_weights.to_dict()},
            "scenario": {"name": self.scenario, **self.scenario_options},
            "out": str(self.out),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            cfg = cls()
            plant = DiscParams.from_dict(d.get("plant", {})) if "plant" in d else cfg.plant
            exc = d.get("excitation", {})
            win = d.get("window", {})
            syn = d.get("synthesis", {})
            sc = dict(d.get("scenario", {}))
            offset = win.get("offset", "auto")
            cfg = replace(
                cfg, plant=plant,
                seed=int(exc.get("seed", cfg.seed)),
                cutoff_hz=float(exc.get("cutoff_hz", cfg.cutoff_hz)),
                amplitude=float(exc.get("amplitude", cfg.amplitude)),
                horizon=float(exc.get("horizon", cfg.horizon)),
                x0=tuple(float(v) for v in exc.get("x0", cfg.x0)),
                offset=None if offset in (None, "auto") else int(offset),
                N_d=int(win.get("N_d", cfg.N_d)),
                kind=str(syn.get("kind", cfg.kind)),
                qp_weights=QuadraticWeights.from_config(syn["qp"]) if "qp" in syn else cfg.qp_weights,
                l2_weights=L2Weights.from_config(syn["l2"]) if "l2" in syn else cfg.l2_weights,
                scenario=str(sc.pop("name", cfg.scenario)),
                scenario_options=sc,
                out=Path(d.get("out", cfg.out)),
            )
        except (KeyError, TypeError, ValueError) as exc_:
            raise ConfigError(f"invalid configuration: {exc_}") from exc_
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        text = path.read_text()
        try:
            data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(data)


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "window", None):
        off, _, nd = args.window.partition(":")
        try:
            cfg = replace(cfg, offset=None if off in ("", "auto") else int(off),
                          N_d=int(nd) if nd else cfg.N_d)
        except ValueError as exc:
            raise ConfigError(f"--window expects OFFSET[:N_d], got {args.window!r}") from exc
    if getattr(args, "kind", None):
        cfg = replace(cfg, kind=args.kind)
    if getattr(args, "scenario", None):
        cfg = replace(cfg, scenario=args.scenario)
    if getattr(args, "out", None):
        cfg = replace(cfg, out=Path(args.out))
    return cfg.validate()


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# ---------------------------------------------------------------- commands

def cmd_collect(args) -> int:
    cfg = _config(args)
    u = generate_excitation(cfg.seed, cfg.n_samples, cfg.cutoff_hz, cfg.amplitude, cfg.plant.Ts)
    record = collect_dictionary(cfg.plant, u, None, cfg.x0).record
    offset = cfg.offset
    if offset is None:
        offset = best_window(record, cfg.N_d)
        if offset is None:
            raise IllPosedError(f"no window of N_d = {cfg.N_d} in the record is persistently exciting")
    coll = collect_dictionary(cfg.plant, u, (offset, cfg.N_d), cfg.x0)
    created = {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(), "config": cfg.to_dict()}
    write_dictionary(coll.record, cfg.out / RECORD_FILE, created)
    write_dictionary(coll.dictionary, cfg.out / DICT_FILE, {**created, "window_offset": offset})
    summary = {"record_samples": coll.record.N_d + 1, "window_offset": offset,
               "dictionary_samples": cfg.N_d + 1, "out": str(cfg.out)}
    if args.window_sweep:
        rows = window_sweep(coll.record, cfg.N_d)
        lines = ["offset,rank,required,condition_number,flagged"]
        lines += [f"{w.offset},{w.rank},{w.required},{w.condition_number:.17g},{int(w.flagged)}"
                  for w in rows]
        (cfg.out / SWEEP_FILE).write_text("\n".join(lines) + "\n")
        print(f"{'offset':>6} {'rank':>4} {'cond(G)':>12}  flag")
        for w in rows:
            print(f"{w.offset:>6} {w.rank:>4}/{w.required} {w.condition_number:>12.4g}  "
                  f"{'ILL-CONDITIONED' if w.flagged else ''}")
        summary["flagged_windows"] = [w.offset for w in rows if w.flagged]
    _emit(summary)
    return EXIT_OK


def cmd_check(args) -> int:
    d = read_dictionary(args.dictionary)
    rep = pe_check(build_data_matrices(d))
    out = {"dictionary": str(args.dictionary), **rep.to_dict()}
    _emit(out)
    target = Path(args.out) if args.out else Path(args.dictionary).parent / PE_FILE
    _write_json(target, out)
    return EXIT_OK if rep.is_pe else EXIT_PROBLEM


def cmd_synth(args) -> int:
    cfg = _config(args)
    d = read_dictionary(args.dictionary)
    res = synthesize(cfg.kind, d, cfg.weights())
    out = Path(args.out) if args.out else Path(args.dictionary).parent / f"result_{cfg.kind}.json"
    res.save(out)
    _emit({"kind": res.kind, "status": res.status, "gamma": res.gamma, "objective": res.objective,
           "gains": res.gains.to_dict(), "physical_gains": res.physical_gains().to_dict(),
           "certificate_passed": res.residuals.get("certificate_passed"), "result": str(out)})
    return EXIT_OK


def build_scenario(name: str, options: dict | None = None, seed: int = 0) -> Scenario:
    opts = dict(options or {})
    opts.setdefault("seed", seed)
    if name == "tracking":
        return tracking_scenario(**opts)
    if name == "disturbance":
        return disturbance_scenario(**opts)
    if name == "regulation":
        if "x0" in opts:
            opts["x0"] = tuple(opts["x0"])
        return regulation_scenario(**opts)
    raise ConfigError(f"unknown scenario {name!r}")


def summarize(log_: TrajectoryLog, scenario: Scenario, result: SynthesisResult,
              params: DiscParams) -> dict:
    s = {"scenario": scenario.kind, "duration": scenario.duration, "max_abs_u": float(np.abs(log_.u).max()),
         "max_abs_theta": float(np.abs(log_.theta).max()), "seed": scenario.seed}
    if scenario.pulses:
        s["recovery"] = recovery_times(log_, scenario)
        if result.kind == "l2":
            w = L2Weights(np.array(result.weights["W_S"]), np.array(result.weights["W_R"]),
                          result.weights.get("lam", 0.0))
            s["empirical_l2_ratio"] = empirical_l2_ratio(params, result.gains, w,
                                                         result.scheduling_map, seed=scenario.seed)
            s["gamma"] = result.gamma
    else:
        s["steady_state"] = steady_state_errors(log_, scenario)
        s["settling_time_0.01"] = settling_time(log_, 0.01, scenario.setpoints[-1][1])
    return s


def cmd_simulate(args) -> int:
    cfg = _config(args)
    res = SynthesisResult.load(args.result)
    sc = build_scenario(cfg.scenario, cfg.scenario_options, cfg.seed)
    traj = run_closed_loop(cfg.plant, res.gains, sc, res.scheduling_map)
    out = Path(args.out) if args.out else Path(args.result).parent / f"sim_{cfg.scenario}_{res.kind}"
    traj.write_csv(out / "trajectory.csv")
    summary = summarize(traj, sc, res, cfg.plant)
    _write_json(out / "summary.json", summary)
    _emit(summary)
    return EXIT_OK


def cmd_report(args) -> int:
    run = Path(args.run_dir)
    if not run.is_dir():
        raise FileNotFoundError(f"run directory {run} does not exist")
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    lines = [f"run directory: {run}", ""]
    dict_path = run / DICT_FILE
    if dict_path.exists():
        d = read_dictionary(dict_path)
        m = build_data_matrices(d)
        rep = pe_check(m)
        lines += ["[dictionary]", f"samples: {d.N_d + 1}  (n_x={d.n_x}, n_u={d.n_u}, n_p={d.n_p})",
                  f"rank: {rep.rank}/{rep.required}  persistently exciting: {rep.is_pe}",
                  f"cond(G): {rep.condition_number:.4g}", ""]
    sweep = run / SWEEP_FILE
    if sweep.exists():
        rows = sweep.read_text().splitlines()[1:]
        flagged = [r.split(",")[0] for r in rows if r.endswith(",1")]
        lines += ["[window sweep]", f"windows: {len(rows)}  ill-conditioned: {len(flagged)}", ""]
    for rpath in sorted(run.glob("result_*.json")):
        res = SynthesisResult.load(rpath)
        pg = res.physical_gains()
        lines += [f"[synthesis {res.kind}]", f"status: {res.status}",
                  f"K0 = {np.array2string(pg.K0, precision=5)}  K1 = {np.array2string(pg.Kbar, precision=5)}"
                  " (in measured p)"]
        if res.gamma is not None:
            lines.append(f"gamma: {res.gamma:.6g}")
        lines.append(f"certificate re-verified: {res.residuals.get('certificate_passed')}")
        cert = certify_closed_loop(pg, DISC_BOX, 100, model=lambda p: frozen_discretization(cfg.plant, p))
        csv_path = run / f"certification_{res.kind}.csv"
        csv_path.write_text("p,spectral_radius\n" + "".join(
            f"{p[0]:.17g},{r:.17g}\n" for p, r in zip(cert.grid, cert.spectral_radii)))
        lines += [f"frozen-p spectral radius (100-point grid): max {cert.max_spectral_radius:.6f}"
                  f"  stable: {cert.stable}", ""]
    for spath in sorted(run.glob("sim_*/summary.json")):
        s = json.loads(spath.read_text())
        lines.append(f"[{spath.parent.name}]")
        lines.append(f"max |u|: {s['max_abs_u']:.4g}  max |theta|: {s['max_abs_theta']:.4g}")
        for row in s.get("steady_state", []):
            lines.append(f"  ref {row['theta_ref']:+.4f}  steady-state error {row['steady_state_error']:.4f}")
        for row in s.get("recovery", []):
            lines.append(f"  pulse at {row['pulse_time']:.2f}s  recovery {row['recovery_time']}")
        if "empirical_l2_ratio" in s:
            lines.append(f"  empirical L2 ratio {s['empirical_l2_ratio']['ratio']:.4g} (gamma {s['gamma']:.4g})")
        lines.append("")
    text = "\n".join(lines)
    out = Path(args.out) if args.out else run / "report.txt"
    out.write_text(text + "\n")
    print(text)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddlpv", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, kind=False, window=False, scenario=False):
        p.add_argument("--config", help="TOML or JSON run configuration")
        p.add_argument("--seed", type=int, help="excitation / scenario seed")
        p.add_argument("--out", help="output directory or file")
        if window:
            p.add_argument("--window", help="OFFSET[:N_d]; OFFSET may be 'auto'")
        if kind:
            p.add_argument("--kind", choices=("qp", "l2"))
        if scenario:
            p.add_argument("--scenario", choices=SCENARIOS)

    p = sub.add_parser("collect", help="simulate the plant and write a data dictionary")
    common(p, window=True)
    p.add_argument("--window-sweep", action="store_true", help="also tabulate every window")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("check", help="persistency-of-excitation report for a dictionary")
    p.add_argument("dictionary")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="synthesize a controller from a dictionary")
    p.add_argument("dictionary")
    common(p, kind=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run a closed-loop scenario with a synthesized controller")
    p.add_argument("result")
    common(p, scenario=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="summarize a run directory")
    p.add_argument("run_dir")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (IllPosedError, InfeasibleError, ScheduleBoxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, InfeasibleError) and exc.diagnosis:
            print(json.dumps(exc.diagnosis, indent=2, sort_keys=True), file=sys.stderr)
        return EXIT_PROBLEM
    except (NumericalFailure, IllConditionedError, ConsistencyError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
