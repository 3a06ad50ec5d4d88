"""Command-line entry point: ``anomalkpp <subcommand> [options]``.

Exit codes: 0 success, 1 certificate failure, 2 invalid input, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .exceptions import AnomalKPPError, InvalidParameters, NotApplicable
from .linear_analysis import Params, analyze_report, anomalous_speed, classify_regime

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# deterministic output


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _to_json(obj, indent=0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "%.17g" % obj if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def dump_json(obj) -> str:
    """JSON text with every float at 17 significant digits (non-finite as null)."""
    return _to_json(obj) + "\n"


def write_json(path: Path, obj):
    path.write_text(dump_json(obj))


def write_csv(path: Path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# configuration


DEFAULT_SIM = {"domain": [-50.0, 150.0, 0.05], "t_end": 300.0, "sample_interval": 0.5,
               "snapshot_stride": None, "window_policy": {}, "init": {"kind": "heaviside"}}


def load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidParameters(f"cannot read config {args.config}: {exc}") from exc
    cfg.setdefault("params", {})
    for key in ("d", "alpha", "beta"):
        val = getattr(args, key, None)
        if val is not None:
            cfg["params"][key] = val
    sim = {**DEFAULT_SIM, **cfg.get("simulation", {})}
    for key in ("t_end", "sample_interval", "snapshot_stride"):
        val = getattr(args, key, None)
        if val is not None:
            sim[key] = val
    if getattr(args, "dx", None) is not None:
        sim["domain"] = [sim["domain"][0], sim["domain"][1], args.dx]
    cfg["simulation"] = sim
    meas = dict(cfg.get("measurements", {}))
    if getattr(args, "window", None):
        meas["fit_window"] = list(args.window)
    cfg["measurements"] = meas
    return cfg


def params_from(cfg) -> Params:
    p = cfg.get("params", {})
    missing = [k for k in ("d", "alpha") if k not in p]
    if missing:
        raise InvalidParameters(f"missing parameters: {', '.join(missing)}")
    return Params(float(p["d"]), float(p["alpha"]), float(p.get("beta", 0.0)))


def _init_spec(sim):
    from .simulator import Bump, InitialDataSpec
    init = sim.get("init", {}) or {}
    bump = init.get("bump")
    return InitialDataSpec(init.get("kind", "heaviside"), float(init.get("step_location", 0.0)),
                           Bump(**bump) if bump else None)


def _policy(sim):
    from .simulator import WindowPolicy
    return WindowPolicy(**(sim.get("window_policy") or {}))


def out_dir(args) -> Path:
    path = Path(args.out or os.environ.get("ANOMALKPP_OUT") or "anomalkpp_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    rep = analyze_report(Params(args.d, args.alpha, args.beta))
    text = dump_json(rep)
    sys.stdout.write(text)
    if args.out or os.environ.get("ANOMALKPP_OUT"):
        (out_dir(args) / "analyze.json").write_text(text)
    return EXIT_OK


def regime_rows(d_range, a_range, n):
    rows = []
    for d in np.linspace(d_range[0], d_range[1], n):
        for a in np.linspace(a_range[0], a_range[1], n):
            tag = classify_regime(float(d), float(a)).tag
            p = Params(float(d), float(a))
            try:
                s_anom = anomalous_speed(p) if tag in ("III", "IV") else None
            except NotApplicable:
                s_anom = None
            rows.append((float(d), float(a), tag, p.s_u, 2.0, s_anom))
    return rows


def cmd_regime_map(args) -> int:
    lo_d, hi_d = args.d_range
    lo_a, hi_a = args.alpha_range
    if min(lo_d, hi_d, lo_a, hi_a) <= 0 or args.resolution < 1:
        raise InvalidParameters("ranges must be positive and resolution >= 1")
    rows = regime_rows(args.d_range, args.alpha_range, args.resolution)
    write_csv(out_dir(args) / "regime_map.csv", ["d", "alpha", "regime", "s_u", "s_v", "s_anom"], rows)
    return EXIT_OK


def cmd_front(args) -> int:
    from .front_solver import solve_front
    p = Params(args.d, args.alpha)
    f = solve_front(p, args.s)
    out = out_dir(args)
    write_csv(out / "front.csv", ["y", "U", "Uprime"], zip(f.y, f.U, f.Uprime))
    write_json(out / "front.json", {"s": f.speed, "d": p.d, "alpha": p.alpha,
                                    "decay_rate_fit": f.decay_rate_fit, "weak_rate": f.weak_rate,
                                    "y_min": f.y_min, "y_max": f.y_max})
    return EXIT_OK


class _Snapshotter:
    """Write the first observed state at or after each multiple of ``every``, plus the last one."""

    def __init__(self, out: Path, every: float, t_end: float):
        self.out, self.every, self.t_end, self.k, self.files = out, every, t_end, 0, []

    def __call__(self, t, state):
        final = t >= self.t_end - 1e-9
        if t + 1e-9 >= self.k * self.every or final:
            name = f"snapshot_{len(self.files):05d}.csv"
            write_csv(self.out / name, ["x", "u", "v"], zip(state.x, state.u, state.v))
            self.files.append({"file": name, "t": t})
            self.k = int(math.floor(t / self.every + 1e-9)) + 1


def cmd_simulate(args) -> int:
    from .simulator import dt_max, init_state, run
    cfg = load_config(args)
    p, sim = params_from(cfg), cfg["simulation"]
    x_l, x_r, dx = sim["domain"]
    t_end = float(sim["t_end"])
    every = float(sim["snapshot_stride"] or t_end / 10)
    state = init_state(p, (x_l, x_r, dx), _init_spec(sim))
    out = out_dir(args)
    snap = _Snapshotter(out, every, t_end)
    stride = max(1, int(round(min(every, float(sim["sample_interval"])) / dt_max(p, dx))))
    res = run(p, state, t_end, observers=(snap,), stride=stride, window=_policy(sim))
    man = res.manifest()
    wall = man.pop("wall_time")
    man["params"] = {"d": p.d, "alpha": p.alpha, "beta": p.beta}
    man["snapshots"] = snap.files
    write_json(out / "manifest.json", man)
    write_json(out / "timing.json", {"wall_time": wall})
    return EXIT_OK


def _load_snapshots(path: Path):
    from .simulator import FieldState
    man = json.loads((path / "manifest.json").read_text())
    states = []
    for item in man["snapshots"]:
        arr = np.loadtxt(path / item["file"], delimiter=",", skiprows=1)
        x = arr[:, 0]
        dx = man["grid"]["dx"]
        states.append(FieldState(float(item["t"]), float(x[0]), float(dx), arr[:, 1].copy(), arr[:, 2].copy()))
    return man, states


def _write_measure(out: Path, rows, summary, prefix=""):
    write_csv(out / f"{prefix}kappa.csv", ["t", "kappa_u", "kappa_v", "kappa_u_half"], rows)
    write_json(out / f"{prefix}speed.json", summary)


def cmd_speed(args) -> int:
    from .speed_tracker import InvasionObserver, default_window
    out = out_dir(args)
    if args.snapshots:
        man, states = _load_snapshots(Path(args.snapshots))
        p = Params(**man["params"])
        obs = InvasionObserver({"u": 0.5, "v": 0.5, "u_half": 0.5 * p.u_c}, {"u_half": "u"})
        for st in states:
            obs(st.t, st)
        window = tuple(args.window) if args.window else default_window(man["t_end"])
        summary = {"window": list(window)}
        for comp in ("u", "v", "u_half"):
            entry = {}
            for log, key in ((False, "linear"), (True, "log")):
                try:
                    e = obs.estimate(comp, window, log)
                    entry[f"s_fit_{key}"] = e.s_fit
                    entry[f"rmse_{key}"] = e.rmse
                    if log:
                        entry["log_coeff"] = e.log_coeff
                except ValueError as exc:
                    entry[f"error_{key}"] = str(exc)
            summary[comp] = entry
        rows = [(r["t"], r["u"], r["v"], r["u_half"]) for r in obs.records]
        _write_measure(out, rows, summary)
        return EXIT_OK
    m = _measure_from_config(load_config(args))
    _write_measure(out, m.kappa_table(), m.summary())
    return EXIT_OK


def _measure_from_config(cfg):
    from .estimators import measure
    p, sim = params_from(cfg), cfg["simulation"]
    x_l, x_r, dx = sim["domain"]
    window = cfg["measurements"].get("fit_window")
    return measure(p, float(sim["t_end"]), dx, (x_l, x_r), tuple(window) if window else None,
                   float(sim["sample_interval"]), _policy(sim), _init_spec(sim))


def cmd_measure(args) -> int:
    m = _measure_from_config(load_config(args))
    summary = m.summary()
    _write_measure(out_dir(args), m.kappa_table(), summary)
    for comp in ("u", "v"):
        s_fit = summary[comp]["s_fit_log"]
        pred = summary["s_expected"][comp]
        print(f"{comp}: s_fit_log={fmt(s_fit)} s_fit_linear={fmt(summary[comp]['s_fit_linear'])} "
              f"predicted={fmt(pred)} discrepancy={fmt(s_fit - pred if s_fit is not None else None)}")
    return EXIT_OK


def cmd_certify(args) -> int:
    from .bounds import run_certificate
    p = Params(args.d, args.alpha, args.beta)
    states = None
    if args.snapshots:
        _, states = _load_snapshots(Path(args.snapshots))
    rep = run_certificate(p, args.s, args.sigma, args.s_super, dx=args.dx or 0.05, states=states)
    out = out_dir(args)
    write_json(out / "certificate.json", rep.to_dict())
    if rep.violations:
        write_csv(out / "violations.csv", ["check", "t", "x", "value"],
                  [(v["check"], v["t"], v["x"], v["value"]) for v in rep.violations])
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_FAIL


SWEEP_AXES = ("d", "alpha", "beta")


def _sweep_one(job):
    cfg, axis, value = job
    cfg = json.loads(json.dumps(cfg))
    cfg["params"][axis] = value
    row = {"value": value, "s_fit": None, "s_fit_linear": None, "s_lin": None, "s_expected": None,
           "regime": None, "error": None}
    try:
        p = params_from(cfg)
        from .estimators import expected_speed, linear_speed
        row["regime"] = classify_regime(p.d, p.alpha).tag
        row["s_lin"] = linear_speed(p, "u")
        row["s_expected"] = expected_speed(p, "u")
        m = _measure_from_config(cfg)
        row["s_fit"] = m.fits[("u", True)].s_fit
        row["s_fit_linear"] = m.fits[("u", False)].s_fit
    except Exception as exc:  # recorded per row; the sweep carries on
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        raise InvalidParameters(f"axis must be one of {SWEEP_AXES}")
    cfg = load_config(args)
    jobs = [(cfg, args.axis, float(v)) for v in args.values]
    if len(jobs) > 1 and args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    cols = ["value", "s_fit", "s_fit_linear", "s_lin", "s_expected", "regime", "error"]
    write_csv(out_dir(args) / "sweep.csv", [args.axis] + cols[1:], [[r[c] for c in cols] for r in rows])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        parser.add_argument("--config", default=default(None), help="JSON experiment config")
        parser.add_argument("--out", default=default(None),
                            help="output directory (default: $ANOMALKPP_OUT or ./anomalkpp_out)")
        parser.add_argument("--threads", type=int, default=default(1), help="worker processes for sweeps")

    # flags may appear before or after the subcommand; the subcommand copy
    # only sets a value when the flag is actually given
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, lambda _: argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="anomalkpp",
                                 description="Spreading speeds of a coupled Fisher-KPP system.")
    global_flags(ap, lambda v: v)
    sub = ap.add_subparsers(dest="command", required=True)

    def params_args(p, required=True):
        p.add_argument("--d", type=float, required=required)
        p.add_argument("--alpha", type=float, required=required)
        p.add_argument("--beta", type=float, default=None if not required else 0.0)

    p = sub.add_parser("analyze", parents=[common], help="regime and linear speeds")
    params_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("regime-map", parents=[common], help="CSV grid of regime tags")
    p.add_argument("--d-range", type=float, nargs=2, default=[0.05, 3.0])
    p.add_argument("--alpha-range", type=float, nargs=2, default=[0.05, 3.0])
    p.add_argument("--resolution", type=int, default=60)
    p.set_defaults(func=cmd_regime_map)

    p = sub.add_parser("front", parents=[common], help="traveling front profile")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_front)

    for name, func, hlp in (("simulate", cmd_simulate, "run the PDE and write snapshots"),
                            ("speed", cmd_speed, "invasion points and speed fits"),
                            ("measure", cmd_measure, "simulate, fit and compare with the prediction")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        params_args(p, required=False)
        p.add_argument("--dx", type=float)
        p.add_argument("--t-end", type=float)
        p.add_argument("--sample-interval", type=float)
        p.add_argument("--window", type=float, nargs=2)
        if name == "simulate":
            p.add_argument("--snapshot-stride", type=float)
        if name == "speed":
            p.add_argument("--snapshots", help="directory written by 'simulate'")
        p.set_defaults(func=func)

    p = sub.add_parser("certify", parents=[common], help="certify the sub/super-solution bounds")
    params_args(p)
    p.add_argument("--s", type=float, default=2.02)
    p.add_argument("--sigma", type=float, default=2.1)
    p.add_argument("--s-super", type=float, default=2.3)
    p.add_argument("--dx", type=float)
    p.add_argument("--snapshots", help="directory written by 'simulate'")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sweep", parents=[common], help="measure speeds across one parameter")
    params_args(p, required=False)
    p.add_argument("--axis", required=True)
    p.add_argument("--values", type=float, nargs="*", default=[])
    p.add_argument("--dx", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--sample-interval", type=float)
    p.add_argument("--window", type=float, nargs=2)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InvalidParameters, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (AnomalKPPError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
