"""Command-line front end: guide, simulate, mc, report.

Exit codes: 0 success, 2 guidance infeasible, 3 configuration error,
4 I/O failure.  All file writes are atomic (temp file then rename).
Output directory resolution: --out flag, else $FORMGUIDE_OUT, else cwd.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from .config import ConfigError, load_scenario, noise_from_table
from .guidance import StageInfeasible, compute_delta_v
from .sim import (
    CENTRALIZED,
    DISTRIBUTED,
    LOG_COLUMNS,
    NoiseModel,
    REFERENCE_MPC,
    builtin_scenario,
    open_loop_profile,
    run_closed_loop,
    run_monte_carlo,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_IO = 4


def _atomic_write(path: str, payload: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(args) -> str:
    return args.out or os.environ.get("FORMGUIDE_OUT", ".")


def _load(args):
    """Scenario argument: builtin id or TOML path."""
    name = args.scenario
    if name in ("reconfig1", "reconfig2", "reconfig3"):
        spec = builtin_scenario(name)
        noise = NoiseModel()
        run_tab: dict = {}
    else:
        spec, noise, run_tab = load_scenario(name)
    if getattr(args, "tf_arc", None) is not None:
        spec = spec.with_overrides(tf_arc=args.tf_arc)
    return spec, noise, run_tab


def _profile_csv(profile, grid) -> str:
    lines = ["deputy,node,t,y1,y2,y3,y4,y5,y6,u_r,u_t,u_n,gamma"]
    fpos = {int(k): f for f, k in enumerate(grid.kf)}
    for i in range(profile.n_deputies):
        for k in range(grid.n_nodes):
            u = np.zeros(3)
            g = 0.0
            if k in fpos:
                u = profile.u_bar[i, fpos[k]] / profile.a_c
                g = profile.gamma[i, fpos[k]]
            row = [str(i), str(k), f"{grid.t[k]:.6f}"]
            row += [f"{v:.9f}" for v in profile.y[i, k]]
            row += [f"{v:.12e}" for v in u] + [f"{g:.9f}"]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_guide(args) -> int:
    spec, _, _ = _load(args)
    topology = DISTRIBUTED if args.distributed else CENTRALIZED
    try:
        profile, model = open_loop_profile(
            spec, topology=topology, soft=not args.hard
        )
    except StageInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    grid = model.grid
    dv, per = compute_delta_v(profile, grid)
    err = profile.final_state_error(spec.yf)
    last = profile.diagnostics[-1]
    print(
        f"{spec.name} {topology} {'hard' if args.hard else 'soft'}: "
        f"dV = {dv:.3f} m/s | max final error = {err.max():.3g} m | "
        f"max(Y) = {max(0.0, profile.max_upsilon):.3g} | "
        f"max(B) = {max(0.0, profile.max_beta):.3g} | "
        f"vars = {last.n_vars} constraints = {last.n_constraints}"
    )
    out = _out_dir(args)
    base = os.path.join(out, f"{spec.name}_{topology}_{'hard' if args.hard else 'soft'}")
    _atomic_write(base + "_profile.csv", _profile_csv(profile, grid))
    payload = {
        "kind": "guide",
        "scenario": spec.name,
        "mode": topology,
        "variant": "hard" if args.hard else "soft",
        "delta_v_total": dv,
        "delta_v": per.tolist(),
        "final_error_max": float(err.max()),
        "max_upsilon": max(0.0, profile.max_upsilon),
        "max_beta": max(0.0, profile.max_beta),
        "diagnostics": profile.diagnostics_dict(),
    }
    _atomic_write(base + "_diag.json", json.dumps(payload, indent=2))
    print(f"wrote {base}_profile.csv and {base}_diag.json")
    return EXIT_OK


def _metrics_csv(log: np.ndarray) -> str:
    lines = [",".join(LOG_COLUMNS)]
    for row in log:
        lines.append(",".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    spec, noise, _ = _load(args)
    if args.seed is not None:
        noise = noise.with_seed(args.seed)
    if args.no_noise:
        noise = NoiseModel.zero(noise.seed)
    scheme = "FHMPC" if args.fhmpc else "SHMPC"
    topology = DISTRIBUTED if args.distributed else CENTRALIZED
    mode = (topology, scheme)
    out = _out_dir(args)
    base = os.path.join(out, f"{spec.name}_{topology}_{scheme}".lower())

    if args.runs > 1:
        agg = run_monte_carlo(
            spec, noise, mode, runs=args.runs, max_workers=args.workers
        )
        payload = {
            "kind": "mc",
            "scenario": spec.name,
            "mode": list(mode),
            "seed": noise.seed,
            **agg.to_dict(),
        }
        print(
            f"{spec.name} {topology} {scheme} x{args.runs}: "
            f"mean dV = {agg.delta_v_total:.3f} m/s | "
            f"mean max err = {agg.final_error_max:.2f} m | "
            f"mean KOZ intrusion = {agg.koz_intrusion_max:.2f} m"
        )
    else:
        metrics = run_closed_loop(spec, noise, mode, keep_log=True)
        payload = {
            "kind": "run",
            "scenario": spec.name,
            "mode": list(mode),
            "seed": noise.seed,
            **metrics.to_dict(),
        }
        if metrics.log is not None:
            _atomic_write(base + "_log.csv", _metrics_csv(metrics.log))
        print(
            f"{spec.name} {topology} {scheme}: dV = {metrics.delta_v_total:.3f} m/s | "
            f"max err = {metrics.final_error_max:.2f} m | "
            f"KOZ intrusion = {metrics.koz_intrusion_max:.2f} m"
        )
    _atomic_write(base + "_metrics.json", json.dumps(payload, indent=2))
    print(f"wrote {base}_metrics.json")
    return EXIT_OK


def _fmt_row(cells, widths) -> str:
    return "  ".join(str(c).rjust(w) for c, w in zip(cells, widths))


def cmd_report(args) -> int:
    if not args.inputs:
        print("report needs at least one metrics JSON file", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for path in args.inputs:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except OSError as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            print(f"bad JSON in {path}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if "delta_v_total" not in doc:
            print(f"{path}: not a metrics file", file=sys.stderr)
            return EXIT_CONFIG
        rows.append(doc)

    tetra = any(r.get("scenario") == "reconfig3" for r in rows)
    header = ["scenario", "mode", "dV [m/s]", "err_mean [m]", "err_max [m]", "KOZ [m]"]
    if tetra:
        header += ["saved %", "improved %"]
    table = [header]
    csv_lines = [",".join(header)]
    for r in rows:
        mode = r.get("mode")
        mode_s = "/".join(mode) if isinstance(mode, list) else str(mode or "-")
        err_mean = r.get("final_error_mean", float("nan"))
        cells = [
            r.get("scenario", "-"),
            mode_s,
            f"{r['delta_v_total']:.3f}",
            f"{err_mean:.2f}",
            f"{r.get('final_error_max', float('nan')):.2f}",
            f"{r.get('koz_intrusion_max', float('nan')):.2f}",
        ]
        if tetra:
            if r.get("scenario") == "reconfig3":
                saved = 100.0 * (1.0 - r["delta_v_total"] / REFERENCE_MPC["delta_v_total"])
                improved = 100.0 * (1.0 - err_mean / REFERENCE_MPC["final_error_mean"])
                cells += [f"{saved:.2f}", f"{improved:.2f}"]
            else:
                cells += ["-", "-"]
        table.append(cells)
        csv_lines.append(",".join(str(c) for c in cells))
    widths = [max(len(str(row[j])) for row in table) for j in range(len(header))]
    for row in table:
        print(_fmt_row(row, widths))
    if args.csv:
        _atomic_write(args.csv, "\n".join(csv_lines) + "\n")
        print(f"wrote {args.csv}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="formguide",
        description="Fuel-optimal guidance and closed-loop control for "
        "low-thrust satellite formations",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("guide", help="solve the open-loop guidance problem")
    g.add_argument("scenario", help="builtin id (reconfig1/2/3) or TOML path")
    g.add_argument("--distributed", action="store_true")
    g.add_argument("--hard", action="store_true", help="hard-constrained pipeline")
    g.add_argument("--soft", dest="hard", action="store_false")
    g.add_argument("--tf-arc", dest="tf_arc", type=float, default=None,
                   help="thrust arc length in orbits")
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_guide, hard=False)

    for name, nruns in (("simulate", 1), ("mc", 10)):
        s = sub.add_parser(
            name,
            help="closed-loop run" if name == "simulate" else "Monte Carlo campaign",
        )
        s.add_argument("scenario")
        s.add_argument("--shmpc", action="store_true", default=True)
        s.add_argument("--fhmpc", action="store_true")
        s.add_argument("--distributed", action="store_true")
        s.add_argument("--runs", type=int, default=nruns)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--no-noise", action="store_true")
        s.add_argument("--workers", type=int, default=None)
        s.add_argument("--tf-arc", dest="tf_arc", type=float, default=None)
        s.add_argument("--out", default=None)
        s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="consolidate metrics files into a table")
    r.add_argument("inputs", nargs="*")
    r.add_argument("--csv", default=None, help="also write the table as CSV")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
