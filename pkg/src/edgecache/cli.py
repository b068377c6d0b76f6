"""Command-line front end.

Subcommands: trace (synthesize contact traces), analyze (closed-form
predictions for a scenario), simulate (trace-driven Monte Carlo), optimize
(initial placement), report (merge CSVs and render SVG charts). Every run
writes a manifest.json into the output directory recording the arguments,
seeds, inputs, and outputs needed to reproduce it.

Exit codes: 0 success, 2 bad input, 3 infeasible scenario, 4 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytics, mctrace, model, optimizer, sim, workload

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NOCONV = 4


class Infeasible(Exception):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = violations


class NonConvergence(Exception):
    pass


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise model.ScenarioError(f"cannot read {what} {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise model.ScenarioError(f"invalid JSON in {what} {path}: {e}") from e


def _strict(raw: dict, what: str, required: dict, optional: dict):
    unknown = set(raw) - set(required) - set(optional)
    if unknown:
        raise model.ScenarioError(f"unknown key {sorted(unknown)[0]!r} in {what}")
    missing = set(required) - set(raw)
    if missing:
        raise model.ScenarioError(f"missing key {sorted(missing)[0]!r} in {what}")
    out = {}
    for k, typ in {**required, **optional}.items():
        if k in raw:
            out[k] = typ(raw[k])
    return out


def _check_feasible(scn: model.Scenario):
    bad = model.validate_scenario(scn.cfg, scn.contents, scn.placement, scn.costs)
    if bad:
        raise Infeasible(bad)
    if not scn.costs.offloading_meaningful:
        print("warning: c_sc >= c_bs_ttl, offloading cannot reduce delivery cost",
              file=sys.stderr)


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    config_blob, inputs, outputs, started: float):
    manifest = {
        "tool": "edgecache",
        "version": __version__,
        "command": command,
        "argv": sys.argv[1:] if args.argv_override is None else args.argv_override,
        "seed": getattr(args, "seed", None),
        "config": config_blob,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "runtime_s": round(time.time() - started, 3),
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- trace -----------------------------------------------------------------

_POISSON_KEYS = {"n_mn": int, "n_sc": int, "mu_lambda": float, "horizon": float}
_POISSON_OPT = {"cv_lambda": float, "max_events": int, "kind": str}
_COMMUNITY_KEYS = {"n_mn": int, "sc_grid": int, "horizon": float}
_COMMUNITY_OPT = {
    "kind": str, "area_side": float, "n_communities": int, "local_fraction": float,
    "community_side": float, "sc_range": float, "d2d_range": float,
    "speed_min": float, "speed_max": float, "pause_min": float, "pause_max": float,
    "time_step": float,
}


def _build_trace(kind: str, conf: dict, seed):
    if kind == "poisson":
        p = _strict(conf, "poisson trace config", _POISSON_KEYS, _POISSON_OPT)
        rates = mctrace.sample_rate_matrix(p["n_mn"], p["n_sc"], p["mu_lambda"],
                                           p.get("cv_lambda", 0.0), seed)
        kw = {"max_events": p["max_events"]} if "max_events" in p else {}
        return mctrace.generate_poisson_trace(rates, p["horizon"], seed, **kw)
    if kind == "community":
        p = _strict(conf, "community trace config", _COMMUNITY_KEYS, _COMMUNITY_OPT)
        kw = {}
        for k in ("area_side", "n_communities", "local_fraction", "community_side",
                  "sc_range", "d2d_range", "time_step"):
            if k in p:
                kw[k] = p[k]
        if "speed_min" in p or "speed_max" in p:
            kw["speed_range"] = (p.get("speed_min", 0.5), p.get("speed_max", 2.0))
        if "pause_min" in p or "pause_max" in p:
            kw["pause_range"] = (p.get("pause_min", 0.0), p.get("pause_max", 60.0))
        return mctrace.generate_community_trace(p["n_mn"], p["sc_grid"], p["horizon"],
                                                seed, **kw)
    raise model.ScenarioError(f"unknown trace kind {kind!r}")


def cmd_trace(args) -> int:
    started = time.time()
    conf = _load_json(args.config, "trace config")
    kind = args.kind or conf.get("kind")
    if kind is None:
        raise model.ScenarioError("trace kind missing (positional argument or 'kind' key)")
    out = _out_dir(args)
    trace = _build_trace(kind, conf, args.seed)
    csv_path = out / "trace.csv"
    sidecar = out / "trace.json"
    mctrace.save_trace(trace, csv_path, sidecar, params=conf, seed=args.seed)
    _write_manifest(out, f"trace {kind}", args, conf, [args.config],
                    [csv_path, sidecar], started)
    print(f"wrote {trace.n_events} contacts over horizon {trace.horizon:g}s to {csv_path}")
    return EXIT_OK


# --- analyze ---------------------------------------------------------------

def _placement_or_optimized(scn: model.Scenario):
    if scn.placement is not None:
        return scn.placement, "from scenario"
    placement, _ = optimizer.optimal_sc_allocation(scn.contents, scn.costs, scn.cfg)
    return placement, "optimized (small-cell closed form)"


def cmd_analyze(args) -> int:
    started = time.time()
    scn = model.load_scenario(args.config)
    _check_feasible(scn)
    out = _out_dir(args)
    outputs = []
    placement, origin = _placement_or_optimized(scn)

    diss = out / "dissemination.csv"
    with open(diss, "w", newline="") as fh:
        fh.write("content_id,t,h,r,p\n")
        for c, hs, hm in zip(scn.contents, placement.h_sc0, placement.h_mn0):
            es = model.effective_state(c.r0_total, hs, hm, scn.cfg.p_c)
            grid = np.linspace(0.0, c.ttl, args.points)
            h, r = analytics.holders_requesters_at(grid, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            p = analytics.delivery_probability(grid, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            for row in zip(grid, h, r, p):
                fh.write(f"{c.content_id}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    outputs.append(diss)

    summary = out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        fh.write("content_id,r0_total,ttl,h_sc0,h_mn0,p_ttl,expected_delay,"
                 "sc_fraction,cost_placement,cost_opportunistic,cost_delayed,cost_total\n")
        for c, hs, hm in zip(scn.contents, placement.h_sc0, placement.h_mn0):
            es = model.effective_state(c.r0_total, hs, hm, scn.cfg.p_c)
            p = analytics.delivery_probability(c.ttl, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            delay = analytics.expected_delay(c.ttl, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            q = (analytics.sc_delivery_fraction(c.ttl, hs, es, scn.cfg.p_c, scn.cfg.mu_lambda)
                 if es.h0 > 0 else 0.0)
            ph = analytics.content_cost_phases(c, hs, hm, scn.cfg, scn.costs)
            fh.write(f"{c.content_id},{c.r0_total},{c.ttl:.17g},{hs:.17g},{hm:.17g},"
                     f"{p:.17g},{delay:.17g},{q:.17g},"
                     f"{ph[0]:.17g},{ph[1]:.17g},{ph[2]:.17g},{sum(ph):.17g}\n")
    outputs.append(summary)

    if args.ttl_grid:
        ttls = [float(x) for x in args.ttl_grid.split(",")]
        if any(t <= 0 for t in ttls):
            raise model.ScenarioError("--ttl-grid values must be positive")
        rcd_path = out / "rcd.csv"
        with open(rcd_path, "w", newline="") as fh:
            fh.write("ttl,cost_offload,cost_baseline,rcd\n")
            for ttl in ttls:
                contents = [model.ContentClass(c.content_id, c.r0_total, ttl, c.creation_time)
                            for c in scn.contents]
                if scn.placement is not None:
                    pl = scn.placement
                else:
                    pl, _ = optimizer.optimal_sc_allocation(contents, scn.costs, scn.cfg)
                c_off = analytics.total_cost(contents, pl, scn.cfg, scn.costs)
                baseline = scn.costs.c_bs_ttl * sum(
                    model.effective_state(c.r0_total, 0, hm, scn.cfg.p_c).r0
                    for c, hm in zip(contents, pl.h_mn0))
                rcd = analytics.relative_cost_decrease(baseline, c_off)
                fh.write(f"{ttl:.17g},{c_off:.17g},{baseline:.17g},{rcd:.17g}\n")
        outputs.append(rcd_path)

    if scn.cfg.lambda_d > 0 or args.arrivals:
        sched = analytics.EMPTY_SCHEDULE
        if args.arrivals:
            raw = _load_json(args.arrivals, "arrival schedule")
            try:
                sched = analytics.ArrivalSchedule(events=tuple((float(t), float(d))
                                                               for t, d in raw))
            except (TypeError, ValueError) as e:
                raise model.ScenarioError(f"bad arrival schedule: {e}") from e
        traj_path = out / "trajectory_generalized.csv"
        c = scn.contents[0]
        hs, hm = float(placement.h_sc0[0]), float(placement.h_mn0[0])
        es = model.effective_state(c.r0_total, hs, hm, scn.cfg.p_c)
        grid = np.linspace(0.0, c.ttl, args.points)
        traj = analytics.integrate_generalized(es, scn.cfg.p_c, scn.cfg.mu_lambda,
                                               scn.cfg.lambda_d, hs, sched, grid)
        analytics.write_trajectory_csv(traj, traj_path)
        outputs.append(traj_path)

    blob = {"scenario_file": str(args.config), "placement": origin,
            "points": args.points, "ttl_grid": args.ttl_grid, "arrivals": args.arrivals}
    _write_manifest(out, "analyze", args, blob, [args.config], outputs, started)
    print(f"analyzed {len(scn.contents)} contents (placement {origin}) into {out}")
    return EXIT_OK


# --- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    started = time.time()
    scn = model.load_scenario(args.config)
    _check_feasible(scn)
    if scn.placement is None:
        raise model.ScenarioError("simulate needs a placement section in the scenario")
    if args.trace and args.trace_config:
        raise model.ScenarioError("give either --trace or --trace-config, not both")
    out = _out_dir(args)
    inputs = [args.config]

    if args.trace:
        sidecar = args.sidecar or str(Path(args.trace).with_suffix(".json"))
        trace_source = mctrace.load_trace(args.trace, sidecar)
        inputs += [args.trace, sidecar]
        trace_blob = {"fixed_trace": str(args.trace)}
    elif args.trace_config:
        conf = _load_json(args.trace_config, "trace config")
        kind = conf.get("kind", "poisson")

        def trace_source(seed, _conf=conf, _kind=kind):
            return _build_trace(_kind, _conf, seed)

        inputs.append(args.trace_config)
        trace_blob = {"trace_config": conf}
    else:
        raise model.ScenarioError("simulate needs --trace or --trace-config")

    contents = scn.contents
    if args.content:
        contents = [c for c in scn.contents if c.content_id == args.content]
        if not contents:
            raise model.ScenarioError(f"content {args.content!r} not in scenario")

    outputs = []
    summaries = {}
    for c in contents:
        i = scn.contents.index(c)
        hs = int(round(float(scn.placement.h_sc0[i])))
        hm = int(round(float(scn.placement.h_mn0[i])))
        curves = sim.run_replications(trace_source, scn.cfg, c, hs, hm,
                                      n_reps=args.reps, base_seed=args.seed,
                                      costs=scn.costs,
                                      t_grid=np.linspace(0.0, c.ttl, args.points))
        path = out / f"curves_{c.content_id}.csv"
        if args.validate:
            es = model.effective_state(c.r0_total, hs, hm, scn.cfg.p_c)
            h_th, r_th = analytics.holders_requesters_at(curves.times, es, scn.cfg.p_c,
                                                         scn.cfg.mu_lambda)
            p_th = analytics.delivery_probability(curves.times, es, scn.cfg.p_c,
                                                  scn.cfg.mu_lambda)
            _write_curves_with_theory(curves, h_th, r_th, p_th, path)
        else:
            sim.write_curves_csv(curves, path)
        outputs.append(path)
        s = curves.summary()
        if args.validate:
            es = model.effective_state(c.r0_total, hs, hm, scn.cfg.p_c)
            s["theory_p_ttl"] = analytics.delivery_probability(
                c.ttl, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            s["theory_delay"] = analytics.expected_delay(
                c.ttl, es, scn.cfg.p_c, scn.cfg.mu_lambda)
            s["theory_cost"] = analytics.content_cost(c, hs, hm, scn.cfg, scn.costs)
        summaries[c.content_id] = s

    summary_path = out / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summaries, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(summary_path)
    blob = {"scenario_file": str(args.config), "reps": args.reps,
            "points": args.points, "validate": bool(args.validate), **trace_blob}
    _write_manifest(out, "simulate", args, blob, inputs, outputs, started)
    print(f"simulated {len(contents)} content(s) x {args.reps} replications into {out}")
    return EXIT_OK


def _write_curves_with_theory(curves, h_th, r_th, p_th, path):
    cols = ("h_mean", "h_lo", "h_hi", "r_mean", "r_lo", "r_hi", "p_mean", "p_lo", "p_hi")
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(cols) + ",h_theory,r_theory,p_theory\n")
        for i, t in enumerate(curves.times):
            vals = ",".join(f"{getattr(curves, c)[i]:.17g}" for c in cols)
            fh.write(f"{t:.17g},{vals},{h_th[i]:.17g},{r_th[i]:.17g},{p_th[i]:.17g}\n")


# --- optimize ----------------------------------------------------------------

def cmd_optimize(args) -> int:
    started = time.time()
    scn = model.load_scenario(args.config)
    bad = model.validate_scenario(scn.cfg, scn.contents, None, scn.costs)
    if bad:
        raise Infeasible(bad)
    out = _out_dir(args)
    solver = {"mode": args.mode, "version": __version__}
    if args.mode == "sc":
        placement, lam0 = optimizer.optimal_sc_allocation(scn.contents, scn.costs, scn.cfg)
        solver["lambda0"] = lam0
    elif args.mode == "mn":
        placement = optimizer.optimal_mn_allocation(scn.contents, scn.costs, scn.cfg)
    else:
        placement, info = optimizer.solve_problem1_numeric(
            scn.contents, scn.costs, scn.cfg, mode="joint", seed=args.seed)
        solver.update(info)
        if not info["converged"]:
            raise NonConvergence("joint solver hit its sweep cap before converging")
    alloc_path = out / "allocation.csv"
    optimizer.write_allocation_csv(alloc_path, scn.contents, placement, scn.cfg, scn.costs)

    sc_int = model.integerize(placement.h_sc0, item_cap=scn.cfg.n_sc,
                              total_cap=scn.cfg.n_sc * scn.cfg.cache_per_sc)
    int_pl = model.Placement(h_sc0=np.asarray(sc_int, dtype=float),
                             h_mn0=np.round(placement.h_mn0))
    solver["total_cost_real"] = analytics.total_cost(scn.contents, placement, scn.cfg, scn.costs)
    solver["total_cost_int"] = analytics.total_cost(scn.contents, int_pl, scn.cfg, scn.costs)
    solver["budget"] = scn.cfg.n_sc * scn.cfg.cache_per_sc
    solver["budget_used_real"] = float(np.sum(placement.h_sc0))
    solver_path = out / "solver.json"
    with open(solver_path, "w") as fh:
        json.dump(solver, fh, indent=2, sort_keys=True)
        fh.write("\n")
    blob = {"scenario_file": str(args.config), "mode": args.mode}
    _write_manifest(out, "optimize", args, blob, [args.config],
                    [alloc_path, solver_path], started)
    print(f"optimized placement for {len(scn.contents)} contents "
          f"(mode {args.mode}, cost {solver['total_cost_real']:.6g}) into {out}")
    return EXIT_OK


# --- report ------------------------------------------------------------------

def _read_csv_table(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise model.ScenarioError(f"empty CSV {path}")
        names = header.split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if not rows:
        raise model.ScenarioError(f"no data rows in CSV {path}")
    if any(len(r) != len(names) for r in rows):
        raise model.ScenarioError(f"ragged rows in CSV {path}")
    return names, rows


def cmd_report(args) -> int:
    started = time.time()
    if not args.inputs:
        raise model.ScenarioError("report needs at least one input CSV")
    out = _out_dir(args)
    outputs = []
    tables = [(Path(p).stem, *_read_csv_table(p)) for p in args.inputs]

    merged = out / "merged.csv"
    all_cols = []
    for _, names, _ in tables:
        for n in names:
            if n not in all_cols:
                all_cols.append(n)
    with open(merged, "w", newline="") as fh:
        fh.write("source," + ",".join(all_cols) + "\n")
        for stem, names, rows in tables:
            pos = {n: i for i, n in enumerate(names)}
            for r in rows:
                fh.write(stem + "," + ",".join(r[pos[n]] if n in pos else ""
                                               for n in all_cols) + "\n")
    outputs.append(merged)

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        for stem, names, rows in tables:
            def col(j):
                try:
                    return np.array([float(r[j]) for r in rows])
                except ValueError:
                    return None
            x = col(0)
            if x is None:
                continue
            for j in range(1, len(names)):
                y = col(j)
                if y is None:
                    continue
                fig, ax = plt.subplots(figsize=(6, 4))
                ax.plot(x, y, lw=1.5)
                ax.set_xlabel(names[0])
                ax.set_ylabel(names[j])
                ax.set_title(f"{stem}: {names[j]}")
                ax.grid(True, alpha=0.3)
                svg = out / f"{stem}_{names[j]}.svg"
                fig.savefig(svg)
                plt.close(fig)
                outputs.append(svg)

    _write_manifest(out, "report", args, {"inputs": [str(p) for p in args.inputs],
                                          "plot": bool(args.plot)},
                    list(args.inputs), outputs, started)
    print(f"merged {len(tables)} tables into {merged}" + (" with plots" if args.plot else ""))
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="edgecache",
        description="Mean-field offloading analysis, simulation, and cache optimization")
    ap.add_argument("--version", action="version", version=f"edgecache {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="generate a synthetic contact trace")
    p.add_argument("kind", nargs="?", choices=("poisson", "community"),
                   help="generator (or put a 'kind' key in the config)")
    p.add_argument("--config", required=True, help="trace config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("analyze", help="closed-form predictions for a scenario")
    p.add_argument("--config", required=True, help="scenario JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=101, help="time-grid points per content")
    p.add_argument("--ttl-grid", default=None,
                   help="comma-separated deadlines for a cost/RCD sweep")
    p.add_argument("--arrivals", default=None,
                   help="JSON file with [time, delta_requesters] bulk arrivals")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="trace-driven Monte Carlo replications")
    p.add_argument("--config", required=True, help="scenario JSON (with placement)")
    p.add_argument("--trace", default=None, help="fixed trace CSV")
    p.add_argument("--sidecar", default=None, help="trace sidecar JSON (default: trace with .json)")
    p.add_argument("--trace-config", default=None,
                   help="trace config JSON; a fresh trace is drawn per replication")
    p.add_argument("--out", required=True)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--content", default=None, help="simulate only this content id")
    p.add_argument("--validate", action="store_true",
                   help="add closed-form theory columns next to the empirical curves")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="optimal initial placement")
    p.add_argument("--config", required=True, help="scenario JSON")
    p.add_argument("--mode", choices=("sc", "mn", "joint"), default="sc")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", help="merge result CSVs and render SVG charts")
    p.add_argument("inputs", nargs="*", help="input CSV files")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true", help="write one SVG per metric column")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv_override = list(argv) if argv is not None else None
    try:
        return args.func(args)
    except Infeasible as e:
        for v in e.violations:
            print(f"edgecache: infeasible: {v}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergence as e:
        print(f"edgecache: did not converge: {e}", file=sys.stderr)
        return EXIT_NOCONV
    except (model.ScenarioError, OSError, ValueError) as e:
        print(f"edgecache: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
