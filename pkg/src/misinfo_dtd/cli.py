"""Command-line front end.

Subcommands: run (one scenario -> daily.csv + summary.json), sweep
(parameter grid -> sweep.csv), targets (attack-target selection), theory
(closed-form calculators), metrics (post-process daily.csv), gen (emit
ready-to-run configs). Exit codes: 0 success, 2 config/usage error,
1 runtime failure. stdout carries machine-readable payloads for theory,
metrics, targets, and gen; progress goes to stderr.

Sweeps fan out over processes (--jobs, default from MISINFO_DTD_JOBS);
each worker rebuilds its scenario from the plain config dict, and rows
are assembled in value order regardless of completion order.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from . import metrics as metrics_mod
from . import sim, theory
from .config import ConfigError
from .sim import RunLog


def _default_jobs() -> int:
    env = os.environ.get("MISINFO_DTD_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MISINFO_DTD_JOBS={env!r} is not an integer") from None
    return min(4, os.cpu_count() or 1)


def _load_cfg(args) -> dict:
    cfg = cfgmod.load_config(getattr(args, "config", None))
    return cfgmod.apply_overrides(cfg, getattr(args, "set", []) or [])


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", None) or "out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_snapshots(cfg_dict, scenario, log, out):
    for day, flows in sorted(log.snapshots.items()):
        lines = ["od,path_index,class,flow"]
        col = 0
        for (o, d, _), od_paths in zip(scenario.net.od_pairs, scenario.net.paths):
            for j in range(len(od_paths)):
                for k, prof in enumerate(scenario.classes):
                    lines.append(f"{o}-{d},{j},{prof.name},{flows[k, col]!r}")
                col += 1
        (out / f"flows_day{day}.csv").write_text("\n".join(lines) + "\n")


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    scenario = cfgmod.build_scenario(cfg)
    out = _out_dir(args)
    log = sim.run(scenario, snapshot_days=cfg["dynamics"]["snapshot_days"])
    log.to_csv(out / "daily.csv")
    shares = [p.share for p in scenario.classes]
    window = (scenario.attack.day_start, scenario.attack.day_end)
    report = metrics_mod.compute_report(log, window=window, shares=shares)
    metrics_mod.write_summary(report, out / "summary.json")
    _write_snapshots(cfg, scenario, log, out)
    print(f"wrote {out / 'daily.csv'} and {out / 'summary.json'}", file=sys.stderr)
    return 0


def _sweep_worker(task):
    """Run one sweep cell; returns (value, trust_mode, row-dict or error)."""
    cfg_dict, param, value, mode = task
    try:
        cfg = json.loads(cfg_dict)
        cfgmod.apply_overrides(cfg, [f"{param}={value!r}"])
        if mode is not None:
            cfg["dynamics"]["trust_mode"] = mode
        scenario = cfgmod.build_scenario(cfg)
        log = sim.run(scenario)
        shares = [p.share for p in scenario.classes]
        window = (scenario.attack.day_start, scenario.attack.day_end)
        report = metrics_mod.compute_report(log, window=window, shares=shares)
        return value, scenario.trust_mode, report, None
    except Exception as exc:   # noqa: BLE001 - per-row capture is the contract
        return value, mode, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    param = args.param
    cfgmod.numeric_sweep_value(cfg, param)   # validates the key early
    values = [cfgmod._parse_scalar(tok.strip())
              for tok in args.values.split(",") if tok.strip()]
    if not values:
        raise ConfigError("--values is empty")
    modes = ["fixed", "dynamic"] if args.paired else [None]
    blob = json.dumps(cfg)
    tasks = [(blob, param, v, m) for v in sorted(values) for m in modes]

    jobs = args.jobs or _default_jobs()
    if jobs == 1 or len(tasks) == 1:
        results = [_sweep_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, tasks))

    class_names = [t["name"] for t in cfg["classes"]]
    fields = (["param", "value", "trust_mode", "poatt_aw", "poatt_peak", "tia",
               "trust_recovery_day", "tstt_recovery_day", "hidden_window_days",
               "eta"]
              + [f"trust_recovery_{n}" for n in class_names] + ["error"])
    rows = []
    by_value_fixed = {v: r for v, m, r, _ in results
                      if m == "fixed" and r is not None}
    for value, mode, report, err in results:
        row = {"param": param, "value": value, "trust_mode": mode or
               cfg["dynamics"]["trust_mode"]}
        if err is not None:
            row["error"] = err
        else:
            row.update(metrics_mod.sweep_row(report))
            if args.paired and mode == "dynamic" and value in by_value_fixed:
                row["tia"] = metrics_mod.tia(by_value_fixed[value].poatt_aw,
                                             report.poatt_aw)
        rows.append(row)
    out = _out_dir(args)
    metrics_mod.write_sweep_csv(out / "sweep.csv", rows, fields)
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} rows)", file=sys.stderr)
    return 0


def cmd_targets(args) -> int:
    cfg = _load_cfg(args)
    if args.method:
        cfg["attack"]["method"] = args.method
    if args.n_att is not None:
        cfg["attack"]["n_att"] = args.n_att
    if args.seed is not None:
        cfg["dynamics"]["seed"] = args.seed
    net = cfgmod.build_network(cfg)
    targets = cfgmod.resolve_targets(net, cfg)
    payload = {"method": targets.method, "n_att": targets.n_att,
               "link_ids": list(targets.link_ids), "seed": targets.seed}
    if net.paths:
        from .attack import path_flags
        flags = path_flags(net, targets)
        payload["path_coverage"] = float(flags.mean())
    print(json.dumps(payload, indent=1))
    return 0


def cmd_metrics(args) -> int:
    log = RunLog.from_csv(args.infile)
    fixed_log = RunLog.from_csv(args.fixed) if args.fixed else None
    shares = None
    if args.config:
        cfg = cfgmod.load_config(args.config)
        names = [t["name"] for t in cfg["classes"]]
        if names == log.class_names:
            shares = [t["share"] for t in cfg["classes"]]
    report = metrics_mod.compute_report(
        log, window=tuple(args.window), baseline=tuple(args.baseline),
        shares=shares, fixed_log=fixed_log)
    payload = json.dumps(report.to_dict(), indent=1, sort_keys=True)
    print(payload)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(payload + "\n")
    return 0


def cmd_theory(args) -> int:
    if args.calc == "gamma-hat":
        if args.scale <= 0:
            raise ConfigError("--scale must be positive")
        value = args.eps / args.scale
        payload = {"epsilon": args.eps, "scale": args.scale, "gamma_hat": value}
    elif args.calc == "stability":
        inp = theory.StabilityInputs(
            b=args.b, l_psi=args.lpsi, lambda_bar=args.lambda_bar,
            c_max=args.cmax, forget=args.lf, w_s=args.ws, w_f=args.wf,
            l_rho=args.lrho)
        g1, g2, g_star = theory.stability_bounds(inp)
        payload = {"gamma1": g1, "gamma2": g2, "gamma_star": g_star}
    elif args.calc == "two-link":
        spec = theory.TwoLinkSpec(
            c0=args.c0, b=args.b, gamma=args.gamma,
            classes=(theory.BenchmarkClass(1.0, args.theta, args.lambda_bar,
                                           args.trust0),))
        res = theory.two_link_equilibrium(spec)
        payload = {"x_star": res.x_star, "deviation": abs(res.x_star - 0.5),
                   "deviation_pred": res.deviation_pred,
                   "poatt_pred": res.poatt_pred, "chi": res.chi,
                   "theta_sum": res.theta_sum, "iterations": res.iterations}
    elif args.calc == "compliance":
        cfg = cfgmod.defaults()
        if args.cav_share is not None:
            cfg["composition"]["cav_share"] = args.cav_share
        profiles = cfgmod._resolve_classes(cfg)
        classes = [(p.share, p.theta, p.lambda_bar, 1.0) for p in profiles]
        chi, theta_sum = theory.compliance_index(classes)
        payload = {"chi": chi, "theta_sum": theta_sum,
                   "share_weighted_reliance":
                       sum(p.share * p.lambda_bar for p in profiles)}
    elif args.calc == "recovery":
        a, b, t = theory.recovery_closed_form(args.a0, args.b0, args.ws,
                                              args.lf, args.n)
        payload = {"alpha": a, "beta": b, "T": t}
    elif args.calc == "recovery-time":
        n = theory.recovery_time_solver(args.a0, args.b0, args.ws, args.lf,
                                        args.target)
        payload = {"n": n}
    else:
        raise ConfigError(f"unknown theory calculator {args.calc!r}")
    print(json.dumps({k: (None if isinstance(v, float) and math.isinf(v) else v)
                      for k, v in payload.items()}, indent=1))
    return 0


def cmd_gen(args) -> int:
    cfg = cfgmod.gen_config(args.kind)
    text = cfgmod.emit_toml(cfg)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        print(text)
    return 0


def _add_common(p, with_out=True):
    p.add_argument("--config", help="TOML or JSON scenario file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    if with_out:
        p.add_argument("--out", help="output directory (default ./out)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="misinfo-dtd",
        description="Day-to-day traffic simulation under manipulated route "
                    "guidance with endogenous trust.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    _add_common(p)
    p.add_argument("--param", required=True, help="dotted numeric config key")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--paired", action="store_true",
                   help="run fixed and dynamic trust per value (enables TIA)")
    p.add_argument("--jobs", type=int, default=0,
                   help="worker processes (default: MISINFO_DTD_JOBS or auto)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("targets", help="select attack targets")
    _add_common(p, with_out=False)
    p.add_argument("--method", choices=("topological-betweenness",
                                        "path-betweenness", "random"))
    p.add_argument("--n-att", type=int, dest="n_att")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_targets)

    p = sub.add_parser("metrics", help="post-process a daily.csv")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fixed", help="paired fixed-trust daily.csv for TIA")
    p.add_argument("--config", help="config supplying class shares")
    p.add_argument("--out", help="also write summary.json here")
    p.add_argument("--window", nargs=2, type=int, default=[51, 100])
    p.add_argument("--baseline", nargs=2, type=int, default=[30, 50])
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("theory", help="closed-form calculators")
    tsub = p.add_subparsers(dest="calc", required=True)

    g = tsub.add_parser("gamma-hat", help="activation threshold from error scale")
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--scale", "--D", dest="scale", type=float, required=True,
                   help="first-day error per unit intensity (s)")

    g = tsub.add_parser("stability", help="intensity stability bounds")
    g.add_argument("--b", type=float, required=True)
    g.add_argument("--lpsi", type=float, required=True)
    g.add_argument("--lambda-bar", dest="lambda_bar", type=float, required=True)
    g.add_argument("--cmax", type=float, required=True)
    g.add_argument("--lf", type=float, required=True)
    g.add_argument("--ws", type=float, required=True)
    g.add_argument("--wf", type=float, required=True)
    g.add_argument("--lrho", type=float, default=1.0)

    g = tsub.add_parser("two-link", help="benchmark fixed point + predictions")
    g.add_argument("--c0", type=float, required=True)
    g.add_argument("--b", type=float, required=True)
    g.add_argument("--gamma", type=float, required=True)
    g.add_argument("--theta", type=float, default=1.0)
    g.add_argument("--lambda-bar", dest="lambda_bar", type=float, default=1.0)
    g.add_argument("--trust0", type=float, default=1.0)

    g = tsub.add_parser("compliance", help="compliance index of a composition")
    g.add_argument("--cav-share", dest="cav_share", type=float)

    g = tsub.add_parser("recovery", help="closed-form evidence after n clean days")
    g.add_argument("--a0", type=float, required=True)
    g.add_argument("--b0", type=float, required=True)
    g.add_argument("--ws", type=float, required=True)
    g.add_argument("--lf", type=float, required=True)
    g.add_argument("--n", type=int, required=True)

    g = tsub.add_parser("recovery-time", help="first day trust regains a target")
    g.add_argument("--a0", type=float, required=True)
    g.add_argument("--b0", type=float, required=True)
    g.add_argument("--ws", type=float, required=True)
    g.add_argument("--lf", type=float, required=True)
    g.add_argument("--target", type=float, required=True)

    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("gen", help="emit a ready-to-run config")
    p.add_argument("kind", choices=("two-link", "grid"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
