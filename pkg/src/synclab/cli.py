"""Command-line entry point.

    synclab validate FILE | --reference
    synclab run [FILE | --reference] [--observer-only] [--out DIR] [--check] [--set key=value ...]
    synclab sweep FILE | --reference --param NAME --values v1,v2,...
    synclab reference            # print the built-in scenario

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 check failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis
from .config import apply_override, build_config, load_scenario, reference_json, reference_scenario
from .errors import InsufficientSamples, NonFiniteDerivative, NonFiniteState, SynclabError
from .graph import h_matrix
from .lagrange import inertia_bounds
from .sim import SimLog, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
DEFAULT_OUT = "synclab_out"

# trailing-window gates used by --check
CHECK_V_ERR = 1e-2
CHECK_E = 1e-2
CHECK_E_DOT = 5e-2
CHECK_KAPPA_TV = 1e-3
CHECK_KAPPA_WINDOW = 10.0

log = logging.getLogger("synclab")


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get("SYNCLAB_OUT") or DEFAULT_OUT)


def _load(args) -> dict:
    if getattr(args, "reference", False):
        doc = reference_scenario()
    elif args.file:
        doc = load_scenario(args.file)
    else:
        raise SynclabError("give a scenario file or --reference")
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise SynclabError(f"--set expects key=value, got {item!r}")
        apply_override(doc, key.strip(), value.strip())
    return doc


def _pe_report(lg: SimLog):
    model = lg.config.leader
    t0 = min(10.0, 0.2 * lg.t[-1])
    try:
        period = analysis.estimate_period(lg.t, lg.v[:, 0], t_min=t0)
        return analysis.pe_measure(lg.t, analysis.regressor_signal(model, lg.v), period, t0)
    except InsufficientSamples as exc:
        log.warning("PE report skipped: %s", exc)
        return None


def _kappa_tv_tail(lg: SimLog, span: float) -> list[float]:
    k = lg.kappa_hat[lg.t >= lg.t[-1] - span - 1e-9]
    return np.abs(np.diff(k, axis=0)).sum(axis=0).tolist()


def summarize(lg: SimLog, pe=None) -> dict:
    cfg = lg.config
    out = analysis.convergence_metrics(lg, 0.1)
    out["kappa_tv_final_10s"] = _kappa_tv_tail(lg, CHECK_KAPPA_WINDOW)
    v_obs = analysis.observer_lyapunov(lg, h_matrix(cfg.graph), cfg.mu)
    out["observer_lyapunov"] = {
        "note": "diagnostic only: kappa_bar proxied by the final kappa_hat",
        "initial": float(v_obs[0]),
        "final": float(v_obs[-1]),
        "max_increment": float(np.diff(v_obs).max()) if v_obs.size > 1 else 0.0,
    }
    if lg.has_arms:
        va = analysis.agent_lyapunov(lg)
        out["agent_lyapunov_max_increment"] = float(np.diff(va, axis=0).max()) if len(va) > 1 else 0.0
        lo, hi = inertia_bounds(cfg.arms)
        out["inertia_bounds"] = {"min_eigenvalue": lo.tolist(), "max_eigenvalue": hi.tolist()}
    if pe is not None:
        out["pe"] = {"window": pe.window, "start": pe.start, "min_gram_eigenvalue": pe.min_gram_eigenvalue}
    return out


def check_gates(metrics: dict) -> list[str]:
    failures = []
    if not metrics["all_finite"]:
        failures.append("non-finite states in log")
    if max(metrics["max_v_err"]) > CHECK_V_ERR:
        failures.append(f"observer error {max(metrics['max_v_err']):.3e} > {CHECK_V_ERR}")
    if not metrics["kappa_nondecreasing"]:
        failures.append("kappa_hat decreased")
    if "max_e" in metrics:
        if max(metrics["max_e"]) > CHECK_E:
            failures.append(f"tracking error {max(metrics['max_e']):.3e} > {CHECK_E}")
        if max(metrics["max_e_dot"]) > CHECK_E_DOT:
            failures.append(f"velocity error {max(metrics['max_e_dot']):.3e} > {CHECK_E_DOT}")
        if max(metrics["kappa_tv_final_10s"]) > CHECK_KAPPA_TV:
            failures.append(f"kappa_hat still moving: {max(metrics['kappa_tv_final_10s']):.3e} > {CHECK_KAPPA_TV}")
    return failures


def write_derived(lg: SimLog, path: Path) -> list[str]:
    n = lg.num_followers
    names, cols = ["t"], [lg.t[:, None]]
    names += [f"omega_err_{i + 1}" for i in range(n)]
    cols.append(lg.omega_err_norm)
    names += [f"v_err_{i + 1}" for i in range(n)]
    cols.append(np.linalg.norm(lg.v_err, axis=-1))
    if lg.has_arms:
        names += [f"e_norm_{i + 1}" for i in range(n)] + [f"e_dot_norm_{i + 1}" for i in range(n)]
        cols += [np.linalg.norm(lg.e, axis=-1), np.linalg.norm(lg.e_dot, axis=-1)]
        names += [f"q_leader[{k}]" for k in range(2)]
        cols.append(lg.v @ lg.config.leader.output_matrix.T)
    np.savetxt(path, np.hstack(cols), delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return names


def plot_script(run_names: list[str], derived_names: list[str], n: int, has_arms: bool) -> str:
    """Gnuplot script drawing joint trajectories, errors, kappa_hat and parameter errors."""
    rc = {name: i + 1 for i, name in enumerate(run_names)}
    dc = {name: i + 1 for i, name in enumerate(derived_names)}
    lines = [
        "# gnuplot script; run from this directory: gnuplot plot.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 1200,800",
        "set key outside right",
        "set xlabel 't [s]'",
    ]

    def fig(name, title, series):
        lines.append(f"set output '{name}.png'")
        lines.append(f"set title '{title}'")
        lines.append("plot " + ", \\\n     ".join(series))

    if has_arms:
        for k in range(2):
            series = [f"'run.csv' every ::1 using 1:{rc[f'q_{i}[{k}]']} with lines title 'q_{i}{k + 1}'"
                      for i in range(1, n + 1)]
            series.append(f"'derived.csv' every ::1 using 1:{dc[f'q_leader[{k}]']} with lines lw 2 dt 2 title 'leader'")
            fig(f"joint_{k + 1}", f"joint angle {k + 1}", series)
        fig("e_norm", "||e_i||", [f"'derived.csv' every ::1 using 1:{dc[f'e_norm_{i}']} with lines title 'e_{i}'"
                                  for i in range(1, n + 1)])
        fig("e_dot_norm", "||e_i'||", [f"'derived.csv' every ::1 using 1:{dc[f'e_dot_norm_{i}']} with lines title 'edot_{i}'"
                                       for i in range(1, n + 1)])
    fig("kappa", "kappa_hat_i", [f"'run.csv' every ::1 using 1:{rc[f'kappa_{i}']} with lines title 'kappa_{i}'"
                                 for i in range(1, n + 1)])
    fig("omega_err", "||omega_hat_i - omega||",
        [f"'derived.csv' every ::1 using 1:{dc[f'omega_err_{i}']} with lines title 'w_{i}'" for i in range(1, n + 1)])
    return "\n".join(lines) + "\n"


def write_artifacts(lg: SimLog, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    lg.to_csv(out / "run.csv")
    run_names, _ = lg.columns()
    derived_names = write_derived(lg, out / "derived.csv")
    pe = _pe_report(lg)
    if pe is not None:
        pe.to_csv(out / "pe_report.csv")
    else:
        (out / "pe_report.csv").write_text("window_start,min_eigenvalue\n")
    metrics = summarize(lg, pe)
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    (out / "plot.gp").write_text(plot_script(run_names, derived_names, lg.num_followers, lg.has_arms))
    (out / "scenario.json").write_text(json.dumps(lg.config.source, indent=2, sort_keys=True) + "\n")
    return metrics


def cmd_validate(args) -> int:
    build_config(_load(args))
    print("OK")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = build_config(_load(args), observer_only=True if args.observer_only else None)
    lg = run(cfg)
    out = _out_dir(args.out)
    metrics = write_artifacts(lg, out)
    print(f"wrote {out}")
    if args.check:
        failures = check_gates(metrics)
        for f in failures:
            print(f"CHECK FAILED: {f}", file=sys.stderr)
        if failures:
            return EXIT_CHECK
        print("CHECK OK")
    return EXIT_OK


def _sweep_one(doc: dict, param: str, value, out: Path) -> dict:
    row = {"param": param, "value": value, "status": "ok", "out": str(out)}
    try:
        apply_override(doc, param, value)
        lg = run(build_config(doc))
        metrics = write_artifacts(lg, out)
        row.update(
            max_v_err=max(metrics["max_v_err"]),
            max_omega_err=max(metrics["max_omega_err"]),
            max_e=max(metrics["max_e"]) if "max_e" in metrics else "",
            max_e_dot=max(metrics["max_e_dot"]) if "max_e_dot" in metrics else "",
            check="pass" if not check_gates(metrics) else "fail",
        )
    except (NonFiniteState, NonFiniteDerivative) as exc:
        row.update(status="numerical_failure", error=str(exc))
    except SynclabError as exc:
        row.update(status="config_error", error=str(exc))
    return row


def cmd_sweep(args) -> int:
    doc = _load(args)
    values = [v.strip() for v in (args.values or "").split(",") if v.strip()]
    if not values:
        print("no values given; nothing to run")
        return EXIT_OK
    build_config(doc)
    apply_override(json.loads(json.dumps(doc)), args.param, values[0])
    base = _out_dir(args.out)
    base.mkdir(parents=True, exist_ok=True)
    jobs = []
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for v in values:
            out = base / f"{args.param}={v}"
            jobs.append(pool.submit(_sweep_one, json.loads(json.dumps(doc)), args.param, v, out))
        rows = [j.result() for j in jobs]
    fields = ["param", "value", "status", "check", "max_v_err", "max_omega_err", "max_e", "max_e_dot", "out", "error"]
    with open(base / "sweep_summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in fields})
    print(f"wrote {base / 'sweep_summary.csv'}")
    if any(r["status"] == "numerical_failure" for r in rows):
        return EXIT_NUMERIC
    if any(r["status"] == "config_error" for r in rows):
        return EXIT_CONFIG
    return EXIT_OK


def cmd_reference(args) -> int:
    sys.stdout.write(reference_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synclab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("file", nargs="?")
        sp.add_argument("--reference", action="store_true", help="use the built-in six-arm scenario")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a field, e.g. observer.mu=1")

    sp = sub.add_parser("validate", help="check a scenario file")
    scenario_args(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("run", help="simulate a scenario and write CSV/JSON artifacts")
    scenario_args(sp)
    sp.add_argument("--observer-only", action="store_true")
    sp.add_argument("--out", help="output directory (default $SYNCLAB_OUT or ./synclab_out)")
    sp.add_argument("--check", action="store_true", help="exit 4 if convergence gates fail")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run one scenario per value of a scalar parameter")
    scenario_args(sp)
    sp.add_argument("--param", required=True, help="dotted key, e.g. observer.mu")
    sp.add_argument("--values", default="", help="comma-separated values")
    sp.add_argument("--out")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reference", help="print the built-in scenario JSON")
    sp.set_defaults(func=cmd_reference)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (NonFiniteState, NonFiniteDerivative) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SynclabError, OSError, json.JSONDecodeError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
