"""Command-line front end: ``ldp-select audit|risk|sweep|bounds|kd``.

Each command reads one JSON config, writes an RFC-4180 CSV to ``--out`` and a
JSON manifest to ``<out>.manifest.json``. Exit codes: 0 success, 1 config
error, 2 certificate failure, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._base import sgn
from .mech_global import (ENUMERATION_MAX_D, GlobalMechConfig, _pmf_arrays, compute_kd,
                          conditional_mean_exact, dp_certificate_global, kd_exact)
from .mech_local import LocalMechConfig, dp_ratio_certificate_local
from .risk import THREADS_ENV, ExperimentConfig, bound_values, estimate_risk, sweep

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_RUNTIME = 0, 1, 2, 3
CSV_SCHEMA_VERSION = 1

SWEEP_COLUMNS = [
    "axis_name", "axis_value", "d", "s", "n", "alpha", "a", "sigma", "mechanism",
    "selector", "tau", "mean_loss", "std_error", "trials", "lb_local", "ub_matched",
    "fano_er", "fano_afr", "a_star_local", "a_star_global", "flags",
]
BOUNDS_COLUMNS = [c for c in SWEEP_COLUMNS if c not in ("mean_loss", "std_error", "trials")]
KD_COLUMNS = ["d", "K_d", "sqrt(pi/2)sqrt(d)", "ratio"]
AUDIT_COLUMNS = ["certificate", "mechanism", "d", "alpha", "worst", "target", "status"]

AUDIT_TOL = 1e-10


class ConfigError(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "; ".join(str(x) for x in v)
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _experiment(data: dict, args) -> ExperimentConfig:
    exp = dict(data.get("experiment", data))
    for k in ("axis", "grid", "experiment"):
        exp.pop(k, None)
    if args.seed is not None:
        exp["seed"] = args.seed
    if args.trials is not None:
        exp["trials"] = args.trials
    try:
        return ExperimentConfig.from_dict(exp)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc


def _row_from(cfg: ExperimentConfig, axis_name, axis_value, est=None, bv=None, flags=()):
    row = {"axis_name": axis_name, "axis_value": axis_value, "d": cfg.d, "s": cfg.s,
           "n": cfg.n, "alpha": float(cfg.alpha), "a": float(cfg.a), "sigma": float(cfg.sigma),
           "mechanism": cfg.mechanism, "selector": cfg.selector, "flags": list(flags)}
    if est is not None:
        row.update(mean_loss=est.mean_normalized_loss, std_error=est.std_error, trials=est.trials)
    if bv is not None:
        row.update({k: v for k, v in bv.items() if k != "flags"})
    return row


def cmd_risk(data, args, out: Path) -> int:
    cfg = _experiment(data, args)
    est = estimate_risk(cfg, threads=args.threads)
    bv = bound_values(cfg)
    _write_csv(out, SWEEP_COLUMNS,
               [_row_from(cfg, "NONE", "", est, bv, est.validity_flags + bv["flags"])])
    print(f"mean_loss={est.mean_normalized_loss!r} std_error={est.std_error!r} trials={est.trials}")
    return EXIT_OK


def _axis_grid(data):
    try:
        axis = str(data["axis"]).upper()
        grid = list(data["grid"])
    except KeyError as exc:
        raise ConfigError(f"sweep config needs {exc.args[0]!r}") from exc
    if axis not in ("A", "N", "ALPHA", "D"):
        raise ConfigError(f"axis must be one of A, N, ALPHA, D, got {axis!r}")
    if not grid:
        raise ConfigError("grid must be non-empty")
    return axis, grid


def cmd_sweep(data, args, out: Path) -> int:
    cfg = _experiment(data, args)
    axis, grid = _axis_grid(data)
    rows = []
    for r in sweep(cfg, axis, grid, threads=args.threads):
        if r.error is not None:
            rows.append(_row_from(r.config, axis, r.axis_value, flags=[f"error: {r.error}"]))
            continue
        bv = {k: getattr(r, k) for k in ("tau", "lb_local", "ub_matched", "fano_er",
                                           "fano_afr", "a_star_local", "a_star_global")}
        rows.append(_row_from(r.config, axis, r.axis_value, r.estimate, bv, r.flags))
    _write_csv(out, SWEEP_COLUMNS, rows)
    print(f"{len(rows)} rows written to {out}")
    return EXIT_OK


def cmd_bounds(data, args, out: Path) -> int:
    cfg = _experiment(data, args)
    if "axis" in data:
        axis, grid = _axis_grid(data)
    else:
        axis, grid = "NONE", [None]
    rows = []
    for value in grid:
        try:
            point = cfg if value is None else _apply(cfg, axis, value)
            bv = bound_values(point)
            rows.append(_row_from(point, axis, value, bv=bv, flags=bv["flags"]))
        except (ValueError, ArithmeticError) as exc:
            rows.append(_row_from(cfg, axis, value, flags=[f"error: {type(exc).__name__}: {exc}"]))
    _write_csv(out, BOUNDS_COLUMNS, rows)
    print(f"{len(rows)} rows written to {out}")
    return EXIT_OK


def _apply(cfg, axis, value):
    field = {"A": "a", "ALPHA": "alpha", "N": "n", "D": "d"}[axis]
    cast = int if field in ("n", "d") else float
    return cfg.replace(**{field: cast(value)})


def cmd_kd(data, args, out: Path) -> int:
    if "d" in data:
        ds = data["d"] if isinstance(data["d"], list) else [data["d"]]
    else:
        ds = range(int(data.get("d_min", 1)), int(data.get("d_max", 10)) + 1)
    rows = []
    for d in ds:
        if int(d) != d or d < 1:
            raise ConfigError(f"d must be a positive integer, got {d}")
        d = int(d)
        ref = math.sqrt(math.pi / 2) * math.sqrt(d)
        try:
            kd = compute_kd(d)
            exact = kd_exact(d) if d <= 64 else None
        except ValueError:
            kd, exact = math.inf, None  # 1/K_d = 0 at d = 2
        # exact rationals print as e.g. 8/3; otherwise the float
        shown = str(exact) if exact is not None else kd
        rows.append({"d": d, "K_d": shown, "sqrt(pi/2)sqrt(d)": ref, "ratio": kd / ref})
    _write_csv(out, KD_COLUMNS, rows)
    print(f"{len(rows)} rows written to {out}")
    return EXIT_OK


def _global_dp_worst(cfg: GlobalMechConfig, rng, pairs: int):
    """Worst pmf ratio over input pairs: exhaustive for d <= 10, sampled beyond."""
    d = cfg.d
    if d <= 10:
        codes = np.arange(2**d)[:, None]
        signs = (2 * ((codes >> np.arange(d)) & 1) - 1).astype(float)
        P = np.stack([_pmf_arrays(x, cfg)[2] for x in signs])
        worst = float(np.max(P.max(axis=0) / P.min(axis=0)))
    else:
        worst = 0.0
        for _ in range(pairs):
            x, xp = rng.normal(size=d), rng.normal(size=d)
            worst = max(worst, dp_certificate_global(cfg, x, xp))
    x = rng.normal(size=d)
    flipped = dp_certificate_global(cfg, x, -x)
    return worst, flipped


def cmd_audit(data, args, out: Path) -> int:
    ds = data.get("d", [3, 4, 5, 7, 8])
    alphas = data.get("alpha", [0.5, 1.0, math.log(3)])
    ds = ds if isinstance(ds, list) else [ds]
    alphas = alphas if isinstance(alphas, list) else [alphas]
    mechs = data.get("mechanisms", ["GLOBAL", "LOCAL"])
    b_scale = float(data.get("b_scale", 1.0))
    samples = int(data.get("unbias_samples", 50))
    triples = int(data.get("local_triples", 100_000))
    pairs = int(data.get("global_pairs", 200))
    seed = args.seed if args.seed is not None else int(data.get("seed", 0))
    # validate every config before any certificate runs
    try:
        gcfgs = {}
        if "GLOBAL" in mechs:
            for d in ds:
                if d > ENUMERATION_MAX_D:
                    raise ConfigError(f"global audits need d <= {ENUMERATION_MAX_D}, got {d}")
                for al in alphas:
                    gcfgs[d, al] = GlobalMechConfig(al, d, b_scale=b_scale)
        lcfgs = {(d, al): LocalMechConfig(al, d) for d in ds for al in alphas} if "LOCAL" in mechs else {}
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    rng = np.random.default_rng(seed)
    rows = []

    def record(cert, mech, d, al, worst, target, ok):
        status = "PASS" if ok else "FAIL"
        rows.append({"certificate": cert, "mechanism": mech, "d": d, "alpha": float(al),
                     "worst": float(worst), "target": float(target), "status": status})
        print(f"{status} {cert:<16} {mech:<6} d={d:<3} alpha={al:.6g} worst={worst:.12g} target={target:.12g}")

    for (d, al), cfg in gcfgs.items():
        target = math.exp(al)
        worst, flipped = _global_dp_worst(cfg, rng, pairs)
        record("dp-ratio", "GLOBAL", d, al, worst, target, worst <= target * (1 + AUDIT_TOL))
        record("dp-attained", "GLOBAL", d, al, flipped, target, abs(flipped - target) <= AUDIT_TOL * target)
        err = 0.0
        for _ in range(samples):
            x = rng.normal(size=d)
            err = max(err, float(np.max(np.abs(conditional_mean_exact(x, cfg) - sgn(x)))))
        record("unbiasedness", "GLOBAL", d, al, err, 0.0, err <= AUDIT_TOL)

    for (d, al), cfg in lcfgs.items():
        target = math.exp(al / d)
        x = rng.normal(size=triples)
        xp = rng.normal(size=triples)
        z = rng.uniform(-4.0, 4.0, size=triples)
        worst = float(np.max(dp_ratio_certificate_local(cfg, x, xp, z)))
        # the sup is reached for opposite signs with z outside [-1, 1]
        ok = worst <= target * (1 + AUDIT_TOL) and abs(worst - target) <= AUDIT_TOL * target
        record("dp-ratio", "LOCAL", d, al, worst, target, ok)

    _write_csv(out, AUDIT_COLUMNS, rows)
    failed = sum(r["status"] == "FAIL" for r in rows)
    print(f"{len(rows) - failed} passed, {failed} failed")
    return EXIT_CERT if failed else EXIT_OK


COMMANDS = {"audit": cmd_audit, "risk": cmd_risk, "sweep": cmd_sweep,
            "bounds": cmd_bounds, "kd": cmd_kd}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldp-select", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    p.add_argument("--trials", type=int, default=None, help="override the number of trials")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _manifest(args, data, out: Path, wall: float, status: int) -> None:
    doc = {
        "command": args.command,
        "version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "config": data,
        "overrides": {"seed": args.seed, "trials": args.trials},
        "seed": args.seed if args.seed is not None else data.get("experiment", data).get("seed"),
        "wall_time_s": wall,
        "exit_status": status,
        "outputs": [str(out)],
    }
    Path(str(out) + ".manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    t0 = time.perf_counter()
    try:
        data = _load_config(args.config)
        status = COMMANDS[args.command](data, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        _manifest(args, data, out, time.perf_counter() - t0, status)
    except OSError as exc:
        print(f"runtime error writing manifest: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return status


if __name__ == "__main__":
    sys.exit(main())
