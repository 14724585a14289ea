"""Command-line experiment runner.

    liyorke induce   --alpha 2 --n_max 100000
    liyorke density  --alpha 0.5 --M 16384
    liyorke renewal  --alpha 2 --N 10000 --M 32768 --samples 100000 --seed 7
    liyorke tuples   --alpha 2.5 --d 2 --N 1e6 --samples 500 --delta 0.3
    liyorke sweep    --alphas 1.2,1.7 --ds 2,3 --N 1e6 --samples 500 --seed 1
    liyorke accept   --suite primary

Every run writes CSV data plus one ``manifest.json`` to the output directory
(``--out``, else ``$LIYORKE_OUT``, else ``./runs/<subcommand>``).  A flat JSON
file given with ``--config`` supplies defaults; command-line flags win.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import csv
import difflib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import NonConvergence
from .maps import MapSpec
from .svg import line_chart

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class ConfigError(Exception):
    pass


def _int(text):
    val = float(text)
    if not val.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _ints(text):
    return [_int(t) for t in str(text).split(",") if t.strip()]


def _opt_float(text):
    return None if text in (None, "", "none", "None") else float(text)


COMMON = {
    "out": (str, None, "output directory"),
    "workers": (_int, 0, "worker threads (0 = all cores); results do not depend on it"),
    "svg": (_bool, False, "also write a minimal SVG chart where one applies"),
}

OPTIONS = {
    "induce": {
        "alpha": (float, 2.0, "map exponent"),
        "n_max": (_int, 10_000, "depth of the preimage sequence"),
        "window_lo": (_opt_float, None, "tail fit window start (default min(100, n_max/100))"),
        "window_hi": (_opt_float, None, "tail fit window end (default n_max/10)"),
    },
    "density": {
        "map": (str, "manpom", "manpom | manpom2 | doubling"),
        "alpha": (float, 0.5, "map exponent"),
        "beta": (float, 0.5, "second exponent (manpom2)"),
        "M": (_int, 2**14, "number of graded cells"),
        "gamma": (_opt_float, None, "grading exponent (default max(2, 1+alpha))"),
        "tol": (float, 1e-12, "L1 increment tolerance"),
        "max_iter": (_int, 10_000, "power iteration cap"),
        "method": (str, "auto", "auto | power | direct"),
        "window_lo": (_opt_float, None, "probe window start (default 1e-4, or 1e-3 if alpha >= 1)"),
    },
    "renewal": {
        "map": (str, "manpom", "manpom | manpom2 | doubling"),
        "alpha": (float, 2.0, "map exponent"),
        "beta": (float, 2.0, "second exponent (manpom2)"),
        "N": (_int, 10_000, "horizon"),
        "M": (_int, 2**15, "number of graded cells"),
        "gamma": (_opt_float, None, "grading exponent (default 1+alpha)"),
        "samples": (_int, 0, "Monte-Carlo samples (0 = operator only)"),
        "mc_N": (_int, 1000, "Monte-Carlo horizon"),
        "seed": (_int, 0, "64-bit seed"),
        "window_lo": (float, 100.0, "fit window start"),
        "window_hi": (float, 10_000.0, "fit window end"),
    },
    "tuples": {
        "map": (str, "manpom", "manpom | manpom2 | doubling"),
        "alpha": (float, 2.0, "map exponent"),
        "beta": (float, 2.0, "second exponent (manpom2)"),
        "metric": (str, "interval", "interval | circle"),
        "d": (_int, 2, "tuple size"),
        "N": (_int, 10**5, "horizon"),
        "delta": (_opt_float, None, "separation threshold (default by d)"),
        "eps_prox": (float, 1e-3, "proximality threshold"),
        "eps_late": (_opt_float, None, "late-window separation threshold (default eps_prox)"),
        "burn_in": (_int, 0, "discarded initial steps"),
        "samples": (_int, 500, "number of tuples"),
        "seed": (_int, 0, "64-bit seed"),
    },
    "sweep": {
        "map": (str, "manpom", "manpom | manpom2 | doubling"),
        "alphas": (_floats, [1.2, 1.7], "comma separated alphas"),
        "ds": (_ints, [2, 3], "comma separated tuple sizes"),
        "metric": (str, "interval", "interval | circle"),
        "N": (_int, 10**5, "horizon"),
        "eps_prox": (float, 1e-3, "proximality threshold"),
        "eps_late": (_opt_float, None, "late-window separation threshold"),
        "samples": (_int, 500, "tuples per cell"),
        "seed": (_int, 0, "64-bit seed"),
    },
    "accept": {
        "suite": (str, "primary", "acceptance suite"),
        "only": (_ints, [], "comma separated criterion numbers (default all)"),
        "seed": (_int, 1, "64-bit seed"),
        "scale": (float, 1.0, "size factor for horizons and samples (1 = stated sizes)"),
    },
}

COLUMNS = {
    "induce": "n, y_n, yprime_n, tail_tau_ge_n, cumulative_n_tau",
    "density": "cell_mid, cell_width, h, h_times_x_alpha",
    "renewal": "n, u_operator, u_mc, stderr",
    "tuples": "one row per horizon: map, alpha, d, delta, eps_prox, N, samples, fractions + Wilson bounds, predictions",
    "sweep": "one row per (alpha, d): as for tuples",
    "accept": "criterion, passed (timings go to accept.json)",
}


def _valid_keys(sub):
    return list(OPTIONS[sub]) + list(COMMON)


def load_config(path, sub):
    """Read a flat JSON object and coerce it to the subcommand's option types."""
    if path is None:
        return {}
    with open(path) as fh:
        text = fh.read()
    raw = json.loads(text) if text.strip() else {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a flat JSON object")
    spec = {**OPTIONS[sub], **COMMON}
    out = {}
    for key, val in raw.items():
        if key not in spec:
            near = difflib.get_close_matches(key, list(spec), n=1)
            hint = f" (did you mean {near[0]!r}?)" if near else ""
            raise ConfigError(f"unknown key {key!r}{hint}; valid keys: {', '.join(sorted(spec))}")
        conv = spec[key][0]
        try:
            out[key] = conv(val) if not isinstance(val, list) else conv(",".join(map(str, val)))
        except (TypeError, ValueError):
            raise ConfigError(f"key {key!r}: expected {getattr(conv, '__name__', conv).lstrip('_')}, got {val!r}")
    return out


def resolve(sub, file_cfg, cli_cfg):
    """Defaults < config file < command line."""
    cfg = {k: v[1] for k, v in {**OPTIONS[sub], **COMMON}.items()}
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in cli_cfg.items() if v is not None})
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="liyorke", description="Manneville-Pomeau / Li-Yorke experiment runner")
    p.add_argument("--version", action="version", version=__version__)
    subs = p.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for sub, opts in OPTIONS.items():
        sp = subs.add_parser(sub, help=f"CSV columns: {COLUMNS[sub]}",
                             description=f"CSV columns: {COLUMNS[sub]}")
        sp.add_argument("--config", default=None, help="flat JSON config file")
        for key, (conv, default, helptext) in {**opts, **COMMON}.items():
            sp.add_argument(f"--{key}", type=conv, default=None,
                            help=f"{helptext} [default: {default}]")
    return p


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _map_from(cfg):
    return MapSpec.from_config({"map": cfg.get("map", "manpom"), "alpha": cfg.get("alpha"),
                                "beta": cfg.get("beta"), "metric": cfg.get("metric", "interval")})


# ---------------------------------------------------------------------------
# subcommands


def run_induce(cfg, out):
    from .inducing import compute_yn, tail_measure
    spec = MapSpec.manpom(cfg["alpha"])
    rs = compute_yn(spec, cfg["n_max"])
    if cfg["window_lo"] is None:
        cfg["window_lo"] = float(min(100, max(1, cfg["n_max"] // 100)))
    hi = cfg["window_hi"] or max(cfg["n_max"] // 10, cfg["window_lo"] + 1)
    cfg["window_hi"] = hi
    rep = tail_measure(spec, cfg["n_max"], (cfg["window_lo"], hi), structure=rs)
    rows = ((n, rs.y[n], rs.yprime[n], rep.tail[n - 1], rep.partial_sums[n - 1])
            for n in range(1, cfg["n_max"] + 1))
    files = [write_csv(os.path.join(out, "induce.csv"),
                       ["n", "y_n", "yprime_n", "tail_tau_ge_n", "cumulative_n_tau"], rows)]
    summary = {"tail_exponent": rep.fit.slope, "target": -1.0 / cfg["alpha"], "r2": rep.fit.r2,
               "window": rep.window, "sum_n_tau_increment": rep.increment,
               "sum_n_tau_diagnosis": rep.diagnosis, "censored_measure": rep.censored_measure}
    files.append(write_json(os.path.join(out, "induce_summary.json"), summary))
    if cfg["svg"]:
        n = np.arange(1, cfg["n_max"] + 1)
        files.append(line_chart(os.path.join(out, "induce.svg"), n, [rs.y[1:], rep.tail],
                                ["y_n", "tail"], f"alpha = {cfg['alpha']}"))
    return files, {"censored_measure": rep.censored_measure}


def run_density(cfg, out):
    from .transfer import Mesh, build_ulam, invariant_density
    spec = _map_from(cfg)
    mesh = Mesh.for_map(spec, cfg["M"], cfg["gamma"])
    cfg["gamma"] = mesh.gamma
    op = build_ulam(spec, mesh)
    h = invariant_density(op, cfg["tol"], cfg["max_iter"], cfg["method"])
    a = spec.alpha if spec.kind != "doubling" else 0.0
    lo = cfg["window_lo"] if cfg["window_lo"] is not None else (1e-3 if a >= 1 else 1e-4)
    cfg["window_lo"] = lo
    w = h.weighted(a)
    rows = zip(mesh.mids, mesh.widths, h.h, w)
    files = [write_csv(os.path.join(out, "density.csv"),
                       ["cell_mid", "cell_width", "h", "h_times_x_alpha"], rows)]
    ratio, wmin, wmax = h.bound_ratio(a, lo)
    summary = {"window": [lo, 1.0], "sup_h_x_alpha": wmax, "inf_h_x_alpha": wmin,
               "ratio": ratio, "iterations": h.iterations, "residual": h.residual,
               "method": h.method, "normalization": h.normalization, "mass": h.mass,
               "cells": mesh.M, "gamma": mesh.gamma}
    files.append(write_json(os.path.join(out, "density_summary.json"), summary))
    if cfg["svg"]:
        files.append(line_chart(os.path.join(out, "density.svg"), mesh.mids, [h.h, w],
                                ["h", "h x^alpha"], spec.describe()))
    return files, {}


def run_renewal(cfg, out):
    from .renewal import conservativity_index, tail_exponent_fit, un_montecarlo, un_operator
    from .transfer import Mesh, build_ulam
    spec = _map_from(cfg)
    gamma = cfg["gamma"] if cfg["gamma"] is not None else (1.0 + spec.alpha if spec.kind != "doubling" else 1.0)
    cfg["gamma"] = gamma
    op = build_ulam(spec, Mesh.for_map(spec, cfg["M"], gamma))
    N = cfg["N"]
    u = un_operator(op, N)
    mc = un_montecarlo(spec, min(cfg["mc_N"], N), cfg["samples"], cfg["seed"]) if cfg["samples"] else None
    rows = []
    for n in range(N + 1):
        if mc is not None and n <= mc.N:
            rows.append((n, u.u[n], mc.u[n], mc.stderr[n]))
        else:
            rows.append((n, u.u[n], "", ""))
    files = [write_csv(os.path.join(out, "renewal.csv"), ["n", "u_operator", "u_mc", "stderr"], rows)]
    window = (cfg["window_lo"], min(cfg["window_hi"], N))
    fit = tail_exponent_fit(u, window)
    verdicts = {}
    for d in range(1, 6):
        rep = conservativity_index(u, d)
        verdicts[str(d)] = {"verdict": rep.verdict, "alpha_star": rep.threshold,
                            "increment": rep.increment, "exponent": rep.exponent}
    target = 1.0 / spec.alpha - 1.0 if spec.kind != "doubling" else 0.0
    summary = {"slope": fit.slope, "target": target, "r2": fit.r2, "window": window,
               "verdicts": verdicts}
    files.append(write_json(os.path.join(out, "renewal_summary.json"), summary))
    if cfg["svg"]:
        files.append(line_chart(os.path.join(out, "renewal.svg"), u.n[1:], [u.u[1:]],
                                ["u_n"], spec.describe()))
    return files, {}


def _phase_rows(rows):
    dicts = [r.as_dict() for r in rows]
    header = list(dicts[0])
    return header, [[d[k] for k in header] for d in dicts]


def run_tuples(cfg, out):
    from .tuples import TupleConfig, default_delta, measure_estimate
    spec = _map_from(cfg)
    delta = cfg["delta"] if cfg["delta"] is not None else default_delta(cfg["d"])
    cfg["delta"] = delta
    if cfg["eps_late"] is None:
        cfg["eps_late"] = cfg["eps_prox"]
    tc = TupleConfig(spec, cfg["d"], cfg["N"], delta, cfg["eps_prox"], cfg["burn_in"], cfg["seed"])
    est = measure_estimate(tc, cfg["samples"], eps_late=cfg["eps_late"])
    header, rows = _phase_rows(est.rows)
    files = [write_csv(os.path.join(out, "tuples.csv"), header, rows)]
    return files, {"excluded": 0}


def run_sweep(cfg, out):
    from .tuples import phase_sweep
    rows = phase_sweep(cfg["alphas"], cfg["ds"], cfg["N"], cfg["samples"], cfg["seed"],
                       eps_prox=cfg["eps_prox"], eps_late=cfg["eps_late"], kind=cfg["map"],
                       metric=cfg["metric"])
    header, data = _phase_rows(rows)
    files = [write_csv(os.path.join(out, "sweep.csv"), header, data)]
    return files, {"excluded": 0}


def run_accept(cfg, out):
    from .acceptance import run_suite
    results = run_suite(cfg["only"] or None, seed=cfg["seed"], echo=True, scale=cfg["scale"],
                        out=out)
    # timings stay out of the CSV so its bytes depend only on (seed, config)
    files = [write_csv(os.path.join(out, "accept.csv"), ["criterion", "passed"],
                       [(r.number, r.passed) for r in results])]
    files.append(write_json(os.path.join(out, "accept.json"),
                            {"suite": cfg["suite"], "scale": cfg["scale"],
                             "passed": all(r.passed for r in results),
                             "criteria": [r.as_dict() for r in results]}))
    files += [os.path.join(out, n + ".csv") for r in results for n in r.tables]
    return files, {"passed": sum(r.passed for r in results), "failed": sum(not r.passed for r in results)}


RUNNERS = {"induce": run_induce, "density": run_density, "renewal": run_renewal,
           "tuples": run_tuples, "sweep": run_sweep, "accept": run_accept}


def _set_workers(n):
    import numba
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n <= 0 else min(n, limit))


def run(argv=None):
    """Execute one subcommand; returns ``(exit_code, files)``."""
    try:
        ns = build_parser().parse_args(argv)
        sub = ns.sub
        cli_cfg = {k: v for k, v in vars(ns).items() if k not in ("sub", "config")}
        cfg = resolve(sub, load_config(ns.config, sub), cli_cfg)
        if sub in ("tuples", "sweep") and cfg["map"] not in ("manpom", "manpom2", "doubling"):
            raise ConfigError(f"unknown map {cfg['map']!r}")
        if sub == "accept" and cfg["suite"] != "primary":
            raise ConfigError(f"unknown suite {cfg['suite']!r} (only 'primary' exists)")
    except ConfigError as exc:
        print(f"liyorke: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, []
    except OSError as exc:
        print(f"liyorke: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG, []
    except json.JSONDecodeError as exc:
        print(f"liyorke: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG, []

    out = cfg["out"] or os.environ.get("LIYORKE_OUT") or os.path.join("runs", sub)
    os.makedirs(out, exist_ok=True)
    _set_workers(cfg["workers"])
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    try:
        files, counters = RUNNERS[sub](cfg, out)
        code = EXIT_OK
    except NonConvergence as exc:
        print(f"liyorke: numerical failure: {exc}", file=sys.stderr)
        files, counters, code = [], {"error": str(exc)}, EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"liyorke: error: {exc}", file=sys.stderr)
        files, counters, code = [], {"error": str(exc)}, EXIT_CONFIG
    manifest = {
        "subcommand": sub,
        "config": {k: v for k, v in cfg.items() if k not in ("out", "workers")},
        "seed": cfg.get("seed"),
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": time.perf_counter() - t0,
        "workers": cfg["workers"],
        "outputs": [os.path.basename(f) for f in files],
        "counters": counters,
        "exit_code": code,
    }
    files.append(write_json(os.path.join(out, "manifest.json"), manifest))
    return code, files


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
