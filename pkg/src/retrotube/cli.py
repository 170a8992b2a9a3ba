"""Command line surface: configuration, dispatch, artifacts, manifests.

Every run writes its data files into the output directory together with a
manifest naming the resolved configuration, its hash, the seed, package
versions, wall time, and discard counters.  Re-running a subcommand with
``--config <manifest.json>`` reproduces the artifacts; options given on
the command line override the configuration file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .billiard import InitialCondition, trace
from .errors import (BudgetExhausted, ConfigError, CornerHit,
                     InsufficientData)
from .experiments import (DEFAULT_EPSILON_GRID, estimate_Q_pmf,
                          estimate_reversal, estimate_T_cdf, reversal_sweep,
                          tail_diagnostic)
from .iet import induce_rotation
from .lattice import limiting_exit_law
from .mcstats import _fmt, clopper_pearson, tv_distance
from .rotation import (RotationParams, hitting_times_fast,
                       hitting_times_naive)
from . import report

_LIST_KEYS = ("epsilon_grid", "t_grid")
_KEY_TYPES = {
    "epsilon": float, "delta": float, "y_in": float, "slope": float,
    "phi": float, "alpha": float, "s": float,
    "samples": int, "seed": int, "k_max": int, "k_min": int,
    "threads": int, "count": int, "triples": int,
    "deterministic": bool, "no_figures": bool,
    "out": str, "format": str, "subcommand": str,
    "epsilon_grid": tuple, "t_grid": tuple,
}

_DEFAULTS = {
    "trace": {"format": "json", "epsilon": None, "y_in": None,
              "slope": None, "phi": None},
    "exitstats": {"format": "csv", "epsilon": None, "epsilon_grid": None,
                  "delta": 0.1, "samples": 10 ** 5, "k_max": 20,
                  "t_grid": None},
    "lattice-gk": {"format": "csv", "samples": 10 ** 5, "k_max": 20},
    "compare": {"format": "csv", "epsilon": None, "samples": 10 ** 5,
                "k_max": 20},
    "tail": {"format": "csv", "epsilon": None, "s": 1.0, "samples": 10 ** 5,
             "k_min": 8, "k_max": 64},
    "iet": {"format": "json", "alpha": None, "epsilon": None},
    "bench": {"format": "json", "epsilon": 1e-5, "triples": 6,
              "count": 400},
}
_COMMON_DEFAULTS = {"out": ".", "seed": None, "threads": 1,
                    "deterministic": False, "no_figures": False}


# ---------------------------------------------------------------------------
# configuration


def _coerce(key, value):
    if key not in _KEY_TYPES:
        raise ConfigError(f"unknown key {key!r}")
    kind = _KEY_TYPES[key]
    if value is None:
        return None
    try:
        if key in _LIST_KEYS:
            if isinstance(value, (list, tuple)):
                return tuple(float(v) for v in value)
            parts = [p for p in str(value).split(",") if p.strip()]
            if not parts:
                raise ValueError("empty list")
            return tuple(float(p) for p in parts)
        if kind is bool:
            if isinstance(value, bool):
                return value
            low = str(value).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def load_config(path) -> dict:
    """Read a configuration mapping from a file.

    Accepts either a run manifest (JSON, the ``config`` block is used) or
    a flat text file of ``key = value`` lines with ``#`` comments.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".json":
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        block = payload.get("config", payload)
        if not isinstance(block, dict):
            raise ConfigError(f"{path}: no config mapping found")
        return {k: _coerce(k, v) for k, v in block.items()}
    out = {}
    for ln, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        try:
            out[key] = _coerce(key, value.strip())
        except ConfigError as exc:
            raise ConfigError(f"{path}:{ln}: {exc}") from exc
    return out


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and explicit flags into one mapping."""
    sub = args.subcommand
    cfg = dict(_COMMON_DEFAULTS)
    cfg.update(_DEFAULTS[sub])
    cfg["subcommand"] = sub
    if args.config:
        loaded = load_config(args.config)
        cfg_sub = loaded.pop("subcommand", None)
        if cfg_sub is not None and cfg_sub != sub:
            raise ConfigError(
                f"config is for subcommand {cfg_sub!r}, not {sub!r}")
        for key, value in loaded.items():
            if key not in cfg:
                raise ConfigError(
                    f"key {key!r} does not apply to subcommand {sub!r}")
            cfg[key] = value
    for key in cfg:
        if key == "subcommand":
            continue
        given = getattr(args, key, None)
        if given is not None:
            cfg[key] = _coerce(key, given)
    if cfg.get("deterministic"):
        cfg["threads"] = 1
    if cfg.get("threads", 1) < 1:
        raise ConfigError("threads must be at least 1")
    if cfg.get("samples") is not None and cfg["samples"] < 1:
        raise ConfigError("samples must be positive")
    if cfg.get("format") not in (None, "csv", "json"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    return cfg


def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise ConfigError(
                f"{cfg['subcommand']} needs --{key.replace('_', '-')}")


def _seeded(cfg) -> int:
    if cfg.get("seed") is None:
        cfg["seed"] = int(np.random.SeedSequence().entropy % (2 ** 63))
    return cfg["seed"]


def config_hash(cfg: dict) -> str:
    payload = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# artifact helpers


def _dump_json(obj, path: Path) -> str:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path.name


def _write_rows(path: Path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    return path.name


def _pmf_payload(pm) -> dict:
    return {"support": list(pm.support), "probs": list(pm.probs),
            "intervals": [list(iv) for iv in pm.intervals()],
            "tail": pm.tail, "trials": pm.trials, "meta": pm.meta}


def _cdf_payload(cd) -> dict:
    return {"grid": list(cd.grid), "values": list(cd.values),
            "trials": cd.trials, "meta": cd.meta}


def _reversal_payload(r) -> dict:
    return {"epsilon": r.epsilon, "delta": r.delta, "estimate": r.estimate,
            "ci": list(r.ci), "trials": r.trials, "successes": r.successes,
            "censored": r.censored, "resampled": r.resampled,
            "audit": r.audit, "meta": r.meta}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_trace(cfg, outdir):
    _require(cfg, "epsilon", "y_in")
    if (cfg.get("slope") is None) == (cfg.get("phi") is None):
        raise ConfigError("trace needs exactly one of --slope, --phi")
    if cfg.get("phi") is not None:
        ic = InitialCondition.from_angle(cfg["y_in"], cfg["phi"],
                                         cfg["epsilon"])
    else:
        ic = InitialCondition(y_in=cfg["y_in"], slope=cfg["slope"],
                              epsilon=cfg["epsilon"])
    result = trace(ic, include_horizontal=True)
    rec = result.record
    payload = {
        "y_in": ic.y_in, "slope": ic.slope, "epsilon": ic.epsilon,
        "censored": rec is None, "crossings": result.crossings,
    }
    if rec is not None:
        payload.update({
            "q": rec.q, "reversed": rec.reversed_exactly,
            "y_out": rec.y_out, "flight": rec.flight, "zbar": rec.zbar,
            "turning_ordinate": rec.z, "turning_distance": rec.z_dist,
            "wall_bounces": rec.h_count, "returns": list(rec.n),
        })
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(payload, outdir / "trace.json"))
    else:
        keys = list(payload)
        vals = [payload[k] if not isinstance(payload[k], list)
                else " ".join(map(str, payload[k])) for k in keys]
        artifacts.append(_write_rows(outdir / "trace.csv", keys, [vals]))
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_trace_figure(
            ic, result, outdir / "trace.png")).name)
    counters = {"censored": int(rec is None)}
    return artifacts, counters, {}


def _sweep_rows(sw):
    for r in sw.rows:
        yield [_fmt(r.epsilon), _fmt(r.estimate), _fmt(r.ci[0]),
               _fmt(r.ci[1]), r.trials, r.successes, r.censored,
               r.resampled]


def _cmd_exitstats(cfg, outdir):
    if (cfg.get("epsilon") is None) and (cfg.get("epsilon_grid") is None):
        raise ConfigError(
            "exitstats needs --epsilon or --epsilon-grid")
    seed = _seeded(cfg)
    artifacts = []
    if cfg.get("epsilon_grid") is not None:
        sw = reversal_sweep(cfg["delta"], cfg["samples"],
                            epsilons=cfg["epsilon_grid"], rng=seed,
                            threads=cfg["threads"])
        if cfg["format"] == "json":
            artifacts.append(_dump_json(
                {"delta": sw.delta,
                 "rows": [_reversal_payload(r) for r in sw.rows],
                 "meta": sw.meta},
                outdir / "reversal-sweep.json"))
        else:
            with open(outdir / "reversal-sweep.csv", "w", newline="") as fh:
                sw.to_csv(fh)
            artifacts.append("reversal-sweep.csv")
        if not cfg["no_figures"]:
            artifacts.append(Path(report.save_reversal_figure(
                sw, outdir / "reversal-sweep.png")).name)
        return artifacts, sw.counters(), {"delta": sw.delta}

    eps = cfg["epsilon"]
    child = np.random.SeedSequence(seed).spawn(3)
    seeds = [int(s.generate_state(1, np.uint64)[0] % (2 ** 63))
             for s in child]
    rev = estimate_reversal(eps, cfg["delta"], cfg["samples"], rng=seeds[0],
                            threads=cfg["threads"])
    pmf = estimate_Q_pmf(eps, cfg["samples"], k_max=cfg["k_max"],
                         rng=seeds[1], threads=cfg["threads"])
    cdf = estimate_T_cdf(eps, cfg["samples"], grid=cfg.get("t_grid"),
                         rng=seeds[2], threads=cfg["threads"])
    if cfg["format"] == "json":
        artifacts.append(_dump_json(_reversal_payload(rev),
                                    outdir / "reversal.json"))
        artifacts.append(_dump_json(_pmf_payload(pmf),
                                    outdir / "exit-index-pmf.json"))
        artifacts.append(_dump_json(_cdf_payload(cdf),
                                    outdir / "flight-time-cdf.json"))
    else:
        artifacts.append(_write_rows(
            outdir / "reversal.csv",
            ["epsilon", "delta", "estimate", "ci_low", "ci_high", "trials",
             "successes", "censored", "resampled"],
            [[_fmt(eps), _fmt(rev.delta), _fmt(rev.estimate),
              _fmt(rev.ci[0]), _fmt(rev.ci[1]), rev.trials, rev.successes,
              rev.censored, rev.resampled]]))
        with open(outdir / "exit-index-pmf.csv", "w", newline="") as fh:
            pmf.to_csv(fh)
        artifacts.append("exit-index-pmf.csv")
        with open(outdir / "flight-time-cdf.csv", "w", newline="") as fh:
            cdf.to_csv(fh)
        artifacts.append("flight-time-cdf.csv")
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_pmf_figure(
            [(f"simulated, barrier {eps:g}", pmf)],
            outdir / "exit-index-pmf.png")).name)
        artifacts.append(Path(report.save_cdf_figure(
            [(f"barrier {eps:g}", cdf)],
            outdir / "flight-time-cdf.png")).name)
    counters = {
        "censored": rev.censored + pmf.meta["censored"]
        + cdf.meta["censored"],
        "resampled": rev.resampled + pmf.meta["resampled"]
        + cdf.meta["resampled"],
        "audit_checked": rev.audit["checked"],
        "audit_mismatches": rev.audit["mismatches"],
        "indeterminate_flights": cdf.meta["indeterminate"],
    }
    extra = {"reversal_estimate": rev.estimate,
             "delta": cfg["delta"]}
    return artifacts, counters, extra


def _cmd_lattice_gk(cfg, outdir):
    seed = _seeded(cfg)
    law = limiting_exit_law(cfg["k_max"], cfg["samples"], seed=seed)
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(_pmf_payload(law),
                                    outdir / "lattice-gk.json"))
    else:
        with open(outdir / "lattice-gk.csv", "w", newline="") as fh:
            law.to_csv(fh)
        artifacts.append("lattice-gk.csv")
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_pmf_figure(
            [("lattice limit", law)], outdir / "lattice-gk.png")).name)
    counters = {"degenerate": law.meta["degenerate"],
                "censored": law.meta["censored"]}
    return artifacts, counters, {"tail": law.tail}


def _cmd_compare(cfg, outdir):
    _require(cfg, "epsilon")
    seed = _seeded(cfg)
    child = np.random.SeedSequence(seed).spawn(2)
    seeds = [int(s.generate_state(1, np.uint64)[0] % (2 ** 63))
             for s in child]
    dyn = estimate_Q_pmf(cfg["epsilon"], cfg["samples"],
                         k_max=cfg["k_max"], rng=seeds[0],
                         threads=cfg["threads"])
    lat = limiting_exit_law(cfg["k_max"], cfg["samples"], seed=seeds[1])
    tv = tv_distance(dyn, lat)
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(
            {"dynamic": _pmf_payload(dyn), "lattice": _pmf_payload(lat),
             "tv_distance": tv},
            outdir / "compare.json"))
    else:
        rows = []
        for i, k in enumerate(dyn.support):
            dlo, dhi = clopper_pearson(dyn.counts()[i], dyn.trials)
            llo, lhi = clopper_pearson(lat.counts()[i], lat.trials)
            rows.append([k, _fmt(dyn.probs[i]), _fmt(lat.probs[i]),
                         _fmt(dlo), _fmt(dhi), _fmt(llo), _fmt(lhi)])
        rows.append(["tv_distance", _fmt(tv), "", "", "", "", ""])
        artifacts.append(_write_rows(
            outdir / "compare.csv",
            ["k", "p_dyn", "p_lat", "dyn_ci_low", "dyn_ci_high",
             "lat_ci_low", "lat_ci_high"], rows))
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_pmf_figure(
            [(f"simulated, barrier {cfg['epsilon']:g}", dyn),
             ("lattice limit", lat)],
            outdir / "compare.png")).name)
    counters = {"dyn_censored": dyn.meta["censored"],
                "dyn_resampled": dyn.meta["resampled"],
                "lat_degenerate": lat.meta["degenerate"],
                "lat_censored": lat.meta["censored"]}
    return artifacts, counters, {"tv_distance": tv}


def _cmd_tail(cfg, outdir):
    _require(cfg, "epsilon")
    if not cfg["k_min"] < cfg["k_max"]:
        raise ConfigError("k_min must be below k_max")
    seed = _seeded(cfg)
    diag = tail_diagnostic(cfg["s"], cfg["epsilon"], cfg["samples"],
                           k_range=(cfg["k_min"], cfg["k_max"]), rng=seed,
                           threads=cfg["threads"])
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(
            {"s": diag.s, "epsilon": diag.epsilon, "ks": list(diag.ks),
             "survival": list(diag.survival), "counts": list(diag.counts),
             "slope": diag.slope, "intercept": diag.intercept,
             "fit_ks": list(diag.fit_ks), "trials": diag.trials,
             "meta": diag.meta},
            outdir / "tail.json"))
    else:
        rows = [[k, c, _fmt(sv), int(k in set(diag.fit_ks))]
                for k, c, sv in zip(diag.ks, diag.counts, diag.survival)]
        rows.append(["slope", _fmt(diag.slope), "", ""])
        artifacts.append(_write_rows(
            outdir / "tail.csv",
            ["k", "exceedances", "survival", "in_fit"], rows))
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_tail_figure(
            diag, outdir / "tail.png")).name)
    counters = {"fit_points": len(diag.fit_ks)}
    return artifacts, counters, {"slope": diag.slope}


def _cmd_iet(cfg, outdir):
    _require(cfg, "alpha", "epsilon")
    if not 0.0 <= cfg["alpha"] < 1.0:
        raise ConfigError("alpha must lie in [0, 1)")
    iet = induce_rotation(cfg["alpha"], cfg["epsilon"])
    payload = dataclasses.asdict(iet)
    payload["alpha"] = cfg["alpha"]
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(payload, outdir / "iet.json"))
    else:
        edges = (0.0,) + tuple(iet.breaks) + (iet.domain,)
        rows = [[i + 1, _fmt(edges[i]), _fmt(edges[i + 1]),
                 _fmt(iet.shifts[i]), iet.labels[i], iet.images_order[i]]
                for i in range(len(edges) - 1)]
        artifacts.append(_write_rows(
            outdir / "iet.csv",
            ["piece", "lo", "hi", "shift", "return_time",
             "image_position"], rows))
    if not cfg["no_figures"]:
        artifacts.append(Path(report.save_iet_figure(
            iet, outdir / "iet.png")).name)
    return artifacts, {"degenerate": int(iet.degenerate)}, {}


def bench_hitting_times(epsilon: float = 1e-5, triples: int = 6,
                        count: int = 400, seed: int = 0) -> dict:
    """Throughput of both hitting-time generators on one fixed workload.

    Runs the same random parameter triples through the stepwise scan and
    the gap-structure path, reports hits per second for each, and counts
    output mismatches (always zero unless something is broken).
    """
    rng = np.random.default_rng(seed)
    params = [RotationParams(x0=float(rng.random()),
                             alpha=float(rng.random()), epsilon=epsilon)
              for _ in range(triples)]
    t0 = time.perf_counter()
    naive = [hitting_times_naive(p, count) for p in params]
    t1 = time.perf_counter()
    fast = [hitting_times_fast(p, count) for p in params]
    t2 = time.perf_counter()
    mism = sum(int(a.m != b.m) for a, b in zip(naive, fast))
    hits = triples * count
    naive_rate = hits / max(t1 - t0, 1e-9)
    fast_rate = hits / max(t2 - t1, 1e-9)
    return {"epsilon": epsilon, "triples": triples, "count": count,
            "naive_hits_per_s": naive_rate, "fast_hits_per_s": fast_rate,
            "speedup": fast_rate / naive_rate, "mismatches": mism}


def _cmd_bench(cfg, outdir):
    seed = _seeded(cfg)
    result = bench_hitting_times(epsilon=cfg["epsilon"],
                                 triples=cfg["triples"],
                                 count=cfg["count"], seed=seed)
    artifacts = []
    if cfg["format"] == "json":
        artifacts.append(_dump_json(result, outdir / "bench.json"))
    else:
        keys = list(result)
        artifacts.append(_write_rows(
            outdir / "bench.csv", keys,
            [[_fmt(result[k]) if isinstance(result[k], float) else result[k]
              for k in keys]]))
    return artifacts, {"mismatches": result["mismatches"]}, \
        {"speedup": result["speedup"]}


_DISPATCH = {
    "trace": _cmd_trace,
    "exitstats": _cmd_exitstats,
    "lattice-gk": _cmd_lattice_gk,
    "compare": _cmd_compare,
    "tail": _cmd_tail,
    "iet": _cmd_iet,
    "bench": _cmd_bench,
}


# ---------------------------------------------------------------------------
# parser and entry point


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="retrotube",
        description="Retroreflecting tube simulator and statistics runner")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--deterministic", action="store_const", const=True,
                        help="force single-thread execution")
        sp.add_argument("--no-figures", action="store_const", const=True,
                        dest="no_figures")
        sp.add_argument("--config", help="config file or manifest to load")

    sp = sub.add_parser("trace", help="follow one launch to its exit")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--y-in", type=float, dest="y_in")
    sp.add_argument("--slope", type=float)
    sp.add_argument("--phi", type=float,
                    help="direction angle as a fraction of pi")
    common(sp)

    sp = sub.add_parser("exitstats",
                        help="Monte Carlo exit laws for one or more heights")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--epsilon-grid", dest="epsilon_grid",
                    help="comma-separated barrier heights")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--k-max", type=int, dest="k_max")
    sp.add_argument("--t-grid", dest="t_grid",
                    help="comma-separated rescaled times")
    common(sp)

    sp = sub.add_parser("lattice-gk",
                        help="limiting exit-index law from lattice sampling")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--k-max", type=int, dest="k_max")
    common(sp)

    sp = sub.add_parser("compare",
                        help="simulated exit index against the lattice limit")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--k-max", type=int, dest="k_max")
    common(sp)

    sp = sub.add_parser("tail", help="visit-count tail exponent")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--s", type=float, help="rescaled horizon")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--k-min", type=int, dest="k_min")
    sp.add_argument("--k-max", type=int, dest="k_max")
    common(sp)

    sp = sub.add_parser("iet", help="induced interval exchange of a height")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--epsilon", type=float)
    common(sp)

    sp = sub.add_parser("bench", help="hitting-time generator throughput")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--triples", type=int)
    sp.add_argument("--count", type=int)
    common(sp)
    return p


def run(cfg: dict) -> int:
    """Execute one resolved configuration and write its artifacts."""
    outdir = Path(cfg["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    artifacts, counters, extra = _DISPATCH[cfg["subcommand"]](cfg, outdir)
    wall = time.perf_counter() - t0
    manifest_cfg = {k: v for k, v in cfg.items()}
    manifest = {
        "subcommand": cfg["subcommand"],
        "config": manifest_cfg,
        "config_sha256": config_hash(manifest_cfg),
        "seed": cfg.get("seed"),
        "versions": {"retrotube": __version__,
                     "python": platform.python_version(),
                     "numpy": np.__version__},
        "wall_time_s": wall,
        "counters": counters,
        "artifacts": artifacts,
    }
    manifest.update(extra)
    name = f"{cfg['subcommand']}-manifest.json"
    _dump_json(manifest, outdir / name)
    print(f"{cfg['subcommand']}: wrote {', '.join(artifacts)} and {name} "
          f"to {outdir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = _resolve(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExhausted, InsufficientData, CornerHit) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
