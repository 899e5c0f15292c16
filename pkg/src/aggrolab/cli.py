"""Command-line front end.

    aggrolab <kind> --config <path> [--seed S] [--workers W] [--out DIR]

One JSON config describes one experiment.  Every run writes its result files,
a plain-text summary and a manifest (config echo, versions, seed, timing and
a sha256 for every output) to the output directory.  Result files depend only
on the config and seed; timing and worker count appear only in the manifest.

Exit codes: 0 success, 2 invalid config, 3 resource cap or busy output
directory, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import ar1sim, disaggregation, fields
from . import innovations as inn
from . import mixing as mix
from .analytics import estimators, regimes, secondorder
from .errors import NumericalError, ResourceCapError, SpecError
from .io import fmt, innovation_from_dict, mixing_from_dict, sha256_file, spec_to_dict, write_csv, write_json
from .parallel import WORKERS_ENV, resolve_workers
from .rng import Stream

KINDS = ("simulate", "aggregate", "diagnose", "disaggregate", "field", "report")
EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_NUMERIC = 0, 2, 3, 4
MANIFEST = "manifest.json"
SUMMARY = "summary.txt"
LOCK = ".lock"

_TOP_KEYS = {"kind", "seed", "workers", "out", "mixing", "innovation", "sizes", "params"}


# --- config ---------------------------------------------------------------


def load_config(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SpecError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise SpecError("config must be a JSON object")
    return cfg


def _int(d: dict, key: str, default=None, lo: int = 1) -> int:
    v = d.get(key, default)
    if v is None:
        raise SpecError(f"missing required size {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < lo:
        raise SpecError(f"{key} must be an integer >= {lo}, got {v!r}")
    return int(v)


def validate(cfg: dict, kind: str) -> dict:
    """Check every spec block and size before any computation; returns parsed objects."""
    extra = set(cfg) - _TOP_KEYS
    if extra:
        raise SpecError(f"unknown config keys: {sorted(extra)}")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}")
    if cfg.get("kind", kind) != kind:
        raise SpecError(f"config is for kind {cfg['kind']!r}, not {kind!r}")
    parsed = {}
    if "mixing" in cfg:
        parsed["mixing"] = mixing_from_dict(cfg["mixing"])
    if "innovation" in cfg:
        parsed["innovation"] = innovation_from_dict(cfg["innovation"])
    sizes = cfg.get("sizes", {})
    params = cfg.get("params", {})
    if not isinstance(sizes, dict) or not isinstance(params, dict):
        raise SpecError("sizes and params must be objects")
    need_mix = kind in ("simulate", "aggregate", "field") or (kind == "disaggregate")
    if need_mix and "mixing" not in parsed:
        raise SpecError(f"{kind} needs a mixing block")
    if kind in ("simulate", "aggregate", "field") and "innovation" not in parsed:
        parsed["innovation"] = inn.Gaussian(1.0)
    if kind in ("simulate", "aggregate"):
        parsed["N"] = _int(sizes, "N")
        parsed["n"] = _int(sizes, "n")
        parsed["replicates"] = _int(sizes, "replicates", 1)
    if kind == "aggregate":
        scheme = params.get("scheme", "finite-variance")
        if scheme not in ar1sim.SCHEMES:
            raise SpecError(f"scheme must be one of {ar1sim.SCHEMES}")
        parsed["scheme"] = scheme
        parsed["max_lag"] = _int(params, "max_lag", 10, lo=0)
    if kind == "diagnose":
        if "beta" not in params:
            raise SpecError("diagnose needs params.beta")
        for key in ("alpha", "beta", "sigma", "alpha0"):
            if key in params and not isinstance(params[key], (int, float)):
                raise SpecError(f"params.{key} must be a number")
        # classifiers validate their own ranges; run them now so errors surface early
        regimes.diagnose(**_diag_args(params))
    if kind == "disaggregate":
        method = params.get("method", "robinson")
        if method not in ("robinson", "beran", "gegenbauer"):
            raise SpecError("params.method must be robinson, beran or gegenbauer")
        parsed["method"] = method
        parsed["n"] = _int(sizes, "n")
        if method in ("robinson", "beran"):
            parsed["N"] = _int(sizes, "N")
            parsed["innovation"] = parsed.get("innovation", inn.Gaussian(1.0))
        if method == "gegenbauer":
            aw = params.get("alpha_weight", 0.0)
            if not isinstance(aw, (int, float)) or aw <= -1:
                raise SpecError("alpha_weight must be a number > -1")
            if "K" not in params and "gamma_rate" not in params:
                raise SpecError("gegenbauer needs params.K or params.gamma_rate")
    if kind == "field":
        parsed["model"] = fields.FieldModel(params.get("variant", "4N"), parsed["mixing"], parsed["innovation"])
        parsed["L"] = _int(sizes, "L")
        parsed["N"] = _int(sizes, "N")
    return parsed


def _diag_args(params: dict) -> dict:
    return {k: params[k] for k in ("alpha", "beta", "sigma", "alpha0", "N", "n") if k in params}


# --- experiments ----------------------------------------------------------


def _summary_lines(title: str, items: dict) -> list[str]:
    lines = [title]
    for k, v in items.items():
        lines.append(f"  {k}: {fmt(v) if isinstance(v, float) else v}")
    return lines


def _sigma2(spec) -> float:
    v = inn.variance_of(spec)
    return v if math.isfinite(v) else math.nan


def run_simulate(cfg, parsed, out: Path, seed: int, workers: int) -> tuple[list[Path], list[str]]:
    files = []
    lines = []
    for r in range(parsed["replicates"]):
        panel = ar1sim.simulate_panel(parsed["mixing"], parsed["innovation"], parsed["N"], parsed["n"], Stream(seed, (r,)), workers)
        files += ar1sim.save_panel(panel, out / f"panel_{r:04d}")
        lines.append(f"  replicate {r}: clipped coefficients {panel.clipped}")
    return files, ["simulate", *lines]


def run_aggregate(cfg, parsed, out: Path, seed: int, workers: int):
    R = parsed["replicates"]
    series = []
    clipped = 0
    for r in range(R):
        panel = ar1sim.simulate_panel(parsed["mixing"], parsed["innovation"], parsed["N"], parsed["n"], Stream(seed, (r,)), workers)
        clipped += panel.clipped
        series.append(ar1sim.aggregate(panel, parsed["scheme"]))
    files = [ar1sim.write_aggregate_csv(series[0], out / "aggregate.csv")]
    sig2 = _sigma2(parsed["innovation"])
    lags = range(min(parsed["max_lag"], parsed["n"] - 1) + 1)
    rows = []
    finite = parsed["scheme"] == "finite-variance" and math.isfinite(sig2)
    for k in lags:
        emp = float(np.mean([estimators.sample_cov(s.values, k, demean=False) for s in series]))
        theo = secondorder.theoretical_cov(parsed["mixing"], sig2, k) if finite and mix.factors(parsed["mixing"])[1] > 0 else math.nan
        rows.append((k, emp, theo))
    files.append(write_csv(out / "covariances.csv", ["lag", "sample", "theoretical"], rows))
    lines = ["aggregate", f"  scheme: {parsed['scheme']}", f"  exponent: {fmt(series[0].exponent)}", f"  clipped: {clipped}"]
    if R >= 2:
        n = parsed["n"]
        ns = sorted({int(2**j) for j in range(2, int(math.log2(n)) + 1)})
        if len(ns) >= 4:
            pts = estimators.empirical_var_points(np.stack([s.values for s in series]), ns)
            files.append(write_csv(out / "var_points.csv", ["log_n", "log_var"], [(math.log(a), math.log(b)) for a, b in pts]))
            lines.append(f"  partial-sum slope: {fmt(estimators.partial_sum_slope(pts))}")
    return files, lines


def run_diagnose(cfg, parsed, out: Path, seed: int, workers: int):
    params = cfg.get("params", {})
    rep = regimes.diagnose(**_diag_args(params))
    files = [write_json(out / "regime.json", rep.to_dict())]
    lines = _summary_lines("diagnose", {"memory": rep.memory, "region": rep.region, "growth_case": rep.growth_case, "H": rep.H, "limit": rep.limit})
    m = parsed.get("mixing")
    if m is not None:
        sig2 = float(params.get("sigma2", 1.0))
        c_phi, beta = mix.tail_params(m)
        if 0 < beta < 1:
            c, c_f = secondorder.asymptotic_constants(m, sig2)
            files.append(write_json(out / "constants.json", {"c_phi": c_phi, "beta": beta, "c": c, "c_f": c_f}))
            ns = [2**j for j in range(8, 17)]
            pts = secondorder.theoretical_var_points(m, sig2, ns)
            files.append(write_csv(out / "var_points.csv", ["log_n", "log_var"], [(math.log(a), math.log(b)) for a, b in pts]))
            lines.append(f"  theoretical partial-sum slope: {fmt(estimators.partial_sum_slope(pts))}")
    return files, lines


def run_disaggregate(cfg, parsed, out: Path, seed: int, workers: int):
    params = cfg.get("params", {})
    method = parsed["method"]
    m = parsed["mixing"]
    files = []
    if method in ("robinson", "beran"):
        panel = ar1sim.simulate_panel(m, parsed["innovation"], parsed["N"], parsed["n"], Stream(seed, (0,)), workers)
        if method == "robinson":
            k_max = int(params.get("k_max", 5))
            mu = disaggregation.robinson_moments(panel, k_max)
            rows = [(k, float(mu[k]), mix.moment(m, k)) for k in range(k_max + 1)]
            files.append(write_csv(out / "moments.csv", ["k", "estimate", "theoretical"], rows))
            lines = ["disaggregate robinson", *(f"  mu_{k}: {fmt(e)} (theory {fmt(t)})" for k, e, t in rows)]
        else:
            res = disaggregation.beran_mle(panel, params.get("h"))
            files.append(write_json(out / "beran.json", res.__dict__))
            lines = _summary_lines("disaggregate beran", res.__dict__)
    else:
        sig2 = float(params.get("sigma2", 1.0))
        x = disaggregation.simulate_gaussian_aggregate(m, sig2, parsed["n"], 1, Stream(seed, (0,)))[0]
        est = disaggregation.gegenbauer_estimate(
            x, float(params.get("alpha_weight", 0.0)), params.get("gamma_rate"), params.get("K")
        )
        err = disaggregation.weighted_l2_error(est, disaggregation.mixing_reference(m))
        files.append(disaggregation.write_estimate_csv(est, out / "estimate.csv"))
        basis = disaggregation.build_gegenbauer_basis(est.alpha_weight, est.K)
        files.append(disaggregation.write_basis_json(basis, out / "basis.json"))
        info = {"K": est.K, "alpha_weight": est.alpha_weight, "sigma2_used": est.sigma2_used, "weighted_l2_error": err}
        files.append(write_json(out / "estimate.json", info))
        lines = _summary_lines("disaggregate gegenbauer", info)
    return files, lines


def run_field(cfg, parsed, out: Path, seed: int, workers: int):
    params = cfg.get("params", {})
    model = parsed["model"]
    tol = float(params.get("tol", 1e-8))
    fp = fields.simulate_field_panel(model, parsed["L"], parsed["N"], Stream(seed, (0,)), workers, tol=tol)
    files = fields.save_field(fp.aggregate, out / "field_aggregate", {"variant": model.variant, "clipped": fp.clipped, "exponent": fp.exponent})
    if "green_a" in params:
        table = fields.green(model.variant, float(params["green_a"]), tol=float(params.get("green_tol", 1e-10)))
        files.append(fields.write_green_csv(table, out / "green.csv"))
    sig2 = _sigma2(model.innovation)
    if math.isfinite(sig2):
        rs = np.geomspace(1e-3, 1.0, 16)
        rows = [(r, fields.field_spectral_density(model.variant, model.mixing, sig2, r / math.sqrt(2), r / math.sqrt(2))) for r in rs]
        files.append(write_csv(out / "spectral_diagonal.csv", ["radius", "f"], rows))
    lines = _summary_lines("field", {"variant": model.variant, "L": parsed["L"], "N": parsed["N"], "clipped": fp.clipped, "max_radius": int(fp.radii.max())})
    return files, lines


RUNNERS = {
    "simulate": run_simulate,
    "aggregate": run_aggregate,
    "diagnose": run_diagnose,
    "disaggregate": run_disaggregate,
    "field": run_field,
}


# --- manifest and report --------------------------------------------------


def _versions() -> dict:
    return {"aggrolab": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def regenerate_summary(out: Path) -> Path:
    """Rebuild summary.txt from a finished run's manifest; nothing is recomputed."""
    mpath = out / MANIFEST
    if not mpath.exists():
        raise SpecError(f"{out} has no manifest; not a finished run")
    man = json.loads(mpath.read_text())
    lines = [f"kind: {man['kind']}", f"seed: {man['seed']}", f"status: {man['status']}"]
    lines += man.get("summary", [])
    lines.append("outputs:")
    for f in man.get("outputs", []):
        lines.append(f"  {f['file']}  sha256={f['sha256']}")
    if man.get("error"):
        lines.append(f"error: {man['error']}")
    path = out / SUMMARY
    path.write_text("\n".join(lines) + "\n")
    return path


def _acquire(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ResourceCapError(f"output directory {out} is locked by another run") from None
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    return lock


def run(kind: str, config: dict, seed: int | None = None, workers: int | None = None, out: str | Path | None = None) -> int:
    """Execute one experiment; returns the exit status."""
    out_dir = Path(out or config.get("out") or "aggrolab_out")
    if kind == "report":
        try:
            regenerate_summary(out_dir)
        except SpecError as e:
            print(f"aggrolab: {e}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    try:
        parsed = validate(config, kind)
        seed = int(config.get("seed", 0) if seed is None else seed)
        if seed < 0:
            raise SpecError("seed must be >= 0")
        w = resolve_workers(workers if workers is not None else config.get("workers"))
    except (SpecError, ValueError, TypeError) as e:
        print(f"aggrolab: invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        lock = _acquire(out_dir)
    except ResourceCapError as e:
        print(f"aggrolab: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    echo = {k: v for k, v in config.items() if k not in ("workers", "out")}
    echo["kind"] = kind
    echo["seed"] = seed
    manifest = {"kind": kind, "seed": seed, "workers": w, "config": echo, "versions": _versions(), "status": "ok", "error": None}
    t0 = time.perf_counter()
    status = EXIT_OK
    files: list[Path] = []
    summary: list[str] = []
    try:
        files, summary = RUNNERS[kind](config, parsed, out_dir, seed, w)
    except SpecError as e:
        status, manifest["status"], manifest["error"] = EXIT_CONFIG, "invalid-config", f"{type(e).__name__}: {e}"
    except ResourceCapError as e:
        status, manifest["status"], manifest["error"] = EXIT_RESOURCE, "resource-cap", f"{type(e).__name__}: {e}"
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as e:
        status, manifest["status"], manifest["error"] = EXIT_NUMERIC, "numerical-failure", f"{type(e).__name__}: {e}"
    finally:
        manifest["timing"] = {"started": time.strftime("%Y-%m-%dT%H:%M:%S"), "elapsed_s": time.perf_counter() - t0}
        manifest["summary"] = summary
        manifest["outputs"] = [{"file": p.name, "sha256": sha256_file(p)} for p in files]
        (out_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        regenerate_summary(out_dir)
        lock.unlink(missing_ok=True)
    if status:
        print(f"aggrolab: {manifest['error']}", file=sys.stderr)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aggrolab", description="Aggregation experiments for random-coefficient AR(1) panels and lattice fields.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", help="JSON experiment config (not needed for report)")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default: config, then ${WORKERS_ENV}, then 1)")
    p.add_argument("--out", default=None, help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.kind == "report":
        cfg = load_config(args.config) if args.config else {}
        return run("report", cfg, out=args.out)
    if not args.config:
        print("aggrolab: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except SpecError as e:
        print(f"aggrolab: invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.kind, cfg, args.seed, args.workers, args.out)


if __name__ == "__main__":
    sys.exit(main())
