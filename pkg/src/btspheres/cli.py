"""Command line experiment runner.

    btspheres <subcommand> <config> [--out DIR] [--reference]

The config is a flat ``key = value`` text file (lists comma separated,
``#`` comments) or the equivalent JSON object. Every subcommand writes
``<subcommand>.csv`` (each row carries the config hash) and
``<subcommand>.manifest.json``. Exit codes: 0 when every asserted property
holds, 1 when one fails, 2 for an invalid config.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from contextlib import nullcontext
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

MANIFEST_SCHEMA = 1
BUDGET = 20_000
MC_BUDGET = 10_000_000
REQUIRED = object()


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config parsing


def _scalar(text: str) -> Any:
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_kv(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = [_scalar(v) for v in val.split(",")] if "," in val else _scalar(val)
    return out


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON config: {e}") from e
        if not isinstance(obj, dict):
            raise ConfigError("a JSON config must be an object")
        return obj
    return parse_kv(text)


def _coerce(kind: str, key: str, v: Any) -> Any:
    def one(x, conv):
        if isinstance(x, bool) or not isinstance(x, (int, float, str)):
            raise ConfigError(f"{key}: cannot read {x!r} as {kind}")
        try:
            y = conv(x)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot read {x!r} as {kind}") from None
        if conv is int and float(x) != y:
            raise ConfigError(f"{key}: {x!r} is not an integer")
        return y

    if kind == "int":
        return one(v, int)
    if kind == "float":
        return one(v, float)
    if kind == "str":
        return str(v)
    if kind == "bool":
        if isinstance(v, bool):
            return v
        raise ConfigError(f"{key}: expected true/false, got {v!r}")
    if kind in ("ints", "floats"):
        items = v if isinstance(v, list) else [v]
        return [one(x, int if kind == "ints" else float) for x in items]
    raise AssertionError(kind)


SYMBOL = ("str", "x3")
SPIN = {"topology": ("str", "ring"), "L": ("int", 3), "model": ("str", "heisenberg"), "coupling": ("float", 1.0)}

SCHEMAS: dict[str, dict[str, tuple[str, Any]]] = {
    "kernel-decay": {
        "N": ("ints", REQUIRED),
        "d": ("ints", [1]),
        "radius": ("float", 0.5),
        "D": ("floats", [1.0, 2.0]),
        "kind": ("str", "complement"),
    },
    "conjecture-scan": {
        "N": ("ints", REQUIRED),
        "d": ("ints", [1]),
        "radius": ("float", 0.5),
        "D": ("floats", [0.5, 1.0, 2.0]),
        "kind": ("str", "complement"),
    },
    "spectrum": {"N": ("int", REQUIRED), "d": ("int", 1), "symbol": SYMBOL},
    "concentration": {
        "N": ("ints", REQUIRED),
        "symbol": SYMBOL,
        "epsilon": ("float", 0.3),
        "which": ("str", "mid"),
        "p": ("float", 0.5),
        "margin": ("float", 0.0),
        "r2_min": ("float", 0.9),
    },
    "ground-state": {"N": ("ints", REQUIRED), "symbol": ("str", "1-x3"), "delta": ("float", 0.5), "factor": ("float", 2.0)},
    "agmon": {
        "N": ("ints", REQUIRED),
        "symbol": ("str", "1-x3"),
        "alpha_w": ("float", 0.1),
        "K": ("float", 1.0),
        "stage_eps": ("float", 0.1),
        "factor": ("float", 3.0),
        "tol": ("float", 1e-6),
    },
    "commutator": {
        "N": ("ints", REQUIRED),
        "symbol": SYMBOL,
        "alpha_w": ("floats", [0.0, 0.1, -0.1]),
        "cap": ("float", math.pi / 2),
        "factor": ("float", 3.0),
    },
    "spin-weighted": {
        **SPIN,
        "N": ("int", 8),
        "count": ("int", 3),
        "samples": ("int", 20_000),
        "seed": ("int", 0),
        "C": ("float", 0.0),
        "c": ("float", 0.0),
        "factor": ("float", 5.0),
        "max_rel_error": ("float", 0.1),
    },
    "free-energy": {
        **SPIN,
        "N": ("ints", REQUIRED),
        "b": ("floats", [0.5]),
        "b_max": ("float", 1.0),
        "integrator": ("str", "transfer"),
        "samples": ("int", 1_000_000),
        "seed": ("int", 0),
        "factor": ("float", 3.0),
        "C_ord": ("int", 1),
    },
}


def validate(sub: str, raw: dict[str, Any]) -> dict[str, Any]:
    if sub not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {sub!r}")
    schema = SCHEMAS[sub]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {sub}: {', '.join(unknown)}")
    cfg = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            cfg[key] = _coerce(kind, key, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r} for {sub}")
        else:
            cfg[key] = default
    _check_budgets(sub, cfg)
    return cfg


def _check_budgets(sub: str, cfg: dict[str, Any]) -> None:
    Ns = cfg["N"] if isinstance(cfg.get("N"), list) else [cfg.get("N", 0)]
    if any(n < 1 for n in Ns):
        raise ConfigError("every N must be >= 1")
    if "d" in cfg:
        ds = cfg["d"] if isinstance(cfg["d"], list) else [cfg["d"]]
    elif "L" in cfg:
        ds = [cfg["L"] ** 2 if cfg["topology"] == "grid" else cfg["L"]]
    else:
        ds = [1]
    for n in Ns:
        for d in ds:
            if (n + 1) ** d > BUDGET:
                raise ConfigError(f"(N+1)^d = {(n + 1) ** d} for N={n}, d={d} exceeds the dense budget {BUDGET}")
    if cfg.get("samples", 0) > MC_BUDGET:
        raise ConfigError(f"samples = {cfg['samples']} exceeds the Monte Carlo budget {MC_BUDGET}")
    if "alpha_w" in cfg:
        alphas = cfg["alpha_w"] if isinstance(cfg["alpha_w"], list) else [cfg["alpha_w"]]
        if any(abs(a) > 0.25 for a in alphas):
            raise ConfigError("|alpha_w| must not exceed 0.25")
    if sub == "free-energy" and cfg["integrator"] not in ("transfer", "mc"):
        raise ConfigError("integrator must be 'transfer' or 'mc'")


def config_hash(sub: str, cfg: dict[str, Any]) -> str:
    blob = json.dumps({"subcommand": sub, "config": cfg}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- runners


class Result:
    """Rows for the CSV plus the list of asserted properties."""

    def __init__(self, header: list[str]):
        self.header = header
        self.rows: list[list[Any]] = []
        self.checks: list[dict[str, Any]] = []

    def row(self, *vals) -> None:
        self.rows.append(list(vals))

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks.append({"name": name, "passed": bool(ok), "detail": detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def run_kernel_decay(cfg: dict, scan: bool = False) -> Result:
    from .szego import SCAN_HEADER, conjecture_scan, scan_summary

    schedule = [(cfg["radius"], D, cfg["kind"]) for D in cfg["D"]]
    rows = conjecture_scan(cfg["N"], cfg["d"], schedule)
    res = Result(list(SCAN_HEADER))
    for r in rows:
        res.row(r.N, r.d, r.D, r.exact_norm, r.schur_bound, r.op_dec_bound, r.fitted_c)
    res.check("exact norms are contractions", all(r.exact_norm <= 1 + 1e-12 for r in rows))
    if scan:
        gated = [r for r in rows if r.op_dec_bound is not None]
        res.check("op_dec bound holds on gated rows", all(r.op_dec_holds for r in gated), f"{len(gated)} gated rows")
        res.check("fitted rates positive", all(r.fitted_c > 0 for r in rows), f"min c = {scan_summary(rows):.4g}")
    else:
        bad = [r for r in rows if r.schur_bound <= 1 and r.exact_norm > r.schur_bound]
        res.check("exact norm <= Schur bound where informative", not bad, f"{len(bad)} failing rows")
        emp = [r for r in rows if r.D >= 10 * math.sqrt(r.d / (r.N + 1)) and r.exact_norm > math.exp(-(r.N + 1) * r.D**2 / 21)]
        res.check("exact norm <= exp(-(N+1)D^2/21) past the distance gate", not emp, f"{len(emp)} failing rows")
    return res


def run_spectrum(cfg: dict) -> Result:
    from .geometry import gauss_grid
    from .quantization import HoloBasis, toeplitz_matrix
    from .spectral import eigh
    from .symbols import parse_symbol

    f = parse_symbol(cfg["symbol"], cfg["d"])
    basis = HoloBasis(cfg["N"], cfg["d"])
    T = toeplitz_matrix(basis, f).matrix
    spec = eigh(T)
    res = Result(["index", "eigenvalue", "residual"])
    for i, (lam, r) in enumerate(zip(spec.eigenvalues, spec.residuals)):
        res.row(i, lam, r)
    norm = max(float(np.max(np.abs(spec.eigenvalues))), 1e-300)
    res.check("residuals <= 1e-8 ||T||", spec.max_residual <= 1e-8 * max(norm, 1.0), f"max residual {spec.max_residual:.3e}")
    vals = f(gauss_grid(cfg["d"], min(cfg["N"] + 3, 40 if cfg["d"] == 1 else 12)).points)
    lo, hi = float(vals.min()), float(vals.max())
    res.check(
        "spectrum within the range of the symbol",
        spec.eigenvalues[0] >= lo - 1e-9 and spec.eigenvalues[-1] <= hi + 1e-9,
        f"[{spec.eigenvalues[0]:.6g}, {spec.eigenvalues[-1]:.6g}] vs [{lo:.6g}, {hi:.6g}]",
    )
    return res


def run_concentration(cfg: dict) -> Result:
    from .concentration import concentration_sweep
    from .symbols import parse_symbol

    f = parse_symbol(cfg["symbol"], 1)
    reps, fit = concentration_sweep(cfg["N"], f, cfg["epsilon"], cfg["which"], cfg["p"], cfg["margin"])
    res = Result(["N", "epsilon", "mass", "mass_mirror", "C_star", "fit_c", "fit_R2"])
    for r in reps:
        res.row(r.N, r.epsilon, r.mass, r.mass_mirror, None, fit.c if fit else None, fit.r2 if fit else None)
    m = [r.mass for r in reps]
    res.check("masses strictly decreasing in N", all(b < a for a, b in zip(m, m[1:])))
    if fit is not None:
        res.check("fitted rate positive", fit.c > 0, f"c = {fit.c:.4g}")
        res.check("fit quality", fit.r2 >= cfg["r2_min"], f"R2 = {fit.r2:.4g}")
    else:
        res.check("enough points for a fit", False, "need at least 4 N values")
    return res


def run_ground_state(cfg: dict) -> Result:
    from .concentration import ground_state_report
    from .symbols import parse_symbol

    rep = ground_state_report(cfg["N"], parse_symbol(cfg["symbol"], 1), cfg["delta"])
    res = Result(["N", "lambda0", "lambda0_N", "threshold", "mass", "fit_c", "fit_R2"])
    for r in rep.rows:
        res.row(r.N, r.lambda0, r.lambda0_N, r.threshold, r.mass, rep.fit.c if rep.fit else None, rep.fit.r2 if rep.fit else None)
    first = rep.rows[0].lambda0_N
    res.check("lambda0 N bounded", all(r.lambda0_N <= cfg["factor"] * max(first, 1e-300) for r in rep.rows) or first == 0)
    res.check("masses decreasing", rep.masses_decreasing or all(r.mass == 0 for r in rep.rows))
    if rep.fit is not None:
        res.check("fitted rate positive", rep.fit.c > 0, f"c = {rep.fit.c:.4g}")
    return res


def run_agmon(cfg: dict) -> Result:
    from .concentration import agmon_check, diagonalize, level_region, minimal_stage_constant
    from .geometry import region_distance
    from .quantization import HoloBasis
    from .symbols import parse_symbol

    f = parse_symbol(cfg["symbol"], 1)
    res = Result(["N", "alpha_w", "eigenvalue", "C_star", "raw_integral_alpha0", "C_0", "C_1", "C_2"])
    cs = []
    raws = []
    for N in cfg["N"]:
        basis = HoloBasis(N)
        pair = diagonalize(basis, f).pair(0)
        region = level_region(f, pair.eigenvalue, "<=")
        rho = lambda x, region=region: region_distance(region, x).distance
        rep = agmon_check(basis, f, pair, rho, cfg["alpha_w"], cfg["K"])
        raw = agmon_check(basis, f, pair, rho, 0.0, cfg["K"]).integral
        stages = [minimal_stage_constant(basis, f, pair, k, cfg["stage_eps"], cfg["alpha_w"]) for k in (0, 1, 2)]
        res.row(N, cfg["alpha_w"], pair.eigenvalue, rep.C_star, raw, *stages)
        cs.append(rep.C_star)
        raws.append(raw)
    res.check("C_star bounded along the sweep", all(c <= cfg["factor"] * cs[0] + 1e-12 for c in cs), f"C_star = {cs}")
    res.check("unweighted integral vanishes", all(abs(r) <= cfg["tol"] for r in raws), f"max |raw| = {max(map(abs, raws)):.3e}")
    return res


def capped_pole_distance(cap: float) -> Callable[[np.ndarray], np.ndarray]:
    from .geometry import NORTH, angle

    def rho(x):
        return np.minimum(angle(x, NORTH[None]).reshape(x.shape[:-2] + (1,))[..., 0], cap)

    return rho


def run_commutator(cfg: dict) -> Result:
    from .concentration import weighted_commutator_norm
    from .quantization import HoloBasis
    from .symbols import parse_symbol

    f = parse_symbol(cfg["symbol"], 1)
    rho = capped_pole_distance(cfg["cap"])
    res = Result(["N", "alpha_w", "norm", "norm_sqrtN"])
    by_alpha: dict[float, list[float]] = {a: [] for a in cfg["alpha_w"]}
    for N in cfg["N"]:
        basis = HoloBasis(N)
        for a in cfg["alpha_w"]:
            v = weighted_commutator_norm(basis, f, rho, a, breaks=(cfg["cap"],))
            res.row(N, a, v, v * math.sqrt(N))
            by_alpha[a].append(v * math.sqrt(N))
    for a, vals in by_alpha.items():
        res.check(f"norm sqrt(N) bounded (alpha_w={a:g})", all(v <= cfg["factor"] * vals[0] + 1e-12 for v in vals))
    return res


def _spin(cfg: dict):
    from .spin_systems import build_system, zero_system

    if cfg["model"] == "zero":
        return zero_system(cfg["topology"], cfg["L"])
    return build_system(cfg["topology"], cfg["L"], cfg["model"], cfg["coupling"])


def run_spin_weighted(cfg: dict) -> Result:
    from .quantization import HoloBasis, toeplitz_matrix
    from .spectral import eigh
    from .spin_systems import calibrate_weighted_estimate, mid_spectrum_indices, weighted_estimate_check

    g = _spin(cfg)
    N = cfg["N"]
    spec = eigh(toeplitz_matrix(HoloBasis(N, g.d), g.to_symbol()).matrix)
    idx = mid_spectrum_indices(spec.eigenvalues, cfg["count"])
    C, c = cfg["C"], cfg["c"]
    if C <= 0 or c <= 0:
        cal = calibrate_weighted_estimate(g, N, spec.pair(idx[len(idx) // 2]), samples=cfg["samples"], seed=cfg["seed"])
        C, c = cal.C, cal.c
    res = Result(["index", "eigenvalue", "value", "stderr", "mass_W", "C", "c"])
    vals = []
    rel_ok = True
    for k, i in enumerate(idx):
        r = weighted_estimate_check(g, N, spec.pair(i), C, c, cfg["samples"], cfg["seed"] + 1 + k)
        res.row(i, spec.eigenvalues[i], r.value, r.stderr, r.mass_W, C, c)
        vals.append(r.value)
        rel_ok &= r.value > 0 and r.stderr < cfg["max_rel_error"] * r.value
    spread = max(vals) / min(vals) if min(vals) > 0 else float("inf")
    res.check("values agree across eigenpairs", spread <= cfg["factor"], f"max/min = {spread:.3g}")
    res.check("standard errors small", rel_ok)
    return res


def run_free_energy(cfg: dict) -> Result:
    from .free_energy import CSV_HEADER, free_energy_row, transfer_self_convergence

    g = _spin(cfg)
    res = Result(list(CSV_HEADER))
    kw = {"samples": cfg["samples"], "seed": cfg["seed"]} if cfg["integrator"] == "mc" else {}
    for b in cfg["b"]:
        rows = [free_energy_row(g, N, b, cfg["integrator"], cfg["C_ord"], cfg["b_max"], **kw) for N in cfg["N"]]
        for r in rows:
            res.row(*[getattr(r, k) for k in CSV_HEADER])
        base = rows[0].gap_sqrtN
        res.check(f"gap sqrt(N) bounded (b={b:g})", all(r.gap_sqrtN <= cfg["factor"] * base + 1e-12 for r in rows))
        res.check(f"Lieb bound holds in regime (b={b:g})", all(r.lieb_holds for r in rows if r.in_regime))
        if cfg["integrator"] == "transfer":
            conv = max(transfer_self_convergence(g, r.N, r.beta) for r in rows)
            res.check(f"transfer integrator self-converged (b={b:g})", conv < 1e-8, f"max change {conv:.2e}")
    return res


RUNNERS: dict[str, Callable[[dict], Result]] = {
    "kernel-decay": run_kernel_decay,
    "conjecture-scan": lambda cfg: run_kernel_decay(cfg, scan=True),
    "spectrum": run_spectrum,
    "concentration": run_concentration,
    "ground-state": run_ground_state,
    "agmon": run_agmon,
    "commutator": run_commutator,
    "spin-weighted": run_spin_weighted,
    "free-energy": run_free_energy,
}


# ---------------------------------------------------------------- entry point


def _versions() -> dict[str, str]:
    from . import __version__

    return {"btspheres": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def write_outputs(sub: str, cfg: dict, res: Result, out: Path, runtime: float, reference: bool) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(sub, cfg)
    csv_path = out / f"{sub}.csv"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(res.header + ["config_hash"])
        for r in res.rows:
            w.writerow([_fmt(v) for v in r] + [h])
    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "subcommand": sub,
        "config": cfg,
        "config_hash": h,
        "reference_mode": reference,
        "versions": _versions(),
        "seeds": {k: v for k, v in cfg.items() if "seed" in k},
        "runtime_seconds": round(runtime, 3),
        "csv": csv_path.name,
        "checks": res.checks,
        "passed": res.passed,
    }
    man_path = out / f"{sub}.manifest.json"
    man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, man_path


def run(sub: str, raw: dict[str, Any], out: Path, reference: bool = False) -> int:
    try:
        cfg = validate(sub, raw)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if reference:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=1)
    else:
        limiter = nullcontext()
    with limiter:
        t0 = time.perf_counter()
        try:
            res = RUNNERS[sub](cfg)
        except ValueError as e:
            # invalid symbol specs, models, regions and the like
            print(f"config error: {e}", file=sys.stderr)
            return 2
        runtime = time.perf_counter() - t0
    write_outputs(sub, cfg, res, out, runtime, reference)
    for c in res.checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}" + (f"  ({c['detail']})" if c["detail"] else ""))
    if not res.passed:
        print("failing rows:", file=sys.stderr)
        for r in res.rows:
            print("  " + ",".join(_fmt(v) for v in r), file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="btspheres", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=sorted(SCHEMAS))
    ap.add_argument("config", help="key=value text file or JSON object")
    ap.add_argument("--out", default="results", help="output directory (default: results)")
    ap.add_argument("--reference", action="store_true", help="single-threaded, bitwise reproducible run")
    args = ap.parse_args(argv)
    try:
        raw = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return run(args.subcommand, raw, Path(args.out), args.reference)


if __name__ == "__main__":
    sys.exit(main())
