"""Experiment runner for INI experiment specs.

    python -m cellfree.cli SPEC [--seed N] [--trials N] [--out DIR] [--threads N]

``SPEC`` is a path or the name of a bundled spec (``--list`` shows them).
Exit status: 0 success, 2 invalid spec, 3 unconverged numerics.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import platform
import re
import sys
import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .coverage import TraditionalAnalytic, TraditionalConfig, UserCentricAnalytic, UserCentricConfig, load_model
from .load import (load_pmf, required_fronthaul, scnr_coverage, tagged_load_moments, total_variation,
                   typical_load_moments)
from .numerics import Unconverged
from .propagation import FronthaulParams, RadioParams, db_to_linear
from .sim import SimConfig, simulate_traditional, simulate_user_centric

EXIT_OK, EXIT_SPEC, EXIT_UNCONVERGED = 0, 2, 3

SWEEPS = {
    "t_r_bps_hz": ("coverage",),
    "k": ("sum_rate", "load_pmf"),
    "c_f_bps_hz": ("coverage_at",),
    "t_s_db": ("coverage_at",),
    "n_s": ("scnr_coverage", "required_fronthaul", "coverage_at"),
    "n_a": ("mean_rate",),
}
SWEEP_PARAM = {"n_a": "n_antennas"}
ARCHITECTURES = ("traditional", "user_centric")
MODES = ("analytic", "simulate", "both")


class SpecError(ValueError):
    def __init__(self, where: str, key: str, msg: str):
        super().__init__(f"{where}: {key}: {msg}")


@dataclass
class ExperimentSpec:
    name: str
    mode: str
    architecture: str
    quantity: str
    sweep: str
    grid: list
    series_key: str | None
    series: list
    params: dict
    seed: int
    trials: int
    source: str = ""
    text: str = field(default="", repr=False)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_GRID_FN = re.compile(r"^(linspace|range)\(\s*([^)]*)\)$")


def _line_of(text, section, key):
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1].strip()
        elif cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return 0


def _parse_numbers(raw):
    raw = raw.strip()
    m = _GRID_FN.match(raw)
    if m:
        args = [float(a) for a in m.group(2).split(",")]
        if m.group(1) == "linspace":
            if len(args) != 3 or args[2] < 1:
                raise ValueError("linspace needs (start, stop, count)")
            return [float(v) for v in np.linspace(args[0], args[1], int(args[2]))]
        return [float(v) for v in range(*(int(a) for a in args))]
    return [float(v) for v in raw.split(",") if v.strip()]


def parse_spec(text: str, source: str = "<spec>") -> ExperimentSpec:
    """Parse and validate a spec; raises :class:`SpecError` with a ``file:line`` anchor."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", 0)
        raise SpecError(f"{source}:{line}", "syntax", str(exc).splitlines()[0]) from None

    def where(section, key):
        return f"{source}:{_line_of(text, section, key)}"

    def get(section, key, conv=str, default=None, required=False):
        if not cp.has_option(section, key):
            if required:
                raise SpecError(f"{source}:0", f"[{section}] {key}", "missing required key")
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise SpecError(where(section, key), key, f"cannot parse {raw!r}: {exc}") from None

    if not cp.has_section("experiment"):
        raise SpecError(f"{source}:0", "[experiment]", "missing section")
    name = get("experiment", "name", required=True)
    mode = get("experiment", "mode", default="both")
    if mode not in MODES:
        raise SpecError(where("experiment", "mode"), "mode", f"must be one of {MODES}")
    arch = get("experiment", "architecture", required=True)
    if arch not in ARCHITECTURES:
        raise SpecError(where("experiment", "architecture"), "architecture", f"must be one of {ARCHITECTURES}")
    sweep = get("experiment", "sweep", required=True)
    if sweep not in SWEEPS:
        raise SpecError(where("experiment", "sweep"), "sweep", f"must be one of {sorted(SWEEPS)}")
    quantity = get("experiment", "quantity", default=SWEEPS[sweep][0])
    if quantity not in SWEEPS[sweep]:
        raise SpecError(where("experiment", "quantity"), "quantity",
                        f"{quantity!r} cannot be swept over {sweep}; allowed: {SWEEPS[sweep]}")
    grid = get("experiment", "grid", _parse_numbers, required=True)
    if not grid:
        raise SpecError(where("experiment", "grid"), "grid", "empty sweep grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise SpecError(where("experiment", "grid"), "grid", "grid must be strictly ascending")

    series_key, series = None, [None]
    if cp.has_option("experiment", "series"):
        raw = cp.get("experiment", "series")
        if ":" not in raw:
            raise SpecError(where("experiment", "series"), "series", "expected 'name: v1, v2, ...'")
        series_key, vals = (s.strip() for s in raw.split(":", 1))
        if series_key == sweep:
            raise SpecError(where("experiment", "series"), "series", "series variable equals the sweep variable")
        series = [v.strip() for v in vals.split(",") if v.strip()]
        if not series:
            raise SpecError(where("experiment", "series"), "series", "empty series list")
        if series_key != "ap":
            try:
                series = [float(v) for v in series]
            except ValueError:
                raise SpecError(where("experiment", "series"), "series", "values must be numeric") from None

    params = {}
    for section in ("deployment", "radio", "fronthaul", "numerics"):
        if cp.has_section(section):
            for key, raw in cp.items(section):
                if key == "c_f_rule":
                    if raw not in ("per_user", "required"):
                        raise SpecError(where(section, key), key, "must be 'per_user' or 'required'")
                    params[key] = raw
                    continue
                try:
                    params[key] = float(raw)
                except ValueError:
                    raise SpecError(where(section, key), key, f"expected a number, got {raw!r}") from None
                if key in ("m", "k", "n_s", "n_antennas", "tau_p", "total_antennas") and params[key] < 1:
                    raise SpecError(where(section, key), key, "must be >= 1")

    needed = {"traditional": ("r_s_m",), "user_centric": ("lambda_r_per_m2", "lambda_u_per_m2")}[arch]
    for key in needed:
        if key not in params:
            raise SpecError(f"{source}:0", f"[deployment] {key}", "missing required key")
    if "c_f_bps_hz" not in params and "c_f_rule" not in params and quantity not in (
            "scnr_coverage", "required_fronthaul", "load_pmf") and "c_f_bps_hz" not in (sweep, series_key):
        raise SpecError(f"{source}:0", "[fronthaul] c_f_bps_hz", "give c_f_bps_hz or c_f_rule")

    return ExperimentSpec(
        name=name, mode=mode, architecture=arch, quantity=quantity, sweep=sweep, grid=grid,
        series_key=series_key, series=series, params=params,
        seed=get("experiment", "seed", int, 0), trials=get("experiment", "trials", int, 10_000),
        source=source, text=text,
    )


# ---------------------------------------------------------------------------
# model builders
# ---------------------------------------------------------------------------

def _radio(p):
    return RadioParams.from_db(
        n_antennas=int(p.get("n_antennas", 4)), rho_d_db=p.get("rho_d_db", 100.0),
        rho_p_db=p.get("rho_p_db", 100.0), tau_p=int(p.get("tau_p", 80)),
        alpha=p.get("alpha", 3.7), d_ref=p.get("d_ref_m", 1.0))


def _with_antennas(p):
    p = dict(p)
    if "total_antennas" in p:
        total, n_a = int(p["total_antennas"]), int(p.get("n_antennas", 4))
        if total % n_a:
            raise ValueError(f"n_antennas={n_a} does not divide total_antennas={total}")
        p["m"] = total // n_a
    return p


def _typical_pmf(p):
    return load_pmf(typical_load_moments(p["lambda_r_per_m2"], p["lambda_u_per_m2"], int(p["n_s"])))


def _c_f(p):
    t_s = db_to_linear(p.get("t_s_db", 15.0))
    rule = p.get("c_f_rule")
    if rule == "per_user":
        return p["k"] * math.log2(1 + t_s)
    if rule == "required":
        return required_fronthaul(t_s, _typical_pmf(p), p.get("scnr_target", 0.95))
    return p["c_f_bps_hz"]


def _traditional(p):
    p = _with_antennas(p)
    return TraditionalConfig(int(p.get("m", 32)), int(p.get("k", 20)), p["r_s_m"], _radio(p), _c_f(p))


def _user_centric(p):
    fh = FronthaulParams(c_f=_c_f(p), t_s=db_to_linear(p.get("t_s_db", 15.0)))
    return UserCentricConfig(p["lambda_r_per_m2"], p["lambda_u_per_m2"], int(p.get("n_s", 5)), _radio(p), fh)


def _sim_cfg(spec, dep, threads):
    p = spec.params
    return SimConfig(dep, trials=spec.trials, seed=spec.seed, window=p.get("window_m", 2000.0),
                     guard=p.get("guard_m", 500.0), workers=threads)


# ---------------------------------------------------------------------------
# evaluation: each returns rows (sweep value, analytic, analytic err, simulated, simulated err)
# ---------------------------------------------------------------------------

def _eval_series(spec: ExperimentSpec, p: dict, threads: int, notes: dict):
    do_a = spec.mode in ("analytic", "both")
    do_s = spec.mode in ("simulate", "both")
    grid = np.asarray(spec.grid)
    nan = np.full(grid.size, np.nan)
    a, ae, s, se = nan.copy(), nan.copy(), nan.copy(), nan.copy()
    q = spec.quantity
    budget = int(p.get("qmc_budget", 2**18))

    if q == "coverage" and spec.architecture == "traditional":
        cfg = _traditional(p)
        if do_a:
            a, ae = TraditionalAnalytic(cfg).coverage(grid), np.zeros(grid.size)
        if do_s:
            c = simulate_traditional(_sim_cfg(spec, cfg, threads)).coverage(grid)
            s, se = c.probabilities, c.stderr
    elif q == "coverage":
        cfg = _user_centric(p)
        if do_a:
            ev = UserCentricAnalytic(cfg, load_model(cfg, budget=budget, seed=spec.seed), budget=budget,
                                     seed=spec.seed)
            a, ae = ev.coverage_with_error(grid)
        if do_s:
            c = simulate_user_centric(_sim_cfg(spec, cfg, threads)).coverage(grid)
            s, se = c.probabilities, c.stderr
    elif q == "coverage_at":
        t_r = p.get("t_r_bps_hz", 2.0)
        for i, v in enumerate(grid):
            cfg = _user_centric({**p, SWEEP_PARAM.get(spec.sweep, spec.sweep): v})
            if do_a:
                ev = UserCentricAnalytic(cfg, load_model(cfg, budget=budget, seed=spec.seed),
                                         budget=budget, seed=spec.seed)
                r = ev.coverage_with_error([t_r])
                a[i], ae[i] = r[0][0], r[1][0]
            if do_s:
                c = simulate_user_centric(_sim_cfg(spec, cfg, threads)).coverage([t_r])
                s[i], se[i] = c.probabilities[0], c.stderr[0]
    elif q in ("sum_rate", "mean_rate"):
        for i, v in enumerate(grid):
            cfg = _traditional({**p, SWEEP_PARAM.get(spec.sweep, spec.sweep): v})
            scale = cfg.k if q == "sum_rate" else 1.0
            if do_a:
                a[i], ae[i] = scale * TraditionalAnalytic(cfg).mean_rate(), 0.0
            if do_s:
                r = simulate_traditional(_sim_cfg(spec, cfg, threads)).rate
                s[i], se[i] = scale * r.mean(), scale * r.std(ddof=1) / math.sqrt(r.size)
    elif q in ("scnr_coverage", "required_fronthaul"):
        t_s = db_to_linear(p.get("t_s_db", 15.0))
        target = p.get("scnr_target", 0.95)
        for i, v in enumerate(grid):
            pp = {**p, "n_s": v}

            def stat(pmf):
                if q == "scnr_coverage":
                    return scnr_coverage(p["c_f_bps_hz"], t_s, pmf)
                return required_fronthaul(t_s, pmf, target)

            if do_a:
                a[i], ae[i] = stat(_typical_pmf(pp)), 0.0
            if do_s:
                cfg = _user_centric({**pp, "c_f_bps_hz": p.get("c_f_bps_hz", 100.0)})
                s[i], se[i] = stat(simulate_user_centric(_sim_cfg(spec, cfg, threads)).typical_pmf()), 0.0
    elif q == "load_pmf":
        ap = p.get("ap", "typical")
        lam_r, lam_u, n_s = p["lambda_r_per_m2"], p["lambda_u_per_m2"], int(p.get("n_s", 5))
        if ap == "typical":
            ana = load_pmf(typical_load_moments(lam_r, lam_u, n_s))
        else:
            rank = int(str(ap).removeprefix("rank"))
            ana = load_pmf(tagged_load_moments(rank, lam_r, lam_u, n_s, budget=budget, seed=spec.seed))
        k = grid.astype(int)
        if do_a:
            a, ae = ana.pmf(k), np.zeros(grid.size)
        if do_s:
            cfg = _user_centric({**p, "c_f_bps_hz": p.get("c_f_bps_hz", 100.0)})
            res = simulate_user_centric(_sim_cfg(spec, cfg, threads))
            emp = res.typical_pmf() if ap == "typical" else res.tagged_pmf(int(str(ap).removeprefix("rank")))
            s, se = emp.pmf(k), np.zeros(grid.size)
            if do_a:
                notes.setdefault("total_variation", {})[str(ap)] = total_variation(ana, emp)
    else:  # pragma: no cover - guarded by parse_spec
        raise AssertionError(q)
    return a, ae, s, se


def evaluate(spec: ExperimentSpec, threads: int = 1):
    """Run every series of a spec; returns (rows, notes)."""
    rows, notes = [], {}
    for sv in spec.series:
        p = dict(spec.params)
        if spec.series_key is not None:
            p[spec.series_key] = sv
        a, ae, s, se = _eval_series(spec, p, threads, notes)
        for i, g in enumerate(spec.grid):
            rows.append((spec.series_key or "", sv if sv is not None else "", g, a[i], ae[i], s[i], se[i]))
    return rows, notes


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _write_outputs(spec, rows, notes, out_dir: Path, elapsed):
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "series_value", spec.sweep, "analytic", "analytic_err", "simulated", "simulated_err"])
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path = out_dir / f"{spec.name}.csv"
    path.write_text(buf.getvalue())
    files["results"] = path.name

    manifest = {
        "name": spec.name, "mode": spec.mode, "architecture": spec.architecture,
        "quantity": spec.quantity, "sweep": spec.sweep, "grid": spec.grid,
        "series": {spec.series_key: spec.series} if spec.series_key else {},
        "params": spec.params, "seed": spec.seed, "trials": spec.trials,
        "package_version": __version__,
    }
    if spec.mode == "both":
        gaps = {}
        for r in rows:
            if not (math.isnan(r[3]) or math.isnan(r[5])):
                gaps[r[2]] = max(gaps.get(r[2], 0.0), abs(r[3] - r[5]))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([spec.sweep, "max_abs_gap"])
        for g, v in gaps.items():
            w.writerow([_fmt(g), _fmt(v)])
        path = out_dir / f"{spec.name}.agreement.csv"
        path.write_text(buf.getvalue())
        files["agreement"] = path.name
        manifest["max_abs_gap"] = max(gaps.values()) if gaps else None
    manifest.update(notes)
    manifest["files"] = files
    (out_dir / f"{spec.name}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    meta = {"started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(time.time() - elapsed)),
            "elapsed_s": round(elapsed, 3), "python": platform.python_version(), "host": platform.node()}
    (out_dir / f"{spec.name}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return manifest


def bundled_specs() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("cellfree.specs").iterdir() if p.name.endswith(".ini"))


def _read_spec(arg):
    path = Path(arg)
    if path.exists():
        return path.read_text(), str(path)
    res = resources.files("cellfree.specs") / f"{arg}.ini"
    if res.is_file():
        return res.read_text(), f"{arg}.ini"
    raise SpecError(arg, "spec", f"no such file or bundled spec (bundled: {', '.join(bundled_specs())})")


def run(spec_path, seed=None, trials=None, out=None, threads=1, stream=None, err=None) -> int:
    """Parse, run and write one experiment; returns the process exit status."""
    stream = stream or sys.stdout
    err = err or sys.stderr
    try:
        text, source = _read_spec(spec_path)
        spec = parse_spec(text, source)
        if trials is not None and trials < 1:
            raise SpecError("--trials", "trials", "must be >= 1")
    except SpecError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_SPEC
    if seed is not None:
        spec.seed = seed
    if trials is not None:
        spec.trials = trials
    t0 = time.time()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", Unconverged)
            rows, notes = evaluate(spec, threads)
    except Unconverged as exc:
        print(f"error: unconverged numerics: {exc}", file=err)
        return EXIT_UNCONVERGED
    except ValueError as exc:
        print(f"error: {source}: {exc}", file=err)
        return EXIT_SPEC
    manifest = _write_outputs(spec, rows, notes, Path(out or "results"), time.time() - t0)
    line = f"{spec.name}: {len(rows)} rows"
    if manifest.get("max_abs_gap") is not None:
        line += f", max |analytic - simulated| = {manifest['max_abs_gap']:.4f}"
    if "total_variation" in manifest:
        line += ", TV " + ", ".join(f"{k}={v:.4f}" for k, v in manifest["total_variation"].items())
    print(line, file=stream)
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m cellfree.cli", description=__doc__.splitlines()[0])
    ap.add_argument("spec", nargs="?", help="spec file or bundled spec name")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--out", default="results", help="output directory (default: results)")
    ap.add_argument("--threads", type=int, default=1, help="simulation worker processes")
    ap.add_argument("--list", action="store_true", help="list bundled specs and exit")
    args = ap.parse_args(argv)
    if args.list:
        print("\n".join(bundled_specs()))
        return EXIT_OK
    if not args.spec:
        ap.error("a spec is required")
    return run(args.spec, args.seed, args.trials, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
