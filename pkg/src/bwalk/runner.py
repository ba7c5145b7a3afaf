"""Experiment pipelines behind the command line.

Each kind writes CSV tables, ``summary.json`` (checks and headline
numbers) and ``manifest.json`` (config echo, versions, seeds, wall time and
every guard-band diagnostic).  Everything except the manifest's timing
fields is a deterministic function of the config.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import _backend, analysis, sim, solver, stable
from .config import ExperimentConfig, echo_config
from .errors import AliasingWarning, BwalkError, GuardViolation
from .fields import TorusGrid, write_field_binary, write_field_csv
from .kernel import AngularProfile, build_kernel, write_kernel_csv

__all__ = ["RunResult", "run_experiment", "EXIT_OK", "EXIT_CHECK", "EXIT_CONFIG", "EXIT_GUARD"]

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
CSV_FIELD_LIMIT = 2**17
VERSION = "0.1.0"


@dataclass
class RunResult:
    code: int
    summary: dict
    out_dir: Path
    error: str | None = None


class _Run:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.checks = []
        self.results = {}
        self.diag = {}
        k = cfg["kernel"]
        self.kernel = build_kernel(k["d"], k["alpha"], AngularProfile(k["d"], np.array(k["profile"])),
                                   k["R"])
        num = cfg["numerics"]
        self.grid = TorusGrid(k["d"], num["M"])
        self.strict = bool(num["strict"])
        self.guard = num["aliasing_guard"]
        self.tol = cfg["tolerances"]
        self.times = list(cfg["dynamics"]["times"])
        self.nu = cfg["dynamics"]["nu"]
        # output location is not part of the numerical identity of a run
        body = [ln for ln in echo_config(cfg).splitlines() if ln and not ln.startswith("output =")]
        self.header = "config: " + " | ".join(body)

    def check(self, name, value, tol, op="<="):
        if op == "<=":
            ok = bool(value <= tol)
        elif op == ">=":
            ok = bool(value >= tol)
        elif op == ">":
            ok = bool(value > tol)
        else:
            ok = bool(value == tol)
        self.checks.append({"name": name, "value": value, "op": op, "target": tol, "passed": ok})
        return ok

    def path(self, name):
        return self.out / name

    def tag(self, t):
        return f"t{t:g}"

    def write_field(self, f, stem):
        if f.mantissa.size <= CSV_FIELD_LIMIT:
            write_field_csv(f, self.path(stem + ".csv"), header=self.header)
        if f.mantissa.size > CSV_FIELD_LIMIT or self.cfg["numerics"]["write_binary"]:
            write_field_binary(f, self.path(stem + ".bin"))

    def p(self, t):
        f = solver.solve_p(self.kernel, t, self.grid, self.strict, self.guard)
        self.diag[f"aliasing_mass_{self.tag(t)}"] = f.diagnostics["aliasing_mass"]
        return f

    def m1(self, t):
        f = solver.solve_m1(self.kernel, self.nu, t, self.grid, self.strict, self.guard)
        self.diag[f"aliasing_mass_{self.tag(t)}"] = f.diagnostics["aliasing_mass"]
        return f

    def m2(self, t):
        ns = self.cfg["numerics"]["n_steps"] or None
        f = solver.solve_m2(self.kernel, self.nu, t, self.grid, ns, self.strict, self.guard,
                            self.cfg["numerics"]["richardson_tol"])
        tg = self.tag(t)
        self.diag[f"richardson_gap_{tg}"] = f.diagnostics["richardson_gap"]
        self.diag[f"richardson_uniform_{tg}"] = f.diagnostics["richardson_uniform"]
        self.diag[f"n_steps_{tg}"] = f.diagnostics["n_steps"]
        return f


def _density(run: _Run):
    cfg, k, g = run.cfg, run.kernel, run.grid
    N = cfg["numerics"]["series_terms"]
    rows = []
    for t in run.times:
        f = run.p(t)
        tg = run.tag(t)
        run.write_field(f, f"p_{tg}")
        res = {"mass_error": f.diagnostics["mass_error"], "min_value": f.diagnostics["min_value"]}
        run.check(f"mass_{tg}", f.diagnostics["mass_error"], run.tol["mass"])
        if t > 0:
            run.check(f"positivity_{tg}", f.diagnostics["min_value"], 0.0, ">")
        if k.d == 1 and 0 < t <= 1 and t < N + 2:
            x = np.arange(-50, 51)
            ser = solver.series_p(k, t, x, N)
            dev = float(np.max(np.abs(ser - f.values()[g.index(x)])))
            res["series_max_abs_diff"] = dev
            res["series_truncation_bound"] = solver.series_bound(t, N)
            run.check(f"series_{tg}", dev, run.tol["series"])
            for xi, sv in zip(x, ser):
                rows.append((t, int(xi), float(sv), float(f.at(int(xi)))))
        if t > 0:
            try:
                rep = stable.tail_check(f, k, cfg["analysis"]["inner"])
            except ValueError as exc:
                res["tail"] = f"skipped: {exc}"
            else:
                stable.write_ratio_csv(rep, run.path(f"tail_ratio_{tg}.csv"))
                res["tail"] = rep.summary()
                # the check uses the single-image law; the torus-folded ratio is reported
                run.check(f"tail_{tg}", res["tail"]["raw_max_deviation"], run.tol["tail"])
        run.results[tg] = res
    if rows:
        with open(run.path("series_vs_spectral.csv"), "w", encoding="utf-8") as fh:
            fh.write("t,x,series,spectral\n")
            for r in rows:
                fh.write(f"{r[0]!r},{r[1]},{r[2]!r},{r[3]!r}\n")


def _moments(run: _Run):
    for t in run.times:
        tg = run.tag(t)
        m1, m2 = run.m1(t), run.m2(t)
        run.write_field(m1, f"m1_{tg}")
        run.write_field(m2, f"m2_{tg}")
        lm1, lm2 = m1.log_values(), m2.log_values()
        with np.errstate(invalid="ignore"):
            v_sq = float(np.min(lm2 - 2.0 * lm1))
            v_lin = float(np.min(lm2 - lm1))
        total = m1.total()
        mass_rel = abs(total * math.exp(-run.nu * t) - 1.0)
        run.results[tg] = {"min_log_m2_over_m1sq": v_sq, "min_log_m2_over_m1": v_lin,
                           "m1_total": total, "richardson_gap": m2.diagnostics["richardson_gap"]}
        run.check(f"richardson_{tg}", m2.diagnostics["richardson_gap"],
                  run.cfg["numerics"]["richardson_tol"])
        run.check(f"m2_ge_m1sq_{tg}", v_sq, -1e-9, ">=")
        run.check(f"m2_ge_m1_{tg}", v_lin, -1e-9, ">=")
        run.check(f"m1_mass_{tg}", mass_rel, run.tol["mass"])
        if run.nu == 0.0:
            same = bool(np.array_equal(m1.mantissa, m2.mantissa) and m1.exponent == m2.exponent)
            run.check(f"nu0_collapse_{tg}", same, True, "==")


def _local_limit(run: _Run):
    k, an = run.kernel, run.cfg["analysis"]
    spec = stable.compute_b0(k.alpha, k.profile, k.C)
    last = None
    for t in run.times:
        tg = run.tag(t)
        f = run.p(t)
        rep = stable.local_limit_check(f, spec, an["K"])
        stable.write_ratio_csv(rep, run.path(f"local_ratio_{tg}.csv"))
        run.results[tg] = rep.summary()
        run.check(f"local_limit_{tg}", rep.max_deviation, run.tol["local"])
        last = f
    b_eq = float(spec.b0_at(0.0))
    exp_fit, b_cusp = stable.symbol_cusp_fit(k)
    tri = {"b0_formula": b_eq, "b0_cusp_fit": b_cusp, "cusp_exponent": exp_fit}
    pairs = [("formula", b_eq), ("cusp", b_cusp)]
    if spec.is_isotropic:
        b_fit = stable.fit_b0_local(last, k.alpha)
        tri["b0_local_fit"] = b_fit
        pairs.append(("local", b_fit))
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            (na, a), (nb, b) = pairs[i], pairs[j]
            run.check(f"triangle_{na}_{nb}", abs(a - b) / max(a, b), run.tol["triangle"])
    run.results["triangle"] = tri
    with open(run.path("b0_triangle.csv"), "w", encoding="utf-8") as fh:
        fh.write("estimate,value\n")
        for key in sorted(tri):
            fh.write(f"{key},{float(tri[key])!r}\n")


def _front(run: _Run):
    k, g = run.kernel, run.grid
    thr = run.cfg["analysis"]["threshold"]
    direction = 1.0 if k.d == 1 else 0.0
    crossings = []
    for t in run.times:
        pred = analysis.predicted_radius(k, run.nu, t, 0.0)
        problems = g.check_sizing(k.R, pred)
        if problems:
            msg = "; ".join(problems)
            if run.strict:
                raise GuardViolation(msg)
            warnings.warn(msg, AliasingWarning, stacklevel=2)
        crossings.append(analysis.front_radius(run.m1(t), direction, thr))
    rep = analysis.fit_front_rate(crossings, k, run.nu)
    analysis.write_front_csv(rep, run.path("front.csv"))
    run.results["front"] = rep.summary()
    rel = abs(rep.rate - rep.target) / rep.target
    run.check("front_rate", rel, run.tol["front_rate"])
    for t, r, p in zip(rep.times, rep.refined, rep.predicted):
        run.check(f"front_radius_{run.tag(t)}", abs(r - p) / p, run.tol["front_radius"])


def _intermittency(run: _Run):
    k, an = run.kernel, run.cfg["analysis"]
    gm = analysis.gamma(k.alpha, k.d)
    direction = 1.0 if k.d == 1 else 0.0
    profiles = []
    for t in run.times:
        m1, m2 = run.m1(t), run.m2(t)
        profiles.append(analysis.intermittency_scan(
            m1, m2, gm, radii=[0.0], scaled=an["scaled"], B=an["B"], eps=an["eps"],
            direction=direction))
    analysis.write_profiles_csv(profiles, run.path("intermittency.csv"))
    rho0 = np.array([p.rho[0] for p in profiles])
    band = float(rho0.max() / rho0.min())
    lt = np.log([p.t for p in profiles])
    out = np.array([p.probes["rho_outside"] for p in profiles])
    inside = np.array([p.probes["rho_inside"] for p in profiles])
    slope = float(np.polyfit(lt, np.log(out), 1)[0])
    lowest = float(np.nanmin(np.concatenate([p.rho for p in profiles])))
    classes = analysis.regime_classify(profiles, an["low"], an["high"])
    run.results["intermittency"] = {
        "gamma": gm, "rho_origin": rho0.tolist(), "rho_origin_band": band,
        "rho_inside": inside.tolist(), "rho_outside": out.tolist(),
        "outside_slope": slope, "slope_lower_bound_theory": an["eps"] * (k.d + k.alpha),
        "classification": {repr(s): {"slope": v[0], "label": v[1]} for s, v in classes.items()},
        "skipped_radii": int(sum(int(p.skipped.sum()) for p in profiles)),
    }
    run.check("rho_origin_band", band, run.tol["rho_band"])
    run.check("outside_slope", slope, run.tol["slope_min"], ">=")
    run.check("ordering_outside_gt_inside", bool(np.all(out > inside)), True, "==")
    run.check("rho_lower_bound", lowest, 1.0 - 1e-6, ">=")


def _mc_validate(run: _Run):
    cfg, k = run.cfg, run.kernel
    mc = cfg["mc"]
    scfg = sim.SimConfig(k.d, k.alpha, run.nu, max(run.times), tuple(run.times), mc["replicas"],
                         mc["seed"], tuple(cfg["kernel"]["profile"]), k.R, mc["cap"])
    runs = sim.run_replicas(scfg)
    ests = sim.estimate_moments(scfg, runs)
    header = run.header + f"\nseed: {mc['seed']}"
    sim.write_moments_csv(ests, run.path("mc_moments.csv"), header=header)
    sim.write_snapshots_csv(runs, run.path("mc_snapshots.csv"), header=header)
    zmax = run.tol["z_max"]
    sites = list(mc["sites"]) if k.d == 1 else [(s, 0) for s in mc["sites"]]
    rows = []
    for e in ests:
        t = e.t
        tg = run.tag(t)
        m1, m2 = run.m1(t), run.m2(t)
        run.diag[f"mc_excluded_{tg}"] = e.excluded
        run.check(f"mc_exclusions_{tg}", e.flagged, False, "==")
        for x in sites:
            a, sa, b, sb = e.at(x)
            z1 = (a - m1.at(x)) / sa
            z2 = (b - m2.at(x)) / sb
            xs = x if k.d == 1 else f"{x[0]};{x[1]}"
            rows.append((t, xs, a, sa, m1.at(x), z1, b, sb, m2.at(x), z2))
            run.check(f"z_m1_{tg}_x{xs}", abs(z1), zmax)
            run.check(f"z_m2_{tg}_x{xs}", abs(z2), zmax)
        pm = e.population_moments()
        yule1 = math.exp(run.nu * t)
        yule2 = 2.0 * math.exp(2.0 * run.nu * t) - yule1
        zn = (pm["N"] - yule1) / pm["N_se"] if pm["N_se"] > 0 else 0.0
        zn2 = (pm["N2"] - yule2) / pm["N2_se"] if pm["N2_se"] > 0 else 0.0
        run.check(f"z_N_{tg}", abs(zn), zmax)
        run.check(f"z_N2_{tg}", abs(zn2), zmax)
        run.results[tg] = {"N_mean": pm["N"], "N_se": pm["N_se"], "N_yule": yule1, "z_N": zn,
                           "N2_mean": pm["N2"], "N2_se": pm["N2_se"], "N2_yule": yule2,
                           "z_N2": zn2, "lag1_correlation": e.lag1_correlation(),
                           "valid_replicas": e.replicas, "excluded": e.excluded}
    with open(run.path("mc_vs_solver.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,x,m1_hat,m1_se,m1_solver,z_m1,m2_hat,m2_se,m2_solver,z_m2\n")
        for r in rows:
            fh.write(",".join([repr(float(r[0])), str(r[1])] + [repr(float(v)) for v in r[2:]])
                     + "\n")


PIPELINES = {
    "density": _density,
    "moments": _moments,
    "local-limit": _local_limit,
    "front": _front,
    "intermittency": _intermittency,
    "mc-validate": _mc_validate,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Run the pipeline for ``cfg.kind``; the exit code follows the CLI contract."""
    out = Path(out_dir if out_dir is not None else cfg["experiment"]["output"])
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "INVALID"
    if marker.exists():
        marker.unlink()
    (out / "config.ini").write_text(echo_config(cfg), encoding="utf-8")
    start = time.time()
    run = None
    error = None
    code = EXIT_OK
    caught = []
    try:
        run = _Run(cfg, out)
        write_kernel_csv(run.kernel, out / "kernel.csv")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AliasingWarning)
            PIPELINES[cfg.kind](run)
    except (BwalkError, ArithmeticError, ValueError, RuntimeError, MemoryError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        code = EXIT_GUARD
    checks = run.checks if run else []
    if code == EXIT_OK and not all(c["passed"] for c in checks):
        code = EXIT_CHECK
    summary = {"kind": cfg.kind, "passed": code == EXIT_OK, "checks": checks,
               "results": run.results if run else {}, "error": error}
    _dump(summary, out / "summary.json")
    k = cfg["kernel"]
    manifest = {
        "config": echo_config(cfg),
        "versions": {"bwalk": VERSION, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "backend": _backend.BACKEND},
        "seeds": {"mc": cfg["mc"]["seed"]} if cfg.kind == "mc-validate" else {},
        "kernel": {"C": run.kernel.C, "p_tail": run.kernel.p_tail,
                   "norm_error": run.kernel.norm_error} if run else {"d": k["d"]},
        "diagnostics": run.diag if run else {},
        "warnings": [str(w.message) for w in caught],
        "exit_code": code,
        "error": error,
        "wall_time_s": time.time() - start,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "threads": os.environ.get("BWALK_THREADS", ""),
    }
    _dump(manifest, out / "manifest.json")
    if error is not None:
        marker.write_text(error + "\n", encoding="utf-8")
    return RunResult(code, summary, out, error)
