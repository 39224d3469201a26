"""Execute a validated configuration and write its artifacts.

Output layout under ``out_dir``::

    report.json            verdicts, estimates and oracle results
    timing.json            wall-clock per experiment (not part of the report)
    curves/<exp>/...csv    one ``t,value`` file per recorded curve
    sets/<exp>/...csv      minimal-set estimates, one point per row
    plots/<exp>/...svg     scatter plots of the estimates
    cache/                 persisted orbit summaries (unless disabled)
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, attractor, parallel, stability
from .cache import TrajectoryCache
from .config import ExperimentConfig
from .flow import FlowDomainError, builtin, candidate_set, flow_grid, invariance_residual
from .oracle import FiniteSystem, sweep
from .report import save_curve, save_points, scatter_svg, write_json
from .space import (BudgetExceededError, ClosedSet, directed_distance, hausdorff,
                    points_set)
from .stability import (INCONCLUSIVE, NotInvariantError, StabilityVerdict, dirac_sampler,
                        gaussian_sampler, uniform_sampler)

log = logging.getLogger(__name__)

DEFAULTS = {"eps": 0.1, "T": 100.0, "h": 0.1}


@dataclass
class RunResult:
    report: dict
    timing: dict
    n_errors: int
    out_dir: Path
    files: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.n_errors == 0 else 1


def _flow(spec: dict):
    if "finite" in spec:
        f = FiniteSystem.from_list(spec["finite"]).as_semiflow()
        return f.space, f
    return builtin(spec["builtin"], **spec.get("params", {}))


def _sets(flow, specs) -> dict[str, ClosedSet]:
    out = {}
    for s in specs or ["whole"]:
        if isinstance(s, str):
            out[s] = candidate_set(flow, s)
        elif "points" in s:
            out[s["name"]] = points_set(flow.space, s["points"], s["name"])
        else:
            M = candidate_set(flow, s["builtin"], s.get("resolution", 0.005))
            out[s["name"]] = ClosedSet(M.space, M.net, s["name"], M.resolution)
    return out


def _sampler(space, spec):
    if spec is None:
        return None
    kind = spec["kind"]
    if kind == "gaussian":
        return gaussian_sampler(space, spec.get("sigma", 1.0), spec.get("mean", 0.0))
    if kind == "uniform":
        return uniform_sampler(space)
    return dirac_sampler(space, spec["point"])


def _run_check(flow, M, cloud, sampler, samp_spec, c) -> StabilityVerdict:
    prop = c["property"]
    eps = c.get("eps", DEFAULTS["eps"])
    T = c.get("T", DEFAULTS["T"])
    dt = c.get("dt")
    settle = c.get("settle", 0.5)
    n_samples = c.get("n_samples", (samp_spec or {}).get("n", 500))
    seed = c.get("seed", (samp_spec or {}).get("seed", 0))
    delta = c.get("delta", 0.01)
    if prop in ("nilpotent", "absorbing"):
        fn = stability.check_nilpotent if prop == "nilpotent" else attractor.is_absorbing
        return fn(flow, M, cloud, T, c.get("eps", 0.0), dt, h0=c.get("h0", 0.1),
                  budget=c.get("budget", 2 ** 14))
    if prop == "pointwise_absorbing":
        return attractor.is_pointwise_absorbing(flow, M, cloud, T, c.get("eps", 0.0), dt,
                                                settle)
    if prop == "interior_cover":
        return attractor.interior_cover_test(flow, M, cloud, c.get("n_max", 10), eps, dt)
    if prop == "strong":
        return stability.check_strong(flow, M, eps, T, dt, c.get("h0", 0.1),
                                      c.get("budget", 2 ** 14), cloud=cloud)
    if prop == "weak":
        return stability.check_weak(flow, M, cloud, eps, T, dt, settle)
    if prop == "almost_weak":
        return stability.check_almost_weak(flow, M, cloud, eps, T, dt, settle)
    if prop == "ae_pointwise":
        return stability.check_ae_pointwise(flow, M, sampler, n_samples, eps, T, delta, seed,
                                            dt, settle)
    if prop == "attractive":
        return attractor.is_attractive(flow, M, cloud, eps, T, dt, settle,
                                       c.get("omega_check", True))
    if prop == "lyapunov":
        return attractor.is_lyapunov_stable(flow, M, c.get("eps_list", [eps]), None, T, dt,
                                            c.get("probe_h"))
    if prop == "uniform":
        lkw = {"T_max": c.get("T_lyapunov", T), "dt": c.get("dt_lyapunov", dt),
               "probe_h": c.get("probe_h")}
        return attractor.is_uniformly_attractive(flow, M, eps, T, cloud, dt, c.get("h0", 0.1),
                                                 c.get("budget", 2 ** 14), settle, lkw)
    if prop == "milnor":
        return attractor.is_milnor(flow, M, sampler, n_samples, eps, T, delta, seed, dt, settle,
                                   c.get("omega_check", True))
    if prop == "center":
        return attractor.is_center_of_attraction(flow, M, cloud, eps, T, dt,
                                                 c.get("tol_density", 0.1), settle)
    raise ValueError(f"unknown property {prop!r}")


def _estimate(flow, cloud, sampler, samp_spec, e) -> ClosedSet:
    kind = e["kind"]
    eps = e["eps"]
    horizon = e.get("horizon", 200.0)
    burn_in = e.get("burn_in", 0.5 * horizon)
    dt = e.get("dt", 0.05)
    if kind == "minimal_attractor":
        return attractor.minimal_attractor(flow, cloud, dt, burn_in, horizon, eps,
                                           e.get("radius"))
    if kind == "minimal_center":
        return attractor.minimal_center(flow, cloud, dt, burn_in, horizon, eps,
                                        e.get("mass_floor", 0.01), e.get("radius"))
    if kind == "minimal_milnor":
        return attractor.minimal_milnor(flow, sampler, e.get("n_samples", samp_spec.get("n", 500)),
                                        dt, burn_in, horizon, eps,
                                        e.get("seed", samp_spec.get("seed", 0)), e.get("radius"))
    if kind == "minimal_uniform_attractor":
        return attractor.minimal_uniform_attractor(flow, cloud, e.get("dt_img", 1.0),
                                                   e.get("T_max", horizon), eps)
    om = attractor.omega_limit(flow, e["x"], dt, burn_in, horizon, eps, e.get("radius"))
    return om.net


def _verdict_record(v: StabilityVerdict, set_name, out_dir, exp_name, write_curves) -> dict:
    rec = v.to_dict()
    rec["set"] = set_name
    if write_curves and v.curve is not None:
        rel = f"curves/{exp_name}/{set_name}__{v.property}.csv"
        rec["curve_csv"] = save_curve(out_dir, rel, v.curve)
    return rec


def run_experiment(exp: dict, out_dir: Path, plots: bool = True, curves: bool = True) -> dict:
    name = exp["name"]
    space, flow = _flow(exp["flow"])
    grid = exp.get("grid", {})
    cloud = flow_grid(flow, grid.get("h", DEFAULTS["h"]), grid.get("budget", 200_000))
    sets = _sets(flow, exp.get("sets"))
    samp_spec = exp.get("sampler")
    sampler = _sampler(space, samp_spec)
    doc = {"name": name, "flow": {"id": flow.cache_id, "description": flow.description},
           "cloud": {"n_points": len(cloud), "resolution": cloud.resolution},
           "sets": {}, "verdicts": [], "estimates": [], "errors": []}
    for sname, M in sets.items():
        doc["sets"][sname] = {"n_points": len(M), "resolution": M.resolution,
                              "invariance_residual": invariance_residual(flow, M)}
    for c in exp.get("checks", []):
        for sname in c.get("sets", list(sets)):
            try:
                v = _run_check(flow, sets[sname], cloud, sampler, samp_spec, c)
                doc["verdicts"].append(_verdict_record(v, sname, out_dir, name, curves))
            except BudgetExceededError as exc:
                doc["verdicts"].append({"set": sname, "property": c["property"],
                                        "status": INCONCLUSIVE, "budget_exceeded": str(exc)})
            except (NotInvariantError, FlowDomainError, ValueError) as exc:
                log.error("%s/%s/%s: %s", name, sname, c["property"], exc)
                doc["errors"].append({"set": sname, "property": c["property"],
                                      "error": f"{type(exc).__name__}: {exc}"})
    estimates = {}
    for j, e in enumerate(exp.get("estimators", [])):
        label = e["kind"] if e["kind"] != "omega_limit" else f"omega_limit_{j}"
        try:
            est = _estimate(flow, cloud, sampler, samp_spec or {}, e)
        except (BudgetExceededError, FlowDomainError, ValueError) as exc:
            doc["errors"].append({"estimator": label, "error": f"{type(exc).__name__}: {exc}"})
            continue
        estimates[label] = est
        rec = {"kind": e["kind"], "label": label, "n_points": len(est.net),
               "resolution": est.resolution,
               "invariance_residual": invariance_residual(flow, est),
               "points_csv": save_points(out_dir, f"sets/{name}/{label}.csv", est.net)}
        ref = e.get("reference")
        layers = [(label, est.net)]
        if ref is not None:
            R = sets[ref] if isinstance(ref, str) else points_set(space, ref, "reference")
            rec["reference"] = ref if isinstance(ref, str) else "points"
            rec["hausdorff_to_reference"] = hausdorff(space, est.net, R.net)
            layers.append(("reference", R.net))
        if plots:
            rel = f"plots/{name}/{label}.svg"
            scatter_svg(out_dir / rel, space, layers, f"{name}: {label}")
            rec["plot_svg"] = rel
        doc["estimates"].append(rec)
    # nesting of the minimal sets at scale: center ⊆ attractor ⊆ uniform attractor
    nest = {}
    for a, b in (("minimal_center", "minimal_attractor"),
                 ("minimal_attractor", "minimal_uniform_attractor"),
                 ("minimal_milnor", "minimal_attractor")):
        if a in estimates and b in estimates:
            nest[f"{a}_in_{b}"] = directed_distance(space, estimates[a].net, estimates[b].net)
    if nest:
        doc["nesting"] = nest
    return doc


def run(cfg: ExperimentConfig, out_dir, use_cache: bool = True,
        threads: int | None = None) -> RunResult:
    """Run every experiment and the oracle sweep of ``cfg``; write all artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.output
    parallel.set_threads(threads or out.get("threads", 1))
    cache = TrajectoryCache(out_dir / "cache") if use_cache else None
    stability.set_cache(cache)
    attractor.set_cache(cache)
    stability.clear_memo()
    attractor.clear_memo()
    report = {"tool": {"name": "koopman_attractors", "version": __version__},
              "config": cfg.data, "experiments": []}
    timing = {}
    n_errors = 0
    try:
        for exp in cfg.experiments:
            t0 = time.perf_counter()
            doc = run_experiment(exp, out_dir, out.get("plots", True), out.get("curves", True))
            timing[exp["name"]] = time.perf_counter() - t0
            n_errors += len(doc["errors"])
            report["experiments"].append(doc)
        if cfg.oracle is not None:
            t0 = time.perf_counter()
            o = cfg.oracle
            sw = sweep(o.get("systems", 1000), o.get("max_n", 12), o.get("seed", 0),
                       o.get("cap", 64))
            timing["oracle"] = time.perf_counter() - t0
            report["oracle"] = sw.to_dict()
    finally:
        stability.set_cache(None)
        attractor.set_cache(None)
    report["summary"] = {
        "n_errors": n_errors,
        "n_verdicts": sum(len(e["verdicts"]) for e in report["experiments"]),
        "statuses": _status_table(report),
    }
    write_json(out_dir / "report.json", report)
    if cache is not None:
        timing["cache"] = {"hits": cache.hits, "misses": cache.misses}
    write_json(out_dir / "timing.json", {"wall_clock_seconds": timing})
    return RunResult(report, timing, n_errors, out_dir)


def _status_table(report) -> dict:
    table = {}
    for e in report["experiments"]:
        for v in e["verdicts"]:
            table[f"{e['name']}/{v['set']}/{v['property']}"] = v["status"]
    return table


def verify_oracle(n_systems: int, max_n: int, seed: int, out_dir=None) -> tuple[dict, int]:
    sw = sweep(n_systems, max_n, seed)
    doc = {"tool": {"name": "koopman_attractors", "version": __version__},
           "oracle": sw.to_dict()}
    if out_dir is not None:
        write_json(Path(out_dir) / "oracle.json", doc)
    return doc, 0 if sw.ok else 1

