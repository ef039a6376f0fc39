"""One runner per subcommand.

A runner takes a validated :class:`ExperimentConfig` and returns a
:class:`Table`: column names, rows in deterministic grid order, trailing
summary records and an exit status. Random work for grid task ``i`` uses
``RngStream(seed, i)``; its replicas use the children of that stream.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import dynamics as dyn
from .. import equilibrium as eq
from .. import exactchain as ec
from ..params import ModelParams
from ..rng import RngStream
from .config import ConfigError
from .output import read_table
from .scaling import fit_scaling

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CAP = 0, 2, 3, 4

DEFAULT_REPLICAS = {"mix-couple": 200, "coupling-contraction": 200_000}
# exact t_mix is out of reach deep in the slow regime; the bottleneck bound is reported instead
SLOW_EXACT_MAX_N = 60


@dataclass
class Table:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    trailers: list[dict] = field(default_factory=list)
    status: int = EXIT_OK


def resolved_points(cfg):
    """``(beta, k_spec, k)`` for every grid point; K specs resolve per beta."""
    return [(beta, str(spec), spec.resolve(beta)) for beta in cfg.beta for spec in cfg.k]


def _pmap(cfg, fn, tasks):
    if cfg.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _nlogn(n):
    return n * math.log(n) if n > 1 else float("nan")


def _start_config(name, n):
    return {"all-plus": dyn.SpinConfiguration.all_plus, "all-minus": dyn.SpinConfiguration.all_minus,
            "all-zero": dyn.SpinConfiguration.all_zero}[name](n)


def _fit_or_note(points, model):
    try:
        return fit_scaling(points, model).to_dict()
    except eq.DomainError as exc:
        return {"model": model, "skipped": str(exc)}


# ---------------------------------------------------------------------------


def phase_diagram(cfg):
    columns = ["beta", "k", "phase", "mixing_prediction", "alpha_max", "kc2", "k1", "kc1"]

    def one(point):
        beta, _, k = point
        rep = eq.classify(beta, k, cfg.tol)
        return {"beta": beta, "k": k, "phase": rep.phase.value,
                "mixing_prediction": rep.mixing_prediction.value, "alpha_max": rep.alpha_max,
                "kc2": rep.kc2, "k1": rep.k1, "kc1": rep.kc1}

    return Table(columns, _pmap(cfg, one, resolved_points(cfg)))


def critical_curves(cfg):
    columns = ["beta", "kc2", "k1", "kc1", "wc"]

    def one(beta):
        row = {"beta": beta, "kc2": None, "k1": None, "kc1": None, "wc": None}
        if beta <= eq.BETA_C:
            row["kc2"] = eq.kc2(beta)
        if beta >= eq.BETA_C:
            row["wc"] = eq.wc(beta)
        if beta > eq.BETA_C:
            row["k1"] = eq.k1(beta)
            row["kc1"] = eq.kc1(beta)
        return row

    return Table(columns, _pmap(cfg, one, list(cfg.beta)))


def mix_exact(cfg):
    columns = ["n", "beta", "k", "eps", "t_mix", "t_mix_over_nlogn", "tmix_lower", "status", "prediction"]
    points = resolved_points(cfg)
    tasks = [(p, n) for p in points for n in cfg.n]

    def one(task):
        (beta, _, k), n = task
        params = ModelParams(n, beta, k)
        prediction = eq.classify(beta, k, cfg.tol).mixing_prediction.value
        slow = eq.slow_mixing_rate(beta, k, cfg.tol)
        chain = ec.glauber_lumped_matrix(params)
        pi = ec.gibbs_stationary(params, chain.space)
        zprime = slow[0] if slow else 0.0
        lower = ec.bottleneck(params, min(zprime, (n - 1) / n), pi=pi).tmix_lower
        rows = []
        for eps in cfg.eps:
            row = {"n": n, "beta": beta, "k": k, "eps": eps, "t_mix": None, "t_mix_over_nlogn": None,
                   "tmix_lower": lower, "prediction": prediction}
            if prediction == "Slow" and n > SLOW_EXACT_MAX_N:
                row["status"] = "bottleneck_only"
            else:
                try:
                    t = ec.t_mix_exact(params, eps, t_max=cfg.t_max, chain=chain, pi=pi,
                                       all_starts=cfg.all_starts)
                    row.update(t_mix=t, t_mix_over_nlogn=t / _nlogn(n), status="ok")
                except ec.CapExhausted as exc:
                    row["status"] = f"cap_exhausted(d={exc.last_d:.6g})"
            rows.append(row)
        return rows

    rows = [r for chunk in _pmap(cfg, one, tasks) for r in chunk]
    trailers = []
    for beta, spec, k in points:
        for eps in cfg.eps:
            pts = [(r["n"], r["t_mix"]) for r in rows
                   if r["beta"] == beta and r["k"] == k and r["eps"] == eps and r["t_mix"] is not None]
            if len(pts) >= 4:
                trailers.append({"fit": {"beta": beta, "k": k, "k_spec": spec, "eps": eps,
                                         **_fit_or_note(sorted(pts), "poly_nlogn")}})
    status = EXIT_CAP if any(r["status"].startswith("cap_exhausted") for r in rows) else EXIT_OK
    return Table(columns, rows, trailers, status)


def mix_couple(cfg):
    points = resolved_points(cfg)
    tasks = [(p, n) for p in points for n in cfg.n]
    replicas = cfg.replicas or DEFAULT_REPLICAS["mix-couple"]

    def cap_for(n):
        return cfg.cap or max(1, math.ceil(20.0 * _nlogn(max(n, 2))))

    if cfg.trace:
        def trace(indexed):
            i, ((beta, _, k), n) = indexed
            params = ModelParams(n, beta, k)
            rng = RngStream(cfg.seed, i).child(0)
            sample = dyn.sample_stationary_config(params, rng)
            run = dyn.coupling_time(params, _start_config(cfg.start, n), sample.config, cap_for(n), rng,
                                    exact_stationary=sample.exact_stationary)
            return run

        runs = _pmap(cfg, trace, list(enumerate(tasks)))
        rows = [{"n": r.params.n, "beta": r.params.beta, "k": r.params.k, **row} for r in runs for row in r.rows()]
        trailers = [{"trace": r.header()} for r in runs]
        status = EXIT_OK if all(r.coalesced_at is not None for r in runs) else EXIT_CAP
        return Table(["n", "beta", "k", "t", "rho", "sx", "sy"], rows, trailers, status)

    def one(indexed):
        i, ((beta, _, k), n) = indexed
        params = ModelParams(n, beta, k)
        cap = cap_for(n)
        done, exact = dyn.coupling_times(params, _start_config(cfg.start, n), replicas, cap,
                                         RngStream(cfg.seed, i))
        return params, cap, done, exact

    results = _pmap(cfg, one, list(enumerate(tasks)))
    columns = ["n", "beta", "k", "replica", "coalesced_at", "coalesced", "t_over_nlogn"]
    rows, trailers = [], []
    for params, cap, done, exact in results:
        scale = _nlogn(params.n)
        for r, t in enumerate(done.tolist()):
            ok = t >= 0
            rows.append({"n": params.n, "beta": params.beta, "k": params.k, "replica": r,
                         "coalesced_at": t if ok else None, "coalesced": ok,
                         "t_over_nlogn": t / scale if ok else None})
        hit = done[done >= 0]
        trailers.append({"summary": {
            **params.to_dict(), "replicas": replicas, "cap": cap, "start": cfg.start,
            "exact_stationary": exact, "coalesced_fraction": float(hit.size / replicas),
            "median_t": float(np.median(hit)) if hit.size else None,
            "max_t": int(hit.max()) if hit.size else None,
        }})
    status = EXIT_OK if all((d >= 0).all() for _, _, d, _ in results) else EXIT_CAP
    return Table(columns, rows, trailers, status)


def coupling_contraction(cfg):
    points = resolved_points(cfg)
    if cfg.mode == "profile":
        grid = cfg.z or [i / 1000 for i in range(1, 1001)]
        columns = ["beta", "k", "z", "local", "aggregate", "local_expands", "aggregate_contracts"]
        rows, trailers = [], []
        for prof in _pmap(cfg, lambda p: eq.contraction_profile(p[0], p[2], grid), points):
            rows.extend(prof.rows())
            trailers.append({"summary": {"beta": prof.beta, "k": prof.k,
                                         "max_local": float(prof.local.max()),
                                         "max_aggregate": float(prof.aggregate.max())}})
        return Table(columns, rows, trailers)

    if len(cfg.n) != 1:
        raise ConfigError("n", "empirical mode takes a single system size")
    n = cfg.n[0]
    m = cfg.replicas or DEFAULT_REPLICAS["coupling-contraction"]
    if m < 10**4:
        raise ConfigError("replicas", "empirical mode needs at least 10^4 replicas")
    zs = cfg.z or [0.0, 0.25, 0.5]
    tasks = [(p, z) for p in points for z in zs]

    def one(indexed):
        i, ((beta, _, k), z) = indexed
        params = ModelParams(n, beta, k)
        s_sigma = int(round(z * n))
        sigma, tau = dyn.neighbour_pair(n, s_sigma)
        mean, se = dyn.empirical_mean_step_distance(params, sigma, tau, m, RngStream(cfg.seed, i))
        formula = dyn.mean_distance_formula(params, sigma.total_spin, tau.total_spin)
        allowed = 3.0 * se + 5.0 / n**2
        return {"n": n, "beta": beta, "k": k, "z": z, "s_sigma": s_sigma, "mean_rho": mean,
                "stderr": se, "formula": formula, "deviation": mean - formula,
                "within": abs(mean - formula) <= allowed}

    columns = ["n", "beta", "k", "z", "s_sigma", "mean_rho", "stderr", "formula", "deviation", "within"]
    return Table(columns, _pmap(cfg, one, list(enumerate(tasks))))


def bottleneck(cfg):
    points = resolved_points(cfg)
    tasks = [(p, n) for p in points for n in cfg.n]
    rates = {(beta, k): eq.slow_mixing_rate(beta, k, cfg.tol) for beta, _, k in points}

    def one(task):
        (beta, _, k), n = task
        slow = rates[(beta, k)]
        zprime = cfg.zprime if cfg.zprime is not None else (slow[0] if slow else 0.0)
        return ec.bottleneck(ModelParams(n, beta, k), min(zprime, (n - 1) / n)).to_row()

    rows = _pmap(cfg, one, tasks)
    trailers = []
    for beta, spec, k in points:
        pts = sorted((r["n"], 1.0 / r["phi_star"]) for r in rows if r["beta"] == beta and r["k"] == k)
        slow = rates[(beta, k)]
        record = {"beta": beta, "k": k, "k_spec": spec,
                  "predicted_rate": slow[2] if slow else None,
                  "z_prime": slow[0] if slow else None, "z_tilde": slow[1] if slow else None}
        if len(pts) >= 4:
            record.update(_fit_or_note(pts, "exponential"))
        trailers.append({"fit": record})
    return Table(["n", "beta", "k", "zprime", "phi", "phi_star", "tmix_lower"], rows, trailers)


def scaling_fit(cfg):
    try:
        table = read_table(cfg.input)
    except OSError as exc:
        raise ConfigError("input", str(exc)) from None
    points = []
    for i, row in enumerate(table):
        if cfg.x_col not in row or cfg.y_col not in row:
            raise ConfigError("input", f"row {i + 1} lacks column {cfg.x_col!r} or {cfg.y_col!r}")
        x, y = row[cfg.x_col], row[cfg.y_col]
        if y in ("", None):
            continue
        try:
            points.append((float(x), float(y)))
        except (TypeError, ValueError):
            raise ConfigError("input", f"row {i + 1}: non-numeric value") from None
    points.sort()
    fit = fit_scaling(points, cfg.model)
    rows = []
    for (x, y), res in zip(points, fit.residuals):
        rows.append({"n": x, "value": y, "residual": res})
    return Table(["n", "value", "residual"], rows, [{"fit": fit.to_dict()}])


RUNNERS = {
    "phase-diagram": phase_diagram,
    "critical-curves": critical_curves,
    "mix-exact": mix_exact,
    "mix-couple": mix_couple,
    "coupling-contraction": coupling_contraction,
    "bottleneck": bottleneck,
    "scaling-fit": scaling_fit,
}
