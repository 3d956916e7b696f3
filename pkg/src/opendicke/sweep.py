"""Experiment protocols, parallel execution and result files.

Every protocol writes one CSV (``<protocol>.csv``) and a JSON manifest
(``manifest.json``) into the output directory. CSV columns are the swept
parameters in lexicographic order, then the observable columns in schema
order, then solver metadata. Wall times only go to the manifest, so two runs
of the same configuration produce byte-identical CSVs.

Grid points that differ only in ``E`` form a chain that is processed in grid
order by one worker: with an automatic Fock cutoff, each point's cutoff
search starts from the cutoff the previous point converged at, and its
steady-state solve starts from the previous state.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import multiprocessing
import platform
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, dicke, oracle
from .config import RunConfig, write_text_atomic
from .liouvillian import assemble
from .observables import ObservableRecord, observe, ssi_summed
from .params import ModelParams
from .solvers import (
    FockCriteria,
    FockCutoffError,
    auto_fock_cutoff,
    cascade_protocol,
    liouvillian_gap,
    steady_state,
)

log = logging.getLogger(__name__)

META_COLUMNS = ("status", "M", "method", "residual", "fock_report")
GAP_COLUMNS = ("lambda1_re", "lambda1_im", "gap_over_gamma", "gap_flagged")


@dataclass
class PointResult:
    index: int
    point: dict
    status: str = "ok"
    error: str = ""
    values: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    wall_time: float = 0.0


# single points ------------------------------------------------------------------


def _criteria(cfg: RunConfig, M_start: int = 1) -> FockCriteria:
    s = cfg.solver
    return FockCriteria(
        M_start=M_start,
        top_pop_tol=s.fock_top_pop_tol,
        rel_change=s.fock_rel_change,
        M_max=s.fock_M_max,
        max_dim=s.fock_max_dim,
    )


def _observables(cfg: RunConfig, state, params: ModelParams) -> dict:
    rec = observe(state, params.kappa, with_p_lm=cfg.output.with_p_lm)
    values = rec.flat()
    if cfg.output.ssi_summed:
        values["ssi_sum_a"], values["ssi_sum_b"] = ssi_summed(state)
    return values


def _solve_point(cfg: RunConfig, params: ModelParams, chain: dict):
    """Steady state at ``params``; ``chain`` carries cutoff and state between points."""
    tol = cfg.solver.tol
    if cfg.solver.fock == "auto":
        crit = _criteria(cfg, chain.get("M", 1))
        M, _, st = auto_fock_cutoff(params, crit, tol=tol, x0=chain.get("state"), return_steady=True)
        L = assemble(params, M)
    else:
        M = int(cfg.solver.fock)
        L = assemble(params, M)
        st = steady_state(L, tol, method=cfg.solver.method, x0=chain.get("state"))
    chain["M"] = M
    chain["state"] = st.state
    return L, st


def _run_steady_point(cfg: RunConfig, idx: int, point: dict, chain: dict, with_gap: bool) -> PointResult:
    res = PointResult(idx, point)
    t0 = time.perf_counter()
    try:
        params = cfg.params_at(point)
        L, st = _solve_point(cfg, params, chain)
        res.values = _observables(cfg, st.state, params)
        res.meta = {
            "M": st.M,
            "method": st.method,
            "residual": st.residual,
            "fock_report": st.fock_report,
        }
        if with_gap:
            gap = liouvillian_gap(L, k=cfg.solver.gap_k, tol=cfg.solver.tol)
            res.meta.update(
                lambda1_re=gap.lambda1.real,
                lambda1_im=gap.lambda1.imag,
                gap_over_gamma=gap.normalized,
                gap_flagged=int(gap.flagged),
            )
    except Exception as exc:  # a failing point must not take the sweep down
        res.status = "failed"
        res.error = f"{type(exc).__name__}: {exc}"
        log.error("point %d %s failed: %s", idx, point, res.error)
        log.debug("%s", traceback.format_exc())
        chain.pop("state", None)
    res.wall_time = time.perf_counter() - t0
    return res


def _run_chain(task) -> list[PointResult]:
    cfg, indexed, with_gap = task
    chain: dict = {}
    return [_run_steady_point(cfg, i, p, chain, with_gap) for i, p in indexed]


def chains(cfg: RunConfig) -> list[list[tuple[int, dict]]]:
    """Grid points grouped by everything but ``E``, in grid order."""
    groups: dict = {}
    for i, p in enumerate(cfg.points()):
        key = tuple((k, v) for k, v in p.items() if k != "E")
        groups.setdefault(key, []).append((i, p))
    return list(groups.values())


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ctx.Pool(min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks, chunksize=1)


# column layout ------------------------------------------------------------------


def observable_columns(cfg: RunConfig) -> list[str]:
    """Observable columns for every N the configuration can produce."""
    Ns = sorted({int(round(p.get("N", cfg.model.N))) for p in cfg.points()}) or [cfg.model.N]
    base = [f for f in ObservableRecord.__dataclass_fields__ if f not in ("ssi", "R_by_l", "p_lm")]
    cols = []
    for f in ObservableRecord.__dataclass_fields__:
        if f == "ssi":
            cols += ["ssi_a1", "ssi_a2", "ssi_b1", "ssi_b2"]
        elif f == "R_by_l":
            ls = sorted({l for N in Ns for l in dicke.l_values(N)}, reverse=True)
            cols += [f"R_l{l:g}" for l in ls]
        elif f == "p_lm":
            if cfg.output.with_p_lm:
                keys = sorted({k for N in Ns for k in dicke.build_coeff_table(N).levels}, key=lambda k: (-k[0], k[1]))
                cols += [f"p_l{l:g}_m{m:g}" for l, m in keys]
        elif f in base:
            cols.append(f)
    if cfg.output.ssi_summed:
        cols += ["ssi_sum_a", "ssi_sum_b"]
    return cols


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(float(v)))
    return str(v)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# protocols -----------------------------------------------------------------------


def run_steady_sweep(cfg: RunConfig, with_gap: bool = False) -> list[PointResult]:
    tasks = [(cfg, c, with_gap) for c in chains(cfg)]
    results = [r for group in _map(_run_chain, tasks, int(cfg.workers)) for r in group]
    return sorted(results, key=lambda r: r.index)


def sweep_table(cfg: RunConfig, results: list[PointResult], with_gap: bool = False) -> str:
    obs_cols = observable_columns(cfg)
    meta_cols = list(META_COLUMNS) + (list(GAP_COLUMNS) if with_gap else [])
    header = cfg.swept + obs_cols + meta_cols
    rows = []
    for r in results:
        row = [r.point[k] for k in cfg.swept]
        row += [r.values.get(c, math.nan) for c in obs_cols]  # failed points: nan
        row += [r.status] + [r.meta.get(c) for c in meta_cols[1:]]
        rows.append(row)
    return _csv_text(header, rows)


def run_cascade(cfg: RunConfig) -> tuple[list[PointResult], str, dict]:
    """Quench protocol; the E grid is the search grid for the drive maximizing R(l_min)."""
    res = PointResult(0, {})
    t0 = time.perf_counter()
    info: dict = {}
    header = ["t"]
    rows: list = []
    try:
        params = cfg.model.params()
        E_grid = cfg.grids["E"].values() if "E" in cfg.grids else np.array([params.E])
        if cfg.solver.fock == "auto":
            M = max(auto_fock_cutoff(params.replace(E=float(E)), _criteria(cfg), tol=cfg.solver.tol)[0] for E in E_grid)
        else:
            M = int(cfg.solver.fock)
        c = cfg.cascade
        out = cascade_protocol(
            params, E_grid, M, t_max=c.t_max, t_min=c.t_min, n_out=c.n_out, method=c.integrator,
            rtol=cfg.solver.rtol, atol=cfg.solver.atol,
        )
        ls = dicke.l_values(params.N)
        header += [f"p_dark_l{l:g}" for l in ls] + ["total_dark"]
        for i, t in enumerate(out.times):
            rows.append([t] + [out.dark[l][i] for l in ls] + [out.total_dark[i]])
        info = {
            "E_star": out.E_star,
            "R_lmin_grid": [_fmt(x) for x in out.R_lmin_grid],
            "M": M,
            "peak_total_dark": float(np.max(out.total_dark)),
            "t_peak_total_dark": float(out.times[int(np.argmax(out.total_dark))]),
            "max_trace_drift": out.trajectory.max_trace_drift,
        }
        res.meta = {"M": M}
    except Exception as exc:
        res.status = "failed"
        res.error = f"{type(exc).__name__}: {exc}"
        log.error("cascade failed: %s", res.error)
    res.wall_time = time.perf_counter() - t0
    return [res], _csv_text(header, rows), info


def oracle_checks(N: int, M: int, seed: int = 0, draws: int = 3) -> list[tuple]:
    """Equivalence of the reduced generator with the full-space one on random states."""
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(draws):
        params = oracle.random_params(rng, N)
        L = assemble(params, M)
        rho = oracle.random_density_matrix(N, M, rng)
        lhs = L.matrix @ oracle.extract(rho, N, M).coeffs
        rhs = oracle.extract(oracle.apply_full_liouvillian(params, M, rho), N, M).coeffs
        err = float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300))
        rows.append((N, M, k, "generator", err, 1e-10, err <= 1e-10))
    # steady state of the resonant model against the full-space null vector
    params = oracle.random_params(rng, N).replace(delta0=0.0, delta1=0.0)
    ours = steady_state(assemble(params, M)).state.coeffs
    ref = oracle.extract(oracle.full_steady_state(params, M), N, M).coeffs
    err = float(np.max(np.abs(ours - ref)))
    rows.append((N, M, 0, "steady", err, 1e-8, err <= 1e-8))
    return rows


def run_oracle_check(cfg: RunConfig) -> tuple[list[PointResult], str]:
    results = []
    rows = []
    for i, point in enumerate(cfg.points()):
        res = PointResult(i, point)
        t0 = time.perf_counter()
        N = int(round(point.get("N", cfg.model.N)))
        M = int(cfg.solver.fock) if cfg.solver.fock != "auto" else 3
        try:
            checks = oracle_checks(N, M, seed=i)
            rows += checks
            if not all(c[-1] for c in checks):
                res.status = "failed"
                res.error = "oracle mismatch"
        except Exception as exc:
            res.status = "failed"
            res.error = f"{type(exc).__name__}: {exc}"
        res.wall_time = time.perf_counter() - t0
        results.append(res)
    text = _csv_text(["N", "M", "draw", "check", "rel_error", "tolerance", "passed"], rows)
    return results, text


# driver --------------------------------------------------------------------------


def manifest(cfg: RunConfig, results: list[PointResult], started: float, extra: dict | None = None) -> dict:
    return {
        "protocol": cfg.protocol,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "versions": {
            "opendicke": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "tolerances": asdict(cfg.solver),
        "points": [
            {"index": r.index, "point": r.point, "status": r.status, "error": r.error,
             "M": r.meta.get("M"), "wall_time": r.wall_time}
            for r in results
        ],
        "n_failed": sum(r.status != "ok" for r in results),
        "result": extra or {},
        "started": started,
        "finished": time.time(),
    }


def run(cfg: RunConfig, out_dir=None) -> int:
    """Execute ``cfg`` and write ``<protocol>.csv`` plus ``manifest.json``.

    Returns 0 when every point succeeded and 1 otherwise.
    """
    out = Path(out_dir or cfg.output.dir)
    started = time.time()
    extra = None
    if cfg.protocol in ("steady-sweep", "gap-sweep"):
        with_gap = cfg.protocol == "gap-sweep"
        results = run_steady_sweep(cfg, with_gap)
        text = sweep_table(cfg, results, with_gap)
        ok = [r for r in results if r.status == "ok"]
        if "E" in cfg.grids and ok:
            extra = {"transitions": _transitions(cfg, results)}
    elif cfg.protocol == "cascade":
        results, text, extra = run_cascade(cfg)
    else:
        results, text = run_oracle_check(cfg)
    write_text_atomic(out / f"{cfg.protocol}.csv", text)
    write_text_atomic(out / "manifest.json", json.dumps(manifest(cfg, results, started, extra), indent=2, default=_fmt) + "\n")
    n_failed = sum(r.status != "ok" for r in results)
    if n_failed:
        log.error("%d of %d points failed", n_failed, len(results))
    return 1 if n_failed else 0


# transition ------------------------------------------------------------------------


@dataclass
class TransitionEstimate:
    """Drive at the g2 maximum plus the steepest-excitation estimate.

    ``flagged`` is set (and ``E_star`` is NaN) when g2 has no interior
    maximum over the grid.
    """

    E_star: float
    E_slope: float
    index: int
    slope_index: int
    flagged: bool
    reason: str = ""


def locate_transition(E, g2, n_norm) -> TransitionEstimate:
    """Transition drive from sweep columns sorted by ``E``.

    The primary estimate is the drive at the interior g2(0) maximum; the
    secondary is the grid point closest to the steepest rise of ``n/N``
    (largest finite-difference slope, reported at the left end of that
    interval and the midpoint's nearest grid point).
    """
    E = np.asarray(E, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    n_norm = np.asarray(n_norm, dtype=float)
    order = np.argsort(E)
    E, g2, n_norm = E[order], g2[order], n_norm[order]
    if len(E) >= 2:
        slope = np.abs(np.diff(n_norm) / np.diff(E))
        j = int(np.nanargmax(slope)) if np.any(np.isfinite(slope)) else 0
        mid = 0.5 * (E[j] + E[j + 1])
        slope_index = int(np.argmin(np.abs(E - mid)))
        E_slope = float(mid)
    else:
        slope_index, E_slope = 0, float("nan")
    finite = np.isfinite(g2)
    if finite.sum() < 3:
        return TransitionEstimate(float("nan"), E_slope, -1, slope_index, True, "fewer than three finite g2 values")
    i = int(np.nanargmax(np.where(finite, g2, -np.inf)))
    fin = np.nonzero(finite)[0]
    if i == fin[0] or i == fin[-1]:
        return TransitionEstimate(float("nan"), E_slope, -1, slope_index, True, "g2 maximum on the grid boundary (no interior maximum)")
    return TransitionEstimate(float(E[i]), E_slope, int(order[i]), int(order[slope_index]), False)


def _transitions(cfg: RunConfig, results: list[PointResult]) -> list[dict]:
    out = []
    for chain in chains(cfg):
        rs = [results[i] for i, _ in chain if results[i].status == "ok"]
        if len(rs) < 3:
            continue
        est = locate_transition(
            [r.point["E"] for r in rs], [r.values["g2"] for r in rs], [r.values["n_tls_norm"] for r in rs]
        )
        key = {k: v for k, v in chain[0][1].items() if k != "E"}
        out.append({"group": key, **asdict(est)})
    return out
