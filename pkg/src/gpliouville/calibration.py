"""Reference runs and refinement-calibrated tolerances stored in ``data/golden.json``.

Tolerances are set from a (h, dt) -> (h/2, dt/2) pair: tol = SAFETY * coarse value,
accepted only if the observed order is at least MIN_ORDER.
"""
from __future__ import annotations

import json
import logging
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .config import RunConfig, parse_config
from .evolution import perturbed_soliton, simulate
from .pipeline import analyze, summarize

log = logging.getLogger(__name__)

SAFETY = 2.0
MIN_ORDER = 1.5

DEFAULT_RUN = RunConfig(c0=0.5, c_frame=0.5, delta=1e-2, t_end=10.0)
# short run, finer snapshots: the system residuals are dominated by the snapshot spacing
SYSTEM_RUN = DEFAULT_RUN.replace(t_end=1.0, snapshot_stride=5)
# wide domain so that dispersive radiation does not reach +-L before t = 9
VIRIAL_RUN = DEFAULT_RUN.replace(half_length=160.0, n_points=16001, snapshot_stride=20)
TREND_RUN = DEFAULT_RUN.replace(t_end=40.0, snapshot_stride=20)
SLOPE_RUN = DEFAULT_RUN.replace(t_end=2.0)
SLOPE_DELTAS = (4e-3, 8e-3, 1.6e-2)

TREND_THRESHOLDS = {
    "N_ratio_max": 0.5,  # N(t_end) / max N over the first second
    "int_N_sq_tail_fraction_max": 0.1,  # share of int N^2 dt gained over the last quarter
}


def refined(cfg: RunConfig) -> RunConfig:
    """Halve h and dt; the snapshot stride is kept, so the snapshot spacing halves too."""
    return cfg.replace(n_points=2 * (cfg.n_points - 1) + 1, dt=0.5 * cfg.dt)


def run(cfg: RunConfig, backend: str | None = None, field_stride: int = 0):
    ev = cfg.evolution(backend)
    grid = ev.grid
    psi0 = perturbed_soliton(grid, cfg.c0, cfg.delta, cfg.shape, cfg.seed, cfg.project)
    traj = simulate(psi0, ev)
    an = analyze(grid, traj.times, traj.states, cfg.c_frame, cfg.gamma, cfg.edge_band,
                 cfg.ortho_tol, field_stride=field_stride)
    return traj, an


def observed_order(coarse: float, fine: float) -> float:
    if fine <= 0 or coarse <= 0:
        return float("nan")
    return float(np.log2(coarse / fine))


def system_metrics(an) -> dict:
    f = an.frame
    return {
        "eps": float(np.nanmax(np.maximum(f["eps_res1"], f["eps_res2"]))),
        "transformed": float(np.nanmax(np.maximum(f["tr_res1"], f["tr_res2"]))),
    }


def virial_metric(an, window=(1.0, 9.0)) -> dict:
    win = an.window(*window)
    return {
        "balance": float(max(v.balance_residual for v in win)),
        "flux": float(max(abs(v.flux) for v in win)),
        "min_Q": float(min(v.Q for v in win)),
    }


def trend_metrics(an) -> dict:
    s = summarize(an)
    t = an.t
    n_sq = np.array([x.N_sq for x in an.scalars])
    total = trapezoid(n_sq, t)
    tail = t >= 0.75 * t[-1]
    tail_part = trapezoid(n_sq[tail], t[tail])
    return {
        "N_ratio": s["N_end_over_N_first_second"],
        "I_max_drop": s["I_max_drop"],
        "int_N_sq": float(total),
        "int_N_sq_tail_fraction": float(tail_part / total) if total > 0 else 0.0,
    }


def calibrate_pair(cfg: RunConfig, metric, backend=None) -> dict:
    _, an_c = run(cfg, backend)
    mc = metric(an_c)
    del an_c
    _, an_f = run(refined(cfg), backend)
    mf = metric(an_f)
    del an_f
    order = {k: observed_order(mc[k], mf[k]) for k in mc}
    return {"coarse": mc, "fine": mf, "order": order}


def golden_path() -> Path:
    return Path(str(resources.files("gpliouville") / "data" / "golden.json"))


def load_golden(path=None) -> dict:
    path = golden_path() if path is None else Path(path)
    if not path.exists():
        return {}
    return json.loads(path.read_text(encoding="utf-8"))


def golden_entry_for(cfg: RunConfig, golden: dict | None = None):
    golden = load_golden() if golden is None else golden
    for name, entry in golden.get("entries", {}).items():
        if entry.get("config_hash") == cfg.hash():
            return name, entry
    return None, None


def golden_config(entry: dict) -> RunConfig:
    return parse_config(entry["config"])


def regenerate(path=None, backend=None, parts=("default", "system", "virial", "trend")) -> dict:
    path = golden_path() if path is None else Path(path)
    golden = load_golden(path) or {"entries": {}}
    golden["version"] = __version__
    golden["safety_factor"] = SAFETY
    golden["min_order"] = MIN_ORDER
    entries = golden.setdefault("entries", {})

    def entry(cfg):
        return {"config": cfg.to_text(), "config_hash": cfg.hash()}

    if "default" in parts:
        log.info("golden: default run")
        _, an = run(DEFAULT_RUN, backend)
        e = entry(DEFAULT_RUN)
        e["summary"] = summarize(an)
        e["rtol"] = 1e-6
        entries["default"] = e
    if "system" in parts:
        log.info("golden: system residual refinement pair")
        res = calibrate_pair(SYSTEM_RUN, system_metrics, backend)
        e = entry(SYSTEM_RUN)
        e.update(res)
        e["converged"] = bool(min(res["order"].values()) >= MIN_ORDER)
        e["tol_system_eps"] = SAFETY * res["coarse"]["eps"]
        e["tol_system_transformed"] = SAFETY * res["coarse"]["transformed"]
        entries["system"] = e
    if "virial" in parts:
        log.info("golden: virial refinement pair")
        res = calibrate_pair(VIRIAL_RUN, virial_metric, backend)
        e = entry(VIRIAL_RUN)
        e.update(res)
        e["converged"] = bool(res["order"]["balance"] >= MIN_ORDER)
        e["tol_virial"] = SAFETY * res["coarse"]["balance"]
        e["window"] = [1.0, 9.0]
        entries["virial"] = e
    if "trend" in parts:
        log.info("golden: trend run")
        _, an = run(TREND_RUN, backend)
        e = entry(TREND_RUN)
        tol_virial = entries.get("virial", {}).get("tol_virial")
        thr = dict(TREND_THRESHOLDS)
        if tol_virial is not None:
            thr["I_ripple_max"] = tol_virial * TREND_RUN.t_end
        e["thresholds"] = thr
        e["measured"] = trend_metrics(an)
        entries["trend"] = e
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return golden
