"""End-to-end analysis of a trajectory: modulation -> transformed variables -> virial.

A sequential pass fixes the modulation parameters frame by frame (each frame
seeds the next Newton solve). The per-frame work is then split into
contiguous chunks that run in a thread pool; each chunk re-derives eps from
the stored parameters, so no full-field history is kept in memory.
The worker count comes from ``GPL_WORKERS`` (default 1).
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, WeightSpec, integrate, l2_norm, weighted_norm
from .modulation import (
    ModulationError,
    decompose,
    epsilon_system_rhs,
    modulation_bound_ratio,
    parameter_derivatives,
    q_identity_error,
    zeta_identity_error,
)
from .soliton import SQRT2
from .transform import (
    S_dR_residual,
    forcing_terms,
    split_consistency,
    to_transformed,
    transformed_rhs,
    w1_alternative,
)
from .virial import FrameScalars, coercivity_check, remainder_R_direct, frame_scalars, virial_balance

log = logging.getLogger(__name__)

FRAME_KEYS = (
    "eps_res1", "eps_res2", "tr_res1", "tr_res2", "w1_alt_err", "q2w2_rel", "s_star_roundtrip",
    "split_err", "zeta_err", "q_err", "sdR", "R_direct", "sharp_margin", "F21_w", "F22_w",
    "N1_max", "N2_max", "F22_max", "N_loc_sq", "mod_ratio", "leak_eps2", "leak_P1", "leak_Theta11",
    "eps_max",
)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GPL_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass
class Analysis:
    grid: Grid
    c_frame: float
    gamma: float
    t: np.ndarray
    shift: np.ndarray
    a: np.ndarray
    c: np.ndarray
    theta: np.ndarray
    r: np.ndarray  # (n, 3) orthogonality residuals
    a_dot: np.ndarray
    c_dot: np.ndarray
    theta_dot: np.ndarray
    frame: dict  # key -> per-frame array (nan where undefined)
    scalars: list
    virial: list
    fields: dict = field(default_factory=dict)  # k -> (v1, w1, w2)

    @property
    def theta12(self) -> np.ndarray:
        return -self.theta_dot / SQRT2

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(v, name) for v in self.virial])

    def window(self, t0: float, t1: float):
        return [v for v in self.virial if t0 - 1e-12 <= v.t <= t1 + 1e-12]


def modulation_pass(grid: Grid, times, states, c_frame: float, tol: float, max_iter: int = 50):
    n = len(times)
    shift = np.empty(n)
    c = np.empty(n)
    theta = np.empty(n)
    r = np.empty((n, 3))
    guess = None
    for k in range(n):
        try:
            fr = decompose(grid, states[k], times[k], guess, c_frame, tol, max_iter)
        except ModulationError as exc:
            raise ModulationError(f"decomposition failed at t={times[k]:.6g}: {exc}") from None
        shift[k], c[k], theta[k] = fr.shift, fr.c, fr.theta
        r[k] = fr.residuals
        guess = (fr.shift, fr.c, fr.theta)
    return shift, c, theta, r


def _chunk(grid, times, states, c_frame, params, derivs, k0, k1, gamma, band, tol,
           field_stride):
    shift, cs, theta = params
    n = len(times)
    t = np.asarray(times)
    out = {key: np.full(k1 - k0, np.nan) for key in FRAME_KEYS}
    scal: list[FrameScalars] = []
    fields_out = {}
    w_gamma = WeightSpec(gamma)
    w_f = WeightSpec(0.5 * gamma)
    cache = {}

    def build(k):
        if k not in cache:
            fr = decompose(grid, states[k], t[k], (shift[k], cs[k], theta[k]), c_frame, tol)
            tf = to_transformed(fr)
            cache[k] = (fr, tf)
        return cache[k]

    for k in range(k0, k1):
        fr, tf = build(k)
        dk = derivs.at(k)
        ft = forcing_terms(fr, tf, dk)
        s = frame_scalars(tf, ft, dk[1])
        scal.append(s)
        i = k - k0
        g = grid
        p = fr.profile
        ctx = tf.ctx
        out["w1_alt_err"][i] = np.max(np.abs(w1_alternative(fr, tf) - tf.w1)[band])
        nw2 = l2_norm(g, tf.w2)
        out["q2w2_rel"][i] = abs(integrate(g, p.Q**2 * tf.w2)) / nw2 if nw2 > 0 else 0.0
        e2p = ctx.perp_project(fr.eps2)
        ne2 = l2_norm(g, fr.eps2)
        out["s_star_roundtrip"][i] = l2_norm(g, ctx.apply_S_star(tf.w2) - e2p) / ne2 if ne2 > 0 else 0.0
        out["split_err"][i] = split_consistency(tf, ft)
        out["zeta_err"][i] = zeta_identity_error(fr, states[k])
        out["q_err"][i] = q_identity_error(fr)
        out["sdR"][i] = S_dR_residual(ctx)
        out["R_direct"][i] = remainder_R_direct(tf, ft, dk[1])
        out["sharp_margin"][i] = coercivity_check(tf)[2]
        out["F21_w"][i] = weighted_norm(g, ft.F21, w_f)
        out["F22_w"][i] = weighted_norm(g, ft.F22, w_f)
        out["N1_max"][i] = np.max(np.abs(ft.N1))
        out["N2_max"][i] = np.max(np.abs(ft.N2))
        out["F22_max"][i] = np.max(np.abs(ft.F22))
        dw2 = ctx.d(tf.w2)
        out["N_loc_sq"][i] = integrate(g, w_gamma(g.x) * (tf.w1**2 + dw2**2 + ctx.d(tf.w2, 2) ** 2))
        out["mod_ratio"][i] = modulation_bound_ratio(fr, dk, gamma)
        out["leak_eps2"][i] = ft.leaks["eps2"]
        out["leak_P1"][i] = ft.leaks["P1"]
        out["leak_Theta11"][i] = ft.leaks["Theta11"]
        out["eps_max"][i] = np.max(np.abs(fr.eps))
        if 0 < k < n - 1:
            fm, tm = build(k - 1)
            fp, tp = build(k + 1)
            dt = t[k + 1] - t[k - 1]
            e1, e2 = epsilon_system_rhs(p, fr.eps1, fr.eps2, dk)
            out["eps_res1"][i] = np.max(np.abs((fp.eps1 - fm.eps1) / dt - e1)[band])
            out["eps_res2"][i] = np.max(np.abs((fp.eps2 - fm.eps2) / dt - e2)[band])
            rhs1, rhs2 = transformed_rhs(tf, ft)
            out["tr_res1"][i] = np.max(np.abs((tp.w1 - tm.w1) / dt - rhs1)[band])
            out["tr_res2"][i] = np.max(np.abs((tp.w2 - tm.w2) / dt - rhs2)[band])
        if field_stride and k % field_stride == 0:
            fields_out[k] = (tf.v1.copy(), tf.w1.copy(), tf.w2.copy())
        for old in [j for j in cache if j < k]:
            del cache[old]
    return k0, out, scal, fields_out


def analyze(grid: Grid, times, states, c_frame: float, gamma: float | None = None,
            edge_band: float = 2.0, ortho_tol: float = 1e-13, workers: int | None = None,
            field_stride: int = 0) -> Analysis:
    """Run the full analysis. ``field_stride > 0`` keeps (v1, w1, w2) every that many frames."""
    times = np.asarray(times, dtype=float)
    n = len(times)
    if n < 3:
        raise ValueError(f"insufficient frames for time derivatives: need >= 3, got {n}")
    beta = float(np.sqrt(2.0 - c_frame**2))
    gamma = 0.25 * beta if gamma is None else gamma
    shift, c, theta, r = modulation_pass(grid, times, states, c_frame, ortho_tol)
    a = shift + c_frame * times
    derivs = parameter_derivatives(times, a, c, theta)
    band = np.abs(grid.x) <= grid.half_length - edge_band
    workers = default_workers() if workers is None else workers
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    jobs = [(int(bounds[i]), int(bounds[i + 1])) for i in range(len(bounds) - 1)]
    args = (grid, times, states, c_frame, (shift, c, theta), derivs)
    if len(jobs) == 1:
        results = [_chunk(*args, 0, n, gamma, band, ortho_tol, field_stride)]
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            futs = [pool.submit(_chunk, *args, k0, k1, gamma, band, ortho_tol, field_stride)
                    for k0, k1 in jobs]
            results = [f.result() for f in futs]
    results.sort(key=lambda x: x[0])
    frame = {key: np.concatenate([res[1][key] for res in results]) for key in FRAME_KEYS}
    scalars = [s for res in results for s in res[2]]
    fields = {}
    for res in results:
        fields.update(res[3])
    return Analysis(grid, c_frame, gamma, times, shift, a, c, theta, r, derivs.a_dot,
                    derivs.c_dot, derivs.theta_dot, frame, scalars, virial_balance(scalars), fields)


def summarize(an: Analysis, t_window: tuple[float, float] | None = None) -> dict:
    """Scalar summary of an analysis; the balance window defaults to [1, t_end - 1]."""
    t_end = float(an.t[-1])
    if t_window is None:
        t_window = (1.0, t_end - 1.0)
    win = an.window(*t_window)
    if not win:
        win = an.virial
    n = np.sqrt(np.array([s.N_sq for s in an.scalars]))
    I = np.array([s.I for s in an.scalars])
    first = an.t <= an.t[0] + 1.0
    n_first = float(np.max(n[first]))
    drops = np.maximum.accumulate(I) - I
    fr = an.frame
    vt = np.array([v.t for v in an.virial])
    i_dot = an.series("I_dot")
    q = an.series("Q")
    return {
        "t_end": t_end,
        "n_frames": int(len(an.t)),
        "max_ortho_residual": float(np.max(np.abs(an.r))),
        "max_eps_residual": float(np.nanmax(np.maximum(fr["eps_res1"], fr["eps_res2"]))),
        "max_transformed_residual": float(np.nanmax(np.maximum(fr["tr_res1"], fr["tr_res2"]))),
        "max_w1_alt_err": float(np.max(fr["w1_alt_err"])),
        "max_q2w2_rel": float(np.max(fr["q2w2_rel"])),
        "max_s_star_roundtrip": float(np.max(fr["s_star_roundtrip"])),
        "max_split_err": float(np.max(fr["split_err"])),
        "max_zeta_err": float(np.max(fr["zeta_err"])),
        "max_q_err": float(np.max(fr["q_err"])),
        "max_balance_residual": float(max(v.balance_residual for v in win)),
        "max_boundary_flux": float(max(abs(v.flux) for v in win)),
        "balance_window": list(t_window),
        "min_coercivity_margin": float(min(s.coercivity_margin for s in an.scalars)),
        "int_N_sq": float(an.virial[-1].int_N_sq_running) if an.virial else 0.0,
        "N_end_over_N0": float(n[-1] / n[0]) if n[0] > 0 else 0.0,
        "N_end_over_N_first_second": float(n[-1] / n_first) if n_first > 0 else 0.0,
        "I_max_drop": float(np.max(drops)),
        "I_abs_max": float(np.max(np.abs(I))),
        "I_abs_max_first_second": float(np.max(np.abs(I[first]))),
        "min_Idot_minus_0p4Q": float(np.min(i_dot - 0.4 * q)) if len(vt) else 0.0,
        "max_Q": float(np.max(q)) if len(vt) else 0.0,
    }


def virial_rows(an: Analysis):
    return [v.row() for v in an.virial]


def modulation_rows(an: Analysis):
    return [
        [an.t[k], an.a[k], an.c[k], an.theta[k], an.a_dot[k], an.c_dot[k], an.theta_dot[k],
         an.r[k, 0], an.r[k, 1], an.r[k, 2]]
        for k in range(len(an.t))
    ]
