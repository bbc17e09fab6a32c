"""Changes of variables (eps1, eps2) -> (v1, w2) -> (w1, w2) and the forcing terms
of the transformed system

    d_t w1 = (d^2 - beta^2) d^2 w2 + F2,
    d_t w2 = -w1 + 2 c d w2 + F1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import derivative, l2_norm
from .modulation import ModulationFrame, epsilon_system_rhs, nonlinear_terms, omega_terms
from .operators import OperatorContext
from .soliton import SQRT2

log = logging.getLogger(__name__)


@dataclass
class TransformedFrame:
    t: float
    c: float
    v1: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    ctx: OperatorContext
    leak: float = 0.0  # int eps2 Q_c removed before the inversion

    @property
    def grid(self):
        return self.ctx.grid

    @property
    def beta(self) -> float:
        return self.ctx.beta


def context_for(frame: ModulationFrame) -> OperatorContext:
    return OperatorContext(frame.profile)


def solve_S_star(ctx: OperatorContext, f: np.ndarray) -> tuple[np.ndarray, float]:
    """(S*)^{-1} of the Q-perp part of f; also returns the stripped mass int f Q."""
    leak = ctx.inner_Q(f)
    return ctx.invert_S_star(ctx.perp_project(f)), leak


def to_transformed(frame: ModulationFrame, ctx: OperatorContext | None = None) -> TransformedFrame:
    ctx = context_for(frame) if ctx is None else ctx
    v1 = ctx.apply_S(frame.eps1)
    w2, leak = solve_S_star(ctx, frame.eps2)
    w1 = v1 + frame.c * ctx.apply_S(w2) + frame.eps_sq / SQRT2
    return TransformedFrame(frame.t, frame.c, v1, w1, w2, ctx, leak)


def w1_alternative(frame: ModulationFrame, tf: TransformedFrame) -> np.ndarray:
    """w1 = eps1' + 2 c w2' + zeta / sqrt2."""
    g = tf.grid
    return derivative(g, frame.eps1) + 2.0 * frame.c * derivative(g, tf.w2) + frame.zeta / SQRT2


@dataclass
class ForcingTerms:
    N1: np.ndarray
    N2: np.ndarray
    Omega1: np.ndarray
    Omega11: np.ndarray
    Omega12: np.ndarray
    Omega2: np.ndarray
    W: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Theta11: np.ndarray
    Theta12: float
    Theta2: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    F21: np.ndarray
    F22: np.ndarray
    leaks: dict

    @property
    def Theta1(self) -> np.ndarray:
        return self.Theta11 + self.Theta12


def forcing_terms(frame: ModulationFrame, tf: TransformedFrame,
                  derivs: tuple[float, float, float]) -> ForcingTerms:
    """All forcing terms of one frame given (a_dot, c_dot, theta_dot).

    d_t |eps|^2 inside F2 is replaced by the eps-equations of motion, so every
    term is an algebraic function of the frame.
    """
    ctx = tf.ctx
    p = frame.profile
    g = ctx.grid
    c, R = p.c, p.R
    a_dot, c_dot, th_dot = derivs
    da = a_dot - c
    e1, e2 = frame.eps1, frame.eps2
    esq = frame.eps_sq
    zeta = frame.zeta
    w2 = tf.w2
    d = ctx.d
    S = ctx.apply_S

    n1, n2 = nonlinear_terms(p, e1, e2)
    om1, om2 = omega_terms(p, e1, e2, derivs)
    de1, de2 = d(e1), d(e2)
    om11 = -da * de2 + c_dot / SQRT2 + th_dot * e1
    om12 = th_dot * R

    W = SQRT2 * c_dot * w2 * p.dcR
    P1, leak_p = solve_S_star(ctx, -W - n1)
    Theta11, leak_t = solve_S_star(ctx, -om11)
    Theta12 = -th_dot / SQRT2
    P2 = S(n2) + SQRT2 * c_dot * e1 * p.dcR
    Theta2 = S(om2)
    F1 = P1 + Theta11 + Theta12 + esq / SQRT2

    Sw2 = S(w2)
    common = (P2 + c_dot * Sw2 + SQRT2 * c * c_dot * w2 * p.dcR + c * S(P1))
    E1, E2 = epsilon_system_rhs(p, e1, e2, derivs)
    F2 = common + Theta2 + c * S(Theta11) + c * Theta12 * SQRT2 * R + SQRT2 * (e1 * E1 + e2 * E2)

    F22 = da * de1 + SQRT2 * (e2 * de1 - e1 * de2) + c / SQRT2 * esq
    F21 = (common + c * S(Theta11)
           + da * SQRT2 * R * de1 - c_dot * S(p.dcR) + th_dot * S(e2)
           + c * zeta * e1 - SQRT2 * R * zeta * e2
           + SQRT2 * (e1 * om2 - e2 * om1))
    leaks = {"eps2": tf.leak, "P1": leak_p, "Theta11": leak_t}
    return ForcingTerms(n1, n2, om1, om11, om12, om2, W, P1, P2, Theta11, Theta12, Theta2,
                        F1, F2, F21, F22, leaks)


def split_consistency(tf: TransformedFrame, ft: ForcingTerms) -> float:
    """||F2 - (F21 + d F22)|| / ||F2||."""
    g = tf.grid
    diff = ft.F2 - ft.F21 - derivative(g, ft.F22)
    nf = l2_norm(g, ft.F2)
    return l2_norm(g, diff) / nf if nf > 0 else l2_norm(g, diff)


def S_dR_residual(ctx: OperatorContext) -> float:
    """max |S_c R_c'| (zero in exact arithmetic)."""
    return float(np.max(np.abs(ctx.apply_S(ctx.profile.dR))))


def transformed_rhs(tf: TransformedFrame, ft: ForcingTerms) -> tuple[np.ndarray, np.ndarray]:
    g = tf.grid
    d2w2 = derivative(g, tf.w2, 2)
    rhs1 = derivative(g, tf.w2, 4) - tf.beta**2 * d2w2 + ft.F2
    rhs2 = -tf.w1 + 2.0 * tf.c * derivative(g, tf.w2) + ft.F1
    return rhs1, rhs2


def transformed_system_residual(prev: TransformedFrame, cur: TransformedFrame,
                                nxt: TransformedFrame, ft: ForcingTerms):
    """Residuals of both transformed equations at ``cur`` (d_t by centered differences)."""
    dt = nxt.t - cur.t
    if abs((cur.t - prev.t) - dt) > 1e-9 * abs(dt):
        raise ValueError("transformed frames are not uniformly spaced")
    dtw1 = (nxt.w1 - prev.w1) / (2.0 * dt)
    dtw2 = (nxt.w2 - prev.w2) / (2.0 * dt)
    rhs1, rhs2 = transformed_rhs(cur, ft)
    return dtw1 - rhs1, dtw2 - rhs2
