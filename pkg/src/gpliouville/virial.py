"""Virial functional I, its derivative Q/2 + R, and the coercivity bound Q >= beta^2/16 N^2.

With p = w2' and u = w1 - 2c p, integrating by parts on [-L, L] gives

    dI/dt = Q/2 + R + flux,
    flux = -[x u^2/2] + [x p p''] - [p p'] - [x p'^2/2] - beta^2 [x p^2/2] + [x p F22],

where [f] = f(L) - f(-L). The flux vanishes on the line for decaying fields
and is reported separately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import derivative, integrate
from .modulation import check_uniform
from .transform import ForcingTerms, TransformedFrame

COERCIVITY_SLACK = 1e-12


def _parts(tf: TransformedFrame):
    g = tf.grid
    p = derivative(g, tf.w2)
    dp = derivative(g, tf.w2, 2)
    return g, p, dp


def norm_N_sq(tf: TransformedFrame) -> float:
    g, p, dp = _parts(tf)
    return float(integrate(g, tf.w1**2 + p**2 + dp**2))


def norm_N(tf: TransformedFrame) -> float:
    return float(np.sqrt(norm_N_sq(tf)))


def functional_I(tf: TransformedFrame) -> float:
    g, p, _ = _parts(tf)
    return float(integrate(g, g.x * p * (tf.w1 - tf.c * p)))


def quad_Q(tf: TransformedFrame) -> float:
    g, p, dp = _parts(tf)
    u = tf.w1 - 2.0 * tf.c * p
    return float(integrate(g, u**2 + tf.beta**2 * p**2 + 3.0 * dp**2))


def remainder_R(tf: TransformedFrame, ft: ForcingTerms, c_dot: float) -> float:
    """R with the F22 part integrated by parts (F22 is never differentiated)."""
    g, p, dp = _parts(tf)
    x = g.x
    u = tf.w1 - 2.0 * tf.c * p
    dF1 = derivative(g, ft.F1)
    return float(integrate(g, x * p * ft.F21 - p * ft.F22 - x * dp * ft.F22
                           + x * dF1 * u - c_dot * x * p**2))


def remainder_R_direct(tf: TransformedFrame, ft: ForcingTerms, c_dot: float) -> float:
    """R = int x w2' F2 + int x F1' (w1 - 2c w2') - c_dot int x w2'^2 with the assembled F2."""
    g, p, _ = _parts(tf)
    x = g.x
    u = tf.w1 - 2.0 * tf.c * p
    dF1 = derivative(g, ft.F1)
    return float(integrate(g, x * p * ft.F2 + x * dF1 * u - c_dot * x * p**2))


def boundary_flux(tf: TransformedFrame, ft: ForcingTerms | None = None) -> float:
    g, p, dp = _parts(tf)
    x = g.x
    u = tf.w1 - 2.0 * tf.c * p
    ddp = derivative(g, tf.w2, 3)
    f = (-0.5 * x * u**2 + x * p * ddp - p * dp - 0.5 * x * dp**2
         - 0.5 * tf.beta**2 * x * p**2)
    if ft is not None:
        f = f + x * p * ft.F22
    return float(f[-1] - f[0])


def coercivity_constants(c: float) -> tuple[float, float, float]:
    """Coefficients (k_w1, k_p, k_dp) of the lower bound
    Q >= k_w1 int w1^2 + k_p int w2'^2 + k_dp int w2''^2, with b^2 = 1 + 7c^2/2.
    """
    beta2 = 2.0 - c * c
    b2 = 1.0 + 3.5 * c * c
    return beta2 / (2.0 * b2), 0.5 * beta2, 3.0


def coercivity_check(tf: TransformedFrame, slack: float = COERCIVITY_SLACK):
    """(passed, margin, decomposition_margin).

    margin = Q - beta^2/16 N^2. The decomposition margin subtracts the sharper
    bound from :func:`coercivity_constants`; it equals int (2c w1/b - b w2')^2.
    """
    g, p, dp = _parts(tf)
    a1 = float(integrate(g, tf.w1**2))
    a2 = float(integrate(g, p**2))
    a3 = float(integrate(g, dp**2))
    n2 = a1 + a2 + a3
    q = quad_Q(tf)
    margin = q - tf.beta**2 / 16.0 * n2
    k1, k2, k3 = coercivity_constants(tf.c)
    sharp = q - (k1 * a1 + k2 * a2 + k3 * a3)
    return bool(margin >= -slack * n2), float(margin), float(sharp)


@dataclass
class VirialReport:
    t: float
    N_sq: float
    I: float
    Q: float
    R: float
    balance_residual: float
    coercivity_margin: float
    int_N_sq_running: float
    I_dot: float = 0.0
    flux: float = 0.0

    CSV_FIELDS = ("t", "N_sq", "I", "Q", "R", "balance_residual", "coercivity_margin",
                  "int_N_sq_running")

    def row(self) -> list[float]:
        return [getattr(self, k) for k in self.CSV_FIELDS]


@dataclass
class FrameScalars:
    """Per-frame virial quantities, computed before the time-difference pass."""

    t: float
    N_sq: float
    I: float
    Q: float
    R: float
    coercivity_margin: float
    flux: float


def frame_scalars(tf: TransformedFrame, ft: ForcingTerms, c_dot: float) -> FrameScalars:
    _, margin, _ = coercivity_check(tf)
    return FrameScalars(tf.t, norm_N_sq(tf), functional_I(tf), quad_Q(tf),
                        remainder_R(tf, ft, c_dot), margin, boundary_flux(tf, ft))


def virial_balance(scalars: list[FrameScalars]) -> list[VirialReport]:
    """I_dot by centered differences; one report per interior frame."""
    t = np.array([s.t for s in scalars])
    dt = check_uniform(t)
    I = np.array([s.I for s in scalars])
    n_sq = np.array([s.N_sq for s in scalars])
    running = cumulative_trapezoid(n_sq, t, initial=0.0)
    out = []
    for k in range(1, len(scalars) - 1):
        s = scalars[k]
        i_dot = (I[k + 1] - I[k - 1]) / (2.0 * dt)
        out.append(VirialReport(
            t=s.t, N_sq=s.N_sq, I=s.I, Q=s.Q, R=s.R,
            balance_residual=abs(i_dot - 0.5 * s.Q - s.R),
            coercivity_margin=s.coercivity_margin, int_N_sq_running=float(running[k]),
            I_dot=i_dot, flux=s.flux,
        ))
    return out
