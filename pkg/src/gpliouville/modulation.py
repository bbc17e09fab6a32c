"""Modulation decomposition psi = e^{i theta} (U_c + eps)(x - a).

Trajectories live in the frame y = x - c_frame t, so the shift solved for
is the co-moving one and the lab translation is a = shift + c_frame t.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import Grid, derivative, integrate
from .soliton import SQRT2, SolitonProfile, build_profile

log = logging.getLogger(__name__)

SHIFT_STENCIL = 6


class ModulationError(RuntimeError):
    """Newton iteration for the modulation parameters failed."""


class ShiftError(ValueError):
    pass


def lagrange_weights(s: float, nodes: np.ndarray) -> np.ndarray:
    w = np.ones(len(nodes))
    for i, xi in enumerate(nodes):
        for j, xj in enumerate(nodes):
            if j != i:
                w[i] *= (s - xj) / (xi - xj)
    return w


def shift_interpolate(grid: Grid, f: np.ndarray, a: float) -> np.ndarray:
    """Values of x -> f(x + a) on the grid by 6-point (quintic) Lagrange interpolation.

    Beyond the domain f is continued by its edge values.
    """
    if not abs(a) < 0.25 * grid.half_length:
        raise ShiftError(f"shift {a} exceeds L/4 = {0.25 * grid.half_length}")
    h = grid.spacing
    m = int(np.floor(a / h))
    s = a / h - m
    if s < 1e-14:
        s = 0.0
    elif s > 1.0 - 1e-14:
        m, s = m + 1, 0.0
    n = grid.n_points
    pad = abs(m) + SHIFT_STENCIL
    fp = np.concatenate([np.full(pad, f[0]), f, np.full(pad, f[-1])])
    if s == 0.0:
        return fp[pad + m: pad + m + n].copy()
    offsets = np.arange(-2, 4)
    w = lagrange_weights(s, offsets.astype(float))
    out = np.zeros(n, dtype=np.result_type(f, float))
    for k, wk in zip(offsets, w):
        start = pad + m + k
        out += wk * fp[start: start + n]
    return out


@dataclass
class ModulationFrame:
    t: float
    a: float  # lab-frame translation
    c: float
    theta: float
    eps1: np.ndarray
    eps2: np.ndarray
    zeta: np.ndarray
    profile: SolitonProfile
    residuals: tuple[float, float, float]
    shift: float = 0.0  # translation in the simulation frame
    iterations: int = 0

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def eps(self) -> np.ndarray:
        return self.eps1 + 1j * self.eps2

    @property
    def eps_sq(self) -> np.ndarray:
        return self.eps1**2 + self.eps2**2

    @property
    def max_residual(self) -> float:
        return float(max(abs(r) for r in self.residuals))


def zeta_from_eps(p: SolitonProfile, eps1, eps2):
    return 2.0 * p.R * eps1 + SQRT2 * p.c * eps2 + eps1**2 + eps2**2


def orthogonality_residuals(p: SolitonProfile, eps1, eps2) -> np.ndarray:
    g = p.grid
    return np.array([
        integrate(g, p.Q * eps1),
        integrate(g, p.Q * eps2),
        integrate(g, p.R * p.Q * eps2),
    ])


def _jacobian(p: SolitonProfile, eps1, eps2) -> np.ndarray:
    """d(r1, r2, r3)/d(shift, c, theta)."""
    g = p.grid
    Q, R = p.Q, p.R
    RQ = R * Q
    dc_RQ = p.dcR * Q + R * p.dcQ
    # d eps / d shift = U' + eps'
    da1 = p.dR + derivative(g, eps1)
    da2 = derivative(g, eps2)
    # d eps / d theta = -i (U + eps)
    dt1 = p.I + eps2
    dt2 = -(R + eps1)
    J = np.empty((3, 3))
    J[0] = [integrate(g, Q * da1), integrate(g, p.dcQ * eps1 - Q * p.dcR), integrate(g, Q * dt1)]
    J[1] = [integrate(g, Q * da2), integrate(g, p.dcQ * eps2 - Q / SQRT2), integrate(g, Q * dt2)]
    J[2] = [integrate(g, RQ * da2), integrate(g, dc_RQ * eps2 - RQ / SQRT2), integrate(g, RQ * dt2)]
    return J


def initial_guess(grid: Grid, psi: np.ndarray, c_frame: float) -> tuple[float, float, float]:
    """(shift, c, theta) from the peak of eta = 1 - |psi|^2."""
    eta = 1.0 - np.abs(psi) ** 2
    j = int(np.argmax(eta))
    shift = grid.x[j]
    if 0 < j < grid.n_points - 1:
        ym, y0, yp = eta[j - 1], eta[j], eta[j + 1]
        den = ym - 2.0 * y0 + yp
        if den < 0:
            shift += 0.5 * grid.spacing * (ym - yp) / den
    return float(shift), float(c_frame), 0.0


def decompose(grid: Grid, psi: np.ndarray, t: float = 0.0, guess=None, c_frame: float = 0.0,
              tol: float = 1e-13, max_iter: int = 50) -> ModulationFrame:
    """Newton solve of r1 = r2 = r3 = 0 for (shift, c, theta).

    ``guess`` is (shift, c, theta) in the simulation frame; by default it is
    taken from :func:`initial_guess`. ``tol`` is the exit bound on
    max |r_i|, relative to int Q_c (of order one).
    """
    psi = grid.check(np.asarray(psi, dtype=complex), "psi")
    if guess is None:
        guess = initial_guess(grid, psi, c_frame)
    shift, c, theta = (float(v) for v in guess)
    best = np.inf
    for it in range(1, max_iter + 1):
        p = build_profile(c, grid)
        phi = np.exp(-1j * theta) * shift_interpolate(grid, psi, shift)
        eps = phi - p.U
        eps1, eps2 = eps.real, eps.imag
        r = orthogonality_residuals(p, eps1, eps2)
        rmax = float(np.max(np.abs(r)))
        if not np.isfinite(rmax) or (it > 3 and rmax > 1e3 * best):
            raise ModulationError(f"Newton diverged at t={t} (residual {rmax:.3e})")
        best = min(best, rmax)
        if rmax <= tol:
            break
        step = np.linalg.solve(_jacobian(p, eps1, eps2), -r)
        shift, c, theta = shift + step[0], c + step[1], theta + step[2]
        if not abs(c) < SQRT2:
            raise ModulationError(f"Newton left the admissible velocities at t={t} (c={c})")
    else:
        raise ModulationError(
            f"Newton did not converge at t={t}: residual {rmax:.3e} after {max_iter} iterations"
        )
    return ModulationFrame(
        t=float(t), a=shift + c_frame * t, c=c, theta=theta, eps1=eps1, eps2=eps2,
        zeta=zeta_from_eps(p, eps1, eps2), profile=p, residuals=tuple(float(v) for v in r),
        shift=shift, iterations=it,
    )


def decompose_series(grid: Grid, times, states, c_frame: float, tol: float = 1e-13,
                     max_iter: int = 50) -> list[ModulationFrame]:
    """Decompose a whole trajectory, chaining each frame's parameters into the next guess."""
    frames = []
    guess = None
    for t, psi in zip(times, states):
        fr = decompose(grid, psi, t, guess, c_frame, tol, max_iter)
        frames.append(fr)
        guess = (fr.shift, fr.c, fr.theta)
    return frames


@dataclass
class ParamDerivatives:
    t: np.ndarray
    a_dot: np.ndarray
    c_dot: np.ndarray
    theta_dot: np.ndarray

    def at(self, k: int) -> tuple[float, float, float]:
        return float(self.a_dot[k]), float(self.c_dot[k]), float(self.theta_dot[k])


def check_uniform(t: np.ndarray, rtol: float = 1e-9) -> float:
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        raise ValueError(f"insufficient frames for time derivatives: need >= 3, got {t.size}")
    dt = np.diff(t)
    if not np.all(dt > 0) or np.max(np.abs(dt - dt[0])) > rtol * abs(dt[0]):
        raise ValueError("time series is not uniformly spaced")
    return float(dt[0])


def time_derivative(t, y):
    """Centered differences in the interior, second-order one-sided at the ends."""
    dt = check_uniform(t)
    return np.gradient(np.asarray(y, dtype=float), dt, axis=0, edge_order=2)


def parameter_derivatives(t, a, c, theta) -> ParamDerivatives:
    t = np.asarray(t, dtype=float)
    theta = np.unwrap(np.asarray(theta, dtype=float))
    return ParamDerivatives(t, time_derivative(t, a), time_derivative(t, c), time_derivative(t, theta))


def derivatives_of(frames: list[ModulationFrame]) -> ParamDerivatives:
    return parameter_derivatives(
        [f.t for f in frames], [f.a for f in frames], [f.c for f in frames], [f.theta for f in frames]
    )


# equations of motion for eps -------------------------------------------------

def omega_terms(p: SolitonProfile, eps1, eps2, derivs: tuple[float, float, float]):
    """(Omega1, Omega2) from the modulation speeds (a_dot, c_dot, theta_dot)."""
    g = p.grid
    a_dot, c_dot, th_dot = derivs
    da = a_dot - p.c
    d1 = derivative(g, eps1)
    d2 = derivative(g, eps2)
    om1 = -da * d2 + c_dot / SQRT2 + th_dot * (p.R + eps1)
    om2 = da * (p.dR + d1) - c_dot * p.dcR + th_dot * (p.I + eps2)
    return om1, om2


def nonlinear_terms(p: SolitonProfile, eps1, eps2):
    """(N1, N2), the terms of eps-equations that are at least quadratic in eps."""
    e2 = eps1**2 + eps2**2
    n1 = p.R * e2 + 2.0 * p.R * eps1**2 + SQRT2 * p.c * eps1 * eps2 + eps1 * e2
    n2 = p.c / SQRT2 * e2 + 2.0 * p.R * eps1 * eps2 + SQRT2 * p.c * eps2**2 + eps2 * e2
    return n1, n2


def epsilon_system_rhs(p: SolitonProfile, eps1, eps2, derivs):
    """Right-hand sides (E1, E2) of
    d_t eps1 = L- eps2 + c S eps1 + N2 + Omega2,
    d_t eps2 = -L+ eps1 - c S* eps2 - N1 - Omega1.
    """
    g = p.grid
    c, R, Q = p.c, p.R, p.Q
    d1 = derivative(g, eps1)
    d2 = derivative(g, eps2)
    lm = -derivative(g, eps2, 2) + (c * c - Q) * eps2
    lp = -derivative(g, eps1, 2) + (p.beta**2 - 3.0 * Q) * eps1
    n1, n2 = nonlinear_terms(p, eps1, eps2)
    om1, om2 = omega_terms(p, eps1, eps2, derivs)
    e1 = lm + c * (d1 + SQRT2 * R * eps1) + n2 + om2
    e2 = -lp - c * (-d2 + SQRT2 * R * eps2) - n1 - om1
    return e1, e2


def epsilon_system_residual(frames: list[ModulationFrame], derivs: ParamDerivatives, k: int):
    """Residuals of the eps-equations at interior frame k (d_t eps by centered differences)."""
    if not 0 < k < len(frames) - 1:
        raise IndexError("epsilon_system_residual needs an interior frame")
    dt = frames[k + 1].t - frames[k].t
    fr = frames[k]
    dte1 = (frames[k + 1].eps1 - frames[k - 1].eps1) / (2.0 * dt)
    dte2 = (frames[k + 1].eps2 - frames[k - 1].eps2) / (2.0 * dt)
    e1, e2 = epsilon_system_rhs(fr.profile, fr.eps1, fr.eps2, derivs.at(k))
    return dte1 - e1, dte2 - e2


# algebraic identities -------------------------------------------------------

def zeta_identity_error(frame: ModulationFrame, psi: np.ndarray) -> float:
    """max |(Q_c - eta(x + a)) - zeta| with eta taken from the shifted state."""
    g = frame.grid
    shifted = shift_interpolate(g, psi, frame.shift)
    eta = 1.0 - np.abs(shifted) ** 2
    return float(np.max(np.abs(frame.profile.Q - eta - frame.zeta)))


def q_identity_error(frame: ModulationFrame) -> float:
    """Pointwise check of q = (1-|U+eps|^2)(U+eps) - (1-|U|^2)U against (q1, q2)."""
    p = frame.profile
    U = p.U
    V = U + frame.eps
    q = (1.0 - np.abs(V) ** 2) * V - (1.0 - np.abs(U) ** 2) * U
    z, e1, e2 = frame.zeta, frame.eps1, frame.eps2
    q1 = p.Q * e1 - p.R * z - z * e1
    q2 = p.Q * e2 - p.I * z - z * e2
    return float(max(np.max(np.abs(q.real - q1)), np.max(np.abs(q.imag - q2))))


def modulation_bound_ratio(frame: ModulationFrame, derivs: tuple[float, float, float],
                           gamma: float) -> float:
    """(|a_dot - c|^2 + |c_dot| + |theta_dot|^2) / int rho^gamma |eps|^2 (logged only)."""
    a_dot, c_dot, th_dot = derivs
    g = frame.grid
    den = integrate(g, np.cosh(g.x) ** (-gamma) * frame.eps_sq)
    num = (a_dot - frame.c) ** 2 + abs(c_dot) + th_dot**2
    return float(num / den) if den > 0 else 0.0
