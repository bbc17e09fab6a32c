"""Closed-form dark/black soliton profiles, energy and the energy-space distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, WeightSpec, derivative, integrate, l2_norm, weighted_norm

SQRT2 = np.sqrt(2.0)
C_MARGIN = 1e-6


class AdmissibilityError(ValueError):
    """Velocity outside (-sqrt2, sqrt2) or too close to the sonic limit."""


def check_velocity(c: float, margin: float = C_MARGIN) -> float:
    c = float(c)
    if not np.isfinite(c) or abs(c) > SQRT2 - margin:
        raise AdmissibilityError(
            f"velocity c={c} outside the admissible range |c| <= sqrt(2) - {margin:g}"
        )
    return c


@dataclass(frozen=True)
class SolitonParams:
    c: float
    a: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not abs(self.c) < SQRT2:
            raise AdmissibilityError(f"|c| must be < sqrt(2), got {self.c}")

    @property
    def beta(self) -> float:
        return float(np.sqrt(2.0 - self.c * self.c))


def profile_arrays(c: float, x: np.ndarray) -> dict[str, np.ndarray]:
    """All closed-form pieces of U_c at the points ``x``.

    ``dcR`` and ``dcQ`` are the c-derivatives obtained by differentiating the
    closed forms by hand (dbeta/dc = -c/beta).
    """
    beta = np.sqrt(2.0 - c * c)
    u = 0.5 * beta * x
    th = np.tanh(u)
    sech2 = 1.0 / np.cosh(u) ** 2
    R = beta / SQRT2 * th
    Q = 0.5 * beta**2 * sech2
    dbeta = -c / beta
    dcR = dbeta * (th / SQRT2 + beta * x * sech2 / (2.0 * SQRT2))
    dcQ = dbeta * (beta * sech2 - 0.5 * beta**2 * x * sech2 * th)
    return {
        "R": R,
        "Q": Q,
        "dR": Q / SQRT2,
        "dQ": -SQRT2 * R * Q,
        "dcR": dcR,
        "dcQ": dcQ,
    }


@dataclass(frozen=True, eq=False)
class SolitonProfile:
    grid: Grid
    c: float
    beta: float
    R: np.ndarray
    Q: np.ndarray
    dR: np.ndarray
    dQ: np.ndarray
    dcR: np.ndarray
    dcQ: np.ndarray

    @property
    def I(self) -> float:
        return self.c / SQRT2

    @property
    def U(self) -> np.ndarray:
        return self.R + 1j * self.I

    @property
    def dcU(self) -> np.ndarray:
        return self.dcR + 1j / SQRT2

    @property
    def dU(self) -> np.ndarray:
        return self.dR.astype(complex)

    @property
    def params(self) -> SolitonParams:
        return SolitonParams(self.c)


def build_profile(c: float, grid: Grid, margin: float = C_MARGIN) -> SolitonProfile:
    c = check_velocity(c, margin)
    arrs = profile_arrays(c, grid.x)
    return SolitonProfile(grid=grid, c=c, beta=float(np.sqrt(2.0 - c * c)), **arrs)


def soliton_state(grid: Grid, c: float, a: float = 0.0, theta: float = 0.0) -> np.ndarray:
    """e^{i theta} U_c(x - a), sampled from the closed form."""
    arrs = profile_arrays(check_velocity(c), grid.x - a)
    return np.exp(1j * theta) * (arrs["R"] + 1j * c / SQRT2)


def ode_residual(profile: SolitonProfile, Q: np.ndarray | None = None) -> float:
    """max |Q'' - beta^2 Q + 3 Q^2| with discrete derivatives."""
    Q = profile.Q if Q is None else Q
    res = derivative(profile.grid, Q, 2) - profile.beta**2 * Q + 3.0 * Q**2
    return float(np.max(np.abs(res)))


def traveling_wave_residual(profile: SolitonProfile) -> float:
    """max |-i c U' + U'' + U (1 - |U|^2)|."""
    g, U = profile.grid, profile.U
    res = -1j * profile.c * derivative(g, U, 1) + derivative(g, U, 2) + U * (1.0 - np.abs(U) ** 2)
    return float(np.max(np.abs(res)))


def energy(grid: Grid, psi: np.ndarray) -> float:
    """E = 1/2 int |psi'|^2 + 1/4 int (1 - |psi|^2)^2.

    The gradient term uses the modulus squared so that E is real.
    """
    dpsi = derivative(grid, psi, 1)
    eta = 1.0 - np.abs(psi) ** 2
    return float(0.5 * integrate(grid, np.abs(dpsi) ** 2) + 0.25 * integrate(grid, eta**2))


def mass_defect(grid: Grid, psi: np.ndarray) -> float:
    """int eta = int (1 - |psi|^2)."""
    return float(integrate(grid, 1.0 - np.abs(psi) ** 2))


def h_norm(grid: Grid, f: np.ndarray) -> float:
    """||f||_H = (||f'||^2 + ||f||_rho^2)^(1/2) with rho = sech."""
    df = derivative(grid, f, 1)
    return float(np.sqrt(l2_norm(grid, df) ** 2 + weighted_norm(grid, f, WeightSpec(1.0)) ** 2))


def distance(grid: Grid, psi1: np.ndarray, psi2: np.ndarray) -> float:
    """Energy-space distance (||psi1' - psi2'||_H^2 + ||eta1 - eta2||^2)^(1/2)."""
    psi1 = grid.check(psi1, "psi1")
    psi2 = grid.check(psi2, "psi2")
    dd = derivative(grid, psi1 - psi2, 1)
    deta = np.abs(psi2) ** 2 - np.abs(psi1) ** 2
    return float(np.sqrt(h_norm(grid, dd) ** 2 + l2_norm(grid, deta) ** 2))
