"""Linearized operators around U_c and the factorization L+ = S*S.

All operators act matrix-free through the sparse derivative matrices of
:mod:`gpliouville.grid`; :meth:`OperatorContext.matrix` assembles them
explicitly for spectral diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .grid import (
    Grid,
    cumulative_from_left,
    cumulative_from_right,
    derivative,
    diff_matrix,
    integrate,
    l2_norm,
    weighted_norm,
)
from .soliton import SQRT2, SolitonProfile, build_profile


class NonOrthogonalError(ValueError):
    """Right-hand side of S* g = f is not orthogonal to Q_c."""


@dataclass(frozen=True, eq=False)
class OperatorContext:
    profile: SolitonProfile
    q_norm2: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "q_norm2", float(integrate(self.grid, self.profile.Q**2)))

    @classmethod
    def for_velocity(cls, c: float, grid: Grid) -> "OperatorContext":
        return cls(build_profile(c, grid))

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def c(self) -> float:
        return self.profile.c

    @property
    def beta(self) -> float:
        return self.profile.beta

    def d(self, f, order=1):
        return derivative(self.grid, f, order)

    def apply_L_plus(self, f):
        p = self.profile
        return -self.d(f, 2) + p.beta**2 * f - 3.0 * p.Q * f

    def apply_L_minus(self, f):
        p = self.profile
        return -self.d(f, 2) + p.c**2 * f - p.Q * f

    def apply_S(self, f):
        return self.d(f) + SQRT2 * self.profile.R * f

    def apply_S_star(self, f):
        return -self.d(f) + SQRT2 * self.profile.R * f

    def inner_Q(self, f) -> float:
        return float(integrate(self.grid, f * self.profile.Q))

    def perp_project(self, f):
        """f - Q (int f Q) / ||Q||^2."""
        return f - self.profile.Q * (self.inner_Q(f) / self.q_norm2)

    def ortho_tol(self, f) -> float:
        return 1e-9 * l2_norm(self.grid, f) * np.sqrt(self.q_norm2)

    @property
    def q_floor(self) -> float:
        return 2.0 * self.beta**2 * np.exp(-self.beta * self.grid.half_length)

    def tail_mass(self) -> float:
        """int_L^inf Q_c from the closed form."""
        b, L = self.beta, self.grid.half_length
        # beta (1 - tanh(beta L / 2)) without the cancellation
        return float(2.0 * b / (np.exp(b * L) + 1.0))

    def invert_S_star(self, f, ortho_tol: float | None = None, project: bool = False,
                      one_sided: bool = False):
        """Bounded solution g of S_c* g = f.

        g(x) = (1/Q) int_x^inf f Q = -(1/Q) int_{-inf}^x f Q. Outside [-L, L]
        f is continued by its edge value. The two one-sided formulas are
        blended with weights (1 +- tanh(beta x))/2 so each side uses the
        formula that never subtracts nearly equal partial sums.

        With ``one_sided=True`` returns the pair (g_right, g_left) instead.
        """
        grid, p = self.grid, self.profile
        f = np.asarray(f, dtype=float)
        if project:
            f = self.perp_project(f)
        tol = self.ortho_tol(f) if ortho_tol is None else ortho_tol
        leak = self.inner_Q(f)
        if abs(leak) > tol:
            raise NonOrthogonalError(
                f"int f Q_c = {leak:.3e} exceeds the orthogonality tolerance {tol:.3e}"
            )
        fq = f * p.Q
        tail = self.tail_mass()
        right = cumulative_from_right(grid, fq, corrected=True) + f[-1] * tail
        left = cumulative_from_left(grid, fq, corrected=True) + f[0] * tail
        g_right = right / p.Q
        g_left = -left / p.Q
        if one_sided:
            return g_right, g_left
        lam = 0.5 * (1.0 + np.tanh(p.beta * grid.x))
        g = lam * g_right + (1.0 - lam) * g_left
        # at the far edges use the asymptotic form S* g ~ sqrt2 R g
        floor = p.Q < self.q_floor
        g[floor] = f[floor] / (SQRT2 * p.R[floor])
        return g

    def matrix(self, name: str) -> sp.csr_matrix:
        """Explicit banded matrix of 'L_plus', 'L_minus', 'S' or 'S_star'."""
        p = self.profile
        D1 = diff_matrix(self.grid, 1)
        D2 = diff_matrix(self.grid, 2)
        if name == "L_plus":
            m = -D2 + sp.diags(p.beta**2 - 3.0 * p.Q)
        elif name == "L_minus":
            m = -D2 + sp.diags(p.c**2 - p.Q)
        elif name == "S":
            m = D1 + sp.diags(SQRT2 * p.R)
        elif name == "S_star":
            m = -D1 + sp.diags(SQRT2 * p.R)
        else:
            raise KeyError(name)
        return sp.csr_matrix(m)


def kernel_kc(ctx: OperatorContext) -> tuple[np.ndarray, np.ndarray]:
    """k_c(x) = -(Q'/Q^2) int_x^inf Q - 1 on the half grid x >= 0.

    The integral beyond L uses the exponential tail Q(L)/beta.
    """
    grid, p = ctx.grid, ctx.profile
    Q = p.Q
    tail = Q[-1] / p.beta
    integral = cumulative_from_right(grid, Q, corrected=True) + tail
    k = -p.dQ / Q**2 * integral - 1.0
    half = slice(grid.center, None)
    return grid.x[half], k[half]


def bump_test_function(grid: Grid, rng: np.random.Generator, n_modes: int = 3,
                       k_max: float = 1.5) -> np.ndarray:
    """Compactly supported bump on [-L/2, L/2] times a random trigonometric polynomial.

    A Gaussian envelope keeps the bump's steep edge derivatives below the
    finite-difference truncation error.
    """
    s = 0.5 * grid.half_length
    u = grid.x / s
    bump = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    bump[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2) - 8.0 * u[inside] ** 2)
    poly = np.zeros_like(u)
    for _ in range(n_modes):
        k = rng.uniform(0.2, k_max)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        shift = rng.uniform(-0.25 * s, 0.25 * s)
        poly += rng.normal() * np.cos(k * (grid.x - shift) + phase)
    return bump * poly


@dataclass
class FactorizationReport:
    c: float
    h: float
    trials: int
    r1: list[float]
    r2: list[float]

    @property
    def r1_max(self) -> float:
        return max(self.r1)

    @property
    def r2_max(self) -> float:
        return max(self.r2)


def factorization_residuals(ctx: OperatorContext, f: np.ndarray) -> tuple[float, float]:
    """Relative residuals of L+ = S*S and S (L- - c^2) S* = (d^2 - beta^2) d^2 on f."""
    g = ctx.grid
    nf = l2_norm(g, f)
    if nf == 0.0:
        return 0.0, 0.0
    r1 = ctx.apply_L_plus(f) - ctx.apply_S_star(ctx.apply_S(f))
    s_star_f = ctx.apply_S_star(f)
    lhs = ctx.apply_S(ctx.apply_L_minus(s_star_f) - ctx.c**2 * s_star_f)
    rhs = derivative(g, f, 4) - ctx.beta**2 * derivative(g, f, 2)
    return l2_norm(g, r1) / nf, l2_norm(g, lhs - rhs) / nf


def verify_factorization(ctx: OperatorContext, trials: int = 20, seed: int = 0) -> FactorizationReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    r1s, r2s = [], []
    for _ in range(trials):
        f = bump_test_function(ctx.grid, rng)
        r1, r2 = factorization_residuals(ctx, f)
        r1s.append(r1)
        r2s.append(r2)
    return FactorizationReport(ctx.c, ctx.grid.spacing, trials, r1s, r2s)


def inversion_weight_ratio(ctx: OperatorContext, f: np.ndarray, kappa: float | None = None) -> float:
    """(||rho^k g|| + ||rho^k g'||) / ||rho^{k/2} f|| for g = (S*)^{-1} f (diagnostic)."""
    kappa = 0.5 * ctx.beta if kappa is None else kappa
    f = ctx.perp_project(f)
    g = ctx.invert_S_star(f)
    dg = ctx.d(g)
    num = weighted_norm(ctx.grid, g, 2 * kappa) + weighted_norm(ctx.grid, dg, 2 * kappa)
    return num / weighted_norm(ctx.grid, f, kappa)
