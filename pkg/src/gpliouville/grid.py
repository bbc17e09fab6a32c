"""Uniform 1D grid on [-L, L]: finite differences, quadrature, weighted norms.

Fields are plain numpy arrays sampled at the grid nodes. Every routine
here takes the grid explicitly so that arrays stay lightweight.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

ACCURACY = 4
MIN_POINTS = 9


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Symmetric uniform grid with an odd number of nodes (x = 0 is a node)."""

    half_length: float
    n_points: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise GridError(f"half_length must be positive, got {self.half_length}")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise GridError(f"n_points must be an odd integer >= 3, got {self.n_points}")

    @classmethod
    def from_spacing(cls, half_length: float, h: float) -> "Grid":
        n = int(round(2.0 * half_length / h)) + 1
        if n % 2 == 0:
            n += 1
        return cls(float(half_length), n)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / (self.n_points - 1)

    h = spacing

    @cached_property
    def x(self) -> np.ndarray:
        # built around the centre index so that x is exactly odd-symmetric
        j = np.arange(self.n_points) - (self.n_points - 1) // 2
        return j * self.spacing

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    @property
    def center(self) -> int:
        return (self.n_points - 1) // 2

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f)
        if f.shape != (self.n_points,):
            raise GridError(f"{name} has shape {f.shape}, expected ({self.n_points},)")
        if not np.all(np.isfinite(f)):
            raise GridError(f"{name} contains non-finite samples")
        return f


@dataclass(frozen=True)
class WeightSpec:
    """Exponent of the localising weight sech(x)**kappa."""

    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"weight exponent must be positive, got {self.kappa}")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.cosh(x) ** (-self.kappa)


def _as_weight(w) -> WeightSpec:
    return w if isinstance(w, WeightSpec) else WeightSpec(float(w))


def fornberg_weights(z: float, nodes: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights of derivatives 0..m at ``z`` (Fornberg 1988).

    Returns an array of shape (m + 1, len(nodes)).
    """
    n = len(nodes)
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = nodes[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - z
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def stencil_layout(n: int, order: int) -> list[tuple[int, np.ndarray]]:
    """(start index, weights in units of h**-order) for each row of the operator."""
    half = 2 if order <= 2 else 3
    width_central = 2 * half + 1
    width_side = order + ACCURACY
    central = fornberg_weights(0.0, np.arange(-half, half + 1, dtype=float), order)[order]
    rows = []
    for j in range(n):
        if j - half >= 0 and j + half <= n - 1:
            rows.append((j - half, central))
        else:
            start = min(max(j - width_side // 2, 0), n - width_side)
            nodes = np.arange(start, start + width_side, dtype=float) - j
            rows.append((start, fornberg_weights(0.0, nodes, order)[order]))
    assert width_central <= n
    return rows


@lru_cache(maxsize=64)
def _diff_matrix(n: int, h: float, order: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for j, (start, w) in enumerate(stencil_layout(n, order)):
        rows.extend([j] * len(w))
        cols.extend(range(start, start + len(w)))
        vals.extend(w / h**order)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def diff_matrix(grid: Grid, order: int) -> sp.csr_matrix:
    """Sparse matrix of the 4th-order finite-difference derivative of given order."""
    if order not in (1, 2, 3, 4):
        raise GridError(f"derivative order must be in 1..4, got {order}")
    if grid.n_points < MIN_POINTS:
        raise GridError(f"grid with {grid.n_points} points is too small for the stencils")
    return _diff_matrix(grid.n_points, grid.spacing, order)


def derivative(grid: Grid, f: np.ndarray, order: int = 1) -> np.ndarray:
    """Centred 4th-order derivative; one-sided closures of equal order at the edges."""
    return diff_matrix(grid, order) @ np.asarray(f)


def integrate(grid: Grid, f: np.ndarray):
    """Trapezoidal rule over [-L, L] (no tail model)."""
    return grid.weights @ np.asarray(f)


def _cumulative(grid: Grid, f: np.ndarray, corrected: bool) -> np.ndarray:
    # F_j = int_{x_j}^{L} f
    f = np.asarray(f)
    h = grid.spacing
    seg = 0.5 * h * (f[1:] + f[:-1])
    out = np.zeros_like(f)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    if corrected:
        # Euler-Maclaurin endpoint term lifts the cumulative trapezoid to O(h^4)
        df = derivative(grid, f, 1)
        out -= h * h / 12.0 * (df[-1] - df)
    return out


def cumulative_from_right(grid: Grid, f: np.ndarray, corrected: bool = False) -> np.ndarray:
    """x_j -> integral of f over [x_j, L]; zero at x = L.

    With ``corrected=True`` the trapezoidal sum carries the h^2/12 endpoint
    correction, which makes it fourth-order accurate.
    """
    return _cumulative(grid, f, corrected)


def cumulative_from_left(grid: Grid, f: np.ndarray, corrected: bool = False) -> np.ndarray:
    """x_j -> integral of f over [-L, x_j]; zero at x = -L."""
    f = np.asarray(f)
    # mirror: int_{-L}^{x_j} f(x) dx = int_{-x_j}^{L} f(-y) dy
    return _cumulative(grid, f[::-1], corrected)[::-1]


def weighted_norm(grid: Grid, f: np.ndarray, w) -> float:
    """(int sech^kappa |f|^2)^(1/2)."""
    w = _as_weight(w)
    return float(np.sqrt(integrate(grid, w(grid.x) * np.abs(f) ** 2)))


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(integrate(grid, np.abs(f) ** 2)))


def linfty_weighted(grid: Grid, f: np.ndarray, w) -> float:
    """max over the grid of sech^kappa |f|."""
    w = _as_weight(w)
    return float(np.max(w(grid.x) * np.abs(f)))
