"""Crank-Nicolson evolution of the Gross-Pitaevskii equation.

The equation is solved in the frame y = x - c_frame t,

    d_t psi = c_frame psi_y + i (psi_yy + psi (1 - |psi|^2)),

with Dirichlet values pinned to U_{c_frame}(+-L). The nonlinearity is taken
at the time midpoint in the conservative form
psi_mid (1 - (|psi^{n+1}|^2 + |psi^n|^2)/2), which makes the scheme
time-reversible and keeps mass and energy drift at solver tolerance.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .backend import make_solver
from .grid import Grid, diff_matrix
from .soliton import check_velocity, energy, mass_defect, soliton_state

log = logging.getLogger(__name__)

BINARY_MAGIC = b"GPL1"


class ConvergenceError(RuntimeError):
    """Nonlinear iteration did not converge; the time step is too large."""


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    c_frame: float
    dt: float
    t_end: float
    half_length: float = 30.0
    n_points: int = 3001
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    snapshot_stride: int = 10
    energy_stride: int = 1
    bc_tol: float = 1e-10
    backend: str | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end}")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.snapshot_stride < 1 or self.energy_stride < 1:
            raise ValueError("strides must be >= 1")
        check_velocity(self.c_frame)

    @property
    def grid(self) -> Grid:
        return Grid(self.half_length, self.n_points)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class Stepper:
    """Factorised Crank-Nicolson operator for one (grid, c_frame, dt)."""

    def __init__(self, grid: Grid, c_frame: float, dt: float, boundary: tuple[complex, complex],
                 tol: float = 1e-12, max_iter: int = 50, backend: str | None = None):
        self.grid = grid
        self.c_frame = c_frame
        self.dt = dt
        self.tol = tol
        self.max_iter = max_iter
        self.boundary = (complex(boundary[0]), complex(boundary[1]))
        A = sp.csr_matrix(c_frame * diff_matrix(grid, 1) + 1j * diff_matrix(grid, 2))
        interior = slice(1, grid.n_points - 1)
        A_ii = A[interior, interior]
        eye = sp.identity(grid.n_points - 2, dtype=complex, format="csr")
        M = eye - 0.5 * dt * A_ii
        B = eye + 0.5 * dt * A_ii
        edge = A[interior, :][:, [0, grid.n_points - 1]]
        self.b0 = np.asarray(dt * (edge @ np.array(self.boundary))).ravel()
        self.solver = make_solver(M, B, backend)
        self.last_iterations = 0

    def check_boundary(self, psi, bc_tol):
        err = max(abs(psi[0] - self.boundary[0]), abs(psi[-1] - self.boundary[1]))
        if err > bc_tol:
            raise BoundaryError(f"boundary values deviate from the pinned data by {err:.3e}")

    def step(self, psi: np.ndarray) -> np.ndarray:
        u, it, diff = self.solver.step(psi[1:-1], self.b0, self.dt, self.tol, self.max_iter)
        if not diff <= self.tol:
            raise ConvergenceError(
                f"nonlinear iteration stalled at update {diff:.3e} after {it} iterations"
                f" (dt={self.dt} too large?)"
            )
        self.last_iterations = it
        out = np.empty_like(psi)
        out[0], out[-1] = self.boundary
        out[1:-1] = u
        return out


def stepper_for(cfg: EvolutionConfig, dt: float | None = None) -> Stepper:
    grid = cfg.grid
    edge = soliton_state(grid, cfg.c_frame)
    return Stepper(grid, cfg.c_frame, cfg.dt if dt is None else dt, (edge[0], edge[-1]),
                   cfg.newton_tol, cfg.newton_max_iter, cfg.backend)


_STEPPERS: dict = {}


def step(psi: np.ndarray, cfg: EvolutionConfig, dt: float | None = None) -> np.ndarray:
    """Advance by one step (a negative ``dt`` steps backwards in time)."""
    key = (cfg, dt)
    if key not in _STEPPERS:
        _STEPPERS.clear()
        _STEPPERS[key] = stepper_for(cfg, dt)
    st = _STEPPERS[key]
    st.check_boundary(psi, cfg.bc_tol)
    return st.step(np.asarray(psi, dtype=complex))


@dataclass
class Trajectory:
    grid: Grid
    c_frame: float
    dt: float
    snapshot_stride: int
    times: np.ndarray
    states: np.ndarray
    energy_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def snapshot_dt(self) -> float:
        return self.dt * self.snapshot_stride

    def __len__(self):
        return len(self.times)

    def relative_energy_drift(self) -> float:
        e = self.energies
        return float(np.max(np.abs(e - e[0])) / abs(e[0]))

    def relative_mass_drift(self) -> float:
        m = self.masses
        return float(np.max(np.abs(m - m[0])) / abs(m[0]))

    def boundary_activity(self, width: float = 2.0) -> float:
        """max |eta - eta_0| within ``width`` of the edges, a radiation monitor."""
        edge = np.abs(np.abs(self.grid.x) - self.grid.half_length) <= width
        eta = 1.0 - np.abs(self.states[:, edge]) ** 2
        return float(np.max(np.abs(eta - eta[0])))

    # serialization -------------------------------------------------------
    def save_csv(self, path) -> Path:
        path = Path(path)
        n = self.grid.n_points
        idx = np.arange(n)
        with path.open("w") as fh:
            fh.write("t,x_index,re_psi,im_psi\n")
            for t, psi in zip(self.times, self.states):
                ts = f"{t:.17g}"
                fh.writelines(
                    f"{ts},{j},{re:.17g},{im:.17g}\n"
                    for j, re, im in zip(idx, psi.real, psi.imag)
                )
        return path

    def save_binary(self, path) -> Path:
        """Magic ``GPL1`` then records (t, re0, im0, re1, im1, ...) as little-endian f8."""
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(BINARY_MAGIC)
            for t, psi in zip(self.times, self.states):
                rec = np.empty(1 + 2 * psi.size, dtype="<f8")
                rec[0] = t
                rec[1::2] = psi.real
                rec[2::2] = psi.imag
                fh.write(rec.tobytes())
        return path

    def save_energy_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            fh.write("t,energy,mass\n")
            for t, e, m in zip(self.energy_times, self.energies, self.masses):
                fh.write(f"{t:.17g},{e:.17g},{m:.17g}\n")
        return path


def read_binary(path, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != BINARY_MAGIC:
        raise ValueError(f"{path} is not a GPL1 trajectory file")
    rec = 1 + 2 * n_points
    data = np.frombuffer(raw[4:], dtype="<f8")
    if data.size % rec:
        raise ValueError(f"{path}: size is not a whole number of {n_points}-point records")
    data = data.reshape(-1, rec)
    return data[:, 0].copy(), data[:, 1::2] + 1j * data[:, 2::2]


def read_csv(path, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    arr = np.loadtxt(path, delimiter=",", skiprows=1)
    arr = arr.reshape(-1, n_points, 4)
    return arr[:, 0, 0].copy(), arr[:, :, 2] + 1j * arr[:, :, 3]


def simulate(psi0: np.ndarray, cfg: EvolutionConfig, progress: bool = False) -> Trajectory:
    grid = cfg.grid
    psi = grid.check(np.asarray(psi0, dtype=complex), "psi0").copy()
    st = stepper_for(cfg)
    st.check_boundary(psi, cfg.bc_tol)
    n_steps = cfg.n_steps
    n_snap = n_steps // cfg.snapshot_stride + 1
    times = np.arange(n_snap) * cfg.dt * cfg.snapshot_stride
    states = np.empty((n_snap, grid.n_points), dtype=complex)
    states[0] = psi
    e_t, e_v, m_v = [0.0], [energy(grid, psi)], [mass_defect(grid, psi)]
    for k in range(1, n_steps + 1):
        psi = st.step(psi)
        if k % cfg.energy_stride == 0:
            e_t.append(k * cfg.dt)
            e_v.append(energy(grid, psi))
            m_v.append(mass_defect(grid, psi))
        if k % cfg.snapshot_stride == 0:
            states[k // cfg.snapshot_stride] = psi
        if progress and k % max(1, n_steps // 10) == 0:
            log.info("step %d/%d t=%.3f", k, n_steps, k * cfg.dt)
    return Trajectory(grid, cfg.c_frame, cfg.dt, cfg.snapshot_stride, times, states,
                      np.array(e_t), np.array(e_v), np.array(m_v))


# initial data ---------------------------------------------------------------

PERTURBATION_SHAPES = ("sech_bump", "gaussian", "random_smooth")


def perturbation_shape(grid: Grid, shape: str, seed: int = 0) -> np.ndarray:
    """Complex unit-amplitude perturbation profile."""
    x = grid.x
    if shape == "sech_bump":
        return (1.0 + 1.0j) / np.sqrt(2.0) / np.cosh(x)
    if shape == "gaussian":
        return (1.0 + 1.0j) / np.sqrt(2.0) * np.exp(-0.5 * (x - 0.5) ** 2)
    if shape == "random_smooth":
        rng = np.random.default_rng(seed)
        env = np.exp(-0.125 * x**2)
        re = sum(rng.normal() * np.cos(rng.uniform(0.2, 1.5) * x + rng.uniform(0, 2 * np.pi))
                 for _ in range(3))
        im = sum(rng.normal() * np.cos(rng.uniform(0.2, 1.5) * x + rng.uniform(0, 2 * np.pi))
                 for _ in range(3))
        p = env * (re + 1j * im)
        return p / np.max(np.abs(p))
    raise ValueError(f"unknown perturbation shape {shape!r}; expected one of {PERTURBATION_SHAPES}")


def project_perturbation(grid: Grid, c: float, p: np.ndarray) -> np.ndarray:
    """Remove the Q_c component of Re p and the Q_c, R_c Q_c components of Im p."""
    from .grid import integrate
    from .soliton import build_profile

    prof = build_profile(c, grid)
    Q, RQ = prof.Q, prof.R * prof.Q
    qq = integrate(grid, Q * Q)
    rr = integrate(grid, RQ * RQ)
    p1, p2 = p.real.copy(), p.imag.copy()
    p1 -= Q * integrate(grid, p1 * Q) / qq
    p2 -= Q * integrate(grid, p2 * Q) / qq
    p2 -= RQ * integrate(grid, p2 * RQ) / rr
    return p1 + 1j * p2


def perturbed_soliton(grid: Grid, c0: float, delta: float, shape: str = "sech_bump",
                      seed: int = 0, project: bool = True) -> np.ndarray:
    """U_{c0} + delta p with p optionally pre-projected onto the orthogonality conditions."""
    p = perturbation_shape(grid, shape, seed)
    if project:
        p = project_perturbation(grid, c0, p)
    psi = soliton_state(grid, c0) + delta * p
    # keep the Dirichlet data exact
    edge = soliton_state(grid, c0)
    psi[0], psi[-1] = edge[0], edge[-1]
    return psi
