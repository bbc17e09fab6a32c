"""Run configuration: a flat UTF-8 text file of ``key = value`` lines.

Blank lines and text after ``#`` are ignored. Unknown keys are errors, and
so are missing required keys.

Keys
----
c0               soliton velocity of the initial state (required)
c_frame          velocity of the computational frame (required)
delta            perturbation amplitude (required)
t_end            final time (required)
shape            sech_bump | gaussian | random_smooth       [sech_bump]
seed             integer seed of random_smooth              [0]
project          pre-project the perturbation (true/false)  [true]
half_length      L, domain is [-L, L]                       [30]
n_points         odd number of nodes                        [3001]
dt               time step                                  [5e-4]
snapshot_stride  steps between stored snapshots             [10]
newton_tol       tolerance of the nonlinear CN iteration    [1e-12]
newton_max_iter  iteration cap                              [50]
gamma            weight exponent (default beta(c_frame)/4)
tail_tol         bound on exp(-beta L / 2)                  [1e-6]
ortho_tol        modulation exit tolerance                  [1e-13]
edge_band        width excluded from residual max-norms     [2.0]
alpha0           admissibility gate on delta                [0.05]
output_dir       where files are written                    [out]
format           csv | binary                               [csv]
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .evolution import PERTURBATION_SHAPES, EvolutionConfig
from .soliton import check_velocity


class ConfigError(ValueError):
    pass


REQUIRED = ("c0", "c_frame", "delta", "t_end")


@dataclass(frozen=True)
class RunConfig:
    c0: float
    c_frame: float
    delta: float
    t_end: float
    shape: str = "sech_bump"
    seed: int = 0
    project: bool = True
    half_length: float = 30.0
    n_points: int = 3001
    dt: float = 5e-4
    snapshot_stride: int = 10
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    gamma: float | None = None
    tail_tol: float = 1e-6
    ortho_tol: float = 1e-13
    edge_band: float = 2.0
    alpha0: float = 0.05
    output_dir: str = "out"
    format: str = "csv"

    def __post_init__(self):
        try:
            check_velocity(self.c0)
            check_velocity(self.c_frame)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.shape not in PERTURBATION_SHAPES:
            raise ConfigError(f"shape must be one of {PERTURBATION_SHAPES}, got {self.shape!r}")
        if self.format not in ("csv", "binary"):
            raise ConfigError(f"format must be csv or binary, got {self.format!r}")
        if not 0.0 <= self.delta <= self.alpha0:
            raise ConfigError(f"delta={self.delta} outside the admissible range [0, {self.alpha0}]")
        if self.delta > 0 and self.c0 != self.c_frame:
            # the Dirichlet data are U_{c_frame}(+-L); a different c0 would violate them
            raise ConfigError("c0 must equal c_frame (boundary data are pinned to U_{c_frame})")
        if self.gamma is not None and not 0 < self.gamma < 0.5 * self.beta:
            raise ConfigError(f"gamma must lie in (0, beta/2) = (0, {0.5 * self.beta:.4g})")
        tail = np.exp(-0.5 * self.beta * self.half_length)
        if not tail < self.tail_tol:
            raise ConfigError(
                f"exp(-beta L/2) = {tail:.3e} is not below tail_tol={self.tail_tol:g}; enlarge half_length"
            )
        try:
            self.evolution().grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def beta(self) -> float:
        return float(np.sqrt(2.0 - self.c_frame**2))

    @property
    def gamma_eff(self) -> float:
        return 0.25 * self.beta if self.gamma is None else self.gamma

    def evolution(self, backend: str | None = None) -> EvolutionConfig:
        return EvolutionConfig(
            c_frame=self.c_frame, dt=self.dt, t_end=self.t_end, half_length=self.half_length,
            n_points=self.n_points, newton_tol=self.newton_tol,
            newton_max_iter=self.newton_max_iter, snapshot_stride=self.snapshot_stride,
            backend=backend,
        )

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if v is None:
                continue
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()[:16]

    def replace(self, **kw) -> "RunConfig":
        d = asdict(self)
        d.update(kw)
        return RunConfig(**d)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    f = _FIELDS[key]
    t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if t.startswith("bool"):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            if raw.lower() == "none":
                return None
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r} as {t}") from None


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, raw)
    for key, v in (overrides or {}).items():
        if v is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, str(v)) if isinstance(v, str) else v
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    return RunConfig(**values)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), overrides)
