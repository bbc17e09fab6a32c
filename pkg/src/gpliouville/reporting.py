"""CSV writers and the JSON report shared by the CLI subcommands."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = "{:.17g}"


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_field_csv(path, times, frames: dict, names=("v1", "w1", "w2")) -> Path:
    """Long format ``t,x_index,<names>`` for the frames in ``frames`` (index -> arrays)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("t,x_index," + ",".join(names) + "\n")
        for k in sorted(frames):
            arrs = frames[k]
            ts = fmt(times[k])
            for j in range(len(arrs[0])):
                fh.write(ts + f",{j}," + ",".join(FLOAT_FMT.format(a[j]) for a in arrs) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class Report:
    command: str
    version: str
    config_hash: str = ""
    config: str = ""
    checks: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def check(self, name: str, value: float, threshold: float, mode: str = "le") -> bool:
        """Record one pass/fail check; ``mode`` is 'le' (value <= threshold) or 'ge'."""
        if name in self.checks:
            raise KeyError(f"check {name!r} recorded twice")
        ok = bool(value <= threshold) if mode == "le" else bool(value >= threshold)
        self.checks[name] = {"passed": ok, "value": value, "threshold": threshold, "mode": mode}
        return ok

    def flag(self, name: str, ok: bool, detail: str = "") -> bool:
        if name in self.checks:
            raise KeyError(f"check {name!r} recorded twice")
        self.checks[name] = {"passed": bool(ok), "detail": detail}
        return bool(ok)

    @property
    def hash(self) -> str:
        """Config hash; derived from the echoed config text when none was given."""
        if self.config_hash:
            return self.config_hash
        return hashlib.sha256(self.config.encode("utf-8")).hexdigest()[:16]

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_dict(self) -> dict:
        return _jsonable({
            "command": self.command, "version": self.version, "config_hash": self.hash,
            "config": self.config, "passed": self.passed, "checks": self.checks,
            "summary": self.summary, "files": [str(f) for f in self.files],
        })

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def text(self) -> str:
        lines = [f"{self.command} (version {self.version}, config {self.hash})"]
        for name, c in self.checks.items():
            status = "PASS" if c["passed"] else "FAIL"
            if "value" in c:
                op = "<=" if c["mode"] == "le" else ">="
                lines.append(f"  [{status}] {name}: {c['value']:.3e} {op} {c['threshold']:.3e}")
            else:
                lines.append(f"  [{status}] {name} {c.get('detail', '')}".rstrip())
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)
