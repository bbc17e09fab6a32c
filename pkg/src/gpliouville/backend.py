"""Select the time-stepping backend at import.

The compiled Cython kernel is used when it was built; set
``GPLIOUVILLE_BACKEND=python`` to force the numpy/SuperLU fallback.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

from ._cn_fallback import FallbackSolver

try:
    from . import _cn_kernel
except ImportError:  # extension not built
    _cn_kernel = None

COMPILED_AVAILABLE = _cn_kernel is not None
DEFAULT_BACKEND = (
    "compiled"
    if COMPILED_AVAILABLE and os.environ.get("GPLIOUVILLE_BACKEND", "").lower() != "python"
    else "python"
)


def to_band(A: sp.spmatrix) -> tuple[np.ndarray, int, int]:
    """Row-oriented band storage ab[i, k] = A[i, i + k - kl]."""
    A = sp.coo_matrix(A)
    off = A.col - A.row
    kl = int(max(0, -off.min()))
    ku = int(max(0, off.max()))
    ab = np.zeros((A.shape[0], kl + ku + 1), dtype=np.complex128)
    ab[A.row, off + kl] = A.data
    return ab, kl, ku


class CompiledSolver:
    def __init__(self, M: sp.spmatrix, B: sp.spmatrix):
        if _cn_kernel is None:
            raise RuntimeError("compiled kernel is not available")
        self._lu, self.kl, self.ku = to_band(M)
        _cn_kernel.band_lu(self._lu, self.kl, self.ku)
        bmat, bkl, bku = to_band(B)
        if (bkl, bku) != (self.kl, self.ku):
            # pad B to the bandwidth of M so both share one layout
            full = np.zeros((B.shape[0], self.kl + self.ku + 1), dtype=np.complex128)
            full[:, self.kl - bkl: self.kl + bku + 1] = bmat
            bmat = full
        self._B = bmat

    def step(self, u_old, b0, dt, tol, max_iter):
        u_old = np.ascontiguousarray(u_old, dtype=np.complex128)
        out = np.empty_like(u_old)
        it, diff = _cn_kernel.cn_step(
            u_old, self._lu, self._B, self.kl, self.ku,
            np.ascontiguousarray(b0, dtype=np.complex128), dt, tol, max_iter, out,
        )
        return out, it, diff


def make_solver(M, B, backend: str | None = None):
    backend = backend or DEFAULT_BACKEND
    if backend == "compiled":
        return CompiledSolver(M, B)
    if backend == "python":
        return FallbackSolver(M, B)
    raise ValueError(f"unknown backend {backend!r}")
