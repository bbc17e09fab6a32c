"""Pure-Python (numpy + SuperLU) version of the Crank-Nicolson kernels."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class FallbackSolver:
    def __init__(self, M: sp.spmatrix, B: sp.spmatrix):
        self._lu = splu(sp.csc_matrix(M))
        self._B = sp.csr_matrix(B)

    def step(self, u_old, b0, dt, tol, max_iter):
        rhs_lin = self._B @ u_old + b0
        abs_old = u_old.real**2 + u_old.imag**2
        u = u_old.copy()
        diff = np.inf
        it = 0
        while it < max_iter:
            it += 1
            g = 0.5 * (u + u_old) * (1.0 - 0.5 * (u.real**2 + u.imag**2 + abs_old))
            new = self._lu.solve(rhs_lin + 1j * dt * g)
            diff = float(np.max(np.abs(new - u)))
            u = new
            if diff <= tol:
                break
        return u, it, diff
