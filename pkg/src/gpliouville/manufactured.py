"""Manufactured solutions of the transformed system for testing the virial algebra.

w2(t, x) = A(t) G(x - s(t)),  w1(t, x) = B(t) G(x) + D(t) G'(x),  G = exp(-x^2/2),
with a slowly varying c(t). The forcings F1, F2 are defined so that (w1, w2)
solve the transformed system exactly; F2 is put entirely in F21 (F22 = 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e

from .grid import Grid
from .operators import OperatorContext
from .transform import TransformedFrame


def gauss_derivative(x, n: int):
    """d^n/dx^n exp(-x^2/2) = (-1)^n He_n(x) exp(-x^2/2)."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return (-1) ** n * hermite_e.hermeval(x, coef) * np.exp(-0.5 * x * x)


@dataclass
class ManufacturedForcing:
    """Duck-typed stand-in for :class:`ForcingTerms` with only what the virial terms read."""

    F1: np.ndarray
    F2: np.ndarray
    F21: np.ndarray
    F22: np.ndarray


@dataclass(frozen=True)
class Manufactured:
    c0: float = 0.4
    c_amp: float = 0.1

    def c(self, t):
        return self.c0 + self.c_amp * np.sin(0.5 * t)

    def c_dot(self, t):
        return 0.5 * self.c_amp * np.cos(0.5 * t)

    @staticmethod
    def coeffs(t):
        A, dA = 1.0 + 0.3 * np.sin(t), 0.3 * np.cos(t)
        s, ds = 0.5 * np.sin(0.7 * t), 0.35 * np.cos(0.7 * t)
        B, dB = np.cos(t), -np.sin(t)
        D, dD = 0.4 * np.sin(1.3 * t), 0.52 * np.cos(1.3 * t)
        return A, dA, s, ds, B, dB, D, dD

    def frame(self, grid: Grid, t: float):
        x = grid.x
        A, dA, s, ds, B, dB, D, dD = self.coeffs(t)
        xi = x - s
        G = [gauss_derivative(xi, n) for n in range(5)]
        G0 = [gauss_derivative(x, n) for n in range(2)]
        c = float(self.c(t))
        beta2 = 2.0 - c * c
        w2 = A * G[0]
        w1 = B * G0[0] + D * G0[1]
        w2_t = dA * G[0] - A * ds * G[1]
        w1_t = dB * G0[0] + dD * G0[1]
        F1 = w2_t + w1 - 2.0 * c * A * G[1]
        F2 = w1_t - (A * G[4] - beta2 * A * G[2])
        ctx = OperatorContext.for_velocity(c, grid)
        tf = TransformedFrame(t, c, w1.copy(), w1, w2, ctx)
        return tf, ManufacturedForcing(F1, F2, F2, np.zeros_like(F2))
