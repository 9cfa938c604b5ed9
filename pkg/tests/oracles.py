"""Independent oracles used by the test suite.

These deliberately avoid the package's own numerical paths: convolution
integrals go through adaptive quadrature or closed forms, adjugates through
exact integer cofactor expansion, so each check pits two unrelated routes
against each other.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def filtered_sin_exact(lam: float, amp: float, w: float, psi: float, t) -> float:
    """Exact response of xdot = lam (u - x), x(0) = 0 to u = amp sin(w t + psi).

    This is the convolution integral lam * int_0^t e^{lam (s - t)} u(s) ds in
    closed form.
    """
    g = lam / np.hypot(lam, w)
    d = np.arctan2(w, lam)
    return amp * g * (np.sin(w * t + psi - d) - np.sin(psi - d) * np.exp(-lam * t))


def lti_response_quad(lam: float, u, t: float, points=()) -> float:
    """Quadrature of the convolution integral lam * int_0^t e^{lam (s-t)} u(s) ds."""
    val, _err = quad(lambda s: lam * np.exp(lam * (s - t)) * u(s), 0.0, t,
                     points=list(points) or None, limit=400,
                     epsabs=1e-13, epsrel=1e-13)
    return val


def kre_response_quad(alpha: float, u, t: float, points=()) -> float:
    """Quadrature of int_0^t e^{-alpha (t - s)} u(s) ds."""
    val, _err = quad(lambda s: np.exp(-alpha * (t - s)) * u(s), 0.0, t,
                     points=list(points) or None, limit=400,
                     epsabs=1e-13, epsrel=1e-13)
    return val


def int_det(M) -> int:
    """Exact determinant of an integer matrix by cofactor expansion."""
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * int_det(minor)
        total += term if j % 2 == 0 else -term
    return total


def int_adjugate(M) -> list[list[int]]:
    """Exact adjugate of an integer matrix (transpose of the cofactor matrix)."""
    n = len(M)
    if n == 1:
        return [[1]]
    cof = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            cof[i][j] = (-1) ** (i + j) * int_det(minor)
    return [[cof[j][i] for j in range(n)] for i in range(n)]


def cumulative_trapezoid(values: np.ndarray, dx: float) -> np.ndarray:
    """Trapezoid cumulative integral starting at zero."""
    inc = 0.5 * (values[1:] + values[:-1]) * dx
    return np.concatenate(([0.0], np.cumsum(inc)))
