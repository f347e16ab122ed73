"""Bessel functions of the first kind, integer order.

Two independent evaluators keep the module self-verifying: the primary route
is the integral representation

    J_n(x) = (1/pi) * int_0^pi cos(n*theta - x*sin(theta)) d(theta)

on a 256-node composite Gauss-Legendre rule, and the ascending power series
serves as the oracle on |x| <= 12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BesselEval", "bessel_j", "bessel_j_series", "first_zero_j0"]


def _gauss_nodes(panels: int = 16, order: int = 16):
    """Composite Gauss-Legendre nodes/weights on [0, pi]."""
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    width = math.pi / panels
    nodes = []
    weights = []
    for k in range(panels):
        left = k * width
        nodes.append(left + 0.5 * width * (base_x + 1.0))
        weights.append(0.5 * width * base_w)
    return np.concatenate(nodes), np.concatenate(weights)


_NODES, _WEIGHTS = _gauss_nodes()
_SIN_NODES = np.sin(_NODES)


@dataclass(frozen=True)
class BesselEval:
    order: int
    argument: float
    value: float


def bessel_j(n: int, x: float) -> float:
    """J_n(x) by the integral representation (|value| <= 1 for real x)."""
    n = int(n)
    return float(np.dot(_WEIGHTS, np.cos(n * _NODES - x * _SIN_NODES)) / math.pi)


def bessel_j_series(n: int, x: float, tol: float = 1e-18) -> float:
    """Ascending series oracle; accurate for |x| <= 12, n <= 10 or so."""
    n = int(n)
    if n < 0:
        return (-1) ** n * bessel_j_series(-n, x, tol)
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = term
    m = 0
    while abs(term) > tol * max(1.0, abs(total)) and m < 200:
        m += 1
        term *= -(half * half) / (m * (n + m))
        total += term
    return total


def first_zero_j0(lo: float = 2.0, hi: float = 3.0, tol: float = 1e-13) -> float:
    """First positive zero of J_0 by bisection on the series evaluation."""
    f_lo = bessel_j_series(0, lo)
    f_hi = bessel_j_series(0, hi)
    if f_lo * f_hi > 0.0:
        raise ValueError("no sign change in bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_lo * bessel_j_series(0, mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
