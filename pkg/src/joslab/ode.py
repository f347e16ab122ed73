"""Adaptive explicit Runge-Kutta integration shared by the torus flow and the
complex linear system.

One embedded Dormand-Prince 5(4) stepper handles both real and complex state
vectors: complex states are repacked as real vectors of doubled dimension
before stepping and unpacked afterwards.  Contour integration in the complex
time plane is done by pulling the equation back to a real parameter
``u in [0, 1]`` along a path (circles around the origin and radial segments
are the only paths the rest of the package needs).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "IntegratorConfig",
    "OdeProblem",
    "Path",
    "IntegrationError",
    "StepUnderflowError",
    "MaxStepsExceededError",
    "integrate",
    "integrate_path",
    "circle_path",
    "radial_path",
]


class IntegrationError(RuntimeError):
    """Base class for integrator failures."""


class StepUnderflowError(IntegrationError):
    """The controller demanded a step below ``min_step`` (stiffness or a
    singularity on the integration path)."""


class MaxStepsExceededError(IntegrationError):
    """The step budget ran out before reaching the end of the interval."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    initial_step: float = 0.1
    max_steps: int = 2_000_000
    min_step: float = 1e-13

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if not (0.0 < self.min_step <= self.initial_step):
            raise ValueError("need 0 < min_step <= initial_step")


@dataclass(frozen=True)
class OdeProblem:
    """Initial value problem dy/dt = f(t, y) on [t0, t1].

    ``right_hand_side`` must be deterministic; ``y0`` may be real or complex,
    and the state is treated as a flat vector of length ``dimension``.
    """

    dimension: int
    right_hand_side: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    t1: float
    y0: np.ndarray

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        y0 = np.atleast_1d(np.asarray(self.y0))
        if y0.shape != (self.dimension,):
            raise ValueError("y0 shape does not match dimension")
        object.__setattr__(self, "y0", y0)


# Dormand-Prince 5(4) tableau.  The fifth order result is propagated; the
# difference coefficients E give the embedded fourth order error estimate.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

# PI step-size controller exponents for an order 4 error estimate.
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 6.0


def _integrate_real(rhs, t0, t1, y0, cfg):
    """Core stepper on float64 vectors.  Returns (y, error_sum, steps)."""
    span = t1 - t0
    direction = 1.0 if span > 0 else -1.0
    h = direction * min(cfg.initial_step, abs(span))
    t = t0
    y = np.array(y0, dtype=float)
    k = np.empty((7, y.size))
    k[0] = rhs(t, y)
    err_prev = 1.0
    err_accum = 0.0
    steps_used = 0
    attempts = 0

    while (t1 - t) * direction > 0.0:
        if abs(h) > abs(t1 - t):
            h = t1 - t
        if abs(h) < cfg.min_step:
            raise StepUnderflowError(
                f"step {abs(h):.3e} below min_step at t={t:.6g}"
            )
        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ k[:i])
            k[i] = rhs(t + _DP_C[i] * h, yi)
        y_new = y + h * (_DP_B @ k)
        err_vec = h * (_DP_E @ k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceededError(
                f"exceeded {cfg.max_steps} step attempts at t={t:.6g}"
            )

        if err <= 1.0:
            t = t + h
            y = y_new
            k[0] = k[6]  # FSAL
            steps_used += 1
            err_accum += err * float(np.max(scale))
            fac = _SAFETY * err ** (-_PI_ALPHA) * err_prev**_PI_BETA if err > 0 else _FAC_MAX
            err_prev = max(err, 1e-10)
        else:
            fac = max(_FAC_MIN, _SAFETY * err ** (-0.2))
        h = h * min(_FAC_MAX, max(_FAC_MIN, fac))

    return y, err_accum, steps_used


def _pack_complex(z):
    return np.concatenate([z.real, z.imag])


def _unpack_complex(v, n):
    return v[:n] + 1j * v[n:]


def integrate(problem: OdeProblem, cfg: IntegratorConfig | None = None):
    """Integrate ``problem`` to its endpoint.

    Returns ``(final_state, error_estimate, steps_used)`` where
    ``error_estimate`` is the accumulated local-error bound of the accepted
    steps.  Raises :class:`StepUnderflowError` or
    :class:`MaxStepsExceededError` on failure.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    if problem.t0 == problem.t1:
        raise ValueError("t0 and t1 must differ")
    y0 = problem.y0
    if not np.all(np.isfinite(y0)):
        raise ValueError("y0 must be finite")

    if np.iscomplexobj(y0):
        n = problem.dimension
        rhs = problem.right_hand_side

        def rhs_real(t, v):
            dz = np.asarray(rhs(t, _unpack_complex(v, n)), dtype=complex)
            return _pack_complex(dz)

        v, err, steps = _integrate_real(
            rhs_real, problem.t0, problem.t1, _pack_complex(y0.astype(complex)), cfg
        )
        return _unpack_complex(v, n), err, steps

    y, err, steps = _integrate_real(
        problem.right_hand_side, problem.t0, problem.t1, y0.astype(float), cfg
    )
    return y, err, steps


@dataclass(frozen=True)
class Path:
    """Piecewise-smooth path u in [0,1] -> gamma(u) in the complex plane."""

    point: Callable[[float], complex]
    velocity: Callable[[float], complex]


def circle_path(radius: float, start_angle: float = 0.0, turns: float = 1.0) -> Path:
    """Arc of |tau| = radius, counterclockwise for turns > 0."""
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    w = 2j * np.pi * turns

    def point(u):
        return radius * np.exp(1j * start_angle + w * u)

    return Path(point=point, velocity=lambda u: w * point(u))


def radial_path(tau_from: complex, tau_to: complex) -> Path:
    """Straight segment between two points (used along rays arg tau = const)."""
    step = complex(tau_to) - complex(tau_from)
    return Path(point=lambda u: tau_from + u * step, velocity=lambda u: step)


def integrate_path(
    rhs_tau: Callable[[complex, np.ndarray], np.ndarray],
    z0: np.ndarray,
    path: Path,
    cfg: IntegratorConfig | None = None,
):
    """Integrate dz/dtau = rhs_tau(tau, z) along ``path``.

    The complex equation is pulled back to the real parameter through
    dz/du = rhs_tau(gamma(u), z) * gamma'(u) and handed to :func:`integrate`.
    Returns ``(final_state, error_estimate, steps_used)``.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))

    def rhs(u, z):
        return np.asarray(rhs_tau(path.point(u), z)) * path.velocity(u)

    problem = OdeProblem(
        dimension=z0.size, right_hand_side=rhs, t0=0.0, t1=1.0, y0=z0
    )
    return integrate(problem, cfg)
