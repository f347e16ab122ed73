"""The complex side of the torus equation: the 2x2 linear system

    dz/dtau = A(tau)/tau^2 * z,
    A(tau) = [[0, i*nu*tau/2], [i*nu*tau/2, i*s/2*(1 - tau^2) + a*tau]],

its Riccati projectivization in the coordinate p = z2/z1, the monodromy
around the irregular point tau = 0, the canonical Riccati solutions psi_1,
psi_2 holomorphic at 0 (values 0 and infinity there), contour pole counting
in the unit disk and the two-sided boundary condition on |psi_j| that
characterizes rotation number == abscissa at adjacency parameters.

The substitution p = e^{ix}, tau = e^{it} identifies the circle flow with
the restriction of the Riccati flow to the unit torus, so the period map of
the real equation is the Moebius action of the monodromy matrix; that
correspondence is exercised by the tests rather than assumed.

The reciprocal chart q = 1/p turns the Riccati equation into the same family
with (a, s) -> (-a, -s); psi_2 of one parameter point is therefore 1/psi_1
of the flipped point, and all psi_2 machinery reuses the psi_1 code path
through that reduction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .flow import TWO_PI, Params
from .ode import (
    IntegratorConfig,
    IntegrationError,
    OdeProblem,
    circle_path,
    integrate,
    integrate_path,
    radial_path,
)

__all__ = [
    "INF",
    "LinearSystem",
    "Monodromy",
    "CanonicalSolution",
    "PoleCount",
    "ConditionStar",
    "RecurrenceSingularError",
    "SeedInaccurateError",
    "WindingError",
    "riccati_rhs",
    "monodromy",
    "mobius_apply",
    "canonical_series",
    "choose_seed_radius",
    "continue_canonical",
    "circle_diagnostics",
    "count_poles_unit_disk",
    "condition_star",
]

INF = float("inf")

# Tighter than the flow default: determinant and projectivization checks ride
# on this directly.
MONO_CFG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


class RecurrenceSingularError(ValueError):
    """The series recurrence divides by s; s = 0 has no such solutions."""


class SeedInaccurateError(RuntimeError):
    """No seed radius >= the floor met the truncation-agreement target."""


class WindingError(RuntimeError):
    """A winding integral refused to come out close to an integer."""


@dataclass(frozen=True)
class LinearSystem:
    """Coefficient data of the linear system for one parameter point."""

    params: Params

    def a_matrix(self, tau: complex) -> np.ndarray:
        nu, a, s = self.params.nu, self.params.a, self.params.s
        off = 0.5j * nu * tau
        return np.array(
            [[0.0, off], [off, 0.5j * s * (1.0 - tau * tau) + a * tau]], dtype=complex
        )

    def coefficient(self, tau: complex) -> np.ndarray:
        """A(tau)/tau^2; defined away from the irregular points 0, infinity."""
        return self.a_matrix(tau) / (tau * tau)


def riccati_rhs(params: Params, tau: complex, p: complex) -> complex:
    """dp/dtau of the projectivized system in the chart p = z2/z1."""
    nu, a, s = params.nu, params.a, params.s
    return (
        0.5j * nu * tau * (1.0 - p * p) + (a * tau + 0.5j * s * (1.0 - tau * tau)) * p
    ) / (tau * tau)


@dataclass(frozen=True)
class Monodromy:
    """Result of continuing the fundamental matrix once counterclockwise
    around tau = 0 along |tau| = 1 from the base point tau = 1."""

    matrix: np.ndarray
    base_point: complex
    integration_error: float
    projective_deviation: float


def _projective_deviation(m: np.ndarray) -> float:
    scale = max(abs(m[0, 0]), abs(m[1, 1]))
    return max(
        abs(m[0, 1]) / scale,
        abs(m[1, 0]) / scale,
        abs(m[0, 0] / m[1, 1] - 1.0),
    )


def _linear_rhs(params: Params):
    """Right-hand side for one or more stacked column solutions.

    State layout: the first half of the flat vector holds the z1 components,
    the second half the z2 components.
    """
    nu, a, s = params.nu, params.a, params.s

    def rhs(tau, zf):
        half = zf.size // 2
        z1, z2 = zf[:half], zf[half:]
        c12 = 0.5j * nu / tau
        c22 = (0.5j * s * (1.0 - tau * tau) + a * tau) / (tau * tau)
        return np.concatenate([c12 * z2, c12 * z1 + c22 * z2])

    return rhs


def monodromy(params: Params, cfg: IntegratorConfig | None = None) -> Monodromy:
    """Monodromy matrix of the linear system around |tau| = 1."""
    if cfg is None:
        cfg = MONO_CFG
    # Columns of the identity stacked as (z1 of both, z2 of both).
    z0 = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex)
    final, err, _ = integrate_path(_linear_rhs(params), z0, circle_path(1.0), cfg)
    m = np.array([[final[0], final[1]], [final[2], final[3]]])
    return Monodromy(
        matrix=m,
        base_point=1.0 + 0.0j,
        integration_error=err,
        projective_deviation=_projective_deviation(m),
    )


def mobius_apply(m, p):
    """Action of an invertible matrix on the projective coordinate p = z2/z1.

    ``float('inf')`` stands for the point at infinity on either side.
    """
    m = np.asarray(m, dtype=complex)
    if isinstance(p, float) and math.isinf(p):
        if m[0, 1] == 0.0:
            return INF
        return m[1, 1] / m[0, 1]
    num = m[1, 0] + m[1, 1] * p
    den = m[0, 0] + m[0, 1] * p
    if den == 0.0:
        return INF
    return num / den


@dataclass(frozen=True)
class CanonicalSolution:
    """Truncated power series of a canonical Riccati solution at tau = 0.

    ``which = 1`` holds the series of psi_1 itself (zero constant term);
    ``which = 2`` holds the series of 1/psi_2, again with zero constant term.
    ``circle_values`` (once filled) samples psi_which on |tau| = 1 at the
    uniformly spaced angles 2*pi*j/len(circle_values), j = 0, 1, ...
    """

    which: int
    series_coefficients: np.ndarray
    truncation_order: int
    seed_radius: float = 0.0
    circle_values: Optional[np.ndarray] = None


def canonical_series(params: Params, which: int, order: int = 40) -> CanonicalSolution:
    """Coefficients of the unique formal series solution with value 0
    (which = 1) or, in the reciprocal chart, of 1/psi_2 (which = 2).

    Matching powers of tau in the Riccati equation gives, with c_0 = 0,

        c_n = (2/(i s)) * [ (n-1-a) c_{n-1} + (i s/2) c_{n-2}
                            + (i nu/2) sum_{j=1}^{n-2} c_j c_{n-1-j} ]

    plus the inhomogeneous term -(i nu/2) at n = 1, so c_1 = -nu/s.  The
    reciprocal chart obeys the same equation with (a, s) -> (-a, -s).
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    if order < 2:
        raise ValueError("order must be >= 2")
    work = params if which == 1 else params.flipped()
    nu, a, s = work.nu, work.a, work.s
    if s == 0.0:
        raise RecurrenceSingularError("no holomorphic canonical solutions at s = 0")
    c = np.zeros(order + 1, dtype=complex)
    inv = 2.0 / (1j * s)
    for n in range(1, order + 1):
        acc = (n - 1 - a) * c[n - 1]
        if n == 1:
            acc += -0.5j * nu
        if n >= 2:
            acc += 0.5j * s * c[n - 2]
        if n >= 3:
            acc += 0.5j * nu * np.dot(c[1 : n - 1], c[n - 2 : 0 : -1])
        c[n] = inv * acc
    return CanonicalSolution(which=which, series_coefficients=c, truncation_order=order)


def _eval_series(coefficients: np.ndarray, tau: complex, order: int | None = None) -> complex:
    coef = coefficients if order is None else coefficients[: order + 1]
    val = 0.0 + 0.0j
    for ck in coef[::-1]:
        val = val * tau + ck
    return val


def choose_seed_radius(
    sol: CanonicalSolution,
    target: float = 1e-9,
    eps_max: float = 0.2,
    eps_min: float = 0.01,
) -> float:
    """Largest eps <= eps_max at which truncation at the full order and at
    ten orders fewer agree to ``target`` on a ring of sample angles.

    The series only converges at adjacency parameters; away from them (or too
    far from an adjacency in floating point) no usable radius exists and the
    caller gets a :class:`SeedInaccurateError`.
    """
    order = sol.truncation_order
    if order < 12:
        raise ValueError("truncation order too small for the agreement test")
    angles = np.arange(8) * (TWO_PI / 8)
    eps = eps_max
    while eps >= eps_min:
        disagreement = 0.0
        for theta in angles:
            tau = eps * cmath.exp(1j * theta)
            full = _eval_series(sol.series_coefficients, tau)
            lower = _eval_series(sol.series_coefficients, tau, order - 10)
            disagreement = max(disagreement, abs(full - lower))
        if disagreement < target:
            return eps
        eps *= 0.75
    raise SeedInaccurateError(
        f"no seed radius >= {eps_min} meets truncation agreement {target}"
    )


def _chordal(p: complex, q: complex) -> float:
    """Distance on the projective line; finite even near infinity."""
    if isinstance(p, float) and math.isinf(p):
        p = 1e300 + 0j
    if isinstance(q, float) and math.isinf(q):
        q = 1e300 + 0j
    return abs(p - q) / math.sqrt((1.0 + abs(p) ** 2) * (1.0 + abs(q) ** 2))


_CHART_SWITCH = 10.0


def _riccati_segment(params: Params, value: complex, path, cfg: IntegratorConfig) -> complex:
    final, _, _ = integrate_path(
        lambda tau, pv: np.array([riccati_rhs(params, tau, pv[0])]),
        np.array([value], dtype=complex),
        path,
        cfg,
    )
    return complex(final[0])


def _continue_riccati(
    params: Params,
    p_start: complex,
    waypoints: list[complex],
    cfg: IntegratorConfig,
) -> complex:
    """Continue a Riccati solution through straight/arc segments between
    consecutive waypoints, hopping to the reciprocal chart near poles.

    Waypoints that share a modulus are joined by arcs of that circle, others
    by straight segments; the two kinds cover every contour used here.
    """
    flip = params.flipped()
    value = p_start
    in_p = abs(value) <= _CHART_SWITCH
    if not in_p:
        value = 1.0 / value
    for k in range(len(waypoints) - 1):
        w0, w1 = waypoints[k], waypoints[k + 1]
        r0, r1 = abs(w0), abs(w1)
        if math.isclose(r0, r1, rel_tol=1e-12):
            dphi = cmath.phase(w1 / w0)
            if dphi <= 0.0:
                dphi += TWO_PI
            path = circle_path(r0, start_angle=cmath.phase(w0), turns=dphi / TWO_PI)
        else:
            path = radial_path(w0, w1)
        start = value
        try:
            value = _riccati_segment(params if in_p else flip, start, path, cfg)
        except IntegrationError:
            in_p = not in_p
            value = _riccati_segment(params if in_p else flip, 1.0 / start, path, cfg)
        if abs(value) > _CHART_SWITCH:
            value = 1.0 / value
            in_p = not in_p
    return value if in_p else (INF if value == 0.0 else 1.0 / value)


def _ray_waypoints(eps: float, theta: float, segments: int = 12) -> list[complex]:
    radii = np.geomspace(eps, 1.0, segments + 1)
    return [r * cmath.exp(1j * theta) for r in radii]


def continue_canonical(
    sol: CanonicalSolution,
    params: Params,
    cfg: IntegratorConfig | None = None,
    n_rays: int = 64,
) -> CanonicalSolution:
    """Fill ``circle_values`` by continuing the series seed to |tau| = 1.

    Rays are first integrated all at once in the p chart; rays that blow past
    the chart threshold (a pole close to the ray) are redone one at a time
    with chart switching.  Values are recorded in ray-angle order.
    """
    if cfg is None:
        cfg = MONO_CFG
    work = params if sol.which == 1 else params.flipped()
    eps = sol.seed_radius if sol.seed_radius > 0.0 else choose_seed_radius(sol)
    angles = np.arange(n_rays) * (TWO_PI / n_rays)
    taus0 = eps * np.exp(1j * angles)
    seeds = np.array([_eval_series(sol.series_coefficients, t) for t in taus0])

    nu, a, s = work.nu, work.a, work.s
    phase = np.exp(1j * angles)

    def rhs(u, p):
        tau = (eps + u * (1.0 - eps)) * phase
        dp_dtau = (
            0.5j * nu * tau * (1.0 - p * p)
            + (a * tau + 0.5j * s * (1.0 - tau * tau)) * p
        ) / (tau * tau)
        return dp_dtau * (1.0 - eps) * phase

    batched_ok = True
    try:
        final, _, _ = integrate(
            OdeProblem(dimension=n_rays, right_hand_side=rhs, t0=0.0, t1=1.0, y0=seeds),
            cfg,
        )
        if np.any(np.abs(final) > _CHART_SWITCH) or np.any(~np.isfinite(final.view(float))):
            batched_ok = False
    except IntegrationError:
        batched_ok = False

    if batched_ok:
        values = final
    else:
        values = np.empty(n_rays, dtype=complex)
        for j, theta in enumerate(angles):
            values[j] = _continue_riccati(
                work, complex(seeds[j]), _ray_waypoints(eps, float(theta)), cfg
            )

    if sol.which == 2:
        with np.errstate(divide="ignore"):
            values = np.where(values == 0.0, np.inf, 1.0 / values)
    return replace(sol, seed_radius=eps, circle_values=values)


def circle_diagnostics(
    sol: CanonicalSolution, params: Params, cfg: IntegratorConfig | None = None
) -> dict:
    """Continue the solution once around |tau| = 1 and compare against the
    recorded ray values: loop closure and ray-vs-loop agreement, both in the
    chordal metric."""
    if cfg is None:
        cfg = MONO_CFG
    if sol.circle_values is None:
        raise ValueError("call continue_canonical first")
    work = params if sol.which == 1 else params.flipped()
    n = len(sol.circle_values)
    ray_vals = sol.circle_values
    if sol.which == 2:
        with np.errstate(divide="ignore"):
            ray_vals = np.where(np.isinf(ray_vals), 0.0, 1.0 / ray_vals)
    value = complex(ray_vals[0])
    mismatch = 0.0
    for j in range(n):
        theta0 = TWO_PI * j / n
        theta1 = TWO_PI * (j + 1) / n
        value = _continue_riccati(
            work,
            value,
            [cmath.exp(1j * theta0), cmath.exp(1j * theta1)],
            cfg,
        )
        target = complex(ray_vals[(j + 1) % n])
        mismatch = max(mismatch, _chordal(value, target))
    closure = _chordal(value, complex(ray_vals[0]))
    return {"closure": closure, "ray_vs_loop": mismatch}


@dataclass(frozen=True)
class PoleCount:
    """Argument-principle count inside the open unit disk (multiplicity
    included); the residual is the distance of the raw winding difference to
    the nearest integer."""

    count: int
    contour_residual: float


def _winding_rhs(params: Params, component: int):
    nu, a, s = params.nu, params.a, params.s

    def rhs(tau, state):
        z1, z2 = state[0], state[1]
        c12 = 0.5j * nu / tau
        c22 = (0.5j * s * (1.0 - tau * tau) + a * tau) / (tau * tau)
        d1 = c12 * z2
        d2 = c12 * z1 + c22 * z2
        dw = d1 / z1 if component == 0 else d2 / z2
        return np.array([d1, d2, dw])

    return rhs


def _circle_winding(params, z_start, radius, component, cfg):
    """One counterclockwise turn; returns (z_end, Delta log z_component)."""
    state0 = np.array([z_start[0], z_start[1], 0.0], dtype=complex)
    final, _, _ = integrate_path(
        _winding_rhs(params, component), state0, circle_path(radius), cfg
    )
    return final[:2], complex(final[2])


def _transport_radial(params, z_start, tau0, tau1, cfg):
    final, _, _ = integrate_path(
        _linear_rhs(params), np.asarray(z_start, dtype=complex), radial_path(tau0, tau1), cfg
    )
    return final


def _argument_principle_count(
    params: Params, sol: CanonicalSolution, cfg: IntegratorConfig
) -> PoleCount:
    """Zeros of the tracked vector component in eps < |tau| < 1.

    For psi_1 the tracked component is z1 (its zeros are the poles of psi_1);
    for psi_2 it is z2 (zeros of psi_2).  Inside |tau| <= eps the component
    has no zeros: its logarithmic derivative is holomorphic there for psi_1
    and contributes the residue a (no zeros) for psi_2, which the inner
    winding picks up automatically.
    """
    # The count always runs on the original system; only the seed differs.
    eps = sol.seed_radius if sol.seed_radius > 0.0 else choose_seed_radius(sol)
    component = 0 if sol.which == 1 else 1
    last_residual = math.inf
    for _ in range(4):
        seed_val = _eval_series(sol.series_coefficients, complex(eps))
        if sol.which == 1:
            z0 = np.array([1.0, seed_val], dtype=complex)
        else:
            z0 = np.array([seed_val, 1.0], dtype=complex)
        try:
            _, dlog_in = _circle_winding(params, z0, eps, component, cfg)
            z_at_1 = _transport_radial(params, z0, complex(eps), 1.0 + 0.0j, cfg)
            _, dlog_out = _circle_winding(params, z_at_1, 1.0, component, cfg)
        except IntegrationError:
            eps *= 1.13  # a zero sits on or next to the contour; move it
            continue
        raw = (dlog_out.imag - dlog_in.imag) / TWO_PI
        count = round(raw)
        last_residual = abs(raw - count)
        if last_residual < 0.1:
            if count < 0:
                raise WindingError(f"negative zero count {count} from winding {raw:.6f}")
            return PoleCount(count=int(count), contour_residual=last_residual)
        eps *= 1.13  # a zero grazes the inner contour; move it
    raise WindingError(f"winding stayed {last_residual:.3f} from an integer")


def count_poles_unit_disk(
    sol: CanonicalSolution, params: Params, cfg: IntegratorConfig | None = None
) -> PoleCount:
    """Poles of psi_1 in the open unit disk, with multiplicity, by the
    argument principle applied to z1 along |tau| = eps and |tau| = 1."""
    if sol.which != 1:
        raise ValueError("pole counting expects the psi_1 solution")
    if cfg is None:
        cfg = MONO_CFG
    return _argument_principle_count(params, sol, cfg)


@dataclass(frozen=True)
class ConditionStar:
    """Outcome of the two-sided boundary test: branch 1 is psi_1 pole-free
    with |psi_1| <= 1 on the circle, branch 2 is psi_2 zero-free with
    |psi_2| >= 1 there; branch 0 means neither held."""

    holds: bool
    branch: int
    details: dict


_SIDE_SLACK = 1e-6


def condition_star(
    params: Params,
    cfg: IntegratorConfig | None = None,
    order: int = 40,
    n_rays: int = 64,
) -> ConditionStar:
    """Evaluate both branches of the boundary condition at (presumed)
    adjacency parameters."""
    if cfg is None:
        cfg = MONO_CFG
    details: dict = {"a": params.a, "s": params.s, "nu": params.nu}

    sol1 = continue_canonical(canonical_series(params, 1, order), params, cfg, n_rays)
    mods1 = np.abs(sol1.circle_values)
    details["eps_psi1"] = sol1.seed_radius
    details["max_mod_psi1"] = float(np.max(mods1))
    details["min_mod_psi1"] = float(np.min(mods1))
    if details["max_mod_psi1"] <= 1.0 + _SIDE_SLACK:
        poles = _argument_principle_count(params, sol1, cfg)
        details["pole_count_psi1"] = poles.count
        details["contour_residual_psi1"] = poles.contour_residual
        details["rho_from_count"] = params.a - 2.0 * poles.count
        if poles.count == 0:
            return ConditionStar(holds=True, branch=1, details=details)

    sol2 = continue_canonical(canonical_series(params, 2, order), params, cfg, n_rays)
    mods2 = np.abs(sol2.circle_values)
    details["eps_psi2"] = sol2.seed_radius
    details["max_mod_psi2"] = float(np.max(mods2))
    details["min_mod_psi2"] = float(np.min(mods2))
    if details["min_mod_psi2"] >= 1.0 - _SIDE_SLACK:
        zeros = _argument_principle_count(params, sol2, cfg)
        details["zero_count_psi2"] = zeros.count
        details["contour_residual_psi2"] = zeros.contour_residual
        details["rho_from_count"] = params.a + 2.0 * zeros.count
        if zeros.count == 0:
            return ConditionStar(holds=True, branch=2, details=details)

    return ConditionStar(holds=False, branch=0, details=details)
