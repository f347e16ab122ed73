"""Phase-locking predicate, tongue boundary curves and adjacency location.

For fixed s the deviation extrema

    max_dev(a) = max_x (H_a(x) - x - 2pi*r),   min_dev(a) = min_x (...)

are continuous and strictly increasing in a (the flow map moves every point
forward as a grows), the parameter is locked at r exactly when
min_dev <= 0 <= max_dev, and the boundary curves are the roots

    g-_r(s): max_dev(a) = 0,      g+_r(s): min_dev(a) = 0.

Root finding on these two scalar functions stays well conditioned even where
the tongue width vanishes, which is exactly where adjacency points live.  An
adjacency is then pinned down by Newton iteration on the deviations of two
sample points and confirmed with the identity-map test.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .bessel import bessel_j
from .flow import (
    TWO_PI,
    FLOW_CFG,
    IdentityCheck,
    Params,
    _advance_many,
    _refine_extremum,
    build_lift,
    is_identity_map,
)
from .ode import IntegratorConfig

__all__ = [
    "LockingWitness",
    "TongueSlice",
    "Adjacency",
    "locking_witness",
    "boundary_at",
    "width_function",
    "find_adjacencies",
]

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class LockingWitness:
    """Extrema of H(x) - x - 2pi*r; locked exactly when they straddle zero."""

    r: int
    min_dev: float
    max_dev: float

    @property
    def locked(self) -> bool:
        return self.min_dev <= 0.0 <= self.max_dev


@dataclass(frozen=True)
class TongueSlice:
    """Intersection of tongue r with the horizontal line at ordinate s.

    ``empty`` marks a slice whose bracket never met the tongue; its g/width
    fields are NaN and must not be consumed.
    """

    r: int
    s: float
    g_minus: float
    g_plus: float
    width: float
    empty: bool = False

    @classmethod
    def empty_slice(cls, r: int, s: float) -> "TongueSlice":
        nan = float("nan")
        return cls(r=r, s=s, g_minus=nan, g_plus=nan, width=nan, empty=True)


@dataclass(frozen=True)
class Adjacency:
    """A located parameter point where the period map is the identity."""

    r: int
    a: float
    s: float
    identity_residual: float
    abscissa_residual: float

    @property
    def nearest_integer(self) -> int:
        return int(round(self.a))


def locking_witness(
    params: Params,
    r: int,
    n_samples: int = 64,
    cfg: IntegratorConfig | None = None,
    refine_rounds: int = 3,
) -> LockingWitness:
    """Sampled extrema of the displacement defect, sharpened by a few exact
    ODE evaluations around the grid extrema."""
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    if cfg is None:
        cfg = FLOW_CFG
    lift = build_lift(params, cfg, n_samples)
    g = lift.displacements()
    j_min = int(np.argmin(g))
    j_max = int(np.argmax(g))
    _, g_min = _refine_extremum(
        params, float(lift.xs[j_min]), lift.spacing, cfg, maximize=False, rounds=refine_rounds
    )
    _, g_max = _refine_extremum(
        params, float(lift.xs[j_max]), lift.spacing, cfg, maximize=True, rounds=refine_rounds
    )
    target = TWO_PI * r
    return LockingWitness(r=r, min_dev=g_min - target, max_dev=g_max - target)


def _default_bracket(r: int, nu: float) -> tuple[float, float]:
    """Always-valid bracket: the differential inequality confines tongue r to
    a in [r - |nu|, r + |nu|]."""
    margin = abs(nu) + 0.3
    return (r - margin, r + margin)


def _seeded_bracket(r: int, s: float, nu: float) -> tuple[float, float]:
    """Bessel-asymptotic seed for |s| > 5, coarse-universal otherwise."""
    if abs(s) > 5.0:
        amp = abs(nu * bessel_j(r, -s / nu))
        return (r - amp - 0.15, r + amp + 0.15)
    return _default_bracket(r, nu)


def boundary_at(
    r: int,
    s: float,
    nu: float,
    bracket: tuple[float, float] | None = None,
    tol_a: float = 1e-8,
    cfg: IntegratorConfig | None = None,
    n_samples: int = 64,
    refine_rounds: int = 3,
) -> TongueSlice:
    """Boundary abscissas g-_r(s) and g+_r(s) of tongue r at ordinate s.

    The bracket must straddle the tongue (below it at the left end, above it
    at the right end); when it does not, the slice is reported empty rather
    than raised.
    """
    if cfg is None:
        cfg = FLOW_CFG

    cache: dict[float, LockingWitness] = {}

    def witness(a: float) -> LockingWitness:
        w = cache.get(a)
        if w is None:
            w = locking_witness(
                Params(nu, a, s), r, n_samples=n_samples, cfg=cfg, refine_rounds=refine_rounds
            )
            cache[a] = w
        return w

    # Below the tongue means max_dev < 0; above means min_dev > 0.  A caller
    # bracket is honored as-is; the internal seed widens itself up to the
    # always-valid bracket |a - r| <= |nu| + margin if it landed inside.
    if bracket is not None:
        lo, hi = bracket
    else:
        lo, hi = _seeded_bracket(r, s, nu)
        uni_lo, uni_hi = _default_bracket(r, nu)
        for _ in range(6):
            if witness(lo).max_dev < 0.0 or lo <= uni_lo:
                break
            lo = max(uni_lo, lo - 0.5 * (hi - lo))
        for _ in range(6):
            if witness(hi).min_dev > 0.0 or hi >= uni_hi:
                break
            hi = min(uni_hi, hi + 0.5 * (hi - lo))
    if not (witness(lo).max_dev < 0.0 and witness(hi).min_dev > 0.0):
        return TongueSlice.empty_slice(r, s)

    g_minus = brentq(lambda a: witness(a).max_dev, lo, hi, xtol=tol_a, rtol=1e-15)
    g_plus = brentq(lambda a: witness(a).min_dev, lo, hi, xtol=tol_a, rtol=1e-15)
    if g_plus < g_minus:
        # Zero-width pinch: the two independent roots may land out of order
        # by the root tolerance.
        mid = 0.5 * (g_minus + g_plus)
        g_minus = g_plus = mid
    return TongueSlice(r=r, s=s, g_minus=g_minus, g_plus=g_plus, width=g_plus - g_minus)


def width_function(
    r: int,
    nu: float,
    s_grid,
    tol_a: float = 1e-8,
    cfg: IntegratorConfig | None = None,
    refine_minima: bool = True,
    **kwargs,
) -> list[TongueSlice]:
    """Tongue slices over a sorted s grid, with one level of grid refinement
    around local width minima."""
    s_values = [float(s) for s in s_grid]
    if s_values != sorted(s_values):
        raise ValueError("s_grid must be sorted")
    slices = {s: boundary_at(r, s, nu, tol_a=tol_a, cfg=cfg, **kwargs) for s in s_values}
    if refine_minima:
        widths = [slices[s].width if not slices[s].empty else math.inf for s in s_values]
        for j in range(1, len(s_values) - 1):
            if widths[j] <= widths[j - 1] and widths[j] <= widths[j + 1] and math.isfinite(widths[j]):
                for s_new in (
                    0.5 * (s_values[j - 1] + s_values[j]),
                    0.5 * (s_values[j] + s_values[j + 1]),
                ):
                    if s_new not in slices:
                        slices[s_new] = boundary_at(r, s_new, nu, tol_a=tol_a, cfg=cfg, **kwargs)
    return [slices[s] for s in sorted(slices)]


class RefinementDiverged(RuntimeError):
    """Newton refinement of an adjacency candidate failed to converge."""


def _identity_defects(params: Params, r: int, xs: np.ndarray, cfg: IntegratorConfig):
    return _advance_many(params, xs, cfg) - xs - TWO_PI * r


def _refine_adjacency(
    r: int,
    nu: float,
    a0: float,
    s0: float,
    cfg: IntegratorConfig,
    max_iter: int = 40,
    f_tol: float = 1e-11,
    step_cap: float = 0.1,
):
    """Damped Newton iteration on the deviations of two sample points.

    The identity condition is codimension two in (a, s); vanishing of
    H(x) - x - 2pi*r at two generic points is the minimal system for it.
    """
    xs = np.array([0.0, 2.0])
    a, s = a0, s0
    f = _identity_defects(Params(nu, a, s), r, xs, cfg)
    fd = 1e-7
    for _ in range(max_iter):
        norm = float(np.max(np.abs(f)))
        if norm < f_tol:
            return a, s
        fa = _identity_defects(Params(nu, a + fd, s), r, xs, cfg)
        fs = _identity_defects(Params(nu, a, s + fd), r, xs, cfg)
        jac = np.column_stack([(fa - f) / fd, (fs - f) / fd])
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise RefinementDiverged("singular Jacobian") from exc
        step = np.clip(step, -step_cap, step_cap)
        lam = 1.0
        for _ in range(8):
            a_new, s_new = a + lam * step[0], s + lam * step[1]
            f_new = _identity_defects(Params(nu, a_new, s_new), r, xs, cfg)
            if float(np.max(np.abs(f_new))) < norm:
                a, s, f = a_new, s_new, f_new
                break
            lam *= 0.5
        else:
            raise RefinementDiverged("line search stalled")
    raise RefinementDiverged("no convergence within iteration budget")


def find_adjacencies(
    r: int,
    nu: float,
    s_range: tuple[float, float],
    tol: float = 1e-6,
    cfg: IntegratorConfig | None = None,
    scan_step: float = 0.25,
    defect_threshold: float = 1.2,
) -> list[Adjacency]:
    """Locate the identity-map points of tongue r with ordinates inside
    ``s_range``.

    The tongue width vanishes exactly where the period map is a deck
    translation, and those points carry the integer abscissa a = r, so the
    scan minimizes the cheap identity defect max_x |H(x) - x - 2pi*r| along
    the line a = r rather than re-tracing both boundary curves per ordinate.
    Each local minimum below the threshold seeds the two-parameter Newton
    refinement, whose result is confirmed with the identity-map test.  The
    pinch a tongue makes on the axis s = 0 is not an adjacency and is
    excluded.
    """
    if cfg is None:
        cfg = FLOW_CFG
    s_lo, s_hi = s_range
    if s_lo >= s_hi:
        raise ValueError("empty s_range")
    n_pts = max(4, int(math.ceil((s_hi - s_lo) / scan_step)) + 1)
    s_grid = np.linspace(s_lo, s_hi, n_pts)
    defects = []
    for s in s_grid:
        w = locking_witness(Params(nu, float(r), float(s)), r, n_samples=48, cfg=cfg, refine_rounds=1)
        defects.append(max(abs(w.min_dev), abs(w.max_dev)))

    candidates = []
    for j, d in enumerate(defects):
        if d > defect_threshold:
            continue
        left = defects[j - 1] if j > 0 else math.inf
        right = defects[j + 1] if j + 1 < len(defects) else math.inf
        if d <= left and d <= right:
            candidates.append(float(s_grid[j]))

    found: list[Adjacency] = []
    for s_cand in candidates:
        try:
            a_star, s_star = _refine_adjacency(r, nu, float(r), s_cand, cfg)
        except RefinementDiverged as exc:
            _LOG.warning("candidate at s=%.4f not refined: %s", s_cand, exc)
            continue
        if abs(s_star) < 0.05 or not (s_lo <= s_star <= s_hi):
            continue
        check: IdentityCheck = is_identity_map(Params(nu, a_star, s_star), tol=tol, cfg=cfg)
        if not check.identity or check.r != r:
            continue
        if any(abs(s_star - adj.s) < 1e-4 for adj in found):
            continue
        found.append(
            Adjacency(
                r=r,
                a=a_star,
                s=s_star,
                identity_residual=check.max_deviation,
                abscissa_residual=abs(a_star - round(a_star)),
            )
        )
    found.sort(key=lambda adj: adj.s)
    return found
