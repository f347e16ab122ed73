"""Tongue tracer tests: locking witnesses, boundary roots, widths and the
adjacency pipeline.

Autonomous oracles: locking of dx/dt = sin(x) + a at rotation number zero
happens exactly for |a| <= 1, and tongue r meets s = 0 exactly at
a = sqrt(r^2 + 1).
"""

import math

import numpy as np
import pytest

from joslab.bessel import bessel_j
from joslab.flow import Params, rotation_number
from joslab.tongues import (
    Adjacency,
    TongueSlice,
    boundary_at,
    find_adjacencies,
    locking_witness,
    width_function,
)


class TestLockingWitness:
    def test_autonomous_origin_locked(self):
        w = locking_witness(Params(1.0, 0.0, 0.0), 0)
        assert w.locked and w.min_dev <= 0.0 <= w.max_dev

    def test_no_fixed_point_outside_band(self):
        """dx/dt = sin(x) + 2 has no zero, so no period-map fixed point."""
        w = locking_witness(Params(1.0, 2.0, 0.0), 0)
        assert not w.locked and w.min_dev > 0.0

    def test_parabolic_point_touches(self):
        """At a = sqrt(2), s = 0 the period map is a full deck translation:
        both deviations vanish."""
        w = locking_witness(Params(1.0, math.sqrt(2.0), 0.0), 1)
        assert abs(w.min_dev) < 1e-8 and abs(w.max_dev) < 1e-8

    def test_zero_tongue_contains_s_axis(self):
        """The whole axis a = 0 is locked at rotation number zero."""
        for s in (0.5, 3.0, 7.0):
            assert locking_witness(Params(1.0, 0.0, s), 0).locked

    def test_sample_count_validated(self):
        with pytest.raises(ValueError):
            locking_witness(Params(1.0, 0.0, 0.0), 0, n_samples=8)


class TestBoundaryAt:
    def test_autonomous_zero_tongue(self):
        """Locking at r = 0, s = 0 holds exactly for |a| <= |nu| = 1."""
        sl = boundary_at(0, 0.0, 1.0)
        assert abs(sl.g_minus + 1.0) < 1e-8
        assert abs(sl.g_plus - 1.0) < 1e-8

    def test_zero_width_pinch_at_axis(self):
        sl = boundary_at(1, 0.0, 1.0)
        assert abs(sl.g_minus - math.sqrt(2.0)) < 1e-6
        assert sl.width < 1e-6

    def test_bessel_asymptote_at_s20(self):
        """The boundary pair matches {1 - J1(-20), 1 + J1(-20)} within the
        asymptotic error; the branch labels swap at each zero of J1."""
        sl = boundary_at(1, 20.0, 1.0)
        amp = bessel_j(1, -20.0)
        pair = sorted((1.0 - amp, 1.0 + amp))
        assert abs(sl.g_minus - pair[0]) < 0.05
        assert abs(sl.g_plus - pair[1]) < 0.05

    def test_plateau_and_boundary_consistency(self):
        """Strictly inside the slice the rotation number locks at r; just
        outside the left edge the index-r fixed point disappears."""
        sl = boundary_at(0, 2.0, 1.0)
        eps = 0.25 * sl.width
        inside = rotation_number(Params(1.0, sl.g_minus + eps, 2.0))
        assert inside.locked_at == 0 and inside.rho == 0.0
        below = locking_witness(Params(1.0, sl.g_minus - 1e-4, 2.0), 0)
        above = locking_witness(Params(1.0, sl.g_minus + 1e-4, 2.0), 0)
        assert below.max_dev < 0.0 < above.max_dev

    def test_invalid_bracket_reports_empty(self):
        sl = boundary_at(0, 0.0, 1.0, bracket=(-3.0, -2.5))
        assert sl.empty and math.isnan(sl.width)
        assert TongueSlice.empty_slice(0, 0.0).empty


class TestWidthFunction:
    def test_widths_nonnegative_and_symmetric(self):
        slices_pos = width_function(0, 1.0, [2.0, 3.0], refine_minima=False)
        slices_neg = width_function(0, 1.0, [-3.0, -2.0], refine_minima=False)
        widths_pos = {sl.s: sl.width for sl in slices_pos}
        widths_neg = {sl.s: sl.width for sl in slices_neg}
        for s in (2.0, 3.0):
            assert widths_pos[s] >= 0.0
            assert abs(widths_pos[s] - widths_neg[-s]) < 1e-6

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValueError):
            width_function(0, 1.0, [3.0, 2.0])

    def test_refinement_adds_points_near_minimum(self):
        slices = width_function(0, 1.0, [2.25, 2.75, 3.25], refine_minima=True)
        assert len(slices) > 3

    def test_width_minima_approach_bessel_zeros(self):
        """For growing s the zero-width ordinates of tongue 0 drift onto the
        zeros of J_0 (scipy supplies the zeros as an oracle)."""
        from scipy.special import jn_zeros

        found = find_adjacencies(0, 1.0, (8.0, 12.5))
        zeros = jn_zeros(0, 4)[2:]  # third and fourth zeros: 8.6537, 11.7915
        assert len(found) == 2
        gaps = [abs(adj.s - z) for adj, z in zip(found, zeros)]
        assert gaps[0] < 0.2 and gaps[1] < 0.2
        assert gaps[1] < gaps[0]


class TestFindAdjacencies:
    def test_zero_tongue_first_adjacency(self):
        """One adjacency in s in (0.5, 4), on the axis a = 0, near (but not
        at) the first zero of J_0."""
        found = find_adjacencies(0, 1.0, (0.5, 4.0))
        assert len(found) == 1
        adj = found[0]
        assert abs(adj.a) < 1e-6
        assert 2.2 < adj.s < 3.2
        assert adj.identity_residual < 1e-6

    def test_first_tongue_adjacency_at_one(self):
        found = find_adjacencies(1, 1.0, (2.0, 6.0))
        assert len(found) == 1
        assert abs(found[0].a - 1.0) < 1e-6

    def test_adjacency_invariants(self):
        """Integer abscissa, matching sign, |abscissa| <= |r|, even gap."""
        for r, s_range in ((0, (0.5, 4.0)), (1, (2.0, 6.0))):
            for adj in find_adjacencies(r, 1.0, s_range):
                nearest = adj.nearest_integer
                assert adj.abscissa_residual < 1e-6
                assert nearest == 0 if r == 0 else np.sign(nearest) == np.sign(r)
                assert abs(nearest) <= abs(r)
                assert (r - nearest) % 2 == 0
                assert adj.s != 0.0

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            find_adjacencies(0, 1.0, (3.0, 2.0))
