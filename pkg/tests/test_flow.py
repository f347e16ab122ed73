"""Torus flow and rotation number tests.

Oracles: equilibria of the autonomous field, a fixed-step RK4 reference
integrator, and the closed-form autonomous rotation number sqrt(a^2 - nu^2)
(cross-checked by quadrature in the acceptance suite).
"""

import math

import numpy as np
import pytest

from joslab.flow import (
    TWO_PI,
    Params,
    build_lift,
    is_identity_map,
    period_map,
    rotation_number,
)

# Located once by the adjacency search and frozen; the assertions below
# re-establish its defining property from scratch.
ADJ_R0 = Params(1.0, 0.0, 2.678116802)


def rk4_period_map(params, x0, n_steps=1_000_000):
    """Brute-force fixed-grid RK4 over one period; independent of the
    adaptive production path."""
    nu, a, s = params.nu, params.a, params.s
    h = TWO_PI / n_steps
    x = float(x0)
    t = 0.0
    f = lambda t, x: nu * math.sin(x) + a + s * math.sin(t)
    for _ in range(n_steps):
        k1 = f(t, x)
        k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f(t + h, x + h * k3)
        x += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return x


class TestPeriodMap:
    def test_equilibria_of_autonomous_field(self):
        """x = 0 and x = pi are equilibria of dx/dt = sin(x)."""
        assert period_map(Params(1, 0, 0), 0.0) == pytest.approx(0.0, abs=1e-12)
        assert period_map(Params(1, 0, 0), math.pi) == pytest.approx(math.pi, abs=1e-12)

    def test_against_fixed_step_oracle(self):
        """Adaptive path agrees with a million-step RK4 at a = 5."""
        params = Params(1.0, 5.0, 0.0)
        oracle = rk4_period_map(params, 0.0)
        assert abs(period_map(params, 0.0) - oracle) < 1e-8
        # Fast-rotation asymptote: displacement near 2*pi*sqrt(a^2-1).
        assert abs((oracle - 0.0) - TWO_PI * math.sqrt(24.0)) < 0.1

    def test_forced_point_against_oracle(self):
        params = Params(1.0, 0.4, 1.7)
        oracle = rk4_period_map(params, 1.0, n_steps=400_000)
        assert abs(period_map(params, 1.0) - oracle) < 1e-8

    def test_equivariance(self):
        """H(x + 2pi) = H(x) + 2pi for the integrated map."""
        params = Params(1.0, 0.3, 1.2)
        assert period_map(params, 0.7 + TWO_PI) == pytest.approx(
            period_map(params, 0.7) + TWO_PI, abs=1e-10
        )

    def test_nu_zero_rejected(self):
        with pytest.raises(ValueError):
            Params(0.0, 1.0, 1.0)


class TestLiftMap:
    def test_samples_increasing(self):
        lift = build_lift(Params(1.0, 0.2, 2.0), n_samples=64)
        hs = np.array([h for _, h in lift.samples])
        assert np.all(np.diff(hs) > 0.0)

    def test_eval_matches_integration_off_grid(self):
        """Interpolation error is third order: small at 256 samples and
        roughly eight times smaller again after doubling."""
        params = Params(1.0, 0.3, 1.0)
        coarse = build_lift(params, n_samples=256)
        fine = build_lift(params, n_samples=512, reuse=coarse)
        err_coarse = err_fine = 0.0
        for x in (0.123, 2.918, 5.5):
            exact = period_map(params, x)
            err_coarse = max(err_coarse, abs(coarse.eval(x) - exact))
            err_fine = max(err_fine, abs(fine.eval(x) - exact))
        assert err_coarse < 2e-6
        assert err_fine < err_coarse / 4.0

    def test_eval_equivariant(self):
        lift = build_lift(Params(1.0, 0.3, 1.0), n_samples=64)
        assert lift.eval(1.0 + 3 * TWO_PI) == pytest.approx(lift.eval(1.0) + 3 * TWO_PI, abs=1e-12)

    def test_reuse_refines_consistently(self):
        params = Params(1.0, 0.7, 3.0)
        coarse = build_lift(params, n_samples=64)
        fine = build_lift(params, n_samples=128, reuse=coarse)
        direct = build_lift(params, n_samples=128)
        assert np.max(np.abs(fine.hs - direct.hs)) < 1e-10


class TestRotationNumber:
    def test_zero_axis_locked(self):
        """a = 0 locks at rotation number zero for any s."""
        res = rotation_number(Params(1.0, 0.0, 2.5))
        assert res.locked_at == 0 and res.rho == 0.0

    def test_queer_point_locked_at_one(self):
        res = rotation_number(Params(1.0, math.sqrt(2.0), 0.0))
        assert res.locked_at == 1 and res.rho == 1.0

    def test_autonomous_closed_form(self):
        """rho(a, 0) = sqrt(a^2 - 1); frozen from the period integral."""
        res = rotation_number(Params(1.0, 3.0, 0.0))
        assert res.locked_at is None
        assert abs(res.rho - 2.8284271247461903) < 1e-6

    def test_locked_invariant(self):
        """locked_at present implies |rho - r| < residual."""
        res = rotation_number(Params(1.0, 0.5, 0.0))
        assert res.locked_at == 0
        assert abs(res.rho - res.locked_at) < res.residual

    def test_base_point_independence(self):
        params = Params(1.0, 2.0, 1.0)
        r0 = rotation_number(params, x0=0.0)
        r1 = rotation_number(params, x0=1.0)
        assert abs(r0.rho - r1.rho) <= 2.0 * max(r0.residual, r1.residual) + 1e-12

    def test_s_reflection_symmetry(self):
        a, s = 1.9, 4.3
        r1 = rotation_number(Params(1.0, a, s), tol=1e-8)
        r2 = rotation_number(Params(1.0, a, -s), tol=1e-8)
        assert abs(r1.rho - r2.rho) < 1e-7

    def test_odd_symmetry_in_a(self):
        a, s = 1.9, 4.3
        r1 = rotation_number(Params(1.0, a, s), tol=1e-8)
        r2 = rotation_number(Params(1.0, -a, s), tol=1e-8)
        assert abs(r1.rho + r2.rho) < 1e-7

    def test_monotone_in_a(self):
        s = 3.0
        rhos = [rotation_number(Params(1.0, a, s), tol=1e-8).rho for a in (0.0, 0.7, 1.4, 2.1)]
        assert all(r1 - r0 >= -1e-9 for r0, r1 in zip(rhos, rhos[1:]))

    def test_bounds_for_small_nu(self):
        """a - 1 <= rho <= a + 1 when |nu| <= 1."""
        for a, s in ((0.8, 2.0), (-1.7, 6.0), (2.4, 9.0)):
            rho = rotation_number(Params(1.0, a, s), tol=1e-8).rho
            assert a - 1.0 - 1e-8 <= rho <= a + 1.0 + 1e-8

    def test_nonconvergence_flagged(self):
        """A starved iteration budget must be reported, not hidden."""
        res = rotation_number(Params(1.0, 3.0, 0.0), max_periods=8, tol=1e-12)
        assert not res.converged and res.residual > 1e-12

    def test_max_periods_validated(self):
        with pytest.raises(ValueError):
            rotation_number(Params(1.0, 1.0, 1.0), max_periods=0)


class TestIsIdentityMap:
    def test_autonomous_not_identity(self):
        """dx/dt = sin(x) has hyperbolic fixed points; H is not the
        identity."""
        check = is_identity_map(Params(1.0, 0.0, 0.0))
        assert not check.identity and check.max_deviation > 1e-3

    def test_partial_locking_not_identity(self):
        check = is_identity_map(Params(1.0, 0.5, 0.0))
        assert not check.identity

    def test_identity_at_adjacency(self):
        check = is_identity_map(ADJ_R0, tol=1e-6)
        assert check.identity and check.r == 0
        assert check.max_deviation < 1e-6

    def test_sample_count_validated(self):
        with pytest.raises(ValueError):
            is_identity_map(Params(1.0, 0.0, 1.0), n_samples=4)
