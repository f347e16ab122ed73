"""Complex-system tests: Riccati consistency, monodromy identities, the
canonical series against direct substitution into the equation, analytic
continuation and the argument-principle counts.

Two parameter points located by the adjacency search are frozen below; each
test that uses them re-establishes the property it needs (identity residual,
monodromy closeness) rather than trusting the constants.
"""

import cmath
import math

import numpy as np
import pytest

from joslab.flow import TWO_PI, Params, period_map
from joslab.monodromy import (
    INF,
    LinearSystem,
    RecurrenceSingularError,
    SeedInaccurateError,
    canonical_series,
    choose_seed_radius,
    circle_diagnostics,
    condition_star,
    continue_canonical,
    count_poles_unit_disk,
    mobius_apply,
    monodromy,
    riccati_rhs,
)
from joslab.ode import circle_path, integrate_path

ADJ_R0 = Params(1.0, 0.0, 2.678116802)
ADJ_R1 = Params(1.0, 1.0, 4.045961142)


class TestRiccatiRhs:
    def test_at_base_point(self):
        """dp/dtau at tau = 1, p = 0 is i*nu/2 by direct substitution."""
        for nu in (1.0, 0.6, 2.0):
            val = riccati_rhs(Params(nu, 0.3, 2.0), 1.0, 0.0)
            assert abs(val - 0.5j * nu) < 1e-15

    def test_vanishing_nu_keeps_invariant_section(self):
        """The drift at p = 0 is proportional to nu: p = 0 stays put in the
        nu -> 0 limit."""
        val = riccati_rhs(Params(1e-300, 0.4, 1.0), 0.7 + 0.2j, 0.0)
        assert abs(val) < 1e-299

    def test_matches_quotient_rule(self):
        """Projectivization oracle: d(z2/z1) computed from the linear system
        agrees with the Riccati field at random points."""
        rng = np.random.default_rng(5)
        sys = LinearSystem(Params(1.3, 0.4, 2.2))
        for _ in range(20):
            tau = complex(rng.normal(), rng.normal())
            if abs(tau) < 0.1:
                continue
            p = complex(rng.normal(), rng.normal())
            dz = sys.coefficient(tau) @ np.array([1.0, p], dtype=complex)
            assert abs((dz[1] - p * dz[0]) - riccati_rhs(sys.params, tau, p)) < 1e-12

    def test_coefficient_trace(self):
        """trace(A(tau)/tau^2) = i s/(2 tau^2) - i s/2 + a/tau."""
        sys = LinearSystem(Params(0.8, 1.1, 3.0))
        for tau in (0.3 + 0.1j, 1.0, -0.7j):
            expected = 0.5j * 3.0 / tau**2 - 0.5j * 3.0 + 1.1 / tau
            assert abs(np.trace(sys.coefficient(tau)) - expected) < 1e-12


class TestMonodromy:
    def test_closed_form_at_origin(self):
        """At a = s = 0 the pulled-back system is constant and the monodromy
        is exp(-pi*nu*[[0,1],[1,0]])."""
        m = monodromy(Params(1.0, 0.0, 0.0))
        ref = np.array(
            [
                [math.cosh(math.pi), -math.sinh(math.pi)],
                [-math.sinh(math.pi), math.cosh(math.pi)],
            ]
        )
        assert np.max(np.abs(m.matrix - ref)) < 1e-8

    def test_determinant_identity_and_error_bound(self):
        """det M = exp(2*pi*i*a), within 100x the accumulated error bound."""
        rng = np.random.default_rng(11)
        for _ in range(5):
            a = float(rng.uniform(-3, 3))
            s = float(rng.uniform(0, 10))
            m = monodromy(Params(1.0, a, s))
            dev = abs(np.linalg.det(m.matrix) - cmath.exp(2j * math.pi * a))
            assert dev < 1e-8
            assert dev <= 100.0 * m.integration_error

    def test_identity_at_adjacency(self):
        """Projectively trivial monodromy with integer abscissa is the
        identity matrix."""
        for params in (ADJ_R0, ADJ_R1):
            m = monodromy(params)
            assert np.max(np.abs(m.matrix - np.eye(2))) < 1e-5
            assert m.projective_deviation < 1e-6

    def test_generic_point_not_projectively_trivial(self):
        m = monodromy(Params(1.0, 0.0, 0.0))
        assert m.projective_deviation > 0.5


class TestMobius:
    def test_identity_matrix(self):
        for p in (0.3 + 0.1j, 2.0, INF):
            assert mobius_apply(np.eye(2), p) == p

    def test_diagonal_action(self):
        m = np.diag([1.0, 2.5 + 0j])
        assert mobius_apply(m, 0.4) == pytest.approx(1.0, abs=1e-15)  # 2.5*0.4
        assert mobius_apply(m, 0.0) == 0.0

    def test_infinity_conventions(self):
        m = np.array([[1.0, 1.0], [0.0, 2.0]], dtype=complex)
        assert mobius_apply(m, INF) == pytest.approx(2.0)
        m_pole = np.array([[1.0, 1.0], [1.0, 0.0]], dtype=complex)
        assert mobius_apply(m_pole, -1.0) == INF

    def test_reproduces_period_map(self):
        """Moebius action of M on e^{ix} equals e^{i H(x)}: the circle flow
        is the projectivized monodromy."""
        params = Params(1.0, 0.7, 2.1)
        m = monodromy(params)
        for x in np.linspace(0.0, TWO_PI, 8, endpoint=False):
            image = mobius_apply(m.matrix, cmath.exp(1j * x))
            assert abs(abs(image) - 1.0) < 1e-8
            diff = (cmath.phase(image) - period_map(params, float(x))) % TWO_PI
            assert min(diff, TWO_PI - diff) < 1e-6


class TestUnitCircleInvariance:
    def test_riccati_flow_preserves_unit_circle(self):
        """|p| = 1 is invariant along |tau| = 1 (the real equation hides
        inside the complex one)."""
        params = Params(1.0, 0.8, 3.3)
        p0 = cmath.exp(0.9j)
        final, _, _ = integrate_path(
            lambda tau, p: np.array([riccati_rhs(params, tau, p[0])]),
            np.array([p0], dtype=complex),
            circle_path(1.0),
        )
        assert abs(abs(final[0]) - 1.0) < 1e-8


class TestCanonicalSeries:
    def test_constant_term_zero(self):
        sol = canonical_series(Params(1.0, 0.3, 2.0), 1, 12)
        assert sol.series_coefficients[0] == 0.0

    def test_linear_term(self):
        """Matching the tau^1 coefficient forces c1 = -nu/s."""
        for nu, s in ((1.0, 2.0), (0.7, -3.5), (2.0, 4.0)):
            sol = canonical_series(Params(nu, 0.4, s), 1, 8)
            assert abs(sol.series_coefficients[1] - (-nu / s)) < 1e-15

    def test_reciprocal_chart_linear_term(self):
        """The series of 1/psi_2 sees the sign-flipped parameters."""
        sol = canonical_series(Params(1.0, 0.4, 2.0), 2, 8)
        assert abs(sol.series_coefficients[1] - 0.5) < 1e-15

    def test_series_satisfies_equation(self):
        """Direct-substitution oracle: the truncated series leaves a residual
        of the truncation order in the equation."""
        params = Params(1.0, 0.3, 2.0)
        order = 16
        sol = canonical_series(params, 1, order)
        c = sol.series_coefficients

        def residual(tau):
            p = sum(c[k] * tau**k for k in range(order + 1))
            dp = sum(k * c[k] * tau ** (k - 1) for k in range(1, order + 1))
            return abs(dp - riccati_rhs(params, tau, p))

        r1, r2 = residual(0.1), residual(0.05)
        # tau^2 * residual is O(tau^{order+1}) with a constant of the size of
        # the next (factorially growing) coefficient, so the residual itself
        # is O(tau^{order-1}) and halving tau divides it by ~2^(order-1).
        assert r1 < 100.0 * abs(c[order]) * (order + 1) * 0.1 ** (order - 1)
        ratio = r1 / r2
        assert 2.0 ** (order - 1) / 8.0 < ratio < 2.0 ** (order - 1) * 8.0

    def test_growth_separates_adjacency_from_generic(self):
        """Bounded early coefficients at an adjacency, factorial blowup at a
        generic point."""
        def scale(params):
            c = canonical_series(params, 1, 20).series_coefficients
            return max(abs(c[n]) * 0.25**n for n in range(10, 21))

        assert scale(ADJ_R0) < 1e-3
        assert scale(Params(1.0, 0.37, 1.3)) > 1e3

    def test_s_zero_is_singular(self):
        with pytest.raises(RecurrenceSingularError):
            canonical_series(Params(1.0, 0.5, 0.0), 1, 8)

    @pytest.mark.parametrize("which,order", [(3, 8), (1, 1)])
    def test_invalid_arguments(self, which, order):
        with pytest.raises(ValueError):
            canonical_series(Params(1.0, 0.5, 1.0), which, order)


class TestSeedRadius:
    def test_usable_radius_at_adjacency(self):
        sol = canonical_series(ADJ_R0, 1, 40)
        eps = choose_seed_radius(sol)
        assert 0.01 <= eps <= 0.2

    def test_refusal_on_strong_divergence(self):
        """Small s makes the factorial tail dominate every radius down to
        the floor."""
        sol = canonical_series(Params(1.0, 0.37, 0.3), 1, 40)
        with pytest.raises(SeedInaccurateError):
            choose_seed_radius(sol)


@pytest.fixture(scope="module")
def continued():
    sol1 = continue_canonical(canonical_series(ADJ_R1, 1, 40), ADJ_R1)
    sol2 = continue_canonical(canonical_series(ADJ_R1, 2, 40), ADJ_R1)
    return sol1, sol2


class TestContinuation:
    def test_single_valuedness(self, continued):
        """At an adjacency the loop around |tau| = 1 closes up."""
        sol1, _ = continued
        diag = circle_diagnostics(sol1, ADJ_R1)
        assert diag["closure"] < 1e-6

    def test_side_classification(self, continued):
        """Each |psi_j| stays on one side of the unit circle."""
        sol1, sol2 = continued
        mods1 = np.abs(sol1.circle_values)
        mods2 = np.abs(sol2.circle_values)
        assert mods1.max() <= 1.0 + 1e-6 or mods1.min() >= 1.0 - 1e-6
        assert mods2.max() <= 1.0 + 1e-6 or mods2.min() >= 1.0 - 1e-6

    def test_solutions_never_meet(self, continued):
        sol1, sol2 = continued
        assert np.min(np.abs(sol1.circle_values - sol2.circle_values)) > 1e-3

    def test_diagnostics_requires_continuation(self):
        with pytest.raises(ValueError):
            circle_diagnostics(canonical_series(ADJ_R1, 1, 40), ADJ_R1)


class TestCounting:
    def test_pole_free_at_adjacency(self):
        sol = continue_canonical(canonical_series(ADJ_R0, 1, 40), ADJ_R0)
        pc = count_poles_unit_disk(sol, ADJ_R0)
        assert pc.count == 0
        assert pc.contour_residual < 0.1

    def test_rejects_psi2_solution(self):
        sol = canonical_series(ADJ_R0, 2, 40)
        with pytest.raises(ValueError):
            count_poles_unit_disk(sol, ADJ_R0)

    def test_condition_star_at_adjacencies(self):
        """rho = a at |nu| <= 1 adjacencies, so one branch must hold with a
        zero count."""
        for params, r in ((ADJ_R0, 0), (ADJ_R1, 1)):
            cs = condition_star(params)
            assert cs.holds and cs.branch in (1, 2)
            assert abs(cs.details["rho_from_count"] - r) < 1e-6
