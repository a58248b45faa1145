import numpy as np
import pytest

from gapflow.quadrature import (
    ErrorBudget,
    Polyline,
    QuadratureSpec,
    integrate_endpoint_singular,
    integrate_path,
    integrate_principal_value,
)
from gapflow.surface import HyperellipticSurface

from oracles import gap_reciprocal_integral, pv_cauchy, pv_excision

GENUS1 = HyperellipticSurface((-2.0, -1.0, 1.0, 2.0))


class TestEndpointSingular:
    def test_arcsine(self):
        val = integrate_endpoint_singular(
            lambda x: 1.0 / np.sqrt(1.0 - x * x), -1.0, 1.0, True, True
        )
        assert val == pytest.approx(np.pi, abs=1e-10)

    def test_moment(self):
        val = integrate_endpoint_singular(
            lambda x: x * x / np.sqrt(1.0 - x * x), -1.0, 1.0, True, True
        )
        assert val == pytest.approx(np.pi / 2, abs=1e-10)

    def test_elliptic_gap_integral_vs_agm(self):
        # 2 * integral over the gap of 1/R^(1/2): first entry of the period
        # matrix for the two-band surface, checked against the AGM oracle.
        expected = 2.0 * gap_reciprocal_integral(-2.0, -1.0, 1.0, 2.0)
        val = 2.0 * integrate_endpoint_singular(
            lambda x: 1.0 / np.real(GENUS1.sqrt_branch(x)), -1.0, 1.0, True, True
        )
        assert val == pytest.approx(expected, abs=1e-9)

    def test_substitution_exactness(self):
        val = integrate_endpoint_singular(
            lambda x: 1.0 / np.sqrt(x + 1.0), -1.0, 3.0, singular_left=True
        )
        assert val == pytest.approx(2.0 * 2.0, abs=1e-12)

    def test_additivity(self):
        f = lambda x: np.exp(x) / np.sqrt(3.0 - x)
        whole = integrate_endpoint_singular(f, 0.0, 3.0, False, True)
        parts = integrate_endpoint_singular(
            f, 0.0, 1.2, False, False
        ) + integrate_endpoint_singular(f, 1.2, 3.0, False, True)
        assert whole == pytest.approx(parts, abs=1e-9)

    def test_log_endpoint(self):
        # integral of log(x) on (0,1] = -1 exactly
        val = integrate_endpoint_singular(
            lambda x: np.log(x), 0.0, 1.0, singular_left=True
        )
        assert val == pytest.approx(-1.0, abs=1e-10)

    def test_budget_accumulates(self):
        budget = ErrorBudget()
        integrate_endpoint_singular(
            lambda x: 1.0 / np.sqrt(1.0 - x * x), -1.0, 1.0, True, True,
            budget=budget,
        )
        assert 0.0 <= budget.total < 1e-8


class TestPrincipalValue:
    def test_odd_symmetry(self):
        val = integrate_principal_value(
            lambda x: np.ones_like(x), 0.0, lambda x: np.ones_like(x), -1.0, 1.0,
            singular_left=False, singular_right=False,
        )
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_closed_form(self):
        val = integrate_principal_value(
            lambda x: np.ones_like(x), 0.5, lambda x: np.ones_like(x), -1.0, 1.0,
            singular_left=False, singular_right=False,
        )
        assert val == pytest.approx(np.log(1.0 / 3.0), abs=1e-12)

    def test_gap_weight_vs_excision_oracle(self):
        w = lambda x: 1.0 / np.real(GENUS1.sqrt_branch(x))
        val = integrate_principal_value(
            lambda x: np.ones_like(x), 0.3, w, -1.0, 1.0
        )
        ref = pv_excision(lambda x: 1.0 / GENUS1.sqrt_branch(x).real, -1.0, 1.0, 0.3)
        assert val == pytest.approx(ref, abs=1e-7)

    def test_vs_cauchy_weight_oracle(self):
        f = lambda x: np.cos(x)
        val = integrate_principal_value(
            f, 0.25, lambda x: np.ones_like(x), -1.0, 1.0,
            singular_left=False, singular_right=False,
        )
        ref = pv_cauchy(lambda x: np.cos(x), -1.0, 1.0, 0.25)
        assert val == pytest.approx(ref, abs=1e-9)

    def test_antisymmetry_even_weight(self):
        w = lambda x: 1.0 / np.sqrt(1.0 - x * x)
        plus = integrate_principal_value(lambda x: np.ones_like(x), 0.4, w, -1, 1)
        minus = integrate_principal_value(lambda x: np.ones_like(x), -0.4, w, -1, 1)
        assert plus == pytest.approx(-minus, abs=1e-9)

    def test_degenerate_pole_rejected(self):
        with pytest.raises(ValueError):
            integrate_principal_value(
                lambda x: np.ones_like(x), 1.0 - 1e-12, lambda x: np.ones_like(x),
                -1.0, 1.0,
            )


class TestPath:
    def test_antiderivative(self):
        path = Polyline((1.0, 1.0 + 1j, -1.0 + 1j))
        val = integrate_path(lambda z: 1.0 / z, path)
        assert val == pytest.approx(np.log(np.sqrt(2.0)) + 3j * np.pi / 4, abs=1e-10)

    def test_constant(self):
        path = Polyline((0.3 + 0.1j, 2.0, 1.0 + 2.0j))
        val = integrate_path(lambda z: np.ones_like(z), path)
        assert val == pytest.approx((1.0 + 2.0j) - (0.3 + 0.1j), abs=1e-12)

    def test_polyline_validation(self):
        with pytest.raises(ValueError):
            Polyline((1.0,))
        with pytest.raises(ValueError):
            Polyline((1.0, 1.0, 2.0))

    def test_distance(self):
        path = Polyline((0.0, 1.0))
        assert path.distance_to(0.5 + 0.25j) == pytest.approx(0.25)
        assert path.distance_to(2.0) == pytest.approx(1.0)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            QuadratureSpec(rel_tol=-1.0)
        with pytest.raises(ValueError):
            QuadratureSpec(max_subdivisions=0)
