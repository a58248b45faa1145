import numpy as np
import pytest

from gapflow.scattering import (
    Background,
    SamplingGrids,
    ScatteringData,
    SteplikeOperator,
    floquet,
    jost,
    piece_grid,
    reflection,
    scattering_data,
    scattering_data_from_json,
    scattering_data_to_json,
    translate_data,
    transmission,
    wronskian,
    wronskian_constant,
)
from gapflow.surface import decompose_spectra, rho

from oracles import single_site_eigenvalue, single_site_transmission

FREE = Background(0.5, 0.0)
FREE_OP = SteplikeOperator(FREE, FREE)
SINGLE_SITE = SteplikeOperator(FREE, FREE, ((0, 0.5, 0.75),))
STEP_OP = SteplikeOperator(Background(0.5, 0.0), Background(0.5, 3.0))
OVERLAP_OP = SteplikeOperator(
    Background(0.5, 0.0),
    Background(0.5, 1.5),
    ((-1, 0.45, 0.1), (0, 0.55, -0.2), (1, 0.5, 0.15)),
)


class TestFloquet:
    def test_powers(self):
        assert floquet(FREE, 1.25, 3, 1) == pytest.approx(0.125, abs=1e-14)

    def test_unimodular_on_band(self):
        for lam in (-0.9, 0.0, 0.7):
            for n in (-4, 1, 9):
                assert abs(abs(floquet(FREE, lam + 0j, n, 1)) - 1) < 1e-12

    def test_translation_covariance(self):
        shifted = Background(0.5, 3.0)
        assert shifted.w(17.0 / 4.0) == pytest.approx(FREE.w(5.0 / 4.0), abs=1e-14)

    def test_decay_direction(self):
        z = 2.0
        assert abs(floquet(FREE, z, 30, 1)) < 1e-10
        assert abs(floquet(FREE, z, -30, -1)) < 1e-10


class TestJost:
    def test_free_equals_floquet(self):
        for n in (-5, 0, 3):
            assert jost(FREE_OP, 1.7, n, 1) == pytest.approx(
                complex(floquet(FREE, 1.7, n, 1)), rel=1e-13
            )
            assert jost(FREE_OP, 1.7, n, -1) == pytest.approx(
                complex(floquet(FREE, 1.7, n, -1)), rel=1e-13
            )

    def test_single_site_hand_recurrence(self):
        beta = 0.75
        z = 1.9
        w = complex(FREE.w(z))
        assert jost(SINGLE_SITE, z, 0, 1) == pytest.approx(1.0, abs=1e-12)
        assert jost(SINGLE_SITE, z, -1, 1) == pytest.approx(
            1.0 / w - 2.0 * beta, abs=1e-12
        )

    @pytest.mark.parametrize("op", [SINGLE_SITE, STEP_OP, OVERLAP_OP])
    @pytest.mark.parametrize("z", [2.9 + 0.0j, -1.3 + 0.4j, 0.35 + 0j])
    def test_recurrence_residual(self, op, z):
        for side in (1, -1):
            vals = {n: jost(op, z, n, side) for n in range(-6, 7)}
            scale = max(abs(v) for v in vals.values())
            for n in range(-5, 6):
                res = (
                    op.a(n - 1) * vals[n - 1]
                    + op.a(n) * vals[n + 1]
                    + (op.b(n) - z) * vals[n]
                )
                assert abs(res) < 1e-12 * max(scale, 1.0)


class TestWronskian:
    def test_same_solution_vanishes(self):
        f = lambda n: jost(SINGLE_SITE, 2.2, n, 1)
        assert wronskian(SINGLE_SITE, f, f, 0) == pytest.approx(0.0, abs=1e-14)

    def test_free_value(self):
        z = 2.5
        w = complex(FREE.w(z))
        f = lambda n: w**n
        g = lambda n: w ** (-n)
        val = wronskian(FREE_OP, f, g, 0)
        assert val == pytest.approx(0.5 * (1.0 / w - w), abs=1e-12)

    def test_single_site_value(self):
        z = 2.1
        beta = 0.75
        w = complex(FREE.w(z))
        f = lambda n: jost(SINGLE_SITE, z, n, -1)
        g = lambda n: jost(SINGLE_SITE, z, n, 1)
        val, spread = wronskian_constant(SINGLE_SITE, f, g, range(-4, 5))
        assert val == pytest.approx(0.5 * (w - 1.0 / w) + beta, abs=1e-12)
        assert spread < 1e-10 * abs(val)

    @pytest.mark.parametrize("op", [SINGLE_SITE, STEP_OP, OVERLAP_OP])
    def test_n_invariance(self, op):
        z = -2.7
        f = lambda n: jost(op, z, n, -1)
        g = lambda n: jost(op, z, n, 1)
        value, spread = wronskian_constant(op, f, g, range(-5, 6))
        assert spread <= 1e-10 * abs(value)

    def test_non_solutions_flagged(self):
        f = lambda n: jost(SINGLE_SITE, 2.0, n, 1)
        g = lambda n: jost(SINGLE_SITE, 2.3, n, -1)
        with pytest.raises(ValueError):
            wronskian_constant(SINGLE_SITE, f, g, range(-4, 5))


class TestTransmission:
    def test_single_site_closed_form(self):
        for z in (1.9, -1.4, 1.25 + 0.5j):
            val = transmission(SINGLE_SITE, z)
            ref = complex(single_site_transmission(z, 0.75))
            assert val == pytest.approx(ref, rel=1e-12)

    def test_value_at_five_quarters(self):
        # beta = 1/4 gives T = 1.5 at z = 5/4
        op = SteplikeOperator(FREE, FREE, ((0, 0.5, 0.25),))
        assert transmission(op, 1.25) == pytest.approx(1.5, rel=1e-12)

    def test_free_identity(self):
        for lam in (-0.8, 0.3, 0.9):
            t = transmission(FREE_OP, lam + 0j)
            assert t == pytest.approx(1.0, abs=1e-12)
            assert reflection(FREE_OP, lam) == pytest.approx(0.0, abs=1e-12)

    def test_scattering_relation_on_band(self):
        # T+ psi- = conj(psi+) + R+ psi+ checked pointwise on sigma_+
        op = OVERLAP_OP
        lam = 1.9
        T = transmission(op, lam + 0j)
        R = reflection(op, lam)
        for n in (-3, 0, 2):
            lhs = T * jost(op, lam + 0j, n, -1)
            pp = jost(op, lam + 0j, n, 1)
            assert lhs == pytest.approx(np.conj(pp) + R * pp, abs=1e-10)


class TestScatteringData:
    def test_free_data_trivial(self):
        data = scattering_data(FREE_OP, SamplingGrids(per_piece=16))
        assert data.eigenvalues == ()
        assert np.max(np.abs(data.R_plus)) < 1e-12
        assert data.lam_T2.size == 0

    def test_single_site_eigenvalue(self):
        data = scattering_data(SINGLE_SITE, SamplingGrids(per_piece=16))
        assert len(data.eigenvalues) == 1
        ref = single_site_eigenvalue(0.75)
        assert data.eigenvalues[0] == pytest.approx(1.25, abs=1e-10)
        assert ref == pytest.approx(1.25, abs=1e-15)

    def test_eigenvalue_count_scan_stability(self):
        d1 = scattering_data(OVERLAP_OP, SamplingGrids(per_piece=16))
        d2 = scattering_data(
            OVERLAP_OP, SamplingGrids(per_piece=16, eigenvalue_scan=4000)
        )
        assert len(d1.eigenvalues) == len(d2.eigenvalues)
        np.testing.assert_allclose(d1.eigenvalues, d2.eigenvalues, atol=1e-10)

    def test_norming_positive_and_window_stable(self):
        from gapflow.scattering import _norming_constant

        data = scattering_data(SINGLE_SITE, SamplingGrids(per_piece=16))
        lam = data.eigenvalues[0]
        g1 = _norming_constant(SINGLE_SITE, lam, buffer=2)
        g2 = _norming_constant(SINGLE_SITE, lam, buffer=12)
        assert g1 > 0
        assert abs(g1 - g2) < 1e-10

    def test_reflection_bounded_and_unimodular(self):
        data = scattering_data(OVERLAP_OP, SamplingGrids(per_piece=24))
        sm, sp = data.surfaces()
        dec = decompose_spectra(sm.bands(), sp.bands())
        on_two = dec.sigma2.contains(data.lam_R)
        on_one = dec.sigma_plus1.contains(data.lam_R)
        mod = np.abs(data.R_plus)
        assert np.all(mod[on_two] <= 1.0 + 1e-10)
        assert np.max(np.abs(mod[on_one] - 1.0)) < 1e-8

    def test_unitarity_identity_on_overlap(self):
        # 1 - |R+|^2 = (rho+/rho-) |T+|^2 pointwise on the overlap
        op = OVERLAP_OP
        data = scattering_data(op, SamplingGrids(per_piece=24))
        sm, sp = data.surfaces()
        dec = decompose_spectra(sm.bands(), sp.bands())
        lam = data.lam_R[dec.sigma2.contains(data.lam_R)]
        T = transmission(op, lam.astype(complex))
        R = data.R_plus[dec.sigma2.contains(data.lam_R)]
        rat = np.asarray(rho(sp, (), lam.astype(complex))) / np.asarray(
            rho(sm, (), lam.astype(complex))
        )
        res = 1.0 - np.abs(R) ** 2 - (rat * np.abs(T) ** 2).real
        assert np.max(np.abs(res)) < 1e-8

    def test_json_roundtrip_bit_exact(self):
        data = scattering_data(OVERLAP_OP, SamplingGrids(per_piece=16))
        text = scattering_data_to_json(data)
        back = scattering_data_from_json(text)
        assert back.sigma_minus_edges == data.sigma_minus_edges
        np.testing.assert_array_equal(back.lam_R, data.lam_R)
        np.testing.assert_array_equal(back.R_plus, data.R_plus)
        np.testing.assert_array_equal(back.T_plus_sq, data.T_plus_sq)
        assert back.eigenvalues == data.eigenvalues
        assert scattering_data_to_json(back) == text


class TestTranslate:
    def test_trivial_case(self):
        data = scattering_data(FREE_OP, SamplingGrids(per_piece=16))
        lam = data.lam_R[4:7]
        out = translate_data(data, lam, np.ones(3, dtype=complex))
        np.testing.assert_allclose(out.T_minus, 1.0, atol=1e-12)
        np.testing.assert_allclose(out.R_minus, 0.0, atol=1e-12)

    def test_oracle_self_consistency(self):
        op = OVERLAP_OP
        data = scattering_data(op, SamplingGrids(per_piece=24))
        sm, sp = data.surfaces()
        dec = decompose_spectra(sm.bands(), sp.bands())
        mask = dec.sigma2.contains(data.lam_R)
        lam = data.lam_R[mask][3:-3]
        T = transmission(op, lam.astype(complex))
        out = translate_data(data, lam, T)
        R_direct = reflection(op, lam, side=-1)
        T_direct = transmission(op, lam.astype(complex), side=-1)
        assert np.max(np.abs(out.R_minus - R_direct)) < 1e-8
        assert np.max(np.abs(out.T_minus - T_direct)) < 1e-8
        # |R-| = |R+| on the overlap
        assert np.max(
            np.abs(np.abs(out.R_minus) - np.abs(data.R_plus[mask][3:-3]))
        ) < 1e-8


class TestGrids:
    def test_piece_grid_margins(self):
        g = piece_grid(0.0, 2.0, SamplingGrids(per_piece=16, edge_margin=1e-6))
        assert g.min() >= 1e-6 - 1e-15
        assert g.max() <= 2.0 - 1e-6 + 1e-15
        assert np.all(np.diff(g) > 0)

    def test_operator_validation(self):
        with pytest.raises(ValueError):
            SteplikeOperator(FREE, FREE, ((0, -0.5, 0.0),))
        with pytest.raises(ValueError):
            SteplikeOperator(FREE, FREE, ((0, 0.5, 0.0), (0, 0.4, 0.1)))
        with pytest.raises(ValueError):
            Background(-1.0, 0.0)
