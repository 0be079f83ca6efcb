import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincat.spin_core import (
    CatSpec,
    DegenerateCatError,
    DickeState,
    closed_form_comparison,
    css_overlap,
    make_cat,
    make_css,
    moments_bruteforce,
    moments_closed_form,
    qfi_quadratic_model,
    qfi_symmetric_closed_form,
    qfi_z,
    rotate_xy,
    sx_operator,
    sy_operator,
    sz_operator,
    verify_qfi_stationarity,
)

ANGLE_THETA = st.floats(min_value=0.0, max_value=math.pi)
ANGLE_PHI = st.floats(min_value=-math.pi, max_value=math.pi, exclude_max=True)


def random_spec(rng) -> CatSpec:
    return CatSpec(
        rng.uniform(0.0, math.pi), rng.uniform(-math.pi, math.pi),
        rng.uniform(0.0, math.pi), rng.uniform(-math.pi, math.pi),
    )


class TestMakeCss:
    def test_all_spins_up(self):
        state = make_css(4, 0.0, 0.0)
        expected = np.zeros(5)
        expected[0] = 1.0
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_single_spin_equator(self):
        state = make_css(1, math.pi / 2, 0.0)
        np.testing.assert_allclose(state.amplitudes, [2**-0.5, 2**-0.5], atol=1e-15)

    @pytest.mark.parametrize("bad_n", [0, -1, -10])
    def test_invalid_atom_number(self, bad_n):
        with pytest.raises(ValueError):
            make_css(bad_n, 0.1, 0.2)

    def test_nonfinite_angle(self):
        with pytest.raises(ValueError):
            make_css(3, math.inf, 0.0)

    def test_overlap_matches_closed_form_example(self):
        direct = make_css(10, 0.3, 0.1).overlap(make_css(10, 1.1, -0.4))
        closed = css_overlap(10, 0.3, 0.1, 1.1, -0.4)
        assert abs(direct - closed) <= 1e-12

    def test_overlap_matches_closed_form_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 31))
            t1, t2 = rng.uniform(0.0, math.pi, 2)
            p1, p2 = rng.uniform(-math.pi, math.pi, 2)
            direct = make_css(n, t1, p1).overlap(make_css(n, t2, p2))
            assert abs(direct - css_overlap(n, t1, p1, t2, p2)) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 30), t1=ANGLE_THETA, p1=ANGLE_PHI,
           t2=ANGLE_THETA, p2=ANGLE_PHI)
    def test_overlap_identity_property(self, n, t1, p1, t2, p2):
        direct = make_css(n, t1, p1).overlap(make_css(n, t2, p2))
        assert abs(direct - css_overlap(n, t1, p1, t2, p2)) <= 1e-12

    def test_large_n_stays_finite(self):
        # log-space binomials keep N ~ 300 overflow-free
        state = make_css(300, 1.234, -0.7)
        assert math.isclose(state.norm, 1.0, abs_tol=1e-12)
        assert np.all(np.isfinite(state.amplitudes.view(float)))


class TestCatSpec:
    def test_symmetric_constructor(self):
        spec = CatSpec.symmetric(0.8)
        assert spec.theta1 == pytest.approx(math.pi / 2 - 0.4)
        assert spec.theta2 == pytest.approx(math.pi / 2 + 0.4)
        assert spec.phi1 == 0.0 and spec.phi2 == 0.0

    def test_symmetric_range_check(self):
        with pytest.raises(ValueError):
            CatSpec.symmetric(-0.1)
        with pytest.raises(ValueError):
            CatSpec.symmetric(math.pi + 0.1)

    def test_canonicalization(self):
        spec = CatSpec(-0.3, 1.0, math.pi + 0.2, 3.5)
        for theta, phi in ((spec.theta1, spec.phi1), (spec.theta2, spec.phi2)):
            assert 0.0 <= theta <= math.pi
            assert -math.pi <= phi < math.pi
        # (-0.3, 1.0) is the same direction as (0.3, 1.0 + pi)
        assert spec.theta1 == pytest.approx(0.3)
        assert spec.phi1 == pytest.approx(1.0 + math.pi - 2 * math.pi)

    def test_dphi(self):
        spec = CatSpec(0.4, -0.5, 1.2, 0.75)
        assert spec.dphi == pytest.approx(1.25)


class TestMakeCat:
    def test_zero_opening_angle_is_css(self):
        cat = make_cat(6, CatSpec.symmetric(0.0))
        assert cat.fidelity(make_css(6, math.pi / 2, 0.0)) == pytest.approx(1.0)

    def test_antipodal_two_atoms(self):
        # hand expansion: (|S,1> + |S,-1>) / sqrt(2)
        cat = make_cat(2, CatSpec.symmetric(math.pi))
        np.testing.assert_allclose(cat.amplitudes, [2**-0.5, 0.0, 2**-0.5], atol=1e-12)

    def test_normalized_for_random_specs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 31))
            cat = make_cat(n, random_spec(rng))
            assert abs(cat.norm - 1.0) <= 1e-12

    def test_degenerate_superposition_raises(self):
        # same direction, opposite phase: (1 + e^(i N pi)) |down...> = 0 for odd N
        spec = CatSpec(math.pi, 0.0, math.pi, math.pi)
        with pytest.raises(DegenerateCatError):
            make_cat(3, spec)
        make_cat(2, spec)  # even N is constructive


class TestOperators:
    @pytest.mark.parametrize("n", [1, 2, 5, 12, 30])
    def test_hermitian(self, n):
        for op in (sx_operator(n), sy_operator(n), sz_operator(n)):
            np.testing.assert_allclose(op.matrix, op.matrix.conj().T, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 30])
    def test_commutator(self, n):
        sx, sy, sz = sx_operator(n).matrix, sy_operator(n).matrix, sz_operator(n).matrix
        np.testing.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-10)

    def test_frozen_matrices(self):
        with pytest.raises(ValueError):
            sx_operator(4).matrix[0, 0] = 99.0


class TestMomentsBruteforce:
    @pytest.mark.parametrize("n", [1, 4, 9, 20])
    def test_polar_css(self, n):
        m = moments_bruteforce(make_css(n, 0.0, 0.0))
        assert m.sz == pytest.approx(n / 2, abs=1e-12)
        assert m.sz2 == pytest.approx(n * n / 4, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 7, 16])
    def test_equatorial_css(self, n):
        # binomial-distribution moments: mean N/2 along x, Var(S_z) = N/4
        m = moments_bruteforce(make_css(n, math.pi / 2, 0.0))
        assert m.sx == pytest.approx(n / 2, abs=1e-12)
        assert m.sz == pytest.approx(0.0, abs=1e-12)
        assert m.sz2 == pytest.approx(n / 4, abs=1e-12)

    @pytest.mark.parametrize("theta", [0.2, 1.0, 2.5, math.pi])
    def test_symmetric_cat_has_zero_sz(self, theta):
        m = moments_bruteforce(make_cat(12, CatSpec.symmetric(theta)))
        assert m.sz == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 25), theta=ANGLE_THETA, phi=ANGLE_PHI)
    def test_angular_momentum_sum_rule(self, n, theta, phi):
        s = n / 2
        m = moments_bruteforce(make_css(n, theta, phi))
        assert m.sx2 + m.sy2 + m.sz2 == pytest.approx(s * (s + 1), abs=1e-9)


class TestMomentsClosedForm:
    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(11)
        for trial in range(100):
            n = trial % 30 + 1
            spec = random_spec(rng)
            closed = moments_closed_form(n, spec)
            oracle = moments_bruteforce(make_cat(n, spec))
            for name in ("sx", "sy", "sz", "sx2", "sy2", "sz2"):
                assert getattr(closed, name) == pytest.approx(
                    getattr(oracle, name), abs=1e-9 * n * n
                ), f"{name} deviates for N={n}, spec={spec}"

    def test_collapsed_superposition_is_plain_css(self):
        spec = CatSpec(0.9, -1.1, 0.9, -1.1)
        closed = moments_closed_form(17, spec)
        oracle = moments_bruteforce(make_css(17, 0.9, -1.1))
        for name in ("sx", "sy", "sz", "sx2", "sy2", "sz2"):
            assert getattr(closed, name) == pytest.approx(getattr(oracle, name), abs=1e-10)

    def test_symmetric_cat_variance_equals_qfi_quarter(self):
        for n in (2, 9, 24):
            for theta in (0.4, 1.9, math.pi):
                closed = moments_closed_form(n, CatSpec.symmetric(theta))
                assert closed.sz == pytest.approx(0.0, abs=1e-12)
                assert 4.0 * closed.sz2 == pytest.approx(
                    qfi_symmetric_closed_form(n, theta), abs=1e-9 * n * n
                )

    def test_verbatim_transcription_is_flagged(self):
        # generic angles expose the suspect azimuthal factors and cross terms
        spec = CatSpec(0.7, 1.3, 2.1, -2.4)
        report = closed_form_comparison(12, spec)
        for entry in ("sx", "sy", "sz", "sx2", "sy2", "sz2"):
            assert report[entry]["corrected_abs_error"] <= 1e-9 * 144
        for entry in ("sy", "sx2", "sy2"):
            assert report[entry]["verbatim_abs_error"] > 1e-9 * 144

    def test_degenerate_spec_raises(self):
        with pytest.raises(DegenerateCatError):
            moments_closed_form(3, CatSpec(math.pi, 0.0, math.pi, math.pi))

    def test_unknown_convention(self):
        with pytest.raises(ValueError):
            moments_closed_form(4, CatSpec.symmetric(1.0), convention="guess")


class TestQfi:
    @pytest.mark.parametrize("n", [1, 3, 10, 40])
    def test_polar_css_is_zero(self, n):
        assert qfi_z(make_css(n, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("n", [1, 3, 10, 40])
    def test_equatorial_css_is_n(self, n):
        assert qfi_z(make_css(n, math.pi / 2, 0.0)) == pytest.approx(n, abs=1e-9)

    @pytest.mark.parametrize("n", [2, 8, 20])
    def test_antipodal_cat_reaches_n_squared(self, n):
        assert qfi_z(make_cat(n, CatSpec.symmetric(math.pi))) == pytest.approx(
            n * n, abs=1e-8 * n * n
        )

    def test_closed_form_value_two_atoms(self):
        assert qfi_symmetric_closed_form(2, math.pi / 2) == pytest.approx(8.0 / 3.0)
        assert qfi_z(make_cat(2, CatSpec.symmetric(math.pi / 2))) == pytest.approx(8.0 / 3.0)

    def test_closed_form_matches_state_over_grid(self):
        for n in range(1, 31):
            for theta in np.linspace(0.0, math.pi, 11):
                closed = qfi_symmetric_closed_form(n, theta)
                direct = qfi_z(make_cat(n, CatSpec.symmetric(theta)))
                assert closed == pytest.approx(direct, abs=1e-9)

    def test_closed_form_endpoints(self):
        for n in (3, 11, 27):
            assert qfi_symmetric_closed_form(n, 0.0) == pytest.approx(n)

    def test_large_n_asymptote(self):
        # at theta = pi the QFI approaches N^2 sin^2(theta/2)
        n = 120
        assert qfi_symmetric_closed_form(n, math.pi) == pytest.approx(n * n, rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 30), theta=ANGLE_THETA)
    def test_bounded_by_n_squared(self, n, theta):
        assert qfi_z(make_cat(n, CatSpec.symmetric(theta))) <= n * n + 1e-9

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 30), theta=ANGLE_THETA)
    def test_symmetric_cat_amplitude_mirror(self, n, theta):
        amps = make_cat(n, CatSpec.symmetric(theta)).amplitudes
        assert np.max(np.abs(amps - amps[::-1])) <= 1e-12


class TestStationarity:
    def test_first_derivatives_vanish(self):
        report = verify_qfi_stationarity(10, math.pi / 2, 1e-3)
        assert report.grad_norm <= 1e-6 * 100

    def test_negative_concavity_at_pi(self):
        report = verify_qfi_stationarity(10, math.pi, 1e-3)
        assert report.curvature_alpha <= 1e-6 * 100
        assert report.curvature_beta <= 1e-6 * 100

    def test_quadratic_model_with_oracle_moments(self):
        n, theta = 4, 0.3
        cat = make_cat(n, CatSpec.symmetric(theta))
        mom = moments_bruteforce(cat)
        for alpha in (-1e-2, 0.0, 1e-2):
            for beta in (-1e-2, 0.0, 1e-2):
                numeric = qfi_z(rotate_xy(cat, alpha, beta))
                model = qfi_quadratic_model(mom, alpha, beta)
                assert numeric == pytest.approx(model, abs=1e-4 * n * n)

    def test_step_validation(self):
        with pytest.raises(ValueError):
            verify_qfi_stationarity(6, 1.0, 0.0)
        with pytest.raises(ValueError):
            verify_qfi_stationarity(6, 1.0, 0.06)
        with pytest.raises(ValueError):
            verify_qfi_stationarity(6, 0.0, 1e-3)


class TestDickeState:
    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            DickeState(3, np.array([1.0, 0.0]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            DickeState(1, np.array([2.0, 0.0]))

    def test_amplitudes_are_read_only(self):
        state = make_css(5, 1.0, 0.5)
        with pytest.raises(ValueError):
            state.amplitudes[0] = 1.0

    def test_overlap_requires_matching_size(self):
        with pytest.raises(ValueError):
            make_css(3, 0.1, 0.0).overlap(make_css(4, 0.1, 0.0))
