import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from spincat.dynamics import (
    PulseSequence,
    SymmetricState,
    from_symmetric,
    propagate_oat,
    propagate_rotation,
    propagate_sequence,
    to_symmetric,
    transition_spectrum,
)
from spincat.spin_core import make_css, moments_bruteforce, sx_operator


def random_sequence(rng, n_pulses, q_scale=0.8) -> PulseSequence:
    return PulseSequence(tuple(
        (rng.uniform(0.0, q_scale), rng.uniform(-math.pi, math.pi))
        for _ in range(n_pulses)
    ))


class TestPulseSequence:
    def test_totals(self):
        seq = PulseSequence(((0.1, 0.3), (0.25, -1.0)))
        assert seq.n_pulses == 2
        assert seq.total_q() == pytest.approx(0.35)
        assert seq.normalized_q(16) == pytest.approx(4 * 0.35)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            PulseSequence(((math.nan, 0.0),))

    def test_inverse_structure(self):
        seq = PulseSequence(((0.1, 0.3), (0.25, -1.0)))
        inv = seq.inverse()
        assert inv.pulses == ((0.0, 1.0), (-0.25, -0.3), (-0.1, 0.0))
        assert PulseSequence(()).inverse().pulses == ()


class TestSinglePulses:
    def test_oat_identity(self):
        state = make_css(9, 1.1, 0.4)
        out = propagate_oat(state, 0.0)
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_rotation_identity(self):
        state = make_css(9, 1.1, 0.4)
        out = propagate_rotation(state, 0.0)
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-13)

    @pytest.mark.parametrize("n", [2, 6, 14])
    def test_oat_full_period_even_n(self, n):
        # integer m spectrum: exp(-i 2 pi m^2) = 1
        state = make_css(n, 0.9, -0.6)
        out = propagate_oat(state, 2.0 * math.pi)
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-12)

    def test_oat_squeezes_tilted_quadrature(self):
        # after a small shear, some x-rotation aligns a sub-projection-noise
        # quadrature with y; the raw y variance itself grows
        n = 20
        sheared = propagate_oat(make_css(n, math.pi / 2, 0.0), 0.05)
        variances = []
        for nu in np.linspace(-math.pi / 2, math.pi / 2, 121):
            m = moments_bruteforce(propagate_rotation(sheared, nu))
            variances.append(m.sy2 - m.sy**2)
        assert min(variances) < 0.5 * (n / 4)
        assert moments_bruteforce(sheared).sy2 > n / 4

    @pytest.mark.parametrize("n", [3, 8])
    def test_rotation_pi_flips_pole(self, n):
        flipped = propagate_rotation(make_css(n, 0.0, 0.0), math.pi)
        # the flipped state is the south-pole CSS up to a phi-convention phase
        assert abs(flipped.amplitudes[-1]) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n,sign", [(4, 1.0), (6, 1.0), (5, -1.0), (9, -1.0)])
    def test_rotation_double_cover(self, n, sign):
        state = make_css(n, 0.7, 0.2)
        out = propagate_rotation(state, 2.0 * math.pi)
        np.testing.assert_allclose(out.amplitudes, sign * state.amplitudes, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 5, 11])
    def test_rotation_matches_expm_oracle(self, n):
        state = make_css(n, 0.8, -1.2)
        mu = 0.83
        oracle = scipy.linalg.expm(-1j * mu * sx_operator(n).matrix) @ state.amplitudes
        out = propagate_rotation(state, mu)
        np.testing.assert_allclose(out.amplitudes, oracle, atol=1e-12)

    def test_nonfinite_parameters_rejected(self):
        state = make_css(4, 0.3, 0.0)
        with pytest.raises(ValueError):
            propagate_oat(state, math.inf)
        with pytest.raises(ValueError):
            propagate_rotation(state, math.nan)


class TestSequences:
    def test_empty_sequence_is_identity(self):
        state = make_css(7, 0.5, 0.1)
        out = propagate_sequence(state, PulseSequence(()))
        np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_operator_order_matches_product(self):
        # step k applies the shear before the rotation
        n = 6
        seq = PulseSequence(((0.2, 0.9), (0.35, -0.4)))
        sx = sx_operator(n).matrix
        sz2 = np.diag((n / 2 - np.arange(n + 1)) ** 2).astype(complex)
        unitary = (
            scipy.linalg.expm(-1j * seq.pulses[1][1] * sx)
            @ scipy.linalg.expm(-1j * seq.pulses[1][0] * sz2)
            @ scipy.linalg.expm(-1j * seq.pulses[0][1] * sx)
            @ scipy.linalg.expm(-1j * seq.pulses[0][0] * sz2)
        )
        state = make_css(n, math.pi / 2, 0.0)
        np.testing.assert_allclose(
            propagate_sequence(state, seq).amplitudes,
            unitary @ state.amplitudes,
            atol=1e-12,
        )

    def test_inverse_sequence_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(50)[:25]:
            n = int(rng.integers(2, 51))
            seq = random_sequence(rng, int(rng.integers(1, 7)))
            psi = make_css(n, math.pi / 2, 0.0)
            back = propagate_sequence(propagate_sequence(psi, seq), seq.inverse())
            assert back.fidelity(psi) >= 1.0 - 1e-10

    def test_order_swap_changes_state(self):
        # witnesses OAT/rotation non-commutativity
        n, q, mu = 12, 0.3, 1.1
        psi = make_css(n, math.pi / 2, 0.0)
        a = propagate_rotation(propagate_oat(psi, q), mu)
        b = propagate_oat(propagate_rotation(psi, mu), q)
        assert a.fidelity(b) < 1.0 - 1e-6

    def test_unitarity_single_pulse(self):
        psi = make_css(30, math.pi / 2, 0.0)
        assert abs(np.linalg.norm(propagate_oat(psi, 0.4).amplitudes) - 1.0) <= 1e-12
        assert abs(np.linalg.norm(propagate_rotation(psi, 2.3).amplitudes) - 1.0) <= 1e-12

    def test_unitarity_long_sequence(self):
        rng = np.random.default_rng(9)
        seq = random_sequence(rng, 12)
        out = propagate_sequence(make_css(25, math.pi / 2, 0.0), seq)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) <= 1e-12 * 12

    def test_symmetric_closure(self):
        rng = np.random.default_rng(17)
        for n in (8, 13, 20):
            psi = make_css(n, math.pi / 2, 0.0)
            out = propagate_sequence(psi, random_sequence(rng, 5))
            defect = np.max(np.abs(out.amplitudes - out.amplitudes[::-1]))
            assert defect <= 1e-10


class TestSymmetricSector:
    @pytest.mark.parametrize("n", [4, 9, 20])
    def test_roundtrip_identity(self, n):
        psi = make_css(n, math.pi / 2, 0.0)
        back = from_symmetric(to_symmetric(psi))
        np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)

    def test_m_zero_fixed_point(self):
        n = 6
        amps = np.zeros(n + 1)
        amps[n // 2] = 1.0  # |S, 0>
        from spincat.spin_core import DickeState

        sym = to_symmetric(DickeState(n, amps))
        assert sym.amplitudes[-1] == pytest.approx(1.0)
        assert np.linalg.norm(sym.amplitudes[:-1]) == pytest.approx(0.0, abs=1e-15)

    def test_asymmetric_input_rejected(self):
        psi = make_css(6, 0.4, 0.0)  # polar-ish CSS is not mirror symmetric
        with pytest.raises(ValueError):
            to_symmetric(psi)

    @pytest.mark.parametrize("n", [6, 15, 20])
    def test_reduced_matches_full_propagation(self, n):
        rng = np.random.default_rng(n)
        seq = random_sequence(rng, 3)
        psi = make_css(n, math.pi / 2, 0.0)
        full = propagate_sequence(psi, seq)
        reduced = propagate_sequence(to_symmetric(psi), seq)
        assert from_symmetric(reduced).fidelity(full) >= 1.0 - 1e-10

    def test_norm_preserved_by_projection(self):
        for n in (5, 8):
            sym = to_symmetric(make_css(n, math.pi / 2, 0.0))
            assert abs(np.linalg.norm(sym.amplitudes) - 1.0) <= 1e-12

    def test_symmetric_state_validation(self):
        with pytest.raises(ValueError):
            SymmetricState(6, np.zeros(3))  # wrong length
        with pytest.raises(ValueError):
            SymmetricState(6, np.zeros(4))  # unnormalized


class TestTransitionSpectrum:
    def test_four_atoms(self):
        assert transition_spectrum(4) == [(1.0, 1.0), (2.0, 3.0)]

    def test_six_atoms_rational_ratios(self):
        spectrum = transition_spectrum(6)
        assert [omega for _, omega in spectrum] == [1.0, 3.0, 5.0]
        for (_, w1), (_, w2) in zip(spectrum, spectrum[1:]):
            Fraction(w1 / w2).limit_denominator(1000)  # exactly representable

    @pytest.mark.parametrize("n", [2, 3, 7, 16, 41])
    def test_gaps_pairwise_distinct(self, n):
        gaps = [omega for _, omega in transition_spectrum(n)]
        assert len(set(gaps)) == len(gaps)

    def test_too_few_atoms(self):
        with pytest.raises(ValueError):
            transition_spectrum(1)
