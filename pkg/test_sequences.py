import math
import unittest

import numpy as np

from fiber import FiberProfile, NoiseParams, constant_profile, sample_profile, signed_phase
from jones import apply, named_state, pauli_x_pulse, rotation_pulse, state_fidelity
from sequences import (NO_PULSE_ERROR, PulseError, PulseSequence, SequenceError, boundaries, build_propagator,
                       cp_positions, cpmg_positions, custom_positions, no_pulses, pdd_positions,
                       repeated_cycles, sequence_from_descriptor, udd_positions, waveplate)


class TestPlacements(unittest.TestCase):
    def test_cpmg_positions(self):
        self.assertEqual(cpmg_positions(4, 8.0).positions, (1.0, 3.0, 5.0, 7.0))
        self.assertEqual(cpmg_positions(1, 2.0).positions, (1.0,))

    def test_cp_shares_cpmg_positions_with_y_pulses(self):
        cp = cp_positions(6, 3.0)
        cpmg = cpmg_positions(6, 3.0)
        self.assertEqual(cp.positions, cpmg.positions)
        self.assertEqual(cp.axis, "y")
        self.assertEqual(cpmg.axis, "x")

    def test_pdd_positions(self):
        self.assertEqual(pdd_positions(3, 8.0).positions, (2.0, 4.0, 6.0))

    def test_udd_positions(self):
        self.assertAlmostEqual(udd_positions(1, 6.0).positions[0], 3.0, delta=1e-12)
        two = udd_positions(2, 1.0).positions
        self.assertAlmostEqual(two[0], 0.25, delta=1e-12)
        self.assertAlmostEqual(two[1], 0.75, delta=1e-12)

    def test_generated_sequences_stay_inside_the_fiber(self):
        for make in (cpmg_positions, cp_positions, pdd_positions, udd_positions):
            for n in (1, 2, 7, 64):
                seq = make(n, 5.0)
                self.assertEqual(seq.n_pulses, n)
                self.assertGreater(seq.positions[0], 0.0)
                self.assertLess(seq.positions[-1], 5.0)

    def test_invalid_sequences(self):
        with self.assertRaises(SequenceError):
            cpmg_positions(0, 8.0)
        with self.assertRaises(SequenceError):
            cpmg_positions(4, -1.0)
        with self.assertRaises(SequenceError):
            custom_positions([1.0, 1.0], 8.0)
        with self.assertRaises(SequenceError):
            custom_positions([0.0, 4.0], 8.0)
        with self.assertRaises(SequenceError):
            custom_positions([4.0, 8.0], 8.0)
        with self.assertRaises(SequenceError):
            PulseSequence((1.0,), 2.0, "XY8")
        with self.assertRaises(SequenceError):
            PulseError(rotation_error=float("nan"))
        with self.assertRaises(SequenceError):
            PulseError(axis_angle=float("inf"))

    def test_repeated_cycles(self):
        seq = repeated_cycles(cpmg_positions(2, 4.0), 2)
        self.assertEqual(seq.positions, (1.0, 3.0, 5.0, 7.0))
        self.assertEqual(seq.fiber_length, 8.0)
        with self.assertRaises(SequenceError):
            repeated_cycles(cpmg_positions(2, 4.0), 0)

    def test_descriptors(self):
        self.assertEqual(sequence_from_descriptor("CPMG", 2, 8.0, cycles=2).positions, (1.0, 3.0, 5.0, 7.0))
        self.assertEqual(sequence_from_descriptor("CPMG", 0, 8.0).n_pulses, 0)
        self.assertEqual(sequence_from_descriptor("NONE", 4, 8.0).kind, "NONE")
        self.assertEqual(sequence_from_descriptor("CUSTOM", 0, 8.0, positions=[2.0, 5.0]).positions, (2.0, 5.0))
        with self.assertRaises(SequenceError):
            sequence_from_descriptor("SPIN", 2, 8.0)

    def test_boundaries(self):
        self.assertEqual(boundaries(cpmg_positions(2, 4.0)), (0.0, 1.0, 3.0, 4.0))
        self.assertEqual(boundaries(no_pulses(4.0)), (0.0, 4.0))


class TestPropagator(unittest.TestCase):
    def test_even_cpmg_refocuses_constant_birefringence(self):
        profile = constant_profile(0.73, 8.0)
        states = [named_state(tag) for tag in ("PLUS45", "MINUS45", "H", "V")]
        for n in range(2, 65, 2):
            u = build_propagator(profile, cpmg_positions(n, 8.0))
            for psi in states:
                self.assertAlmostEqual(state_fidelity(psi, apply(u, psi)), 1.0, delta=1e-10,
                                       msg=f"CPMG-{n} failed to refocus")

    def test_free_propagation_dephases(self):
        profile = constant_profile(0.5, 2.0)
        u = build_propagator(profile, no_pulses(2.0))
        psi = named_state("PLUS45")
        self.assertAlmostEqual(state_fidelity(psi, apply(u, psi)), math.cos(0.5) ** 2, delta=1e-12)

    def test_propagator_matches_signed_phase(self):
        profile = sample_profile(NoiseParams(seed=21), 8.0, 4)
        for n in (2, 4, 6, 10):
            seq = cpmg_positions(n, 8.0)
            u = build_propagator(profile, seq).matrix
            phi = signed_phase(profile, boundaries(seq))
            self.assertAlmostEqual(abs(u[0, 1]), 0.0, delta=1e-12)
            self.assertAlmostEqual(u[0, 0] / u[1, 1], np.exp(1j * phi), delta=1e-10)

    def test_fidelity_follows_signed_phase_for_any_count(self):
        # odd counts leave sigma_x times a diagonal; |+45> is its eigenstate
        psi = named_state("PLUS45")
        sequences = [cpmg_positions(n, 8.0) for n in (1, 2, 3, 5, 8)]
        sequences += [udd_positions(n, 8.0) for n in (3, 6, 7)]
        for stream in (1, 2, 3):
            profile = sample_profile(NoiseParams(seed=77), 8.0, stream)
            for seq in sequences:
                phi = signed_phase(profile, boundaries(seq))
                fid = state_fidelity(psi, apply(build_propagator(profile, seq), psi))
                self.assertAlmostEqual(fid, 0.5 * (1.0 + math.cos(phi)), delta=1e-10,
                                       msg=f"{seq.kind}-{seq.n_pulses} stream {stream}")

    def test_basis_states_survive_random_profiles(self):
        states = [named_state("H"), named_state("V")]
        for stream in range(1, 6):
            profile = sample_profile(NoiseParams(sigma_phase=3.0, seed=12), 8.0, stream)
            for seq in (cpmg_positions(2, 8.0), cpmg_positions(8, 8.0), udd_positions(6, 8.0),
                        pdd_positions(4, 8.0), no_pulses(8.0)):
                u = build_propagator(profile, seq)
                for psi in states:
                    self.assertAlmostEqual(state_fidelity(psi, apply(u, psi)), 1.0, delta=1e-10)

    def test_unitarity_over_many_segments(self):
        rng = np.random.default_rng(5)
        lengths = rng.uniform(0.5, 1.5, 100_000)
        rates = rng.normal(0.0, 2.0, lengths.size)
        total = float(np.cumsum(lengths)[-1])
        profile = FiberProfile(lengths, rates, total)
        u = build_propagator(profile, cpmg_positions(100_000, total))
        self.assertLess(u.unitarity_defect(), 1e-11)

    def test_pulse_may_sit_on_a_segment_boundary(self):
        profile = constant_profile(1.0, 4.0)
        seq = custom_positions([1.0, 3.0], 4.0)
        u = build_propagator(profile, seq)
        psi = named_state("PLUS45")
        self.assertAlmostEqual(state_fidelity(psi, apply(u, psi)), 1.0, delta=1e-12)

    def test_sequence_longer_than_profile_fails(self):
        with self.assertRaises(SequenceError):
            build_propagator(constant_profile(1.0, 4.0), cpmg_positions(2, 8.0))

    def test_waveplate_operator(self):
        self.assertEqual(waveplate(cpmg_positions(2, 1.0), NO_PULSE_ERROR), pauli_x_pulse())
        tilted = waveplate(cp_positions(2, 1.0), PulseError(0.1, 0.2))
        expected = rotation_pulse(math.pi + 0.1, 0.2 + math.pi / 2)
        self.assertTrue(np.allclose(tilted.matrix, expected.matrix, atol=1e-15))

    def test_cpmg_tolerates_rotation_errors_better_than_cp(self):
        profile = constant_profile(0.0, 8.0)
        psi = named_state("PLUS45")
        error = PulseError(rotation_error=0.2)
        cpmg = state_fidelity(psi, apply(build_propagator(profile, cpmg_positions(8, 8.0), error), psi))
        cp = state_fidelity(psi, apply(build_propagator(profile, cp_positions(8, 8.0), error), psi))
        self.assertAlmostEqual(cpmg, 1.0, delta=1e-12)
        self.assertLess(cp, 0.9)


if __name__ == '__main__':
    unittest.main()
