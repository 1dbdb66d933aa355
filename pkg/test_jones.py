import math
import unittest

import numpy as np

from jones import (IDENTITY, DensityMatrix2, InvalidStateError, JonesState, Unitary2, accumulate, apply,
                   compose, dephasing_propagator, fidelity, jones_state, mean_density, named_state,
                   pauli_x_pulse, pauli_y_pulse, projector, rotation_pulse, state_fidelity)


class TestStates(unittest.TestCase):
    def test_named_states_are_normalized(self):
        for tag in ("PLUS45", "MINUS45", "H", "V"):
            self.assertAlmostEqual(named_state(tag).norm(), 1.0, delta=1e-15)

    def test_unknown_tag_is_rejected(self):
        with self.assertRaises(InvalidStateError):
            named_state("CIRCULAR")

    def test_jones_state_normalizes_custom_pairs(self):
        psi = jones_state(3, 4j)
        self.assertAlmostEqual(abs(psi.amp_h), 0.6, delta=1e-15)
        self.assertAlmostEqual(abs(psi.amp_v), 0.8, delta=1e-15)

    def test_zero_vector_and_unnormalized_states_fail(self):
        with self.assertRaises(InvalidStateError):
            jones_state(0, 0)
        with self.assertRaises(InvalidStateError):
            JonesState(1 + 0j, 1 + 0j)

    def test_global_phase_does_not_change_fidelity(self):
        psi = named_state("PLUS45")
        self.assertAlmostEqual(state_fidelity(psi, psi.with_global_phase(1.234)), 1.0, delta=1e-15)


class TestOperators(unittest.TestCase):
    def test_dephasing_propagator_shape(self):
        u = dephasing_propagator(0.8)
        self.assertAlmostEqual(u.matrix[0, 0], np.exp(0.4j), delta=1e-15)
        self.assertAlmostEqual(u.matrix[1, 1], np.exp(-0.4j), delta=1e-15)
        self.assertEqual(u.matrix[0, 1], 0)
        self.assertTrue(np.allclose(dephasing_propagator(0.0).matrix, IDENTITY.matrix))

    def test_non_finite_phase_is_rejected(self):
        with self.assertRaises(ValueError):
            dephasing_propagator(float("nan"))
        with self.assertRaises(ValueError):
            dephasing_propagator(float("inf"))

    def test_non_unitary_matrix_is_rejected(self):
        with self.assertRaises(InvalidStateError):
            Unitary2(np.array([[1, 1], [0, 1]]))

    def test_ideal_pulses_match_rotations(self):
        self.assertTrue(np.allclose(rotation_pulse(math.pi, 0.0).matrix, pauli_x_pulse().matrix, atol=1e-15))
        self.assertTrue(np.allclose(rotation_pulse(math.pi, math.pi / 2).matrix, pauli_y_pulse().matrix,
                                    atol=1e-15))

    def test_two_pulses_give_minus_identity(self):
        x = pauli_x_pulse()
        self.assertTrue(np.allclose((x @ x).matrix, -np.eye(2)))

    def test_compose_uses_application_order(self):
        a = dephasing_propagator(0.3)
        x = pauli_x_pulse()
        self.assertEqual(compose(a, x), x @ a)

    def test_echo_refocuses_every_state(self):
        phi = 2.7
        d = dephasing_propagator(phi)
        x = pauli_x_pulse()
        echo = compose(d, x, d, x)
        for tag in ("PLUS45", "MINUS45", "H", "V"):
            psi = named_state(tag)
            self.assertAlmostEqual(state_fidelity(psi, apply(echo, psi)), 1.0, delta=1e-12)

    def test_dagger_inverts(self):
        u = rotation_pulse(1.1, 0.4) @ dephasing_propagator(0.9)
        self.assertLess((u.dagger() @ u).unitarity_defect(), 1e-14)
        self.assertTrue(np.allclose((u.dagger() @ u).matrix, np.eye(2), atol=1e-14))


class TestDensityMatrices(unittest.TestCase):
    def test_projector_of_input_has_unit_fidelity(self):
        psi = named_state("MINUS45")
        rho = projector(psi)
        self.assertAlmostEqual(fidelity(psi, rho), 1.0, delta=1e-15)
        self.assertAlmostEqual(rho.purity(), 1.0, delta=1e-15)

    def test_equal_mixture_of_diagonal_states_is_maximally_mixed(self):
        rho = mean_density([named_state("PLUS45"), named_state("MINUS45")])
        self.assertTrue(np.allclose(rho.matrix, 0.5 * np.eye(2), atol=1e-15))
        self.assertAlmostEqual(fidelity(named_state("PLUS45"), rho), 0.5, delta=1e-15)

    def test_running_mean_matches_batch_mean(self):
        psi_in = named_state("PLUS45")
        states = [apply(dephasing_propagator(phi), psi_in) for phi in np.linspace(-2.0, 2.5, 37)]
        rho = None
        for n, psi in enumerate(states, start=1):
            rho = accumulate(rho, psi, n)
        self.assertTrue(np.allclose(rho.matrix, mean_density(states).matrix, atol=1e-14))

    def test_accumulate_rejects_zero_count(self):
        with self.assertRaises(ValueError):
            accumulate(None, named_state("H"), 0)

    def test_fidelity_is_linear_in_the_ensemble(self):
        psi_in = named_state("PLUS45")
        states = [apply(dephasing_propagator(phi), psi_in) for phi in np.linspace(0.0, 3.0, 50)]
        mean_pure = math.fsum(state_fidelity(psi_in, s) for s in states) / len(states)
        self.assertAlmostEqual(fidelity(psi_in, mean_density(states)), mean_pure, delta=1e-12)

    def test_mean_density_is_order_independent(self):
        psi_in = named_state("PLUS45")
        states = [apply(dephasing_propagator(phi), psi_in) for phi in np.linspace(-3.0, 3.0, 101)]
        self.assertEqual(mean_density(states), mean_density(list(reversed(states))))

    def test_invalid_density_matrices_fail(self):
        with self.assertRaises(InvalidStateError):
            DensityMatrix2(np.array([[0.5, 0.1], [0.2, 0.5]]))
        with self.assertRaises(InvalidStateError):
            DensityMatrix2(np.array([[0.7, 0.0], [0.0, 0.7]]))
        with self.assertRaises(ValueError):
            mean_density([])


if __name__ == '__main__':
    unittest.main()
