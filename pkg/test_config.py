import json
import math
import tempfile
import unittest
from pathlib import Path

from config import (DEFAULTS, EXIT_INVALID_VALUE, EXIT_MISSING_FILE, EXIT_SYNTAX, EXIT_UNKNOWN_KEY,
                    ConfigSyntaxError, InvalidValueError, MissingConfigError, UnknownKeyError, parse_config,
                    parse_dict, with_overrides)
from jones import named_state


class TestParseConfig(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, text, name="run.json"):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_minimal_config_takes_defaults(self):
        path = self.write(json.dumps({
            "input_state": "PLUS45", "fiber_length": 8, "sequence": {"kind": "CPMG", "n_pulses": 4},
        }))
        run = parse_config(path)
        e = run.experiment
        self.assertEqual(e.input_state, named_state("PLUS45"))
        self.assertEqual(e.fiber_length, 8.0)
        self.assertEqual((e.sequence.kind, e.sequence.n_pulses, e.sequence.cycles), ("CPMG", 4, 1))
        self.assertEqual(e.ensemble_size, DEFAULTS["ensemble_size"])
        self.assertEqual(e.base_seed, DEFAULTS["base_seed"])
        self.assertEqual(e.noise.seed, DEFAULTS["base_seed"])
        self.assertEqual(e.noise.sigma_seg_len, 0.3)
        self.assertEqual(run.spectrum.model.kind, "LORENTZIAN")
        self.assertEqual(run.filter_table.samples, 200)
        self.assertAlmostEqual(run.filter_table.kl_step, math.pi / 4)

    def test_empty_document_is_all_defaults(self):
        run = parse_dict({})
        self.assertEqual(run.resolved_dict()["sweep"], DEFAULTS["sweep"])

    def test_missing_file(self):
        with self.assertRaises(MissingConfigError) as ctx:
            parse_config(self.tmp / "absent.json")
        self.assertEqual(ctx.exception.exit_code, EXIT_MISSING_FILE)

    def test_malformed_syntax(self):
        with self.assertRaises(ConfigSyntaxError) as ctx:
            parse_config(self.write('{"fiber_length": 8,,}'))
        self.assertEqual(ctx.exception.exit_code, EXIT_SYNTAX)
        self.assertIn("line 1", str(ctx.exception))

    def test_unknown_key_is_named(self):
        with self.assertRaises(UnknownKeyError) as ctx:
            parse_dict({"noise": {"sigma_dl_typo": 0.3}})
        self.assertEqual(ctx.exception.exit_code, EXIT_UNKNOWN_KEY)
        self.assertEqual(ctx.exception.key, "sigma_dl_typo")
        self.assertIn("sigma_dl_typo", str(ctx.exception))

    def test_unknown_top_level_and_nested_state_keys(self):
        with self.assertRaises(UnknownKeyError):
            parse_dict({"fiber_lenght": 8})
        with self.assertRaises(UnknownKeyError) as ctx:
            parse_dict({"input_state": {"amp_h": [1, 0], "amp_v": [0, 0], "phase": 1}})
        self.assertEqual(ctx.exception.key, "phase")

    def test_unknown_key_wins_over_bad_values(self):
        with self.assertRaises(UnknownKeyError):
            parse_dict({"ensemble_size": -3, "extra": True})

    def test_invalid_values(self):
        bad = [
            {"ensemble_size": -1},
            {"ensemble_size": 2.5},
            {"fiber_length": 0},
            {"noise": {"sigma_phase": -0.1}},
            {"input_state": "CIRCULAR"},
            {"input_state": {"amp_h": [0, 0], "amp_v": [0, 0]}},
            {"sequence": {"kind": "CUSTOM", "positions": [9.0]}},
            {"sequence": {"kind": "CPMG", "cycles": 0}},
            {"sweep": {"target_fidelity": 1.0}},
            {"spectrum": {"kind": "PINK"}},
            {"base_seed": 2 ** 64},
        ]
        for data in bad:
            with self.assertRaises(InvalidValueError, msg=str(data)) as ctx:
                parse_dict(data)
            self.assertEqual(ctx.exception.exit_code, EXIT_INVALID_VALUE)

    def test_non_finite_numbers_are_invalid(self):
        bad = [
            {"pulse_error": {"rotation_error": float("nan")}},
            {"sweep": {"waveplates_per_unit_length": float("nan")}},
            {"noise": {"sigma_phase": float("inf")}},
            {"sweep": {"rotation_errors": [0.0, float("-inf")]}},
        ]
        for data in bad:
            with self.assertRaises(InvalidValueError, msg=str(data)) as ctx:
                parse_dict(data)
            self.assertEqual(ctx.exception.exit_code, EXIT_INVALID_VALUE)
            self.assertIn("finite", str(ctx.exception))

    def test_nan_and_infinity_literals_in_files(self):
        for text in ('{"pulse_error": {"rotation_error": NaN}}',
                     '{"sweep": {"waveplates_per_unit_length": Infinity}}'):
            with self.assertRaises(InvalidValueError, msg=text):
                parse_config(self.write(text))

    def test_unknown_key_wins_over_non_finite_value(self):
        with self.assertRaises(UnknownKeyError):
            parse_dict({"noise": {"sigma_phase": float("nan"), "sigma_typo": 1.0}})

    def test_custom_input_state_is_normalized(self):
        run = parse_dict({"input_state": {"amp_h": [3, 0], "amp_v": [0, 4]}})
        self.assertAlmostEqual(run.experiment.input_state.amp_h, 0.6)
        self.assertAlmostEqual(run.experiment.input_state.amp_v, 0.8j)

    def test_integral_floats_are_accepted_for_counts(self):
        run = parse_dict({"sequence": {"n_pulses": 8.0}, "ensemble_size": 64.0})
        self.assertEqual(run.experiment.sequence.n_pulses, 8)
        self.assertIsInstance(run.experiment.ensemble_size, int)

    def test_config_echo_round_trips(self):
        run = parse_dict({
            "input_state": "MINUS45", "fiber_length": 12.5,
            "noise": {"sigma_phase": 0.7}, "sequence": {"kind": "UDD", "n_pulses": 6, "cycles": 2},
            "spectrum": {"kind": "WHITE", "cutoff_k": 40}, "metadata": {"wavelength_nm": 1550, "note": "lab"},
        })
        echo = json.loads(run.to_json())
        self.assertEqual(parse_dict(echo), run)
        self.assertEqual(echo["metadata"]["wavelength_nm"], 1550)

    def test_overrides(self):
        run = with_overrides(parse_dict({}), seed=5, ensemble_size=32)
        self.assertEqual(run.experiment.base_seed, 5)
        self.assertEqual(run.experiment.noise.seed, 5)
        self.assertEqual(run.experiment.ensemble_size, 32)
        self.assertEqual(run.resolved_dict()["base_seed"], 5)
        with self.assertRaises(InvalidValueError):
            with_overrides(run, ensemble_size=0)

    def test_length_scaled_spectrum(self):
        run = parse_dict({"spectrum": {"scale_with_length": True, "correlation_scale": 2.0}})
        self.assertEqual(run.spectrum.model_for(3.0).correlation_scale, 3.0)
        self.assertEqual(parse_dict({}).spectrum.model_for(3.0).correlation_scale, 1.0)


if __name__ == '__main__':
    unittest.main()
