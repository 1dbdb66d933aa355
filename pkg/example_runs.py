from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from config import parse_dict
from ddfiber import build_table
from renderers import CsvRenderer

GOLDEN_DIR = Path(__file__).parent / "golden"


@dataclass
class ExampleRun:
    name: str
    subcommand: str
    config: dict = field(default_factory=dict)
    rel_tol: float = 1e-9

    def render(self) -> str:
        run = parse_dict(self.config)
        table, _ = build_table(self.subcommand, run)
        return CsvRenderer(table).render()

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


# Zero spreads with a fixed phase per unit segment: every realization is the same.
CONSTANT_BIREFRINGENCE = {"mean_seg_len": 1.0, "sigma_seg_len": 0.0, "sigma_phase": 0.0, "mean_phase": 0.7}

# Each table is fixed by a closed form, so none depends on the random streams.
EXAMPLE_RUNS = [
    ExampleRun("ensemble_custom_constant", "ensemble", {
        "noise": CONSTANT_BIREFRINGENCE, "sequence": {"kind": "CUSTOM", "positions": [2.0, 5.0]},
        "ensemble_size": 16, "base_seed": 1,
    }),
    ExampleRun("ensemble_free_h", "ensemble", {
        "input_state": "H", "sequence": {"kind": "NONE", "n_pulses": 0},
        "ensemble_size": 128, "base_seed": 2,
    }),
    ExampleRun("sweep_waveplates_constant", "sweep-waveplates", {
        "noise": CONSTANT_BIREFRINGENCE, "ensemble_size": 16, "base_seed": 3,
        "sweep": {"waveplate_counts": [0, 1, 2, 4, 8]},
    }),
    ExampleRun("sweep_lengths_constant", "sweep-lengths", {
        "noise": CONSTANT_BIREFRINGENCE, "ensemble_size": 16, "base_seed": 4,
        "sweep": {"lengths": [8, 16, 32], "waveplates_per_unit_length": 0.5},
    }),
    ExampleRun("contour_noiseless", "contour", {
        "noise": {"sigma_phase": 0.0}, "ensemble_size": 16, "base_seed": 5,
        "sweep": {"sigma_len_grid": [0.0, 0.25, 0.5], "sigma_phase_grid": [0.0]},
    }),
    ExampleRun("min_waveplates_pdd", "min-waveplates", {
        "noise": CONSTANT_BIREFRINGENCE, "sequence": {"kind": "PDD", "n_pulses": 4},
        "ensemble_size": 16, "base_seed": 6,
        "sweep": {"target_fidelity": 0.99, "max_count": 64},
    }),
    ExampleRun("w_curve_white", "w-curve", {
        "spectrum": {"kind": "WHITE", "amplitude": 0.5},
        "sweep": {"lengths": [0.5, 1.0, 2.0, 4.0]},
    }, rel_tol=1e-7),
    ExampleRun("pulse_errors_constant", "pulse-errors", {
        "noise": CONSTANT_BIREFRINGENCE, "ensemble_size": 16, "base_seed": 7,
        "sweep": {"rotation_errors": [0.0, 0.1, 0.2]},
    }),
    ExampleRun("cpmg4_filter_audit", "filter-table"),
]


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("name", choices=[r.name for r in EXAMPLE_RUNS], help="Example run to print")
    args = parser.parse_args()
    example = next(r for r in EXAMPLE_RUNS if r.name == args.name)
    print(example.render(), end="")
