"""
Declarative runner for dynamical-decoupling experiments on polarization
qubits travelling through birefringent fiber.

    python ddfiber.py <subcommand> --config run.json --out results/
                      [--seed N] [--ensemble N] [--plot-script] [--threads N] [-v]

Each run writes <subcommand>.csv, manifest.json and, with --plot-script, a
gnuplot script next to the CSV.
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import multiprocessing
import os
import sys
import time
from pathlib import Path
from typing import Callable

from config import (DEFAULTS, EXIT_NUMERICAL, EXIT_OK, ConfigError, InvalidValueError, RunConfig,
                    parse_config, with_overrides)
from ensemble import (SequenceDescriptor, contour_noise, min_waveplates, run_ensemble, sweep_lengths,
                      sweep_pulse_errors, sweep_waveplates)
from filters import FilterSpec, filter_audit_table, w_curve
from records import (ContourRow, EnsembleRow, FilterAuditRow, LengthRow, PulseErrorRow, ResultTable,
                     RunManifest, ScanRow, WaveplateRow, WCurveRow, summary_value, validate_manifest)
from renderers import CsvRenderer, GnuplotRenderer

__version__ = "1.0.0"

logger = logging.getLogger("ddfiber")

EXIT_IO = 1
THREADS_ENV = "DDFIBER_THREADS"
MANIFEST_NAME = "manifest.json"


def _num(value: float) -> str:
    return format(value, '.12g')


def _sequence_label(descriptor: SequenceDescriptor) -> str:
    if descriptor.kind == "NONE" or (descriptor.kind != "CUSTOM" and descriptor.n_pulses == 0):
        return "NONE"
    if descriptor.kind == "CUSTOM":
        label = f"CUSTOM@{','.join(_num(x) for x in descriptor.positions)}"
    else:
        label = f"{descriptor.kind}-{descriptor.n_pulses}"
    return label if descriptor.cycles == 1 else f"{label}x{descriptor.cycles}"


def _experiment_header(run: RunConfig) -> dict[str, str]:
    e = run.experiment
    state = run.resolved["input_state"]
    return {
        "model": "piecewise-constant birefringence, Gaussian segment lengths and phases",
        "input_state": state if isinstance(state, str) else json.dumps(state, sort_keys=True),
        "sequence": _sequence_label(e.sequence),
        "fiber_length": _num(e.fiber_length),
        "mean_seg_len": _num(e.noise.mean_seg_len),
        "sigma_seg_len": _num(e.noise.sigma_seg_len),
        "sigma_phase": _num(e.noise.sigma_phase),
        "mean_phase": _num(e.noise.mean_phase),
        "pulse_error": f"rotation {_num(e.pulse_error.rotation_error)} axis {_num(e.pulse_error.axis_angle)}",
        "ensemble_size": str(e.ensemble_size),
        "base_seed": str(e.base_seed),
    }


def _table(name: str, header: dict, columns: list, rows: list, **plot) -> ResultTable:
    return {"name": name, "header": header, "columns": columns, "rows": rows, "plot": plot}


# Subcommands: each returns the result table and an optional summary.
def _ensemble(run: RunConfig, pool):
    e = run.experiment
    estimate = run_ensemble(e, pool)
    seq = e.sequence.build(e.fiber_length)
    row: EnsembleRow = {
        "fiber_length": e.fiber_length,
        "sequence": _sequence_label(e.sequence),
        "waveplates": seq.n_pulses,
        "fidelity": estimate.mean,
        "std_error": estimate.std_error,
        "ensemble_size": estimate.ensemble_size,
    }
    table = _table("ensemble", _experiment_header(run), list(row), [row],
                   style="errorbars", x="fiber_length", y=["fidelity"], yerr=["std_error"],
                   xlabel="fiber length", ylabel="fidelity")
    return table, None


def _sweep_waveplates(run: RunConfig, pool):
    sweep = run.sweep
    rows: list[WaveplateRow] = [
        {"waveplates": n, "fidelity": est.mean, "std_error": est.std_error, "ensemble_size": est.ensemble_size}
        for n, est in sweep_waveplates(run.experiment, sweep.waveplate_counts, sweep.count_mode, pool)
    ]
    header = {**_experiment_header(run), "count_mode": sweep.count_mode}
    table = _table("sweep-waveplates", header, ["waveplates", "fidelity", "std_error", "ensemble_size"], rows,
                   style="errorbars", x="waveplates", y=["fidelity"], yerr=["std_error"],
                   xlabel="number of waveplates", ylabel="fidelity")
    return table, None


def _sweep_lengths(run: RunConfig, pool):
    sweep = run.sweep
    rows: list[LengthRow] = [
        {"fiber_length": length, "waveplates": n, "fidelity": est.mean, "std_error": est.std_error,
         "ensemble_size": est.ensemble_size}
        for length, n, est in sweep_lengths(run.experiment, sweep.lengths,
                                            sweep.waveplates_per_unit_length, pool)
    ]
    header = {**_experiment_header(run),
              "waveplates_per_unit_length": _num(sweep.waveplates_per_unit_length)}
    table = _table("sweep-lengths", header,
                   ["fiber_length", "waveplates", "fidelity", "std_error", "ensemble_size"], rows,
                   style="errorbars", x="fiber_length", y=["fidelity"], yerr=["std_error"],
                   xlabel="fiber length", ylabel="fidelity")
    summary = {
        "fidelity_floor": sweep.fidelity_floor,
        "meets_floor": all(row["fidelity"] >= sweep.fidelity_floor for row in rows),
    }
    return table, summary


def _contour(run: RunConfig, pool):
    sweep = run.sweep
    grid = contour_noise(run.experiment, sweep.sigma_len_grid, sweep.sigma_phase_grid, pool)
    rows: list[ContourRow] = []
    for i, sigma_len in enumerate(grid.sigma_len_axis):
        for j, sigma_phase in enumerate(grid.sigma_phase_axis):
            est = grid.cell(i, j)
            rows.append({"sigma_seg_len": sigma_len, "sigma_phase": sigma_phase, "fidelity": est.mean,
                         "std_error": est.std_error, "ensemble_size": est.ensemble_size})
    table = _table("contour", _experiment_header(run),
                   ["sigma_seg_len", "sigma_phase", "fidelity", "std_error", "ensemble_size"], rows,
                   style="heatmap", x="sigma_phase", y=["sigma_seg_len"], z="fidelity",
                   xlabel="sigma of segment phase (rad)", ylabel="sigma of segment length")
    return table, None


def _min_waveplates(run: RunConfig, pool):
    sweep = run.sweep
    found = min_waveplates(run.experiment, sweep.target_fidelity, sweep.max_count, pool)
    rows: list[ScanRow] = [
        {"waveplates": n, "fidelity": est.mean, "std_error": est.std_error, "lower_bound": est.lower_bound,
         "meets_target": est.lower_bound >= found.target_fidelity}
        for n, est in found.scanned
    ]
    header = {**_experiment_header(run), "target_fidelity": _num(sweep.target_fidelity),
              "max_count": str(sweep.max_count), "min_waveplates": str(summary_value(found.count))}
    table = _table("min-waveplates", header,
                   ["waveplates", "fidelity", "std_error", "lower_bound", "meets_target"], rows,
                   style="errorbars", x="waveplates", y=["fidelity"], yerr=["std_error"],
                   xlabel="number of waveplates", ylabel="fidelity")
    summary = {"target_fidelity": sweep.target_fidelity, "max_count": sweep.max_count,
               "min_waveplates": summary_value(found.count)}
    return table, summary


def _w_curve(run: RunConfig, pool):
    spectrum = run.spectrum
    descriptor = run.experiment.sequence
    lengths = run.sweep.lengths
    free = w_curve(spectrum.model_for, FilterSpec.free(), lengths)
    with_pulses = w_curve(spectrum.model_for,
                          lambda length: FilterSpec.from_sequence(descriptor.build(length)), lengths)
    rows: list[WCurveRow] = [
        {"fiber_length": length, "w_free": w_free, "w_sequence": w_sequence}
        for (length, w_free), (_, w_sequence) in zip(free, with_pulses)
    ]
    model = spectrum.model
    header = {
        "model": f"{model.kind} spectrum",
        "amplitude": _num(model.amplitude),
        "correlation_scale": "fiber_length" if spectrum.scale_with_length else _num(model.correlation_scale),
        "cutoff_k": "200/fiber_length" if model.cutoff_k is None else _num(model.cutoff_k),
        "sequence": _sequence_label(descriptor),
    }
    table = _table("w-curve", header, ["fiber_length", "w_free", "w_sequence"], rows,
                   style="lines", x="fiber_length", y=["w_free", "w_sequence"],
                   xlabel="fiber length", ylabel="decoherence function W")
    return table, None


def _filter_table(run: RunConfig, pool):
    settings = run.filter_table
    rows: list[FilterAuditRow] = filter_audit_table(settings.samples, settings.kl_step)
    header = {
        "model": "filter function of four CPMG waveplates",
        "quoted_closed": "8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/4), evaluated in its finite form",
        "general": "pulse sum over fractions 1/8, 3/8, 5/8, 7/8",
        "textbook_closed": "8 sin^4(kL/16) sin^2(kL/2) / cos^2(kL/8)",
        "samples": str(settings.samples),
        "kl_step": _num(settings.kl_step),
        "max_abs_diff": _num(max(row["abs_diff"] for row in rows)),
    }
    table = _table("filter-table", header,
                   ["kl", "quoted_closed", "general", "textbook_closed", "abs_diff", "quoted_singular"], rows,
                   style="lines", x="kl", y=["quoted_closed", "general", "textbook_closed"],
                   xlabel="kL", ylabel="filter function F(kL)")
    return table, None


def _pulse_errors(run: RunConfig, pool):
    e = run.experiment
    n_pulses = e.sequence.n_pulses or 4
    rows: list[PulseErrorRow] = [
        {"rotation_error": error, "fidelity_cp": cp.mean, "std_error_cp": cp.std_error,
         "fidelity_cpmg": cpmg.mean, "std_error_cpmg": cpmg.std_error}
        for error, cp, cpmg in sweep_pulse_errors(e, run.sweep.rotation_errors, n_pulses, pool)
    ]
    header = {**_experiment_header(run), "waveplates": str(n_pulses)}
    table = _table("pulse-errors", header,
                   ["rotation_error", "fidelity_cp", "std_error_cp", "fidelity_cpmg", "std_error_cpmg"], rows,
                   style="errorbars", x="rotation_error", y=["fidelity_cp", "fidelity_cpmg"],
                   yerr=["std_error_cp", "std_error_cpmg"],
                   xlabel="waveplate rotation error (rad)", ylabel="fidelity")
    return table, None


SUBCOMMANDS: dict[str, Callable] = {
    "ensemble": _ensemble,
    "sweep-waveplates": _sweep_waveplates,
    "sweep-lengths": _sweep_lengths,
    "contour": _contour,
    "min-waveplates": _min_waveplates,
    "w-curve": _w_curve,
    "filter-table": _filter_table,
    "pulse-errors": _pulse_errors,
}


def build_table(subcommand: str, run: RunConfig, pool=None):
    """Runs one subcommand in memory and returns (table, summary)."""
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"Unknown subcommand {subcommand!r}")
    return SUBCOMMANDS[subcommand](run, pool)


def run_id(config_echo: dict) -> str:
    """Git blob id of the canonical config JSON."""
    content = json.dumps(config_echo, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(content) + content).hexdigest()


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise InvalidValueError("thread count must be >= 1")
    return threads


@contextlib.contextmanager
def worker_pool(workers: int):
    if workers <= 1:
        yield None
        return
    with multiprocessing.Pool(workers) as pool:
        yield pool


def _error(message) -> None:
    print(f"ddfiber: error: {message}", file=sys.stderr)


def run(subcommand: str, config_path, out_dir, *, seed: int | None = None, ensemble: int | None = None,
        plot_script: bool = False, threads: int | None = None) -> int:
    """Parses the config, runs the subcommand and writes its outputs. Returns the exit code."""
    started = time.perf_counter()
    try:
        config = with_overrides(parse_config(config_path), seed, ensemble)
        workers = worker_count(threads)
    except ConfigError as exc:
        _error(exc)
        return exc.exit_code

    out = Path(out_dir)
    written: list[Path] = []

    def write(name: str, text: str) -> Path:
        path = out / name
        written.append(path)
        path.write_text(text, encoding="utf-8")
        return path

    try:
        with worker_pool(workers) as pool:
            table, summary = build_table(subcommand, config, pool)
        out.mkdir(parents=True, exist_ok=True)
        csv_name = f"{subcommand}.csv"
        write(csv_name, CsvRenderer(table).render())
        if plot_script:
            write(f"{subcommand}.gp", GnuplotRenderer(table, csv_name).render())
        echo = config.resolved_dict()
        manifest: RunManifest = {
            "tool_version": __version__,
            "subcommand": subcommand,
            "run_id": run_id(echo),
            "base_seed": config.experiment.base_seed,
            "config_echo": echo,
            "outputs": [str(path) for path in written] + [str(out / MANIFEST_NAME)],
            "results": table["rows"],
            "wall_time": time.perf_counter() - started,
        }
        if summary is not None:
            manifest["summary"] = summary
        validate_manifest(manifest)
        write(MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except (ArithmeticError, ValueError) as exc:
        _discard(written)
        _error(exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        _discard(written)
        _error(exc)
        return EXIT_IO
    logger.info("%s finished in %.2fs, outputs in %s", subcommand, time.perf_counter() - started, out)
    return EXIT_OK


def _discard(paths) -> None:
    for path in paths:
        with contextlib.suppress(OSError):
            path.unlink()


def _parser() -> argparse.ArgumentParser:
    defaults = json.dumps(DEFAULTS, indent=2, sort_keys=True)
    parser = argparse.ArgumentParser(
        prog="ddfiber",
        description="Dynamical decoupling of polarization qubits in birefringent fiber.",
        epilog=f"Configuration defaults:\n{defaults}\n\nExit codes: 0 ok, 2 missing config, 3 syntax, "
               f"4 unknown key, 5 invalid value, 10 numerical failure.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help="JSON experiment configuration.")
    common.add_argument('--out', required=True, help="Output directory (created if missing).")
    common.add_argument('--seed', type=int, help="Override base_seed.")
    common.add_argument('--ensemble', type=int, help="Override ensemble_size.")
    common.add_argument('--plot-script', action='store_true', help="Also write a gnuplot script for the CSV.")
    common.add_argument('--threads', type=int,
                        help=f"Worker processes (default: ${THREADS_ENV}, else 1). Results do not depend on it.")
    common.add_argument('-v', '--verbose', action='count', default=0, help="-v for progress, -vv for detail.")

    subparsers = parser.add_subparsers(dest='subcommand', required=True)
    helps = {
        "ensemble": "Fidelity of one configuration.",
        "sweep-waveplates": "Fidelity against the number of waveplates.",
        "sweep-lengths": "Fidelity against fiber length at fixed waveplate density.",
        "contour": "Fidelity over the segment-length / phase noise grid.",
        "min-waveplates": "Smallest waveplate count meeting the target fidelity.",
        "w-curve": "Decoherence function with and without the configured sequence.",
        "filter-table": "Audit of the four-pulse CPMG closed-form filter function.",
        "pulse-errors": "CP against CPMG under systematic waveplate rotation errors.",
    }
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(args.subcommand, args.config, args.out, seed=args.seed, ensemble=args.ensemble,
               plot_script=args.plot_script, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
