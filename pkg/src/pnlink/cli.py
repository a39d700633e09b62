"""Command-line front end.

Exit codes: 0 on success, 2 for config errors, 3 for numerical failures.
Outputs are computed in full before anything is written, and the metadata
sidecar is always the first file written into the output directory.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    apply_overrides,
    build_compare,
    build_experiment,
    build_numerology,
    build_plan,
    build_psd,
    build_psd_output,
    build_sweep,
    load_config,
)
from .errors import ConfigError, ContractError, DomainError, NumericalError
from .freqplan import FrequencyPlan, plan_variance, sweep_if, write_sweep_csv
from .montecarlo import (
    series_metadata,
    psd_metadata,
    compare_architectures,
    received_frames,
    write_metadata,
    write_metrics_csv,
)
from .ofdm import write_constellation_csv
from .psd import psd_eval, scale_to_carrier
from .synth import PhaseNoiseRealization, write_realization_csv

log = logging.getLogger("pnlink")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

METADATA_NAME = "metadata.json"


def _log_grid(f_min: float, f_max: float, per_decade: int) -> np.ndarray:
    n = int(math.floor(per_decade * math.log10(f_max / f_min) + 1e-9)) + 1
    return f_min * 10.0 ** (np.arange(n) / per_decade)


def _write_outputs(out_dir: Path, metadata: dict, files: dict) -> None:
    """``files`` maps file name -> callable(path). Metadata goes first."""
    out_dir.mkdir(parents=True, exist_ok=True)
    write_metadata(out_dir / METADATA_NAME, metadata)
    for name, writer in files.items():
        writer(out_dir / name)


def _text_writer(text: str):
    def w(path):
        Path(path).write_text(text)

    return w


def cmd_psd(raw: dict, args) -> tuple[dict, dict]:
    psd = build_psd(raw)
    out = build_psd_output(raw)
    if out.carrier_hz is not None:
        psd = scale_to_carrier(psd, out.carrier_hz)
    grid = _log_grid(out.f_min_hz, out.f_max_hz, out.points_per_decade)
    vals = 10.0 * np.log10(psd_eval(psd, grid))
    rows = "".join(f"{f:.9g},{v:.6f}\n" for f, v in zip(grid, vals))
    meta = {
        "command": "psd",
        "version": __version__,
        "psd": psd_metadata(psd),
        "grid": {"f_min_hz": out.f_min_hz, "f_max_hz": out.f_max_hz, "points_per_decade": out.points_per_decade},
        "units": "psd_dbchz = 10*log10(one-sided phase PSD in rad^2/Hz)",
    }
    files = {"psd.csv": _text_writer("f_m_hz,psd_dbchz\n" + rows)}
    if args.plots:
        files["psd.gp"] = _text_writer(_psd_plot(psd))
    return meta, files


def _psd_plot(psd) -> str:
    return (
        "set datafile separator ','\n"
        "set logscale x\n"
        "set xlabel 'offset frequency (Hz)'\n"
        "set ylabel 'phase PSD (dBc/Hz)'\n"
        "set grid\n"
        f"set title 'zero-pole phase noise at {psd.base_carrier_hz / 1e9:g} GHz'\n"
        "plot 'psd.csv' every ::1 using 1:2 with lines notitle\n"
        "pause -1\n"
    )


def cmd_variance_sweep(raw: dict, args) -> tuple[dict, dict]:
    psd = build_psd(raw)
    num = build_numerology(raw)
    plan = build_plan(raw)
    sweep = build_sweep(raw)
    results = [
        sweep_if(plan.f_rf_hz, psd, num, sweep.grid_points, m, sweep.edge_fraction)
        for m in sweep.methods
    ]
    hom = FrequencyPlan.homodyne(plan.f_rf_hz)
    meta = {
        "command": "variance-sweep",
        "version": __version__,
        "psd": psd_metadata(psd),
        "f_rf_hz": plan.f_rf_hz,
        "grid_points": sweep.grid_points,
        "edge_fraction": sweep.edge_fraction,
        "bandwidth_hz": num.bandwidth_hz,
        "n_sample": num.n_sample,
        "methods": {
            r.method.value: {
                "argmin_if_hz": r.argmin_if_hz,
                "min_sigma2_rad2": float(r.variance.min()),
                "homodyne_sigma2_rad2": plan_variance(hom, psd, num, r.method),
            }
            for r in results
        },
        "columns": {
            "analytic_approx": "n_sample*2*pi*delta_f*s0*(f/f_base)^2 summed over IF and RF LO",
            "numerical_integral": "integral of the scaled PSD over [0, N*delta_f/2] summed over IF and RF LO",
        },
    }
    files = {"sweep.csv": lambda p: write_sweep_csv(p, results)}
    if args.plots:
        files["sweep.gp"] = _text_writer(_sweep_plot(results))
    return meta, files


def _sweep_plot(results) -> str:
    lines = [
        "set datafile separator ','",
        "set xlabel 'IF frequency (GHz)'",
        "set ylabel 'total phase-noise variance (rad^2)'",
        "set grid",
    ]
    plots = []
    for i, r in enumerate(results, start=1):
        m = r.method.value
        lines.append(
            f"set label {i} sprintf('min %.3g GHz ({m})', {r.argmin_if_hz / 1e9!r}) "
            f"at {r.argmin_if_hz / 1e9!r}, {float(r.variance.min())!r} point pt 7"
        )
        plots.append(
            f"'sweep.csv' every ::1 using ($1/1e9):(strcol(3) eq '{m}' ? $2 : NaN) with lines title '{m}'"
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("pause -1")
    return "\n".join(lines) + "\n"


def _metric_plot(table, column: int, ylabel: str, logy: bool) -> str:
    lines = [
        "set datafile separator ','",
        "set xlabel 'SNR (dB)'",
        f"set ylabel '{ylabel}'",
        "set grid",
        "set key bottom left" if logy else "set key top right",
    ]
    if logy:
        lines.append("set logscale y")
    plots = []
    for s in table:
        cpe = "on" if s.cpe_correction else "off"
        plots.append(
            f"'metrics.csv' every ::1 using 3:(strcol(1) eq '{s.label}' && strcol(2) eq '{cpe}' ? ${column} : NaN) "
            f"with linespoints title '{s.label} CPE {cpe}'"
        )
    lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("pause -1")
    return "\n".join(lines) + "\n"


def _link_outputs(raw, args, compare: bool) -> tuple[dict, dict]:
    base = build_experiment(raw)
    if compare:
        plans, modes = build_compare(raw, base)
    else:
        plans, modes = [base.plan], [base.cpe_correction]
    table = compare_architectures(base, plans, modes, workers=args.workers)
    meta = {
        "command": "compare" if compare else "link-sim",
        "version": __version__,
        "series": [
            series_metadata(base.replace(plan=p), p, c) for p in plans for c in modes
        ],
    }
    files = {"metrics.csv": lambda p: write_metrics_csv(p, table)}
    if args.plots:
        files["ber.gp"] = _text_writer(_metric_plot(table, 4, "BER", True))
        files["evm.gp"] = _text_writer(_metric_plot(table, 6, "EVM (%)", False))
    if args.dump_pn or args.dump_constellation:
        for plan in plans:
            cfg = base.replace(plan=plan)
            y, phi = received_frames(cfg, mc_run=0, snr_index=-1)
            tag = plan.label.replace("@", "_").replace("+", "p")
            if args.dump_pn and phi is not None:
                r = PhaseNoiseRealization(phi.ravel(), cfg.numerology.sample_rate_hz)
                files[f"pn_{tag}.csv"] = lambda p, r=r: write_realization_csv(p, r)
            if args.dump_constellation:
                files[f"constellation_{tag}.csv"] = lambda p, f=y[0]: write_constellation_csv(p, f)
    return meta, files


def cmd_link_sim(raw, args):
    return _link_outputs(raw, args, compare=False)


def cmd_compare(raw, args):
    return _link_outputs(raw, args, compare=True)


COMMANDS = {
    "psd": cmd_psd,
    "variance-sweep": cmd_variance_sweep,
    "link-sim": cmd_link_sim,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnlink",
        description="Oscillator phase noise in homodyne vs. heterodyne OFDM links.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="experiment config file (TOML)")
        p.add_argument("-o", "--output-dir", default="out", help="directory for CSV/plot/metadata files")
        p.add_argument(
            "--set",
            "--overrides",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config field, e.g. experiment.n_mc_runs=5 or snr_grid=0:10:30",
        )
        p.add_argument("--plots", action="store_true", help="also write gnuplot scripts")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("link-sim", "compare"):
            p.add_argument("--workers", type=int, default=None, help="process count (default $PNLINK_WORKERS or CPU count)")
            p.add_argument("--dump-pn", action="store_true", help="write the first run's phase trajectory per plan")
            p.add_argument(
                "--dump-constellation", action="store_true",
                help="write the first received symbol at the last SNR point per plan",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        raw = apply_overrides(load_config(args.config), args.overrides)
        meta, files = COMMANDS[args.subcommand](raw, args)
    except ConfigError as exc:
        print(f"pnlink: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"pnlink: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, ContractError) as exc:
        print(f"pnlink: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    meta["overrides"] = list(args.overrides)
    out_dir = Path(args.output_dir)
    _write_outputs(out_dir, meta, files)
    log.info("wrote %s", ", ".join([METADATA_NAME, *files]))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
