"""Experiment config files (TOML) and ``--set key=value`` overrides.

Sections and keys::

    [psd]          s0_dbchz, f_base_hz, stages = [{f_zero_hz, f_pole_hz}, ...]
    [psd_rflo]     optional, same keys; RF-LO shape of a heterodyne plan
    [numerology]   n_subcarriers, cp_len, delta_f_hz, pilot_fraction, qam_order
    [plan]         kind = "homodyne" | "heterodyne", f_rf_hz, f_if_hz
    [experiment]   preset = "table1" | "desk", snr_grid, n_symbols_per_run,
                   n_mc_runs, cpe_correction, master_seed, pn_enabled, pn_mode
    [sweep]        grid_points, method, edge_fraction
    [psd_output]   f_min_hz, f_max_hz, points_per_decade, carrier_hz
    [compare]      plans = [{kind, f_rf_hz, f_if_hz}, ...], cpe_modes

``snr_grid`` is a list of numbers or a ``"start:step:stop"`` range with the
stop inclusive. Every section is optional; missing values take defaults.
"""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ContractError, DomainError
from .freqplan import FrequencyPlan, PlanKind
from .montecarlo import DESK_SNR_GRID, ExperimentConfig
from .ofdm import OfdmNumerology
from .psd import (
    DEFAULT_BASE_CARRIER_HZ,
    DEFAULT_F_POLE_HZ,
    DEFAULT_F_ZERO_HZ,
    DEFAULT_S0_DBCHZ,
    PhaseNoisePsd,
    VarianceMethod,
)

SCHEMA: dict[str, tuple[str, ...]] = {
    "psd": ("s0_dbchz", "f_base_hz", "stages"),
    "psd_rflo": ("s0_dbchz", "f_base_hz", "stages"),
    "numerology": ("n_subcarriers", "cp_len", "delta_f_hz", "pilot_fraction", "qam_order"),
    "plan": ("kind", "f_rf_hz", "f_if_hz"),
    "experiment": (
        "preset",
        "snr_grid",
        "n_symbols_per_run",
        "n_mc_runs",
        "cpe_correction",
        "master_seed",
        "pn_enabled",
        "pn_mode",
    ),
    "sweep": ("grid_points", "method", "edge_fraction"),
    "psd_output": ("f_min_hz", "f_max_hz", "points_per_decade", "carrier_hz"),
    "compare": ("plans", "cpe_modes"),
}

# bare override keys resolve to the first section listing them
_BARE = {}
for _sec, _keys in SCHEMA.items():
    for _k in _keys:
        _BARE.setdefault(_k, _sec)


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    _check_schema(raw, str(p))
    return raw


def _check_schema(raw: dict, where: str) -> None:
    for sec, body in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"{where}: unknown section [{sec}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{where}: [{sec}] must be a table")
        for key in body:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{where}: unknown field {sec}.{key}")


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    out = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        key = key.strip()
        if "." in key:
            sec, field_ = key.split(".", 1)
        else:
            sec, field_ = _BARE.get(key), key
        if sec not in SCHEMA or field_ not in SCHEMA[sec]:
            raise ConfigError(f"override {key!r} does not name a known field")
        out.setdefault(sec, {})[field_] = _parse_value(text.strip())
    return out


def parse_range(spec) -> tuple[float, ...]:
    """``"0:1:30"`` -> 0, 1, ..., 30 (stop inclusive); lists pass through."""
    if isinstance(spec, (list, tuple)):
        return tuple(_float(v, "experiment.snr_grid") for v in spec)
    if isinstance(spec, (int, float)):
        return (float(spec),)
    parts = str(spec).split(":")
    try:
        vals = [float(x) for x in parts]
    except ValueError:
        raise ConfigError(f"experiment.snr_grid: cannot parse {spec!r}") from None
    if len(vals) == 2:
        start, step, stop = vals[0], 1.0, vals[1]
    elif len(vals) == 3:
        start, step, stop = vals
    else:
        raise ConfigError(f"experiment.snr_grid: expected start:step:stop, got {spec!r}")
    if step <= 0 or stop < start:
        raise ConfigError(f"experiment.snr_grid: empty or descending range {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))


def _float(v, name):
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    return float(v)


def _int(v, name):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    return v


def _bool(v, name):
    if not isinstance(v, bool):
        raise ConfigError(f"{name}: expected true/false, got {v!r}")
    return v


def _wrap(fn, name):
    try:
        return fn()
    except (DomainError, ContractError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name}: {exc}") from exc


def build_psd(raw: dict, section: str = "psd") -> PhaseNoisePsd:
    sec = raw.get(section, {})
    s0 = _float(sec.get("s0_dbchz", DEFAULT_S0_DBCHZ), f"{section}.s0_dbchz")
    fb = _float(sec.get("f_base_hz", DEFAULT_BASE_CARRIER_HZ), f"{section}.f_base_hz")
    if "stages" in sec:
        stages_raw = sec["stages"]
        if not isinstance(stages_raw, list):
            raise ConfigError(f"{section}.stages: expected a list of tables")
        stages = []
        for i, st in enumerate(stages_raw):
            if not isinstance(st, dict) or set(st) != {"f_zero_hz", "f_pole_hz"}:
                raise ConfigError(f"{section}.stages[{i}]: needs exactly f_zero_hz and f_pole_hz")
            stages.append(
                (
                    _float(st["f_zero_hz"], f"{section}.stages[{i}].f_zero_hz"),
                    _float(st["f_pole_hz"], f"{section}.stages[{i}].f_pole_hz"),
                )
            )
    elif section == "psd":
        stages = [(DEFAULT_F_ZERO_HZ, DEFAULT_F_POLE_HZ)]
    else:
        stages = []
    return _wrap(lambda: PhaseNoisePsd.from_dbchz(s0, fb, stages), section)


def build_numerology(raw: dict) -> OfdmNumerology:
    sec = raw.get("numerology", {})
    kw = {}
    if "n_subcarriers" in sec:
        kw["n_subcarriers"] = _int(sec["n_subcarriers"], "numerology.n_subcarriers")
    if "cp_len" in sec:
        kw["cp_len"] = _int(sec["cp_len"], "numerology.cp_len")
    elif "n_subcarriers" in kw:
        kw["cp_len"] = kw["n_subcarriers"] // 16
    if "delta_f_hz" in sec:
        kw["delta_f_hz"] = _float(sec["delta_f_hz"], "numerology.delta_f_hz")
    if "pilot_fraction" in sec:
        kw["pilot_fraction"] = _wrap(lambda: Fraction(str(sec["pilot_fraction"])), "numerology.pilot_fraction")
    if "qam_order" in sec:
        kw["qam_order"] = _int(sec["qam_order"], "numerology.qam_order")
    return _wrap(lambda: OfdmNumerology(**kw), "numerology")


def _plan_from(d: dict, name: str) -> FrequencyPlan:
    kind = d.get("kind", "homodyne")
    if kind not in (k.value for k in PlanKind):
        raise ConfigError(f"{name}.kind: expected 'homodyne' or 'heterodyne', got {kind!r}")
    if "f_rf_hz" not in d:
        raise ConfigError(f"{name}.f_rf_hz: missing")
    f_rf = _float(d["f_rf_hz"], f"{name}.f_rf_hz")
    if kind == "heterodyne":
        f_if = _float(d.get("f_if_hz", f_rf / 2.0), f"{name}.f_if_hz")
        return _wrap(lambda: FrequencyPlan.heterodyne(f_rf, f_if), name)
    return _wrap(lambda: FrequencyPlan.homodyne(f_rf), name)


def build_plan(raw: dict) -> FrequencyPlan:
    return _plan_from(raw.get("plan", {}), "plan")


def build_experiment(raw: dict) -> ExperimentConfig:
    sec = raw.get("experiment", {})
    preset = sec.get("preset", "table1")
    if preset not in ("table1", "desk"):
        raise ConfigError(f"experiment.preset: expected 'table1' or 'desk', got {preset!r}")
    kw = {}
    if preset == "desk":
        kw.update(snr_grid_db=DESK_SNR_GRID, n_symbols_per_run=100, n_mc_runs=20)
    if "snr_grid" in sec:
        kw["snr_grid_db"] = parse_range(sec["snr_grid"])
    for key in ("n_symbols_per_run", "n_mc_runs", "master_seed"):
        if key in sec:
            kw[key] = _int(sec[key], f"experiment.{key}")
    for key in ("cpe_correction", "pn_enabled"):
        if key in sec:
            kw[key] = _bool(sec[key], f"experiment.{key}")
    if "pn_mode" in sec:
        kw["pn_mode"] = sec["pn_mode"]
    rflo = build_psd(raw, "psd_rflo") if "psd_rflo" in raw else None
    return _wrap(
        lambda: ExperimentConfig(
            plan=build_plan(raw),
            ref_psd=build_psd(raw),
            numerology=build_numerology(raw),
            rflo_psd=rflo,
            **kw,
        ),
        "experiment",
    )


def build_compare(raw: dict, base: ExperimentConfig) -> tuple[list[FrequencyPlan], list[bool]]:
    """Plans and CPE modes to compare; defaults to homodyne vs. symmetric heterodyne."""
    sec = raw.get("compare", {})
    if "plans" in sec:
        if not isinstance(sec["plans"], list) or not sec["plans"]:
            raise ConfigError("compare.plans: expected a non-empty list of tables")
        plans = [_plan_from(d, f"compare.plans[{i}]") for i, d in enumerate(sec["plans"])]
    else:
        f = base.plan.f_rf_hz
        plans = [FrequencyPlan.homodyne(f), FrequencyPlan.heterodyne(f, f / 2.0)]
    modes = sec.get("cpe_modes", [False, True])
    if not isinstance(modes, list) or not modes:
        raise ConfigError("compare.cpe_modes: expected a non-empty list of booleans")
    return plans, [_bool(m, "compare.cpe_modes") for m in modes]


@dataclass(frozen=True)
class SweepSettings:
    grid_points: int = 101
    methods: tuple[VarianceMethod, ...] = (VarianceMethod.ANALYTIC_APPROX, VarianceMethod.NUMERICAL_INTEGRAL)
    edge_fraction: float = 1e-3


def build_sweep(raw: dict) -> SweepSettings:
    sec = raw.get("sweep", {})
    gp = _int(sec.get("grid_points", 101), "sweep.grid_points")
    if gp < 3:
        raise ConfigError(f"sweep.grid_points: need at least 3, got {gp}")
    method = sec.get("method", "both")
    if method == "both":
        methods = SweepSettings.methods
    else:
        methods = (_wrap(lambda: VarianceMethod(method), "sweep.method"),)
    edge = _float(sec.get("edge_fraction", 1e-3), "sweep.edge_fraction")
    if not 0 < edge < 0.5:
        raise ConfigError("sweep.edge_fraction: must lie in (0, 0.5)")
    return SweepSettings(gp, methods, edge)


@dataclass(frozen=True)
class PsdOutputSettings:
    f_min_hz: float = 1e2
    f_max_hz: float = 1e9
    points_per_decade: int = 10
    carrier_hz: float | None = None


def build_psd_output(raw: dict) -> PsdOutputSettings:
    sec = raw.get("psd_output", {})
    s = PsdOutputSettings(
        f_min_hz=_float(sec.get("f_min_hz", 1e2), "psd_output.f_min_hz"),
        f_max_hz=_float(sec.get("f_max_hz", 1e9), "psd_output.f_max_hz"),
        points_per_decade=_int(sec.get("points_per_decade", 10), "psd_output.points_per_decade"),
        carrier_hz=_float(sec["carrier_hz"], "psd_output.carrier_hz") if "carrier_hz" in sec else None,
    )
    if not 0 < s.f_min_hz < s.f_max_hz:
        raise ConfigError("psd_output: need 0 < f_min_hz < f_max_hz")
    if s.points_per_decade < 1:
        raise ConfigError("psd_output.points_per_decade: must be >= 1")
    if s.carrier_hz is not None and not s.carrier_hz > 0:
        raise ConfigError("psd_output.carrier_hz: must be positive")
    return s
