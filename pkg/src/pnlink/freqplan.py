"""Homodyne and heterodyne oscillator arrangements.

A homodyne plan has one LO at the RF carrier. A heterodyne plan splits the
translation into an IF oscillator and an RF LO at ``f_rf - f_if``; the two
are independent, so their variances (and phase trajectories) add.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .ofdm import OfdmNumerology
from .psd import (
    PhaseNoisePsd,
    VarianceMethod,
    analytic_variance,
    integrate_variance,
    scale_to_carrier,
)
from .rng import SeedSpec
from .synth import PhaseNoiseRealization, sum_realizations, synthesize

__all__ = [
    "PlanKind",
    "FrequencyPlan",
    "IfSweepResult",
    "oscillator_variance",
    "plan_variance",
    "sweep_if",
    "variance_reduction_gamma",
    "oscillator_seed",
    "plan_phase_process",
    "write_sweep_csv",
]


class PlanKind(str, enum.Enum):
    HOMODYNE = "homodyne"
    HETERODYNE = "heterodyne"


@dataclass(frozen=True)
class FrequencyPlan:
    kind: PlanKind
    f_rf_hz: float
    f_if_hz: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PlanKind(self.kind))
        if not self.f_rf_hz > 0:
            raise ContractError(f"f_rf_hz must be positive, got {self.f_rf_hz}")
        if self.kind is PlanKind.HETERODYNE:
            if self.f_if_hz is None or not 0 < self.f_if_hz < self.f_rf_hz:
                raise ContractError(
                    f"heterodyne plan needs 0 < f_if < f_rf, got f_if={self.f_if_hz}, f_rf={self.f_rf_hz}"
                )
        elif self.f_if_hz is not None:
            raise ContractError("homodyne plan takes no IF frequency")

    @classmethod
    def homodyne(cls, f_rf_hz: float) -> "FrequencyPlan":
        return cls(PlanKind.HOMODYNE, f_rf_hz)

    @classmethod
    def heterodyne(cls, f_rf_hz: float, f_if_hz: float) -> "FrequencyPlan":
        return cls(PlanKind.HETERODYNE, f_rf_hz, f_if_hz)

    @property
    def f_rflo_hz(self) -> float | None:
        if self.kind is PlanKind.HOMODYNE:
            return None
        return self.f_rf_hz - self.f_if_hz

    def oscillator_frequencies(self) -> tuple[float, ...]:
        if self.kind is PlanKind.HOMODYNE:
            return (self.f_rf_hz,)
        return (self.f_if_hz, self.f_rflo_hz)

    @property
    def label(self) -> str:
        if self.kind is PlanKind.HOMODYNE:
            return f"homodyne@{_ghz(self.f_rf_hz)}GHz"
        return f"heterodyne@{_ghz(self.f_if_hz)}+{_ghz(self.f_rflo_hz)}GHz"


def _ghz(f):
    return f"{f / 1e9:g}"


@dataclass(frozen=True)
class IfSweepResult:
    grid: np.ndarray
    variance: np.ndarray
    argmin_if_hz: float
    method: VarianceMethod


def oscillator_variance(
    ref_psd: PhaseNoisePsd, f_c: float, numerology: OfdmNumerology, method
) -> float:
    """Per-symbol variance of one oscillator at ``f_c`` derived from ``ref_psd``."""
    method = VarianceMethod(method)
    if method is VarianceMethod.NUMERICAL_INTEGRAL:
        return integrate_variance(scale_to_carrier(ref_psd, f_c), numerology.bandwidth_hz).value
    return analytic_variance(
        ref_psd.s0, numerology.delta_f_hz, numerology.n_sample, f_c, ref_psd.base_carrier_hz
    ).value


def plan_variance(
    plan: FrequencyPlan,
    ref_psd: PhaseNoisePsd,
    numerology: OfdmNumerology,
    method=VarianceMethod.ANALYTIC_APPROX,
    rflo_psd: PhaseNoisePsd | None = None,
) -> float:
    """Total phase-noise variance of ``plan`` in rad^2.

    ``rflo_psd`` optionally gives the RF LO of a heterodyne plan its own
    reference shape; by default both oscillators share ``ref_psd``.
    """
    if not isinstance(plan, FrequencyPlan):
        raise ContractError("plan must be a FrequencyPlan")
    if plan.kind is PlanKind.HOMODYNE:
        return oscillator_variance(ref_psd, plan.f_rf_hz, numerology, method)
    return oscillator_variance(ref_psd, plan.f_if_hz, numerology, method) + oscillator_variance(
        rflo_psd or ref_psd, plan.f_rflo_hz, numerology, method
    )


def sweep_if(
    f_rf_hz: float,
    ref_psd: PhaseNoisePsd,
    numerology: OfdmNumerology,
    grid_points: int = 101,
    method=VarianceMethod.ANALYTIC_APPROX,
    edge_fraction: float = 1e-3,
) -> IfSweepResult:
    """Heterodyne variance on a uniform IF grid.

    The grid runs from ``edge_fraction * f_rf`` to ``(1 - edge_fraction) *
    f_rf``; the exact endpoints are not valid heterodyne plans.
    """
    if not f_rf_hz > 0:
        raise DomainError(f"f_rf_hz must be positive, got {f_rf_hz}")
    if grid_points < 3:
        raise DomainError(f"need at least 3 grid points, got {grid_points}")
    if not 0 < edge_fraction < 0.5:
        raise DomainError("edge_fraction must lie in (0, 0.5)")
    method = VarianceMethod(method)
    grid = np.linspace(edge_fraction * f_rf_hz, (1.0 - edge_fraction) * f_rf_hz, grid_points)
    var = np.array(
        [
            plan_variance(FrequencyPlan.heterodyne(f_rf_hz, f), ref_psd, numerology, method)
            for f in grid
        ]
    )
    return IfSweepResult(grid, var, float(grid[int(np.argmin(var))]), method)


def variance_reduction_gamma(f_if_hz: float, f_rf_hz: float) -> float:
    """IF-oscillator variance relative to a homodyne LO: ``(f_if / f_rf)^2``."""
    if not (f_rf_hz > 0 and 0 < f_if_hz <= f_rf_hz):
        raise DomainError(f"need 0 < f_if <= f_rf, got f_if={f_if_hz}, f_rf={f_rf_hz}")
    return (f_if_hz / f_rf_hz) ** 2


def oscillator_seed(seed: SeedSpec, slot: int) -> SeedSpec:
    """Seed of oscillator ``slot`` (0 = IF or the single homodyne LO, 1 = RF LO)."""
    return seed.derive(0x05C, slot)


def plan_phase_process(
    plan: FrequencyPlan,
    ref_psd: PhaseNoisePsd,
    n_samples: int,
    sample_rate_hz: float,
    seed: SeedSpec,
    rflo_psd: PhaseNoisePsd | None = None,
) -> PhaseNoiseRealization:
    """Phase trajectory of the whole plan (sum over its oscillators)."""
    psds = (ref_psd, rflo_psd or ref_psd)
    out = None
    for slot, f_c in enumerate(plan.oscillator_frequencies()):
        r = synthesize(
            scale_to_carrier(psds[slot], f_c), n_samples, sample_rate_hz, oscillator_seed(seed, slot)
        )
        out = r if out is None else sum_realizations(out, r)
    return out


def write_sweep_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("f_if_hz,sigma2_rad2,method\n")
        for res in results:
            for f, v in zip(res.grid, res.variance):
                fh.write(f"{float(f)!r},{float(v)!r},{res.method.value}\n")
