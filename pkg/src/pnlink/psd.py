"""Zero-pole phase-noise spectra.

A spectrum is a low-frequency level ``s0`` (one-sided, rad^2/Hz) shaped by a
cascade of ``(1 + (f/f_zero)^2) / (1 + (f/f_pole)^2)`` factors. Parameters are
defined at a base carrier; moving to another carrier scales the level with the
square of the frequency ratio and every corner linearly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError

__all__ = [
    "ZeroPoleStage",
    "PhaseNoisePsd",
    "VarianceMethod",
    "VarianceEstimate",
    "dbchz_to_linear",
    "linear_to_dbchz",
    "psd_eval",
    "scale_to_carrier",
    "apply_multiplier",
    "integrate_variance",
    "analytic_variance",
    "default_reference_psd",
]


def dbchz_to_linear(value_dbchz: float) -> float:
    """Convert a dBc/Hz level to rad^2/Hz."""
    return 10.0 ** (value_dbchz / 10.0)


def linear_to_dbchz(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class ZeroPoleStage:
    f_zero: float
    f_pole: float

    def __post_init__(self):
        if not (self.f_zero > 0 and self.f_pole > 0):
            raise DomainError(
                f"corner frequencies must be positive, got f_zero={self.f_zero}, f_pole={self.f_pole}"
            )
        if not (math.isfinite(self.f_zero) and math.isfinite(self.f_pole)):
            raise DomainError("corner frequencies must be finite")


@dataclass(frozen=True)
class PhaseNoisePsd:
    """One-sided phase PSD anchored at ``base_carrier_hz``.

    Attributes:
        s0: Level at zero offset in rad^2/Hz.
        base_carrier_hz: Carrier at which ``s0`` and the corners apply.
        stages: Zero-pole stages. Empty means a flat spectrum.
    """

    s0: float
    base_carrier_hz: float
    stages: tuple[ZeroPoleStage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.s0 > 0 and math.isfinite(self.s0)):
            raise DomainError(f"s0 must be positive and finite, got {self.s0}")
        if not (self.base_carrier_hz > 0 and math.isfinite(self.base_carrier_hz)):
            raise DomainError(f"base_carrier_hz must be positive, got {self.base_carrier_hz}")
        # accept lists from callers, store an immutable tuple
        object.__setattr__(self, "stages", tuple(self.stages))

    @classmethod
    def from_dbchz(
        cls, s0_dbchz: float, base_carrier_hz: float, stages: Sequence[tuple[float, float]] = ()
    ) -> "PhaseNoisePsd":
        return cls(
            s0=dbchz_to_linear(s0_dbchz),
            base_carrier_hz=base_carrier_hz,
            stages=tuple(ZeroPoleStage(fz, fp) for fz, fp in stages),
        )

    @property
    def s0_dbchz(self) -> float:
        return linear_to_dbchz(self.s0)

    def corners(self) -> list[float]:
        out = []
        for st in self.stages:
            out.extend((st.f_zero, st.f_pole))
        return sorted(out)

    def __call__(self, f_m):
        return psd_eval(self, f_m)


def psd_eval(psd: PhaseNoisePsd, f_m):
    """Evaluate the spectrum at offset(s) ``f_m`` in Hz.

    Accepts a scalar or an array; returns the same shape. Negative offsets
    raise :class:`DomainError`.
    """
    f = np.asarray(f_m, dtype=float)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise DomainError("offset frequency must be >= 0")
    out = np.full(f.shape, psd.s0, dtype=float)
    for st in psd.stages:
        out = out * (1.0 + (f / st.f_zero) ** 2) / (1.0 + (f / st.f_pole) ** 2)
    if out.ndim == 0:
        return float(out)
    return out


def scale_to_carrier(psd: PhaseNoisePsd, f_c: float) -> PhaseNoisePsd:
    """Re-anchor ``psd`` at carrier ``f_c``.

    The level scales by ``(f_c/f_base)^2`` and every corner by ``f_c/f_base``.
    """
    if not f_c > 0:
        raise DomainError(f"carrier frequency must be positive, got {f_c}")
    if f_c == psd.base_carrier_hz:
        return psd
    k = f_c / psd.base_carrier_hz
    stages = tuple(ZeroPoleStage(st.f_zero * k, st.f_pole * k) for st in psd.stages)
    return PhaseNoisePsd(s0=psd.s0 * k * k, base_carrier_hz=f_c, stages=stages)


def apply_multiplier(psd: PhaseNoisePsd, n_mult: int) -> PhaseNoisePsd:
    """Spectrum at the output of an ideal ``n_mult``-times frequency multiplier."""
    if int(n_mult) != n_mult or n_mult < 1:
        raise DomainError(f"multiplier order must be a positive integer, got {n_mult}")
    return scale_to_carrier(psd, psd.base_carrier_hz * int(n_mult))


class VarianceMethod(str, enum.Enum):
    NUMERICAL_INTEGRAL = "numerical_integral"
    ANALYTIC_APPROX = "analytic_approx"


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    method: VarianceMethod

    def __post_init__(self):
        if not self.value >= 0:
            raise NumericalError(f"variance must be non-negative, got {self.value}")

    def __float__(self):
        return float(self.value)


def _checked_integrand(psd: PhaseNoisePsd):
    def g(u):
        # integrand in log-frequency: S(e^u) * e^u
        f = math.exp(u)
        val = psd_eval(psd, f) * f
        if not math.isfinite(val):
            raise NumericalError(f"non-finite PSD value at offset {f!r} Hz")
        return val

    return g


def integrate_variance(psd: PhaseNoisePsd, bandwidth: float) -> VarianceEstimate:
    """Integrate the spectrum over ``[0, bandwidth/2]``.

    The interval below ``f_low = max(1e-9 * B/2, 1 mHz)`` is taken as the flat
    rectangle ``s0 * f_low``; the rest is integrated adaptively in
    log-frequency with breaks at the corner frequencies.
    """
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth}")
    f_hi = bandwidth / 2.0
    f_low = max(f_hi * 1e-9, 1e-3)
    if f_low >= f_hi:
        return VarianceEstimate(psd.s0 * f_hi, VarianceMethod.NUMERICAL_INTEGRAL)
    u_lo, u_hi = math.log(f_low), math.log(f_hi)
    breaks = [math.log(c) for c in psd.corners() if f_low < c < f_hi]
    edges = [u_lo, *sorted(set(breaks)), u_hi]
    g = _checked_integrand(psd)
    total = psd.s0 * f_low
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    if not math.isfinite(total):
        raise NumericalError("variance integral diverged")
    return VarianceEstimate(total, VarianceMethod.NUMERICAL_INTEGRAL)


def analytic_variance(
    s0_ref: float, delta_f: float, n_sample: int, f_c: float, f_base: float
) -> VarianceEstimate:
    """Closed-form per-symbol variance ``n_sample * 2*pi*delta_f * s0_ref * (f_c/f_base)^2``.

    This is a Wiener-type accumulation law and is generally not equal to
    :func:`integrate_variance`; the two are kept separate on purpose.
    """
    for name, v in (
        ("s0_ref", s0_ref),
        ("delta_f", delta_f),
        ("n_sample", n_sample),
        ("f_c", f_c),
        ("f_base", f_base),
    ):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    value = n_sample * 2.0 * math.pi * delta_f * s0_ref * (f_c / f_base) ** 2
    return VarianceEstimate(value, VarianceMethod.ANALYTIC_APPROX)


# Representative single-stage reference at 15 GHz. These numbers are not a
# published Hexa-X parameter set; they give a PLL-like shape (flat in-band
# level, roll-off, white floor) whose CPE and ICI shares are both material
# at 70 and 140 GHz with 240 kHz subcarrier spacing.
DEFAULT_BASE_CARRIER_HZ = 15e9
DEFAULT_S0_DBCHZ = -83.5
DEFAULT_F_ZERO_HZ = 120e3
DEFAULT_F_POLE_HZ = 5.5e3


def default_reference_psd() -> PhaseNoisePsd:
    return PhaseNoisePsd.from_dbchz(
        DEFAULT_S0_DBCHZ, DEFAULT_BASE_CARRIER_HZ, [(DEFAULT_F_ZERO_HZ, DEFAULT_F_POLE_HZ)]
    )
