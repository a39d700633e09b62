"""Phase-noise realizations shaped in the frequency domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, NumericalError
from .psd import PhaseNoisePsd, psd_eval
from .rng import SeedSpec

__all__ = [
    "PhaseNoiseRealization",
    "synthesize",
    "empirical_variance",
    "sum_realizations",
    "write_realization_csv",
]


@dataclass(frozen=True, eq=False)
class PhaseNoiseRealization:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise DomainError("a realization needs a non-empty 1-D sample vector")
        if not np.all(np.isfinite(s)):
            raise NumericalError("realization contains non-finite samples")
        if not self.sample_rate_hz > 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate_hz}")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size


def synthesize(
    psd: PhaseNoisePsd, n_samples: int, sample_rate_hz: float, seed: SeedSpec
) -> PhaseNoiseRealization:
    """Draw one real phase trajectory whose one-sided spectrum follows ``psd``.

    Positive DFT bin ``k`` receives a circular Gaussian coefficient with
    ``E|X_k|^2 = S(f_k) * df / 2``; its mirror is the conjugate, so the pair
    carries ``S(f_k) * df`` of variance. The DC bin is zero and the Nyquist
    bin (even lengths) is real with the same ``S * df / 2`` variance.
    Offsets below ``df = sample_rate_hz / n_samples`` are not represented.
    """
    n = int(n_samples)
    if n < 2:
        raise DomainError(f"need at least 2 samples, got {n_samples}")
    if not sample_rate_hz > 0:
        raise DomainError(f"sample rate must be positive, got {sample_rate_hz}")
    rng = seed.generator()
    n_bins = n // 2 + 1
    df = sample_rate_hz / n
    freqs = np.arange(n_bins) * df
    # draw the full block up front so the variate-to-bin assignment never
    # depends on the PSD
    z = rng.standard_normal((2, n_bins))
    coeff = (z[0] + 1j * z[1]) * np.sqrt(0.5)
    amp = np.sqrt(psd_eval(psd, freqs) * df / 2.0)
    spec = amp * coeff
    spec[0] = 0.0
    if n % 2 == 0:
        spec[-1] = amp[-1] * z[0, -1]
    phi = np.fft.irfft(spec, n) * n
    if not np.all(np.isfinite(phi)):
        raise NumericalError("synthesized phase contains non-finite samples")
    return PhaseNoiseRealization(phi, float(sample_rate_hz))


def empirical_variance(r: PhaseNoiseRealization) -> float:
    """Population variance (mean squared deviation from the sample mean)."""
    if len(r) < 2:
        raise DomainError("need at least 2 samples")
    return float(np.var(r.samples))


def sum_realizations(a: PhaseNoiseRealization, b: PhaseNoiseRealization) -> PhaseNoiseRealization:
    if len(a) != len(b):
        raise ContractError(f"length mismatch: {len(a)} vs {len(b)}")
    if a.sample_rate_hz != b.sample_rate_hz:
        raise ContractError(f"sample-rate mismatch: {a.sample_rate_hz} vs {b.sample_rate_hz}")
    return PhaseNoiseRealization(a.samples + b.samples, a.sample_rate_hz)


def write_realization_csv(path, r: PhaseNoiseRealization) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("sample_index,phase_rad\n")
        for i, v in enumerate(r.samples):
            fh.write(f"{i},{float(v)!r}\n")
