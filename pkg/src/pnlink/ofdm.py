"""OFDM symbol chain with phase-noise and AWGN impairments.

Conventions: DFTs are unitary in both directions, the channel is identity,
and SNR is Es/N0 per time-domain sample measured over the CP-stripped part
of each symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ContractError, DomainError
from .qam import QamConstellation
from .rng import SeedSpec, as_generator
from .synth import PhaseNoiseRealization

__all__ = [
    "OfdmNumerology",
    "CpeIciDiagnostic",
    "PILOT_SEED",
    "pilot_symbols",
    "ofdm_modulate",
    "ofdm_demodulate",
    "apply_phase_noise",
    "add_awgn",
    "estimate_cpe",
    "apply_cpe_correction",
    "compute_evm",
    "compute_ber",
    "decompose_cpe_ici",
    "write_constellation_csv",
]

PILOT_SEED = SeedSpec(master_seed=0x50494C4F54, stream_id=0)  # fixed, b"PILOT"


@dataclass(frozen=True)
class OfdmNumerology:
    n_subcarriers: int = 256
    cp_len: int = 16
    delta_f_hz: float = 240e3
    pilot_fraction: Fraction = Fraction(1, 4)
    qam_order: int = 64
    pilot_indices: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        n = self.n_subcarriers
        if n < 2:
            raise DomainError(f"need at least 2 subcarriers, got {n}")
        if not 0 <= self.cp_len < n:
            raise DomainError(f"cp_len must lie in [0, N), got {self.cp_len}")
        if not self.delta_f_hz > 0:
            raise DomainError("subcarrier spacing must be positive")
        frac = Fraction(self.pilot_fraction).limit_denominator(n)
        object.__setattr__(self, "pilot_fraction", frac)
        QamConstellation.square(self.qam_order)
        if self.pilot_indices is None:
            if frac <= 0 or frac > 1 or frac.numerator != 1 or n % frac.denominator:
                raise DomainError(
                    f"pilot fraction {frac} does not give a uniform comb on {n} subcarriers"
                )
            idx = tuple(range(0, n, frac.denominator))
        else:
            idx = tuple(sorted(int(i) for i in self.pilot_indices))
            steps = set(np.diff(idx)) if len(idx) > 1 else {n}
            if len(set(idx)) != len(idx) or idx[0] < 0 or idx[-1] >= n or len(steps) != 1:
                raise DomainError("pilot indices must be unique, uniformly spaced and inside [0, N)")
            if Fraction(len(idx), n) != frac:
                raise DomainError("pilot index count disagrees with pilot_fraction")
        object.__setattr__(self, "pilot_indices", idx)

    @property
    def sample_rate_hz(self) -> float:
        return self.n_subcarriers * self.delta_f_hz

    @property
    def symbol_duration_s(self) -> float:
        return 1.0 / self.delta_f_hz

    @property
    def n_sample(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def bandwidth_hz(self) -> float:
        return self.n_subcarriers * self.delta_f_hz

    @property
    def n_pilots(self) -> int:
        return len(self.pilot_indices)

    @property
    def data_indices(self) -> np.ndarray:
        mask = np.ones(self.n_subcarriers, dtype=bool)
        mask[list(self.pilot_indices)] = False
        return np.flatnonzero(mask)

    @property
    def constellation(self) -> QamConstellation:
        return QamConstellation.square(self.qam_order)

    @property
    def bits_per_symbol(self) -> int:
        """Data bits carried by one OFDM symbol."""
        return self.data_indices.size * self.constellation.bits_per_symbol


def pilot_symbols(numerology: OfdmNumerology, seed: SeedSpec = PILOT_SEED) -> np.ndarray:
    """Known unit-magnitude QPSK pilots, one per pilot index, same every symbol."""
    q = seed.generator().integers(0, 4, size=numerology.n_pilots)
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * q))


def ofdm_modulate(frame, numerology: OfdmNumerology) -> np.ndarray:
    """Unitary IDFT of each length-N frame, cyclic prefix prepended.

    Works on a single frame or a stack of frames (last axis = subcarrier).
    """
    x = np.asarray(frame, dtype=complex)
    n = numerology.n_subcarriers
    if x.shape[-1] != n:
        raise ContractError(f"frame length {x.shape[-1]} != N = {n}")
    t = np.fft.ifft(x, axis=-1, norm="ortho")
    cp = numerology.cp_len
    if cp == 0:
        return t
    return np.concatenate((t[..., n - cp :], t), axis=-1)


def ofdm_demodulate(samples, numerology: OfdmNumerology) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary DFT."""
    s = np.asarray(samples, dtype=complex)
    if s.shape[-1] != numerology.n_sample:
        raise ContractError(f"symbol length {s.shape[-1]} != N + cp = {numerology.n_sample}")
    return np.fft.fft(s[..., numerology.cp_len :], axis=-1, norm="ortho")


def apply_phase_noise(samples, pn) -> np.ndarray:
    """Rotate each sample by ``exp(j*phi[n])``."""
    s = np.asarray(samples, dtype=complex)
    phi = pn.samples if isinstance(pn, PhaseNoiseRealization) else np.asarray(pn, dtype=float)
    if phi.shape != s.shape:
        raise ContractError(f"sample/phase shape mismatch: {s.shape} vs {phi.shape}")
    return s * np.exp(1j * phi)


def add_awgn(samples, snr_db: float, seed, cp_len: int = 0) -> np.ndarray:
    """Add circular complex Gaussian noise at Es/N0 = ``snr_db``.

    ``samples`` is a flat sample vector or a stack of symbols (last axis =
    ``N + cp_len``). Signal power is measured over the samples after the
    first ``cp_len`` of each symbol; noise is added everywhere. ``snr_db =
    inf`` returns the input unchanged.
    """
    s = np.asarray(samples, dtype=complex)
    if not np.all(np.isfinite(s)):
        raise DomainError("samples must be finite")
    if math.isinf(snr_db) and snr_db > 0:
        return s.copy()
    body = s[..., cp_len:] if cp_len else s
    power = float(np.mean(np.abs(body) ** 2))
    noise_var = power / 10.0 ** (snr_db / 10.0)
    rng = as_generator(seed)
    z = rng.standard_normal((2,) + s.shape)
    return s + math.sqrt(noise_var / 2.0) * (z[0] + 1j * z[1])


def estimate_cpe(rx, pilots, pilot_indices) -> float | np.ndarray:
    """Angle of the pilot-averaged correlation ``mean(Y_k * conj(X_k))``.

    ``rx`` may be one frame or a stack; the result has one angle per frame.
    """
    idx = np.asarray(pilot_indices, dtype=int)
    if idx.size == 0:
        raise ContractError("pilot set is empty")
    x = np.asarray(pilots, dtype=complex)
    if x.shape[-1] != idx.size:
        raise ContractError("one known symbol is needed per pilot index")
    if np.any(x == 0):
        raise ContractError("pilot symbols must be nonzero")
    y = np.asarray(rx, dtype=complex)[..., idx]
    corr = np.mean(y * np.conj(x), axis=-1)
    ang = np.angle(corr)
    # np.angle gives [-pi, pi]; fold -pi onto +pi
    ang = np.where(ang == -np.pi, np.pi, ang)
    return float(ang) if np.ndim(ang) == 0 else ang


def apply_cpe_correction(rx, phi_hat) -> np.ndarray:
    """Derotate every subcarrier by ``phi_hat`` (one angle per frame)."""
    y = np.asarray(rx, dtype=complex)
    rot = np.exp(-1j * np.asarray(phi_hat, dtype=float))
    if rot.ndim:
        rot = rot[..., None]
    return y * rot


def compute_evm(rx, ref) -> float:
    """RMS EVM in percent: ``100 * sqrt(sum|rx - ref|^2 / sum|ref|^2)``."""
    rx = np.asarray(rx, dtype=complex)
    ref = np.asarray(ref, dtype=complex)
    if rx.shape != ref.shape:
        raise ContractError(f"shape mismatch: {rx.shape} vs {ref.shape}")
    p_ref = float(np.sum(np.abs(ref) ** 2))
    if p_ref <= 0:
        raise ContractError("reference power is zero")
    return 100.0 * math.sqrt(float(np.sum(np.abs(rx - ref) ** 2)) / p_ref)


def compute_ber(tx_bits, rx_bits) -> float:
    a = np.asarray(tx_bits).ravel()
    b = np.asarray(rx_bits).ravel()
    if a.size != b.size:
        raise ContractError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ContractError("empty bit streams")
    return float(np.count_nonzero(a != b)) / a.size


@dataclass(frozen=True)
class CpeIciDiagnostic:
    cpe: complex
    ici_power: float


def decompose_cpe_ici(pn, n: int) -> CpeIciDiagnostic:
    """Split an N-sample phase trajectory into its CPE and average ICI power.

    ``cpe = mean(exp(j*phi))``; by Parseval on ``exp(j*phi)`` the power that
    leaks off the diagonal for unit-power uncorrelated data is ``1 - |cpe|^2``.
    """
    phi = pn.samples if isinstance(pn, PhaseNoiseRealization) else np.asarray(pn, dtype=float)
    if phi.size != n:
        raise ContractError(f"phase trajectory has {phi.size} samples, expected N = {n}")
    # reference to the first sample so a constant trajectory gives exactly
    # mean == 1 and zero ICI
    rel = np.mean(np.exp(1j * (phi - phi[0])))
    ici = max(0.0, 1.0 - (rel.real**2 + rel.imag**2))
    cpe = complex(rel * np.exp(1j * phi[0]))
    return CpeIciDiagnostic(cpe=cpe, ici_power=float(ici))


def write_constellation_csv(path, frame) -> None:
    y = np.asarray(frame, dtype=complex).ravel()
    with open(path, "w", newline="") as fh:
        fh.write("k,re,im\n")
        for k, v in enumerate(y):
            fh.write(f"{k},{float(v.real)!r},{float(v.imag)!r}\n")
