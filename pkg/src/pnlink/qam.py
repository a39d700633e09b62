"""Gray-coded square QAM with unit average energy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import ContractError, DomainError

__all__ = ["QamConstellation", "qam_map", "qam_demap", "qam_ber_awgn"]


def _gray(i):
    return i ^ (i >> 1)


@dataclass(frozen=True, eq=False)
class QamConstellation:
    """Square ``order``-QAM.

    Each symbol carries ``k = log2(order)`` bits, MSB first. The first ``k/2``
    bits Gray-label the in-phase level, the remaining ``k/2`` the quadrature
    level. ``points[label]`` is the symbol for the integer ``label``.
    """

    order: int
    points: np.ndarray
    levels: np.ndarray
    level_labels: np.ndarray
    scale: float

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @classmethod
    def square(cls, order: int) -> "QamConstellation":
        return _square(int(order))


@lru_cache(maxsize=None)
def _square(order: int) -> QamConstellation:
    k = int(round(math.log2(order))) if order > 1 else 0
    if order < 4 or 2**k != order or k % 2:
        raise DomainError(f"QAM order must be an even power of two >= 4, got {order}")
    side = 1 << (k // 2)
    idx = np.arange(side)
    levels = (2 * idx - (side - 1)).astype(float)
    scale = math.sqrt(2.0 * (order - 1) / 3.0)
    # level_labels[i] is the Gray label of the i-th level from the left
    level_labels = _gray(idx)
    label_to_level = np.empty(side, dtype=int)
    label_to_level[level_labels] = idx
    labels = np.arange(order)
    i_lab, q_lab = labels >> (k // 2), labels & (side - 1)
    points = (levels[label_to_level[i_lab]] + 1j * levels[label_to_level[q_lab]]) / scale
    points.flags.writeable = False
    levels.flags.writeable = False
    level_labels.flags.writeable = False
    return QamConstellation(order, points, levels, level_labels, scale)


def _bits_to_labels(bits: np.ndarray, k: int) -> np.ndarray:
    weights = 1 << np.arange(k - 1, -1, -1)
    return bits.reshape(-1, k) @ weights


def qam_map(bits, constellation: QamConstellation) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    k = constellation.bits_per_symbol
    if bits.size % k:
        raise ContractError(f"bit count {bits.size} is not a multiple of {k}")
    return constellation.points[_bits_to_labels(bits.ravel(), k)]


def qam_demap(symbols, constellation: QamConstellation) -> np.ndarray:
    """Hard nearest-point decisions, returned as a flat 0/1 int8 bit array."""
    y = np.asarray(symbols).ravel() * constellation.scale
    k = constellation.bits_per_symbol
    half = k // 2
    side = 1 << half

    def axis(v):
        i = np.clip(np.rint((v + (side - 1)) / 2.0), 0, side - 1).astype(np.int64)
        return constellation.level_labels[i]

    labels = (axis(y.real) << half) | axis(y.imag)
    shifts = np.arange(k - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.int8).ravel()


def qam_ber_awgn(order: int, snr_db) -> np.ndarray:
    """Exact uncoded bit error rate of Gray square QAM on complex AWGN.

    ``snr_db`` is Es/N0. Each axis is an independent Gray-labelled PAM; for
    every transmitted level and label bit the probability of landing in a
    decision region whose label differs in that bit is summed exactly from
    Gaussian tail integrals.
    """
    c = QamConstellation.square(order)
    side = c.levels.size
    half = c.bits_per_symbol // 2
    snr = 10.0 ** (np.atleast_1d(np.asarray(snr_db, dtype=float)) / 10.0)
    # per-axis noise std in level units: N0/2 per axis, Es = 1 -> scale^2
    sigma = np.sqrt(c.scale**2 / (2.0 * snr))
    bounds = np.concatenate(([-np.inf], (c.levels[:-1] + c.levels[1:]) / 2.0, [np.inf]))
    out = np.zeros_like(snr)
    for t in range(side):
        x = c.levels[t]
        a = (bounds[:-1, None] - x) / sigma[None, :]
        b = (bounds[1:, None] - x) / sigma[None, :]
        # P(a < Z < b), taken from whichever tail avoids cancellation
        upper = 0.5 * (erfc(a / np.sqrt(2.0)) - erfc(b / np.sqrt(2.0)))
        lower = 0.5 * (erfc(-b / np.sqrt(2.0)) - erfc(-a / np.sqrt(2.0)))
        p_dec = np.where(a >= 0, upper, lower)
        diff_bits = np.array(
            [bin(int(c.level_labels[t]) ^ int(c.level_labels[r])).count("1") for r in range(side)]
        )
        out += (diff_bits[:, None] * p_dec).sum(axis=0)
    return out / (side * half)
