"""Binary coding of real parameter vectors onto fixed-length bit strings.

Each parameter occupies a group of H bits mapping [a, b] onto a uniform grid
of 2^H points: theta = a + (b - a) / (2^H - 1) * sum_j 2^(j-1) x_j, where x_1
is the first bit of the group.  All-zero bits decode to a, all-one bits to b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CodingError(ValueError):
    """Bit-group length or interval contract violation."""


@dataclass(frozen=True)
class ParamCoding:
    """Coding interval and resolution for a single parameter."""

    lower: float
    upper: float
    bits: int

    def __post_init__(self):
        if not self.lower < self.upper:
            raise CodingError(f"lower must be < upper, got [{self.lower}, {self.upper}]")
        if self.bits < 1:
            raise CodingError(f"bits must be >= 1, got {self.bits}")

    @property
    def step(self) -> float:
        return (self.upper - self.lower) / (2**self.bits - 1)


@dataclass(frozen=True)
class CodingScheme:
    """Per-parameter coding records; chromosome length is the sum of bit counts."""

    params: tuple[ParamCoding, ...]

    @classmethod
    def uniform(cls, k: int, lower: float, upper: float, bits: int) -> "CodingScheme":
        return cls(tuple(ParamCoding(lower, upper, bits) for _ in range(k)))

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    def total_bits(self) -> int:
        return sum(p.bits for p in self.params)

    def groups(self):
        """Yield (start, stop) bit-slice bounds for each parameter group."""
        start = 0
        for p in self.params:
            yield start, start + p.bits
            start += p.bits

    def decode_vector(self, bits: np.ndarray) -> np.ndarray:
        """Decode a full chromosome into the real parameter vector."""
        bits = np.asarray(bits)
        if bits.shape[-1] != self.total_bits:
            raise CodingError(
                f"chromosome length {bits.shape[-1]} != scheme length {self.total_bits}"
            )
        out = np.empty(self.n_params, dtype=float)
        for i, (start, stop) in enumerate(self.groups()):
            out[i] = decode_bits(bits[start:stop], self.params[i])
        return out

    def decode_matrix(self, bits: np.ndarray) -> np.ndarray:
        """Decode a (m, M) population bit matrix into a (m, k) parameter matrix."""
        bits = np.asarray(bits)
        if bits.ndim != 2 or bits.shape[1] != self.total_bits:
            raise CodingError(f"expected (m, {self.total_bits}) bit matrix, got {bits.shape}")
        out = np.empty((bits.shape[0], self.n_params), dtype=float)
        for i, (start, stop) in enumerate(self.groups()):
            p = self.params[i]
            weights = 2.0 ** np.arange(p.bits)
            t = bits[:, start:stop].astype(float) @ weights
            out[:, i] = p.lower + p.step * t
        return out

    def project_to_grid(self, theta: np.ndarray) -> np.ndarray:
        """Nearest representable grid point, clipping outside the coding box."""
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        for i, p in enumerate(self.params):
            t = np.clip(round((theta[i] - p.lower) / p.step), 0, 2**p.bits - 1)
            out[i] = p.lower + p.step * t
        return out


def decode_bits(bits: np.ndarray, coding: ParamCoding) -> float:
    """Decode one H-bit group; bit j carries weight 2^(j-1)."""
    bits = np.asarray(bits)
    if bits.shape != (coding.bits,):
        raise CodingError(f"expected {coding.bits} bits, got shape {bits.shape}")
    t = int(np.dot(bits.astype(np.int64), 2 ** np.arange(coding.bits, dtype=np.int64)))
    return coding.lower + coding.step * t


def encode_value(value: float, coding: ParamCoding) -> np.ndarray:
    """Bits of the nearest grid point to `value` (clipped to the interval)."""
    t = int(np.clip(round((value - coding.lower) / coding.step), 0, 2**coding.bits - 1))
    return (t >> np.arange(coding.bits)) & 1
