"""Uniform scalar quantization of feature tensors into per-channel bit words."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BitPayload", "MalformedPayload", "quantize_features", "dequantize_features", "step_size"]


class MalformedPayload(ValueError):
    pass


@dataclass(frozen=True)
class BitPayload:
    """Channel-major bit words: ``words[i]`` holds the H*W values of channel i, c bits each, MSB first."""

    words: np.ndarray  # uint8 in {0, 1}, shape (D, H*W*c)
    bits_per_value: int
    value_range: tuple[float, float]
    shape: tuple[int, int, int]  # (D, H, W)

    @property
    def word_length(self) -> int:
        _, H, W = self.shape
        return H * W * self.bits_per_value

    def flat(self) -> np.ndarray:
        return self.words.reshape(-1)


def step_size(c: int, value_range: tuple[float, float]) -> float:
    lo, hi = value_range
    return (hi - lo) / 2 ** c


def _check(c: int, value_range: tuple[float, float]) -> None:
    if not 1 <= c <= 16:
        raise ValueError(f"bits per value must be in [1, 16], got {c}")
    lo, hi = value_range
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"invalid quantizer range {value_range}")


def quantize_features(K: np.ndarray, c: int, value_range: tuple[float, float]) -> BitPayload:
    """Mid-rise quantization: cell index ``floor((v - min) / delta)`` clamped to ``[0, 2^c - 1]``."""
    _check(c, value_range)
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 3:
        raise ValueError(f"expected a (D, H, W) tensor, got shape {K.shape}")
    lo, _ = value_range
    delta = step_size(c, value_range)
    q = np.clip(np.floor((K - lo) / delta), 0, 2 ** c - 1).astype(np.int64)
    shifts = np.arange(c - 1, -1, -1)
    bits = (q[..., None] >> shifts) & 1  # (D, H, W, c)
    D, H, W = K.shape
    words = bits.reshape(D, H * W * c).astype(np.uint8)
    return BitPayload(words, c, (float(value_range[0]), float(value_range[1])), (D, H, W))


def dequantize_features(p: BitPayload) -> np.ndarray:
    """Cell-centre reconstruction ``min + (q + 0.5) * delta``."""
    _check(p.bits_per_value, p.value_range)
    D, H, W = p.shape
    c = p.bits_per_value
    words = np.asarray(p.words)
    if words.shape != (D, H * W * c):
        raise MalformedPayload(f"words have shape {words.shape}, expected {(D, H * W * c)}")
    weights = 1 << np.arange(c - 1, -1, -1)
    q = (words.reshape(D, H, W, c).astype(np.int64) * weights).sum(axis=-1)
    return p.value_range[0] + (q + 0.5) * step_size(c, p.value_range)
