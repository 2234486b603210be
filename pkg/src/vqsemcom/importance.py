"""Gradient-based feature-channel importance and its ranking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImportanceWeights",
    "reconstruction_loss",
    "feature_gradients",
    "importance_weights",
    "identity_ranking",
    "ranking_csv",
]


@dataclass(frozen=True)
class ImportanceWeights:
    omega: np.ndarray
    ranking: np.ndarray  # channel indices, most important first

    def top(self, count: int) -> np.ndarray:
        return self.ranking[:count]


def reconstruction_loss(z: np.ndarray, z_prime: np.ndarray) -> float:
    """Mean squared pixel error ``|z' - z|^2 / l``."""
    z = np.asarray(z, dtype=np.float64)
    z_prime = np.asarray(z_prime, dtype=np.float64)
    if z.shape != z_prime.shape:
        raise ValueError(f"image shapes differ: {z.shape} vs {z_prime.shape}")
    return float(np.sum((z_prime - z) ** 2) / z.size)


def feature_gradients(z_e: np.ndarray, K: np.ndarray, l: int) -> np.ndarray:
    """Gradient of the reconstruction loss with respect to the quantized features.

    The block-DCT decoder is orthonormal, so decoding ``K`` and comparing with the
    image that ``z_e`` came from gives ``dL/dK = 2 (K - z_e) / l`` exactly.
    """
    z_e = np.asarray(z_e, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    if z_e.shape != K.shape:
        raise ValueError(f"tensor shapes differ: {z_e.shape} vs {K.shape}")
    return 2.0 * (K - z_e) / l


def _rank(omega: np.ndarray) -> np.ndarray:
    # stable sort on -|w| keeps lower indices first among ties
    return np.argsort(-np.abs(omega), kind="stable")


def importance_weights(grads: np.ndarray) -> ImportanceWeights:
    """Global average pooling of each channel's gradient map, ranked by magnitude."""
    g = np.asarray(grads, dtype=np.float64)
    if g.ndim != 3:
        raise ValueError(f"expected a (D, H, W) gradient tensor, got {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradients must be finite")
    omega = g.mean(axis=(1, 2))
    return ImportanceWeights(omega, _rank(omega))


def identity_ranking(D: int) -> ImportanceWeights:
    return ImportanceWeights(np.zeros(D), np.arange(D))


def ranking_csv(w: ImportanceWeights) -> str:
    return ",".join(str(int(i)) for i in w.ranking)
