"""Image and link quality metrics, and the per-run report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bitquant import BitPayload

__all__ = [
    "RunReport",
    "CSV_COLUMNS",
    "psnr",
    "ssim",
    "gaussian_window",
    "feature_error",
    "bit_error_rate",
]

CSV_COLUMNS = (
    "scheme", "snr_db", "seed", "psnr_db", "ssim", "ber",
    "mean_Ei", "mean_Eb", "mean_Eh", "mse_pilot", "mse_green", "mse_regular",
)

_C1 = (0.01 * 255) ** 2
_C2 = (0.03 * 255) ** 2


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(orig: np.ndarray, recon: np.ndarray) -> float:
    a, b = _pair(orig, recon)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = g.size
    rows = sliding_window_view(img, k, axis=1) @ g
    return sliding_window_view(rows, k, axis=0) @ g


def ssim(orig: np.ndarray, recon: np.ndarray, win: int = 11, sigma: float = 1.5) -> float:
    """Mean SSIM with a separable Gaussian window over all fully-contained window positions."""
    a, b = _pair(orig, recon)
    if a.ndim != 2 or min(a.shape) < win:
        raise ValueError(f"images must be 2-D and at least {win}x{win}, got {a.shape}")
    if np.array_equal(a, b):
        return 1.0
    g = gaussian_window(win, sigma)
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a ** 2
    var_b = _filter_valid(b * b, g) - mu_b ** 2
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + _C1) * (2 * cov + _C2)
    den = (mu_a ** 2 + mu_b ** 2 + _C1) * (var_a + var_b + _C2)
    return float(np.mean(num / den))


def feature_error(K: np.ndarray, K_prime: np.ndarray) -> np.ndarray:
    """Per-channel Euclidean error ``|k_i - k'_i|``."""
    a, b = _pair(K, K_prime)
    return np.sqrt(((a - b) ** 2).reshape(a.shape[0], -1).sum(axis=1))


def bit_error_rate(tx: BitPayload, rx: BitPayload) -> float:
    a = np.asarray(tx.words).reshape(-1)
    b = np.asarray(rx.words).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"payload sizes differ: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    return float(np.count_nonzero(a != b) / a.size)


@dataclass
class RunReport:
    scheme: str
    snr_db: float
    seed: int
    psnr_db: float
    ssim: float
    ber: float
    feature_errors: dict[str, np.ndarray] = field(default_factory=dict)  # "E", "Eb", "Eh" per channel
    est_mse: dict[str, float] = field(default_factory=dict)  # "pilot", "green", "regular"

    def csv_row(self) -> dict[str, object]:
        fe = self.feature_errors
        return {
            "scheme": self.scheme,
            "snr_db": self.snr_db,
            "seed": self.seed,
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "ber": self.ber,
            "mean_Ei": float(np.mean(fe["E"])),
            "mean_Eb": float(np.mean(fe["Eb"])),
            "mean_Eh": float(np.mean(fe["Eh"])),
            "mse_pilot": self.est_mse["pilot"],
            "mse_green": self.est_mse["green"],
            "mse_regular": self.est_mse["regular"],
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feature_errors"] = {k: np.asarray(v).tolist() for k, v in self.feature_errors.items()}
        return d
