"""Pilot-based channel estimation: LS at pilots, bilinear interpolation, zero-forcing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import IMPORTANT, PILOT, REGULAR, GridLayout

__all__ = [
    "ChannelEstimate",
    "EstimationMSE",
    "ls_estimate",
    "bilinear_interpolate",
    "equalize",
    "estimation_error_stats",
    "ZF_EPS",
]

ZF_EPS = 1e-6


@dataclass(frozen=True)
class ChannelEstimate:
    pilot_estimates: np.ndarray  # (n_pilot_rows, n_pilot_cols) lattice of LS estimates
    full_grid: np.ndarray  # (n_t, n_f)


@dataclass(frozen=True)
class EstimationMSE:
    pilot: float
    important: float
    regular: float


def _lattice(layout: GridLayout) -> tuple[np.ndarray, np.ndarray]:
    return np.arange(0, layout.n_t, layout.dt), np.arange(0, layout.n_f, layout.df)


def ls_estimate(rx_frame: np.ndarray, layout: GridLayout, pilot_symbol: complex = 1.0) -> np.ndarray:
    """``y_p / x_p`` at every pilot, returned on the pilot lattice (time rows, frequency columns)."""
    if pilot_symbol == 0:
        raise ValueError("pilot symbol must be non-zero")
    rx_frame = np.asarray(rx_frame, dtype=np.complex128)
    if rx_frame.shape != (layout.n_t, layout.n_f):
        raise ValueError(f"frame {rx_frame.shape} does not match layout {(layout.n_t, layout.n_f)}")
    pt, pf = _lattice(layout)
    return rx_frame[np.ix_(pt, pf)] / pilot_symbol


def _interp_weights(n: int, knots: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For positions 0..n-1: lower knot index, upper knot index, weight of the upper knot.

    Positions outside the knot span take the nearest knot's value.
    """
    x = np.arange(n)
    if len(knots) == 1:
        zero = np.zeros(n, dtype=np.int64)
        return zero, zero, np.zeros(n)
    hi = np.clip(np.searchsorted(knots, x, side="right"), 1, len(knots) - 1)
    lo = hi - 1
    w = (x - knots[lo]) / (knots[hi] - knots[lo])
    return lo, hi, np.clip(w, 0.0, 1.0)


def bilinear_interpolate(pilot_estimates: np.ndarray, layout: GridLayout) -> ChannelEstimate:
    """Interpolate the pilot lattice over the whole grid, frequency first, then time."""
    P = np.asarray(pilot_estimates, dtype=np.complex128)
    pt, pf = _lattice(layout)
    if P.shape != (len(pt), len(pf)) or P.size == 0:
        raise ValueError(f"pilot lattice {P.shape} inconsistent with layout {(len(pt), len(pf))}")
    flo, fhi, fw = _interp_weights(layout.n_f, pf)
    rows = P[:, flo] * (1.0 - fw) + P[:, fhi] * fw  # (n_pilot_rows, n_f)
    tlo, thi, tw = _interp_weights(layout.n_t, pt)
    full = rows[tlo, :] * (1.0 - tw)[:, None] + rows[thi, :] * tw[:, None]
    return ChannelEstimate(P, full)


def equalize(rx_frame: np.ndarray, est: ChannelEstimate, eps: float = ZF_EPS) -> np.ndarray:
    """Zero-forcing ``y / h_hat``; REs with ``|h_hat| < eps`` are output as 0."""
    y = np.asarray(rx_frame, dtype=np.complex128)
    h = est.full_grid
    if y.shape != h.shape:
        raise ValueError(f"frame {y.shape} does not match estimate {h.shape}")
    ok = np.abs(h) >= eps
    out = np.zeros_like(y)
    np.divide(y, h, out=out, where=ok)
    return out


def estimation_error_stats(est: ChannelEstimate, h_true: np.ndarray, layout: GridLayout) -> EstimationMSE:
    """Mean ``|h_hat - h|^2`` over pilot, important and regular REs separately."""
    h_true = np.asarray(getattr(h_true, "freq_response", h_true))
    if h_true.shape != est.full_grid.shape:
        raise ValueError(f"true response {h_true.shape} does not match estimate {est.full_grid.shape}")
    err = np.abs(est.full_grid - h_true) ** 2

    def _mean(role):
        sel = err[layout.roles == role]
        return float(sel.mean()) if sel.size else 0.0

    return EstimationMSE(_mean(PILOT), _mean(IMPORTANT), _mean(REGULAR))
