"""OFDM resource grid layout and importance-aware payload mapping.

Pilots sit on the lattice ``t % dt == 0, f % df == 0``.  The four direct
neighbours of each pilot are *important* (green) REs that carry the
top-ranked feature channels; everything else is *regular*.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bitquant import BitPayload
from .importance import ImportanceWeights
from .phy import qam16_demodulate, qam16_modulate

__all__ = [
    "PILOT",
    "IMPORTANT",
    "REGULAR",
    "GridLayout",
    "MappedFrames",
    "FramingError",
    "build_layout",
    "important_feature_count",
    "map_payload",
    "demap_payload",
    "gather_streams",
    "role_map_ascii",
]

REGULAR, IMPORTANT, PILOT = 0, 1, 2


class FramingError(ValueError):
    pass


@dataclass(frozen=True)
class GridLayout:
    n_t: int
    n_f: int
    dt: int
    df: int
    roles: np.ndarray  # (n_t, n_f) of REGULAR / IMPORTANT / PILOT

    @property
    def n_cpi(self) -> int:
        return self.n_t * self.n_f

    @property
    def n_ref(self) -> int:
        return int(np.count_nonzero(self.roles == PILOT))

    @property
    def n_green(self) -> int:
        return int(np.count_nonzero(self.roles == IMPORTANT))

    @property
    def n_regular(self) -> int:
        return int(np.count_nonzero(self.roles == REGULAR))

    @property
    def n_data(self) -> int:
        return self.n_cpi - self.n_ref

    def positions(self, role: int) -> tuple[np.ndarray, np.ndarray]:
        """(t, f) indices of one role in raster order, time-major."""
        return np.nonzero(self.roles == role)


def build_layout(n_t: int, n_f: int, dt: int, df: int) -> GridLayout:
    if dt < 3 or df < 3:
        raise ValueError(f"pilot spacing must be >= 3 in both axes, got dt={dt}, df={df}")
    if n_t < dt or n_f < df:
        raise ValueError(f"grid {n_t}x{n_f} smaller than pilot spacing {dt}x{df}")
    roles = np.full((n_t, n_f), REGULAR, dtype=np.int8)
    pt = np.arange(0, n_t, dt)
    pf = np.arange(0, n_f, df)
    for ot, of in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        t = pt + ot
        f = pf + of
        t = t[(t >= 0) & (t < n_t)]
        f = f[(f >= 0) & (f < n_f)]
        roles[np.ix_(t, f)] = IMPORTANT
    roles[np.ix_(pt, pf)] = PILOT
    roles.setflags(write=False)
    return GridLayout(n_t, n_f, dt, df, roles)


def important_feature_count(layout: GridLayout, D: int) -> int:
    """Number of feature channels that fit the green share of the grid, rounded down."""
    if layout.n_data == 0:
        return 0
    return min(D, (D * layout.n_green) // layout.n_data)


@dataclass(frozen=True)
class MappedFrames:
    """A sequence of frequency-domain frames plus what the receiver needs to undo the mapping."""

    grids: np.ndarray  # (n_frames, n_t, n_f) complex
    pilot_symbol: complex
    n_important: int  # channels carried by stream A
    stream_symbols: tuple[int, int]  # symbols in streams A and B
    stream_pads: tuple[int, int]  # zero bits appended to A and B before modulation
    per_frame: tuple[tuple[int, int, int, int], ...]  # (A->green, B->regular, B->green, A->regular)
    payload_meta: tuple[int, tuple[float, float], tuple[int, int, int]]  # (c, range, (D, H, W))

    @property
    def n_frames(self) -> int:
        return self.grids.shape[0]

    def with_grids(self, grids: np.ndarray) -> "MappedFrames":
        grids = np.asarray(grids, dtype=np.complex128)
        if grids.shape != self.grids.shape:
            raise FramingError(f"received grids {grids.shape} do not match {self.grids.shape}")
        return MappedFrames(grids, self.pilot_symbol, self.n_important, self.stream_symbols,
                            self.stream_pads, self.per_frame, self.payload_meta)


def _plan(layout: GridLayout, n_a: int, n_b: int) -> list[tuple[int, int, int, int]]:
    plan = []
    a, b = n_a, n_b
    while a > 0 or b > 0:
        a_g = min(a, layout.n_green)
        b_r = min(b, layout.n_regular)
        b_g = min(b - b_r, layout.n_green - a_g)
        a_r = min(a - a_g, layout.n_regular - b_r)
        plan.append((a_g, b_r, b_g, a_r))
        a -= a_g + a_r
        b -= b_r + b_g
    return plan


def _split_streams(payload: BitPayload, order: np.ndarray, d_imp: int) -> tuple[np.ndarray, np.ndarray]:
    words = np.asarray(payload.words)
    return words[order[:d_imp]].reshape(-1), words[order[d_imp:]].reshape(-1)


def map_payload(
    layout: GridLayout,
    payload: BitPayload,
    ranking: ImportanceWeights,
    modulator: Callable = qam16_modulate,
    pilot_symbol: complex = 1.0 + 0.0j,
) -> MappedFrames:
    """Modulate the payload and place it on as many frames as needed.

    Channels ranked in the top ``D_imp`` form stream A, the rest stream B.  In
    each frame, green REs take stream A and regular REs stream B (raster order);
    once a stream is exhausted its REs are filled from the other one.  Unused
    trailing REs stay zero.
    """
    D = payload.shape[0]
    order = np.asarray(ranking.ranking)
    if sorted(order.tolist()) != list(range(D)):
        raise ValueError(f"ranking is not a permutation of {D} channels")
    d_imp = important_feature_count(layout, D)
    bits_a, bits_b = _split_streams(payload, order, d_imp)
    sym_a, pad_a = modulator(bits_a)
    sym_b, pad_b = modulator(bits_b)
    plan = _plan(layout, sym_a.size, sym_b.size)

    gt, gf = layout.positions(IMPORTANT)
    rt, rf = layout.positions(REGULAR)
    pt, pf = layout.positions(PILOT)
    grids = np.zeros((len(plan), layout.n_t, layout.n_f), dtype=np.complex128)
    ia = ib = 0
    for k, (a_g, b_r, b_g, a_r) in enumerate(plan):
        g = grids[k]
        g[pt, pf] = pilot_symbol
        g[gt[:a_g], gf[:a_g]] = sym_a[ia:ia + a_g]
        ia += a_g
        g[rt[:b_r], rf[:b_r]] = sym_b[ib:ib + b_r]
        ib += b_r
        g[gt[a_g:a_g + b_g], gf[a_g:a_g + b_g]] = sym_b[ib:ib + b_g]
        ib += b_g
        g[rt[b_r:b_r + a_r], rf[b_r:b_r + a_r]] = sym_a[ia:ia + a_r]
        ia += a_r
    return MappedFrames(
        grids,
        complex(pilot_symbol),
        d_imp,
        (int(sym_a.size), int(sym_b.size)),
        (int(pad_a), int(pad_b)),
        tuple(plan),
        (payload.bits_per_value, payload.value_range, payload.shape),
    )


def gather_streams(frames: MappedFrames, layout: GridLayout) -> tuple[np.ndarray, np.ndarray]:
    """Collect the stream A and stream B symbols back out of the frames, in mapping order."""
    n_a, n_b = frames.stream_symbols
    if len(frames.per_frame) != frames.n_frames or _plan(layout, n_a, n_b) != list(frames.per_frame):
        raise FramingError(
            f"{frames.n_frames} frames inconsistent with stream sizes {frames.stream_symbols}"
        )
    gt, gf = layout.positions(IMPORTANT)
    rt, rf = layout.positions(REGULAR)
    a_parts, b_parts = [], []
    for k, (a_g, b_r, b_g, a_r) in enumerate(frames.per_frame):
        g = frames.grids[k]
        a_parts.append(g[gt[:a_g], gf[:a_g]])
        b_parts.append(g[rt[:b_r], rf[:b_r]])
        b_parts.append(g[gt[a_g:a_g + b_g], gf[a_g:a_g + b_g]])
        a_parts.append(g[rt[b_r:b_r + a_r], rf[b_r:b_r + a_r]])
    sym_a = np.concatenate(a_parts) if a_parts else np.zeros(0, complex)
    sym_b = np.concatenate(b_parts) if b_parts else np.zeros(0, complex)
    return sym_a, sym_b


def demap_payload(
    frames: MappedFrames,
    layout: GridLayout,
    ranking: ImportanceWeights,
    demodulator: Callable = qam16_demodulate,
) -> BitPayload:
    """Undo :func:`map_payload`: demodulate both streams and restore channel-major order."""
    c, value_range, shape = frames.payload_meta
    D, H, W = shape
    order = np.asarray(ranking.ranking)
    d_imp = frames.n_important
    sym_a, sym_b = gather_streams(frames, layout)
    bits_a = demodulator(sym_a, frames.stream_pads[0])
    bits_b = demodulator(sym_b, frames.stream_pads[1])
    L = H * W * c
    if bits_a.size != d_imp * L or bits_b.size != (D - d_imp) * L:
        raise FramingError("demodulated stream lengths do not match the payload shape")
    words = np.empty((D, L), dtype=np.uint8)
    words[order[:d_imp]] = bits_a.reshape(d_imp, L)
    words[order[d_imp:]] = bits_b.reshape(D - d_imp, L)
    return BitPayload(words, c, value_range, shape)


def role_map_ascii(layout: GridLayout) -> str:
    """One line per OFDM symbol: ``P`` pilot, ``G`` important, ``.`` regular."""
    glyph = np.array([".", "G", "P"])
    return "\n".join("".join(glyph[row]) for row in layout.roles)
