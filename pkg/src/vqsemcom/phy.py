"""16-QAM, CP-OFDM modulation and a tapped-delay-line Rayleigh channel.

All DFTs are unitary, so a unit-energy constellation and white time-domain
noise of variance ``sigma2`` give a per-RE SNR of ``1 / sigma2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CONSTELLATION",
    "ChannelRealization",
    "qam16_modulate",
    "qam16_demodulate",
    "subcarrier_bins",
    "ofdm_modulate",
    "ofdm_demodulate",
    "draw_channel",
    "channel_apply",
    "snr_to_sigma2",
    "next_pow2",
]

_SCALE = 1.0 / np.sqrt(10.0)
# Gray levels indexed by the 2-bit value b_hi*2 + b_lo: 00 -> -3, 01 -> -1, 10 -> +3, 11 -> +1
_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
_LEVEL_BITS = {-3: (0, 0), -1: (0, 1), 1: (1, 1), 3: (1, 0)}

CONSTELLATION = np.array(
    [(_LEVELS[i >> 2] + 1j * _LEVELS[i & 3]) * _SCALE for i in range(16)]
)


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def snr_to_sigma2(snr_db: float) -> float:
    if np.isposinf(snr_db):
        return 0.0
    return float(10.0 ** (-snr_db / 10.0))


def qam16_modulate(bits: np.ndarray) -> tuple[np.ndarray, int]:
    """Map bits to Gray 16-QAM; returns ``(symbols, pad)`` where ``pad`` zero bits were appended."""
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    pad = (-bits.size) % 4
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    quads = bits.reshape(-1, 4).astype(np.int64)
    i_idx = quads[:, 0] * 2 + quads[:, 1]
    q_idx = quads[:, 2] * 2 + quads[:, 3]
    return (_LEVELS[i_idx] + 1j * _LEVELS[q_idx]) * _SCALE, pad


def _slice_levels(x: np.ndarray) -> np.ndarray:
    # nearest of {-3, -1, 1, 3}
    return np.clip(2 * np.floor(x / 2) + 1, -3, 3)


def qam16_demodulate(symbols: np.ndarray, pad: int = 0) -> np.ndarray:
    """Hard minimum-distance decisions back to bits, dropping ``pad`` trailing bits."""
    s = np.asarray(symbols, dtype=np.complex128).reshape(-1) / _SCALE
    i_lv = _slice_levels(s.real)
    q_lv = _slice_levels(s.imag)
    out = np.empty((s.size, 4), dtype=np.uint8)
    # b_hi = level > 0, b_lo = |level| == 1
    out[:, 0] = i_lv > 0
    out[:, 1] = np.abs(i_lv) == 1
    out[:, 2] = q_lv > 0
    out[:, 3] = np.abs(q_lv) == 1
    bits = out.reshape(-1)
    return bits[: bits.size - pad] if pad else bits


def subcarrier_bins(n_f: int, fft_size: int) -> np.ndarray:
    """FFT bin of each active subcarrier; the active band is centred on DC."""
    return (np.arange(n_f) - n_f // 2) % fft_size


def ofdm_modulate(frame: np.ndarray, fft_size: int, cp_len: int) -> np.ndarray:
    """IDFT each OFDM symbol (row) of a ``(..., n_sym, n_f)`` grid and prepend the cyclic prefix."""
    frame = np.asarray(frame, dtype=np.complex128)
    n_f = frame.shape[-1]
    if fft_size < n_f or cp_len < 0 or cp_len > fft_size:
        raise ValueError(f"invalid OFDM sizes: fft_size={fft_size}, cp_len={cp_len}, n_f={n_f}")
    rows = frame.reshape(-1, n_f)
    spec = np.zeros((rows.shape[0], fft_size), dtype=np.complex128)
    spec[:, subcarrier_bins(n_f, fft_size)] = rows
    body = np.fft.ifft(spec, axis=1, norm="ortho")
    sym = np.concatenate([body[:, fft_size - cp_len:], body], axis=1)
    return sym.reshape(-1)


def ofdm_demodulate(samples: np.ndarray, fft_size: int, cp_len: int, n_f: int) -> np.ndarray:
    """Strip the CP and DFT each symbol; returns an ``(n_sym, n_f)`` grid."""
    samples = np.asarray(samples, dtype=np.complex128).reshape(-1)
    sym_len = fft_size + cp_len
    if samples.size % sym_len:
        raise ValueError(f"{samples.size} samples is not a whole number of {sym_len}-sample symbols")
    body = samples.reshape(-1, sym_len)[:, cp_len:]
    spec = np.fft.fft(body, axis=1, norm="ortho")
    return spec[:, subcarrier_bins(n_f, fft_size)]


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray  # (n_sym, L_taps) complex tap gains, one vector per OFDM symbol
    pdp: np.ndarray
    rho: float
    freq_response: np.ndarray  # (n_sym, n_f)
    sigma2: float
    fft_size: int
    seed: int

    @property
    def n_symbols(self) -> int:
        return self.taps.shape[0]


def _freq_response(taps: np.ndarray, fft_size: int, n_f: int) -> np.ndarray:
    bins = subcarrier_bins(n_f, fft_size)
    lags = np.arange(taps.shape[1])
    steer = np.exp(-2j * np.pi * np.outer(lags, bins) / fft_size)
    return taps @ steer


def _cn(rng: np.random.Generator, shape, var) -> np.ndarray:
    s = np.sqrt(np.asarray(var, dtype=np.float64) / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(
    seed: int,
    L_taps: int,
    decay: float,
    rho: float,
    n_t: int,
    sigma2: float,
    fft_size: int = 128,
    n_f: int = 72,
    fading: str = "rayleigh",
) -> ChannelRealization:
    """Draw ``n_t`` OFDM symbols of a Rayleigh tapped delay line.

    Tap powers follow ``exp(-k / decay)`` normalised to unit sum; each symbol's
    taps evolve as ``g[n+1] = rho g[n] + sqrt(1 - rho^2) w``.  ``fading="none"``
    gives a single unit tap on every symbol.
    """
    if L_taps < 1 or decay <= 0:
        raise ValueError(f"need L_taps >= 1 and decay > 0, got {L_taps}, {decay}")
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"|rho| must be <= 1, got {rho}")
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if fading == "none":
        pdp = np.array([1.0])
        taps = np.ones((n_t, 1), dtype=np.complex128)
    elif fading == "rayleigh":
        pdp = np.exp(-np.arange(L_taps) / decay)
        pdp /= pdp.sum()
        rng = np.random.default_rng(seed)
        taps = np.empty((n_t, L_taps), dtype=np.complex128)
        taps[0] = _cn(rng, L_taps, pdp)
        innov = np.sqrt(max(0.0, 1.0 - rho * rho))
        for n in range(1, n_t):
            taps[n] = rho * taps[n - 1] + innov * _cn(rng, L_taps, pdp)
    else:
        raise ValueError(f"unknown fading model {fading!r}")
    taps.setflags(write=False)
    H = _freq_response(taps, fft_size, n_f)
    H.setflags(write=False)
    return ChannelRealization(taps, pdp, float(rho), H, float(sigma2), fft_size, int(seed))


def channel_apply(
    samples: np.ndarray,
    chan: ChannelRealization,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """Convolve each OFDM symbol with its own taps and add complex AWGN.

    The sample stream must hold exactly ``chan.n_symbols`` equal-length symbols.
    Each output symbol sees the tail of the previous one through its taps, which
    the cyclic prefix absorbs.
    """
    x = np.asarray(samples, dtype=np.complex128).reshape(-1)
    n_sym, L = chan.taps.shape
    if x.size % n_sym:
        raise ValueError(f"{x.size} samples do not split into {n_sym} symbols")
    sym_len = x.size // n_sym
    padded = np.concatenate([np.zeros(L - 1, dtype=np.complex128), x])
    y = np.zeros((n_sym, sym_len), dtype=np.complex128)
    for l in range(L):
        shifted = padded[L - 1 - l: L - 1 - l + x.size].reshape(n_sym, sym_len)
        y += chan.taps[:, l:l + 1] * shifted
    y = y.reshape(-1)
    if chan.sigma2 > 0:
        if rng is None:
            rng = np.random.default_rng([chan.seed, 0x6E6F697365])
        elif not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        y = y + _cn(rng, y.size, chan.sigma2)
    return y
