"""Configuration, the end-to-end link, SNR sweeps and codebook training plumbing."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import chanest, codec, grid, importance, metrics, phy
from .bitquant import dequantize_features, quantize_features, step_size
from .pgm import read_pgm

__all__ = [
    "SimConfig",
    "GridConfig",
    "PhyConfig",
    "ChannelConfig",
    "CodecConfig",
    "ConfigError",
    "SCHEMES",
    "stage_seed",
    "synthetic_image",
    "synthetic_corpus",
    "training_vectors",
    "run_once",
    "sweep",
    "write_csv",
    "train_codebook_cmd",
    "probe_channel_estimation",
    "parse_snr_range",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# scheme name -> (fit, rematch)
SCHEMES = {
    "proposed+fit": (True, True),
    "proposed": (False, True),
    "vq+fit": (True, False),
    "vq": (False, False),
}


@dataclass
class GridConfig:
    n_t: int = 56
    n_f: int = 72
    dt: int = 4
    df: int = 6


@dataclass
class PhyConfig:
    fft_size: int = 128
    cp_len: int = 16
    qam_order: int = 16
    carrier_ghz: float = 2.4  # metadata only
    bandwidth_mhz: float = 20.0  # metadata only


@dataclass
class ChannelConfig:
    L_taps: int = 8
    decay: float = 2.0
    rho: float = 0.999
    fading: str = "rayleigh"


@dataclass
class CodecConfig:
    B: int = 4
    J: int = 1024
    codebook: str = ""


@dataclass
class QuantConfig:
    c: int = 8


@dataclass
class SchemeConfig:
    fit: bool = True
    rematch: bool = True


@dataclass
class SweepConfig:
    snr_db: list[float] = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0])
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    schemes: list[str] = field(default_factory=lambda: list(SCHEMES))


@dataclass
class PathConfig:
    image: str = ""
    out_dir: str = "."
    csv: str = ""


@dataclass
class SimConfig:
    profile: str = "desk"
    grid: GridConfig = field(default_factory=GridConfig)
    phy: PhyConfig = field(default_factory=PhyConfig)
    chan: ChannelConfig = field(default_factory=ChannelConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    quant: QuantConfig = field(default_factory=QuantConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    paths: PathConfig = field(default_factory=PathConfig)

    @classmethod
    def from_profile(cls, profile: str = "desk") -> "SimConfig":
        if profile == "desk":
            return cls()
        if profile == "paper":
            return cls(
                profile="paper",
                grid=GridConfig(n_t=448, n_f=792, dt=4, df=6),
                phy=PhyConfig(fft_size=1024, cp_len=72),
            )
        raise ConfigError(f"unknown profile {profile!r} (expected desk or paper)")

    @classmethod
    def load(cls, path: str | Path, overrides: dict[str, str] | None = None) -> "SimConfig":
        """Read a flat ``section.key = value`` file; ``overrides`` use the same keys and win."""
        pairs: dict[str, str] = {}
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            pairs[key] = value
        pairs.update(overrides or {})
        cfg = cls.from_profile(pairs.pop("profile", "desk"))
        cfg.apply(pairs)
        return cfg

    def apply(self, pairs: dict[str, str]) -> "SimConfig":
        for key, value in pairs.items():
            section, _, name = key.partition(".")
            sub = getattr(self, section, None)
            if not name or sub is None or not dataclasses.is_dataclass(sub) or not hasattr(sub, name):
                raise ConfigError(f"unknown config key {key!r}")
            current = getattr(sub, name)
            setattr(sub, name, _coerce(value, current, key))
        self.validate()
        return self

    def validate(self) -> None:
        if self.phy.qam_order != 16:
            raise ConfigError(f"only 16-QAM is supported, got qam_order={self.phy.qam_order}")
        if self.phy.fft_size < self.grid.n_f:
            raise ConfigError("fft_size must be at least the number of subcarriers")
        taps = 1 if self.chan.fading == "none" else self.chan.L_taps
        if self.phy.cp_len < taps - 1:
            raise ConfigError(f"cp_len={self.phy.cp_len} shorter than channel memory {taps - 1}")
        if not 1 <= self.quant.c <= 16:
            raise ConfigError("quant.c must be in [1, 16]")
        unknown = [s for s in self.sweep.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigError(f"unknown schemes {unknown}; choose from {sorted(SCHEMES)}")

    def layout(self) -> grid.GridLayout:
        g = self.grid
        return build_layout_cached(g.n_t, g.n_f, g.dt, g.df)


def _coerce(value: str, current, key: str):
    try:
        if isinstance(current, bool):
            v = value.lower()
            if v in ("on", "true", "1", "yes"):
                return True
            if v in ("off", "false", "0", "no"):
                return False
            raise ValueError(value)
        if isinstance(current, int):
            return int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, list):
            if key == "sweep.snr_db":
                return parse_snr_range(value)
            if key == "sweep.seeds":
                return _parse_seeds(value)
            return [s.strip() for s in value.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad value {value!r} for {key}") from exc
    return value


def parse_snr_range(text: str) -> list[float]:
    """``"5:25:5"`` (inclusive start:stop:step) or a comma list such as ``"5,10,inf"``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad SNR range {text!r}")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if "," in text or ":" in text:
        if ":" in text:
            a, b = (int(p) for p in text.split(":"))
            return list(range(a, b))
        return [int(p) for p in text.split(",")]
    return list(range(int(text)))


_LAYOUTS: dict[tuple[int, int, int, int], grid.GridLayout] = {}


def build_layout_cached(n_t: int, n_f: int, dt: int, df: int) -> grid.GridLayout:
    key = (n_t, n_f, dt, df)
    if key not in _LAYOUTS:
        _LAYOUTS[key] = grid.build_layout(*key)
    return _LAYOUTS[key]


def stage_seed(master: int, label: str) -> int:
    """Independent 64-bit seed for one pipeline stage."""
    digest = hashlib.sha256(f"{int(master)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def synthetic_image(seed: int, size: int = 128) -> np.ndarray:
    """Smooth shaded background with soft blobs, hard-edged ellipses and mild grain."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    img = 90 + 80 * (rng.uniform(-1, 1) * x + rng.uniform(-1, 1) * y)
    for _ in range(6):
        cx, cy = rng.uniform(0, 1, 2)
        s = rng.uniform(0.05, 0.25)
        img += rng.uniform(-80, 80) * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s * s))
    for _ in range(3):
        cx, cy = rng.uniform(0.15, 0.85, 2)
        ax, ay = rng.uniform(0.05, 0.3, 2)
        inside = ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 < 1
        img[inside] += rng.uniform(-70, 70)
    fx = rng.uniform(4, 12)
    img += 12 * np.sin(2 * np.pi * fx * (x * rng.uniform(0.5, 1) + y * rng.uniform(0, 0.5)))
    img += rng.normal(0, 3, img.shape)
    return np.clip(np.rint(img), 0, 255)


def synthetic_corpus(count: int, seed: int = 0, size: int = 128) -> list[np.ndarray]:
    return [synthetic_image(stage_seed(seed, f"image{i}"), size) for i in range(count)]


def training_vectors(images: Iterable[np.ndarray], B: int) -> np.ndarray:
    return np.concatenate([codec.tensor_vectors(codec.dct_encode(img, B)) for img in images])


def train_codebook_cmd(image_dir: str | Path, B: int, J: int, seed: int, out: str | Path,
                       max_iters: int = 50, tol: float = 1e-6) -> codec.Codebook:
    paths = sorted(p for p in Path(image_dir).iterdir() if p.suffix.lower() in (".pgm", ".pnm"))
    if not paths:
        raise FileNotFoundError(f"no .pgm images in {image_dir}")
    vecs = training_vectors((read_pgm(p) for p in paths), B)
    log.info("training %d-entry codebook on %d vectors from %d images", J, len(vecs), len(paths))
    cb = codec.train_codebook(vecs, J, max_iters=max_iters, tol=tol, seed=seed)
    codec.save_codebook(cb, out)
    return cb


def _scheme_name(fit: bool, rematch: bool) -> str:
    for name, flags in SCHEMES.items():
        if flags == (fit, rematch):
            return name
    raise AssertionError


def run_once(
    cfg: SimConfig,
    image: np.ndarray,
    snr_db: float,
    seed: int,
    codebook: codec.Codebook | None = None,
    trace: dict | None = None,
) -> metrics.RunReport:
    """Push one image through the full link and measure it.

    Channel and noise draws come from seeds derived from ``seed`` alone, so runs
    that differ only in scheme flags see the same channel and noise.  Pass a dict
    as ``trace`` to collect intermediate artifacts.
    """
    cfg.validate()
    cb = codebook if codebook is not None else codec.load_codebook(cfg.codec.codebook)
    B, c = cfg.codec.B, cfg.quant.c
    fit, do_rematch = cfg.scheme.fit, cfg.scheme.rematch
    layout = cfg.layout()
    if cb.dim != B * B:
        raise ConfigError(f"codebook dimension {cb.dim} does not match patch size {B}")

    z = np.asarray(image, dtype=np.float64)
    z_e = codec.dct_encode(z, B)
    K = codec.vq_quantize(z_e, cb)
    if fit:
        w = importance.importance_weights(importance.feature_gradients(z_e, K, z.size))
    else:
        w = importance.identity_ranking(K.shape[0])

    payload = quantize_features(K, c, cb.value_range)
    frames = grid.map_payload(layout, payload, w, phy.qam16_modulate)

    sigma2 = phy.snr_to_sigma2(snr_db)
    n_sym = frames.n_frames * layout.n_t
    chan = phy.draw_channel(stage_seed(seed, "channel"), cfg.chan.L_taps, cfg.chan.decay,
                            cfg.chan.rho, n_sym, sigma2, cfg.phy.fft_size, layout.n_f,
                            cfg.chan.fading)
    tx = phy.ofdm_modulate(frames.grids, cfg.phy.fft_size, cfg.phy.cp_len)
    rx = phy.channel_apply(tx, chan, np.random.default_rng(stage_seed(seed, "noise")))
    rx_grids = phy.ofdm_demodulate(rx, cfg.phy.fft_size, cfg.phy.cp_len, layout.n_f)
    rx_grids = rx_grids.reshape(frames.n_frames, layout.n_t, layout.n_f)
    H = chan.freq_response.reshape(frames.n_frames, layout.n_t, layout.n_f)

    eq = np.empty_like(rx_grids)
    err_sum = np.zeros(3)
    for k in range(frames.n_frames):
        est = chanest.bilinear_interpolate(
            chanest.ls_estimate(rx_grids[k], layout, frames.pilot_symbol), layout)
        eq[k] = chanest.equalize(rx_grids[k], est)
        s = chanest.estimation_error_stats(est, H[k], layout)
        err_sum += (s.pilot, s.important, s.regular)
    err = err_sum / max(frames.n_frames, 1)

    rx_payload = grid.demap_payload(frames.with_grids(eq), layout, w, phy.qam16_demodulate)
    K_tx = dequantize_features(payload)
    K_rx = dequantize_features(rx_payload)
    z_q = codec.rematch(K_rx, cb) if do_rematch else K_rx
    recon = codec.dct_decode(z_q, B)

    if trace is not None:
        trace.update(z_e=z_e, K=K, weights=w, payload=payload, frames=frames, channel=chan,
                     rx_grids=rx_grids, equalized=eq, rx_payload=rx_payload, K_prime=K_rx,
                     z_q=z_q, recon=recon, delta=step_size(c, cb.value_range))

    return metrics.RunReport(
        scheme=_scheme_name(fit, do_rematch),
        snr_db=float(snr_db),
        seed=int(seed),
        psnr_db=metrics.psnr(z, recon),
        ssim=metrics.ssim(z, recon),
        ber=metrics.bit_error_rate(payload, rx_payload),
        feature_errors={
            "E": metrics.feature_error(K, K_rx),
            "Eb": metrics.feature_error(K, K_tx),
            "Eh": metrics.feature_error(K_tx, K_rx),
        },
        est_mse={"pilot": float(err[0]), "green": float(err[1]), "regular": float(err[2])},
    )


def sweep(
    cfg: SimConfig,
    image: np.ndarray,
    codebook: codec.Codebook | None = None,
    schemes: Sequence[str] | None = None,
    snr_db: Sequence[float] | None = None,
    seeds: Sequence[int] | None = None,
    csv_path: str | Path | None = None,
) -> list[metrics.RunReport]:
    """Run every (scheme, SNR, seed) combination in that nesting order."""
    schemes = list(schemes if schemes is not None else cfg.sweep.schemes)
    snrs = list(snr_db if snr_db is not None else cfg.sweep.snr_db)
    seeds = list(seeds if seeds is not None else cfg.sweep.seeds)
    cb = codebook if codebook is not None else codec.load_codebook(cfg.codec.codebook)
    reports = []
    for name in schemes:
        if name not in SCHEMES:
            raise ConfigError(f"unknown scheme {name!r}")
        run_cfg = dataclasses.replace(cfg, scheme=SchemeConfig(*SCHEMES[name]))
        for s in snrs:
            for seed in seeds:
                reports.append(run_once(run_cfg, image, s, seed, cb))
        log.info("scheme %s done", name)
    if csv_path:
        write_csv(reports, csv_path)
    return reports


def write_csv(reports: Sequence[metrics.RunReport], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=metrics.CSV_COLUMNS)
        writer.writeheader()
        for r in reports:
            writer.writerow(r.csv_row())


def probe_channel_estimation(cfg: SimConfig, snr_db: float, seed: int) -> chanest.EstimationMSE:
    """Estimate one random 16-QAM frame through a fresh channel draw; per-role MSE."""
    layout = cfg.layout()
    rng = np.random.default_rng(stage_seed(seed, "probe-data"))
    frame = phy.CONSTELLATION[rng.integers(16, size=(layout.n_t, layout.n_f))]
    frame[layout.roles == grid.PILOT] = 1.0
    chan = phy.draw_channel(stage_seed(seed, "channel"), cfg.chan.L_taps, cfg.chan.decay,
                            cfg.chan.rho, layout.n_t, phy.snr_to_sigma2(snr_db),
                            cfg.phy.fft_size, layout.n_f, cfg.chan.fading)
    tx = phy.ofdm_modulate(frame, cfg.phy.fft_size, cfg.phy.cp_len)
    rx = phy.channel_apply(tx, chan, np.random.default_rng(stage_seed(seed, "noise")))
    y = phy.ofdm_demodulate(rx, cfg.phy.fft_size, cfg.phy.cp_len, layout.n_f)
    est = chanest.bilinear_interpolate(chanest.ls_estimate(y, layout, 1.0), layout)
    return chanest.estimation_error_stats(est, chan.freq_response, layout)
