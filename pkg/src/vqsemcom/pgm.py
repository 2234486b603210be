"""Portable graymap (P2/P5, maxval <= 255) reading and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _tokens(data: bytes, count: int, pos: int = 0) -> tuple[list[bytes], int]:
    toks: list[bytes] = []
    n = len(data)
    while len(toks) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        toks.append(data[start:pos])
    return toks, pos


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P2 or P5 graymap as a float64 array scaled to [0, 255]."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _tokens(data, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    if magic == b"P5":
        raw = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
        if raw.size != w * h:
            raise ValueError(f"{path}: truncated P5 raster")
        img = raw.astype(np.float64)
    elif magic == b"P2":
        vals, _ = _tokens(data, w * h, pos)
        img = np.array([int(v) for v in vals], dtype=np.float64)
    else:
        raise ValueError(f"{path}: not a PGM file (magic {magic!r})")
    img = img.reshape(h, w)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return img


def write_pgm(path: str | Path, img: np.ndarray, binary: bool = True) -> None:
    """Write an image as 8-bit PGM; samples are rounded and clipped to [0, 255]."""
    px = np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)
    h, w = px.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(px.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in px:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())
