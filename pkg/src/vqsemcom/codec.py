"""Block-DCT semantic encoder/decoder with a shared vector-quantization codebook.

Feature tensors are laid out ``(D, H, W)``: channel ``i = u*B + v`` carries the
``(u, v)`` DCT coefficient of every ``B x B`` patch, so a 128x128 image with
``B = 4`` gives a 16x32x32 tensor.  The codebook quantizes the ``D``-vector found
at each spatial position ``(n, m)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Codebook",
    "DimensionError",
    "InsufficientTrainingData",
    "dct_matrix",
    "dct_encode",
    "dct_decode",
    "nearest_indices",
    "vq_quantize",
    "rematch",
    "codebook_dmin",
    "train_codebook",
    "tensor_vectors",
    "save_codebook",
    "load_codebook",
]

_MAGIC = b"VQCB"
_VERSION = 1
_CHUNK = 256


class DimensionError(ValueError):
    """Raised when array shapes do not fit the patch size or codebook."""


class InsufficientTrainingData(ValueError):
    pass


@dataclass(frozen=True)
class Codebook:
    """J shared entries of dimension D plus the component range used by the bit quantizer."""

    entries: np.ndarray
    value_range: tuple[float, float] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] < 2:
            raise DimensionError(f"codebook needs shape (J>=2, D), got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("codebook entries must be finite")
        if np.unique(e, axis=0).shape[0] != e.shape[0]:
            raise ValueError("codebook entries must be pairwise distinct")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        if self.value_range is None:
            vr = (float(e.min()), float(e.max()))
        else:
            vr = (float(self.value_range[0]), float(self.value_range[1]))
        if not vr[0] < vr[1]:
            raise ValueError(f"degenerate value range {vr}")
        object.__setattr__(self, "value_range", vr)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def dct_matrix(B: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``C`` with ``C @ x`` the transform of a length-B signal."""
    k = np.arange(B)[:, None]
    n = np.arange(B)[None, :]
    C = np.sqrt(2.0 / B) * np.cos(np.pi * (2 * n + 1) * k / (2 * B))
    C[0, :] = np.sqrt(1.0 / B)
    return C


def _check_image(img: np.ndarray, B: int) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"expected a 2-D grayscale image, got shape {img.shape}")
    h, w = img.shape
    if B < 1 or h % B or w % B:
        raise DimensionError(f"image {h}x{w} is not divisible by patch size {B}")
    return img


def dct_encode(img: np.ndarray, B: int = 4) -> np.ndarray:
    """Transform an image into a ``(B*B, h/B, w/B)`` feature tensor."""
    img = _check_image(img, B)
    h, w = img.shape
    C = dct_matrix(B)
    patches = img.reshape(h // B, B, w // B, B)  # (n, x, m, y)
    coef = np.einsum("ux,nxmy,vy->uvnm", C, patches, C)
    return coef.reshape(B * B, h // B, w // B)


def dct_decode(feat: np.ndarray, B: int = 4, clamp: bool = True) -> np.ndarray:
    """Inverse of :func:`dct_encode`; output is clamped to [0, 255] unless ``clamp=False``."""
    feat = np.asarray(feat, dtype=np.float64)
    if feat.ndim != 3 or feat.shape[0] != B * B:
        raise DimensionError(f"feature tensor {feat.shape} inconsistent with patch size {B}")
    _, H, W = feat.shape
    C = dct_matrix(B)
    coef = feat.reshape(B, B, H, W)
    patches = np.einsum("ux,uvnm,vy->nxmy", C, coef, C)
    img = patches.reshape(H * B, W * B)
    if clamp:
        img = np.clip(img, 0.0, 255.0)
    return img


def tensor_vectors(feat: np.ndarray) -> np.ndarray:
    """Per-position D-vectors of a ``(D, H, W)`` tensor as an ``(H*W, D)`` array."""
    D = feat.shape[0]
    return np.ascontiguousarray(feat.reshape(D, -1).T)


def _vectors_tensor(vecs: np.ndarray, H: int, W: int) -> np.ndarray:
    return np.ascontiguousarray(vecs.T).reshape(-1, H, W)


def nearest_indices(vecs: np.ndarray, entries: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest entry for each row of ``vecs``; ties go to the lowest index.

    The fast ``|e|^2 - 2 x.e`` expansion picks the winner; rows where another entry
    comes within the expansion's rounding error are re-decided with explicit
    differences, so exact ties always resolve to the lower index.
    """
    vecs = np.asarray(vecs, dtype=np.float64)
    entries = np.asarray(entries, dtype=np.float64)
    e2 = (entries ** 2).sum(axis=1)
    x2 = (vecs ** 2).sum(axis=1)
    out = np.empty(vecs.shape[0], dtype=np.int64)
    for start in range(0, vecs.shape[0], 4 * _CHUNK):
        block = vecs[start:start + 4 * _CHUNK]
        approx = e2[None, :] - 2.0 * (block @ entries.T)
        best = approx.min(axis=1)
        tol = 1e-9 * (x2[start:start + 4 * _CHUNK] + e2.max()) + 1e-300
        close = np.count_nonzero(approx <= (best + tol)[:, None], axis=1)
        idx = np.argmin(approx, axis=1)
        for r in np.flatnonzero(close > 1):
            d2 = ((block[r] - entries) ** 2).sum(axis=1)
            idx[r] = np.argmin(d2)
        out[start:start + 4 * _CHUNK] = idx
    return out


def vq_quantize(z_e: np.ndarray, cb: Codebook) -> np.ndarray:
    """Replace every per-position vector of ``z_e`` by its nearest codebook entry."""
    z_e = np.asarray(z_e, dtype=np.float64)
    if z_e.ndim != 3 or z_e.shape[0] != cb.dim:
        raise DimensionError(f"tensor {z_e.shape} does not match codebook dimension {cb.dim}")
    _, H, W = z_e.shape
    idx = nearest_indices(tensor_vectors(z_e), cb.entries)
    return _vectors_tensor(cb.entries[idx], H, W)


def rematch(k_prime: np.ndarray, cb: Codebook) -> np.ndarray:
    """Project a received feature tensor back onto the codebook.

    Any position whose received vector lies within half the entry's minimum
    distance of the transmitted entry comes back unchanged.
    """
    return vq_quantize(k_prime, cb)


def codebook_dmin(cb: Codebook, i: int) -> float:
    if not 0 <= i < cb.size:
        raise IndexError(f"entry index {i} out of range for J={cb.size}")
    d = np.linalg.norm(cb.entries - cb.entries[i], axis=1)
    d[i] = np.inf
    return float(d.min())


def _kmeanspp(X: np.ndarray, J: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((J, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, J):
        total = d2.sum()
        if total <= 0:
            pick = int(rng.integers(n))
        else:
            pick = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            pick = min(pick, n - 1)
        centers[j] = X[pick]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def train_codebook(
    vectors: np.ndarray,
    J: int,
    max_iters: int = 50,
    tol: float = 1e-6,
    seed: int = 0,
    history: list[float] | None = None,
) -> Codebook:
    """Generalized Lloyd training with k-means++ seeding.

    Iterates nearest assignment and centroid update until the relative change
    in mean squared distortion drops below ``tol`` or ``max_iters`` is reached.
    An empty cluster is re-seeded with the point of the largest cluster that is
    farthest from its centroid.  If ``history`` is given, the distortion after
    every assignment step is appended to it.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"training vectors must be 2-D, got {X.shape}")
    if J < 2:
        raise ValueError("codebook needs at least 2 entries")
    if X.shape[0] < J:
        raise InsufficientTrainingData(f"{X.shape[0]} training vectors for {J} entries")
    if np.unique(X, axis=0).shape[0] < J:
        raise InsufficientTrainingData(f"fewer than {J} distinct training vectors")

    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, J, rng)
    prev = None
    for _ in range(max_iters):
        labels = nearest_indices(X, centers)
        resid = ((X - centers[labels]) ** 2).sum(axis=1)
        counts = np.bincount(labels, minlength=J)
        for j in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            members = np.flatnonzero(labels == big)
            far = members[np.argmax(resid[members])]
            labels[far] = j
            resid[far] = 0.0
            counts[big] -= 1
            counts[j] = 1
        distortion = float(resid.mean())
        if history is not None:
            history.append(distortion)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        centers = sums / counts[:, None]
        if prev is not None and prev - distortion <= tol * max(prev, np.finfo(float).tiny):
            break
        prev = distortion
    return Codebook(centers)


def save_codebook(cb: Codebook, path: str | Path) -> None:
    J, D = cb.entries.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HII", _VERSION, J, D))
        fh.write(struct.pack("<dd", *cb.value_range))
        fh.write(cb.entries.astype("<f8").tobytes(order="C"))


def load_codebook(path: str | Path) -> Codebook:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a VQCB codebook file")
    version, J, D = struct.unpack_from("<HII", data, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported codebook version {version}")
    lo, hi = struct.unpack_from("<dd", data, 14)
    body = data[30:]
    if len(body) != 8 * J * D:
        raise ValueError(f"{path}: expected {J}x{D} entries, file body has {len(body)} bytes")
    entries = np.frombuffer(body, dtype="<f8").reshape(J, D).astype(np.float64)
    return Codebook(entries, (lo, hi))
