"""Rough beat detection on the frame grid.

Every frame of the masked spectrogram is compared against every other frame
with the generalised Kullback-Leibler divergence

    D[i, j] = sum_f X[f, i] * log(X[f, i] / X[f, j]) - X[f, i] + X[f, j]

Beat frames are short and spectrally unlike the long systole/diastole
stretches that fill most of a recording, so the area under row ``i`` of
``D`` (its trapezoidal integral, ``alpha[i]``) peaks on beat frames.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DegenerateError, EmptyResult
from .spectral import Spectrogram, StftParams

DMAT_MAGIC = b"PCGD"


@dataclass(frozen=True)
class PeakConfig:
    """Peak-picking thresholds for ``alpha``.

    ``min_sep_frames`` defaults to the frame count spanned by ``min_sep_s``
    (one maximal beat duration), i.e. 21 frames at the default geometry.
    """

    rel_height: float = 0.15
    min_sep_s: float = 0.160
    min_sep_frames: int | None = None

    def separation(self, p: StftParams) -> int:
        if self.min_sep_frames is not None:
            return int(self.min_sep_frames)
        return math.ceil(self.min_sep_s / p.hop_seconds - 1e-9)


@numba.njit(cache=True)
def _fill_rows(xa, la, i0, i1, out):
    # xa, la: active bins x frames.  Entry (i, j) accumulates its bins in
    # ascending order whatever the block size, so blocked and full
    # computations agree bit for bit.
    n_bins, n_frames = xa.shape
    for i in range(i0, i1):
        r = i - i0
        for j in range(n_frames):
            out[r, j] = 0.0
        for f in range(n_bins):
            xi = xa[f, i]
            li = la[f, i]
            for j in range(n_frames):
                out[r, j] += xi * (li - la[f, j]) - xi + xa[f, j]
        for j in range(n_frames):
            if out[r, j] < 0.0:
                out[r, j] = 0.0
        out[r, i] = 0.0


@numba.njit(cache=True)
def _trapezoid_rows(block, out, offset):
    n = block.shape[1]
    for r in range(block.shape[0]):
        acc = 0.0
        for j in range(n - 1):
            acc += 0.5 * (block[r, j] + block[r, j + 1])
        out[offset + r] = acc


def _prepare(spec: Spectrogram):
    mag = spec.mag
    if mag.shape[1] < 2:
        raise DegenerateError("need at least 2 frames")
    if np.any(mag <= 0):
        raise DegenerateError("spectrogram entries must be positive (normalise first)")
    # a bin that is constant across frames contributes exactly 0 to every entry
    active = np.ptp(mag, axis=1) > 0
    xa = np.ascontiguousarray(mag[active], dtype=np.float64)
    return xa, np.log(xa)


def dissimilarity_matrix(spec: Spectrogram) -> np.ndarray:
    """Full T x T generalised-KL dissimilarity matrix (row = reference frame)."""
    xa, la = _prepare(spec)
    n = spec.n_frames
    out = np.empty((n, n))
    _fill_rows(xa, la, 0, n, out)
    return out


def iter_dissimilarity_rows(spec: Spectrogram, block: int = 256):
    """Yield ``(start, rows)`` blocks of the dissimilarity matrix."""
    xa, la = _prepare(spec)
    n = spec.n_frames
    buf = np.empty((min(block, n), n))
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        rows = buf[:i1 - i0]
        _fill_rows(xa, la, i0, i1, rows)
        yield i0, rows


def divergence_profile(dm: np.ndarray) -> np.ndarray:
    """Trapezoidal integral (unit spacing) of every row of ``dm``."""
    dm = np.ascontiguousarray(dm, dtype=np.float64)
    if dm.ndim != 2 or dm.shape[1] < 2:
        raise DegenerateError("need a matrix with at least 2 columns")
    alpha = np.empty(dm.shape[0])
    _trapezoid_rows(dm, alpha, 0)
    return alpha


def streaming_profile(spec: Spectrogram, block: int = 256) -> np.ndarray:
    """``divergence_profile(dissimilarity_matrix(spec))`` without the T x T matrix."""
    alpha = np.empty(spec.n_frames)
    for i0, rows in iter_dissimilarity_rows(spec, block):
        _trapezoid_rows(rows, alpha, i0)
    return alpha


def _local_maxima(a: np.ndarray) -> list[int]:
    """Interior local maxima; a flat-topped peak reports its first index."""
    peaks = []
    n = a.size
    i = 1
    while i < n - 1:
        if a[i] > a[i - 1]:
            k = i
            while k + 1 < n and a[k + 1] == a[i]:
                k += 1
            if k + 1 < n and a[k + 1] < a[i]:
                peaks.append(i)
            i = k + 1
        else:
            i += 1
    return peaks


def pick_beat_frames(alpha: np.ndarray, p: StftParams, cfg: PeakConfig = PeakConfig()) -> np.ndarray:
    """Frames (0-based, ascending) where ``alpha`` has a qualifying peak.

    Candidates are interior local maxima at least ``rel_height * max(alpha)``
    tall.  They are accepted greedily from the tallest down (earlier frame
    first on equal height), rejecting any candidate closer than the minimum
    separation to one already accepted.
    """
    a = np.asarray(alpha, dtype=np.float64)
    if a.size < 3:
        raise DegenerateError("need at least 3 frames to pick peaks")
    top = float(a.max())
    thresh = cfg.rel_height * top
    cands = [i for i in _local_maxima(a) if a[i] >= thresh and a[i] > 0]
    if not cands:
        raise EmptyResult("no peaks in the divergence profile")
    sep = cfg.separation(p)
    cands.sort(key=lambda i: (-a[i], i))
    taken = np.zeros(a.size, dtype=bool)
    kept = []
    for i in cands:
        if taken[i]:
            continue
        kept.append(i)
        taken[max(0, i - sep + 1):i + sep] = True
    return np.array(sorted(kept), dtype=np.int64)


def rough_detect(spec: Spectrogram, cfg: PeakConfig = PeakConfig(), block: int = 256):
    """Beat frames and the divergence profile they were picked from."""
    alpha = streaming_profile(spec, block)
    return pick_beat_frames(alpha, spec.params, cfg), alpha


def write_alpha_csv(path, alpha: np.ndarray) -> None:
    lines = ["frame,alpha"] + [f"{i},{v:.17g}" for i, v in enumerate(alpha)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_dissimilarity(path, spec: Spectrogram, block: int = 256) -> None:
    """Binary dump: 16-byte header ("PCGD", u32 T, 8 reserved bytes), then
    little-endian float64 rows."""
    n = spec.n_frames
    with open(path, "wb") as fh:
        fh.write(DMAT_MAGIC + struct.pack("<IQ", n, 0))
        for _, rows in iter_dissimilarity_rows(spec, block):
            fh.write(rows.astype("<f8").tobytes())


def read_dissimilarity(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) != 16 or head[:4] != DMAT_MAGIC:
            raise ValueError(f"{path}: not a PCGD file")
        (n, _) = struct.unpack("<IQ", head[4:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(n, n)
