"""Audio and annotation I/O, resampling and noise mixing.

All sample positions in this package are 0-based indices into the sample
vector.  Annotation files store the same 0-based indices.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import firwin, resample_poly

from .errors import DegenerateError, FormatError, IoError, OrderError, ParamError

LABELS = ("S1", "S2")

# polyphase anti-alias filter: Kaiser(8) windowed sinc, 64 zero crossings per side
_KAISER_BETA = 8.0
_HALF_WIDTH = 64


@dataclass(eq=False)
class PcgSignal:
    """Mono PCG recording.

    Parameters
    ----------
    samples : array
        Amplitudes, nominally in [-1, 1].
    sample_rate : int
        Sampling frequency (Hz).
    source_id : str
        Free-form label, usually the file stem.
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ParamError("samples must be a non-empty 1-D vector")
        if not np.all(np.isfinite(self.samples)):
            raise ParamError("samples must be finite")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ParamError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(eq=False)
class NoiseSignal:
    samples: np.ndarray
    sample_rate: int
    kind: str = "awgn"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.kind not in ("awgn", "ambient"):
            raise ParamError(f"unknown noise kind {self.kind!r}")
        if self.samples.ndim != 1 or not np.all(np.isfinite(self.samples)):
            raise ParamError("noise samples must be a finite 1-D vector")
        if self.sample_rate <= 0:
            raise ParamError("sample_rate must be positive")

    def __len__(self):
        return self.samples.size


@dataclass(eq=False)
class AnnotationSet:
    """Ordered S1/S2 beat annotations.

    ``alternating`` is False when the labels do not strictly alternate.  That
    is legal (real annotations skip beats) but worth knowing about.
    """

    positions: np.ndarray
    labels: list[str]
    sample_rate: int
    alternating: bool = field(init=False, default=True)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64).reshape(-1)
        self.labels = list(self.labels)
        if len(self.labels) != self.positions.size:
            raise ParamError("positions and labels differ in length")
        bad = [lab for lab in self.labels if lab not in LABELS]
        if bad:
            raise FormatError(f"unknown label {bad[0]!r}")
        if np.any(np.diff(self.positions) <= 0):
            raise OrderError("beat positions must be strictly increasing")
        self.alternating = all(a != b for a, b in zip(self.labels, self.labels[1:]))

    def __len__(self):
        return self.positions.size

    def __iter__(self):
        return iter(zip(self.positions.tolist(), self.labels))

    def __eq__(self, other):
        if not isinstance(other, AnnotationSet):
            return NotImplemented
        return (self.sample_rate == other.sample_rate
                and self.labels == other.labels
                and np.array_equal(self.positions, other.positions))


# -- WAV -------------------------------------------------------------------

def load_wav(path) -> PcgSignal:
    """Read a mono PCM (16/24/32-bit) or 32-bit float WAV file.

    Integer samples are divided by the full-scale value, so the most
    positive 16-bit code 32767 maps to 32767/32768.
    """
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise FormatError(f"{path}: expected 1 channel, got {data.shape[1]}")
    if data.size == 0:
        raise FormatError(f"{path}: zero-length audio")

    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        # scipy left-aligns 24-bit samples in int32, so one scale serves both
        x = data / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise FormatError(f"{path}: unsupported sample format {data.dtype}")
    return PcgSignal(x, int(rate), path.stem)


def write_wav(path, sig: PcgSignal) -> None:
    """Write ``sig`` as 32-bit float mono WAV."""
    wavfile.write(Path(path), sig.sample_rate, sig.samples.astype(np.float32))


# -- resampling ------------------------------------------------------------

def resample(sig: PcgSignal, target_rate: int) -> PcgSignal:
    """Band-limited rational resampling to ``target_rate``.

    Output length is ``round(len * target / source)``.
    """
    if target_rate <= 0 or int(target_rate) != target_rate:
        raise ParamError(f"target_rate must be a positive integer, got {target_rate}")
    target_rate = int(target_rate)
    if target_rate == sig.sample_rate:
        return sig
    g = math.gcd(target_rate, sig.sample_rate)
    up, down = target_rate // g, sig.sample_rate // g
    max_rate = max(up, down)
    h = firwin(2 * _HALF_WIDTH * max_rate + 1, 1.0 / max_rate,
               window=("kaiser", _KAISER_BETA))
    y = resample_poly(sig.samples, up, down, window=h)
    n_out = int(round(len(sig) * target_rate / sig.sample_rate))
    if y.size < n_out:
        y = np.concatenate([y, np.zeros(n_out - y.size)])
    return PcgSignal(y[:n_out], target_rate, sig.source_id)


# -- annotations -----------------------------------------------------------

def parse_annotations(path, sample_rate: int | None = None) -> AnnotationSet:
    """Read a ``sample,label`` annotation CSV.

    A ``# rate=<Hz>`` comment declares the rate the positions refer to.  When
    it differs from ``sample_rate`` the positions are rescaled; when
    ``sample_rate`` is None the file's rate is used.
    """
    path = Path(path)
    if not path.is_file():
        raise IoError(f"no such file: {path}")
    file_rate = None
    rows = []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("rate="):
                    try:
                        file_rate = int(body[5:])
                    except ValueError:
                        raise FormatError(f"{path}:{lineno}: bad rate comment {line!r}") from None
                continue
            if not header_seen:
                if [c.strip() for c in line.split(",")] != ["sample", "label"]:
                    raise FormatError(f"{path}:{lineno}: expected header 'sample,label'")
                header_seen = True
                continue
            parts = next(csv.reader([line]))
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 fields")
            pos, label = parts[0].strip(), parts[1].strip()
            try:
                pos = int(pos)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric position {pos!r}") from None
            if label not in LABELS:
                raise FormatError(f"{path}:{lineno}: unknown label {label!r}")
            rows.append((pos, label))
    if not header_seen:
        raise FormatError(f"{path}: missing header 'sample,label'")

    positions = np.array([r[0] for r in rows], dtype=np.int64)
    labels = [r[1] for r in rows]
    if np.any(np.diff(positions) <= 0):
        raise OrderError(f"{path}: positions are not strictly increasing")

    rate = sample_rate if sample_rate is not None else file_rate
    if rate is None:
        raise FormatError(f"{path}: no '# rate=' comment and no sample_rate given")
    if file_rate is not None and file_rate != rate:
        positions = np.round(positions * (rate / file_rate)).astype(np.int64)
    ann = AnnotationSet(positions, labels, rate)
    if not ann.alternating:
        warnings.warn(f"{path}: S1/S2 labels do not alternate", stacklevel=2)
    return ann


def write_annotations(path, ann: AnnotationSet) -> None:
    lines = [f"# rate={ann.sample_rate}", "sample,label"]
    lines += [f"{p},{lab}" for p, lab in ann]
    Path(path).write_text("\n".join(lines) + "\n")


# -- noise -----------------------------------------------------------------

def gen_awgn(length: int, sample_rate: int, seed: int) -> NoiseSignal:
    """Unit-variance white Gaussian noise from a seeded PCG64 stream."""
    if length <= 0:
        raise ParamError(f"length must be positive, got {length}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return NoiseSignal(rng.standard_normal(int(length)), sample_rate, "awgn")


def mix_at_snr(x: PcgSignal, a: NoiseSignal, snr_db: float, seed: int = 0) -> PcgSignal:
    """Return ``x + g * a`` with ``g`` chosen so that the mixture has ``snr_db``.

    Powers are mean squares over the whole recording.  Ambient noise longer
    than ``x`` contributes a seeded random contiguous fragment; AWGN is
    used from its start.  ``snr_db = inf`` returns ``x`` unchanged.
    """
    if x.sample_rate != a.sample_rate:
        raise ParamError(f"rate mismatch: signal {x.sample_rate} Hz, noise {a.sample_rate} Hz")
    if math.isinf(snr_db) and snr_db > 0:
        return x
    if not math.isfinite(snr_db):
        raise ParamError(f"snr_db must be finite or +inf, got {snr_db}")
    n = len(x)
    if len(a) < n:
        raise ParamError(f"noise has {len(a)} samples, need at least {n}")
    if a.kind == "ambient" and len(a) > n:
        rng = np.random.Generator(np.random.PCG64(seed))
        start = int(rng.integers(0, len(a) - n + 1))
    else:
        start = 0
    frag = a.samples[start:start + n]
    p_a = float(np.mean(frag ** 2))
    if p_a == 0.0:
        raise DegenerateError("noise fragment has zero power")
    p_x = float(np.mean(x.samples ** 2))
    g = math.sqrt(p_x / (p_a * 10.0 ** (snr_db / 10.0)))
    return PcgSignal(x.samples + g * frag, x.sample_rate, x.source_id)
