"""Magnitude spectrogram, global normalisation and spectral band masking."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DegenerateError, ParamError
from .signal_io import PcgSignal

EPS = 1e-8


@dataclass(frozen=True)
class StftParams:
    """Frame geometry of the STFT.

    ``hop`` is the frame advance in samples; 32 samples at 4096 Hz gives the
    7.8 ms time resolution, and ``dft_len = 2 * window_len`` the 16 Hz bin
    spacing.
    """

    window_len: int = 128
    hop: int = 32
    dft_len: int = 256
    window: str = "hamming"
    sample_rate: int = 4096

    def __post_init__(self):
        if not 0 < self.hop <= self.window_len <= self.dft_len:
            raise ParamError("need 0 < hop <= window_len <= dft_len")
        if self.window != "hamming":
            raise ParamError(f"unsupported window {self.window!r}")
        if self.sample_rate <= 0:
            raise ParamError("sample_rate must be positive")

    @property
    def n_bins(self) -> int:
        return self.dft_len // 2 + 1

    @property
    def bin_hz(self) -> float:
        return self.sample_rate / self.dft_len

    @property
    def hop_seconds(self) -> float:
        return self.hop / self.sample_rate

    def n_frames(self, n_samples: int) -> int:
        return (n_samples - self.window_len) // self.hop + 1

    def frame_start(self, frame: int) -> int:
        """First sample (0-based) of 0-based ``frame``."""
        return frame * self.hop


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """F x T magnitude matrix with the STFT parameters that produced it."""

    mag: np.ndarray
    params: StftParams
    band: tuple[float, float] | None = None
    floor: float = 0.0

    @property
    def n_bins(self) -> int:
        return self.mag.shape[0]

    @property
    def n_frames(self) -> int:
        return self.mag.shape[1]

    def bin_freqs(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.params.bin_hz


def stft(sig: PcgSignal, p: StftParams) -> Spectrogram:
    """Magnitude of the ``dft_len``-point DFT of Hamming-windowed frames."""
    n = p.window_len
    if len(sig) < n:
        raise ParamError(f"signal has {len(sig)} samples, need at least {n}")
    frames = sliding_window_view(sig.samples, n)[::p.hop]
    spec = np.fft.rfft(frames * np.hamming(n), n=p.dft_len, axis=1)
    return Spectrogram(np.ascontiguousarray(np.abs(spec).T), p)


def normalize(spec: Spectrogram, eps: float = EPS) -> Spectrogram:
    """Scale by the global maximum, then floor at ``eps``."""
    peak = float(spec.mag.max())
    if not peak > 0:
        raise DegenerateError("all-zero spectrogram")
    mag = np.maximum(spec.mag / peak, eps)
    return replace(spec, mag=mag, floor=eps)


def bandpass_mask(spec: Spectrogram, f_lo: float = 20.0, f_hi: float = 200.0) -> Spectrogram:
    """Set bins whose centre lies outside ``[f_lo, f_hi]`` to the floor value."""
    nyq = spec.params.sample_rate / 2
    if not 0 <= f_lo < f_hi <= nyq:
        raise ParamError(f"need 0 <= f_lo < f_hi <= {nyq}, got ({f_lo}, {f_hi})")
    eps = spec.floor if spec.floor > 0 else EPS
    freqs = spec.bin_freqs()
    keep = (freqs >= f_lo) & (freqs <= f_hi)
    mag = spec.mag.copy()
    mag[~keep, :] = eps
    return replace(spec, mag=mag, band=(f_lo, f_hi), floor=eps)


def spectrogram_for(sig: PcgSignal, p: StftParams, band=(20.0, 200.0)) -> Spectrogram:
    """STFT, normalise and mask in one call."""
    return bandpass_mask(normalize(stft(sig, p)), *band)


def write_spectrogram_csv(path, spec: Spectrogram) -> None:
    np.savetxt(path, spec.mag, delimiter=",", fmt="%.17g")
