"""End-to-end segmentation of one recording."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ParamError
from .fine import (CycleAnchor, LabeledBeats, SystoleEstimate, beat_distances,
                   estimate_systole, find_anchor_cycles, refine_to_samples,
                   verify_correct_classify)
from .rough import PeakConfig, rough_detect
from .signal_io import AnnotationSet, PcgSignal, resample
from .spectral import Spectrogram, StftParams, spectrogram_for


@dataclass(frozen=True)
class PipelineConfig:
    fs: int = 4096
    window_len: int = 128
    hop: int = 32
    dft_len: int = 256
    f_lo: float = 20.0
    f_hi: float = 200.0
    hist_bins: int = 20
    eta_ms: float = 160.0
    tol_ms: float = 80.0
    peak_rel_height: float = 0.15
    peak_min_sep_s: float = 0.160

    def __post_init__(self):
        self.stft_params()  # validates the frame geometry
        if not 5 <= self.hist_bins <= 50:
            raise ParamError("hist_bins must lie in [5, 50]")
        if self.eta_ms < 0 or self.tol_ms < 0:
            raise ParamError("eta_ms and tol_ms must be non-negative")

    def stft_params(self) -> StftParams:
        return StftParams(self.window_len, self.hop, self.dft_len, "hamming", self.fs)

    def peak_config(self) -> PeakConfig:
        return PeakConfig(self.peak_rel_height, self.peak_min_sep_s)

    @property
    def eta(self) -> int:
        return int(round(self.eta_ms * 1e-3 * self.fs))

    @property
    def tol(self) -> int:
        return int(round(self.tol_ms * 1e-3 * self.fs))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParamError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(eq=False)
class Segmentation:
    beats: LabeledBeats
    sample_rate: int
    frames: np.ndarray
    deltas: np.ndarray
    systole: SystoleEstimate
    anchor: CycleAnchor
    alpha: np.ndarray = field(repr=False)
    spectrogram: Spectrogram = field(repr=False)

    def annotations(self) -> AnnotationSet:
        return AnnotationSet(self.beats.positions, self.beats.labels, self.sample_rate)

    def sidecar(self, eta: int) -> dict:
        return {
            "beta": self.systole.beta,
            "beta_samples": self.systole.beta_samples,
            "hr_init": self.anchor.hr_init,
            "eta": eta,
            "scenario_counts": self.beats.scenario_counts,
            "hr_trace": list(self.beats.hr_trace),
            "longest_scenario_a_run": self.beats.longest_a_run(),
            "n_rough_beats": int(self.deltas.size),
            "n_beats": int(len(self.beats)),
            "sample_rate": self.sample_rate,
        }


def segment(sig: PcgSignal, cfg: PipelineConfig = PipelineConfig()) -> Segmentation:
    """Detect and label S1/S2 beats.  Positions refer to ``cfg.fs``."""
    sig = resample(sig, cfg.fs)
    p = cfg.stft_params()
    spec = spectrogram_for(sig, p, (cfg.f_lo, cfg.f_hi))
    frames, alpha = rough_detect(spec, cfg.peak_config())
    deltas = refine_to_samples(sig.samples, frames, p)
    est = estimate_systole(beat_distances(deltas), cfg.hist_bins)
    anchor = find_anchor_cycles(deltas, est)
    beats = verify_correct_classify(len(sig), deltas, est, anchor, cfg.eta)
    return Segmentation(beats, cfg.fs, frames, deltas, est, anchor, alpha, spec)
