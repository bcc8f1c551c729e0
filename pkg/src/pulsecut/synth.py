"""Synthetic PCG recordings with exact S1/S2 ground truth."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .errors import ParamError
from .signal_io import (AnnotationSet, NoiseSignal, PcgSignal, gen_awgn, load_wav,
                        mix_at_snr, resample, write_annotations, write_wav)

PRNG_NAME = "numpy.random.PCG64"
_MAX_DRAWS = 1000


@dataclass(frozen=True)
class Murmur:
    band: tuple[float, float] = (15.0, 700.0)
    gain: float = 0.5
    placement: str = "systolic"

    def __post_init__(self):
        if self.placement not in ("systolic", "diastolic"):
            raise ParamError(f"unknown murmur placement {self.placement!r}")


@dataclass(frozen=True)
class SynthSpec:
    """One synthetic recording.

    Systole is measured S1 peak to S2 peak and held constant; each diastole
    (S2 peak to next S1 peak) is the nominal value scaled by a uniform
    factor in ``1 +/- diastole_jitter_frac``.  Only complete cycles are
    synthesised and the recording ends where the last one does, so every
    stretch of the signal belongs to an annotated cycle.
    """

    hr_bpm: float = 75.0
    systole_ms: float = 300.0
    diastole_jitter_frac: float = 0.0
    s1_band: tuple[float, float] = (20.0, 150.0)
    s2_band: tuple[float, float] = (20.0, 200.0)
    s1_dur_ms: float = 100.0
    s2_dur_ms: float = 80.0
    s2_gain: float = 0.7
    duration_s: float = 30.0
    lead_ms: float = 0.0
    waveform: str = "noise"
    murmur: Murmur | None = None
    seed: int = 0
    sample_rate: int = 4096

    def __post_init__(self):
        if not 40 <= self.hr_bpm <= 200:
            raise ParamError("hr_bpm must lie in [40, 200]")
        for d in (self.s1_dur_ms, self.s2_dur_ms):
            if not 60 <= d <= 160:
                raise ParamError("beat durations must lie in [60, 160] ms")
        if not 0 < self.s2_gain < 1:
            raise ParamError("s2_gain must lie in (0, 1)")
        if not 0 <= self.diastole_jitter_frac < 1:
            raise ParamError("diastole_jitter_frac must lie in [0, 1)")
        if self.waveform not in ("noise", "tone"):
            raise ParamError(f"unknown waveform {self.waveform!r}")
        if isinstance(self.murmur, dict):
            object.__setattr__(self, "murmur", Murmur(**self.murmur))
        cycle = 60e3 / self.hr_bpm
        half_beats = (self.s1_dur_ms + self.s2_dur_ms) / 2
        dia_min = (cycle - self.systole_ms) * (1 - self.diastole_jitter_frac)
        if self.systole_ms >= cycle or self.systole_ms <= half_beats or dia_min <= half_beats:
            raise ParamError("infeasible timing: beats overlap within the cycle")

    def to_dict(self) -> dict:
        return asdict(self)


def _burst(rng, n, band, fs, waveform):
    """Hann-enveloped burst of odd length ``n`` whose largest magnitude sits
    exactly at its centre, scaled to unit peak."""
    env = np.hanning(n)
    c = n // 2
    if waveform == "tone":
        t = (np.arange(n) - c) / fs
        x = env * np.cos(2 * np.pi * (band[0] + band[1]) / 2 * t)
        return x / np.abs(x[c])
    sos = butter(4, band, btype="bandpass", fs=fs, output="sos")
    for _ in range(_MAX_DRAWS):
        carrier = sosfiltfilt(sos, rng.standard_normal(3 * n))
        k = n + int(np.argmax(np.abs(carrier[n:2 * n])))
        x = env * carrier[k - c:k - c + n]
        if int(np.argmax(np.abs(x))) == c:
            return x / np.abs(x[c])
    raise ParamError(f"could not draw a centred burst in band {band}")


def _odd(ms, fs):
    return 2 * int(round(ms * 1e-3 * fs / 2)) + 1


def _add(y, burst, center):
    h = burst.size // 2
    lo, hi = center - h, center + h + 1
    a, b = max(lo, 0), min(hi, y.size)
    if a < b:
        y[a:b] += burst[a - lo:b - lo]


def generate(spec: SynthSpec) -> tuple[PcgSignal, AnnotationSet]:
    """Render ``spec``; annotations mark each burst's envelope peak.

    The output is at most ``duration_s`` long: it stops at the onset the
    next S1 would have had after the last complete cycle.
    """
    fs = spec.sample_rate
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    y = np.zeros(int(round(spec.duration_s * fs)))
    end = 0
    systole = spec.systole_ms * 1e-3
    dia_nom = 60.0 / spec.hr_bpm - systole
    half1 = spec.s1_dur_ms * 1e-3 / 2

    positions, labels = [], []
    t = spec.lead_ms * 1e-3 + half1  # first S1 peak
    while True:
        dia = dia_nom * (1 + rng.uniform(-1, 1) * spec.diastole_jitter_frac)
        next_t = t + systole + dia
        if next_t - half1 > spec.duration_s:
            break
        p1 = int(round(t * fs))
        p2 = p1 + int(round(systole * fs))
        _add(y, _burst(rng, _odd(spec.s1_dur_ms, fs), spec.s1_band, fs, spec.waveform), p1)
        _add(y, spec.s2_gain * _burst(rng, _odd(spec.s2_dur_ms, fs), spec.s2_band, fs,
                                      spec.waveform), p2)
        m = spec.murmur
        if m is not None:
            h1, h2 = _odd(spec.s1_dur_ms, fs) // 2, _odd(spec.s2_dur_ms, fs) // 2
            if m.placement == "systolic":
                lo, hi = p1 + h1, p2 - h2
            else:
                lo, hi = p2 + h2, int(round(next_t * fs)) - h1
            length = hi - lo
            length -= 1 - length % 2
            if length >= 3:
                _add(y, m.gain * _burst(rng, length, m.band, fs, "noise"), lo + length // 2)
        positions += [p1, p2]
        labels += ["S1", "S2"]
        end = int(round((next_t - half1) * fs))
        t = next_t
    if end == 0:
        raise ParamError("duration too short for one complete cycle")
    y = y[:end]

    return (PcgSignal(y, fs, f"synth-{spec.seed}"),
            AnnotationSet(np.array(positions, dtype=np.int64), labels, fs))


def degrade(x: PcgSignal, noise: str, snr_db: float, seed: int,
            noise_signal: NoiseSignal | PcgSignal | None = None) -> PcgSignal:
    """Mix ``x`` with AWGN or an ambient recording at ``snr_db``."""
    if math.isinf(snr_db) and snr_db > 0:
        return x
    if noise == "awgn":
        a = gen_awgn(len(x), x.sample_rate, seed)
    elif noise in ("ambient", "ambient-file"):
        if noise_signal is None:
            raise ParamError("ambient mixing needs a noise recording")
        a = noise_signal
        if isinstance(a, PcgSignal):
            a = NoiseSignal(resample(a, x.sample_rate).samples, x.sample_rate, "ambient")
    else:
        raise ParamError(f"unknown noise source {noise!r}")
    return mix_at_snr(x, a, snr_db, seed)


def random_specs(n: int, seed: int, duration_s: float = 30.0,
                 hr=(60.0, 100.0), systole_ms=(280.0, 340.0), jitter: float = 0.15,
                 murmur: Murmur | None = None) -> list[SynthSpec]:
    """Draw ``n`` recording specs within the given physiological ranges."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for k in range(n):
        out.append(SynthSpec(
            hr_bpm=round(float(rng.uniform(*hr)), 3),
            systole_ms=round(float(rng.uniform(*systole_ms)), 3),
            diastole_jitter_frac=jitter,
            s1_dur_ms=round(float(rng.uniform(70, 160)), 3),
            s2_dur_ms=round(float(rng.uniform(60, 140)), 3),
            s2_gain=round(float(rng.uniform(0.5, 0.8)), 3),
            duration_s=duration_s,
            lead_ms=round(float(rng.uniform(0, 500)), 3),
            murmur=murmur,
            seed=int(rng.integers(0, 2**31)),
        ))
    return out


@dataclass
class Corpus:
    root: Path
    entries: list[dict] = field(default_factory=list)

    def items(self):
        for e in self.entries:
            yield e["id"], self.root / e["wav"], self.root / e["annotations"]


def write_corpus(root, specs: list[SynthSpec], extra: dict | None = None) -> Corpus:
    """Render every spec to ``<root>/<id>.wav`` + ``<id>.csv`` with a manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, spec in enumerate(specs):
        rid = f"rec{k:04d}"
        sig, ann = generate(spec)
        write_wav(root / f"{rid}.wav", sig)
        write_annotations(root / f"{rid}.csv", ann)
        entries.append({"id": rid, "wav": f"{rid}.wav", "annotations": f"{rid}.csv",
                        "seed": spec.seed, "spec": spec.to_dict()})
    manifest = {"prng": PRNG_NAME, "recordings": entries}
    if extra:
        manifest.update(extra)
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return Corpus(root, entries)


def read_corpus(root) -> Corpus:
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text())
    return Corpus(root, manifest["recordings"])


def mix_corpus(src, dst, snr_db: float, seed: int, noise: str = "awgn",
               noise_path=None) -> Corpus:
    """Degrade every recording of corpus ``src`` into ``dst``."""
    src_c = read_corpus(src)
    dst = Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    noise_sig = load_wav(noise_path) if noise_path is not None else None
    entries = []
    for k, (rid, wav, csv_path) in enumerate(src_c.items()):
        x = load_wav(wav)
        y = degrade(x, noise, snr_db, seed + k, noise_sig)
        write_wav(dst / f"{rid}.wav", y)
        (dst / f"{rid}.csv").write_bytes(csv_path.read_bytes())
        e = dict(src_c.entries[k])
        e.update({"wav": f"{rid}.wav", "annotations": f"{rid}.csv",
                  "mix": {"noise": noise, "snr_db": snr_db, "seed": seed + k,
                          "noise_file": str(noise_path) if noise_path else None}})
        entries.append(e)
    manifest = {"prng": PRNG_NAME, "recordings": entries,
                "source": str(Path(src)), "snr_db": snr_db, "noise": noise}
    (dst / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return Corpus(dst, entries)
