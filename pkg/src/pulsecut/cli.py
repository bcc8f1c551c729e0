"""Command-line interface: ``pulsecut {segment,evaluate,synth,mix}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (DegenerateError, EmptyResult, FormatError, IoError, NoAnchorError,
                     PairingError, ParamError, PulsecutError)
from .evaluation import aggregate, evaluate_recording, summary_csv
from .pipeline import PipelineConfig, segment
from .rough import write_alpha_csv, write_dissimilarity
from .signal_io import AnnotationSet, load_wav, parse_annotations, write_annotations
from .spectral import write_spectrogram_csv
from .synth import PRNG_NAME, Murmur, SynthSpec, mix_corpus, random_specs, write_corpus

CONFIG_ENV = "PULSECUT_CONFIG"
EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2

# failures that mean "this recording cannot be segmented", as opposed to
# "this file cannot be read"
_UNSEGMENTABLE = (NoAnchorError, EmptyResult, DegenerateError)


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _range(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2 or v[0] > v[1]:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return v[0], v[1]


# -- configuration ---------------------------------------------------------

def resolve_config(args) -> PipelineConfig:
    """Defaults, then the config file (``--config`` or $PULSECUT_CONFIG), then flags."""
    d = {}
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        p = Path(path)
        if not p.is_file():
            raise IoError(f"no such config file: {p}")
        try:
            d = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{p}: {exc}") from exc
        if not isinstance(d, dict):
            raise FormatError(f"{p}: expected a flat JSON object")
    for flag in ("fs", "eta_ms", "tol_ms", "hist_bins"):
        v = getattr(args, flag, None)
        if v is not None:
            d[flag] = v
    return PipelineConfig.from_dict(d)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"flat JSON config file (fallback: ${CONFIG_ENV})")
    p.add_argument("--fs", type=int, help="analysis sample rate in Hz")
    p.add_argument("--eta-ms", type=float, help="window margin in ms")
    p.add_argument("--tol-ms", type=float, help="matching tolerance in ms")
    p.add_argument("--hist-bins", type=int, help="systole histogram bin count")


# -- segment ---------------------------------------------------------------

def _wav_inputs(inputs) -> list[Path]:
    files = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files += sorted(p.glob("*.wav"))
        else:
            files.append(p)
    stems = [f.stem for f in files]
    dup = sorted({s for s in stems if stems.count(s) > 1})
    if dup:
        raise ParamError(f"duplicate recording names: {', '.join(dup)}")
    return files


def _segment_one(path: Path, out: Path, cfg: PipelineConfig, dumps: frozenset) -> tuple[str, str, str]:
    """Segment one file and write its outputs.  Returns (stem, status, message)."""
    stem = path.stem
    try:
        sig = load_wav(path)
    except (IoError, FormatError) as exc:
        return stem, "unreadable", str(exc)
    try:
        seg = segment(sig, cfg)
    except _UNSEGMENTABLE as exc:
        write_annotations(out / f"{stem}.csv", AnnotationSet(np.zeros(0, np.int64), [], cfg.fs))
        _dump_json(out / f"{stem}.json", {"status": "unsegmentable",
                                          "error": f"{type(exc).__name__}: {exc}",
                                          "sample_rate": cfg.fs})
        return stem, "unsegmentable", f"{type(exc).__name__}: {exc}"

    write_annotations(out / f"{stem}.csv", seg.annotations())
    side = seg.sidecar(cfg.eta)
    side.update(status="ok", source_sample_rate=sig.sample_rate)
    _dump_json(out / f"{stem}.json", side)
    if dumps:
        d = out / "dumps"
        d.mkdir(exist_ok=True)
        if "alpha" in dumps:
            write_alpha_csv(d / f"{stem}.alpha.csv", seg.alpha)
        if "dissimilarity" in dumps:
            write_dissimilarity(d / f"{stem}.dmat", seg.spectrogram)
        if "spectrogram" in dumps:
            write_spectrogram_csv(d / f"{stem}.spec.csv", seg.spectrogram)
    return stem, "ok", f"{len(seg.beats)} beats"


def _map(fn, jobs, argsets):
    if jobs <= 1 or len(argsets) <= 1:
        return [fn(*a) for a in argsets]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*argsets)))


def cmd_segment(args) -> int:
    cfg = resolve_config(args)
    files = _wav_inputs(args.inputs)
    if not files:
        raise ParamError("no WAV inputs")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "config.json", {"command": "segment", "config": cfg.to_dict(),
                                     "inputs": [str(f) for f in files], "version": __version__})
    dumps = frozenset(k for k in ("alpha", "dissimilarity", "spectrogram")
                      if getattr(args, f"dump_{k}"))
    results = _map(_segment_one, args.jobs, [(f, out, cfg, dumps) for f in files])
    failed = 0
    for stem, status, msg in results:
        if status == "ok":
            if not args.quiet:
                print(f"{stem}: {msg}")
        else:
            failed += 1
            print(f"{stem}: {status}: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


# -- evaluate --------------------------------------------------------------

def _csv_stems(root: Path) -> dict[str, Path]:
    if not root.is_dir():
        raise IoError(f"no such directory: {root}")
    return {p.stem: p for p in sorted(root.glob("*.csv"))}


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    det, truth = _csv_stems(Path(args.detected)), _csv_stems(Path(args.truth))
    if set(det) != set(truth):
        only_d = sorted(set(det) - set(truth))
        only_t = sorted(set(truth) - set(det))
        raise PairingError(f"recording names differ: detected only {only_d}, truth only {only_t}")
    if not det:
        raise PairingError("no annotation files to compare")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "config.json", {"command": "evaluate", "config": cfg.to_dict(),
                                     "detected": str(args.detected), "truth": str(args.truth),
                                     "version": __version__})
    reports = []
    for stem in sorted(det):
        t = parse_annotations(truth[stem], cfg.fs)
        d = parse_annotations(det[stem], cfg.fs)
        r = evaluate_recording(stem, t, d, cfg.tol)
        reports.append(r)
        _dump_json(out / f"{stem}.eval.json", {**r.to_dict(), "metrics": r.metrics(),
                                               "tolerance_samples": cfg.tol})
    summary = aggregate(reports)
    text = summary_csv(summary)
    (out / "summary.csv").write_text(text)
    if not args.quiet:
        for k, row in summary.items():
            print(f"{k:24s} mean {row['mean']:8.3f}  median {row['median']:8.3f}")
    return EXIT_OK


# -- synth / mix -----------------------------------------------------------

def _load_specs(path) -> list[SynthSpec]:
    p = Path(path)
    if not p.is_file():
        raise IoError(f"no such spec file: {p}")
    raw = json.loads(p.read_text())
    if isinstance(raw, dict):
        raw = [raw]
    specs = []
    for d in raw:
        d = dict(d)
        for k in ("s1_band", "s2_band"):
            if k in d:
                d[k] = tuple(d[k])
        specs.append(SynthSpec(**d))
    return specs


def cmd_synth(args) -> int:
    if args.spec:
        specs = _load_specs(args.spec)
    else:
        murmur = Murmur(placement=args.murmur) if args.murmur else None
        specs = random_specs(args.n, args.seed, duration_s=args.duration_s, hr=args.hr,
                             systole_ms=args.systole_ms, jitter=args.jitter, murmur=murmur)
    out = Path(args.output)
    write_corpus(out, specs)
    _dump_json(out / "config.json", {
        "command": "synth", "prng": PRNG_NAME, "seed": args.seed, "n": len(specs),
        "spec_file": args.spec, "duration_s": args.duration_s, "hr": list(args.hr),
        "systole_ms": list(args.systole_ms), "jitter": args.jitter, "murmur": args.murmur,
        "version": __version__})
    if not args.quiet:
        print(f"wrote {len(specs)} recordings to {out}")
    return EXIT_OK


def snr_dirname(snr_db: float) -> str:
    return f"snr{snr_db:+g}"


def cmd_mix(args) -> int:
    if args.noise == "ambient" and not args.noise_file:
        raise ParamError("--noise ambient needs --noise-file")
    if args.noise_file and not Path(args.noise_file).is_file():
        raise IoError(f"no such noise file: {args.noise_file}")
    src = Path(args.corpus)
    if not (src / "manifest.json").is_file():
        raise IoError(f"{src} is not a corpus (no manifest.json)")
    parent = Path(args.output) if args.output else src.parent
    for snr in args.snr:
        dst = parent / snr_dirname(snr)
        mix_corpus(src, dst, snr, args.seed, args.noise, args.noise_file)
        _dump_json(dst / "config.json", {
            "command": "mix", "source": str(src), "snr_db": snr, "noise": args.noise,
            "noise_file": args.noise_file, "seed": args.seed, "prng": PRNG_NAME,
            "version": __version__})
        if not args.quiet:
            print(f"wrote {dst}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulsecut", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="detect and label S1/S2 beats")
    p.add_argument("inputs", nargs="+", help="WAV files or directories of WAV files")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_config_flags(p)
    p.add_argument("--dump-alpha", action="store_true", help="write the divergence profile CSV")
    p.add_argument("--dump-dissimilarity", action="store_true",
                   help="write the binary frame dissimilarity matrix")
    p.add_argument("--dump-spectrogram", action="store_true",
                   help="write the masked, normalised spectrogram CSV")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score detections against annotations")
    p.add_argument("detected", help="directory of detected annotation CSVs")
    p.add_argument("truth", help="directory of reference annotation CSVs")
    p.add_argument("-o", "--output", required=True, help="report directory")
    _add_config_flags(p)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    p.add_argument("--spec", help="JSON file with one recording spec or a list of them")
    p.add_argument("-n", type=int, default=50, help="number of recordings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-s", type=float, default=30.0)
    p.add_argument("--hr", type=_range, default=(60.0, 100.0), help="heart rate range, bpm")
    p.add_argument("--systole-ms", type=_range, default=(280.0, 340.0))
    p.add_argument("--jitter", type=float, default=0.15, help="diastole jitter fraction")
    p.add_argument("--murmur", choices=("systolic", "diastolic"))
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("mix", help="degrade a corpus with noise at given SNRs")
    p.add_argument("corpus", help="source corpus directory")
    p.add_argument("--snr", type=_floats, default=[0.0],
                   help="comma-separated SNRs in dB (default 0)")
    p.add_argument("-o", "--output", help="parent of the snr<value> directories "
                                          "(default: next to the corpus)")
    p.add_argument("--noise", choices=("awgn", "ambient"), default="awgn")
    p.add_argument("--noise-file", help="ambient noise WAV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_mix)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PulsecutError as exc:
        print(f"pulsecut {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
