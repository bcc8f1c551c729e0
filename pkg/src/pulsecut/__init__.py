"""Unsupervised S1/S2 segmentation of phonocardiogram recordings.

Beats are found in two passes.  A rough pass scores every spectrogram frame
by its summed KL divergence to all other frames and picks the peaks; a fine
pass moves each peak to its loudest sample, estimates the systole length
from a histogram of inter-beat distances, and sweeps cycle-sized windows
outwards from two reliable cycles to add missing beats, drop spurious ones
and label the rest.
"""

from .errors import (DegenerateError, EmptyCorpus, EmptyResult, FormatError, InternalError,
                     IoError, NoAnchorError, OrderError, PairingError, ParamError,
                     PulsecutError)
from .evaluation import (aggregate, classification_metrics, detection_metrics,
                         evaluate_recording, match_beats)
from .fine import (beat_distances, estimate_systole, find_anchor_cycles, refine_to_samples,
                   verify_correct_classify)
from .pipeline import PipelineConfig, Segmentation, segment
from .rough import (PeakConfig, dissimilarity_matrix, divergence_profile, pick_beat_frames,
                    rough_detect, streaming_profile)
from .signal_io import (AnnotationSet, NoiseSignal, PcgSignal, gen_awgn, load_wav, mix_at_snr,
                        parse_annotations, resample, write_annotations, write_wav)
from .spectral import Spectrogram, StftParams, bandpass_mask, normalize, spectrogram_for, stft
from .synth import Murmur, SynthSpec, generate, random_specs

__version__ = "0.1.0"
