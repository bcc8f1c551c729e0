import json

import pytest

from pulsecut.errors import ParamError
from pulsecut.evaluation import evaluate_recording
from pulsecut.pipeline import PipelineConfig, segment
from pulsecut.signal_io import resample


def test_clean_recording_is_perfect(clean_recording):
    sig, truth = clean_recording
    seg = segment(sig)
    rep = evaluate_recording("x", truth, seg.annotations(), PipelineConfig().tol)
    assert rep.detection.f1 == 100.0
    assert rep.classification.accuracy == 100.0
    assert rep.detection.te_ms < 1.0
    side = seg.sidecar(PipelineConfig().eta)
    assert side["eta"] == 655
    assert set(side["scenario_counts"]) == {"A", "B", "C", "D"}
    json.dumps(side)


def test_other_input_rate(clean_recording):
    sig, truth = clean_recording
    up = resample(sig, 8000)
    seg = segment(up)
    assert seg.sample_rate == 4096
    rep = evaluate_recording("x", truth, seg.annotations(), PipelineConfig().tol)
    assert rep.detection.f1 == 100.0


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig(eta_ms=120, hist_bins=30)
    (tmp_path / "c.json").write_text(json.dumps(cfg.to_dict()))
    assert PipelineConfig.load(tmp_path / "c.json") == cfg
    assert cfg.eta == round(0.12 * 4096)
    assert PipelineConfig().tol == 328
    with pytest.raises(ParamError):
        PipelineConfig.from_dict({"speed": 3})
    with pytest.raises(ParamError):
        PipelineConfig(hist_bins=2)
