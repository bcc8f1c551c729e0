import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsecut.errors import DegenerateError, NoAnchorError, ParamError
from pulsecut.fine import (beat_distances, estimate_systole, find_anchor_cycles,
                           refine_to_samples, verify_correct_classify)
from pulsecut.spectral import StftParams

from helpers import ETA, SYS, anchor_at, cycles, fixed_beta, hist_oracle

P = StftParams()


# -- refinement ------------------------------------------------------------

def test_refine_window_arithmetic():
    x = np.zeros(4000)
    x[1152] = 0.5   # first sample of frame 36
    x[1279] = 0.4   # last sample of frame 36
    x[1280] = 9.0   # just outside
    assert list(refine_to_samples(x, [36], P)) == [1152]
    x[1152] = 0.0
    assert list(refine_to_samples(x, [36], P)) == [1279]


def test_refine_spike_and_tie():
    x = np.zeros(4000)
    x[1200] = -3.0
    assert list(refine_to_samples(x, [36], P)) == [1200]
    x[1210] = 3.0
    assert list(refine_to_samples(x, [36], P)) == [1200]


def test_refine_clips_and_dedups():
    x = np.zeros(1000)
    x[990] = 1.0
    assert list(refine_to_samples(x, [30], P)) == [990]   # frame 30 starts at 960
    x[500] = 2.0
    assert list(refine_to_samples(x, [12, 13, 14], P)) == [500]
    with pytest.raises(ParamError):
        refine_to_samples(x, [40], P)


# -- distances and systole -------------------------------------------------

def test_distances():
    np.testing.assert_array_equal(beat_distances([100, 400, 1500, 1800]), [300, 1100, 300])
    assert list(beat_distances([5, 9])) == [4]
    with pytest.raises(DegenerateError):
        beat_distances([5])
    with pytest.raises(ParamError):
        beat_distances([5, 5, 9])


def test_systole_example():
    est = estimate_systole(np.array([300, 1100, 300, 1150, 310]), 5)
    assert est.beta == 385.0
    assert list(est.counts) == [3, 0, 0, 0, 2]


def test_systole_degenerate_and_errors():
    assert estimate_systole(np.array([300, 300, 300]), 20).beta == 300
    with pytest.raises(DegenerateError):
        estimate_systole(np.array([300, 900]), 20)
    for h in (4, 51):
        with pytest.raises(ParamError):
            estimate_systole(np.array([1, 2, 3]), h)


def test_systole_tie_prefers_short_bin():
    est = estimate_systole(np.array([300, 1000, 305, 1004, 600]), 5)
    assert list(est.counts) == [2, 0, 1, 0, 2]
    assert est.beta == pytest.approx(300 + 704 / 10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 5000), min_size=3, max_size=60), st.sampled_from([5, 20, 50]))
def test_systole_matches_oracle(z, H):
    est = estimate_systole(np.array(z, dtype=np.int64), H)
    assert abs(est.beta - float(hist_oracle(z, H))) <= 1e-9
    assert est.counts.sum() == len(z)


# -- anchor ----------------------------------------------------------------

def _deltas_from(zetas, start=1000):
    return np.concatenate([[start], start + np.cumsum(zetas)])


_est = fixed_beta


def test_anchor_example():
    d = _deltas_from([300, 900, 310, 950, 305])
    a = find_anchor_cycles(d, _est(305))
    assert (a.c1_start, a.c1_end, a.c2_start, a.c2_end) == tuple(d[:4])
    assert a.hr_init == 1200 and a.index == 0


def test_anchor_ideal_structure():
    s, dia = 1200, 2000
    d = _deltas_from([s, dia] * 5 + [s])
    a = find_anchor_cycles(d, estimate_systole(beat_distances(d)))
    assert a.index == 0 and a.hr_init == s + dia


def test_anchor_prefers_most_probable_systole():
    z = [1180, 2000, 1190, 2000, 1200, 2000, 1210, 2000, 1230]
    a = find_anchor_cycles(_deltas_from(z), _est(1200))
    assert a.index == 4


def test_anchor_impossible():
    with pytest.raises(NoAnchorError):
        find_anchor_cycles(_deltas_from([1000] * 8), _est(1000))
    with pytest.raises(NoAnchorError):
        find_anchor_cycles(_deltas_from([300, 900]), _est(300))


# -- sweep fixtures ----------------------------------------------------------

def check_structure(out):
    assert np.all(np.diff(out.positions) > 0)
    assert out.labels[0] in ("S1", "S2")
    assert all(a != b for a, b in zip(out.labels, out.labels[1:]))
    assert sum(out.scenario_counts.values()) == len(out.steps)


@pytest.mark.parametrize("k", [0, 3, 7])
def test_clean_input_passes_through(k):
    pos = cycles(9, jitter=[0, 150, -180, 90, 200, -100, 60, -150])
    out = verify_correct_classify(int(pos[-1]) + 2000, pos, _est(SYS), anchor_at(pos, k), ETA)
    check_structure(out)
    np.testing.assert_array_equal(out.positions, pos)
    assert out.labels == ["S1", "S2"] * 9
    assert set(s.scenario for s in out.steps) == {"C"}


def test_scenario_a_reinserts_from_neighbour():
    pos = cycles(9)
    holed = np.delete(pos, [10, 11])  # cycle 5 missing
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    steps = [s for s in out.steps if s.direction == "right"]
    a = [i for i, s in enumerate(steps) if s.scenario == "A"]
    assert len(a) == 1
    step, prev = steps[a[0]], steps[a[0] - 1]
    assert step.s1 == prev.s1 + prev.hr and step.s2 == prev.s2 + prev.hr
    assert step.s2 - step.s1 == prev.s2 - prev.s1
    assert step.inserted == (True, True)
    np.testing.assert_array_equal(out.positions, pos)


def test_scenario_a_leftward():
    pos = cycles(9)
    holed = np.delete(pos, [2, 3])  # cycle 1, left of the anchor
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 4), ETA)
    check_structure(out)
    assert out.scenario_counts["A"] == 1
    np.testing.assert_array_equal(out.positions, pos)


def test_scenario_b_lower_half_is_s1():
    pos = cycles(9, jitter=[0, 100, -100, 50, 0, 0, 0, 0])
    holed = np.delete(pos, 9)  # S2 of cycle 4
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    (b,) = [s for s in out.steps if s.scenario == "B"]
    (c,) = b.candidates
    assert c == pos[8] and c - b.window[0] < b.window[1] - c
    assert (b.s1, b.s2, b.inserted) == (c, c + SYS, (False, True))
    np.testing.assert_array_equal(out.positions, pos)


def test_scenario_b_upper_half_is_s2():
    pos = cycles(9, jitter=[0, 100, -100, 50, 0, 0, 0, 0])
    holed = np.delete(pos, 8)  # S1 of cycle 4
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    (b,) = [s for s in out.steps if s.scenario == "B"]
    (c,) = b.candidates
    assert c == pos[9] and c - b.window[0] > b.window[1] - c
    assert (b.s1, b.s2, b.inserted) == (c - SYS, c, (True, False))
    np.testing.assert_array_equal(out.positions, pos)


def test_scenario_b_tie_reads_s1():
    pos = cycles(9)
    e = int(pos[8])                       # expected S1 of cycle 4
    mid = e + SYS // 2                    # window [e - eta, e + beta + eta] centre
    holed = np.sort(np.append(np.delete(pos, [8, 9]), mid))
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    b = next(s for s in out.steps if s.scenario == "B")
    assert b.candidates == (mid,)
    assert mid - b.window[0] == b.window[1] - mid
    assert (b.s1, b.s2) == (mid, mid + SYS)


def best_pair_oracle(cands, beta):
    return min(itertools.combinations(cands, 2), key=lambda p: (abs(p[1] - p[0] - beta), p))


def test_scenario_d_drops_spurious():
    pos = cycles(9)
    spurious = int(pos[8]) + 600
    noisy = np.sort(np.append(pos, spurious))
    out = verify_correct_classify(int(pos[-1]) + 2000, noisy, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    (d,) = [s for s in out.steps if s.scenario == "D"]
    assert spurious in d.candidates and len(d.candidates) == 3
    assert (d.s1, d.s2) == best_pair_oracle(d.candidates, SYS)
    np.testing.assert_array_equal(out.positions, pos)


def test_scenario_d_tie_takes_earliest():
    pos = cycles(9)
    e = int(pos[8])
    trio = [e, e + SYS - 100, e + SYS + 100]
    noisy = np.sort(np.concatenate([np.delete(pos, [8, 9]), trio]))
    out = verify_correct_classify(int(pos[-1]) + 2000, noisy, _est(SYS), anchor_at(pos, 1), ETA)
    check_structure(out)
    (d,) = [s for s in out.steps if s.scenario == "D"]
    assert d.candidates == tuple(trio)
    assert (d.s1, d.s2) == (trio[0], trio[1])


def test_insertions_are_beta_apart():
    pos = cycles(12, jitter=[50, -50] * 6)
    holed = np.delete(pos, [5, 12, 13, 18])
    out = verify_correct_classify(int(pos[-1]) + 2000, holed, _est(SYS), anchor_at(pos, 3), ETA)
    check_structure(out)
    for s in out.steps:
        if s.scenario == "B":
            assert s.s2 - s.s1 == SYS
    assert out.scenario_counts["A"] >= 1 and out.scenario_counts["B"] >= 1


def test_hr_tracks_corrected_positions():
    pos = cycles(6, jitter=[0, 120, -120, 40, 0])
    out = verify_correct_classify(int(pos[-1]) + 2000, pos, _est(SYS), anchor_at(pos, 0), ETA)
    s1 = out.positions[0::2]
    assert out.hr_trace == list(np.diff(s1))


def test_sweep_stops_at_edges():
    pos = cycles(5)
    n = int(pos[-1]) + 10
    out = verify_correct_classify(n, pos, _est(SYS), anchor_at(pos, 1), ETA)
    assert out.positions.max() < n and out.positions.min() >= 0
    np.testing.assert_array_equal(out.positions, pos)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(4, 14), st.floats(0, 0.5), st.integers(0, 6))
def test_output_always_well_formed(seed, n_cycles, drop_frac, n_spurious):
    rng = np.random.default_rng(seed)
    pos = cycles(n_cycles, jitter=list(rng.integers(-200, 200, n_cycles)))
    k = int(rng.integers(0, n_cycles - 1))
    anchor = anchor_at(pos, k)
    keep = set(pos[2 * k:2 * k + 4].tolist())
    others = [p for p in pos.tolist() if p not in keep and rng.random() >= drop_frac]
    extra = rng.integers(0, int(pos[-1]) + 1000, n_spurious).tolist()
    det = np.array(sorted(set(others) | keep | set(extra)), dtype=np.int64)
    out = verify_correct_classify(int(pos[-1]) + 1500, det, _est(SYS), anchor, ETA)
    check_structure(out)
    for s in out.steps:
        if s.scenario == "B" and s.s1 is not None and s.s2 is not None:
            assert s.s2 - s.s1 == SYS


def test_deterministic():
    pos = cycles(9, jitter=[30, -60, 90, 0, 10, -10, 0, 5])
    a = verify_correct_classify(40000, pos, _est(SYS), anchor_at(pos, 2), ETA)
    b = verify_correct_classify(40000, pos, _est(SYS), anchor_at(pos, 2), ETA)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert a.steps == b.steps


def test_negative_eta():
    pos = cycles(4)
    with pytest.raises(ParamError):
        verify_correct_classify(20000, pos, _est(SYS), anchor_at(pos, 0), -1)
