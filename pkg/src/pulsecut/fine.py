"""Fine beat detection: sample-level refinement, systole estimation and the
sliding-window verification / correction / classification sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, InternalError, NoAnchorError, ParamError
from .spectral import StftParams

SCENARIOS = ("A", "B", "C", "D")


@dataclass(eq=False)
class SystoleEstimate:
    """Most repeated inter-beat distance, read off an ``H``-bin histogram.

    ``beta`` is the centre of the fullest bin (float samples); corrections
    use the nearest whole sample, ``beta_samples``.
    """

    beta: float
    edges: np.ndarray
    counts: np.ndarray
    zetas: np.ndarray

    @property
    def beta_samples(self) -> int:
        return int(math.floor(self.beta + 0.5))


@dataclass(frozen=True)
class CycleAnchor:
    c1_start: int
    c1_end: int
    c2_start: int
    c2_end: int
    hr_init: int
    index: int  # position of the first anchor systole within the distance vector


@dataclass(frozen=True)
class Step:
    """One window shift of the sweep."""

    direction: str  # "right" or "left"
    scenario: str
    window: tuple[int, int]
    candidates: tuple[int, ...]
    s1: int | None
    s2: int | None
    inserted: tuple[bool, bool]  # whether s1 / s2 were synthesised rather than detected
    hr: int


@dataclass(eq=False)
class LabeledBeats:
    positions: np.ndarray
    labels: list[str]
    hr_trace: list[int] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)

    def __len__(self):
        return self.positions.size

    @property
    def scenario_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(SCENARIOS, 0)
        for s in self.steps:
            counts[s.scenario] += 1
        return counts

    def longest_a_run(self) -> int:
        best = run = 0
        last_dir = None
        for s in self.steps:
            if s.scenario == "A" and s.direction == last_dir:
                run += 1
            elif s.scenario == "A":
                run = 1
            else:
                run = 0
            last_dir = s.direction
            best = max(best, run)
        return best


# -- step I: sample-level beats and systole length --------------------------

def refine_to_samples(x: np.ndarray, frames: np.ndarray, p: StftParams) -> np.ndarray:
    """Move each beat frame to the largest-magnitude sample inside it.

    Frame ``lam`` covers samples ``[lam*hop, lam*hop + window_len)``, clipped
    at the end of the signal.  Ties go to the earliest sample.
    """
    x = np.asarray(x)
    n = x.size
    out = []
    for lam in np.asarray(frames, dtype=np.int64):
        start = p.frame_start(int(lam))
        if lam < 0 or start >= n:
            raise ParamError(f"frame {lam} lies outside a {n}-sample signal")
        seg = np.abs(x[start:min(start + p.window_len, n)])
        out.append(start + int(np.argmax(seg)))
    return np.unique(np.array(out, dtype=np.int64))


def beat_distances(deltas: np.ndarray) -> np.ndarray:
    deltas = np.asarray(deltas, dtype=np.int64)
    if deltas.size < 2:
        raise DegenerateError("need at least 2 beats")
    z = np.diff(deltas)
    if np.any(z <= 0):
        raise ParamError("beat positions must be strictly increasing")
    return z


def estimate_systole(zetas: np.ndarray, n_bins: int = 20) -> SystoleEstimate:
    """Systole length as the centre of the fullest of ``n_bins`` equal bins
    spanning ``[min, max]`` of the distances.  On a tie the shorter bin wins."""
    if not 5 <= n_bins <= 50:
        raise ParamError(f"histogram bin count must lie in [5, 50], got {n_bins}")
    z = np.asarray(zetas)
    if z.size < 3:
        raise DegenerateError("need at least 3 distances to estimate the systole")
    lo, hi = z.min(), z.max()
    if lo == hi:
        return SystoleEstimate(float(lo), np.array([lo, hi], dtype=float), np.array([z.size]), z)
    # bin k holds lo + k*w <= v < lo + (k+1)*w, the last bin also holds hi;
    # integer distances are binned exactly rather than against rounded edges
    if np.issubdtype(z.dtype, np.integer):
        z = z.astype(np.int64)
        idx = (z - lo) * n_bins // (hi - lo)
    else:
        z = z.astype(np.float64)
        idx = np.floor((z - lo) * n_bins / (hi - lo)).astype(np.int64)
    idx = np.minimum(idx, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    k = int(np.argmax(counts))
    width = (float(hi) - float(lo)) / n_bins
    edges = float(lo) + width * np.arange(n_bins + 1)
    return SystoleEstimate(float(lo) + (k + 0.5) * width, edges, counts, z)


def find_anchor_cycles(deltas: np.ndarray, est: SystoleEstimate) -> CycleAnchor:
    """Locate two consecutive cardiac cycles to start the sweep from.

    The half of the distances closest to ``beta`` are systole candidates.
    They are visited from the closest outwards; the first candidate
    ``z[i]`` whose over-next distance ``z[i+2]`` is also a candidate while
    ``z[i+1]`` is not (a diastole in between) anchors the sweep.
    """
    deltas = np.asarray(deltas, dtype=np.int64)
    if deltas.size < 4:
        raise NoAnchorError(f"need at least 4 beats, got {deltas.size}")
    z = beat_distances(deltas)
    half = math.ceil(z.size / 2)
    order = np.argsort(np.abs(z - est.beta), kind="stable")[:half]
    systolic = np.zeros(z.size, dtype=bool)
    systolic[order] = True
    for i in order.tolist():
        if i + 2 < z.size and systolic[i + 2] and not systolic[i + 1]:
            return CycleAnchor(int(deltas[i]), int(deltas[i + 1]),
                               int(deltas[i + 2]), int(deltas[i + 3]),
                               int(deltas[i + 2] - deltas[i]), i)
    raise NoAnchorError("no two systoles separated by a diastole")


# -- step II: sliding window -----------------------------------------------

class _Pool:
    """Detected beats not yet claimed by any window."""

    def __init__(self, deltas):
        self.deltas = np.asarray(deltas, dtype=np.int64)
        self.free = np.ones(self.deltas.size, dtype=bool)

    def take(self, lo, hi):
        a = np.searchsorted(self.deltas, lo, side="left")
        b = np.searchsorted(self.deltas, hi, side="right")
        idx = [k for k in range(a, b) if self.free[k]]
        self.free[idx] = False
        return [int(self.deltas[k]) for k in idx]

    def claim(self, *positions):
        for pos in positions:
            k = np.searchsorted(self.deltas, pos)
            if k < self.deltas.size and self.deltas[k] == pos:
                self.free[k] = False


def _closest_pair(cands, beta):
    best = None
    for a in range(len(cands)):
        for b in range(a + 1, len(cands)):
            err = abs((cands[b] - cands[a]) - beta)
            if best is None or err < best[0]:
                best = (err, cands[a], cands[b])
    return best[1], best[2]


def _sweep(pool, n, prev_s1, prev_s2, hr, beta, eta, forward):
    """Walk away from one anchor cycle; return the steps taken."""
    steps = []
    while True:
        e = prev_s1 + hr if forward else prev_s1 - hr
        lo, hi = e - eta, e + beta + eta
        if (forward and lo >= n) or (not forward and hi < 0):
            break
        # never reach back over the neighbouring cycle
        lo_c = max(lo, prev_s2 + 1) if forward else lo
        hi_c = hi if forward else min(hi, prev_s1 - 1)
        inside = lo >= 0 and hi < n
        cands = pool.take(lo_c, hi_c)
        ins = (False, False)
        if not cands:
            if not inside:
                break
            scenario = "A"
            h = max(hr, prev_s2 - prev_s1 + 1)
            step = h if forward else -h
            s1, s2 = prev_s1 + step, prev_s2 + step
            ins = (True, True)
        elif len(cands) == 1:
            scenario = "B"
            c = cands[0]
            d_lo, d_hi = c - lo, hi - c
            as_s1 = d_lo <= d_hi
            # a partner that would cross the neighbouring cycle flips the reading
            if as_s1 and not forward and c + beta >= prev_s1:
                as_s1 = False
            elif not as_s1 and forward and c - beta <= prev_s2:
                as_s1 = True
            if as_s1:
                s1, s2, ins = c, c + beta, (False, True)
            else:
                s1, s2, ins = c - beta, c, (True, False)
        elif len(cands) == 2:
            scenario = "C"
            s1, s2 = cands
        else:
            scenario = "D"
            s1, s2 = _closest_pair(cands, beta)

        keep1, keep2 = 0 <= s1 < n, 0 <= s2 < n
        new_hr = (s1 - prev_s1) if forward else (prev_s1 - s1)
        steps.append(Step("right" if forward else "left", scenario, (lo, hi),
                          tuple(cands), s1 if keep1 else None,
                          s2 if keep2 else None, ins, new_hr))
        if not (keep1 and keep2):
            break
        prev_s1, prev_s2, hr = s1, s2, new_hr
    return steps


def verify_correct_classify(n_samples: int, deltas: np.ndarray, est: SystoleEstimate,
                            anchor: CycleAnchor, eta: int) -> LabeledBeats:
    """Sweep cycle-sized windows right from the second anchor cycle and left
    from the first, fixing each cycle to exactly one S1 and one S2.

    The window for the next cycle spans ``[e - eta, e + beta + eta]`` where
    ``e`` is the previous S1 shifted by the current cycle length ``hr``.
    The number of unclaimed detections inside decides the scenario:

    * A (none): insert S1/S2 one cycle length from the neighbour's pair;
    * B (one): closer to the lower edge means S1, partner inserted at
      ``+beta``; otherwise S2 with S1 at ``-beta``;
    * C (two): accept as S1, S2;
    * D (more): keep the pair whose spacing is closest to ``beta``.

    A window not fully inside the signal never synthesises a whole cycle;
    an empty one there ends the sweep.
    """
    if eta < 0:
        raise ParamError("eta must be non-negative")
    deltas = np.asarray(deltas, dtype=np.int64)
    beta = est.beta_samples
    pool = _Pool(deltas)
    pool.claim(anchor.c1_start, anchor.c1_end, anchor.c2_start, anchor.c2_end)

    right = _sweep(pool, n_samples, anchor.c2_start, anchor.c2_end,
                   anchor.hr_init, beta, eta, forward=True)
    left = _sweep(pool, n_samples, anchor.c1_start, anchor.c1_end,
                  anchor.hr_init, beta, eta, forward=False)

    beats = []
    for s in reversed(left):
        beats += [(s.s1, "S1"), (s.s2, "S2")]
    beats += [(anchor.c1_start, "S1"), (anchor.c1_end, "S2"),
              (anchor.c2_start, "S1"), (anchor.c2_end, "S2")]
    for s in right:
        beats += [(s.s1, "S1"), (s.s2, "S2")]
    beats = [(p, lab) for p, lab in beats if p is not None]

    positions = np.array([p for p, _ in beats], dtype=np.int64)
    labels = [lab for _, lab in beats]
    if np.any(np.diff(positions) <= 0):
        raise InternalError("corrected beats are not strictly increasing")
    if any(a == b for a, b in zip(labels, labels[1:])):
        raise InternalError("corrected labels do not alternate")

    hr_trace = ([s.hr for s in reversed(left)] + [anchor.hr_init]
                + [s.hr for s in right])
    return LabeledBeats(positions, labels, hr_trace, left[::-1] + right)
