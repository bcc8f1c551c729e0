import numpy as np


def dominant_hz(x, fs, n_fft=4096):
    spec = np.abs(np.fft.rfft(x[:n_fft] * np.hanning(min(n_fft, x.size)), n=n_fft))
    return np.argmax(spec) * fs / n_fft


def kl_oracle(mag):
    """Generalised KL between every pair of columns, as a plain double loop."""
    import math
    F, T = mag.shape
    out = np.zeros((T, T))
    for i in range(T):
        for j in range(T):
            if i == j:
                continue
            s = 0.0
            for f in range(F):
                u, v = mag[f, i], mag[f, j]
                s += u * math.log(u / v) - u + v
            out[i, j] = max(s, 0.0)
    return out


def trapz_oracle(row):
    return sum((row[k] + row[k + 1]) / 2 for k in range(len(row) - 1))


def hist_oracle(zetas, H):
    """Centre of the fullest of H equal bins over [min, max], lower bin on ties.

    Values are sorted and walked through exact rational bin edges.
    """
    from fractions import Fraction
    z = sorted(int(v) for v in zetas)
    lo, hi = z[0], z[-1]
    if lo == hi:
        return Fraction(lo)
    w = Fraction(hi - lo, H)
    counts = [0] * H
    k = 0
    for v in z:
        while k < H - 1 and v >= lo + (k + 1) * w:
            k += 1
        counts[k] += 1
    best = max(range(H), key=lambda i: (counts[i], -i))
    return lo + (best + Fraction(1, 2)) * w


# -- sweep fixtures ----------------------------------------------------------

SYS, DIA = 1200, 2100
CYCLE = SYS + DIA
ETA = 655


def cycles(n=9, start=1000, jitter=None):
    """Perfect S1/S2 positions; optional per-cycle diastole offsets."""
    jitter = jitter if jitter is not None else [0] * n
    s1 = start + np.concatenate([[0], np.cumsum([CYCLE + j for j in jitter[:n - 1]])])
    return np.ravel(np.column_stack([s1, s1 + SYS])).astype(np.int64)


def anchor_at(pos, k):
    """Anchor on cycles k and k+1 of a perfect S1/S2 sequence."""
    from pulsecut.fine import CycleAnchor
    c = [int(v) for v in pos[2 * k:2 * k + 4]]
    return CycleAnchor(c[0], c[1], c[2], c[3], c[2] - c[0], 2 * k)


def fixed_beta(beta):
    from pulsecut.fine import SystoleEstimate
    return SystoleEstimate(float(beta), np.array([]), np.array([]), np.array([]))


def well_formed(out):
    return (bool(np.all(np.diff(out.positions) > 0))
            and all(a != b for a, b in zip(out.labels, out.labels[1:]))
            and sum(out.scenario_counts.values()) == len(out.steps))


# -- acceptance report -------------------------------------------------------

REPORT = {}


def record(criterion, ok, detail):
    REPORT[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
