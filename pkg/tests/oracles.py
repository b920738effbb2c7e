"""Slow, definition-following reference implementations used as test oracles.

Plain Python loops and the math module only, written from the definitions
rather than from the vectorized code they check.
"""
from __future__ import annotations

import math
from collections import Counter


def coarse_grain(s, scale, shift=1):
    out = []
    start = shift - 1
    while start + scale <= len(s):
        block = s[start:start + scale]
        out.append(sum(block) / scale)
        start += scale
    return out


def core_points(s):
    maxima, minima = [], []
    for i in range(1, len(s) - 1):
        if s[i - 1] < s[i] > s[i + 1]:
            maxima.append(i)
        elif s[i - 1] > s[i] < s[i + 1]:
            minima.append(i)
    return maxima, minima


def interval_lists(s):
    """Intervals for min->max, min->min, max->max, max->min."""
    maxima, minima = core_points(s)

    def chain(points):
        return [b - a for a, b in zip(points, points[1:])]

    def to_next(src, dst):
        out = []
        for a in src:
            later = [b for b in dst if b > a]
            if later:
                out.append(later[0] - a)
        return out

    return [to_next(minima, maxima), chain(minima), chain(maxima), to_next(maxima, minima)]


def shannon(freqs, base):
    h = 0.0
    for f in freqs:
        if f > 0:
            h -= f * math.log(f, base)
    return h


def relative_frequencies(values):
    c = Counter(values)
    n = len(values)
    return {k: v / n for k, v in c.items()}


def pooled_entropy(per_shift, base):
    """Average relative-frequency dicts over the shifts that have data."""
    dists = [d for d in per_shift if d]
    if not dists:
        return 0.0
    keys = set().union(*dists)
    avg = {k: sum(d.get(k, 0.0) for d in dists) / len(dists) for k in keys}
    return shannon(avg.values(), base)


def rcmate(s, scale):
    shifted = [coarse_grain(list(s), scale, w) for w in range(1, scale + 1)]
    per_strategy = [[], [], [], []]
    for row in shifted:
        for k, iv in enumerate(interval_lists(row)):
            per_strategy[k].append(relative_frequencies(iv) if iv else {})
    return sum(pooled_entropy(d, 2) for d in per_strategy) / 4


def attention_entropy(s):
    return rcmate(s, 1)


def normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2))


def dispersion_classes(s, c, mu=None, sigma=None):
    n = len(s)
    if mu is None:
        mu = sum(s) / n
        sigma = math.sqrt(sum((v - mu) ** 2 for v in s) / n)
    if sigma == 0:
        return [(c + 1) // 2] * n
    out = []
    for v in s:
        y = normal_cdf((v - mu) / sigma)
        k = math.floor(c * y + 0.5 + 0.5)  # round(c*y + 0.5), halves up
        out.append(min(max(k, 1), c))
    return out


def fluctuation_patterns(classes, m, d):
    pats = []
    for i in range(len(classes) - (m - 1) * d):
        vec = [classes[i + j * d] for j in range(m)]
        pats.append(tuple(b - a for a, b in zip(vec, vec[1:])))
    return pats


def rcmfde(s, m=2, c=5, d=1, scale=1, original_norm=False):
    s = list(s)
    mu = sigma = None
    if original_norm:
        mu = sum(s) / len(s)
        sigma = math.sqrt(sum((v - mu) ** 2 for v in s) / len(s))
    per_shift = []
    for w in range(1, scale + 1):
        row = coarse_grain(s, scale, w)
        per_shift.append(relative_frequencies(fluctuation_patterns(dispersion_classes(row, c, mu, sigma), m, d)))
    return pooled_entropy(per_shift, math.e)


def fde(s, m=2, c=5, d=1):
    return rcmfde(s, m, c, d, 1)


def monotonicity(f):
    n = len(f)
    up = down = total = 0
    for i in range(n):
        for j in range(i + 1, n):
            total += 1
            up += f[j] >= f[i]
            down += f[j] <= f[i]
    return max(up, down) / total


def pearson_abs(f):
    n = len(f)
    t = list(range(1, n + 1))
    mt, mf = sum(t) / n, sum(f) / n
    cov = sum((a - mt) * (b - mf) for a, b in zip(t, f))
    vt = sum((a - mt) ** 2 for a in t)
    vf = sum((b - mf) ** 2 for b in f)
    return abs(cov / math.sqrt(vt * vf))


def robustness(f):
    n = len(f)
    med = f[math.ceil(n / 2) - 1]
    return sum(math.exp(-abs((v - med) / v)) for v in f) / n
