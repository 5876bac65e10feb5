"""Independent reference implementations shared by the unit and acceptance tests."""
from fractions import Fraction

import numpy as np


def exact_gini(counts):
    n = sum(counts)
    return 1 - sum(Fraction(c, n) ** 2 for c in counts)


def brute_root_split(X, y, msl=1):
    """Exhaustive search in exact rational arithmetic; ties -> lowest feature, then threshold."""
    n, d = X.shape
    if len(set(y.tolist())) < 2:
        return None
    best = None
    for f in range(d):
        values = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = [int(c) for c, v in zip(y, X[:, f]) if v <= thr]
            right = [int(c) for c, v in zip(y, X[:, f]) if v > thr]
            if len(left) < msl or len(right) < msl:
                continue
            lc = [left.count(0), left.count(1)]
            rc = [right.count(0), right.count(1)]
            score = Fraction(len(left), n) * exact_gini(lc) + Fraction(len(right), n) * exact_gini(rc)
            if best is None or score < best[0]:
                best = (score, f, thr)
    return None if best is None else (best[1], best[2])


def random_dataset(rng):
    n = int(rng.integers(2, 51))
    d = int(rng.integers(1, 5))
    if rng.random() < 0.5:
        X = rng.integers(0, 4, size=(n, d)).astype(float)   # many duplicate values and ties
    else:
        X = np.round(rng.normal(size=(n, d)), 2)
    y = rng.integers(0, 2, size=n)
    return X, y
