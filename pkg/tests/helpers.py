"""Shared helpers for the test suite."""

import numpy as np

from tokcover.core import Role, SimilarityMatrix, SimKind, TokenMatrix, normalize


def unit_matrix(rng, rows, dim, role=Role.TEXT_QUERY):
    data = rng.standard_normal((rows, dim), dtype=np.float32)
    return normalize(TokenMatrix.from_array(data, role))


def random_raw_tv(rng, m, n):
    # Raw-kind matrix with arbitrary entries in [-1, 1].
    data = rng.uniform(-1.0, 1.0, size=(m, n))
    return SimilarityMatrix.from_array(data, SimKind.RAW_TV)


def random_calibrated(rng, m, n, tau=0.1, kind=SimKind.CAL_TV):
    from tokcover._kernels import active

    raw = rng.uniform(-1.0, 1.0, size=(m, n))
    data = active.softmax_rows(raw, tau)
    return SimilarityMatrix.from_array(data, kind, temperature=tau)


def naive_coverage(S, data):
    # Independent two-loop oracle for f(S; M).
    if not S:
        return 0.0
    m = data.shape[0]
    total = 0.0
    for i in range(m):
        best = max(data[i, j] for j in S)
        total += best
    return total / m
