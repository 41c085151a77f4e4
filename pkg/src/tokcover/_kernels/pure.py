"""Pure-NumPy fallback for the hot kernels.

Semantics match the compiled extension: float32 inputs, float64
accumulation, lowest-index tie-breaking, and identical eager/lazy
gain arithmetic within this backend.
"""

import numpy as np

NAME = "pure"


def pairwise_inner(a, b):
    """Inner products of every row of ``a`` with every row of ``b`` (float64)."""
    return a.astype(np.float64) @ b.astype(np.float64).T


def softmax_rows(m, tau):
    """Row-wise softmax at temperature ``tau``, stabilized by the row max."""
    z = (m - m.max(axis=1, keepdims=True)) / tau
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _marginal(mats, bests, j, cur):
    # Total objective after adding column j, minus the current value.
    tot = 0.0
    for (m, w), best in zip(mats, bests):
        if m.shape[0]:
            tot += w * float(np.maximum(best, m[:, j]).mean())
    return tot - cur


def greedy(m1, w1, m2, w2, k, lazy):
    """Greedy (or lazy-greedy) maximization of the weighted coverage sum.

    Returns (selected int64 array, gains float64 array, value1, value2,
    gain_evaluations).  ``m2`` may be None for the single-matrix case.
    """
    mats = [(m1, w1)]
    if m2 is not None:
        if m2.shape[1] != m1.shape[1]:
            raise ValueError("matrices must share their source count")
        mats.append((m2, w2))
    n = m1.shape[1]
    kk = min(int(k), n)
    # -inf sentinel so the first selected column defines each row's max,
    # which keeps raw (possibly negative) similarities correct.
    bests = [np.full(m.shape[0], -np.inf) for m, _ in mats]
    taken = np.zeros(n, dtype=bool)
    selected = np.empty(kk, dtype=np.int64)
    gains = np.empty(kk, dtype=np.float64)
    cur = 0.0
    evals = 0

    if lazy:
        ub = np.full(n, np.inf)
        fresh = np.zeros(n, dtype=bool)
        for step in range(kk):
            fresh[:] = False
            while True:
                masked = np.where(taken, -np.inf, ub)
                j = int(np.argmax(masked))
                if fresh[j]:
                    break
                ub[j] = _marginal(mats, bests, j, cur)
                fresh[j] = True
                evals += 1
            g = float(ub[j])
            selected[step] = j
            gains[step] = g
            cur += g
            taken[j] = True
            for (m, _), best in zip(mats, bests):
                if m.shape[0]:
                    np.maximum(best, m[:, j], out=best)
    else:
        for step in range(kk):
            best_g = -np.inf
            best_j = -1
            for j in range(n):
                if taken[j]:
                    continue
                g = _marginal(mats, bests, j, cur)
                evals += 1
                if g > best_g:
                    best_g = g
                    best_j = j
            selected[step] = best_j
            gains[step] = best_g
            cur += best_g
            taken[best_j] = True
            for (m, _), best in zip(mats, bests):
                if m.shape[0]:
                    np.maximum(best, m[:, best_j], out=best)

    def final_value(idx):
        m, _ = mats[idx]
        if m.shape[0] == 0 or kk == 0:
            return 0.0
        return float(bests[idx].mean())

    v1 = final_value(0)
    v2 = final_value(1) if m2 is not None else 0.0
    return selected, gains, v1, v2, evals
