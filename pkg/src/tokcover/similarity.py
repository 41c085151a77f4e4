"""Similarity construction, calibration, word pooling, and temperature adaptation."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Role, SimKind, SimilarityMatrix, TokenMatrix, normalize
from .errors import (
    BadSpansError,
    DimMismatchError,
    NonPositiveTauError,
    NotBracketedWarning,
    NotMonotoneError,
)


@dataclass(frozen=True)
class WordSpans:
    """Half-open (start, end) token ranges, one per word, covering [0, m)."""

    spans: tuple

    @classmethod
    def from_pairs(cls, pairs):
        return cls(tuple((int(s), int(e)) for s, e in pairs))

    def validate(self, rows):
        if not self.spans:
            raise BadSpansError("spans must be non-empty")
        if self.spans[0][0] != 0:
            raise BadSpansError("first span must start at 0")
        prev_end = 0
        for s, e in self.spans:
            if s != prev_end:
                raise BadSpansError(f"span ({s},{e}) does not start at {prev_end}")
            if e <= s:
                raise BadSpansError(f"span ({s},{e}) is empty or reversed")
            prev_end = e
        if prev_end != rows:
            raise BadSpansError(f"spans cover [0,{prev_end}) but matrix has {rows} rows")

    def __len__(self):
        return len(self.spans)


def build_tv(text, vision_post):
    """Text-vision inner-product similarity (targets: text rows)."""
    if text.dim != vision_post.dim:
        raise DimMismatchError(
            f"text dim {text.dim} != vision dim {vision_post.dim}")
    data = _kernels.active.pairwise_inner(text.data, vision_post.data)
    return SimilarityMatrix.from_array(data, SimKind.RAW_TV)


def build_vv(vision_pre):
    """Vision-vision inner-product similarity (symmetric, unit diagonal)."""
    data = _kernels.active.pairwise_inner(vision_pre.data, vision_pre.data)
    return SimilarityMatrix.from_array(data, SimKind.RAW_VV)


def calibrate(M, tau):
    """Row-wise softmax at temperature ``tau``; each row becomes a distribution."""
    if tau <= 0:
        raise NonPositiveTauError(f"tau must be positive, got {tau}")
    if M.kind.calibrated:
        raise ValueError("matrix is already calibrated")
    out = _kernels.active.softmax_rows(M.data, float(tau))
    kind = SimKind.CAL_TV if M.kind is SimKind.RAW_TV else SimKind.CAL_VV
    return SimilarityMatrix.from_array(out, kind, temperature=float(tau))


def concat_agent(text, agent):
    """Append agent-answer rows after the query rows, order preserved."""
    if text.dim != agent.dim:
        raise DimMismatchError(
            f"text dim {text.dim} != agent dim {agent.dim}")
    if agent.rows == 0:
        return text
    data = np.concatenate([text.data, agent.data], axis=0)
    return TokenMatrix.from_array(data, Role.TEXT_QUERY)


def pool_pre(text, spans, method):
    """Pool subword token rows into one row per word, then re-normalize.

    ``first`` copies each span's first row verbatim: the input rows are
    already unit-norm, so skipping the renormalization keeps pre-first
    pooling bit-identical to post-first pooling.
    """
    spans.validate(text.rows)
    rows = []
    for s, e in spans.spans:
        block = text.data[s:e]
        if method == "mean":
            rows.append(block.mean(axis=0, dtype=np.float64))
        elif method == "max":
            rows.append(block.max(axis=0))
        elif method == "first":
            rows.append(block[0])
        else:
            raise ValueError(f"unknown pooling method {method!r}")
    pooled = TokenMatrix.from_array(np.stack(rows), text.role)
    if method == "first":
        return pooled
    return normalize(pooled)


def pool_post(M, spans, method):
    """Pool similarity target rows into one row per word (no re-normalization)."""
    spans.validate(M.targets)
    rows = []
    for s, e in spans.spans:
        block = M.data[s:e]
        if method == "mean":
            rows.append(block.mean(axis=0))
        elif method == "max":
            rows.append(block.max(axis=0))
        elif method == "first":
            rows.append(block[0])
        else:
            raise ValueError(f"unknown pooling method {method!r}")
    return SimilarityMatrix.from_array(np.stack(rows), M.kind, M.temperature)


def full_set_coverage(M):
    """Coverage of the full source set: mean over targets of the row max."""
    if M.targets == 0:
        return 0.0
    return float(M.data.max(axis=1).mean())


def _kth_largest_coverage(data, k):
    # Mean over rows of the k-th largest entry (k=1 is the row max).
    if k > data.shape[1]:
        raise ValueError(f"k={k} exceeds the {data.shape[1]} columns")
    kth = np.partition(data, data.shape[1] - k, axis=1)[:, data.shape[1] - k]
    return float(kth.mean())


def adapt_tau_bisection(M_tv_cal, M_vv_raw, lo, hi, tol=1e-4):
    """Find the visual temperature equating full-set TV and VV coverage.

    The calibrated VV coverage is monotone decreasing in tau for the
    default objective; this is verified at the endpoints.  When the gap
    does not change sign on [lo, hi], the endpoint with the smaller
    absolute gap is returned and a NotBracketedWarning is emitted.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    target = full_set_coverage(M_tv_cal)

    def gap(tau):
        cal = _kernels.active.softmax_rows(M_vv_raw.data, tau)
        return target - float(cal.max(axis=1).mean())

    g_lo = gap(lo)
    g_hi = gap(hi)
    # gap(tau) = f_tv - f_vv(tau) must be non-decreasing (f_vv decreasing).
    if g_lo > g_hi + 1e-12:
        raise NotMonotoneError(
            f"gap decreases on [{lo}, {hi}]: {g_lo:.6g} -> {g_hi:.6g}")
    if abs(g_lo) <= tol:
        return float(lo)
    if abs(g_hi) <= tol:
        return float(hi)
    if g_lo * g_hi > 0:
        best = lo if abs(g_lo) < abs(g_hi) else hi
        warnings.warn(
            f"coverage gap has the same sign at both endpoints; "
            f"returning tau={best}", NotBracketedWarning)
        return float(best)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid) <= tol:
            return float(mid)
        if g_lo * g_mid < 0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return float(0.5 * (lo + hi))


def adapt_tau_grid_kth(M_tv_cal, M_vv_raw, k, grid):
    """Pick the grid temperature minimizing the k-th-largest coverage gap.

    k >= 2 skips the unit diagonal of the vision-vision matrix; ties
    break toward the smaller temperature.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if not grid:
        raise ValueError("grid must be non-empty")
    target = full_set_coverage(M_tv_cal)
    best_tau = None
    best_gap = np.inf
    for tau in grid:
        cal = _kernels.active.softmax_rows(M_vv_raw.data, float(tau))
        g = abs(target - _kth_largest_coverage(cal, k))
        if g < best_gap:
            best_gap = g
            best_tau = float(tau)
    return best_tau
