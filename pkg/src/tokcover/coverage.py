"""Coverage objective, greedy and lazy-greedy maximizers, exhaustive oracle."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import SelectionResult, SimKind
from .errors import (
    IndexOutOfRangeError,
    InstanceTooLargeError,
    SourceCountMismatchError,
)

EXHAUSTIVE_GUARD = 2_000_000


@dataclass
class CoverState:
    """Per-target running maxima for incremental coverage evaluation."""

    best_per_target: np.ndarray

    @classmethod
    def empty(cls, targets):
        return cls(np.full(targets, -np.inf))

    def add_column(self, column):
        np.maximum(self.best_per_target, column, out=self.best_per_target)

    @property
    def value(self):
        if self.best_per_target.size == 0 or not np.isfinite(self.best_per_target[0]):
            return 0.0
        return float(self.best_per_target.mean())


def _check_indices(S, n):
    for j in S:
        if not 0 <= j < n:
            raise IndexOutOfRangeError(f"index {j} out of range for {n} sources")


def coverage_value(S, M):
    """f(S; M): mean over target rows of the max over selected columns; f(empty)=0."""
    S = list(S)
    if not S:
        return 0.0
    _check_indices(S, M.sources)
    if M.targets == 0:
        return 0.0
    return float(M.data[:, S].max(axis=1).mean())


def fused_value(S, M_tv, M_vv, alpha):
    """Weighted sum of text-vision and vision-vision coverage."""
    if M_tv.sources != M_vv.sources:
        raise SourceCountMismatchError(
            f"{M_tv.sources} != {M_vv.sources} source columns")
    return coverage_value(S, M_tv) + alpha * coverage_value(S, M_vv)


def _result_from_kernel(sel, gains, v1, v2, evals, *, tv_value, vv_value,
                        alpha, tau_v):
    fused = tv_value + alpha * vv_value
    return SelectionResult(
        selected=tuple(int(j) for j in sel),
        gains=tuple(float(g) for g in gains),
        objective_tv=tv_value,
        objective_vv=vv_value,
        objective_fused=fused,
        effective_tau_v=tau_v,
        gain_evaluations=int(evals),
    )


def _single(M, k, lazy):
    kern = _kernels.active
    sel, gains, v1, _, evals = kern.greedy(M.data, 1.0, None, 0.0, int(k), lazy)
    is_vv = M.kind in (SimKind.RAW_VV, SimKind.CAL_VV)
    tau = M.temperature if M.temperature is not None else float("nan")
    fused = v1
    result = SelectionResult(
        selected=tuple(int(j) for j in sel),
        gains=tuple(float(g) for g in gains),
        objective_tv=0.0 if is_vv else v1,
        objective_vv=v1 if is_vv else 0.0,
        objective_fused=fused,
        effective_tau_v=tau,
        gain_evaluations=int(evals),
    )
    return result


def greedy_select(M, k):
    """Eager greedy maximization of f(S; M) under a cardinality budget."""
    return _single(M, k, lazy=False)


def lazy_greedy_select(M, k):
    """Lazy-greedy variant; identical output, fewer gain evaluations."""
    return _single(M, k, lazy=True)


def _fused(M_tv, M_vv, alpha, k, lazy):
    if M_tv.sources != M_vv.sources:
        raise SourceCountMismatchError(
            f"{M_tv.sources} != {M_vv.sources} source columns")
    kern = _kernels.active
    sel, gains, v_tv, v_vv, evals = kern.greedy(
        M_tv.data, 1.0, M_vv.data, float(alpha), int(k), lazy)
    tau = M_vv.temperature if M_vv.temperature is not None else float("nan")
    return _result_from_kernel(sel, gains, v_tv, v_vv, evals,
                               tv_value=v_tv, vv_value=v_vv,
                               alpha=float(alpha), tau_v=tau)


def greedy_select_fused(M_tv, M_vv, alpha, k):
    """Eager greedy on the fused objective f(S;Mtv) + alpha * f(S;Mvv)."""
    return _fused(M_tv, M_vv, alpha, k, lazy=False)


def lazy_greedy_select_fused(M_tv, M_vv, alpha, k):
    return _fused(M_tv, M_vv, alpha, k, lazy=True)


def _exhaustive(value_fn, n, k):
    k = min(k, n)
    if math.comb(n, k) > EXHAUSTIVE_GUARD:
        raise InstanceTooLargeError(
            f"C({n},{k}) exceeds the {EXHAUSTIVE_GUARD} subset guard")
    best_set = None
    best_val = -np.inf
    for S in itertools.combinations(range(n), k):
        v = value_fn(S)
        if v > best_val:  # strict: lexicographically smallest winner kept
            best_val = v
            best_set = S
    if best_set is None:
        return (), 0.0
    return best_set, float(best_val)


def exhaustive_opt(M, k):
    """Exact maximizer over all k-subsets (small instances only)."""
    return _exhaustive(lambda S: coverage_value(S, M), M.sources, k)


def exhaustive_opt_fused(M_tv, M_vv, alpha, k):
    if M_tv.sources != M_vv.sources:
        raise SourceCountMismatchError(
            f"{M_tv.sources} != {M_vv.sources} source columns")
    return _exhaustive(lambda S: fused_value(S, M_tv, M_vv, alpha),
                       M_tv.sources, k)


@dataclass
class SubmodularReport:
    trials: int
    submodular_violations: int = 0
    monotone_violations: int = 0
    max_violation: float = 0.0
    details: list = field(default_factory=list)

    @property
    def ok(self):
        return self.submodular_violations == 0 and self.monotone_violations == 0


def check_submodular(M, trials, seed, M_vv=None, alpha=0.0, slack=1e-9):
    """Sample random chains A subset B and check diminishing returns.

    Also checks monotonicity f(A) <= f(B).  Violations beyond ``slack``
    are reported, not raised.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if M_vv is None:
        value = lambda S: coverage_value(S, M)
    else:
        value = lambda S: fused_value(S, M, M_vv, alpha)
    n = M.sources
    rng = np.random.default_rng(seed)
    report = SubmodularReport(trials=trials)
    for _ in range(trials):
        perm = rng.permutation(n)
        b_size = int(rng.integers(0, n))  # leaves room for s outside B
        a_size = int(rng.integers(0, b_size + 1))
        B = sorted(perm[:b_size].tolist())
        A = sorted(perm[:a_size].tolist())
        s = int(perm[b_size])
        fA = value(A)
        fB = value(B)
        gA = value(A + [s]) - fA
        gB = value(B + [s]) - fB
        if gA < gB - slack:
            report.submodular_violations += 1
            report.max_violation = max(report.max_violation, gB - gA)
            if len(report.details) < 10:
                report.details.append(("submodular", A, B, s, gA, gB))
        if fA > fB + slack:
            report.monotone_violations += 1
            report.max_violation = max(report.max_violation, fA - fB)
            if len(report.details) < 10:
                report.details.append(("monotone", A, B, s, fA, fB))
    return report
