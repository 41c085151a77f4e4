"""Oracle suites: greedy vs exhaustive, submodular chains, lazy vs eager."""

from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    check_submodular,
    exhaustive_opt,
    exhaustive_opt_fused,
    greedy_select,
    greedy_select_fused,
    lazy_greedy_select,
    lazy_greedy_select_fused,
)
from .core import Role, SimKind, TokenMatrix
from .similarity import build_tv, build_vv, calibrate
from .core import normalize

GREEDY_BOUND = 1.0 - 1.0 / np.e  # ~0.6321


def random_calibrated_pair(rng, m, n, dim=8, tau_t=0.02, tau_v=0.2):
    """Seeded random instance: calibrated TV and VV matrices sharing n sources."""
    def unit(rows, role):
        data = rng.standard_normal((rows, dim), dtype=np.float32)
        return normalize(TokenMatrix.from_array(data, role))

    text = unit(m, Role.TEXT_QUERY)
    vpost = unit(n, Role.VISION_POST)
    vpre = unit(n, Role.VISION_PRE)
    M_tv = calibrate(build_tv(text, vpost), tau_t)
    M_vv = calibrate(build_vv(vpre), tau_v)
    return M_tv, M_vv


@dataclass
class RatioReport:
    trials: int
    min_ratio: float = np.inf
    violations: int = 0

    @property
    def ok(self):
        return self.violations == 0


def greedy_ratio_suite(trials, seed, max_n=12, max_k=4, fused=False,
                       alpha=0.5, selector=None):
    """Compare greedy values against the exhaustive optimum on random instances."""
    rng = np.random.default_rng(seed)
    report = RatioReport(trials=trials)
    for _ in range(trials):
        m = int(rng.integers(1, max_n + 1))
        n = int(rng.integers(2, max_n + 1))
        k = int(rng.integers(1, min(max_k, n) + 1))
        M_tv, M_vv = random_calibrated_pair(rng, m, n)
        if fused:
            res = (selector or greedy_select_fused)(M_tv, M_vv, alpha, k)
            val = res.objective_tv + alpha * res.objective_vv
            _, opt = exhaustive_opt_fused(M_tv, M_vv, alpha, k)
        else:
            res = (selector or greedy_select)(M_tv, k)
            val = res.objective_tv
            _, opt = exhaustive_opt(M_tv, k)
        ratio = val / opt if opt > 0 else 1.0
        report.min_ratio = min(report.min_ratio, ratio)
        if val < GREEDY_BOUND * opt - 1e-12:
            report.violations += 1
    return report


@dataclass
class EquivalenceReport:
    trials: int
    index_mismatches: int = 0
    value_mismatches: int = 0
    fewer_eval_count: int = 0

    @property
    def fewer_eval_fraction(self):
        return self.fewer_eval_count / self.trials if self.trials else 0.0

    @property
    def ok(self):
        return self.index_mismatches == 0 and self.value_mismatches == 0


def lazy_equivalence_suite(trials, seed, max_n=64, max_k=8, fused=True,
                           alpha=0.5, lazy_fn=None):
    """Check lazy greedy returns eager's exact index sequence with fewer evals."""
    rng = np.random.default_rng(seed)
    report = EquivalenceReport(trials=trials)
    for _ in range(trials):
        m = int(rng.integers(1, max(2, max_n // 4) + 1))
        n = int(rng.integers(2, max_n + 1))
        k = int(rng.integers(1, min(max_k, n) + 1))
        M_tv, M_vv = random_calibrated_pair(rng, m, n)
        if fused:
            eager = greedy_select_fused(M_tv, M_vv, alpha, k)
            lazy = (lazy_fn or lazy_greedy_select_fused)(M_tv, M_vv, alpha, k)
        else:
            eager = greedy_select(M_tv, k)
            lazy = (lazy_fn or lazy_greedy_select)(M_tv, k)
        if eager.selected != lazy.selected:
            report.index_mismatches += 1
        if abs(eager.objective_fused - lazy.objective_fused) > 1e-9:
            report.value_mismatches += 1
        if lazy.gain_evaluations < eager.gain_evaluations:
            report.fewer_eval_count += 1
    return report


def submodularity_suite(chains, seed, m=8, n=10, alpha=0.5):
    """Random-chain submodularity and monotonicity checks, single and fused."""
    rng = np.random.default_rng(seed)
    M_tv, M_vv = random_calibrated_pair(rng, m, n)
    half = chains // 2
    single = check_submodular(M_tv, half, seed=int(rng.integers(2**31)))
    fused = check_submodular(M_tv, chains - half, seed=int(rng.integers(2**31)),
                             M_vv=M_vv, alpha=alpha)
    return single, fused


def run_verify(trials=200, seed=0, max_n=12, max_k=4, chains=10_000,
               out=print):
    """Full verification run; returns a process exit code."""
    single = greedy_ratio_suite(trials, seed, max_n, max_k, fused=False)
    fused = greedy_ratio_suite(trials, seed + 1, max_n, max_k, fused=True)
    equiv = lazy_equivalence_suite(100, seed + 2)
    sub_single, sub_fused = submodularity_suite(chains, seed + 3)

    ok = (single.ok and fused.ok and equiv.ok
          and sub_single.ok and sub_fused.ok)
    out(f"greedy-vs-opt (single): trials={single.trials} "
        f"min_ratio={single.min_ratio:.6f} violations={single.violations}")
    out(f"greedy-vs-opt (fused):  trials={fused.trials} "
        f"min_ratio={fused.min_ratio:.6f} violations={fused.violations}")
    out(f"lazy-vs-eager: trials={equiv.trials} "
        f"index_mismatches={equiv.index_mismatches} "
        f"fewer_evals={equiv.fewer_eval_fraction:.0%}")
    out(f"submodularity (single): chains={sub_single.trials} "
        f"violations={sub_single.submodular_violations} "
        f"monotone_violations={sub_single.monotone_violations}")
    out(f"submodularity (fused):  chains={sub_fused.trials} "
        f"violations={sub_fused.submodular_violations} "
        f"monotone_violations={sub_fused.monotone_violations}")
    out("PASS" if ok else "FAIL")
    return 0 if ok else 1
