"""End-to-end selection: normalize, pool, enrich, calibrate, greedy select."""

import time
from dataclasses import dataclass

import numpy as np

from .core import (
    CoverageConfig,
    Mode,
    Role,
    SelectionResult,
    TokenMatrix,
    normalize,
)
from .coverage import lazy_greedy_select, lazy_greedy_select_fused
from .errors import BudgetExceedsTokensError, ZeroBaselineError
from .similarity import (
    WordSpans,
    adapt_tau_bisection,
    adapt_tau_grid_kth,
    build_tv,
    build_vv,
    calibrate,
    concat_agent,
    pool_post,
    pool_pre,
)


@dataclass(frozen=True)
class SampleInput:
    """All token matrices (and optional structure) for one sample."""

    vision_pre: TokenMatrix
    vision_post: TokenMatrix
    text: TokenMatrix
    agent_text: TokenMatrix | None = None
    word_spans: WordSpans | None = None
    crop_sizes: tuple | None = None

    def validate(self):
        n = self.vision_pre.rows
        if self.vision_post.rows != n:
            raise ValueError(
                f"vision_pre has {n} rows but vision_post has "
                f"{self.vision_post.rows}")
        if self.text.dim != self.vision_post.dim:
            raise ValueError(
                f"text dim {self.text.dim} != vision_post dim "
                f"{self.vision_post.dim}")
        if self.agent_text is not None and self.agent_text.dim != self.text.dim:
            raise ValueError(
                f"agent dim {self.agent_text.dim} != text dim {self.text.dim}")
        if self.word_spans is not None:
            self.word_spans.validate(self.text.rows)
        if self.crop_sizes is not None:
            if not self.crop_sizes or any(c <= 0 for c in self.crop_sizes):
                raise ValueError("crop sizes must be positive")
            if sum(self.crop_sizes) != n:
                raise ValueError(
                    f"crop sizes sum to {sum(self.crop_sizes)}, expected {n}")

    @property
    def n(self):
        return self.vision_pre.rows


@dataclass(frozen=True)
class BudgetPlan:
    """Global budget apportioned to crops by a fixed ratio."""

    global_budget: int
    ratio: float
    per_crop: tuple

    @property
    def realized(self):
        return sum(self.per_crop)


def plan_budget(crop_sizes, max_budget, max_tokens):
    """Apportion ``max_budget``/``max_tokens`` across crops, floor-rounded.

    Every crop keeps at least one token.
    """
    if not crop_sizes or any(c <= 0 for c in crop_sizes):
        raise ValueError("crop sizes must be non-empty and positive")
    if max_budget > max_tokens:
        raise BudgetExceedsTokensError(
            f"budget {max_budget} exceeds the {max_tokens}-token maximum")
    ratio = max_budget / max_tokens
    # Integer floor of c * budget / tokens, immune to float rounding.
    per_crop = tuple(max(1, min(c, (c * max_budget) // max_tokens))
                     for c in crop_sizes)
    return BudgetPlan(global_budget=int(max_budget), ratio=ratio,
                      per_crop=per_crop)


def ic_metric(perf_all, perf_zero):
    """Relative gain attributable to vision tokens: (all - zero) / zero."""
    if perf_zero <= 0:
        raise ZeroBaselineError(f"zero-token baseline must be positive, got {perf_zero}")
    return (perf_all - perf_zero) / perf_zero


QWEN_PROFILE_TAU_T = 0.01


def _pooling_parts(pooling):
    if pooling == "none":
        return None, None
    stage, method = pooling.split("-", 1)
    return stage, method


def _select_crop(text_mat, spans, pool_stage, pool_method, vpre, vpost, cfg):
    """Run similarity building, calibration, and greedy on one crop.

    Returns (SelectionResult with crop-local indices, effective tau_v).
    """
    mode = cfg.mode
    need_tv = mode is not Mode.VISION_VISION or cfg.adaptive != "off"
    need_vv = mode is not Mode.TEXT_VISION
    adapt = cfg.adaptive if mode is not Mode.TEXT_VISION else "off"

    M_tv_cal = None
    if need_tv:
        M_tv = build_tv(text_mat, vpost)
        if pool_stage == "post":
            M_tv = pool_post(M_tv, spans, pool_method)
        M_tv_cal = calibrate(M_tv, cfg.tau_t)

    tau_eff = cfg.tau_v
    M_vv_cal = None
    if need_vv:
        M_vv = build_vv(vpre)
        if adapt == "bisect":
            tau_eff = adapt_tau_bisection(M_tv_cal, M_vv, cfg.tau_t, cfg.tau_v)
        elif adapt == "grid":
            tau_eff = adapt_tau_grid_kth(M_tv_cal, M_vv, cfg.grid_k, cfg.grid)
        M_vv_cal = calibrate(M_vv, tau_eff)

    k = cfg.budget
    if mode is Mode.TEXT_VISION:
        return lazy_greedy_select(M_tv_cal, k), tau_eff
    if mode is Mode.VISION_VISION:
        return lazy_greedy_select(M_vv_cal, k), tau_eff
    return lazy_greedy_select_fused(M_tv_cal, M_vv_cal, cfg.alpha, k), tau_eff


def select_tokens(sample, cfg, timings=None):
    """Full selection pipeline for one sample under ``cfg``.

    When ``timings`` is a dict, per-stage wall nanoseconds are recorded
    into it.
    """
    sample.validate()
    t0 = time.perf_counter_ns()

    vpre = normalize(sample.vision_pre)
    vpost = normalize(sample.vision_post)
    text = normalize(sample.text)
    agent = normalize(sample.agent_text) if sample.agent_text is not None else None
    t1 = time.perf_counter_ns()

    pool_stage, pool_method = _pooling_parts(cfg.pooling)
    spans = sample.word_spans
    if pool_stage is not None and spans is None:
        raise ValueError(f"pooling {cfg.pooling!r} requires word spans")
    if pool_stage == "pre":
        text = pool_pre(text, spans, pool_method)
    if agent is not None:
        text = concat_agent(text, agent)
    post_spans = None
    if pool_stage == "post":
        # Agent rows are appended after the query rows; pooling only
        # groups the query rows, so extend the spans with singleton
        # spans for each agent row.
        extra = []
        if agent is not None:
            m = spans.spans[-1][1]
            extra = [(m + i, m + i + 1) for i in range(agent.rows)]
        post_spans = WordSpans.from_pairs(list(spans.spans) + extra)
    t2 = time.perf_counter_ns()

    n = sample.n
    crops = sample.crop_sizes
    if crops is None or cfg.global_across_crops:
        crops = (n,)
        plan = None
        budgets = (min(cfg.budget, n),)
        offsets = (0,)
    else:
        plan = plan_budget(crops, min(cfg.budget, n), n)
        budgets = plan.per_crop
        offsets = tuple(np.cumsum((0,) + crops[:-1]).tolist())

    selected = []
    gains = []
    obj_tv = []
    obj_vv = []
    obj_fused = []
    taus = []
    evals = 0
    for size, budget, off in zip(crops, budgets, offsets):
        sl = slice(off, off + size)
        crop_cfg = cfg if budget == cfg.budget else _with_budget(cfg, budget)
        res, tau_eff = _select_crop(
            text, post_spans, pool_stage, pool_method,
            TokenMatrix.from_array(vpre.data[sl], vpre.role),
            TokenMatrix.from_array(vpost.data[sl], vpost.role),
            crop_cfg)
        selected.extend(off + j for j in res.selected)
        gains.extend(res.gains)
        obj_tv.append(res.objective_tv)
        obj_vv.append(res.objective_vv)
        obj_fused.append(res.objective_fused)
        taus.append(tau_eff)
        evals += res.gain_evaluations
    t3 = time.perf_counter_ns()

    if timings is not None:
        timings["normalize_ns"] = t1 - t0
        timings["prepare_ns"] = t2 - t1
        timings["select_ns"] = t3 - t2
        timings["total_ns"] = t3 - t0

    return SelectionResult(
        selected=tuple(selected),
        gains=tuple(gains),
        objective_tv=float(np.mean(obj_tv)),
        objective_vv=float(np.mean(obj_vv)),
        objective_fused=float(np.mean(obj_fused)),
        effective_tau_v=float(np.mean(taus)),
        gain_evaluations=evals,
    )


def _with_budget(cfg, budget):
    from dataclasses import replace

    return replace(cfg, budget=int(budget))


def synth_sample(n, m, o, dim_pre, dim_post, seed, num_words=None,
                 crop_sizes=None):
    """Deterministic seeded sample of unit-norm Gaussian token rows."""
    if n < 1 or m < 1 or o < 0 or dim_pre < 1 or dim_post < 1:
        raise ValueError("counts must be positive (o may be zero)")
    rng = np.random.default_rng(seed)

    def unit_rows(rows, dim, role):
        data = rng.standard_normal((rows, dim), dtype=np.float32)
        return normalize(TokenMatrix.from_array(data, role))

    vision_pre = unit_rows(n, dim_pre, Role.VISION_PRE)
    vision_post = unit_rows(n, dim_post, Role.VISION_POST)
    text = unit_rows(m, dim_post, Role.TEXT_QUERY)
    agent = unit_rows(o, dim_post, Role.AGENT_TEXT) if o > 0 else None

    spans = None
    if num_words is not None:
        if not 1 <= num_words <= m:
            raise ValueError("num_words must be in [1, m]")
        cuts = np.sort(rng.choice(np.arange(1, m), size=num_words - 1,
                                  replace=False))
        bounds = [0] + cuts.tolist() + [m]
        spans = WordSpans.from_pairs(zip(bounds[:-1], bounds[1:]))

    sample = SampleInput(
        vision_pre=vision_pre,
        vision_post=vision_post,
        text=text,
        agent_text=agent,
        word_spans=spans,
        crop_sizes=tuple(crop_sizes) if crop_sizes is not None else None,
    )
    sample.validate()
    return sample
