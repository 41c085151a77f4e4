import numpy as np
import pytest

from tokcover.core import CoverageConfig, Mode, Role, TokenMatrix, normalize
from tokcover.coverage import greedy_select, lazy_greedy_select
from tokcover.errors import BudgetExceedsTokensError, ZeroBaselineError
from tokcover.pipeline import (
    SampleInput,
    ic_metric,
    plan_budget,
    select_tokens,
    synth_sample,
)
from tokcover.similarity import build_tv, calibrate


# --------------------------------------------------------------- plan_budget

def test_plan_budget_five_crop_example():
    plan = plan_budget([576] * 5, 160, 2880)
    assert plan.per_crop == (32,) * 5
    assert plan.realized == 160


def test_plan_budget_four_crop_example():
    plan = plan_budget([576] * 4, 160, 2880)
    assert plan.realized == 128


def test_plan_budget_identity_ratio():
    plan = plan_budget([100, 50], 150, 150)
    assert plan.per_crop == (100, 50)


def test_plan_budget_minimum_one():
    plan = plan_budget([576, 4], 160, 2880)
    assert plan.per_crop[1] == 1


def test_plan_budget_rejects_excess():
    with pytest.raises(BudgetExceedsTokensError):
        plan_budget([100], 200, 100)


# ----------------------------------------------------------------- ic_metric

def test_ic_metric_paper_values():
    assert abs(ic_metric(64.7, 19.33) - 2.347) < 5e-4
    assert abs(ic_metric(85.9, 44.64) - 0.924) < 5e-4


def test_ic_metric_no_gain():
    assert ic_metric(42.0, 42.0) == 0.0


def test_ic_metric_zero_baseline():
    with pytest.raises(ZeroBaselineError):
        ic_metric(10.0, 0.0)


# -------------------------------------------------------------- synth_sample

def test_synth_sample_deterministic():
    a = synth_sample(16, 4, 2, 8, 12, seed=9, num_words=3)
    b = synth_sample(16, 4, 2, 8, 12, seed=9, num_words=3)
    assert a.vision_pre.data.tobytes() == b.vision_pre.data.tobytes()
    assert a.vision_post.data.tobytes() == b.vision_post.data.tobytes()
    assert a.text.data.tobytes() == b.text.data.tobytes()
    assert a.agent_text.data.tobytes() == b.agent_text.data.tobytes()
    assert a.word_spans == b.word_spans


def test_synth_sample_rows_unit_norm():
    s = synth_sample(20, 5, 3, 8, 12, seed=1)
    for mat in (s.vision_pre, s.vision_post, s.text, s.agent_text):
        norms = np.linalg.norm(mat.data.astype(np.float64), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-5)


def test_synth_sample_large_smoke():
    s = synth_sample(576, 16, 0, 64, 128, seed=2)
    res = select_tokens(s, CoverageConfig(budget=64))
    assert len(res.selected) == 64


# ------------------------------------------------------------- select_tokens

def test_tv_mode_is_composition(rng):
    s = synth_sample(12, 4, 0, 6, 8, seed=3)
    cfg = CoverageConfig(budget=4, mode=Mode.TEXT_VISION)
    res = select_tokens(s, cfg)
    M = calibrate(build_tv(normalize(s.text), normalize(s.vision_post)),
                  cfg.tau_t)
    direct = greedy_select(M, 4)
    assert res.selected == direct.selected
    assert abs(res.objective_tv - direct.objective_tv) < 1e-12


def test_multimodal_matches_monolithic_reference():
    s = synth_sample(8, 3, 0, 5, 6, seed=4)
    cfg = CoverageConfig(budget=3, mode=Mode.MULTIMODAL, alpha=0.5)
    res = select_tokens(s, cfg)

    # Single-pass reference: every stage inlined, NumPy only.
    def unit(x):
        x = x.astype(np.float64)
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    def softmax(m, tau):
        e = np.exp((m - m.max(axis=1, keepdims=True)) / tau)
        return e / e.sum(axis=1, keepdims=True)

    tv = softmax(unit(s.text.data) @ unit(s.vision_post.data).T, 0.02)
    vv = softmax(unit(s.vision_pre.data) @ unit(s.vision_pre.data).T, 0.2)
    S = []
    for _ in range(3):
        best_j, best_v = None, -np.inf
        for j in range(8):
            if j in S:
                continue
            cand = S + [j]
            v = tv[:, cand].max(axis=1).mean() + 0.5 * vv[:, cand].max(axis=1).mean()
            if v > best_v:
                best_v, best_j = v, j
        S.append(best_j)
    assert list(res.selected) == S


def test_per_crop_partition():
    s = synth_sample(12, 4, 0, 6, 8, seed=5, crop_sizes=[6, 6])
    res = select_tokens(s, CoverageConfig(budget=4))
    first = [j for j in res.selected if j < 6]
    second = [j for j in res.selected if j >= 6]
    assert len(first) == 2 and len(second) == 2


def test_single_crop_equals_global():
    base = synth_sample(16, 4, 0, 6, 8, seed=6)
    cropped = SampleInput(
        vision_pre=base.vision_pre, vision_post=base.vision_post,
        text=base.text, crop_sizes=(16,))
    cfg = CoverageConfig(budget=5)
    assert select_tokens(base, cfg).selected == select_tokens(cropped, cfg).selected


def test_alpha_zero_multimodal_equals_tv():
    s = synth_sample(14, 4, 0, 6, 8, seed=7)
    mm = select_tokens(s, CoverageConfig(budget=5, alpha=0.0))
    tv = select_tokens(s, CoverageConfig(budget=5, mode=Mode.TEXT_VISION))
    assert mm.selected == tv.selected


def test_vv_mode_runs_without_text_effect():
    s = synth_sample(14, 4, 0, 6, 8, seed=8)
    res = select_tokens(s, CoverageConfig(budget=5, mode=Mode.VISION_VISION))
    assert len(res.selected) == 5
    assert res.objective_tv == 0.0
    assert res.objective_vv > 0.0


def test_agent_changes_targets_not_candidates():
    with_agent = synth_sample(10, 4, 3, 6, 8, seed=9)
    without = SampleInput(vision_pre=with_agent.vision_pre,
                          vision_post=with_agent.vision_post,
                          text=with_agent.text)
    cfg = CoverageConfig(budget=4)
    res_a = select_tokens(with_agent, cfg)
    res_b = select_tokens(without, cfg)
    assert all(j < 10 for j in res_a.selected)
    assert len(res_a.selected) == len(res_b.selected) == 4


def test_selected_count_always_min_budget_n():
    s = synth_sample(6, 3, 0, 4, 5, seed=10)
    assert len(select_tokens(s, CoverageConfig(budget=99)).selected) == 6
    assert len(select_tokens(s, CoverageConfig(budget=0)).selected) == 0


def test_deterministic_pipeline():
    s = synth_sample(20, 5, 2, 8, 12, seed=11, num_words=4)
    cfg = CoverageConfig(budget=6, pooling="pre-mean")
    r1 = select_tokens(s, cfg)
    r2 = select_tokens(s, cfg)
    assert r1 == r2


def test_pooling_requires_spans():
    s = synth_sample(10, 4, 0, 6, 8, seed=12)
    with pytest.raises(ValueError):
        select_tokens(s, CoverageConfig(budget=3, pooling="post-mean"))


@pytest.mark.parametrize("pooling", ["pre-mean", "pre-max", "pre-first",
                                     "post-mean", "post-max", "post-first"])
def test_pooling_modes_run(pooling):
    s = synth_sample(10, 6, 2, 6, 8, seed=13, num_words=3)
    res = select_tokens(s, CoverageConfig(budget=3, pooling=pooling))
    assert len(res.selected) == 3


def test_adaptive_grid_resolves_to_grid_element():
    s = synth_sample(12, 4, 0, 6, 8, seed=14)
    cfg = CoverageConfig(budget=4, adaptive="grid")
    res = select_tokens(s, cfg)
    assert res.effective_tau_v in cfg.grid


def test_adaptive_bisect_within_interval():
    import warnings

    s = synth_sample(12, 4, 0, 6, 8, seed=15)
    cfg = CoverageConfig(budget=4, adaptive="bisect")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = select_tokens(s, cfg)
    assert cfg.tau_t <= res.effective_tau_v <= cfg.tau_v


def test_objective_fused_consistency():
    s = synth_sample(15, 5, 0, 6, 8, seed=16)
    res = select_tokens(s, CoverageConfig(budget=5, alpha=0.5))
    assert abs(res.objective_fused
               - (res.objective_tv + 0.5 * res.objective_vv)) < 1e-6


def test_lazy_pipeline_matches_validated_eager():
    # The pipeline runs lazy greedy; cross-check against the eager path.
    s = synth_sample(30, 6, 0, 8, 10, seed=17)
    cfg = CoverageConfig(budget=8, mode=Mode.TEXT_VISION)
    res = select_tokens(s, cfg)
    M = calibrate(build_tv(normalize(s.text), normalize(s.vision_post)),
                  cfg.tau_t)
    assert res.selected == greedy_select(M, 8).selected
    assert res.selected == lazy_greedy_select(M, 8).selected
