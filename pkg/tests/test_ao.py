"""Alternating precoder / phase optimization on single realizations."""

from dataclasses import replace

import numpy as np
import pytest

from risim import (
    AoOptions,
    AoResult,
    RcgOptions,
    ScenarioKind,
    TrialCase,
    alternate_optimize,
    build_statistics,
    build_trial_terms,
    dbm_to_watts,
    default_config,
    draw_realization,
    evaluate_fixed,
    evaluate_pair,
    fixed_cluster2,
    optimize_cluster2,
)


def _small_cfg(side=5):
    base = default_config()
    return replace(
        base,
        clusters=(
            replace(base.clusters[0], ris_side=side),
            replace(base.clusters[1], ris_side=side),
        ),
    )


def _case(trial=0, side=5, emi_dbm=None, with_cluster2=False, optimize_c2=False):
    cfg = _small_cfg(side)
    stats = build_statistics(cfg)
    real = draw_realization(cfg, stats, trial)
    emi_w = 0.0 if emi_dbm is None else dbm_to_watts(emi_dbm)
    from risim.harness import make_powers

    cluster2 = None
    if with_cluster2:
        if optimize_c2:
            cluster2, _ = optimize_cluster2(
                real, stats, make_powers(cfg).cluster2, cfg.noise_power_w,
                cfg.clusters[1].weights(),
            )
        else:
            cluster2 = fixed_cluster2(real)
    return TrialCase(
        real=real,
        stats=stats,
        powers=make_powers(cfg),
        noise_power_w=cfg.noise_power_w,
        weights1=cfg.clusters[0].weights(),
        emi1_w=emi_w,
        emi2_w=emi_w,
        cluster2=cluster2,
    )


def test_ao_options_validate_awareness():
    AoOptions(awareness="aware")
    AoOptions(awareness="unaware")
    with pytest.raises(ValueError, match="awareness"):
        AoOptions(awareness="oblivious")


def test_build_trial_terms_neighbor_handling():
    case = _case(with_cluster2=True)
    terms = build_trial_terms(case, case.cluster2.u, include_neighbor=True)
    assert terms.e is not None and terms.q_cross is not None
    bare = build_trial_terms(case, case.cluster2.u, include_neighbor=False)
    assert bare.e is None
    no_c2 = replace(case, cluster2=None)
    with pytest.raises(ValueError, match="cluster-2 state"):
        build_trial_terms(no_c2, case.cluster2.u, include_neighbor=True)


def test_build_trial_terms_level_overrides():
    case = _case(emi_dbm=-65.0, with_cluster2=True)
    u1 = case.cluster2.u
    terms = build_trial_terms(case, u1, include_neighbor=True)
    assert terms.emi1_w == pytest.approx(dbm_to_watts(-65.0))
    override = build_trial_terms(case, u1, include_neighbor=True, emi1_w=0.0, emi2_w=0.0)
    assert override.emi1_w == 0.0 and override.emi2_w == 0.0


@pytest.mark.parametrize("kind", list(ScenarioKind))
def test_ao_beats_fixed_phases_per_realization(kind):
    # the first outer iteration starts from the fixed pair and RCG only
    # ascends, so the returned best pair can never fall below the baseline
    for trial in range(3):
        case = _case(trial=trial, emi_dbm=-65.0, with_cluster2=True)
        opts = AoOptions(scenario=kind, awareness="aware")
        res = alternate_optimize(case, opts)
        fixed = evaluate_fixed(case, kind)
        tuned = evaluate_pair(case, kind, res.theta, res.precoder.u)
        assert tuned.sum_rate_bps_hz >= fixed.sum_rate_bps_hz - 1e-9


def test_ao_single_outer_iteration_with_huge_eta():
    case = _case()
    res = alternate_optimize(case, AoOptions(eta=1e9))
    assert res.outer_iterations == 1
    assert res.converged


def test_ao_objective_is_best_of_trace():
    case = _case(trial=1, emi_dbm=-60.0, with_cluster2=True)
    res = alternate_optimize(case, AoOptions(scenario=ScenarioKind.EMI_IRR))
    assert res.objective == pytest.approx(res.outer_trace.max())
    assert res.outer_iterations == len(res.outer_trace)
    assert len(res.inner) == res.outer_iterations
    np.testing.assert_allclose(np.abs(res.theta), 1.0, atol=1e-12)


def test_ao_terminates_within_outer_cap():
    # either the eta tolerance fires or the loop runs out of iterations
    case = _case(trial=2)
    res = alternate_optimize(case, AoOptions())
    assert res.outer_iterations <= 10
    assert res.converged or res.outer_iterations == 10


def test_ao_respects_outer_cap():
    case = _case(trial=3)
    opts = AoOptions(eta=0.0, max_outer_iters=2, rcg=RcgOptions(max_iters=5))
    res = alternate_optimize(case, opts)
    assert res.outer_iterations == 2
    assert not res.converged


def test_unaware_ao_ignores_interference_levels():
    # the unaware optimizer targets the interference-free objective, so its
    # phases cannot depend on the EMI level attached to the case
    quiet = _case(trial=4, emi_dbm=-75.0, with_cluster2=True)
    loud = replace(quiet, emi1_w=dbm_to_watts(-60.0), emi2_w=dbm_to_watts(-60.0))
    opts = AoOptions(scenario=ScenarioKind.EMI, awareness="unaware")
    res_quiet = alternate_optimize(quiet, opts)
    res_loud = alternate_optimize(loud, opts)
    np.testing.assert_allclose(res_quiet.theta, res_loud.theta, rtol=1e-12)


def test_aware_ao_helps_under_strong_emi_on_average():
    # the awareness payoff needs enough elements for the EMI quadratic to
    # matter; around a hundred it wins on almost every draw
    aware_rates, unaware_rates = [], []
    for trial in range(8):
        case = _case(trial=trial, side=10, emi_dbm=-60.0)
        aw = alternate_optimize(case, AoOptions(scenario=ScenarioKind.EMI, awareness="aware"))
        un = alternate_optimize(case, AoOptions(scenario=ScenarioKind.EMI, awareness="unaware"))
        aware_rates.append(
            evaluate_pair(case, ScenarioKind.EMI, aw.theta, aw.precoder.u).sum_rate_bps_hz
        )
        unaware_rates.append(
            evaluate_pair(case, ScenarioKind.EMI, un.theta, un.precoder.u).sum_rate_bps_hz
        )
    assert np.mean(aware_rates) >= np.mean(unaware_rates)


def test_evaluate_fixed_deterministic():
    case = _case(trial=5, emi_dbm=-65.0, with_cluster2=True)
    a = evaluate_fixed(case, ScenarioKind.EMI_IRR)
    b = evaluate_fixed(case, ScenarioKind.EMI_IRR)
    np.testing.assert_array_equal(a.sinr, b.sinr)
    assert a.sum_rate_bps_hz == b.sum_rate_bps_hz


def test_fixed_cluster2_zero_phases():
    case = _case(with_cluster2=True)
    state = fixed_cluster2(case.real)
    np.testing.assert_array_equal(state.theta, np.ones(case.real.h2.shape[0]))
    np.testing.assert_allclose(np.linalg.norm(state.u, axis=0), 1.0, rtol=1e-12)


def test_optimize_cluster2_independent_of_cluster1():
    cfg = _small_cfg()
    stats = build_statistics(cfg)
    real = draw_realization(cfg, stats, 6)
    from risim.harness import make_powers

    powers2 = make_powers(cfg).cluster2
    args = (stats, powers2, cfg.noise_power_w, cfg.clusters[1].weights())
    state, res = optimize_cluster2(real, *args)
    assert isinstance(res, AoResult)
    rng = np.random.default_rng(0)
    tampered = replace(
        real,
        h1=rng.standard_normal(real.h1.shape) + 1j * rng.standard_normal(real.h1.shape),
    )
    state2, _ = optimize_cluster2(tampered, *args)
    np.testing.assert_array_equal(state.theta, state2.theta)
    np.testing.assert_array_equal(state.u, state2.u)
