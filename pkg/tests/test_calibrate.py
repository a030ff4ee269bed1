import math

import pytest
from conftest import make_task

from recserve.calibrate import CalibrationConfig, calibrate, initial_beta, update_beta
from recserve.core import TierTopology
from recserve.errors import ConfigError, InsufficientWorkload, UnachievableBudget
from recserve.history import ThresholdConfig
from recserve.theory import GOLDEN_BOUND, TheoryInputs, expected_comm
from recserve.workload import Constant, SyntheticSpec, Uniform, generate

TOPO = TierTopology.from_costs([1, 5, 20])
TEMPLATE = ThresholdConfig(0.5, k=2000)


def test_initial_beta_inverts_theory():
    assert initial_beta(0.78, 1.0) == pytest.approx(0.3, abs=1e-12)
    for b in (0.05, 0.2, 0.45):
        budget = expected_comm(TheoryInputs(b, 3, 37.0))
        assert initial_beta(budget, 37.0) == pytest.approx(b, abs=1e-12)


def test_initial_beta_general_n():
    budget = expected_comm(TheoryInputs(0.35, 4, 10.0))
    assert initial_beta(budget, 10.0, n=4) == pytest.approx(0.35, abs=1e-9)


def test_tiny_budget_clamps_low():
    assert initial_beta(1e-9, 1.0, beta_clamp=(0.01, 0.6)) == 0.01


def test_golden_boundary_budget():
    # 2 * payload * b (1 + b) = 2 * payload  <=>  b = golden bound
    with pytest.raises(UnachievableBudget):
        initial_beta(2.0, 1.0, beta_clamp=(0.01, 0.6))
    assert initial_beta(2.0, 1.0, beta_clamp=(0.01, 0.7)) == pytest.approx(GOLDEN_BOUND, abs=1e-12)


def test_update_rule():
    assert update_beta(0.4, 2.0, 1.0) == pytest.approx(0.2)
    assert update_beta(0.4, 2.0, 0.0) == 0.4
    assert update_beta(0.4, 0.5, 0.5) > 0.4
    assert update_beta(0.4, 100.0, 1.0, (0.01, 0.6)) == 0.01


def test_update_scale_consistent():
    for gamma_num, budget in ((120.0, 100.0), (37.5, 50.0)):
        assert update_beta(0.3, gamma_num / budget, 0.7) == update_beta(0.3, (2 * gamma_num) / (2 * budget), 0.7)


def test_config_validation():
    with pytest.raises(ConfigError):
        CalibrationConfig(budget=1.0, beta_clamp=(0.5, 0.4))
    with pytest.raises(ConfigError):
        CalibrationConfig(budget=0.0)
    with pytest.raises(ConfigError):
        CalibrationConfig(budget=1.0, epsilon=1.5)


def _spec(n, corr=0.0, seed=1):
    return SyntheticSpec(n_tasks=n, input_len_dist=Uniform(50, 150), output_len_dist=Constant(20),
                         length_confidence_corr=corr, seed=seed)


def test_self_consistent_workload_converges_first_round():
    spec = _spec(2000 + 5000, seed=4)
    budget = expected_comm(TheoryInputs(0.3, 3, spec.mean_payload()))
    cfg = CalibrationConfig(budget=budget, window=5000, warmup_tasks=2000, mean_payload=spec.mean_payload())
    trace = calibrate(generate(spec), TOPO, cfg, TEMPLATE)
    assert trace.converged
    assert len(trace.rounds) == 1
    assert trace.rounds[0].beta == pytest.approx(0.3)
    assert trace.final_beta == pytest.approx(0.3)


def test_eta_zero_never_moves():
    spec = _spec(2000 + 4 * 1000, corr=0.6, seed=2)
    budget = expected_comm(TheoryInputs(0.3, 3, spec.mean_payload()))
    cfg = CalibrationConfig(budget=budget, eta=0.0, window=1000, epsilon=0.001, max_rounds=4, warmup_tasks=2000)
    trace = calibrate(generate(spec), TOPO, cfg, TEMPLATE)
    assert len({r.beta for r in trace.rounds}) == 1


def test_trace_invariants_and_direction():
    spec = _spec(2000 + 10 * 2000, corr=0.5, seed=8)
    budget = expected_comm(TheoryInputs(0.3, 3, spec.mean_payload()))
    cfg = CalibrationConfig(budget=budget, window=2000, epsilon=0.001, max_rounds=10, warmup_tasks=2000,
                            beta_clamp=(0.05, 0.55))
    trace = calibrate(generate(spec), TOPO, cfg, TEMPLATE)
    assert len(trace.rounds) <= 10
    for prev, nxt in zip(trace.rounds, trace.rounds[1:]):
        assert 0.05 <= prev.beta <= 0.55
        assert prev.gamma == pytest.approx(prev.burden / budget)
        if prev.gamma > 1:
            assert nxt.beta < prev.beta
        elif prev.gamma < 1:
            assert nxt.beta > prev.beta


def test_runs_out_of_tasks():
    spec = _spec(1500)
    cfg = CalibrationConfig(budget=10.0, window=1000, epsilon=0.001, max_rounds=5, warmup_tasks=0,
                            mean_payload=spec.mean_payload())
    with pytest.raises(InsufficientWorkload):
        calibrate(generate(spec), TOPO, cfg, TEMPLATE)


def test_mean_payload_estimated_without_warmup():
    tasks = [make_task([0.5, 0.5, 0.5], input_len=80, out_lens=20, task_id=str(i)) for i in range(50)]
    cfg = CalibrationConfig(budget=2 * 100 * 0.39, window=10, max_rounds=2, epsilon=0.5)
    trace = calibrate(tasks, TOPO, cfg, ThresholdConfig(0.5, k=10))
    assert trace.rounds[0].beta == pytest.approx(0.3)
