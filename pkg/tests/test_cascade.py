import json
import math

import pytest

from catamp import (
    AmpConfig,
    CascadePolicy,
    DyadMix,
    TermBudgetExceeded,
    avg_fidelity_window,
    cascade_run,
    fidelity_with_pure,
    projected_state,
    scs_state,
    state_from_json,
    trace,
    window_discretize,
)

SQRT2 = math.sqrt(2.0)
FIG_ANCHOR_FIDELITY = 0.975383083911895  # frozen quadrature value


def _window_fidelity(nodes: int, alpha=1.2, w=1.0) -> float:
    cfg = AmpConfig(alpha, "even-odd")
    mix = window_discretize(cfg, w, nodes)
    return fidelity_with_pure(mix, cfg.target_state())


class TestWindowDiscretize:
    def test_unit_trace(self):
        mix = window_discretize(AmpConfig(1.2, "even-odd"), 1.0, 21)
        assert trace(mix).real == pytest.approx(1.0, abs=1e-12)

    def test_converges_to_window_average(self):
        assert _window_fidelity(21) == pytest.approx(FIG_ANCHOR_FIDELITY, abs=1e-9)

    def test_node_refinement_converged(self):
        assert abs(_window_fidelity(21) - _window_fidelity(41)) < 1e-6

    def test_refinement_differences_shrink(self):
        diffs = [
            abs(_window_fidelity(5) - _window_fidelity(9)),
            abs(_window_fidelity(11) - _window_fidelity(21)),
            abs(_window_fidelity(21) - _window_fidelity(41)),
        ]
        assert diffs[1] <= diffs[0]
        assert diffs[2] <= diffs[1] + 1e-15

    def test_narrow_window_approaches_exact_conditioning(self):
        cfg = AmpConfig(0.9, "odd-odd")
        mix = window_discretize(cfg, 1e-6, 5)
        exact = projected_state(cfg, 0.0)
        assert fidelity_with_pure(mix, exact) == pytest.approx(1.0, abs=1e-9)

    def test_invalid_parameters(self):
        cfg = AmpConfig(1.0, "even-odd")
        with pytest.raises(ValueError):
            window_discretize(cfg, 0.0, 21)
        with pytest.raises(ValueError):
            window_discretize(cfg, 1.0, 10)
        with pytest.raises(ValueError):
            window_discretize(cfg, 1.0, 1)


class TestCascadeRun:
    def test_opposite_parity_refresh_is_exact_at_zero(self):
        policy = CascadePolicy(stages=2, conditioning="exact", x0=0.0,
                               input_rule="ideal-refresh")
        reports = cascade_run(0.8, "even-odd", policy)
        assert len(reports) == 2
        for report in reports:
            assert report.fidelity == pytest.approx(1.0, abs=1e-10)
        assert reports[0].input_alpha == pytest.approx(0.8)
        assert reports[1].input_alpha == pytest.approx(0.8 * SQRT2)

    def test_clone_same_parity_underperforms_opposite(self):
        policy = CascadePolicy(stages=2, conditioning="window", window=0.5, nodes=11)
        same = cascade_run(0.5, "odd-odd", policy)
        opposite = cascade_run(0.5, "even-odd", policy)
        assert same[-1].fidelity < opposite[-1].fidelity

    def test_single_stage_matches_protocol_window_stats(self):
        policy = CascadePolicy(stages=1, conditioning="window", window=1.0, nodes=21)
        report = cascade_run(1.2, "even-odd", policy)[0]
        stats = avg_fidelity_window(AmpConfig(1.2, "even-odd"), 1.0)
        assert abs(report.fidelity - stats.avg_fidelity) < 1e-4
        assert report.probability == pytest.approx(stats.probability, abs=1e-9)

    def test_cumulative_probability_is_product(self):
        policy = CascadePolicy(stages=3, conditioning="window", window=0.8, nodes=11)
        reports = cascade_run(0.7, "even-odd", policy, )
        acc = 1.0
        for report in reports:
            acc *= report.probability
            assert report.cumulative_probability == pytest.approx(acc, rel=1e-12)

    def test_amplitude_bookkeeping_and_bounded_labels(self):
        policy = CascadePolicy(stages=4, conditioning="window", window=0.5, nodes=5)
        reports = cascade_run(0.5, "odd-odd", policy)
        for s, report in enumerate(reports, start=1):
            assert report.input_alpha == pytest.approx(0.5 * SQRT2 ** (s - 1))
            # cloning doubles the label ladder each stage: 2^s + 1 values
            assert report.term_count <= (2 ** s + 1) ** 2

    def test_term_budget_abort(self):
        policy = CascadePolicy(stages=3, conditioning="window", window=0.5,
                               nodes=5, max_terms=10)
        with pytest.raises(TermBudgetExceeded):
            cascade_run(0.5, "odd-odd", policy)

    def test_lossy_cascade_degrades(self):
        clean = CascadePolicy(stages=2, conditioning="window", window=0.6, nodes=11)
        lossy = CascadePolicy(stages=2, conditioning="window", window=0.6, nodes=11,
                              loss_r2=0.1)
        f_clean = cascade_run(1.0, "even-odd", clean)[-1].fidelity
        f_lossy = cascade_run(1.0, "even-odd", lossy)[-1].fidelity
        assert f_lossy < f_clean

    def test_checkpoints_written(self, tmp_path):
        policy = CascadePolicy(stages=2, conditioning="exact", x0=0.0,
                               input_rule="ideal-refresh")
        cascade_run(0.8, "even-odd", policy, checkpoint_dir=tmp_path)
        for stage in (1, 2):
            payload = (tmp_path / f"stage_{stage}.json").read_text()
            state = state_from_json(payload)
            assert isinstance(state, DyadMix)
            assert trace(state).real == pytest.approx(1.0, abs=1e-10)

    def test_refresh_parity_override(self):
        policy = CascadePolicy(stages=2, conditioning="exact", x0=0.0,
                               input_rule="ideal-refresh", refresh_parity="odd")
        reports = cascade_run(0.8, "even-odd", policy)
        # odd partner with odd output makes stage 2 same-parity: exact
        # conditioning at zero no longer reproduces the ideal target
        assert reports[1].fidelity < 1.0 - 1e-6

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            CascadePolicy(stages=0)
        with pytest.raises(ValueError):
            CascadePolicy(stages=1, conditioning="sometimes")
        with pytest.raises(ValueError):
            CascadePolicy(stages=1, conditioning="window", nodes=4)
        with pytest.raises(ValueError):
            CascadePolicy(stages=1, input_rule="recycle")
        with pytest.raises(ValueError):
            cascade_run(1.0, "odd-even", CascadePolicy(stages=1))
