import math

import numpy as np
import pytest
from scipy.integrate import quad

from catamp import (
    AmpConfig,
    DyadMix,
    PureCSS,
    as_dyad_mix,
    avg_fidelity_window,
    closed_form_density,
    closed_form_fidelity,
    density_p,
    density_profile,
    fidelity_pointwise,
    fidelity_profile,
    fidelity_with_pure,
    inner,
    max_prob_at_target,
    norm2,
    projected_state,
    scs_state,
)
from catamp.protocol import density_fidelity

SQRT2 = math.sqrt(2.0)

# frozen from a direct Gaussian-overlap evaluation plus adaptive quadrature,
# fixed before the engine existed
F_ODD_ODD_HALF_ALPHA_AT_0 = 0.611181818020526
P_ODD_ODD_HALF_ALPHA_AT_0 = 0.390243963769906
F_ODD_ODD_1_AT_07 = 0.83616266340915
P_ODD_ODD_1_AT_07 = 0.175544556349777
F_EVEN_ODD_12_AT_09 = 0.896299653199196
P_EVEN_ODD_12_AT_09 = 0.140011371322266
ANCHOR_PROBABILITY = 0.431984523234686
ANCHOR_AVG_FIDELITY = 0.975383083911895


class TestAmpConfig:
    def test_target_parity_rules(self):
        assert AmpConfig(1.0, "odd-odd").target_parity == "even"
        assert AmpConfig(1.0, "even-even").target_parity == "even"
        assert AmpConfig(1.0, "even-odd").target_parity == "odd"

    def test_target_amplitude_unattenuated_under_loss(self):
        cfg = AmpConfig(1.0, "even-odd", loss_r2=0.19)
        assert cfg.target_alpha == pytest.approx(SQRT2)

    def test_attenuated_target_option(self):
        cfg = AmpConfig(1.0, "even-odd", loss_r2=0.19, attenuated_target=True)
        assert cfg.target_alpha == pytest.approx(SQRT2 * math.sqrt(0.81))

    def test_validation(self):
        with pytest.raises(ValueError):
            AmpConfig(0.0, "odd-odd")
        with pytest.raises(ValueError):
            AmpConfig(1.0, "odd-even")
        with pytest.raises(ValueError):
            AmpConfig(1.0, "odd-odd", loss_r2=1.0)


class TestProjectedState:
    def test_opposite_parity_at_zero_is_pure_amplified_odd(self):
        # the vacuum component vanishes identically at x0 = 0
        for alpha in (0.3, 0.8, 1.5):
            state = projected_state(AmpConfig(alpha, "even-odd"), 0.0)
            target = scs_state(SQRT2 * alpha, "odd")
            assert isinstance(state, PureCSS)
            assert abs(inner(target, state)) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_odd_odd_coefficients_match_direct_expansion(self):
        from catamp import quadrature_wavefunction

        alpha, x0 = 1.0, 0.0
        state = projected_state(AmpConfig(alpha, "odd-odd"), x0)
        n2 = (2 - 2 * math.exp(-2 * alpha ** 2)) ** -1
        b = SQRT2 * alpha
        psi = lambda a, x: quadrature_wavefunction(a, x)
        unnorm = PureCSS(
            1,
            (
                (n2 * psi(0, x0), (complex(b),)),
                (n2 * psi(0, x0), (complex(-b),)),
                (-n2 * psi(b, x0), (0j,)),
                (-n2 * psi(-b, x0), (0j,)),
            ),
        )
        expected = norm2(unnorm) ** -0.5
        assert abs(inner(state, unnorm)) == pytest.approx(
            norm2(unnorm) * expected, rel=1e-12
        )
        # vacuum admixture is present away from the odd-odd sweet spot
        from catamp import vacuum_state

        assert abs(inner(vacuum_state(), state)) > 0.01

    def test_lossy_state_is_normalized_mix(self):
        state = projected_state(AmpConfig(1.0, "odd-odd", 0.1), 0.3)
        assert isinstance(state, DyadMix)
        from catamp import trace

        assert trace(state).real == pytest.approx(1.0, abs=1e-12)


class TestDensityAndFidelity:
    def test_frozen_point_values(self):
        p, f = density_fidelity(AmpConfig(0.5, "odd-odd"), 0.0)
        assert p == pytest.approx(P_ODD_ODD_HALF_ALPHA_AT_0, abs=1e-12)
        assert f == pytest.approx(F_ODD_ODD_HALF_ALPHA_AT_0, abs=1e-12)
        p, f = density_fidelity(AmpConfig(1.0, "odd-odd"), 0.7)
        assert p == pytest.approx(P_ODD_ODD_1_AT_07, abs=1e-12)
        assert f == pytest.approx(F_ODD_ODD_1_AT_07, abs=1e-12)
        p, f = density_fidelity(AmpConfig(1.2, "even-odd"), 0.9)
        assert p == pytest.approx(P_EVEN_ODD_12_AT_09, abs=1e-12)
        assert f == pytest.approx(F_EVEN_ODD_12_AT_09, abs=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0, 2.0])
    def test_opposite_parity_exact_at_zero(self, alpha):
        assert fidelity_pointwise(AmpConfig(alpha, "even-odd"), 0.0) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_odd_odd_large_alpha_high_fidelity(self):
        assert fidelity_pointwise(AmpConfig(2.0, "odd-odd"), 0.0) >= 0.999

    @pytest.mark.parametrize("pairing", ["odd-odd", "even-even", "even-odd"])
    def test_density_integrates_to_one(self, pairing):
        cfg = AmpConfig(1.2, pairing)
        val, _ = quad(lambda x: density_p(cfg, x), -np.inf, np.inf, epsabs=1e-12)
        assert val == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("pairing", ["odd-odd", "even-odd"])
    @pytest.mark.parametrize("loss", [0.0, 0.15])
    def test_even_in_outcome(self, pairing, loss):
        cfg = AmpConfig(0.9, pairing, loss)
        for x0 in (0.2, 0.8, 1.7, 2.5):
            pp, fp = density_fidelity(cfg, x0)
            pm, fm = density_fidelity(cfg, -x0)
            assert pp == pytest.approx(pm, abs=1e-12)
            assert fp == pytest.approx(fm, abs=1e-12)

    def test_closed_forms_match_engine_on_random_points(self, rng):
        for pairing in ("odd-odd", "even-even", "even-odd"):
            for _ in range(100):
                alpha = rng.uniform(0.1, 2.5)
                x0 = rng.uniform(-3.0, 3.0)
                cfg = AmpConfig(alpha, pairing)
                p_engine, f_engine = density_fidelity(cfg, x0)
                assert closed_form_density(cfg, x0) == pytest.approx(
                    p_engine, abs=1e-12
                )
                assert closed_form_fidelity(cfg, x0) == pytest.approx(
                    f_engine, abs=1e-12
                )

    def test_closed_forms_reject_loss(self):
        with pytest.raises(ValueError):
            closed_form_density(AmpConfig(1.0, "odd-odd", 0.1), 0.0)

    def test_profiles_match_pointwise(self, rng):
        xs = rng.uniform(-3, 3, 25)
        for loss in (0.0, 0.12):
            cfg = AmpConfig(1.1, "even-odd", loss)
            dens = density_profile(cfg, xs)
            fid = fidelity_profile(cfg, xs)
            for x, d, f in zip(xs, dens, fid):
                p_ref, f_ref = density_fidelity(cfg, float(x))
                assert d == pytest.approx(p_ref, abs=1e-13)
                assert f == pytest.approx(f_ref, abs=1e-12)


class TestWindowAverages:
    def test_degenerate_window_equals_pointwise(self):
        cfg = AmpConfig(0.9, "even-odd")
        stats = avg_fidelity_window(cfg, 0.0)
        assert stats.probability == 0.0
        assert stats.avg_fidelity == pytest.approx(
            fidelity_pointwise(cfg, 0.0), abs=1e-12
        )

    def test_shrinking_window_approaches_pointwise(self):
        cfg = AmpConfig(0.7, "odd-odd")
        stats = avg_fidelity_window(cfg, 1e-4)
        assert stats.avg_fidelity == pytest.approx(
            fidelity_pointwise(cfg, 0.0), abs=1e-6
        )

    def test_amplification_anchor(self):
        stats = avg_fidelity_window(AmpConfig(1.2, "even-odd"), 1.0)
        assert stats.probability == pytest.approx(ANCHOR_PROBABILITY, abs=1e-9)
        assert stats.avg_fidelity == pytest.approx(ANCHOR_AVG_FIDELITY, abs=1e-9)
        # the headline numbers: 43% success at 0.9754 average fidelity
        assert stats.probability == pytest.approx(0.43, abs=0.01)
        assert stats.avg_fidelity == pytest.approx(0.9754, abs=0.001)

    def test_avg_fidelity_nonincreasing_for_opposite_parity(self):
        cfg = AmpConfig(1.2, "even-odd")
        widths = np.linspace(0.04, 2.0, 50)
        fids = [avg_fidelity_window(cfg, w).avg_fidelity for w in widths]
        assert all(b <= a + 1e-12 for a, b in zip(fids, fids[1:]))

    def test_probability_monotone_in_window(self):
        cfg = AmpConfig(0.8, "odd-odd")
        widths = np.linspace(0.1, 3.0, 25)
        probs = [avg_fidelity_window(cfg, w).probability for w in widths]
        assert all(b >= a for a, b in zip(probs, probs[1:]))

    def test_negative_window_rejected(self):
        with pytest.raises(ValueError):
            avg_fidelity_window(AmpConfig(1.0, "odd-odd"), -0.5)


class TestWindowSearch:
    def test_found_window_satisfies_defining_predicate(self):
        cfg = AmpConfig(1.2, "even-odd")
        for target in (0.9, 0.95, 0.99):
            stats = max_prob_at_target(cfg, target)
            assert stats.half_width > 0
            at = avg_fidelity_window(cfg, stats.half_width)
            assert at.avg_fidelity >= target - 1e-9
            beyond = avg_fidelity_window(cfg, stats.half_width + 0.01)
            assert beyond.avg_fidelity < target
            assert stats.probability == pytest.approx(at.probability, abs=1e-9)

    def test_same_parity_small_alpha_fails_high_targets(self):
        stats = max_prob_at_target(AmpConfig(0.5, "odd-odd"), 0.95)
        assert stats.probability < 1e-3

    @pytest.mark.parametrize("alpha", [0.1, 0.4, 0.9, 1.6, 2.5])
    def test_opposite_parity_succeeds_at_all_amplitudes(self, alpha):
        stats = max_prob_at_target(AmpConfig(alpha, "even-odd"), 0.99)
        assert stats.probability > 0.0

    def test_vanishing_target_accepts_everything(self):
        stats = max_prob_at_target(AmpConfig(1.0, "even-odd"), 1e-6)
        assert stats.probability > 0.999

    def test_target_range_validated(self):
        with pytest.raises(ValueError):
            max_prob_at_target(AmpConfig(1.0, "even-odd"), 1.0)


class TestLossDegradation:
    @pytest.mark.parametrize("pairing", ["odd-odd", "even-odd"])
    def test_fidelity_strictly_decreases_with_loss(self, pairing):
        # probe grid covers the operating region (amplitudes and windows
        # where the protocol yields useful fidelity); in the low-alpha
        # same-parity dead zones loss can raise a near-zero fidelity by
        # mixing the herald toward states with residual target overlap
        alphas = np.linspace(0.9, 2.1, 10)
        outcomes = np.linspace(0.0, 1.0, 10)
        for alpha in alphas:
            for x0 in outcomes:
                f0 = fidelity_pointwise(AmpConfig(alpha, pairing, 0.0), x0)
                f1 = fidelity_pointwise(AmpConfig(alpha, pairing, 0.1), x0)
                f2 = fidelity_pointwise(AmpConfig(alpha, pairing, 0.2), x0)
                assert f1 < f0
                assert f2 < f1

    def test_lossy_fidelity_against_truncated_basis_oracle(self):
        from catamp import ProtocolOracle

        cfg = AmpConfig(1.0, "odd-odd", 0.1)
        oracle = ProtocolOracle(1.0, "odd-odd", 0.1)
        for x0 in (0.0, 0.3, 1.0):
            p_e, f_e = density_fidelity(cfg, x0)
            p_o, f_o = oracle.density_fidelity(x0)
            assert p_e == pytest.approx(p_o, abs=1e-8)
            assert f_e == pytest.approx(f_o, abs=1e-8)
