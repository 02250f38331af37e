import math

import numpy as np
import pytest

from kleinwalk.errors import DomainError
from kleinwalk.groups import Word
from kleinwalk.moebius import MoebiusMap, apply_boundary, dist_h3, ORIGIN
from kleinwalk.singularity import overlap_statistic
from kleinwalk.walks import (
    BoundarySampleSet,
    StepDistribution,
    drift_estimates,
    entropy_estimate,
    harmonic_sample,
    letter_stream,
    reduced_word_of_path,
    sample_path,
)


class TestStepDistribution:
    def test_uniform(self, gamma2):
        mu = StepDistribution.uniform(gamma2)
        assert mu.weights == (0.25,) * 4

    def test_zero_weight_rejected(self):
        with pytest.raises(DomainError, match="nondegeneracy"):
            StepDistribution((0.5, 0.5, 0.0, 0.0))

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError, match="symmetry"):
            StepDistribution((0.4, 0.1, 0.4, 0.1))

    def test_bad_sum_rejected(self):
        with pytest.raises(DomainError, match="sum"):
            StepDistribution((0.3, 0.3, 0.3, 0.3))

    def test_spec_mismatch(self, gamma2):
        with pytest.raises(DomainError, match="generators"):
            StepDistribution((0.5, 0.5)).check_spec(gamma2)


class TestSamplePath:
    def test_zero_steps(self, gamma2, uniform_mu):
        p = sample_path(gamma2, uniform_mu(gamma2), 0, 7)
        assert len(p.increments) == 0
        assert p.states == [MoebiusMap.identity()]
        assert np.array_equal(p.orbit_trace, np.zeros((1, 3)))

    def test_determinism(self, gamma2, uniform_mu):
        p1 = sample_path(gamma2, uniform_mu(gamma2), 50, 1234)
        p2 = sample_path(gamma2, uniform_mu(gamma2), 50, 1234)
        assert np.array_equal(p1.increments, p2.increments)
        assert np.array_equal(p1.orbit_trace, p2.orbit_trace)

    def test_states_consistent_with_increments(self, gamma2, uniform_mu):
        p = sample_path(gamma2, uniform_mu(gamma2), 30, 5)
        m = MoebiusMap.identity()
        for i, s in enumerate(p.increments[: len(p.states) - 1]):
            m = m.compose(gamma2.generators[int(s)])
            assert p.states[i + 1].approx_eq(m, 1e-9)
        # orbit trace matches the state action on the origin
        from kleinwalk.moebius import apply_ball

        for i in (1, 10, len(p.states) - 1):
            assert np.allclose(p.orbit_trace[i], apply_ball(p.states[i], ORIGIN), atol=1e-9)

    def test_states_prefix_capped_on_fast_growth(self, schottky2, uniform_mu):
        # loxodromic products blow past float-representable normalization;
        # only the well-conditioned prefix of states is materialized
        p = sample_path(schottky2, uniform_mu(schottky2), 30, 5)
        assert 1 < len(p.states) <= 31
        assert len(p.orbit_trace) == 31

    def test_increment_frequencies_million_steps(self, gamma2):
        mu = StepDistribution((0.35, 0.35, 0.15, 0.15))
        letters = letter_stream(mu, 99, 0, 1_000_000)
        for s, w in enumerate(mu.weights):
            freq = float(np.mean(letters == s))
            sigma = math.sqrt(w * (1 - w) / len(letters))
            assert abs(freq - w) <= 3 * sigma

    def test_reduced_word(self, gamma2, uniform_mu):
        p = sample_path(gamma2, uniform_mu(gamma2), 40, 8)
        w = reduced_word_of_path(p)
        assert w.reduced
        assert len(w) <= 40


class TestDrift:
    def test_schottky_word_speed_half(self, schottky2, uniform_mu):
        d = drift_estimates(schottky2, uniform_mu(schottky2), 10_000, 400, 42)
        assert 0.49 <= d.ell_word <= 0.51
        assert d.se_word < 0.002

    def test_hyp_drift_triangle_coupling(self, schottky2, gamma2, uniform_mu):
        for spec in (schottky2, gamma2):
            d = drift_estimates(spec, uniform_mu(spec), 2000, 200, 13)
            C = max(spec.generator_displacements())
            assert d.ell_hyp <= C * d.ell_word + 3 * d.se_hyp

    def test_short_length_rejected(self, schottky2, uniform_mu):
        with pytest.raises(DomainError):
            drift_estimates(schottky2, uniform_mu(schottky2), 10, 99, 1)


class TestEntropy:
    def test_green_drift_matches_word_speed(self, schottky2, uniform_mu):
        # d_G(id, Y_n) = |Y_n| log 3 for the uniform walk, so the estimate is
        # the word speed scaled by log 3
        e = entropy_estimate(schottky2, uniform_mu(schottky2), 10_000, 400, 42)
        assert abs(e.value - 0.5 * math.log(3)) <= 0.01

    def test_positive_for_all_presets(self, gamma2, schottky2, kleinian_pp, uniform_mu):
        for spec in (gamma2, schottky2, kleinian_pp):
            e = entropy_estimate(spec, uniform_mu(spec), 500, 200, 3)
            assert e.value > 0.1

    def test_short_length_rejected(self, schottky2, uniform_mu):
        with pytest.raises(DomainError):
            entropy_estimate(schottky2, uniform_mu(schottky2), 10, 50, 1)


class TestHarmonicSample:
    def test_empty(self, gamma2, uniform_mu):
        s = harmonic_sample(gamma2, uniform_mu(gamma2), 0, 1e-3, 1000, 1)
        assert len(s) == 0

    def test_weights_and_norms(self, gamma2, uniform_mu):
        s = harmonic_sample(gamma2, uniform_mu(gamma2), 500, 1e-3, 10_000, 4)
        assert abs(s.weights.sum() - 1.0) <= 1e-10
        assert np.allclose(np.linalg.norm(s.points, axis=1), 1.0, atol=1e-12)

    def test_fuchsian_sample_on_circle(self, gamma2, uniform_mu):
        s = harmonic_sample(gamma2, uniform_mu(gamma2), 2000, 1e-3, 100_000, 99)
        assert np.abs(s.points[:, 1]).max() <= 1e-3

    def test_determinism_and_worker_invariance(self, gamma2, uniform_mu):
        a = harmonic_sample(gamma2, uniform_mu(gamma2), 600, 1e-3, 10_000, 17, workers=1)
        b = harmonic_sample(gamma2, uniform_mu(gamma2), 600, 1e-3, 10_000, 17, workers=1)
        c = harmonic_sample(gamma2, uniform_mu(gamma2), 600, 1e-3, 10_000, 17, workers=3)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.points, c.points)

    def test_eps_stop_coupling(self, gamma2, uniform_mu):
        coarse = harmonic_sample(gamma2, uniform_mu(gamma2), 3000, 1e-2, 100_000, 55)
        fine = harmonic_sample(gamma2, uniform_mu(gamma2), 3000, 1e-3, 100_000, 55)
        disp = np.linalg.norm(coarse.points - fine.points, axis=1)
        assert np.median(disp) < 0.05

    def test_generator_swap_symmetry(self, gamma2, uniform_mu):
        # z -> 1/z conjugates the two parabolic generators into each other and
        # fixes the base point, so the uniform harmonic sample is swap
        # invariant in distribution
        tau = MoebiusMap(0, 1j, 1j, 0)
        assert tau.compose(gamma2.generators[0]).compose(tau.inverse()).approx_eq(
            gamma2.generators[2], 1e-12
        )
        s = harmonic_sample(gamma2, uniform_mu(gamma2), 10_000, 1e-3, 100_000, 77)
        swapped = BoundarySampleSet(
            np.array([apply_boundary(tau, p) for p in s.points]),
            s.weights, "harmonic", dict(s.meta),
        )
        assert overlap_statistic(s, swapped, 32) > 0.8

    def test_eps_bounds(self, gamma2, uniform_mu):
        with pytest.raises(DomainError):
            harmonic_sample(gamma2, uniform_mu(gamma2), 10, 0.5, 10_000, 1)
        with pytest.raises(DomainError):
            harmonic_sample(gamma2, uniform_mu(gamma2), 10, 1e-3, 10, 1)

    def test_sample_set_validation(self):
        with pytest.raises(DomainError, match="sphere"):
            BoundarySampleSet(np.array([[0.5, 0, 0]]), np.array([1.0]), "harmonic")
        with pytest.raises(DomainError, match="sum"):
            BoundarySampleSet(np.array([[1.0, 0, 0]]), np.array([0.5]), "harmonic")

    def test_resample_matches_size(self, gamma2, uniform_mu):
        s = harmonic_sample(gamma2, uniform_mu(gamma2), 1500, 1e-3, 10_000, 3)
        r = s.resample(700, 9)
        assert len(r) == 700
        assert abs(r.weights.sum() - 1.0) <= 1e-10
        assert r.meta["resampled_from"] == 1500
