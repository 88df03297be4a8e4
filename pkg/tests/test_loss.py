"""Objective function: component values, gradients, and the weight schedule."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panolayout import (
    BoundarySignal,
    InputError,
    LossWeights,
    bce_mean,
    bce_mean_grad,
    l2_mean,
    l2_mean_grad,
    total_loss,
    total_loss_grads,
    weight_schedule,
)
from panolayout.loss import EPS


def make_signal(y_p, y_c, y_f):
    return BoundarySignal(np.asarray(y_p, float), np.asarray(y_c, float), np.asarray(y_f, float))


class TestBceMean:
    def test_coin_flip_against_certain_labels(self):
        # -ln(0.5) in every column
        assert bce_mean(np.full(64, 0.5), np.ones(64)) == pytest.approx(
            math.log(2.0), abs=1e-12
        )

    def test_perfect_prediction_hits_clamp_floor(self):
        t = np.array([0.0, 1.0, 1.0, 0.0])
        v = bce_mean(t, t)
        assert 0.0 < v <= -math.log1p(-EPS) * (1 + 1e-9)

    def test_two_column_hand_value(self):
        # (-ln 0.9 - ln 0.8) / 2
        assert bce_mean([0.9, 0.2], [1.0, 0.0]) == pytest.approx(0.164252, abs=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            bce_mean([0.5, 0.5], [1.0])

    def test_clamp_keeps_finite_at_extremes(self):
        v = bce_mean([0.0, 1.0], [1.0, 0.0])
        assert np.isfinite(v)
        assert v == pytest.approx(-math.log(EPS), rel=1e-9)


class TestL2Mean:
    def test_zero_when_equal(self):
        y = np.linspace(-1.0, 1.0, 32)
        assert l2_mean(y, y) == 0.0

    def test_constant_offset(self):
        assert l2_mean(np.full(16, 0.3), np.full(16, 0.2)) == pytest.approx(
            0.01, abs=1e-15
        )

    def test_two_column_hand_value(self):
        assert l2_mean([0.1, 0.3], [0.0, 0.0]) == pytest.approx(0.05, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            l2_mean([0.1], [0.0, 0.0])


class TestTotalLoss:
    def test_perfect_prediction_near_zero(self):
        sig = make_signal([0.0, 1.0, 0.0, 0.0], [0.4] * 4, [-0.6] * 4)
        report = total_loss(sig, sig, LossWeights(3.0, 1.0))
        assert report.total <= 1e-6
        assert report.l2_ceiling == 0.0 and report.l2_floor == 0.0

    def test_component_arithmetic_corner_heavy(self):
        # bce = ln 2, l2_c = 0.01, l2_f = 0.04; w = (3, 1)
        pred = make_signal(np.full(64, 0.5), np.full(64, 0.5), np.full(64, -0.5))
        truth = make_signal(np.ones(64), np.full(64, 0.4), np.full(64, -0.7))
        report = total_loss(pred, truth, LossWeights(3.0, 1.0))
        assert report.bce_corner == pytest.approx(math.log(2.0), abs=1e-12)
        assert report.l2_ceiling == pytest.approx(0.01, abs=1e-12)
        assert report.l2_floor == pytest.approx(0.04, abs=1e-12)
        # 3 ln 2 + 0.05
        assert report.total == pytest.approx(2.129442, abs=1e-6)

    def test_component_arithmetic_boundary_heavy(self):
        # same components, w = (1, 3): ln 2 + 0.15
        pred = make_signal(np.full(64, 0.5), np.full(64, 0.5), np.full(64, -0.5))
        truth = make_signal(np.ones(64), np.full(64, 0.4), np.full(64, -0.7))
        report = total_loss(pred, truth, LossWeights(1.0, 3.0))
        assert report.total == pytest.approx(0.843147, abs=1e-6)

    def test_width_mismatch(self):
        a = make_signal([0.5] * 4, [0.4] * 4, [-0.4] * 4)
        b = make_signal([0.5] * 8, [0.4] * 8, [-0.4] * 8)
        with pytest.raises(InputError):
            total_loss(a, b, LossWeights(1.0, 1.0))

    def test_accepts_plain_triples(self):
        pred = ([0.5, 0.5], [0.4, 0.4], [-0.4, -0.4])
        truth = ([1.0, 0.0], [0.4, 0.4], [-0.4, -0.4])
        report = total_loss(pred, truth, LossWeights(1.0, 1.0))
        assert report.bce_corner == pytest.approx(math.log(2.0), abs=1e-12)

    def test_total_is_weighted_sum_of_components(self, rng):
        for _ in range(20):
            w = LossWeights(float(rng.uniform(0.1, 5)), float(rng.uniform(0.1, 5)))
            pred = make_signal(
                rng.uniform(0.05, 0.95, 32), rng.uniform(0.1, 1.0, 32), rng.uniform(-1.0, -0.1, 32)
            )
            truth = make_signal(
                rng.integers(0, 2, 32).astype(float),
                rng.uniform(0.1, 1.0, 32),
                rng.uniform(-1.0, -0.1, 32),
            )
            r = total_loss(pred, truth, w)
            assert r.total == pytest.approx(
                w.w1 * r.bce_corner + w.w2 * (r.l2_ceiling + r.l2_floor), abs=1e-12
            )
            assert min(r.bce_corner, r.l2_ceiling, r.l2_floor, r.total) >= 0.0

    def test_zero_only_for_equal_inputs(self, rng):
        truth = make_signal(
            rng.integers(0, 2, 16).astype(float), rng.uniform(0.1, 1.0, 16), rng.uniform(-1.0, -0.1, 16)
        )
        pred = make_signal(np.clip(truth.y_p, EPS, 1 - EPS), truth.y_c, truth.y_f + 0.01)
        assert total_loss(pred, truth, LossWeights(1.0, 1.0)).total > 0.0

    def test_weight_component_swap_invariance(self):
        # Swapping w1 <-> w2 while swapping the bce value and the l2 sum
        # leaves the total unchanged: the objective is bilinear in both.
        pred = make_signal(np.full(8, 0.5), np.full(8, 0.55), np.full(8, -0.45))
        truth = make_signal(np.ones(8), np.full(8, 0.40), np.full(8, -0.60))
        r = total_loss(pred, truth, LossWeights(3.0, 1.0))
        swapped = 1.0 * r.bce_corner + 3.0 * (r.l2_ceiling + r.l2_floor)
        direct = total_loss(pred, truth, LossWeights(1.0, 3.0))
        assert direct.total == pytest.approx(swapped, abs=1e-12)


def central_difference(f, x, i, h):
    lo, hi = x.copy(), x.copy()
    lo[i] -= h
    hi[i] += h
    return (f(hi) - f(lo)) / (2.0 * h)


class TestGradients:
    def test_bce_grad_matches_finite_differences(self, rng):
        p = rng.uniform(0.05, 0.95, 24)
        t = rng.integers(0, 2, 24).astype(float)
        g = bce_mean_grad(p, t)
        for i in range(0, 24, 3):
            fd = central_difference(lambda x: bce_mean(x, t), p, i, 1e-6)
            assert g[i] == pytest.approx(fd, rel=1e-5)

    def test_bce_grad_zero_in_clamped_region(self):
        g = bce_mean_grad(np.array([0.0, 1.0, 0.5]), np.array([1.0, 0.0, 1.0]))
        assert g[0] == 0.0 and g[1] == 0.0 and g[2] != 0.0

    def test_l2_grad_matches_finite_differences(self, rng):
        p = rng.uniform(-1.0, 1.0, 24)
        t = rng.uniform(-1.0, 1.0, 24)
        g = l2_mean_grad(p, t)
        for i in range(0, 24, 3):
            fd = central_difference(lambda x: l2_mean(x, t), p, i, 1e-6)
            assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-12)

    def test_total_grads_match_finite_differences(self, rng):
        w = LossWeights(3.0, 1.0)
        pp = rng.uniform(0.05, 0.95, 16)
        pc = rng.uniform(0.2, 1.2, 16)
        pf = rng.uniform(-1.2, -0.2, 16)
        tp = rng.integers(0, 2, 16).astype(float)
        tc = rng.uniform(0.2, 1.2, 16)
        tf = rng.uniform(-1.2, -0.2, 16)
        gp, gc, gf = total_loss_grads((pp, pc, pf), (tp, tc, tf), w)

        def total_of(arrays):
            return total_loss(arrays, (tp, tc, tf), w).total

        for i in range(0, 16, 5):
            fd_p = central_difference(lambda x: total_of((x, pc, pf)), pp, i, 1e-6)
            fd_c = central_difference(lambda x: total_of((pp, x, pf)), pc, i, 1e-6)
            fd_f = central_difference(lambda x: total_of((pp, pc, x)), pf, i, 1e-6)
            assert gp[i] == pytest.approx(fd_p, rel=1e-5)
            assert gc[i] == pytest.approx(fd_c, rel=1e-5, abs=1e-12)
            assert gf[i] == pytest.approx(fd_f, rel=1e-5, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_gradient_descent_step_reduces_loss(self, seed):
        rng = np.random.default_rng(seed)
        w = LossWeights(3.0, 1.0)
        pred = (
            rng.uniform(0.1, 0.9, 12),
            rng.uniform(0.2, 1.0, 12),
            rng.uniform(-1.0, -0.2, 12),
        )
        truth = (
            rng.integers(0, 2, 12).astype(float),
            rng.uniform(0.2, 1.0, 12),
            rng.uniform(-1.0, -0.2, 12),
        )
        before = total_loss(pred, truth, w).total
        gp, gc, gf = total_loss_grads(pred, truth, w)
        step = 1e-3
        after = total_loss(
            (pred[0] - step * gp, pred[1] - step * gc, pred[2] - step * gf), truth, w
        ).total
        assert after <= before + 1e-12


class TestWeightSchedule:
    def test_first_phase(self):
        w = weight_schedule(0)
        assert (w.w1, w.w2, w.learning_rate) == (3.0, 1.0, 3e-4)

    def test_last_epoch_of_first_phase(self):
        w = weight_schedule(249)
        assert (w.w1, w.w2, w.learning_rate) == (3.0, 1.0, 3e-4)

    def test_second_phase(self):
        w = weight_schedule(250)
        assert (w.w1, w.w2, w.learning_rate) == (1.0, 3.0, 1e-4)

    def test_custom_half_length(self):
        assert weight_schedule(9, epochs_per_half=10).w1 == 3.0
        assert weight_schedule(10, epochs_per_half=10).w1 == 1.0

    def test_negative_epoch_rejected(self):
        with pytest.raises(InputError):
            weight_schedule(-1)

    def test_nonpositive_weights_rejected(self):
        with pytest.raises(InputError):
            LossWeights(0.0, 1.0)
        with pytest.raises(InputError):
            LossWeights(1.0, -2.0)
