import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from panolayout.detect import (
    MODES,
    BoundarySignal,
    DetectConfig,
    DiscontinuitySource,
    candidates_for_mode,
    detect_2d,
    detect_3d,
    ensemble,
    extract_corner_peaks,
    extract_occlusion_pair,
    postprocess,
)
from panolayout.errors import (
    AmbiguityError,
    InputError,
    ReconstructionError,
)
from panolayout.geometry import CornerKind
from panolayout.metrics import iou_2d
from panolayout.synth import corner_bumps, render_signal

W = 1024


def slope_candidates(cands):
    return [c for c in cands if c.source in (
        DiscontinuitySource.SLOPE2D_FLOOR, DiscontinuitySource.SLOPE2D_CEILING)]


def kink_candidates(cands):
    return [c for c in cands if c.source in (
        DiscontinuitySource.KINK2D_FLOOR, DiscontinuitySource.KINK2D_CEILING)]


class TestBoundarySignal:
    def test_valid(self):
        sig = BoundarySignal(np.zeros(8), np.full(8, 0.5), np.full(8, -0.5))
        assert sig.width == 8

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            BoundarySignal(np.zeros(8), np.full(7, 0.5), np.full(8, -0.5))

    def test_range_violation_names_column(self):
        y_p = np.zeros(8)
        y_p[5] = 1.5
        with pytest.raises(InputError, match="5"):
            BoundarySignal(y_p, np.full(8, 0.5), np.full(8, -0.5))

    def test_boundary_sign_enforced(self):
        with pytest.raises(InputError):
            BoundarySignal(np.zeros(8), np.full(8, -0.5), np.full(8, -0.5))
        with pytest.raises(InputError):
            BoundarySignal(np.zeros(8), np.full(8, 0.5), np.full(8, 0.5))

    def test_arrays_read_only(self):
        sig = BoundarySignal(np.zeros(8), np.full(8, 0.5), np.full(8, -0.5))
        with pytest.raises(ValueError):
            sig.y_p[0] = 1.0

    def test_shifted(self):
        y_p = np.zeros(8)
        y_p[2] = 1.0
        sig = BoundarySignal(y_p, np.full(8, 0.5), np.full(8, -0.5))
        assert sig.shifted(3).y_p[5] == 1.0


class TestExtractCornerPeaks:
    def test_all_zero(self):
        assert extract_corner_peaks(np.zeros(W)) == []

    def test_single_bump(self):
        y = corner_bumps(np.array([100.0]), W) * 0.9
        assert extract_corner_peaks(y) == [100]

    def test_close_peaks_keep_higher(self):
        y = np.zeros(W)
        y[100] = 0.9
        y[108] = 0.7
        assert extract_corner_peaks(y) == [100]

    def test_tie_keeps_lower_column(self):
        y = np.zeros(W)
        y[100] = 0.8
        y[108] = 0.8
        assert extract_corner_peaks(y) == [100]

    def test_below_threshold_dropped(self):
        y = np.zeros(W)
        y[100] = 0.49
        assert extract_corner_peaks(y) == []

    def test_brute_force_agreement(self, rng):
        # independent re-derivation: scan all columns, apply the same rules
        y = np.zeros(W)
        for col in rng.integers(0, W, size=12):
            y = np.maximum(y, corner_bumps(np.array([float(col)]), W) * rng.uniform(0.3, 1.0))
        cfg = DetectConfig()
        got = extract_corner_peaks(y, cfg)
        is_peak = [
            y[i] >= y[(i - 1) % W] and y[i] >= y[(i + 1) % W] and y[i] >= cfg.peak_threshold
            for i in range(W)
        ]
        expect = []
        for i in sorted(range(W), key=lambda i: (-y[i], i)):
            if not is_peak[i]:
                continue
            d = [min(abs(i - k), W - abs(i - k)) for k in expect]
            if all(x >= cfg.min_separation(W) for x in d):
                expect.append(i)
        assert got == sorted(expect)

    def test_monotone_rescale_invariance(self):
        y = np.zeros(W)
        y[100] = 0.9
        y[300] = 0.6
        y[500] = 0.3
        rescaled = 0.5 + (y - 0.5) * 0.8  # monotone, fixes the 0.5 threshold
        assert extract_corner_peaks(y) == extract_corner_peaks(rescaled)


class TestDetect2d:
    def test_constant(self):
        assert detect_2d(np.full(W, -0.5)) == []

    def test_step_slope_candidate(self):
        k = 300
        y = np.where(np.arange(W) <= k, -0.5, -0.6)
        cands = slope_candidates(detect_2d(y))
        assert [c.column for c in cands] == [k, W - 1]
        assert cands[0].strength == pytest.approx(0.1, abs=1e-12)
        assert cands[0].source is DiscontinuitySource.SLOPE2D_FLOOR

    def test_ceiling_source_tag(self):
        k = 300
        y = np.where(np.arange(W) <= k, 0.5, 0.6)
        cands = slope_candidates(detect_2d(y, boundary="ceiling"))
        assert cands[0].source is DiscontinuitySource.SLOPE2D_CEILING

    def test_kink_candidate_near_corner(self):
        # narrow tent: slope flips +0.01 -> -0.01 per column at the apex k
        k = 512
        i = np.arange(W)
        y = -0.8 + 0.01 * np.maximum(0, 100 - np.abs(i - k))
        cands = kink_candidates(detect_2d(y))
        assert any(abs(c.column - k) <= 2 for c in cands)

    def test_smooth_ramp_no_slope_candidates(self):
        # 0.0005 rad/column stays under the 0.015 threshold
        i = np.arange(W)
        y = -0.9 + 0.0005 * np.minimum(i, W - i)
        assert slope_candidates(detect_2d(y)) == []


class TestDetect3d:
    def test_constant(self):
        assert detect_3d(np.full(W, 1.6)) == []

    def test_step_candidate(self):
        k = 300
        d = np.where(np.arange(W) <= k, 1.6, 3.2)
        cands = detect_3d(d)
        assert [c.column for c in cands] == [k, W - 1]
        assert cands[0].strength == pytest.approx(2.0, abs=1e-12)

    def test_smooth_ramp(self):
        # 1.6 -> 3.2 over 200 columns: per-step ratio about 1.0035 < 1.15
        d = np.full(W, 1.6)
        d[:200] = np.linspace(1.6, 3.2, 200)
        d[200:600] = 3.2
        d[600:800] = np.linspace(3.2, 1.6, 200)
        assert detect_3d(d) == []

    def test_nonpositive_rejected(self):
        d = np.full(W, 1.6)
        d[7] = 0.0
        with pytest.raises(InputError, match="7"):
            detect_3d(d)

    def test_scale_invariance_dyadic_exact(self):
        d = np.full(W, 1.6)
        d[100:400] = 3.1
        d[700:900] = 2.2
        base = detect_3d(d)
        for s in (0.5, 2.0, 1024.0):
            scaled = detect_3d(d * s)
            assert [(c.column, c.strength) for c in scaled] == [
                (c.column, c.strength) for c in base
            ]

    @given(st.floats(min_value=0.1, max_value=50.0))
    def test_scale_invariance_columns(self, s):
        d = np.full(256, 1.6)
        d[100:180] = 3.1
        base = detect_3d(d)
        scaled = detect_3d(d * s)
        assert [c.column for c in scaled] == [c.column for c in base]
        for a, b in zip(scaled, base):
            assert a.strength == pytest.approx(b.strength, rel=1e-12)


def _cand(col, strength=1.0):
    from panolayout.detect import DiscontinuityCandidate

    return DiscontinuityCandidate(col, DiscontinuitySource.SLOPE2D_FLOOR, strength)


class TestEnsemble:
    def test_two_close_candidates_merge(self):
        cands = [_cand(100), _cand(102)]
        assert ensemble(cands, W) == [pytest.approx(101.0)]

    def test_weighted_mean(self):
        cands = [_cand(100, 1.0), _cand(102, 3.0)]
        assert ensemble(cands, W) == [pytest.approx(101.5)]

    def test_single_candidate(self):
        assert ensemble([_cand(77)], W) == [pytest.approx(77.0)]

    def test_cyclic_wrap_cluster(self):
        got = ensemble([_cand(1022), _cand(0)], W)
        assert got == [pytest.approx(1023.0)]

    def test_wrap_cluster_mean_position(self):
        got = ensemble([_cand(1020), _cand(0)], W)
        assert got == [pytest.approx(1022.0)]

    def test_distant_candidates_stay_separate(self):
        got = ensemble([_cand(100), _cand(200)], W)
        assert got == [pytest.approx(100.0), pytest.approx(200.0)]

    def test_snap_to_corner_peak(self):
        got = ensemble([_cand(100), _cand(102)], W, corner_peaks=(99,))
        assert got == [pytest.approx(99.0)]

    def test_multi_cluster_split(self):
        cands = [_cand(c) for c in (0, 1, 10, 11, 20, 21)]
        got = ensemble(cands, W)
        assert got == [pytest.approx(0.5), pytest.approx(10.5), pytest.approx(20.5)]

    def test_rejects_bad_width(self):
        with pytest.raises(InputError):
            ensemble([_cand(5)], 0)
        with pytest.raises(InputError):
            ensemble([_cand(70)], 64)


class TestExtractOcclusionPair:
    def test_oracle_l_room(self, l_room_case):
        _, sig, truth = l_room_case
        (i, j) = truth.occlusion_pairs()[0]
        near_t, far_t = truth.corners[i], truth.corners[j]
        near, far = extract_occlusion_pair(sig, near_t.column, DetectConfig())
        assert near.kind is CornerKind.OCCLUSION_NEAR
        assert far.kind is CornerKind.OCCLUSION_FAR
        # near has the larger floor-latitude magnitude (closer wall)
        assert abs(near.floor_lat) > abs(far.floor_lat)

    def test_oblique_wall_endpoints_within_2cm(self, corpus):
        from panolayout.geometry import CameraModel, floor_point
        from panolayout.panorama import col_to_lon

        cam = CameraModel(1.6)
        checked = 0
        for seed in range(5):
            _, sig, truth = corpus[("l_room", seed)]
            grid = truth.grid
            for i, j in truth.occlusion_pairs():
                near_t, far_t = truth.corners[i], truth.corners[j]
                near, far = extract_occlusion_pair(sig, near_t.column, DetectConfig())
                for got, want in ((near, near_t), (far, far_t)):
                    p = floor_point(col_to_lon(got.column % grid.width, grid), got.floor_lat, cam)
                    q = floor_point(col_to_lon(want.column % grid.width, grid), want.floor_lat, cam)
                    assert math.hypot(p[0] - q[0], p[1] - q[1]) < 0.02
                checked += 1
        assert checked == 5

    def test_flat_window_ambiguous(self):
        sig = BoundarySignal(np.zeros(W), np.full(W, 0.5), np.full(W, -0.5))
        with pytest.raises(AmbiguityError):
            extract_occlusion_pair(sig, 100, DetectConfig())


class TestPostprocess:
    @pytest.mark.parametrize("mode", MODES)
    def test_square_all_modes(self, square_case, mode):
        _, sig, truth = square_case
        layout = postprocess(sig, mode=mode)
        assert len(layout.corners) == 4
        assert layout.occlusion_pairs() == []
        assert iou_2d(layout, truth) > 0.999

    def test_l_room_ensemble_has_pair(self, l_room_case):
        _, sig, truth = l_room_case
        layout = postprocess(sig)
        assert len(layout.corners) == len(truth.corners)
        assert len(layout.occlusion_pairs()) == 1

    def test_pentagon_2d_only(self, corpus):
        _, sig, truth = corpus[("pentagon", 0)]
        layout = postprocess(sig, mode="2d_only")
        assert len(layout.corners) == 5
        assert layout.occlusion_pairs() == []

    def test_unknown_mode(self, square_case):
        _, sig, _ = square_case
        with pytest.raises(InputError):
            postprocess(sig, mode="both")

    def test_too_few_corners(self):
        sig = BoundarySignal(np.zeros(W), np.full(W, 0.5), np.full(W, -0.5))
        with pytest.raises(ReconstructionError):
            postprocess(sig)

    def test_deterministic(self, t_room_case):
        _, sig, _ = t_room_case
        a = postprocess(sig)
        b = postprocess(sig)
        assert [(c.column, c.ceil_lat, c.floor_lat, c.kind) for c in a.corners] == [
            (c.column, c.ceil_lat, c.floor_lat, c.kind) for c in b.corners
        ]

    def test_ensemble_is_union_of_modes(self, t_room_case):
        _, sig, _ = t_room_case
        cfg = DetectConfig()
        both = candidates_for_mode(sig, cfg, "ensemble")
        only2d = candidates_for_mode(sig, cfg, "2d_only")
        only3d = candidates_for_mode(sig, cfg, "3d_only")
        key = lambda c: (c.column, c.source, c.strength)
        assert sorted(map(key, both)) == sorted(map(key, only2d + only3d))
        peaks = tuple(extract_corner_peaks(sig.y_p, cfg))
        assert ensemble(both, sig.width, cfg, peaks) == ensemble(
            only2d + only3d, sig.width, cfg, peaks
        )

def test_rotation_equivariance(t_room_case):
    _, sig, _ = t_room_case
    cfg = DetectConfig()
    base = postprocess(sig)
    base_cols = np.array([c.column for c in base.corners])
    rng = np.random.default_rng(99)
    for shift in rng.integers(1, sig.width, size=25):
        rolled = postprocess(sig.shifted(int(shift)))
        cols = np.sort(np.array([c.column for c in rolled.corners]))
        want = np.sort((base_cols + shift) % sig.width)
        assert np.allclose(cols, want, atol=1e-6)
