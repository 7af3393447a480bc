import numpy as np
import pytest

from dyntex.autodiff import Tensor, upsample_spatial
from dyntex.errors import ShapeError
from dyntex.pyramid import (
    build_scale_schedule,
    build_training_pyramid,
    downsample_video,
    single_scale_schedule,
    validate_clip,
)
from dyntex.synthetic import SyntheticSpec, make_synthetic


def avg_pool_oracle(frame, factor):
    h, w = frame.shape
    return frame.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


class TestSchedule:
    def test_reference_ladder(self):
        sched = build_scale_schedule(25, 150, 8)
        heights = [h for h, _ in sched.dims]
        assert heights == [25, 32, 42, 54, 70, 90, 116, 150]
        assert sched.r == pytest.approx(6 ** (1 / 7), abs=1e-9)
        assert abs(sched.r - 1.2917) < 1e-3

    def test_two_point_schedule(self):
        sched = build_scale_schedule(25, 150, 2)
        assert [h for h, _ in sched.dims] == [25, 150]
        assert sched.r == pytest.approx(6.0)

    def test_degenerate_endpoints_rejected(self):
        with pytest.raises(ValueError):
            build_scale_schedule(10, 10, 3)

    def test_too_few_scales_rejected(self):
        with pytest.raises(ValueError):
            build_scale_schedule(10, 20, 1)

    def test_monotone_and_exact_endpoints(self):
        for c, f, n in [(12, 48, 3), (8, 100, 6), (25, 150, 8)]:
            sched = build_scale_schedule(c, f, n)
            hs = [h for h, _ in sched.dims]
            assert hs[0] == c and hs[-1] == f
            assert all(a < b for a, b in zip(hs, hs[1:]))

    def test_consecutive_ratios_near_r(self):
        sched = build_scale_schedule(25, 150, 8)
        hs = [h for h, _ in sched.dims]
        for a, b in zip(hs, hs[1:]):
            assert b / a == pytest.approx(sched.r, rel=0.05)  # integer rounding

    def test_aspect_ratio_axes_independent(self):
        sched = build_scale_schedule(10, 40, 3, aspect=2.0)
        assert sched.dims[0] == (10, 20)
        assert sched.dims[-1] == (40, 80)

    def test_single_scale_helper(self):
        sched = single_scale_schedule(32)
        assert sched.dims == ((32, 32),)
        assert sched.num_scales == 1

    def test_growth_factor_discrepancy_documented(self):
        # the derived factor, not the commonly quoted 1.39, must be in the docs
        import dyntex.pyramid as mod

        assert "1.39" in mod.__doc__ and "1.2917" in mod.__doc__


class TestDownsample:
    def test_identity_is_bitwise(self, rng):
        clip = (rng.uniform(-1, 1, size=(3, 4, 6, 6))).astype(np.float32)
        out = downsample_video(clip, 6, 6)
        assert np.array_equal(out, clip)

    def test_constant_frames_preserved(self):
        clip = np.full((3, 2, 4, 4), 0.25, dtype=np.float32)
        out = downsample_video(clip, 2, 2)
        assert np.allclose(out, 0.25, atol=1e-7)

    def test_matches_average_pool_oracle(self, rng):
        clip = rng.uniform(-1, 1, size=(3, 3, 4, 4)).astype(np.float32)
        out = downsample_video(clip, 2, 2)
        for c in range(3):
            for t in range(3):
                oracle = avg_pool_oracle(clip[c, t].astype(np.float64), 2)
                assert np.abs(out[c, t] - oracle).max() <= 1e-6

    def test_fractional_ratio_rows_sum_to_one(self, rng):
        clip = np.full((3, 2, 25, 25), -0.6, dtype=np.float32)
        out = downsample_video(clip, 10, 10)
        assert np.allclose(out, -0.6, atol=1e-6)

    def test_upscale_rejected(self, rng):
        clip = np.zeros((3, 2, 4, 4), dtype=np.float32)
        with pytest.raises(ShapeError):
            downsample_video(clip, 8, 4)

    def test_range_preserved(self, rng):
        clip = rng.uniform(-1, 1, size=(3, 4, 30, 30)).astype(np.float32)
        out = downsample_video(clip, 7, 11)
        assert out.min() >= -1.0 and out.max() <= 1.0


class TestTrainingPyramid:
    def test_reference_settings_shapes(self, rng):
        video = rng.uniform(-1, 1, size=(3, 16, 150, 150)).astype(np.float32)
        sched = build_scale_schedule(25, 150, 8)
        levels = build_training_pyramid(video, sched)
        assert len(levels) == 8
        for (h, w), level in zip(sched.dims, levels):
            assert level.shape == (3, 16, h, w)

    def test_single_scale_passthrough(self, rng):
        video = rng.uniform(-1, 1, size=(3, 5, 12, 12)).astype(np.float32)
        levels = build_training_pyramid(video, single_scale_schedule(12))
        assert len(levels) == 1
        assert np.array_equal(levels[0], video)

    def test_all_levels_in_range(self):
        video = make_synthetic(SyntheticSpec(frames=8, size=48, seed=2))
        levels = build_training_pyramid(video, build_scale_schedule(12, 48, 3))
        for level in levels:
            assert level.min() >= -1.0 and level.max() <= 1.0

    def test_source_too_small_rejected(self, rng):
        video = np.zeros((3, 4, 20, 20), dtype=np.float32)
        with pytest.raises(ShapeError):
            build_training_pyramid(video, build_scale_schedule(12, 48, 3))

    def test_round_trip_error_recorded(self):
        # down to the coarsest and back up: bounded blur损, recorded not pinned
        video = make_synthetic(SyntheticSpec(kind="advected-noise", frames=4, size=150, seed=5))
        down = downsample_video(video, 25, 25)
        up = upsample_spatial(Tensor(down[None]), 150, 150).data[0]
        mae = float(np.abs(up - video).mean())
        print(f"\n25->150 round-trip mean abs error: {mae:.4f}")
        assert mae < 0.5


class TestValidateClip:
    def test_wrong_rank_rejected(self):
        with pytest.raises(ShapeError):
            validate_clip(np.zeros((16, 4, 4), dtype=np.float32))

    def test_out_of_range_rejected(self):
        clip = np.zeros((3, 2, 4, 4), dtype=np.float32)
        clip[0, 0, 0, 0] = 1.5
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            validate_clip(clip)

    def test_nan_rejected(self):
        clip = np.zeros((3, 2, 4, 4), dtype=np.float32)
        clip[1, 1, 1, 1] = np.nan
        with pytest.raises(ValueError, match="finite"):
            validate_clip(clip)
