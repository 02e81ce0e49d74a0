import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisescope.dataset import GeneratorConfig, generate_structure
from noisescope.errors import (
    DegenerateMaskError,
    InvalidArgumentError,
    NoConvergenceError,
    NoCrossingError,
)
from noisescope.rangefinder import (
    PerturbationTrace,
    RangeFinderConfig,
    estimate_sigma_end,
    estimate_sigma_start,
    find_range,
    gaussian_kl,
    perturb,
    run_sweep,
    segment_object,
    smooth_curve,
    trace_to_csv,
)
from noisescope.seeding import child_rng


class TestPerturb:
    def test_zero_sigma_identity(self):
        img = np.linspace(-1, 1, 16).reshape(4, 4)
        out = perturb(img, 0.0, np.random.default_rng(0))
        assert np.array_equal(out, img)

    def test_unit_sigma_moments(self):
        img = np.zeros((256, 256))
        out = perturb(img, 1.0, np.random.default_rng(1))
        assert abs(out.mean()) < 0.02
        assert abs(out.std() - 1.0) < 0.02

    def test_deterministic(self):
        img = np.zeros((8, 8))
        a = perturb(img, 0.7, np.random.default_rng(5))
        b = perturb(img, 0.7, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_rejects_negative_sigma(self):
        with pytest.raises(InvalidArgumentError):
            perturb(np.zeros((4, 4)), -0.1, np.random.default_rng(0))


class TestGaussianKl:
    def test_identical_unit(self):
        assert gaussian_kl(0.0, 1.0, 0.0, 1.0) == 0.0

    def test_shifted_mean(self):
        assert gaussian_kl(0.0, 1.0, 1.0, 1.0) == pytest.approx(0.5, rel=1e-12)

    def test_identical_nonunit(self):
        assert gaussian_kl(0.0, 2.0, 0.0, 2.0) == 0.0

    def test_nonnegative_random(self):
        rng = np.random.default_rng(2)
        m = rng.normal(0, 3, (10_000, 2))
        s = rng.uniform(0.05, 5, (10_000, 2))
        vals = [gaussian_kl(m[i, 0], s[i, 0], m[i, 1], s[i, 1]) for i in range(10_000)]
        assert min(vals) >= -1e-12

    @given(m=st.floats(-5, 5), s=st.floats(0.01, 10))
    @settings(max_examples=50, deadline=None)
    def test_zero_iff_same(self, m, s):
        assert gaussian_kl(m, s, m, s) == pytest.approx(0.0, abs=1e-12)

    def test_invalid_std(self):
        with pytest.raises(InvalidArgumentError):
            gaussian_kl(0.0, 0.0, 0.0, 1.0)


class TestSegmentObject:
    def test_all_background_raises(self):
        with pytest.raises(DegenerateMaskError):
            segment_object(np.ones((8, 8)))

    def test_matches_generator_mask(self):
        img, mask, _ = generate_structure(child_rng(0, 4))
        assert np.array_equal(segment_object(img, 0.0), mask)

    def test_threshold_below_min_raises(self):
        img = np.zeros((8, 8)) + 0.5
        with pytest.raises(DegenerateMaskError):
            segment_object(img, -1.0)


def tiny_corpus(n_img=6, res=32):
    cfg = GeneratorConfig(resolution=res)
    images, masks = [], []
    for i in range(n_img):
        img, mask, _ = generate_structure(child_rng(5000 + i, 4), cfg)
        images.append(img)
        masks.append(mask)
    return images, masks


class TestRunSweep:
    def test_shape_contract(self):
        images, masks = tiny_corpus(5)
        grid = np.array([0.0, 0.5, 1.0, 2.0])
        trace = run_sweep(images, masks, grid, 200, seed=0)
        assert trace.sw_p.shape == (4, 5)
        assert trace.kl.shape == (4, 5)
        assert np.all(trace.sw_p >= 0) and np.all(trace.sw_p <= 1)
        assert np.all(trace.kl >= 0)
        assert np.array_equal(trace.kl_raw, trace.kl + 0.5)

    def test_two_valued_degenerate_p_zero(self):
        img = np.ones((16, 16))
        img[4:8, 4:8] = -1.0
        mask = img < 0
        trace = run_sweep([img], [mask], np.array([0.0, 0.5]), 100, seed=0)
        assert trace.sw_p[0, 0] == 0.0          # constant object sample
        assert np.isinf(trace.kl[0, 0])         # zero-variance classes

    def test_large_sigma_small_kl(self):
        images, masks = tiny_corpus(6)
        trace = run_sweep(images, masks, np.array([0.0, 10.0, 12.0, 14.0]), 500, seed=1)
        assert trace.mean_kl()[-1] < 0.02

    def test_deterministic_and_order_independent(self):
        images, masks = tiny_corpus(4)
        grid = np.array([0.0, 1.0, 3.0])
        t1 = run_sweep(images, masks, grid, 200, seed=3)
        t2 = run_sweep(images, masks, grid, 200, seed=3)
        assert np.array_equal(t1.sw_p, t2.sw_p)
        # A subset sweep reproduces the corresponding columns exactly.
        t3 = run_sweep(images[:2], masks[:2], grid, 200, seed=3)
        assert np.array_equal(t3.sw_p, t1.sw_p[:, :2])

    def test_rejects_bad_grid(self):
        images, masks = tiny_corpus(2)
        with pytest.raises(InvalidArgumentError):
            run_sweep(images, masks, np.array([1.0, 0.5]), 200, seed=0)


def synthetic_trace(grid, p_curve, kl_curve):
    g = len(grid)
    ones = np.ones((g, 1))
    return PerturbationTrace(
        sigma_grid=np.asarray(grid, dtype=float),
        obj_mean=-ones, obj_std=ones, bg_mean=ones, bg_std=ones,
        sw_p=np.asarray(p_curve, dtype=float)[:, None],
        kl=np.asarray(kl_curve, dtype=float)[:, None])


class TestEstimators:
    def test_sigma_end_crossing(self):
        grid = [0.0, 0.1, 0.2, 0.3, 0.4]
        trace = synthetic_trace(grid, [0.0, 0.001, 0.005, 0.3, 0.5], [9, 5, 3, 1, 0.5])
        assert estimate_sigma_end(trace, 0.01) == pytest.approx(0.2)

    def test_sigma_end_guards_nonmonotone(self):
        grid = [0.0, 0.1, 0.2, 0.3, 0.4]
        trace = synthetic_trace(grid, [0.0, 0.5, 0.004, 0.3, 0.5], [9, 5, 3, 1, 0.5])
        assert estimate_sigma_end(trace, 0.01) == pytest.approx(0.2)

    def test_sigma_end_never_rises(self):
        trace = synthetic_trace([0.0, 0.1, 0.2], [0.0, 0.001, 0.002], [3, 2, 1])
        with pytest.raises(NoCrossingError):
            estimate_sigma_end(trace, 0.01)

    def test_sigma_end_always_normal(self):
        trace = synthetic_trace([0.0, 0.1, 0.2], [0.5, 0.6, 0.7], [3, 2, 1])
        with pytest.raises(NoCrossingError):
            estimate_sigma_end(trace, 0.01)

    def test_sigma_start_sustained_rule(self):
        grid = [0.0, 1.0, 2.0, 3.0, 4.0]
        trace = synthetic_trace(grid, [0, 0, 0.5, 0.5, 0.5], [5.0, 0.01, 0.05, 0.015, 0.01])
        assert estimate_sigma_start(trace, 0.02) == pytest.approx(3.0)

    def test_sigma_start_never_converges(self):
        trace = synthetic_trace([0.0, 1.0, 2.0], [0, 0.5, 0.5], [5.0, 1.0, 0.5])
        with pytest.raises(NoConvergenceError):
            estimate_sigma_start(trace, 0.02)


class TestFindRange:
    def test_reports_range_on_synthetic_corpus(self):
        images, masks = tiny_corpus(8)
        grid = np.round(np.concatenate([np.arange(0, 1.0, 0.05),
                                        np.arange(1.0, 12.01, 0.5)]), 6)
        cfg = RangeFinderConfig(sigma_grid=grid, subsample_n=400, seed=0)
        report = find_range(images, masks, cfg)
        assert 0.0 < report.range.sigma_end < report.range.sigma_start
        assert report.per_image_sigma_end.shape == (8,)
        assert "sigma_end" in report.to_text()

    def test_deterministic(self):
        images, masks = tiny_corpus(4)
        grid = np.round(np.concatenate([np.arange(0, 1.0, 0.1),
                                        np.arange(1.0, 12.01, 1.0)]), 6)
        cfg = RangeFinderConfig(sigma_grid=grid, subsample_n=300, seed=9)
        r1 = find_range(images, masks, cfg)
        r2 = find_range(images, masks, cfg)
        assert r1.range == r2.range
        assert np.array_equal(r1.mean_kl, r2.mean_kl)


class TestHelpers:
    def test_smooth_curve(self):
        y = np.array([0.0, 1.0, 2.0, 3.0])
        assert np.allclose(smooth_curve(y, 3), [1.0, 2.0])

    def test_trace_csv_header(self):
        images, masks = tiny_corpus(2)
        trace = run_sweep(images, masks, np.array([0.0, 1.0]), 200, seed=0)
        lines = trace_to_csv(trace).splitlines()
        assert lines[0].startswith("sigma,mean_p,mean_kl")
        assert len(lines) == 3
