import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kronblur.blurmodel import Psf, build_blur_matrix, make_test_image
from kronblur.cgls import CglsConfig
from kronblur.exceptions import ValidationError
from kronblur.kronop import assemble
from kronblur.linalg import svd_small, vec
from kronblur.rearrange import BlockScheme, rearrange
from kronblur.regularizers import diff_x, diff_y
from kronblur.splitbregman import (
    SbConfig,
    lambda_grid,
    sb_run,
    shrink,
    sweep,
    update_d_aniso,
    update_d_iso,
    update_g,
)


class TestShrink:
    def test_identities(self):
        assert shrink(3.0, 1.0) == 2.0
        assert shrink(-3.0, 1.0) == -2.0
        assert shrink(0.5, 1.0) == 0.0

    def test_vectorized(self):
        out = shrink(np.array([2.0, -2.0, 0.3, 0.0]), 1.0)
        assert np.array_equal(out, [1.0, -1.0, 0.0, 0.0])

    @given(w=st.floats(-1e6, 1e6), v=st.floats(0.0, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_scalar_properties(self, w, v):
        out = float(shrink(w, v))
        assert abs(out) == pytest.approx(max(abs(w) - v, 0.0))
        if abs(w) <= v:
            assert out == 0.0
        else:
            assert np.sign(out) == np.sign(w)
        assert abs(out - w) <= v + 1e-9 * abs(w)

    def test_bulk_properties(self, rng):
        w = rng.standard_normal(10_000) * 10
        v = 0.7
        out = shrink(w, v)
        dead = np.abs(w) <= v
        assert not out[dead].any()
        assert np.array_equal(np.sign(out[~dead]), np.sign(w[~dead]))
        assert np.allclose(np.abs(out[~dead]), np.abs(w[~dead]) - v)


class TestDUpdates:
    def test_aniso_is_componentwise_shrink(self, rng):
        cx = rng.standard_normal(50)
        cy = rng.standard_normal(50)
        dx, dy = update_d_aniso(cx, cy, 2.0, 4.0)
        assert np.array_equal(dx, shrink(cx, 0.5))
        assert np.array_equal(dy, shrink(cy, 0.25))

    def test_iso_example(self):
        dx, dy = update_d_iso(np.array([3.0]), np.array([4.0]), 1.0, 1.0)
        assert dx[0] == pytest.approx(2.4)
        assert dy[0] == pytest.approx(3.2)

    def test_iso_shrinks_magnitude(self, rng):
        cx = rng.standard_normal(100)
        cy = rng.standard_normal(100)
        gamma = 1.5
        dx, dy = update_d_iso(cx, cy, gamma, gamma)
        s = np.hypot(cx, cy)
        expected = np.maximum(s - 1.0 / gamma, 0.0)
        assert np.allclose(np.hypot(dx, dy), expected)

    def test_iso_zero_magnitude(self):
        dx, dy = update_d_iso(np.zeros(3), np.zeros(3), 1.0, 1.0)
        assert not dx.any() and not dy.any()

    def test_iso_reduces_to_shrink_when_one_direction_vanishes(self, rng):
        cx = rng.standard_normal(20)
        dx, dy = update_d_iso(cx, np.zeros(20), 2.0, 2.0)
        assert np.allclose(dx, shrink(cx, 0.5))
        assert not dy.any()

    def test_dead_zone(self):
        dx, dy = update_d_iso(np.array([0.3]), np.array([0.4]), 1.0, 1.0)
        assert dx[0] == 0.0 and dy[0] == 0.0
        assert shrink(0.9, 1.0) == 0.0

    def test_update_g(self, rng):
        n = 4
        x = rng.standard_normal(n * n)
        gx = rng.standard_normal(n * (n - 1))
        gy = rng.standard_normal(n * (n - 1))
        dx = rng.standard_normal(n * (n - 1))
        dy = rng.standard_normal(n * (n - 1))
        nx, ny = update_g(gx, gy, x, dx, dy, n)
        assert np.allclose(nx, gx + diff_x(x, n) - dx)
        assert np.allclose(ny, gy + diff_y(x, n) - dy)


class TestSbConfig:
    def test_gamma(self):
        cfg = SbConfig(lam=0.1150, beta=0.0066)
        assert cfg.gamma == pytest.approx(0.1150**2 / 0.0066)

    def test_from_gamma(self):
        cfg = SbConfig.from_gamma(0.1150, 2.0)
        assert cfg.beta == pytest.approx(0.1150**2 / 2.0)
        assert cfg.gamma == pytest.approx(2.0)

    def test_validation(self):
        with pytest.raises(ValidationError):
            SbConfig(lam=0.1, beta=0.01, variant="diagonal")
        with pytest.raises(ValidationError):
            SbConfig(lam=-1.0, beta=0.1)


class TestSbRun:
    def test_identity_operator_recovers_observation(self):
        n = 12
        b = vec(make_test_image(n))
        cfg = SbConfig(lam=1.0, beta=1e-4, tau=1e-6, l_max=40)
        out = sb_run(np.eye(n * n), b, cfg, x_true=b)
        assert out.re_history[-1] < 1e-3
        assert out.rc_history[-1] < 1e-6 or out.outer_iters == 40

    def test_both_variants_deblur(self, rng):
        n = 16
        psf = Psf(np.array([[0.0, 0.2, 0.0], [0.2, 0.2, 0.2], [0.1, 0.1, 0.0]]))
        a = build_blur_matrix(psf, n)
        x_true = vec(make_test_image(n))
        b = a @ x_true
        noise = rng.standard_normal(b.size)
        b = b + 0.03 * np.linalg.norm(b) / np.linalg.norm(noise) * noise
        re_observed = np.linalg.norm(b - x_true) / np.linalg.norm(x_true)
        for variant in ("anisotropic", "isotropic"):
            cfg = SbConfig(lam=0.12, beta=0.007, variant=variant, tau=1e-3, l_max=50)
            out = sb_run(a, b, cfg, x_true=x_true)
            assert out.re_history[-1] < re_observed
            assert out.isnr_history[-1] > 0
            assert out.iota_total == sum(out.cgls_iters)

    def test_dense_and_kron_paths_agree(self, rng):
        n = 8
        psf = Psf(rng.random((3, 3)) + 0.05)
        a = build_blur_matrix(psf, n)
        scheme = BlockScheme.square_image(n)
        op = assemble(svd_small(rearrange(a, scheme)), scheme)  # full rank, exact
        x_true = vec(make_test_image(n))
        b = a @ x_true
        cfg = SbConfig(
            lam=0.1, beta=0.005, tau=0.0, l_max=5,
            cgls=CglsConfig(i_max=12, tau=0.0),
        )
        dense_out = sb_run(a, b, cfg)
        kron_out = sb_run(op, b, cfg)
        assert np.linalg.norm(dense_out.x - kron_out.x) < 1e-8
        assert dense_out.cgls_iters == kron_out.cgls_iters

    def test_warm_start_runs(self, rng):
        n = 8
        a = build_blur_matrix(Psf(np.ones((3, 3))), n)
        b = a @ vec(make_test_image(n))
        cfg = SbConfig(lam=0.1, beta=0.01, l_max=5, warm_start=True)
        out = sb_run(a, b, cfg)
        assert out.outer_iters >= 1

    def test_rejects_non_square(self, rng):
        with pytest.raises(ValidationError):
            sb_run(rng.standard_normal((10, 9)), np.ones(10), SbConfig(lam=1, beta=1))

    def test_rejects_non_square_image_size(self, rng):
        with pytest.raises(ValidationError):
            sb_run(rng.standard_normal((10, 10)), np.ones(10), SbConfig(lam=1, beta=1))


class TestSweep:
    def test_lambda_grid_endpoints_and_spacing(self):
        grid = lambda_grid(1e-3, 1.0, 20)
        assert grid[0] == pytest.approx(1e-3, rel=1e-12)
        assert grid[-1] == pytest.approx(1.0, rel=1e-12)
        ratios = grid[1:] / grid[:-1]
        assert np.allclose(ratios, ratios[0])

    def test_default_count(self):
        assert lambda_grid(0.01, 0.1).size == 100

    def test_records(self, rng):
        n = 8
        a = build_blur_matrix(Psf(np.ones((3, 3))), n)
        x_true = vec(make_test_image(n))
        b = a @ x_true
        records = sweep(a, b, gamma=2.0, lam_lo=0.05, lam_hi=0.5, count=3,
                        x_true=x_true, l_max=3)
        assert len(records) == 3
        for rec in records:
            assert rec["beta"] == pytest.approx(rec["lam"] ** 2 / 2.0)
            assert np.isfinite(rec["re"])
            assert rec["iota_total"] > 0

    def test_records_without_truth(self, rng):
        n = 8
        a = build_blur_matrix(Psf(np.ones((3, 3))), n)
        b = a @ vec(make_test_image(n))
        records = sweep(a, b, gamma=2.0, lam_lo=0.05, lam_hi=0.5, count=2, l_max=2)
        assert all(np.isnan(rec["re"]) for rec in records)
