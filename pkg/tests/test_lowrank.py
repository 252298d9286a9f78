import numpy as np
import pytest

from conftest import geometric_sigmas, spectral_matrix
from kronblur.exceptions import NumericalError, RankDeficiencyError, ValidationError
from kronblur.linalg import cast
from kronblur.lowrank import (
    NU_SENTINEL,
    STOP_BREAKDOWN,
    STOP_HIT_KMAX,
    STOP_NU_BELOW_TOL,
    STOP_NU_ROSE,
    EgkbConfig,
    RsvdConfig,
    auto_rank,
    egkb,
    rsvd,
)


class TestAutoRank:
    def test_rise_truncates_before_the_rise(self):
        assert auto_rank((9, 4, 1, 0.5, 0.7), tau=1e-3) == (4, STOP_NU_ROSE)

    def test_dip_truncates_at_the_dip(self):
        assert auto_rank((9, 4, 2e-4, 1e-4, 5e-5), tau=1e-3) == (3, STOP_NU_BELOW_TOL)

    def test_no_event_falls_back_to_kmax(self):
        assert auto_rank((9, 8, 7, 6, 5), tau=1e-6) == (5, STOP_HIT_KMAX)

    def test_explicit_kmax(self):
        assert auto_rank((9, 8, 7), tau=1e-6, k_max=10) == (10, STOP_HIT_KMAX)

    def test_floor_applies(self):
        # Rise at the second value would give k=1; the floor lifts it.
        assert auto_rank((1, 5, 4, 3), tau=1e-9, k_min=2) == (2, STOP_NU_ROSE)

    def test_first_event_wins(self):
        # The dip at the second value fires before the later rise.
        assert auto_rank((9, 1e-5, 2e-5, 1e-6), tau=1e-3, k_min=1) == (2, STOP_NU_BELOW_TOL)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            auto_rank((), tau=1e-3)


class TestEgkb:
    def test_full_recovery_of_small_diagonal(self):
        svd, trace = egkb(np.diag([5.0, 3.0, 1.0]), EgkbConfig(k_max=3, k_min=3, seed=1))
        assert np.allclose(svd.sigma, [5.0, 3.0, 1.0], rtol=1e-12)
        assert trace.breakdown
        recon = (svd.u * svd.sigma) @ svd.v.T
        assert np.linalg.norm(recon - np.diag([5.0, 3.0, 1.0])) < 1e-12

    def test_rank_one_breakdown_recovers_outer_product(self, rng):
        u = rng.standard_normal(9)
        v = rng.standard_normal(6)
        svd, trace = egkb(np.outer(u, v), EgkbConfig(k_max=5, k_min=1, tau=1e-30, seed=2))
        assert trace.breakdown and trace.chosen_k == 1
        assert svd.sigma[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12)

    def test_exact_rank_collapses_at_rank(self, rng):
        b = spectral_matrix(rng, 40, 30, geometric_sigmas(5, ratio=2.0))
        svd, trace = egkb(b, EgkbConfig(k_max=10, p=2, tau=1e-30, seed=3))
        assert trace.chosen_k == 5
        assert trace.stop_reason == STOP_BREAKDOWN and trace.breakdown
        assert np.allclose(svd.sigma, geometric_sigmas(5, ratio=2.0), rtol=1e-10)

    def test_factorization_identity_and_orthogonality(self, rng):
        b = spectral_matrix(rng, 50, 40, geometric_sigmas(40, ratio=1.15))
        for reorth in ("one-sided", "full"):
            cfg = EgkbConfig(k_max=12, p=2, tau=1e-30, k_min=12, reorth=reorth,
                             keep_basis=True, seed=0)
            _, trace = egkb(b, cfg)
            s_b, q_b, c = trace.s_basis, trace.q_basis, trace.c_mat
            fact = np.linalg.norm(b @ q_b - s_b @ c) / np.linalg.norm(b)
            assert fact < 1e-10
            assert np.linalg.norm(q_b.T @ q_b - np.eye(q_b.shape[1])) < 1e-10

    def test_single_precision_full_reorth_orthogonality(self, rng):
        b = cast(spectral_matrix(rng, 50, 40, geometric_sigmas(40, ratio=1.15)), "single")
        cfg = EgkbConfig(k_max=12, p=2, tau=1e-30, k_min=12, keep_basis=True, seed=0)
        _, trace = egkb(b, cfg)
        q_b, s_b = trace.q_basis, trace.s_basis
        assert q_b.dtype == np.float32
        assert np.linalg.norm(q_b.T @ q_b - np.eye(q_b.shape[1])) < 1e-4
        assert np.linalg.norm(s_b.T @ s_b - np.eye(s_b.shape[1])) < 1e-4

    def test_sigma_recovery_double(self, rng):
        sigmas = geometric_sigmas(30, ratio=2.0)
        b = spectral_matrix(rng, 60, 50, sigmas)
        svd, _ = egkb(b, EgkbConfig(k_max=10, k_min=10, tau=1e-30, seed=1))
        rel = np.abs(svd.sigma[:5] - sigmas[:5]) / sigmas[:5]
        assert rel.max() < 1e-10

    def test_single_agrees_with_double(self, rng):
        sigmas = geometric_sigmas(30, ratio=2.0)
        b = spectral_matrix(rng, 60, 50, sigmas)
        cfg = EgkbConfig(k_max=8, k_min=8, tau=1e-30, seed=1)
        svd_d, _ = egkb(b, cfg)
        svd_s, _ = egkb(cast(b, "single"), cfg)
        assert svd_s.sigma.dtype == np.float32
        rel = np.abs(svd_s.sigma.astype(np.float64) - svd_d.sigma) / svd_d.sigma
        assert rel.max() < 1e-3

    def test_nu_trace_bookkeeping(self, rng):
        b = spectral_matrix(rng, 30, 30, geometric_sigmas(30, ratio=1.3))
        _, trace = egkb(b, EgkbConfig(k_max=6, k_min=6, tau=1e-30, seed=4))
        assert trace.nus[0] == NU_SENTINEL
        assert trace.zetas == pytest.approx(
            [a * t for a, t in zip(trace.alphas, trace.ts)]
        )
        for j in range(1, len(trace.nus)):
            assert trace.nus[j] == pytest.approx(
                np.sqrt(trace.zetas[j] * trace.zetas[j - 1])
            )

    def test_decaying_spectrum_triggers_rule(self, rng):
        # A fast geometric decay drives nu down through the tolerance.
        sigmas = geometric_sigmas(20, ratio=8.0)
        b = spectral_matrix(rng, 40, 40, sigmas)
        svd, trace = egkb(b, EgkbConfig(k_max=15, p=2, tau=1e-6, seed=5))
        assert trace.stop_reason in (STOP_NU_ROSE, STOP_NU_BELOW_TOL)
        assert trace.chosen_k < 15
        assert trace.k_p >= trace.chosen_k
        rel = np.abs(svd.sigma[0] - sigmas[0]) / sigmas[0]
        assert rel < 1e-8

    def test_enlargement_runs_p_past_the_choice(self, rng):
        b = spectral_matrix(rng, 40, 40, geometric_sigmas(20, ratio=8.0))
        _, trace = egkb(b, EgkbConfig(k_max=15, p=3, tau=1e-6, seed=5))
        if not trace.breakdown:
            assert trace.k_p == trace.chosen_k + 3

    def test_custom_start_vector(self, rng):
        b = spectral_matrix(rng, 20, 15, geometric_sigmas(15, ratio=1.5))
        y0 = rng.standard_normal(20)
        svd, _ = egkb(b, EgkbConfig(k_max=5, k_min=5, tau=1e-30), y0=y0)
        assert svd.k == 5
        with pytest.raises(ValidationError):
            egkb(b, EgkbConfig(k_max=3), y0=np.zeros(20))
        with pytest.raises(ValidationError):
            egkb(b, EgkbConfig(k_max=3), y0=np.ones(7))

    def test_zero_matrix_rejected(self):
        with pytest.raises(NumericalError):
            egkb(np.zeros((5, 5)), EgkbConfig(k_max=2))

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            EgkbConfig(k_max=0)
        with pytest.raises(ValidationError):
            EgkbConfig(k_max=3, reorth="both")


class TestRsvd:
    def test_recovers_leading_pair(self):
        svd = rsvd(np.diag([5.0, 3.0, 1.0, 0.01]), RsvdConfig(k=2, p=2, q=1, seed=0))
        assert np.allclose(svd.sigma, [5.0, 3.0], rtol=1e-10)

    def test_sigma_recovery_double(self, rng):
        sigmas = geometric_sigmas(30, ratio=2.0)
        b = spectral_matrix(rng, 60, 50, sigmas)
        svd = rsvd(b, RsvdConfig(k=5, p=8, q=2, seed=2))
        rel = np.abs(svd.sigma - sigmas[:5]) / sigmas[:5]
        assert rel.max() < 1e-10

    def test_single_agrees_with_double(self, rng):
        sigmas = geometric_sigmas(30, ratio=2.0)
        b = spectral_matrix(rng, 60, 50, sigmas)
        cfg = RsvdConfig(k=5, p=8, q=2, seed=2)
        svd_d = rsvd(b, cfg)
        svd_s = rsvd(cast(b, "single"), cfg)
        assert svd_s.sigma.dtype == np.float32
        rel = np.abs(svd_s.sigma.astype(np.float64) - svd_d.sigma) / svd_d.sigma
        assert rel.max() < 1e-3

    def test_wide_matrix_swaps_factors(self, rng):
        sigmas = geometric_sigmas(20, ratio=2.0)
        b = spectral_matrix(rng, 30, 80, sigmas)
        svd = rsvd(b, RsvdConfig(k=4, p=6, q=2, seed=3))
        assert svd.u.shape == (30, 4) and svd.v.shape == (80, 4)
        optimal = np.sqrt(np.sum(sigmas[4:] ** 2))
        assert np.linalg.norm(b - (svd.u * svd.sigma) @ svd.v.T) <= optimal * (1 + 1e-6)
        assert np.linalg.norm(svd.u.T @ svd.u - np.eye(4)) < 1e-12
        assert np.linalg.norm(svd.v.T @ svd.v - np.eye(4)) < 1e-12

    def test_reconstruction_error_near_optimal(self, rng):
        sigmas = geometric_sigmas(25, ratio=2.0)
        b = spectral_matrix(rng, 50, 40, sigmas)
        svd = rsvd(b, RsvdConfig(k=6, p=8, q=2, seed=4))
        err = np.linalg.norm(b - (svd.u * svd.sigma) @ svd.v.T)
        optimal = np.sqrt(np.sum(sigmas[6:] ** 2))
        assert err <= optimal * (1 + 1e-8)

    def test_rank_deficient_sketch_names_column(self, rng):
        b = spectral_matrix(rng, 20, 15, [3.0, 1.0])  # rank 2
        with pytest.raises(RankDeficiencyError) as err:
            rsvd(b, RsvdConfig(k=4, p=2, q=1, seed=5))
        assert err.value.column >= 2

    def test_oversampling_beyond_dim_rejected(self, rng):
        with pytest.raises(ValidationError):
            rsvd(rng.standard_normal((10, 4)), RsvdConfig(k=3, p=2))

    def test_seed_reproducible(self, rng):
        b = spectral_matrix(rng, 30, 20, geometric_sigmas(20, ratio=1.5))
        s1 = rsvd(b, RsvdConfig(k=3, p=3, q=1, seed=7))
        s2 = rsvd(b, RsvdConfig(k=3, p=3, q=1, seed=7))
        assert np.array_equal(s1.sigma, s2.sigma)
        assert np.array_equal(s1.u, s2.u)
