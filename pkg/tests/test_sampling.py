import numpy as np
import pytest

from sshwalk import (
    FeedbackConfig,
    RateConfig,
    SetLeadConfig,
    build_feedback_generator,
    build_set_generator,
    build_ssh_generator,
    eigendecompose,
    etd_coefficients,
    integrated_etd_eval,
    ks_distance,
    load_ensemble,
    moments_and_cumulants,
    reconstruct_etd,
    reconstruct_integrated_etd,
    sample_ensemble,
    sample_ensemble_from_generator,
    sample_escape_time,
    save_ensemble,
    site_rho0,
    symmetric_rho0,
    trajectory_rng,
)
from sshwalk.sampling import _start_sites

from helpers import naive_dt_walker

RC = RateConfig(gamma_bar=1.0, alpha=-0.5)


class TestStreams:
    # frozen draws pin the stream algorithm (Philox-4x64 keyed by seed, index)
    VECTORS = {
        (0, 0): [0.011546754286331562, 0.24154919656271812,
                 0.11142585551493822, 0.5644146216071337],
        (123456789, 7): [0.13955666489872953, 0.48152753411779603,
                         0.1360189293662175, 0.3391997816291549],
        (2024, 1): [0.05033609065448441, 0.32155526334295037,
                    0.6920776582487284, 0.8250914023194075],
    }

    @pytest.mark.parametrize("key", sorted(VECTORS))
    def test_stream_vectors(self, key):
        rng = trajectory_rng(*key)
        assert np.array_equal(rng.random(4), self.VECTORS[key])

    def test_streams_differ_across_indices(self):
        a = trajectory_rng(42, 0).random(8)
        b = trajectory_rng(42, 1).random(8)
        assert not np.array_equal(a, b)


class TestStartSites:
    def test_symmetric_split_is_deterministic(self):
        assert _start_sites("symmetric_edges", 4, 10).tolist() == [1, 1, 10, 10]
        assert _start_sites("symmetric_edges", 5, 10).tolist() == [1, 1, 1, 10, 10]

    def test_site_spec(self):
        assert _start_sites("site:3", 4, 10).tolist() == [3, 3, 3, 3]
        assert _start_sites(2, 3, 10).tolist() == [2, 2, 2]
        with pytest.raises(ValueError):
            _start_sites("site:11", 4, 10)
        with pytest.raises(ValueError):
            _start_sites("everywhere", 4, 10)


class TestSingleTrajectories:
    def test_single_site_is_exponential(self):
        # escape from one site is Exp(2 gamma_bar)
        times = np.array([
            sample_escape_time(RateConfig(gamma_bar=1.0, alpha=0.2), 1, 1, trajectory_rng(3, i))
            for i in range(20000)
        ])
        mean, se = times.mean(), times.std(ddof=1) / np.sqrt(times.size)
        assert abs(mean - 0.5) < 3 * se

    def test_one_sided_limit_exits_in_one_step(self):
        # gamma_L -> 0: from site 1 the walker can only exit left, so the
        # escape time is a single Exp(2 gamma_bar) holding time
        rc = RateConfig(gamma_bar=1.0, alpha=-(1.0 - 1e-9))
        times = np.array([
            sample_escape_time(rc, 6, 1, trajectory_rng(8, i)) for i in range(2000)
        ])
        mean, se = times.mean(), times.std(ddof=1) / np.sqrt(times.size)
        assert abs(mean - 0.5) < 3 * se

    def test_mean_matches_first_cumulant(self):
        gen = build_ssh_generator(RC, 10)
        model = etd_coefficients(eigendecompose(gen), gen, site_rho0(10, 1))
        kappa1 = moments_and_cumulants(model, 1)["cumulants"][1]
        ens = sample_ensemble(RC, 10, 10000, "site:1", master_seed=7)
        se = ens.times.std(ddof=1) / np.sqrt(ens.i_max)
        assert abs(ens.times.mean() - kappa1) < 3 * se

    def test_start_site_bounds(self):
        with pytest.raises(ValueError):
            sample_escape_time(RC, 5, 6, trajectory_rng(0, 0))


class TestEnsembles:
    def test_sorted_positive_and_sized(self):
        ens = sample_ensemble(RC, 4, 500, "symmetric_edges", master_seed=1)
        assert ens.times.size == ens.i_max == 500
        assert np.all(ens.times > 0.0)
        assert np.all(np.diff(ens.times) >= 0.0)

    def test_bit_reproducible(self):
        a = sample_ensemble(RC, 6, 300, "symmetric_edges", master_seed=5)
        b = sample_ensemble(RC, 6, 300, "symmetric_edges", master_seed=5)
        assert np.array_equal(a.times, b.times)
        assert a.fingerprint == b.fingerprint

    def test_independent_of_parallelism(self):
        serial = sample_ensemble(RC, 6, 400, "symmetric_edges", master_seed=5)
        parallel = sample_ensemble(RC, 6, 400, "symmetric_edges", master_seed=5, threads=3)
        assert np.array_equal(serial.times, parallel.times)

    def test_requires_two_trajectories(self):
        with pytest.raises(ValueError):
            sample_ensemble(RC, 4, 1)

    def test_event_driven_matches_literal_small_dt_walk(self):
        # oracle equivalence: the event-driven scheme is the dt -> 0 limit of
        # the literal per-step walk
        rc = RateConfig(gamma_bar=1.0, alpha=0.3)
        ens = sample_ensemble(rc, 5, 10000, "site:1", master_seed=21)
        naive = naive_dt_walker(rc, 5, 10000, dt=5e-4, seed=22)  # dt * 2 gamma_bar = 1e-3
        se = np.hypot(ens.times.std(ddof=1) / 100.0, naive.std(ddof=1) / 100.0)
        assert abs(ens.times.mean() - naive.mean()) < 3 * se

    def test_sampling_from_feedback_generator(self):
        gen = build_feedback_generator(FeedbackConfig.from_bias(1.0, 0.4), 8)
        ens = sample_ensemble_from_generator(gen, 200, "symmetric_edges", 9)
        assert ens.times.size == 200 and np.all(ens.times > 0)

    def test_sampling_from_general_set_generator(self):
        lead = SetLeadConfig(mu_L=0.7, mu_R=-0.3, T_L=0.5, T_R=2.0,
                             epsilon_dot=0.0, gamma_tilde_L=2.0, gamma_tilde_R=1.0)
        gen = build_set_generator(lead, 3)
        ens = sample_ensemble_from_generator(gen, 200, "site:2", 9)
        assert ens.times.size == 200 and np.all(ens.times > 0)

    def test_save_load_round_trip(self, tmp_path):
        ens = sample_ensemble(RC, 4, 100, "symmetric_edges", master_seed=13)
        path = tmp_path / "ens.bin"
        save_ensemble(path, ens)
        back = load_ensemble(path)
        assert np.array_equal(back.times, ens.times)
        assert back.seed == 13 and back.i_max == 100
        assert back.initial_spec == "symmetric_edges"
        assert back.config == ens.config


class TestReconstruction:
    def test_identity_pipeline(self):
        times = np.array([1.0, 2.0, 3.0, 4.0])
        curve = reconstruct_integrated_etd(times, n_av=1, n_step=1)
        assert np.array_equal(curve.t, [1.0, 2.0, 3.0, 4.0])
        assert np.array_equal(curve.values, [0.25, 0.5, 0.75, 1.0])

    def test_two_point_windows(self):
        times = np.array([1.0, 2.0, 3.0, 4.0])
        curve = reconstruct_integrated_etd(times, n_av=2, n_step=1)
        assert np.allclose(curve.t, [1.5, 2.5, 3.5])
        assert np.allclose(curve.values, [0.375, 0.625, 0.875])

    def test_rejects_short_ensembles(self):
        with pytest.raises(ValueError):
            reconstruct_integrated_etd(np.arange(1.0, 11.0), n_av=5, n_step=5)

    def test_monotone_and_bounded(self):
        ens = sample_ensemble(RC, 10, 5000, "symmetric_edges", master_seed=3)
        curve = reconstruct_integrated_etd(ens, n_av=50, n_step=100)
        assert np.all(curve.values >= 0.0) and np.all(curve.values <= 1.0)
        assert np.all(np.diff(curve.values) >= 0.0)
        assert np.all(np.diff(curve.t) > 0.0)

    def test_density_telescopes_exactly(self):
        ens = sample_ensemble(RC, 6, 3000, "symmetric_edges", master_seed=17)
        cum = reconstruct_integrated_etd(ens, n_av=30, n_step=60)
        dens = reconstruct_etd(ens, n_av=30, n_step=60)
        assert np.all(dens.values >= 0.0)
        integral = np.sum(dens.values * np.diff(cum.t))
        assert abs(integral - (cum.values[-1] - cum.values[0])) < 1e-12

    def test_single_site_density_level(self):
        ens = sample_ensemble(RateConfig(gamma_bar=1.0, alpha=0.1), 1, 20000,
                              "site:1", master_seed=23)
        dens = reconstruct_etd(ens, n_av=100, n_step=500)
        # density near t = 0 approaches 2 gamma_bar
        assert abs(dens.values[0] - 2.0) < 0.2


class TestAgainstAnalyticCdf:
    def setup_method(self):
        gen = build_ssh_generator(RC, 10)
        self.model = etd_coefficients(eigendecompose(gen), gen, symmetric_rho0(10))

    def cdf(self, t):
        return integrated_etd_eval(self.model, t)

    def test_ks_distance_shrinks_like_root_n(self):
        # seed-pinned realization of the O(1/sqrt(i_max)) law
        ds = []
        for i_max in (1000, 10000, 100000):
            ens = sample_ensemble(RC, 10, i_max, "symmetric_edges", master_seed=123)
            ds.append(ks_distance(ens.times, self.cdf))
        assert 0.2 <= ds[1] / ds[0] <= 0.5
        assert 0.2 <= ds[2] / ds[1] <= 0.5

    def test_reconstructed_curve_tracks_cdf(self):
        ens = sample_ensemble(RC, 10, 20000, "symmetric_edges", master_seed=31)
        curve = reconstruct_integrated_etd(ens, n_av=100, n_step=200)
        dev = np.max(np.abs(curve.values - self.cdf(curve.t)))
        assert dev < 0.02
