"""Scene generation: steering vectors, path loss, fading, reproducibility."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairbeam.scene import (
    SystemConfig,
    config_digest,
    derive_seed,
    generate_scene,
    path_loss_amplitude,
    rician_fading_parts,
    steering_vector,
)


class TestSteeringVector:
    def test_broadside_is_uniform(self):
        np.testing.assert_allclose(steering_vector(0.0, 4), np.full(4, 0.5), atol=1e-15)

    def test_endfire_two_elements(self):
        np.testing.assert_allclose(
            steering_vector(np.pi / 2, 2),
            np.array([1.0, -1.0]) / np.sqrt(2.0),
            atol=1e-12,
        )

    def test_thirty_degrees_three_elements(self):
        # sin(pi/6) = 1/2, so element m carries phase pi*m/2:
        # (1, i, -1) / sqrt(3), checked element by element
        expected = np.array([1.0, 1.0j, -1.0]) / np.sqrt(3.0)
        np.testing.assert_allclose(steering_vector(np.pi / 6, 3), expected, atol=1e-12)

    def test_elementwise_formula(self):
        angle, n = 0.7321, 5
        vec = steering_vector(angle, n)
        for m in range(n):
            expected = np.exp(1j * np.pi * m * np.sin(angle)) / np.sqrt(n)
            assert abs(vec[m] - expected) < 1e-14

    @given(
        angle=st.floats(-10.0, 10.0, allow_nan=False),
        n=st.integers(min_value=1, max_value=64),
    )
    def test_unit_norm(self, angle, n):
        assert abs(np.linalg.norm(steering_vector(angle, n)) - 1.0) < 1e-12

    def test_rejects_empty_array(self):
        with pytest.raises(ValueError):
            steering_vector(0.0, 0)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_amplitude(-30.0, 1.0, 3.0) == pytest.approx(
            math.sqrt(1e-3), rel=1e-12
        )

    def test_identity_case(self):
        assert path_loss_amplitude(0.0, 1.0, 2.0) == pytest.approx(1.0, rel=1e-12)

    def test_hundred_meters(self):
        # sqrt(10^-3 * 100^-3) evaluated directly
        assert path_loss_amplitude(-30.0, 100.0, 3.0) == pytest.approx(
            math.sqrt(1e-3 * 1e-6), rel=1e-12
        )

    @pytest.mark.parametrize("distance", [0.0, -5.0])
    def test_rejects_nonpositive_distance(self, distance):
        with pytest.raises(ValueError):
            path_loss_amplitude(-30.0, distance, 3.0)


class TestSystemConfig:
    def test_defaults_are_valid(self):
        cfg = SystemConfig()
        assert cfg.n_tx == cfg.n_rx == 16
        assert cfg.n_users == 4 and cfg.n_targets == 2 and cfg.n_clutter == 2
        assert cfg.p_tx == pytest.approx(100.0 * cfg.sigma2_c)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_tx": 0},
            {"n_users": -1},
            {"n_clutter": -2},
            {"p_tx": 0.0},
            {"sigma2_c": -1e-3},
            {"delta": -0.5},
            {"angle_lo": 1.0, "angle_hi": 1.0},
            {"seed": -1},
            {"seed": 2**64},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            SystemConfig(**kwargs)

    def test_file_round_trip(self, tmp_path):
        cfg = SystemConfig(n_users=6, delta=2.5, seed=99, normalize_path_loss=False)
        path = tmp_path / "system.cfg"
        cfg.to_file(path)
        assert SystemConfig.from_file(path) == cfg

    def test_file_comments_and_blanks(self, tmp_path):
        path = tmp_path / "system.cfg"
        path.write_text("# comment\n\nn_users = 7  # trailing\nseed = 3\n")
        cfg = SystemConfig.from_file(path)
        assert cfg.n_users == 7 and cfg.seed == 3

    def test_file_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "system.cfg"
        path.write_text("n_userz = 7\n")
        with pytest.raises(ValueError, match="unknown configuration key"):
            SystemConfig.from_file(path)

    def test_file_rejects_bad_value(self, tmp_path):
        path = tmp_path / "system.cfg"
        path.write_text("n_users = quattro\n")
        with pytest.raises(ValueError, match="bad value"):
            SystemConfig.from_file(path)

    def test_digest_tracks_content(self):
        a, b = SystemConfig(), SystemConfig(seed=1)
        assert config_digest(a) != config_digest(b)
        assert config_digest(a) == config_digest(SystemConfig())


class TestSeedDerivation:
    def test_deterministic_and_distinct(self):
        seeds = [derive_seed(42, r) for r in range(100)]
        assert seeds == [derive_seed(42, r) for r in range(100)]
        assert len(set(seeds)) == 100
        assert all(0 <= s < 2**64 for s in seeds)

    def test_master_seed_matters(self):
        assert derive_seed(1, 0) != derive_seed(2, 0)


class TestGenerateScene:
    def test_same_seed_bit_identical(self):
        cfg = SystemConfig(seed=11)
        a, b = generate_scene(cfg), generate_scene(cfg)
        assert np.array_equal(a.h, b.h)
        assert a.responses == b.responses

    def test_shapes_and_ordering(self):
        cfg = SystemConfig(seed=5)
        scene = generate_scene(cfg)
        assert scene.h.shape == (16, 4)
        assert scene.n_responses == 4 and scene.n_targets == 2
        assert [r.is_clutter for r in scene.responses] == [False, False, True, True]
        assert all(r.amplitude != 0 for r in scene.responses)

    def test_entities_stable_under_user_count(self):
        base = SystemConfig(seed=17, n_users=2)
        wide = replace(base, n_users=4)
        a, b = generate_scene(base), generate_scene(wide)
        np.testing.assert_array_equal(a.h, b.h[:, :2])
        assert a.responses == b.responses

    def test_los_limit_aligns_with_steering(self):
        # overwhelming Rician factor leaves only the steering-aligned part,
        # recognizable by constant element modulus and a constant
        # element-to-element phase ratio
        cfg = SystemConfig(seed=3, rician_db=90.0)
        scene = generate_scene(cfg)
        for k in range(scene.n_users):
            h = scene.h[:, k]
            moduli = np.abs(h)
            assert np.max(np.abs(moduli / moduli.mean() - 1.0)) < 1e-4
            ratios = h[1:] / h[:-1]
            assert np.max(np.abs(ratios - ratios[0])) < 1e-4

    def test_literal_mode_channel_scale(self):
        # raw-gain mode: ||h_k|| sits in a broad band around the per-user
        # path-loss amplitude times sqrt(n_tx)
        cfg = SystemConfig(seed=23, normalize_path_loss=False)
        scene = generate_scene(cfg)
        norms = np.linalg.norm(scene.h, axis=0)
        scale = path_loss_amplitude(cfg.pl_ref_db, cfg.dist_c_base, cfg.pl_exp_c)
        ratio = norms / (scale * math.sqrt(cfg.n_tx))
        assert np.all(ratio > 0.05) and np.all(ratio < 20.0)

    def test_normalized_mode_near_unit_energy(self):
        cfg = SystemConfig(seed=29)
        norms = []
        for r in range(100):
            scene = generate_scene(replace(cfg, seed=derive_seed(cfg.seed, r)))
            norms.extend(np.linalg.norm(scene.h, axis=0) ** 2)
        assert 0.5 < float(np.mean(norms)) < 2.0

    def test_distance_clamped_above_one_meter(self):
        cfg = SystemConfig(seed=7, dist_c_base=0.01, dist_c_spread=0.0,
                           normalize_path_loss=False)
        scene = generate_scene(cfg)
        cap = path_loss_amplitude(cfg.pl_ref_db, 1.0, cfg.pl_exp_c)
        small_scale = np.linalg.norm(scene.h, axis=0) / cap
        # without the 1 m floor the gain would exceed the cap by 10^6
        assert np.all(small_scale < 1e3)

    def test_response_matrices_rank_one_unit_frobenius(self):
        scene = generate_scene(SystemConfig(seed=13))
        for resp, g in zip(scene.responses, scene.g_stack):
            s = np.linalg.svd(g, compute_uv=False)
            assert s[1] / s[0] < 1e-12
            assert abs(np.linalg.norm(g, "fro") - abs(resp.amplitude)) < 1e-10 * abs(
                resp.amplitude
            )


class TestRicianSplit:
    def test_power_ratio_single_antenna(self):
        # scalar channel: the LoS/diffuse energy ratio estimates the Rician
        # factor directly
        rician_db = 3.0
        expected = 10.0 ** (rician_db / 10.0)
        rng = np.random.default_rng(123)
        los_p, nlos_p = 0.0, 0.0
        for _ in range(10_000):
            los, nlos = rician_fading_parts(rng, 0.4, rician_db, 1)
            los_p += np.sum(np.abs(los) ** 2)
            nlos_p += np.sum(np.abs(nlos) ** 2)
        assert los_p / nlos_p == pytest.approx(expected, rel=0.05)

    def test_power_ratio_array(self):
        # with unit-norm steering and CN(0, I) diffuse fading the total
        # energy ratio is R / n
        rician_db, n = 3.0, 16
        expected = 10.0 ** (rician_db / 10.0) / n
        rng = np.random.default_rng(456)
        los_p, nlos_p = 0.0, 0.0
        for _ in range(10_000):
            los, nlos = rician_fading_parts(rng, -0.9, rician_db, n)
            los_p += np.sum(np.abs(los) ** 2)
            nlos_p += np.sum(np.abs(nlos) ** 2)
        assert los_p / nlos_p == pytest.approx(expected, rel=0.05)
