"""Shared helpers: compact synthetic scenes with O(1) magnitudes."""

from __future__ import annotations

import numpy as np
import pytest

from fairbeam.metrics import Beamformers
from fairbeam.kernels import project_per_antenna
from fairbeam.scene import Scene, TargetResponse


def complex_normal(rng, shape=()):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def make_scene(
    rng,
    n_tx=8,
    n_rx=8,
    n_users=3,
    n_targets=2,
    n_clutter=1,
    sigma2_c=1.0,
    sigma2_s=1.0,
    echo_scale=3.0,
):
    """Random compact scene with unit-ish magnitudes (test-friendly scales)."""
    h = complex_normal(rng, (n_tx, n_users))
    responses = [
        TargetResponse(
            amplitude=complex(echo_scale * complex_normal(rng)),
            angle=float(rng.uniform(-2.0, 2.0)),
            is_clutter=i >= n_targets,
        )
        for i in range(n_targets + n_clutter)
    ]
    return Scene(h=h, responses=responses, sigma2_c=sigma2_c, sigma2_s=sigma2_s, n_rx=n_rx)


def make_beamformers(rng, scene, p_tx):
    """Random boundary-feasible precoder plus a random combiner."""
    w = project_per_antenna(
        complex_normal(rng, (scene.n_tx, scene.n_users)), p_tx, mode="boundary"
    )
    f = complex_normal(rng, (scene.n_rx, scene.n_targets))
    return Beamformers(w=w, f=f)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
