"""Shared fixtures: small synthesized maps, a problem factory, and a seeded
co-inference case generator reused by the unit and acceptance suites."""

import numpy as np
import pytest

from skyplan import (
    ChannelModel,
    InferenceModelProfile,
    LinkProfile,
    PlacementProblem,
    Position3D,
    QosBudget,
    SynthesisConfig,
    default_beams,
    synthesize,
)

# Scaled-down campaign geometry used across the suite: the full-size layout
# shrunk so the elevation-aligned ring falls inside a 200x120 m area.
AREA = (200.0, 120.0)
ALTITUDE = 31.0
BS = Position3D(0.0, 60.0, 0.0)


@pytest.fixture(scope="session")
def beams():
    return default_beams()


@pytest.fixture(scope="session")
def shadowed_channel():
    return ChannelModel(shadowing_sigma=8.0)


@pytest.fixture(scope="session")
def clean_channel():
    return ChannelModel(shadowing_sigma=0.0)


def make_map(channel, beams, seed=0, area=AREA, altitude=ALTITUDE, bs=BS,
             resolution=1.0, **kwargs):
    cfg = SynthesisConfig(
        channel=channel, beams=beams, bs_position=bs, area=area,
        resolution=resolution, altitude=altitude, seed=seed, **kwargs,
    )
    return synthesize(cfg)


def make_problem(channel, beams, uavs=1, area=AREA, altitude=ALTITUDE, bs=BS,
                 **kwargs):
    return PlacementProblem(
        uav_count=uavs,
        area=(0.0, area[0], 0.0, area[1]),
        altitude=altitude,
        channel=channel,
        beams=beams,
        bs_position=bs,
        **kwargs,
    )


@pytest.fixture(scope="session")
def small_map(shadowed_channel, beams):
    """80x50 m shadowed map, cheap enough for exhaustive checks."""
    return make_map(shadowed_channel, beams, seed=0, area=(80.0, 50.0),
                    bs=Position3D(0.0, 25.0, 0.0))


@pytest.fixture(scope="session")
def campaign_map(shadowed_channel, beams):
    """Full 200x120 m shadowed map shared by the heavier tests."""
    return make_map(shadowed_channel, beams, seed=0)


def random_plan_case(seed):
    """Seeded (profile, link, budget) draw for optimizer-vs-oracle checks."""
    rng = np.random.default_rng(seed)
    layers = 12
    profile = InferenceModelProfile(
        flops_per_layer=list(rng.uniform(0.5e9, 2e9, size=layers)),
        activation_bits_per_boundary=sorted(
            rng.uniform(2e5, 8e6, size=layers + 1), reverse=True
        ),
        q_max=0.40,
        gamma=1.5,
    )
    link = LinkProfile(
        bandwidth=20e6,
        channel_gain=10.0 ** rng.uniform(-10.2, -9.2),
        noise_psd=-174.0,
        p_min=0.05,
        p_max=1.0,
        f_min=0.2e9,
        f_max=2e9,
        f_cloud=20e9,
    )
    budget = QosBudget(
        t_max=float(rng.uniform(1.0, 3.0)),
        e_max=float(rng.uniform(0.8, 4.0)),
        q_min=float(rng.uniform(0.1, 0.35)),
    )
    return profile, link, budget
