"""Shared fixtures: small deterministic scenes reused across test modules."""

from __future__ import annotations

import pytest

from gsfield import SceneSpec, generate


@pytest.fixture(scope="session")
def tiny_plane():
    """8-frame 32x32 translating plane, 2 px/frame along +x."""
    spec = SceneSpec(
        kind="translating_plane", t_count=8, height=32, width=32,
        velocity=(2.0, 0.0), seed=5,
    )
    return generate(spec)


@pytest.fixture(scope="session")
def tiny_static():
    """4-frame 24x24 zero-velocity plane (every frame identical)."""
    spec = SceneSpec(
        kind="translating_plane", t_count=4, height=24, width=24,
        velocity=(0.0, 0.0), seed=9,
    )
    return generate(spec)
