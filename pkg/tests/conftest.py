"""Shared fixtures."""

from __future__ import annotations

import pytest


@pytest.fixture(scope="session")
def gscale():
    from dccast_sim.topology import build_gscale

    return build_gscale()
