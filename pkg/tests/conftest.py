"""Shared fixtures. Meshes and assembled systems are expensive enough at
n >= 4 that the suite builds each size once per session."""

import numpy as np
import pytest

from hmaxwell import assemble_system, build_box_mesh


@pytest.fixture(scope="session")
def mesh_cache():
    cache = {}

    def get(n, length=1.0):
        key = (n, length)
        if key not in cache:
            cache[key] = build_box_mesh(n, length)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def system_cache(mesh_cache):
    cache = {}

    def get(n, kappa=1.0):
        key = (n, kappa)
        if key not in cache:
            cache[key] = assemble_system(mesh_cache(n), kappa=kappa)
        return cache[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
