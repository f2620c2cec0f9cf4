import os

import numpy as np
import pytest

import hamfactor as hf

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


def make_instance(n, n_components=None, seed=0, coulomb=1.0):
    spec = hf.SyntheticSpec(
        n_orbitals=n,
        n_components=n_components if n_components is not None else n,
        rng_seed=seed,
        coulomb_weight=coulomb,
    )
    return hf.synthesize_instance(spec)


def make_one_body(g, seed=0, e_nuc=0.0):
    n = g.n_orbitals
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return hf.derive_one_body(0.5 * (a + a.T), g, e_nuc)


@pytest.fixture
def small_instance():
    g, comps = make_instance(4, seed=7)
    return g, comps


@pytest.fixture
def h2_path():
    return data_path("h2_sto3g.fcidump")
