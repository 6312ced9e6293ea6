import numpy as np
import pytest

from haps_deploy import fixtures, scenario as scenario_mod
from haps_deploy.geodesy import ConicalRegion, GeodeticPosition


@pytest.fixture(scope="session")
def demo_region():
    return ConicalRegion(GeodeticPosition(40.706, -74.009, 0.0))


@pytest.fixture(scope="session")
def demo_scenario(tmp_path_factory):
    """Small 5x5 box city with 20 receivers; immutable, shared read-only."""
    cfg = fixtures.write_demo_scenario(str(tmp_path_factory.mktemp("demo")), n_gen=4, n_pop=10)
    return scenario_mod.load_scenario(cfg)


@pytest.fixture(scope="session")
def open_sky_scenario(tmp_path_factory):
    cfg = fixtures.write_open_sky_scenario(str(tmp_path_factory.mktemp("sky")))
    return scenario_mod.load_scenario(cfg)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240917)
