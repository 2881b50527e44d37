import numpy as np
import pytest

import covcurv as cc
from covcurv.moments import QuadratureConfig
from covcurv.sweeps import run_sweep

EPS_SWEEP = np.geomspace(0.3, 0.02, 12)


@pytest.fixture(scope="session")
def paraboloid():
    return cc.paraboloid_chart(1.0, 2.0)


@pytest.fixture(scope="session")
def saddle():
    return cc.saddle_codim2_chart()


@pytest.fixture(scope="session")
def unit_sphere():
    return cc.sphere_chart(1.0, 2)


@pytest.fixture(scope="session")
def plane():
    return cc.plane_chart(2, 1)


@pytest.fixture(scope="session")
def quad():
    return QuadratureConfig()


# sweeps are the expensive shared artifacts; compute each (chart, kind) once
@pytest.fixture(scope="session")
def sweep_cache(paraboloid, saddle, unit_sphere, plane):
    charts = {"paraboloid": paraboloid, "saddle": saddle,
              "sphere": unit_sphere, "plane": plane}
    cache = {}

    def get(chart_key: str, kind: str):
        key = (chart_key, kind)
        if key not in cache:
            cache[key] = run_sweep(charts[chart_key], kind, EPS_SWEEP)
        return cache[key]

    return get


def random_sff(rng: np.random.Generator, n: int, k: int) -> cc.SecondFundamentalForm:
    raw = rng.uniform(-2.0, 2.0, size=(k, n, n))
    return cc.SecondFundamentalForm(0.5 * (raw + np.swapaxes(raw, 1, 2)))
