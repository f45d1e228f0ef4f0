import functools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "wuwave",
    deadline=None,
    max_examples=int(os.environ.get("WUWAVE_HYPOTHESIS_EXAMPLES", "25")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("wuwave")


@functools.lru_cache(maxsize=None)
def newton_wave(eps: float, n_modes: int = 21):
    from wuwave.stokes import stokes_newton

    return stokes_newton(eps, n_modes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@functools.lru_cache(maxsize=None)
def modulated_state(eps: float = 0.1, strength: float = 0.6, n: int = 256):
    """Admissible initial data far from the Stokes family.

    The envelope carries a phase twist so the state is not time-symmetric,
    which keeps energy fluxes well above round-off.
    """
    from wuwave.initdata import SeedSpec, build_initial_data
    from wuwave.nls import NlsState
    from wuwave.spectral import Grid

    x = Grid(1.0, 128).nodes
    w = strength * (0.6 * np.exp(1j * (x + 0.4)) + 0.4j * np.exp(-1j * x))
    B0 = NlsState(1.0, 0.0, 1j * (1.0 + w))
    return build_initial_data(SeedSpec(B0, eps, newton_wave(eps), n=n, norm_max=1e5))
