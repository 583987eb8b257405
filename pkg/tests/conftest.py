import numpy as np
import pytest

from ciim.core import KernelParams, PerturbationSources, RiskState


@pytest.fixture
def params():
    return KernelParams()


def random_state(rng, r_low=0.011, r_high=1.0, tick=0):
    """A valid random state with resilience above the collapse band by
    default; pass r_low below r_min to include collapse states."""
    return RiskState(
        t=tick,
        threat=float(rng.uniform()),
        vulnerability=float(rng.uniform()),
        exposure=float(rng.uniform()),
        resilience=float(rng.uniform(r_low, r_high)),
        sources=PerturbationSources(*(float(v) for v in rng.uniform(size=4))),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
