import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def points(n=1):
    return st.lists(coord, min_size=2 * n + 1, max_size=2 * n + 1).map(np.array)
