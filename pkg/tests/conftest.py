from __future__ import annotations

from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rationals(max_num: int = 20, max_den: int = 8):
    return st.builds(Fraction, st.integers(-max_num, max_num), st.integers(1, max_den))


def points(n: int, **kw):
    return st.tuples(*[rationals(**kw) for _ in range(n)])
