import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("HYPOTHESIS_EXAMPLES", "60")),
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# Polynomials every end-to-end check runs on: (text, variables, expected indices in the positive fibre)
SUITE = [
    ("x^3 - y^2", ("x", "y"), [1]),
    ("x^2 - y^2", ("x", "y"), [1, 1]),
    ("x^3 - 3*x*y^2", ("x", "y"), [1, 1, 1]),
    ("x^2 + y^2 - z^2", ("x", "y", "z"), [1, 2]),
]


@pytest.fixture(scope="session")
def suite():
    return SUITE
