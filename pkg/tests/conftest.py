import io

import pytest

from bbcount import generate_dataset, ingest
from bbcount.families import GridSpec, family_by_name

# Sweep geometries used by the model and acceptance tests.  Chosen so every
# family yields >= 200 samples and the extrapolation splits stay meaningful
# at desk scale (see tests/test_acceptance.py for the thresholds they feed).
ACCEPTANCE_GRIDS = {
    "linear": (tuple(range(1, 241)),),
    "bilinear": (tuple(range(2, 31, 2)),) * 2,
    "trilinear": (tuple(range(12, 25, 2)),) * 3,
}


def make_series(family_name, axes=None):
    """Generate a family dataset in memory and group it into series."""
    family = family_by_name(family_name)
    if axes is None:
        axes = ACCEPTANCE_GRIDS[family_name]
    buf = io.StringIO()
    generate_dataset(family.program, GridSpec(axes), buf)
    buf.seek(0)
    return ingest(buf)


@pytest.fixture(scope="session")
def linear_series():
    return make_series("linear")


@pytest.fixture(scope="session")
def bilinear_series():
    return make_series("bilinear")


@pytest.fixture(scope="session")
def trilinear_series():
    return make_series("trilinear")
