import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nilspec.catalog import EXAMPLE_IDS, load_example
from nilspec.geometry import AdaptedFrame, MetricSpec, SubmersionData
from nilspec.group import LatticeContext


@pytest.fixture(scope="session", params=EXAMPLE_IDS)
def example(request):
    return load_example(request.param)


@pytest.fixture(scope="session")
def example_v():
    return load_example("V")


@pytest.fixture(scope="session")
def example_ii():
    return load_example("II")


@pytest.fixture(scope="session")
def example_iii():
    return load_example("III")


@pytest.fixture(scope="session")
def example_iv():
    return load_example("IV")


@pytest.fixture(scope="session")
def frame_v(example_v):
    return AdaptedFrame(example_v.algebra, MetricSpec(example_v.metric_gram),
                        orthonormal_rows=example_v.orthonormal_basis)


@pytest.fixture(scope="session")
def submersion_v(example_v):
    return SubmersionData(example_v.algebra, MetricSpec(example_v.metric_gram))


@pytest.fixture(scope="session")
def ctx_ii_pair(example_ii):
    return (LatticeContext(example_ii.algebra, example_ii.lattices[0]),
            LatticeContext(example_ii.algebra, example_ii.lattices[1]))
