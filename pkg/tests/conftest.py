from pathlib import Path

import numpy as np
import pytest

from bootlab.services.lattice import CellSet, LatticeSpec
from bootlab.services.metrics import registry

GOLDEN_DIR = Path(__file__).parent / "golden"


def pytest_addoption(parser):
    parser.addoption(
        "--update-golden", action="store_true", default=False, help="Rewrite the files under tests/golden"
    )


# --- Structures ---
@pytest.fixture
def square8() -> LatticeSpec:
    """[8]^2 with r = 2."""
    return LatticeSpec.uniform(d=2, n=8, r=2)


@pytest.fixture
def square4() -> LatticeSpec:
    return LatticeSpec.uniform(d=2, n=4, r=2)


@pytest.fixture
def thick_spec() -> LatticeSpec:
    """C([4]^2 x [3], 2)."""
    return LatticeSpec.thick(d=2, ell=1, n=4, k=3, r=2)


@pytest.fixture
def slab_spec() -> LatticeSpec:
    """C([3] x [4] x [4], 1)."""
    return LatticeSpec.slab(d=1, n=3, k=(4, 4))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def clean_metrics():
    """Each test starts from empty counters."""
    registry.reset()
    yield
    registry.reset()


# --- Golden files ---
@pytest.fixture
def golden(request):
    """Compare text byte-for-byte with tests/golden/<name>.

    A missing file is recorded on first use; --update-golden rewrites it.
    """
    update = request.config.getoption("--update-golden")

    def check(name: str, text: str) -> None:
        path = GOLDEN_DIR / name
        if update or not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(text.encode("utf-8"))
            return
        assert text.encode("utf-8") == path.read_bytes(), f"output differs from {path}"

    return check


def random_set(spec: LatticeSpec, p: float, rng: np.random.Generator) -> CellSet:
    return CellSet(rng.random(spec.shape) < p)


def diagonal(spec: LatticeSpec) -> CellSet:
    return CellSet.from_cells(spec, [(i,) * spec.d for i in range(1, spec.n + 1)])
