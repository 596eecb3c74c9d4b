import numpy as np
import pytest

from spatialcv.dataset import Column, Dataset, FeatureSchema, CATEGORICAL
from spatialcv.synth import FieldSpec, make_classification


@pytest.fixture(scope="session")
def small_ds():
    """120 autocorrelated points: three fields plus two noise columns."""
    return make_classification(FieldSpec(n=120, seed=5))


@pytest.fixture(scope="session")
def mixed_ds():
    """Numeric plus categorical features, 60 rows."""
    rng = np.random.default_rng(3)
    n = 60
    schema = FeatureSchema((Column("a"), Column("soil", CATEGORICAL, ("clay", "loam", "sand")), Column("b")))
    soil = rng.integers(0, 3, n)
    a = rng.normal(size=n)
    b = rng.normal(size=n)
    eta = a - 0.8 * (soil == 2) + 0.5 * b
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(int)
    return Dataset(schema, np.column_stack([a, soil, b]), rng.uniform(size=(n, 2)), y)


@pytest.fixture
def criterion(request):
    """Records one PASS/FAIL line per acceptance criterion and fails the test if needed."""
    lines = request.config.stash.setdefault(_LINES, [])

    def report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        if not ok:
            pytest.fail(line, pytrace=False)
    return report


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
