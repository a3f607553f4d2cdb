import numpy as np
import pytest

from balsub.dataset import Dataset, LevelSpec, gen_toy

# 9-run, 3-factor, 3-level strength-2 orthogonal array (levels 1..3 shifted to codes)
OA9 = np.array([
    [1, 1, 1], [1, 2, 2], [1, 3, 3],
    [2, 1, 2], [2, 2, 3], [2, 3, 1],
    [3, 1, 3], [3, 2, 1], [3, 3, 2],
]) - 1
OA9_SPEC = LevelSpec((3, 3, 3))

# full 5x5 factorial: every level pair of two 5-level factors once
OA25 = np.array([(u, v) for u in range(5) for v in range(5)])
OA25_SPEC = LevelSpec((5, 5))

# the first toy seed whose 1000 points hit all 25 level pairs
TOY_SEED = 25


def random_rows(rng, spec, n):
    return np.stack([rng.integers(0, q, size=n) for q in spec.q], axis=1)


def random_spec(rng, max_p=4, max_q=5):
    p = int(rng.integers(1, max_p + 1))
    return LevelSpec(tuple(int(v) for v in rng.integers(2, max_q + 1, size=p)))


@pytest.fixture
def oa9():
    return OA9.copy()


@pytest.fixture
def oa25():
    return OA25.copy()


@pytest.fixture
def example1():
    """One 5-level covariate, each level twice: X = (1,1,2,2,...,5,5)."""
    return Dataset(np.repeat(np.arange(5), 2)[:, None], LevelSpec((5,)))


@pytest.fixture(scope="session")
def toy():
    data = gen_toy(1000, LevelSpec((5, 5)), TOY_SEED)
    assert len({tuple(r) for r in data.levels.tolist()}) == 25
    return data


# acceptance criterion -> (passed, detail); printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
