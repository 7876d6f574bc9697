import numpy as np
import pytest

from hprs.envs import data_path
from hprs.task import load_task, task_from_text
from hprs.trace import make_trace

VARS = {"x": (-1.0, 1.0), "y": (0.0, 2.0), "z": (-3.0, 0.5)}


def random_affine(rng):
    """Text of a signal ``a*x + b*y + c`` whose box enclosure strictly straddles zero."""
    names = rng.choice(list(VARS), size=rng.integers(1, 3), replace=False)
    terms, lo, hi = [], 0.0, 0.0
    for n in names:
        a = float(rng.uniform(0.2, 2.0) * rng.choice([-1, 1]))
        vlo, vhi = VARS[n]
        lo += min(a * vlo, a * vhi)
        hi += max(a * vlo, a * vhi)
        terms.append(f"({a!r})*{n}")
    c = float(rng.uniform(-hi + 0.05 * (hi - lo), -lo - 0.05 * (hi - lo)))
    return " + ".join(terms) + f" + ({c!r})"


def random_task_text(rng, n_safety=None, n_comfort=None, conquer=None):
    n_safety = rng.integers(0, 3) if n_safety is None else n_safety
    n_comfort = rng.integers(0, 4) if n_comfort is None else n_comfort
    conquer = bool(rng.integers(2)) if conquer is None else conquer
    lines = [f"var {n} in [{lo!r}, {hi!r}]" for n, (lo, hi) in VARS.items()]
    for i in range(n_safety):
        lines.append(f'ensure "s{i}": {random_affine(rng)} >= 0')
    kw = "conquer" if conquer else "achieve"
    lines.append(f'{kw} "t": {random_affine(rng)} >= 0')
    for i in range(n_comfort):
        lines.append(f'encourage "c{i}": {random_affine(rng)} >= 0')
    return "\n".join(lines) + "\n"


def random_task(rng, **kw):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return task_from_text(random_task_text(rng, **kw))


def random_state(rng, spread=1.2):
    """Uniform state in a box slightly wider than the declared one (exercises clamping)."""
    out = {}
    for n, (lo, hi) in VARS.items():
        mid, half = (lo + hi) / 2, (hi - lo) / 2 * spread
        out[n] = float(rng.uniform(mid - half, mid + half))
    return out


def random_trace(rng, task, max_len=20, spread=1.2):
    n = int(rng.integers(1, max_len + 1))
    return make_trace([random_state(rng, spread) for _ in range(n)], task.decls)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid_task():
    return load_task(data_path("specs", "griddrive.req"))


@pytest.fixture(scope="session")
def point_task():
    return load_task(data_path("specs", "pointmass.req"))


@pytest.fixture(scope="session")
def safe_driving():
    return load_task(data_path("specs", "safe_driving.req"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
