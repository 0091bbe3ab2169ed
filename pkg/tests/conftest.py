import numpy as np
import pytest

from perturbseries import make_instance
from perturbseries.verify import random_instance

EPS = 0.1
LAM_HAT_1 = (3 + np.sqrt(1 + 4 * EPS ** 2)) / 2


@pytest.fixture
def two_by_two():
    """Sigma = diag(2, 1), E = [[0, eps], [eps, 0]] with eps = 0.1."""
    return make_instance(np.diag([2.0, 1.0]), [[0.0, EPS], [EPS, 0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_symmetric(rng, d, scale=1.0):
    G = rng.standard_normal((d, d))
    return scale * 0.5 * (G + G.T)


def random_model_matrix(rng, d, spread=1.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = np.sort(rng.exponential(size=d))[::-1] * spread + np.arange(d)[::-1] * 0.05
    S = (Q * lam) @ Q.T
    return 0.5 * (S + S.T)


def generated(seed, count, d=15, targets=(0.05, 0.2, 0.45)):
    return [random_instance(seed, i, d, targets[i % len(targets)]) for i in range(count)]


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def acceptance_line(criterion: int, title: str, ok: bool, detail: str = "") -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {title}" + (f" -- {detail}" if detail else "")
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
