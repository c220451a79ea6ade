import numpy as np
import pytest

from blse.embed_store import EmbeddingStore
from blse.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def tiny_world():
    """A small world for fast pipeline and CLI checks."""
    return generate(SynthConfig(vocab_size=300, dim=10, n_train=300, n_dev=100, n_test=100,
                                n_unlabeled=400, n_sentiment_words=20, coverage=0.5, seed=3))


@pytest.fixture(scope="session")
def world():
    """The reference transfer world (vocab 2000, dim 50, sigma 0.01, coverage 0.3)."""
    return generate(SynthConfig())


def make_store(matrix, prefix="w", tag=""):
    matrix = np.asarray(matrix, dtype=float)
    return EmbeddingStore(tuple(f"{prefix}{i}" for i in range(len(matrix))), matrix, tag)


_ACCEPTANCE = pytest.StashKey[list]()


class Criterion:
    """Collects the checks of one acceptance criterion and records a single
    PASS/FAIL line for the terminal summary."""

    def __init__(self, store: list, number: int, title: str):
        self.store, self.number, self.title = store, number, title
        self.checks: list[tuple[str, bool]] = []

    def check(self, text: str, ok) -> bool:
        self.checks.append((text, bool(ok)))
        return bool(ok)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, pytest.skip.Exception):
            self.store.append(f"SKIP criterion {self.number}: {self.title} ({exc})")
            return False
        failed = [t for t, ok in self.checks if not ok]
        ok = exc_type is None and not failed
        details = "; ".join(t for t, _ in self.checks)
        if exc_type is not None:
            details += f"; error: {exc_type.__name__}: {exc}"
        self.store.append(f"{'PASS' if ok else 'FAIL'} criterion {self.number}: {self.title} | {details}")
        if exc_type is None and failed:
            pytest.fail(f"criterion {self.number} failed: " + "; ".join(failed), pytrace=False)
        return False


@pytest.fixture
def criterion(request):
    store = request.config.stash.setdefault(_ACCEPTANCE, [])
    return lambda number, title: Criterion(store, number, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
