import numpy as np
import pytest

from outage_cr.source import JointSource


def random_source(rng, size_x=2, size_y=2) -> JointSource:
    return JointSource.normalized(rng.random((size_x, size_y)) + 1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# hand-built n = 10 codebooks for the encoder/decoder fixtures
X_FIX = np.array([0] * 5 + [1] * 5)
Y_FIX = np.array([1, 0, 0, 0, 0, 1, 1, 1, 1, 1])  # X_FIX with the first symbol flipped
W_PLANT = X_FIX.copy()
W_TWIN = np.array([1, 0, 0, 0, 0, 0, 1, 1, 1, 1])  # also UY-typical with Y_FIX, not UX-typical with X_FIX
W_FILL = 1 - X_FIX
P_UX_FIX = np.diag([0.5, 0.5])
P_UY_FIX = np.array([[0.45, 0.05], [0.05, 0.45]])


def fixture_codebook(layout):
    """CodebookSet from a nested list of words (bins x words per bin)."""
    from outage_cr.protocol import CodebookSet, fallback_word
    from outage_cr.typicality import TypeClass

    words = np.array(layout, dtype=np.int64)
    t = TypeClass((5, 5))
    return CodebookSet(words, fallback_word(t), t, P_UX_FIX, P_UY_FIX)


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
