import numpy as np
import pytest

from bmkit import calibrate_curve


@pytest.fixture(scope="session")
def calibrated_curve():
    """The default 456-wide curve tuned so a whole map carries ~77 bits."""
    return calibrate_curve(77.0, 456).to_curve(456)


def random_monotone_curve(rng, n):
    """A random valid fill curve, occasionally with hard 0/1 stretches."""
    probs = np.sort(rng.random(n))
    style = rng.integers(4)
    if style == 1:  # starts impossible
        probs[: rng.integers(1, max(2, n // 4))] = 0.0
    elif style == 2:  # ends certain
        probs[-rng.integers(1, max(2, n // 4)) :] = 1.0
    elif style == 3:  # flat plateau in the middle
        a = rng.integers(0, n - 1)
        b = rng.integers(a + 1, n)
        probs[a:b] = probs[a]
    return probs
