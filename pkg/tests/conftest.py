import numpy as np
import pytest

from kcontact import ChartSpec, DarbouxPoint, corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_point(chart: ChartSpec, rng, scale: float = 1.0) -> DarbouxPoint:
    return DarbouxPoint(
        scale * (2.0 * rng.random(chart.n) - 1.0),
        scale * (2.0 * rng.random((chart.k, chart.n)) - 1.0),
        scale * (2.0 * rng.random(chart.k) - 1.0),
    )


def corpus_hamiltonians():
    """Every built-in Hamiltonian with its default parameters."""
    out = []
    for name in corpus.EXAMPLE_NAMES:
        ex = corpus.load(name)
        out.append((name, ex.hamiltonian()))
    return out
