import numpy as np
import pytest
from hypothesis import settings

from snspdkit.core import TimingHistogram

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def gaussian_counts(amplitude, mu, sigma, n_bins, bin_width=1.0, origin=0.0, baseline=0.0):
    centers = origin + (np.arange(n_bins) + 0.5) * bin_width
    vals = amplitude * np.exp(-0.5 * ((centers - mu) / sigma) ** 2) + baseline
    return np.rint(vals).astype(np.int64)


@pytest.fixture
def exact_gaussian_hist():
    counts = gaussian_counts(1000.0, 50.0, 10.0, 100)
    return TimingHistogram(bin_width=1.0, origin=0.0, counts=counts)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
