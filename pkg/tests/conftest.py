import numpy as np
import pytest

from vqsemcom import codec, pipeline


@pytest.fixture(scope="session")
def small_codebook():
    """64-entry codebook trained on a handful of synthetic images."""
    vecs = pipeline.training_vectors(pipeline.synthetic_corpus(4, seed=11), 4)
    return codec.train_codebook(vecs, 64, max_iters=20, seed=3)


@pytest.fixture(scope="session")
def full_codebook():
    """1024 entries, as in the reference system; shared by the acceptance runs."""
    vecs = pipeline.training_vectors(pipeline.synthetic_corpus(12, seed=1), 4)
    return codec.train_codebook(vecs, 1024, max_iters=30, seed=0)


@pytest.fixture(scope="session")
def test_image():
    return pipeline.synthetic_image(pipeline.stage_seed(0, "test-image"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
