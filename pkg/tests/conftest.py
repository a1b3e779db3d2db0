import warnings

import numpy as np
import pytest

from sisio.harness import load_config


@pytest.fixture(scope="session")
def paper_cfg():
    return load_config("paper_example")


@pytest.fixture(scope="session")
def paper_model(paper_cfg):
    return paper_cfg.model


@pytest.fixture(scope="session")
def toy_cfg():
    return load_config("toy_contractive")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_domain_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        yield
