import json
import logging
from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from maskfk.core.schedule import get_schedule
from maskfk.services.data import from_probs, product_data, random_data
from maskfk.services.denoiser import TabularDenoiser


@pytest.fixture(autouse=True)
def quiet_logging():
    """Keeps library logging at WARNING unless a test raises it."""
    logging.getLogger("maskfk").setLevel(logging.WARNING)


@pytest.fixture
def schedule():
    """The linear schedule alpha_t = 1 - t with the default time clamp."""
    return get_schedule("linear")


@pytest.fixture
def single_site():
    """One position, two tokens, p = (0.8, 0.2)."""
    return from_probs([0.8, 0.2], V=2, d=1)


@pytest.fixture
def pair_data():
    """A random joint distribution over two binary positions."""
    return random_data(np.random.default_rng(0), V=2, d=2)


@pytest.fixture
def other_pair_data():
    return random_data(np.random.default_rng(1), V=2, d=2)


@pytest.fixture
def product_pair():
    """Independent binary positions with marginals (0.8, 0.2)."""
    return product_data([[0.8, 0.2], [0.8, 0.2]])


@pytest.fixture
def pair_denoiser(pair_data):
    return TabularDenoiser(pair_data)


@pytest.fixture
def runner():
    """Drives the typer application in-process."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path: Path):
    """Writes an experiment document and returns its path.

    The output directory defaults to ``tmp_path / "out"``.
    """

    def write(document: dict, name: str = "config.json") -> Path:
        document = {"output_dir": str(tmp_path / "out"), **document}
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return path

    return write
