from pathlib import Path

import pytest

from blowup_lab.config import load_config, parse_config
from blowup_lab.pipeline import refine, run_experiment

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BUMP_LEVELS = 3


@pytest.fixture(scope="session")
def desk_cfg():
    return load_config(CONFIGS / "desk_flat.ini")


@pytest.fixture(scope="session")
def desk_run(desk_cfg):
    return run_experiment(desk_cfg)


@pytest.fixture(scope="session")
def flat_p3_run():
    return run_experiment(load_config(CONFIGS / "flat_p3.ini"))


@pytest.fixture(scope="session")
def bump_cfg():
    return load_config(CONFIGS / "bump.ini")


@pytest.fixture(scope="session")
def bump_runs(bump_cfg):
    """The bump config at nx = 128, 256, 512 with ds halved alongside dx."""
    return [run_experiment(refine(bump_cfg, lev)) for lev in range(BUMP_LEVELS)]


@pytest.fixture(scope="session")
def desk_ladder_runs(desk_cfg):
    return [run_experiment(refine(desk_cfg, lev)) for lev in range(3)]


@pytest.fixture
def minimal_cfg():
    return parse_config("[model]\nN = 1\np = 2\n[grid]\nnx = 32\n[similarity]\ns_max = 1\n")
