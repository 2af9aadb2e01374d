import importlib.resources
import time

import pytest

from rightofway.cli import load_scenario
from rightofway.engine import run_scenario


def table1_path():
    return importlib.resources.files("rightofway").joinpath("data/table1.cfg")


@pytest.fixture(scope="session")
def table1_config():
    with importlib.resources.as_file(table1_path()) as path:
        config, _ = load_scenario(path)
    return config


@pytest.fixture(scope="session")
def table1_runs(table1_config):
    """Both controller runs of the bundled scenario, with wall times.

    A tiny throwaway run first so jit compilation never lands inside the
    timed section.
    """
    import copy

    warm = copy.deepcopy(table1_config)
    warm.duration = 5 * warm.dt
    warm.stop_at_goals = False
    run_scenario(warm)

    runs = {}
    for mode in ("auction", "qp"):
        config = copy.deepcopy(table1_config)
        config.controller = mode
        t0 = time.perf_counter()
        log, events = run_scenario(config)
        runs[mode] = {"log": log, "events": events,
                      "wall": time.perf_counter() - t0}
    return runs
