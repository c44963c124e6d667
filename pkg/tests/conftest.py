import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from instances import JURY2_ROWS, JURY2_TS, SEVEN_TS, seven_hole_weights, to_env, to_weights  # noqa: E402

DATA = HERE / "data"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "frozen.json").read_text())


@pytest.fixture(scope="session")
def seven_weights():
    return to_weights(SEVEN_TS, seven_hole_weights())


@pytest.fixture(scope="session")
def seven_graph():
    from peermech.fgraph import build_graph

    return build_graph(SEVEN_TS)


@pytest.fixture(scope="session")
def b1():
    from peermech.simgen import gen_group_env

    return gen_group_env(1)


@pytest.fixture(scope="session")
def group2():
    from peermech.simgen import gen_group_env

    return gen_group_env(2)


@pytest.fixture(scope="session")
def jury2():
    return to_env(JURY2_TS, JURY2_ROWS)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
