import numpy as np
import pytest

from freqsweep.subsample import SampleSpec
from freqsweep.world import Scene, WorldConfig


def line_scene(speed=10.0, duration=10.0, fn=10.0, heading=0.0, scene_id="line", agents=(), polylines=()):
    """Straight-line ego at constant speed starting at the origin."""
    t = np.arange(int(round(duration * fn)) + 1) / fn
    ego = np.column_stack([speed * t * np.cos(heading), speed * t * np.sin(heading), np.full_like(t, heading), np.full_like(t, speed)])
    return Scene(scene_id=scene_id, native_frequency=fn, native_timestamps=t, ego_states=ego, agents=tuple(agents), map_polylines=tuple(polylines))


@pytest.fixture
def small_world():
    return WorldConfig(num_scenes=3, scene_duration=8.0, native_frequency=10.0, seed=11)


@pytest.fixture
def spec():
    return SampleSpec()


CRITERIA = []


def report(number, title, ok, detail=""):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
    CRITERIA.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(CRITERIA):
            terminalreporter.write_line(line)
