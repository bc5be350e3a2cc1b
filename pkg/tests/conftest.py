import pytest

from pctree.synthgen import AgentSchedule, WorldSpec, gen_trajectory, gen_world, weekly_routine

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion and assert it."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def weekly_world():
    return gen_world(WorldSpec(seed=1))


@pytest.fixture(scope="session")
def noisy_weeks(weekly_world):
    """Twelve weeks of the weekly routine with 10 m GPS noise."""
    sched = AgentSchedule(weekly_routine(weekly_world), noise_sigma=10.0)
    traj, truth = gen_trajectory(weekly_world, sched, 84, seed=2)
    return traj, truth


@pytest.fixture(scope="session")
def clean_weeks(weekly_world):
    sched = AgentSchedule(weekly_routine(weekly_world), noise_sigma=0.0)
    traj, truth = gen_trajectory(weekly_world, sched, 28, seed=3)
    return traj, truth
