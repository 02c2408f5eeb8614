from fractions import Fraction
from pathlib import Path

import pytest

from fibrenorm.fibsearch import FamilySpec
from fibrenorm.flatmap import standard_point
from fibrenorm.numerics import PrecisionContext
from fibrenorm.renorm import run_trajectory

DATA = Path(__file__).parent / "data"

# Family bases (x2 varies).  Float inputs are converted exactly, which is what
# the frozen parameters in tests/data were located with.
MAIN_BASE = dict(ell=1.5, x1=-0.4, x3=0.1, x4=0.97, s=0.5)
SECOND_BASE = dict(ell=1.5, x1=-0.7, x3=0.1, x4=0.97, s=0.02)


def make_family(base, bits=256):
    ctx = PrecisionContext(bits=bits)
    X = standard_point(base["ell"], base["x1"], base["x3"] / 2, base["x3"], base["x4"], base["s"], ctx)
    x3 = Fraction(base["x3"])
    return FamilySpec(X, "x2", (x3 / 10 ** 4, x3 * (1 - Fraction(1, 10 ** 4))))


def frozen_param(name):
    return Fraction((DATA / f"{name}_x2_param.txt").read_text().strip())


def frozen_trajectory(base, name, depth, bits):
    fam = make_family(base)
    p = frozen_param(name)
    return run_trajectory(lambda c: fam.point(p, c), depth, PrecisionContext(bits=bits))


@pytest.fixture(scope="session")
def main_traj():
    """Main-base Fibonacci trajectory, 14 levels at 1100 bits."""
    return frozen_trajectory(MAIN_BASE, "main", 14, 1100)


@pytest.fixture(scope="session")
def main_traj_512():
    return frozen_trajectory(MAIN_BASE, "main", 8, 512)


@pytest.fixture(scope="session")
def second_traj():
    return frozen_trajectory(SECOND_BASE, "second", 14, 1100)


# acceptance summary: one line per criterion

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.failed and rep.when == "setup"):
        n, title = marker.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        item.config._criteria[n] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, ok, detail = results[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
