import math

import numpy as np
import pytest

from wkblab.curve import make_curve
from wkblab.differentials import det_map, random_system


def random_curve(rng, min_sep=0.3, degree=6):
    """Monic-free random polynomial with Gaussian coefficients, separated roots."""
    while True:
        p = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
        c = make_curve(p)
        if c.separation >= min_sep:
            return c


def unit_det_system(curve, rng):
    """Gaussian sl2-system rescaled so that the coefficient norm of det(A) is 1."""
    A = random_system(curve, rng)
    return A.scaled(1 / math.sqrt(np.linalg.norm(det_map(A).coeffs)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def quintic():
    # y^2 = x^5 - x, branch points 0, +-1, +-i
    return make_curve([1, 0, 0, 0, -1, 0])


@pytest.fixture(scope="session")
def sextic():
    return make_curve([1, 0.2, -1, 0.5j, 0.3, -1, 0.7])


# ---------------------------------------------------------------------------
# acceptance bookkeeping: one PASS/FAIL line per criterion in the summary

ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.fixture
def detail(request):
    """Record a short measurement for the acceptance summary line."""
    def add(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None or rep.when != "call":
        return
    n, title = m.args
    details = [v for k, v in item.user_properties if k == "detail"]
    entry = ACCEPTANCE.setdefault(n, {"title": title, "ok": True, "details": []})
    entry["ok"] &= rep.passed
    entry["details"] += details if rep.passed else details + [f"{item.name} failed"]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        e = ACCEPTANCE[n]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {n:2d} {status}  {e['title']}: " + "; ".join(e["details"]))
