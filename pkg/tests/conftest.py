import numpy as np
import pytest

from signedball.graph import SignedGraph
from signedball.kernels import get_backend
from signedball.synthetic import two_cliques


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return get_backend(request.param)


@pytest.fixture(scope="session")
def clique_graph():
    return two_cliques(20)


def random_ball_points(rng, n, dim, max_norm=0.9):
    x = rng.normal(size=(n, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(0.0, max_norm, size=(n, 1))


def random_rotation(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q * np.sign(np.diag(r))


def make_graph(edges, n=None):
    e = np.array(edges, dtype=np.int64).reshape(-1, 3)
    n = n if n is not None else int(e[:, :2].max()) + 1
    return SignedGraph(n, e[:, 0], e[:, 1], e[:, 2])


_verdicts = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.skipped:
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else ""
        _verdicts[number] = ("SKIP", title, reason)
    elif rep.when == "call":
        _verdicts[number] = ("PASS" if rep.passed else "FAIL", title, detail)
    elif rep.failed:
        _verdicts[number] = ("FAIL", title, f"error in {rep.when}")


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        status, title, detail = _verdicts[number]
        terminalreporter.write_line(f"[{status}] {number}. {title}" + (f": {detail}" if detail else ""))
