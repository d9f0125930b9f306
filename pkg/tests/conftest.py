"""Independent oracles shared by the test modules.

Nothing here touches the jet machinery: curvature is rebuilt from point
values of the metric by nested central differences, and contractions are
explicit loops.
"""

import itertools
import time

import numpy as np
import pytest

from cqrlab import catalog


def fd_christoffel(spec, point, h=1e-4):
    """``G^m_ij`` from central differences of the metric values."""
    point = np.asarray(point, dtype=float)
    n = len(point)
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dg[k] = (spec.metric_values(point + e) - spec.metric_values(point - e)) / (2 * h)
    ginv = np.linalg.inv(spec.metric_values(point))
    gamma = np.zeros((n, n, n))
    for m, i, j, p in itertools.product(range(n), repeat=4):
        gamma[m, i, j] += 0.5 * ginv[m, p] * (dg[i, p, j] + dg[j, p, i] - dg[p, i, j])
    return gamma


def fd_riemann_3_1(spec, point, h=1e-3):
    """``R_{jkl}^m`` with the package convention, by nested differences (loops only)."""
    point = np.asarray(point, dtype=float)
    n = len(point)
    G = fd_christoffel(spec, point)
    dG = np.empty((n, n, n, n))  # [a, m, i, j] = d_a G^m_ij
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        dG[a] = (fd_christoffel(spec, point + e) - fd_christoffel(spec, point - e)) / (2 * h)
    R = np.zeros((n,) * 4)
    for j, k, l, m in itertools.product(range(n), repeat=4):
        val = dG[k, m, j, l] - dG[j, m, k, l]
        for p in range(n):
            val += G[m, k, p] * G[p, j, l] - G[m, j, p] * G[p, k, l]
        R[j, k, l, m] = val
    return R


def loop_ricci(r31):
    n = r31.shape[0]
    ric = np.zeros((n, n))
    for k, l, m in itertools.product(range(n), repeat=3):
        ric[k, l] -= r31[m, k, l, m]
    return ric


@pytest.fixture(scope="session")
def cqr_entry():
    return catalog.ppwave_cqr()


@pytest.fixture(scope="session")
def concircular_entry():
    return catalog.ppwave_concircular()


@pytest.fixture(scope="session")
def schwarzschild_entry():
    return catalog.schwarzschild(1.0)


# -- acceptance bookkeeping --------------------------------------------------------------

SESSION = {"start": None, "criteria": {}}


def pytest_sessionstart(session):
    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # the whole-suite timing criterion must run after everything else
    last = [it for it in items if it.get_closest_marker("run_last")]
    items[:] = [it for it in items if it not in last] + last


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test")


def pytest_terminal_summary(terminalreporter):
    results = SESSION["criteria"]
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
