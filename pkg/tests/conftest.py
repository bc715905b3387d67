import pytest
from hypothesis import strategies as st

from apx.graph import from_edge_list
from apx import generators as G


@st.composite
def small_graphs(draw, max_n=24):
    n = draw(st.integers(2, max_n))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    edges = draw(st.lists(pairs, max_size=3 * n))
    return from_edge_list(edges, n)


@pytest.fixture(scope="session")
def p5():
    return G.path(5)


@pytest.fixture(scope="session")
def gnp200():
    return G.gnp(200, 0.05, 3)


def brute_bfs(g, s):
    """Plain-Python BFS over adjacency lists."""
    dist = {s: 0}
    frontier = [s]
    while frontier:
        nxt = []
        for u in frontier:
            for v in g.neighbors(u).tolist():
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
