import numpy as np
import pytest
from hypothesis import strategies as st

from mixlab.constructions import random_network
from mixlab.network import NetworkBuilder

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")


def edge_net(pairs, names=None):
    b = NetworkBuilder()
    verts = names or sorted({v for u, w, _ in pairs for v in (u, w)})
    for v in verts:
        b.add_vertex(v)
    for u, v, w in pairs:
        b.add_edge(u, v, w)
    return b.build()


@pytest.fixture
def two_state():
    return edge_net([("u", "v", 1.0)])


@pytest.fixture
def cycle4():
    return edge_net([(f"c{i}", f"c{(i + 1) % 4}", 1.0) for i in range(4)])


@st.composite
def networks(draw, min_states=2, max_states=10):
    n = draw(st.integers(min_states, max_states))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    density = draw(st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    return random_network(n, np.random.default_rng(seed), density)
