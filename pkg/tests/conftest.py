import random
import sys

import pytest

from dds.cost import DeviceProfile
from dds.model import FeatureEdge, LayerVertex, make_model, parse_model

DIAMOND = """\
model diamond
vertex v1 flops=1
vertex v2 flops=2
vertex v3 flops=3
vertex v4 flops=4
edge v1 v2 bytes=5
edge v1 v3 bytes=5
edge v2 v4 bytes=2
edge v3 v4 bytes=1
"""


def random_dag(rng: random.Random, n: int):
    """Chain backbone plus random forward edges; a vertex's out-edges share one size."""
    vertices = [LayerVertex(f"v{k}", rng.uniform(0.1, 10)) for k in range(n)]
    pairs = {(k, k + 1) for k in range(n - 1)}
    for _ in range(rng.randint(0, n) if n > 1 else 0):
        u = rng.randrange(n - 1)
        pairs.add((u, rng.randrange(u + 1, n)))
    out = [rng.uniform(0.1, 10) for _ in range(n)]
    edges = [FeatureEdge(f"v{u}", f"v{w}", out[u]) for u, w in sorted(pairs)]
    return make_model(f"rand{n}", vertices, edges)


def random_instance(rng: random.Random, max_n: int = 8):
    """Random (graph, device, g_alloc, alpha_s) on comparable time scales."""
    g = random_dag(rng, rng.randint(1, max_n))
    dev = DeviceProfile("d", rng.uniform(0.5, 5), rng.uniform(0.5, 5), g, rng.uniform(0.5, 2),
                        rng.uniform(0.1, 20), rng.uniform(0.1, 20))
    return g, dev, rng.uniform(0.1, 10), rng.uniform(0.5, 2)


@pytest.fixture
def diamond():
    return parse_model(DIAMOND)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
