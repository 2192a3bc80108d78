"""DNN models as weighted DAGs.

A model is a DAG of layers. Each layer carries its FLOP count and each edge
carries the size in bytes of the tensor it transports. Models can be read
from a small line-oriented text format or synthesized from the built-in
catalog, which reproduces the published aggregate metrics of four networks.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_RAW_INPUT_BYTES = 602112.0
DEFAULT_RESULT_BYTES = 4096.0

# (vertices, edges, GFLOPs)
CATALOG = {
    "VGG11": (15, 14, 7.63),
    "ResNet34": (55, 57, 3.68),
    "ResNet50": (73, 75, 4.12),
    "ViT": (26, 32, 3.47),
}


class ModelFormatError(ValueError):
    """Raised for malformed model files or graphs that break the DAG rules."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


@dataclass(frozen=True)
class LayerVertex:
    id: str
    flops: float
    label: str = ""


@dataclass(frozen=True)
class FeatureEdge:
    src: str
    dst: str
    feature_bytes: float


@dataclass(frozen=True)
class ModelGraph:
    """Immutable DNN graph whose vertices are stored in topological order.

    Construct through :func:`make_model`, :func:`parse_model` or
    :func:`catalog_model`; those validate the invariants and sort vertices.
    """

    name: str
    vertices: tuple
    edges: tuple
    source_id: str
    sink_id: str

    @cached_property
    def index(self):
        return {v.id: k for k, v in enumerate(self.vertices)}

    @cached_property
    def flops(self):
        return {v.id: v.flops for v in self.vertices}

    @cached_property
    def successors(self):
        out = {v.id: [] for v in self.vertices}
        for e in self.edges:
            out[e.src].append(e)
        idx = self.index
        for lst in out.values():
            lst.sort(key=lambda e: idx[e.dst])
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def predecessors(self):
        out = {v.id: [] for v in self.vertices}
        for e in self.edges:
            out[e.dst].append(e.src)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def output_bytes(self):
        """Upload size of each vertex's output: its first outgoing edge in topological order."""
        return {vid: succ[0].feature_bytes for vid, succ in self.successors.items() if succ}

    def __len__(self):
        return len(self.vertices)


def total_flops(g: ModelGraph) -> float:
    return math.fsum(v.flops for v in g.vertices)


def _topological_order(ids, edges):
    indeg = {v: 0 for v in ids}
    succ = {v: [] for v in ids}
    for e in edges:
        indeg[e.dst] += 1
        succ[e.src].append(e.dst)
    queue = deque(v for v in ids if indeg[v] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if len(order) != len(ids):
        stuck = [v for v in ids if indeg[v] > 0]
        raise ModelFormatError(f"cycle detected among vertices {stuck}")
    return order


def make_model(name, vertices, edges, lines=None) -> ModelGraph:
    """Validate vertices/edges and return a topologically ordered ModelGraph.

    ``lines`` optionally maps vertex ids and edge keys to source line numbers
    so errors can point back into a file.
    """
    lines = lines or {}
    by_id = {}
    for v in vertices:
        if v.id in by_id:
            raise ModelFormatError(f"duplicate vertex {v.id!r}", lines.get(v.id))
        if not (math.isfinite(v.flops) and v.flops > 0):
            raise ModelFormatError(f"vertex {v.id!r} has nonpositive flops {v.flops}", lines.get(v.id))
        by_id[v.id] = v
    if not by_id:
        raise ModelFormatError("model has no vertices")

    seen = set()
    for e in edges:
        key = (e.src, e.dst)
        ln = lines.get(key)
        for end in key:
            if end not in by_id:
                raise ModelFormatError(f"edge {e.src}->{e.dst} references unknown vertex {end!r}", ln)
        if e.src == e.dst:
            raise ModelFormatError(f"self-loop on {e.src!r}", ln)
        if key in seen:
            raise ModelFormatError(f"duplicate edge {e.src}->{e.dst}", ln)
        if not (math.isfinite(e.feature_bytes) and e.feature_bytes > 0):
            raise ModelFormatError(f"edge {e.src}->{e.dst} has nonpositive bytes {e.feature_bytes}", ln)
        seen.add(key)

    order = _topological_order(list(by_id), edges)
    has_in = {e.dst for e in edges}
    has_out = {e.src for e in edges}
    sources = [v for v in order if v not in has_in]
    sinks = [v for v in order if v not in has_out]
    if len(sources) != 1:
        raise ModelFormatError(f"expected exactly one source vertex, found {sources}")
    if len(sinks) != 1:
        raise ModelFormatError(f"expected exactly one sink vertex, found {sinks}")

    idx = {v: k for k, v in enumerate(order)}
    g = ModelGraph(
        name=name,
        vertices=tuple(by_id[v] for v in order),
        edges=tuple(sorted(edges, key=lambda e: (idx[e.src], idx[e.dst]))),
        source_id=sources[0],
        sink_id=sinks[0],
    )
    for vid, succ in g.successors.items():
        sizes = {e.feature_bytes for e in succ}
        if len(sizes) > 1:
            warnings.warn(
                f"vertex {vid!r} fans out with unequal feature sizes {sorted(sizes)}; "
                "the first successor's size is used as its upload cost",
                stacklevel=2,
            )
    return g


def _parse_kv(token, key, lineno):
    prefix = key + "="
    if not token.startswith(prefix):
        raise ModelFormatError(f"expected '{prefix}<value>', got {token!r}", lineno)
    return token[len(prefix):]


def _parse_float(text, lineno):
    try:
        return float(text)
    except ValueError:
        raise ModelFormatError(f"not a number: {text!r}", lineno) from None


def parse_model(text: str) -> ModelGraph:
    """Parse the line-oriented model format.

    ::

        model <name>
        vertex <id> flops=<float> [label=<text>]
        edge <src> <dst> bytes=<float>

    Blank lines and ``#`` comments are ignored.
    """
    name = None
    vertices, edges, lines = [], [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind = toks[0]
        if kind == "model":
            if len(toks) != 2:
                raise ModelFormatError("expected 'model <name>'", lineno)
            if name is not None:
                raise ModelFormatError("duplicate model header", lineno)
            name = toks[1]
        elif kind == "vertex":
            if len(toks) not in (3, 4):
                raise ModelFormatError("expected 'vertex <id> flops=<float> [label=<text>]'", lineno)
            flops = _parse_float(_parse_kv(toks[2], "flops", lineno), lineno)
            label = _parse_kv(toks[3], "label", lineno) if len(toks) == 4 else ""
            vertices.append(LayerVertex(toks[1], flops, label))
            lines.setdefault(toks[1], lineno)
        elif kind == "edge":
            if len(toks) != 4:
                raise ModelFormatError("expected 'edge <src> <dst> bytes=<float>'", lineno)
            size = _parse_float(_parse_kv(toks[3], "bytes", lineno), lineno)
            edges.append(FeatureEdge(toks[1], toks[2], size))
            lines.setdefault((toks[1], toks[2]), lineno)
        else:
            raise ModelFormatError(f"unknown directive {kind!r}", lineno)
    if name is None:
        raise ModelFormatError("missing 'model <name>' header")
    return make_model(name, vertices, edges, lines)


def serialize_model(g: ModelGraph) -> str:
    out = [f"model {g.name}"]
    for v in g.vertices:
        line = f"vertex {v.id} flops={v.flops!r}"
        if v.label:
            line += f" label={v.label}"
        out.append(line)
    for e in g.edges:
        out.append(f"edge {e.src} {e.dst} bytes={e.feature_bytes!r}")
    return "\n".join(out) + "\n"


def load_model(path) -> ModelGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def catalog_model(name: str, seed: int = 0, raw_input_bytes: float = DEFAULT_RAW_INPUT_BYTES,
                  result_bytes: float = DEFAULT_RESULT_BYTES) -> ModelGraph:
    """Synthesize a catalog network with the published vertex/edge/GFLOP counts.

    The structure is a chain backbone plus short skip connections. Per-layer
    FLOPs are a seeded log-uniform split of the total; every vertex's output
    shrinks geometrically from ``raw_input_bytes`` toward ``result_bytes``.
    """
    if name not in CATALOG:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    n, m, gflops = CATALOG[name]
    rng = np.random.default_rng([seed, sum(map(ord, name))])

    pairs = [(k, k + 1) for k in range(n - 1)]
    used = set(pairs)
    while len(pairs) < m:
        u = int(rng.integers(0, n - 2))
        span = int(rng.integers(2, 5))
        w = min(u + span, n - 1)
        if w - u < 2 or (u, w) in used:
            continue
        used.add((u, w))
        pairs.append((u, w))

    total = gflops * 1e9
    weights = np.exp(rng.uniform(math.log(0.25), math.log(4.0), size=n))
    flops = [float(x) for x in total * weights / weights.sum()]
    flops[-1] = total - math.fsum(flops[:-1])

    ratio = (result_bytes / raw_input_bytes) ** (1.0 / n)
    out_bytes = [raw_input_bytes * ratio ** (k + 1) for k in range(n)]

    ids = [f"v{k + 1}" for k in range(n)]
    vertices = [LayerVertex(ids[k], flops[k], f"{name}.layer{k + 1}") for k in range(n)]
    edges = [FeatureEdge(ids[u], ids[w], out_bytes[u]) for u, w in pairs]
    return make_model(name, vertices, edges)
