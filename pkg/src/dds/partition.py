"""Optimal device/server partitioning of a model graph via minimum cut.

The latency graph turns every placement of layers into an l-s cut whose
capacity is the end-to-end latency. Node ``l`` (local device) is the flow
source, ``s`` (server) the sink; vertices left on the ``l`` side run on the
device.

Beyond the arcs needed to price a placement, every model edge (u, w) gets an
infinite reverse arc (w, u). Without it a cut may put u on the server and w on
the device, which lets server output flow back for free and undercuts every
feasible placement; the reverse arc rules such cuts out.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

from dds.cost import INFINITE, DeviceProfile, local_latency, transmission_latency
from dds.maxflow import FlowNetwork
from dds.model import ModelGraph

RAW_INPUT = "@i"

L_NODE, S_NODE, I_NODE, O_NODE = 0, 1, 2, 3


class ArcTag(enum.Enum):
    ORIGINAL_EDGE = "original"
    SPLIT_EDGE = "split"
    LOCAL_COMPUTE = "local"
    SERVER_COMPUTE = "server"
    RAW_UPLOAD = "raw_upload"
    RESULT_DOWNLOAD = "result_download"
    INFINITE = "infinite"
    PRECEDENCE = "precedence"


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity: float
    tag: ArcTag
    origin: object = None  # model edge (src, dst), vertex id, or None


@dataclass(frozen=True)
class PartitionStrategy:
    model: ModelGraph
    local_set: frozenset
    server_set: frozenset

    @classmethod
    def from_server_set(cls, model, server):
        server = frozenset(server)
        return cls(model, frozenset(v.id for v in model.vertices) - server, server)

    @classmethod
    def all_local(cls, model):
        return cls.from_server_set(model, ())

    @classmethod
    def all_server(cls, model):
        return cls.from_server_set(model, (v.id for v in model.vertices))

    @cached_property
    def cut_edges(self):
        """Model edges crossing from device to server, plus (@i, v1) when the input is uploaded."""
        g = self.model
        cut = [(e.src, e.dst) for e in g.edges if e.src in self.local_set and e.dst in self.server_set]
        if g.source_id in self.server_set:
            cut.insert(0, (RAW_INPUT, g.source_id))
        return tuple(cut)


class LatencyGraph:
    """Flow network whose l-s cut capacities equal inference latencies."""

    def __init__(self, model, arcs, node_names, vertex_nodes):
        self.model = model
        self.arcs = tuple(arcs)
        self.node_names = tuple(node_names)
        self.vertex_nodes = vertex_nodes  # vertex id -> node index

    @property
    def n_nodes(self):
        return len(self.node_names)

    def count(self, *tags):
        return sum(1 for a in self.arcs if a.tag in tags)

    def dump(self):
        names = self.node_names
        return "\n".join(
            f"arc {names[a.tail]} {names[a.head]} cap={a.capacity!r} tag={a.tag.value}" for a in self.arcs
        ) + "\n"


def build_latency_graph(g: ModelGraph, dev: DeviceProfile, g_alloc: float, alpha_s: float = 1.0) -> LatencyGraph:
    if g_alloc < 0:
        raise ValueError(f"allocation must be nonnegative, got {g_alloc}")
    if not (dev.bandwidth > 0 and dev.compute > 0):
        raise ValueError("device bandwidth and compute must be positive")
    b = dev.bandwidth

    names = ["@l", "@s", "@i", "@o"]
    vertex_nodes = {}
    for v in g.vertices:
        vertex_nodes[v.id] = len(names)
        names.append(v.id)
    split_nodes = {}
    for v in g.vertices:
        if len(g.successors[v.id]) > 1:
            split_nodes[v.id] = len(names)
            names.append(v.id + "'")

    arcs = []
    for v in g.vertices:
        succ = g.successors[v.id]
        if v.id in split_nodes:
            twin = split_nodes[v.id]
            arcs.append(Arc(vertex_nodes[v.id], twin, g.output_bytes[v.id] / b, ArcTag.SPLIT_EDGE, v.id))
            for e in succ:
                arcs.append(Arc(twin, vertex_nodes[e.dst], INFINITE, ArcTag.INFINITE, (e.src, e.dst)))
        else:
            for e in succ:
                arcs.append(Arc(vertex_nodes[e.src], vertex_nodes[e.dst], e.feature_bytes / b,
                                ArcTag.ORIGINAL_EDGE, (e.src, e.dst)))

    src, snk = vertex_nodes[g.source_id], vertex_nodes[g.sink_id]
    arcs.append(Arc(L_NODE, I_NODE, dev.raw_input_bytes / b, ArcTag.RAW_UPLOAD))
    arcs.append(Arc(I_NODE, src, INFINITE, ArcTag.INFINITE))
    arcs.append(Arc(L_NODE, O_NODE, dev.result_bytes / b, ArcTag.RESULT_DOWNLOAD))
    # o must follow the sink onto the server so the download is charged
    arcs.append(Arc(O_NODE, snk, INFINITE, ArcTag.INFINITE))

    for v in g.vertices:
        node = vertex_nodes[v.id]
        server_t = alpha_s * v.flops / g_alloc if g_alloc > 0 else INFINITE
        arcs.append(Arc(L_NODE, node, min(server_t, INFINITE), ArcTag.SERVER_COMPUTE, v.id))
        arcs.append(Arc(node, S_NODE, dev.alpha_local * v.flops / dev.compute, ArcTag.LOCAL_COMPUTE, v.id))

    for e in g.edges:
        arcs.append(Arc(vertex_nodes[e.dst], vertex_nodes[e.src], INFINITE, ArcTag.PRECEDENCE, (e.src, e.dst)))

    return LatencyGraph(g, arcs, names, vertex_nodes)


def min_cut(lg: LatencyGraph):
    """Exact minimum l-s cut; returns (latency in seconds, PartitionStrategy).

    Among minimum cuts the device side is the residual-reachable set from l,
    i.e. the smallest possible device side.
    """
    net = FlowNetwork(lg.n_nodes)
    finite = []
    for a in lg.arcs:
        net.add_arc(a.tail, a.head, a.capacity)
        if a.capacity < INFINITE:
            finite.append(a.capacity)
    tol = 1e-13 * max(math.fsum(finite), 1e-300)
    _, res = net.max_flow(L_NODE, S_NODE, tol)
    side = net.reachable(res, L_NODE, tol)
    if side[S_NODE]:
        raise RuntimeError("latency graph has no finite cut")

    crossing = [a for a in lg.arcs if side[a.tail] and not side[a.head]]
    if any(a.capacity >= INFINITE for a in crossing):
        raise RuntimeError("latency graph has no finite cut")
    value = math.fsum(a.capacity for a in crossing)

    local = frozenset(v for v, node in lg.vertex_nodes.items() if side[node])
    p = PartitionStrategy(lg.model, local, frozenset(lg.vertex_nodes) - local)
    assert is_valid_cut(p, lg.model), "minimum cut violates layer precedence"
    return value, p


def is_valid_cut(p: PartitionStrategy, g: ModelGraph) -> bool:
    """True iff no model edge runs from a server-side layer back to the device."""
    return not any(e.src in p.server_set and e.dst in p.local_set for e in g.edges)


def _downward_closed_sets(g):
    # Walk vertices in reverse topological order; a vertex may join the server
    # side only if all of its successors are already there.
    order = [v.id for v in reversed(g.vertices)]
    succ = {vid: [e.dst for e in es] for vid, es in g.successors.items()}

    def rec(k, chosen):
        if k == len(order):
            yield frozenset(chosen)
            return
        v = order[k]
        yield from rec(k + 1, chosen)
        if all(w in chosen for w in succ[v]):
            chosen.add(v)
            yield from rec(k + 1, chosen)
            chosen.discard(v)

    yield from rec(0, set())


def brute_force_optimal(g: ModelGraph, dev: DeviceProfile, g_alloc: float, alpha_s: float = 1.0,
                        max_vertices: int = 20):
    """Enumerate every feasible placement and return the cheapest (seconds, PartitionStrategy)."""
    if len(g) > max_vertices:
        raise ValueError(f"graph has {len(g)} vertices; enumeration limited to {max_vertices}")
    best = None
    for server in _downward_closed_sets(g):
        p = PartitionStrategy.from_server_set(g, server)
        if server:
            if g_alloc <= 0:
                continue
            t_server = alpha_s * math.fsum(g.flops[v] for v in server) / g_alloc
        else:
            t_server = 0.0
        t = local_latency(p, dev) + transmission_latency(p, dev) + t_server
        key = (t, len(server))
        if best is None or key < best[0]:
            best = (key, p)
    return best[0][0], best[1]


def direct_solver(dev: DeviceProfile, alpha_s: float = 1.0):
    """Callable g_alloc -> (latency, strategy) that rebuilds and cuts the latency graph every time."""
    def solve(g_alloc):
        return min_cut(build_latency_graph(dev.model, dev, g_alloc, alpha_s))
    return solve


class PartitionCurve:
    """Optimal latency of one device as a function of its server allocation.

    Every placement prices as ``K + C / g`` (K: device and network time, C:
    server FLOPs times alpha_s), so the optimum over placements is the lower
    envelope of lines in ``x = 1/g``. The envelope is recovered exactly by
    Eisner-Severance bisection on min cuts; afterwards a query costs a scan
    over a handful of lines instead of a max-flow.

    Allocations above ``g_max`` fall back to a direct cut.
    """

    def __init__(self, dev: DeviceProfile, alpha_s: float = 1.0, g_max: float = 1e13):
        self.dev = dev
        self.alpha_s = alpha_s
        self.g_max = g_max
        self.n_cuts = 0
        g = dev.model
        local = self._line(PartitionStrategy.all_local(g))
        x_lo = 1.0 / g_max
        f_min = min(v.flops for v in g.vertices)
        # beyond x_hi any server use costs more than running everything locally
        x_hi = 2.0 * local[0] / (alpha_s * f_min)
        first = self._solve(x_lo)
        lines = {first[2].server_set: first, local[2].server_set: local}
        self._refine(first, local, lines)
        # descending C == ascending x of optimality
        self.lines = sorted(lines.values(), key=lambda ln: -ln[1])
        self.x_range = (x_lo, x_hi)

    def _line(self, p):
        k = local_latency(p, self.dev) + transmission_latency(p, self.dev)
        c = self.alpha_s * math.fsum(p.model.flops[v] for v in p.server_set)
        return (k, c, p)

    def _solve(self, x):
        self.n_cuts += 1
        _, p = min_cut(build_latency_graph(self.dev.model, self.dev, 1.0 / x, self.alpha_s))
        return self._line(p)

    def _refine(self, left, right, lines):
        k1, c1, p1 = left
        k2, c2, p2 = right
        if p1.server_set == p2.server_set or c1 <= c2:
            return
        x = (k2 - k1) / (c1 - c2)
        mid = self._solve(x)
        here = k1 + c1 * x
        if mid[0] + mid[1] * x < here - 1e-12 * here and mid[2].server_set not in lines:
            lines[mid[2].server_set] = mid
            self._refine(left, mid, lines)
            self._refine(mid, right, lines)

    def __call__(self, g_alloc):
        if g_alloc <= 0:
            k, _, p = self.lines[-1]
            return k, p
        if g_alloc > self.g_max:
            return min_cut(build_latency_graph(self.dev.model, self.dev, g_alloc, self.alpha_s))
        best = None
        for k, c, p in self.lines:  # ties keep the earlier, larger server side
            t = k + c / g_alloc
            if best is None or t < best[0]:
                best = (t, p)
        return best

    @property
    def breakpoints(self):
        """Allocations at which the optimal placement switches, ascending."""
        out = []
        for (k1, c1, _), (k2, c2, _) in zip(self.lines, self.lines[1:]):
            out.append((c1 - c2) / (k2 - k1))
        return sorted(out)
