"""Latency and cost model for a partitioned inference.

Units: FLOP, FLOP/s, bytes, bytes/s, seconds. The charge for a budget ``a``
is linear, ``gamma * a``, so gamma is in seconds per (FLOP/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from dds.model import DEFAULT_RAW_INPUT_BYTES, DEFAULT_RESULT_BYTES, ModelGraph

if TYPE_CHECKING:
    from dds.partition import PartitionStrategy

# Capacity standing in for an infinite latency; far above any finite sum in scope.
INFINITE = 1e18


@dataclass(frozen=True)
class DeviceProfile:
    id: str
    compute: float  # FLOP/s
    bandwidth: float  # bytes/s
    model: ModelGraph
    alpha_local: float = 1.0
    raw_input_bytes: float = DEFAULT_RAW_INPUT_BYTES
    result_bytes: float = DEFAULT_RESULT_BYTES

    def __post_init__(self):
        for attr in ("compute", "bandwidth", "alpha_local"):
            val = getattr(self, attr)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"device {self.id}: {attr} must be positive, got {val}")
        for attr in ("raw_input_bytes", "result_bytes"):
            if getattr(self, attr) < 0:
                raise ValueError(f"device {self.id}: {attr} must be nonnegative")


@dataclass(frozen=True)
class ServerProfile:
    capacity: float  # FLOP/s
    alpha_server: float = 1.0

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"server capacity must be positive, got {self.capacity}")
        if not self.alpha_server > 0:
            raise ValueError(f"alpha_server must be positive, got {self.alpha_server}")


@dataclass(frozen=True)
class CostBreakdown:
    t_local: float
    t_net: float
    t_server: float
    charge: float = 0.0
    gamma: float = 0.0

    @property
    def t_total(self):
        return self.t_local + self.t_net + self.t_server

    @property
    def cost(self):
        return self.t_total + self.gamma * self.charge


def local_latency(p: PartitionStrategy, dev: DeviceProfile) -> float:
    flops = p.model.flops
    return dev.alpha_local * math.fsum(flops[v] for v in p.local_set) / dev.compute


def server_latency(p: PartitionStrategy, srv: ServerProfile, g_alloc: float) -> float:
    if not p.server_set:
        return 0.0
    if g_alloc <= 0:
        return INFINITE
    flops = p.model.flops
    return srv.alpha_server * math.fsum(flops[v] for v in p.server_set) / g_alloc


def transmission_latency(p: PartitionStrategy, dev: DeviceProfile) -> float:
    """Upload/download time of a placement.

    Every local vertex feeding at least one server vertex uploads its output
    once, however many server successors it has.
    """
    g = p.model
    server = p.server_set
    sizes = []
    for u in p.local_set:
        if any(e.dst in server for e in g.successors[u]):
            sizes.append(g.output_bytes[u])
    if g.source_id in server:
        sizes.append(dev.raw_input_bytes)
    if g.sink_id in server:
        sizes.append(dev.result_bytes)
    return math.fsum(sizes) / dev.bandwidth


def server_flops(p: PartitionStrategy, g: ModelGraph) -> float:
    flops = g.flops
    return math.fsum(flops[v] for v in p.server_set)


def inference_cost(p: PartitionStrategy, dev: DeviceProfile, srv: ServerProfile, g_alloc: float,
                   a_i: float = 0.0, gamma: float = 0.0) -> CostBreakdown:
    """Latency breakdown plus the linear charge ``gamma * a_i``; ``.cost`` is L."""
    if a_i < 0:
        raise ValueError("budget must be nonnegative")
    return CostBreakdown(
        t_local=local_latency(p, dev),
        t_net=transmission_latency(p, dev),
        t_server=server_latency(p, srv, g_alloc),
        charge=a_i,
        gamma=gamma,
    )
