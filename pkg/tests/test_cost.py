import math

import pytest

from dds.cost import (
    INFINITE,
    CostBreakdown,
    DeviceProfile,
    ServerProfile,
    inference_cost,
    local_latency,
    server_flops,
    server_latency,
    transmission_latency,
)
from dds.model import FeatureEdge, LayerVertex, make_model
from dds.partition import PartitionStrategy


@pytest.fixture
def big():
    g = make_model("big", [LayerVertex("a", 4e9), LayerVertex("b", 6e9)], [FeatureEdge("a", "b", 1e6)])
    return g


def dev_for(g, **kw):
    return DeviceProfile("d", kw.pop("compute", 10e9), kw.pop("bandwidth", 1e6), g, **kw)


def test_local_latency(big):
    dev = dev_for(big)
    assert local_latency(PartitionStrategy.all_server(big), dev) == 0
    assert local_latency(PartitionStrategy.all_local(big), dev) == 1.0
    assert local_latency(PartitionStrategy.all_local(big), dev_for(big, alpha_local=2.0)) == 2.0


def test_server_latency(big):
    srv = ServerProfile(1e12)
    assert server_latency(PartitionStrategy.all_local(big), srv, 0.0) == 0
    p = PartitionStrategy.from_server_set(big, {"b"})
    assert server_latency(p, srv, 3e9) == 2.0
    assert server_latency(p, srv, 0.0) == INFINITE
    assert server_latency(p, ServerProfile(1e12, 0.5), 3e9) == 1.0


def test_transmission_latency(big):
    dev = dev_for(big, raw_input_bytes=3e6, result_bytes=1e6)
    assert transmission_latency(PartitionStrategy.all_local(big), dev) == 0
    assert transmission_latency(PartitionStrategy.from_server_set(big, {"b"}), dev) == 1.0 + 1.0
    dev_nores = dev_for(big, result_bytes=0.0)
    assert transmission_latency(PartitionStrategy.from_server_set(big, {"b"}), dev_nores) == 1.0
    assert transmission_latency(PartitionStrategy.all_server(big), dev) == (3e6 + 1e6) / 1e6


def test_split_vertex_uploads_once(diamond):
    dev = DeviceProfile("d", 1.0, 1.0, diamond, raw_input_bytes=0.0, result_bytes=0.0)
    p = PartitionStrategy.from_server_set(diamond, {"v2", "v3", "v4"})
    assert transmission_latency(p, dev) == 5.0


def test_inference_cost_examples(big):
    dev = dev_for(big)
    srv = ServerProfile(1e12)
    bd = inference_cost(PartitionStrategy.all_local(big), dev, srv, 0.0)
    assert bd.cost == bd.t_total == bd.t_local
    bd = CostBreakdown(1.0, 0.5, 0.0, charge=2e9, gamma=1e-10)
    assert bd.cost == pytest.approx(1.7)
    doubled = CostBreakdown(1.0, 0.5, 0.0, charge=2e9, gamma=2e-10)
    assert doubled.cost - doubled.t_total == pytest.approx(2 * (bd.cost - bd.t_total))
    with pytest.raises(ValueError):
        inference_cost(PartitionStrategy.all_local(big), dev, srv, 0.0, a_i=-1)


def test_server_flops(diamond):
    assert server_flops(PartitionStrategy.all_local(diamond), diamond) == 0
    assert server_flops(PartitionStrategy.all_server(diamond), diamond) == 10
    assert server_flops(PartitionStrategy.from_server_set(diamond, {"v4"}), diamond) == 4


def test_inverse_scaling(big):
    p = PartitionStrategy.from_server_set(big, {"b"})
    srv = ServerProfile(1e12)
    base = inference_cost(p, dev_for(big), srv, 3e9)
    assert math.isclose(inference_cost(p, dev_for(big, compute=20e9), srv, 3e9).t_local, base.t_local / 2)
    assert math.isclose(inference_cost(p, dev_for(big, bandwidth=2e6), srv, 3e9).t_net, base.t_net / 2)
    assert math.isclose(inference_cost(p, dev_for(big), srv, 6e9).t_server, base.t_server / 2)


@pytest.mark.parametrize("kw", [dict(compute=0.0), dict(bandwidth=-1.0), dict(alpha_local=0.0),
                                dict(raw_input_bytes=-1.0), dict(compute=float("inf"))])
def test_profile_validation(big, kw):
    with pytest.raises(ValueError):
        dev_for(big, **kw)


def test_server_validation():
    with pytest.raises(ValueError):
        ServerProfile(0.0)
    with pytest.raises(ValueError):
        ServerProfile(1.0, alpha_server=-1.0)
