# Splitting one network between a phone and an edge server.
#
# The latency graph turns every placement of layers into an l-s cut whose
# capacity is the end-to-end latency, so a single max-flow finds the best
# split. Run: python3 demos/01_partition_walkthrough.py

import numpy as np

from dds.cost import DeviceProfile, ServerProfile, inference_cost
from dds.model import catalog_model, parse_model
from dds.partition import ArcTag, brute_force_optimal, build_latency_graph, min_cut

# A four-layer diamond: v1 feeds two branches that merge in v4.
diamond = parse_model("""
model diamond
vertex v1 flops=2e9
vertex v2 flops=3e9
vertex v3 flops=3e9
vertex v4 flops=1e9
edge v1 v2 bytes=2e5
edge v1 v3 bytes=2e5
edge v2 v4 bytes=4e5
edge v3 v4 bytes=4e5
""")

# 10 GFLOPS phone on an 8 Mbit/s link
phone = DeviceProfile("phone", compute=10e9, bandwidth=8 * 125000, model=diamond,
                      raw_input_bytes=6e5, result_bytes=4e3)

lg = build_latency_graph(diamond, phone, g_alloc=50e9)
print(f"{lg.n_nodes} nodes, {len(lg.arcs)} arcs")
for tag in ArcTag:
    print(f"  {tag.value:16s} {lg.count(tag)}")
print(lg.dump())

# The minimum cut and the exhaustive search agree.
value, p = min_cut(lg)
best, _ = brute_force_optimal(diamond, phone, 50e9)
print("device:", sorted(p.local_set), " server:", sorted(p.server_set))
print("cut edges:", p.cut_edges)
print(f"min cut {value:.6f}s, enumeration {best:.6f}s")

bd = inference_cost(p, phone, ServerProfile(1.2e12), 50e9)
print(f"T_local {bd.t_local:.4f}  T_net {bd.t_net:.4f}  T_server {bd.t_server:.4f}")

# Sweep the server share for a catalog VGG11 and watch the split move.
vgg = catalog_model("VGG11", seed=0)
phone = DeviceProfile("phone", 15e9, 7.5 * 125000, vgg)
for g in np.geomspace(1e9, 1e12, 7):
    t, p = min_cut(build_latency_graph(vgg, phone, g))
    print(f"g={g:9.3g}  T={t:.4f}s  layers on server: {len(p.server_set):2d}")
