# One device's best budget against a fixed price.
#
# With the placement held fixed the cost is K + c*alpha_s*max(A,1)/a + gamma*a,
# minimised at a* = sqrt(c*alpha_s*max(A,1)/gamma). Gradient steps land there,
# and the PartitionCurve shows which placement is optimal at each budget.

import numpy as np

from dds.cost import DeviceProfile, ServerProfile, server_flops
from dds.game import GameConfig, GameState, allocate, closed_form_best_response, device_iteration
from dds.model import catalog_model, total_flops
from dds.partition import PartitionCurve

S = 1.2e12
vit = catalog_model("ViT", seed=0)
dev = DeviceProfile("tablet", 15e9, 40 * 125000, vit)
curve = PartitionCurve(dev, g_max=S)
print(f"{len(curve.lines)} candidate placements, found with {curve.n_cuts} min cuts")
for g in curve.breakpoints:
    print(f"  placement switches at g = {g:.4g} FLOP/s")

A = 3.0
gamma = 4 * total_flops(vit) / S ** 2
cfg = GameConfig(gamma=gamma, learning_rate=0.05 * S / gamma, momentum_decay=0.9)
srv = ServerProfile(S)

state = GameState(0.05 * S)
for t in range(60):
    state, p, a = device_iteration(dev, state, A, srv, cfg, curve)
    if t % 10 == 0:
        print(f"round {t:2d}: a = {a / S:.4f} S, {len(p.server_set)} layers on server")

c = server_flops(p, vit)
a_star = closed_form_best_response(c, A, gamma)
print(f"gradient descent: {state.a / S:.5f} S   closed form: {a_star / S:.5f} S")

# The cost along the budget axis, with the placement re-optimised at every point.
grid = np.linspace(0.01, 1.0, 200) * S
cost = np.array([curve(allocate(a, A))[0] + gamma * a for a in grid])
print(f"grid minimum at {grid[cost.argmin()] / S:.3f} S")
