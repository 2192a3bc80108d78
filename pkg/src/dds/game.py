"""Budget game between devices sharing one edge server.

Each device offers a budget ``a`` (FLOP/s). The server publishes the scalar
price ``A = sum(a) / S`` and grants ``g = a / max(A, 1)``. A device's cost is
its optimal latency at ``g`` plus ``gamma * a``; devices adjust ``a`` by
gradient descent with momentum and fall back to local execution, probing the
server periodically, when offloading stops paying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from dds.cost import DeviceProfile, ServerProfile, server_flops
from dds.partition import PartitionStrategy, direct_solver


@dataclass(frozen=True)
class GameConfig:
    gamma: float
    learning_rate: float
    momentum_decay: float = 0.9
    sniff_period: int = 5
    sniff_grid: int = 16
    sniff_min_fraction: float = 1e-4
    max_iters: int = 100
    eps: float = 1e-3
    window: int = 5

    def __post_init__(self):
        if not 0 <= self.momentum_decay < 1:
            raise ValueError("momentum_decay must lie in [0, 1)")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.sniff_grid < 2:
            raise ValueError("sniff_grid must be at least 2")
        if self.sniff_period < 1:
            raise ValueError("sniff_period must be at least 1")

    @classmethod
    def for_server(cls, capacity, c_max, alpha_s=1.0, **kw):
        """Defaults scaled to a server: gamma at twice the contraction threshold, lr = 0.05 S / gamma."""
        gamma = kw.pop("gamma", None) or 2.0 * c_max * alpha_s / (4.0 * capacity ** 2)
        lr = kw.pop("learning_rate", None) or 0.05 * capacity / gamma
        return cls(gamma=gamma, learning_rate=lr, **kw)


@dataclass(frozen=True)
class GameState:
    a: float
    momentum: float = 0.0
    iteration: int = 0
    last_strategy: PartitionStrategy | None = None
    local_mode_rounds: int = 0
    sniffed_at: float | None = None  # price seen at the last Resource Sniff


class PriceBoard:
    """Server-side record of budgets; the only state devices share."""

    def __init__(self, capacity):
        if not capacity > 0:
            raise ValueError("capacity must be positive")
        self.capacity = float(capacity)
        self.budgets = {}
        self._total = 0.0

    def report(self, device_id, a):
        if a < 0:
            raise ValueError("budget must be nonnegative")
        self.budgets[device_id] = float(a)
        self._total = math.fsum(self.budgets.values())

    @property
    def A(self):
        return self._total / self.capacity


def price(board: PriceBoard):
    """Return (A, unit price)."""
    A = board.A
    return A, max(A, 1.0)


def allocate(a_i: float, A: float) -> float:
    if a_i < 0:
        raise ValueError("budget must be nonnegative")
    return a_i / max(A, 1.0)


def gradient(a_i: float, A: float, c_i: float, gamma: float, alpha_s: float = 1.0) -> float:
    """d cost / d budget for a fixed placement that sends ``c_i`` FLOPs to the server."""
    if a_i <= 0:
        raise ValueError("gradient undefined at zero budget; use resource_sniff")
    g = allocate(a_i, A)
    return gamma - c_i * alpha_s / (max(1.0, A) * g * g)


def momentum_step(a: float, momentum: float, grad: float, cfg: GameConfig, capacity: float):
    """One momentum update; returns (new budget clamped to [0, capacity], new momentum).

    A step that hits either bound also clears the momentum, so velocity built up
    against the wall does not keep the budget pinned there.
    """
    if not math.isfinite(grad):
        raise ValueError("gradient must be finite")
    nu = cfg.momentum_decay * momentum + (1.0 - cfg.momentum_decay) * grad
    a_new = a - cfg.learning_rate * nu
    if a_new <= 0.0:
        return 0.0, 0.0
    if a_new >= capacity:
        return capacity, 0.0
    return a_new, nu


def closed_form_best_response(c_star: float, A: float, gamma: float, alpha_s: float = 1.0) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return math.sqrt(c_star * alpha_s * max(A, 1.0) / gamma)


def contraction_holds(gamma: float, c_star: float, capacity: float) -> bool:
    """Sufficient condition for the price map to contract: gamma > c* / (4 S^2)."""
    return gamma > c_star / (4.0 * capacity ** 2)


def sniff_grid(capacity, cfg: GameConfig):
    return np.geomspace(capacity * cfg.sniff_min_fraction, capacity, cfg.sniff_grid)


def resource_sniff(dev: DeviceProfile, srv: ServerProfile, A: float, cfg: GameConfig, solver=None) -> float:
    """Grid-search a budget against the current price; 0 means staying local is at least as good."""
    solve = solver or direct_solver(dev, srv.alpha_server)
    local_cost, _ = solve(0.0)
    best_a, best_cost = 0.0, local_cost
    for a in sniff_grid(srv.capacity, cfg):
        t, _ = solve(allocate(float(a), A))
        cost = t + cfg.gamma * a
        if cost < best_cost:
            best_a, best_cost = float(a), cost
    return best_a


def device_iteration(dev: DeviceProfile, state: GameState, A_observed: float, srv: ServerProfile,
                     cfg: GameConfig, solver=None):
    """One round of the on-device loop; returns (new state, strategy, budget to report)."""
    solve = solver or direct_solver(dev, srv.alpha_server)
    t = state.iteration + 1

    if state.a == 0:
        rounds = state.local_mode_rounds + 1
        if rounds >= cfg.sniff_period:
            cand = resource_sniff(dev, srv, A_observed, cfg, solve)
            if cand > 0:
                _, p = solve(allocate(cand, A_observed))
                return GameState(cand, 0.0, t, p, 0, A_observed), p, cand
            state = replace(state, sniffed_at=A_observed)
            rounds = 0
        p = PartitionStrategy.all_local(dev.model)
        return replace(state, iteration=t, last_strategy=p, local_mode_rounds=rounds), p, 0.0

    _, p = solve(allocate(state.a, A_observed))
    c = server_flops(p, dev.model)
    if c == 0:
        return GameState(0.0, 0.0, t, p, 0), p, 0.0
    grad = gradient(state.a, A_observed, c, cfg.gamma, srv.alpha_server)
    a_new, nu = momentum_step(state.a, state.momentum, grad, cfg, srv.capacity)
    if a_new == 0:
        return GameState(0.0, 0.0, t, p, 0), p, 0.0
    return GameState(a_new, nu, t, p, 0), p, a_new
