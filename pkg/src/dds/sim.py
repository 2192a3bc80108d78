"""Deterministic multi-device simulation of the budget game and its baselines.

Devices are drawn from seeded distributions. Each round every device runs one
iteration of the on-device loop in schedule order; the price board is updated
after every report, so later devices in a round already see earlier moves.
Latencies come from the cost model; nothing is executed or timed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from functools import lru_cache

import numpy as np

from dds.cost import CostBreakdown, DeviceProfile, ServerProfile, inference_cost
from dds.game import GameConfig, GameState, PriceBoard, allocate, device_iteration
from dds.model import CATALOG, DEFAULT_RAW_INPUT_BYTES, DEFAULT_RESULT_BYTES, catalog_model, total_flops
from dds.partition import PartitionCurve, PartitionStrategy

MBIT = 125000.0  # bytes per megabit
METHODS = ("EO", "SO", "DADS", "DDS")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    n_devices: int = 100
    bandwidth_mbps: tuple = (5.0, 10.0)
    compute_gflops: tuple = (10.0, 20.0)
    models: tuple = tuple(CATALOG)
    server_tflops: float = 1.2
    gamma: float | None = None
    learning_rate: float | None = None
    momentum: float = 0.9
    sniff_period: int = 5
    sniff_grid: int = 16
    max_iters: int = 100
    eps: float = 1e-3
    window: int = 5
    a0_fraction: float = 0.01
    seed: int = 0
    schedule: str = "random"
    alpha_local: float = 1.0
    alpha_server: float = 1.0
    raw_input_bytes: float = DEFAULT_RAW_INPUT_BYTES
    result_bytes: float = DEFAULT_RESULT_BYTES
    tracked_device: int = 0

    def __post_init__(self):
        if self.n_devices < 1:
            raise ScenarioError("n_devices must be at least 1")
        for key in ("bandwidth_mbps", "compute_gflops"):
            lo, hi = getattr(self, key)
            if not 0 < lo <= hi:
                raise ScenarioError(f"{key} must be a positive ordered range, got {(lo, hi)}")
        unknown = [m for m in self.models if m not in CATALOG]
        if unknown or not self.models:
            raise ScenarioError(f"models: unknown catalog names {unknown}")
        if self.schedule not in ("random", "round_robin"):
            raise ScenarioError(f"schedule must be 'random' or 'round_robin', got {self.schedule!r}")
        if self.a0_fraction < 0 or self.a0_fraction > 1:
            raise ScenarioError("a0_fraction must lie in [0, 1]")
        if not 0 <= self.tracked_device < self.n_devices:
            raise ScenarioError("tracked_device out of range")

    @property
    def capacity(self):
        return self.server_tflops * 1e12

    def server(self):
        return ServerProfile(self.capacity, self.alpha_server)

    def game_config(self):
        c_max = max(total_flops(catalog_model(m, self.seed)) for m in self.models)
        return GameConfig.for_server(
            self.capacity, c_max, self.alpha_server,
            gamma=self.gamma, learning_rate=self.learning_rate,
            momentum_decay=self.momentum, sniff_period=self.sniff_period, sniff_grid=self.sniff_grid,
            max_iters=self.max_iters, eps=self.eps, window=self.window,
        )


_TUPLE_KEYS = {"bandwidth_mbps", "compute_gflops"}


def parse_scenario(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key=value`` lines (``#`` comments) into a ScenarioConfig.

    Ranges are written ``lo,hi``; ``models`` is a comma list of catalog names.
    """
    base = base or ScenarioConfig()
    types = {f.name: f for f in fields(ScenarioConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _TUPLE_KEYS:
                lo, hi = (float(x) for x in value.split(","))
                updates[key] = (lo, hi)
            elif key == "models":
                updates[key] = tuple(x.strip() for x in value.split(",") if x.strip())
            elif key == "schedule":
                updates[key] = value
            elif key in ("gamma", "learning_rate"):
                updates[key] = None if value.lower() in ("", "auto", "none") else float(value)
            elif isinstance(getattr(base, key), int):
                updates[key] = int(value)
            else:
                updates[key] = float(value)
        except ValueError:
            raise ScenarioError(f"line {lineno}: bad value for key {key!r}: {value!r}") from None
    return replace(base, **updates)


def load_scenario(path, base=None) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), base)


def sample_devices(cfg: ScenarioConfig):
    """Draw the fleet; device k is the same for every n_devices > k under one seed."""
    rng = np.random.default_rng(cfg.seed)
    graphs = {m: catalog_model(m, cfg.seed, cfg.raw_input_bytes, cfg.result_bytes) for m in cfg.models}
    devices = []
    for k in range(cfg.n_devices):
        model = cfg.models[int(rng.integers(len(cfg.models)))]
        bw = rng.uniform(*cfg.bandwidth_mbps) * MBIT
        comp = rng.uniform(*cfg.compute_gflops) * 1e9
        devices.append(DeviceProfile(
            id=f"d{k:03d}", compute=float(comp), bandwidth=float(bw), model=graphs[model],
            alpha_local=cfg.alpha_local, raw_input_bytes=cfg.raw_input_bytes, result_bytes=cfg.result_bytes,
        ))
    return devices


@lru_cache(maxsize=4096)
def _curve(dev, alpha_s, g_max):
    return PartitionCurve(dev, alpha_s, g_max)


@dataclass
class DeviceOutcome:
    device_id: str
    model: str
    a: float
    g: float
    strategy: PartitionStrategy
    breakdown: CostBreakdown


@dataclass
class RunResult:
    method: str
    n_devices: int
    devices: list
    price_series: list = field(default_factory=list)  # A after each round
    tracked_series: list = field(default_factory=list)  # A seen by the tracked device
    trace: list = field(default_factory=list)
    converged: bool = True
    iterations: int = 0

    def _mean(self, attr):
        return math.fsum(getattr(d.breakdown, attr) for d in self.devices) / len(self.devices)

    @property
    def mean_T(self):
        return self._mean("t_total")

    @property
    def mean_Ts(self):
        return self._mean("t_server")

    @property
    def mean_Tt(self):
        return self._mean("t_net")

    @property
    def mean_Tl(self):
        return self._mean("t_local")

    @property
    def final_A(self):
        return self.price_series[-1] if self.price_series else 0.0

    def summary_row(self):
        return {
            "method": self.method, "N": self.n_devices,
            "mean_T": self.mean_T, "mean_Ts": self.mean_Ts, "mean_Tt": self.mean_Tt, "mean_Tl": self.mean_Tl,
            "converged": int(self.converged), "iters": self.iterations,
        }


def _converged(series, states, eps, window):
    """Price steady over ``window`` rounds and every idle device has sniffed at that price."""
    if len(series) <= window:
        return False
    cur = series[-1]
    band = eps * max(cur, 1.0)
    if any(abs(cur - prev) >= band for prev in series[-window - 1:-1]):
        return False
    return all(st.a > 0 or (st.sniffed_at is not None and abs(st.sniffed_at - cur) < band) for st in states)


def run_dds(cfg: ScenarioConfig, devices=None) -> RunResult:
    """Iterate the budget game until the price settles or ``max_iters`` rounds pass."""
    devices = devices if devices is not None else sample_devices(cfg)
    srv = cfg.server()
    game = cfg.game_config()
    S = srv.capacity
    solvers = [_curve(d, srv.alpha_server, S) for d in devices]
    sched_rng = np.random.default_rng([cfg.seed, 1])

    board = PriceBoard(S)
    a0 = cfg.a0_fraction * S
    # a device starting without a budget probes the server on its first round
    fresh_rounds = game.sniff_period - 1 if a0 == 0 else 0
    states = [GameState(a0, local_mode_rounds=fresh_rounds) for _ in devices]
    for d, st in zip(devices, states):
        board.report(d.id, st.a)

    result = RunResult("DDS", len(devices), [], converged=False)
    tracked = min(cfg.tracked_device, len(devices) - 1)
    order = np.arange(len(devices))
    for t in range(1, game.max_iters + 1):
        if cfg.schedule == "random":
            order = sched_rng.permutation(len(devices))
        for k in order:
            dev = devices[k]
            A_seen = board.A
            if k == tracked:
                result.tracked_series.append(A_seen)
            st, p, a_rep = device_iteration(dev, states[k], A_seen, srv, game, solvers[k])
            states[k] = st
            board.report(dev.id, a_rep)
            g = allocate(a_rep, board.A)
            bd = inference_cost(p, dev, srv, g, a_rep, game.gamma)
            result.trace.append((t, dev.id, a_rep, g, board.A, bd.t_total, bd.cost))
        result.price_series.append(board.A)
        result.iterations = t
        if _converged(result.price_series, states, game.eps, game.window):
            result.converged = True
            break

    A = board.A
    for dev, st, solve in zip(devices, states, solvers):
        g = allocate(st.a, A)
        _, p = solve(g)
        result.devices.append(DeviceOutcome(dev.id, dev.model.name, st.a, g, p,
                                            inference_cost(p, dev, srv, g, st.a, game.gamma)))
    return result


def run_baseline(cfg: ScenarioConfig, which: str, devices=None) -> RunResult:
    """EO: everything local. SO: everything on the server. DADS: min cut at a fixed S/N share."""
    devices = devices if devices is not None else sample_devices(cfg)
    srv = cfg.server()
    share = srv.capacity / len(devices)
    result = RunResult(which, len(devices), [])
    for dev in devices:
        if which == "EO":
            p, g = PartitionStrategy.all_local(dev.model), 0.0
        elif which == "SO":
            p, g = PartitionStrategy.all_server(dev.model), share
        elif which == "DADS":
            g = share
            _, p = _curve(dev, srv.alpha_server, srv.capacity)(g)
        else:
            raise ValueError(f"unknown baseline {which!r}")
        result.devices.append(DeviceOutcome(dev.id, dev.model.name, 0.0, g, p, inference_cost(p, dev, srv, g)))
    return result


def run_method(cfg, method, devices=None):
    return run_dds(cfg, devices) if method == "DDS" else run_baseline(cfg, method, devices)


def compare(cfg: ScenarioConfig, Ns) -> list:
    """All four methods for each fleet size, on paired fleets; returns RunResults in (N, method) order."""
    out = []
    for n in Ns:
        sub = replace(cfg, n_devices=n, tracked_device=min(cfg.tracked_device, n - 1))
        devices = sample_devices(sub)
        for method in METHODS:
            out.append(run_method(sub, method, devices))
    return out


def convergence_study(cfg: ScenarioConfig, a0_list) -> dict:
    """Run the game once per initial budget fraction on the same fleet; maps a0 -> RunResult."""
    devices = sample_devices(cfg)
    return {a0: run_dds(replace(cfg, a0_fraction=a0), devices) for a0 in a0_list}


TRACE_HEADER = ("iteration", "device_id", "a", "g", "A", "T", "L")
SUMMARY_HEADER = ("method", "N", "mean_T", "mean_Ts", "mean_Tt", "mean_Tl", "converged", "iters")


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_trace_csv(path, result: RunResult):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in result.trace:
            w.writerow([_fmt(x) for x in row])


def write_convergence_csv(path, study: dict):
    """One row per (a0, round): the price seen by the tracked device and the board price."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("a0", "iteration", "A_tracked", "A"))
        for a0, res in study.items():
            for t, (seen, A) in enumerate(zip(res.tracked_series, res.price_series), start=1):
                w.writerow([_fmt(a0), t, _fmt(seen), _fmt(A)])


def write_summary_csv(path, results):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for res in results:
            row = res.summary_row()
            w.writerow([_fmt(row[k]) for k in SUMMARY_HEADER])
