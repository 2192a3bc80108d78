"""Layer partitioning of DNNs between devices and a shared edge server, with a budget game for server capacity."""

from dds.cost import CostBreakdown, DeviceProfile, ServerProfile, inference_cost
from dds.game import GameConfig, GameState, PriceBoard, closed_form_best_response, device_iteration
from dds.model import ModelGraph, catalog_model, load_model, parse_model
from dds.partition import PartitionCurve, PartitionStrategy, brute_force_optimal, build_latency_graph, min_cut
from dds.sim import ScenarioConfig, compare, convergence_study, run_baseline, run_dds

__all__ = [
    "CostBreakdown", "DeviceProfile", "ServerProfile", "inference_cost",
    "GameConfig", "GameState", "PriceBoard", "closed_form_best_response", "device_iteration",
    "ModelGraph", "catalog_model", "load_model", "parse_model",
    "PartitionCurve", "PartitionStrategy", "brute_force_optimal", "build_latency_graph", "min_cut",
    "ScenarioConfig", "compare", "convergence_study", "run_baseline", "run_dds",
]
