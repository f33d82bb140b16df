"""End-to-end detection: preprocess, initialise, optimise."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .community_init import InitResult, initialize_communities
from .engine import EngineConfig
from .graph import Graph
from .iterate import IterationConfig, WccTrace, run_wcc_iteration
from .partition import Partitioning
from .preprocess import FilteredGraph, PreprocessConfig, count_triangles

log = logging.getLogger(__name__)


@dataclass
class DetectResult:
    graph: Graph
    filtered: FilteredGraph
    init: InitResult
    trace: WccTrace

    @property
    def partitioning(self) -> Partitioning:
        return self.trace.best_partitioning

    @property
    def best_wcc(self) -> float:
        return self.trace.best_wcc

    def summary(self) -> dict:
        return {
            "vertices": self.graph.vertex_count,
            "edges": self.graph.edge_count,
            "filtered_edges": self.filtered.graph.edge_count,
            "subphases": self.filtered.plan.n_phases if self.filtered.plan else 1,
            "init_communities": len(self.init.partitioning.communities),
            "communities": len(self.partitioning.communities),
            "iterations": self.trace.iterations,
            "status": self.trace.status,
            "best_wcc": self.best_wcc,
        }


def detect(
    graph: Graph,
    engine_config: EngineConfig | None = None,
    preprocess_config: PreprocessConfig | None = None,
    iteration_config: IterationConfig | None = None,
) -> DetectResult:
    engine_config = engine_config or EngineConfig()
    preprocess_config = preprocess_config or PreprocessConfig()
    iteration_config = iteration_config or IterationConfig(
        avail_worker_memory=preprocess_config.avail_worker_memory
    )
    fg = count_triangles(graph, engine_config, preprocess_config)
    init = initialize_communities(fg, engine_config)
    trace = run_wcc_iteration(fg, init.partitioning, iteration_config, engine_config)
    return DetectResult(graph, fg, init, trace)
