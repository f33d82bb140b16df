"""Distributed community detection by Weighted Community Clustering."""

from .community_init import initialize_communities
from .engine import Engine, EngineConfig
from .errors import ConfigError, DistWccError, EngineError, NoConvergenceError, ParseError
from .graph import Graph, load_edge_list
from .iterate import IterationConfig, compute_partition_wcc, run_wcc_iteration
from .metric import global_wcc
from .partition import Partitioning, read_partition, write_partition
from .pipeline import detect
from .preprocess import FilteredGraph, PreprocessConfig, count_triangles

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DistWccError",
    "Engine",
    "EngineConfig",
    "EngineError",
    "FilteredGraph",
    "Graph",
    "IterationConfig",
    "NoConvergenceError",
    "ParseError",
    "Partitioning",
    "PreprocessConfig",
    "compute_partition_wcc",
    "count_triangles",
    "detect",
    "global_wcc",
    "initialize_communities",
    "load_edge_list",
    "read_partition",
    "run_wcc_iteration",
    "write_partition",
]
