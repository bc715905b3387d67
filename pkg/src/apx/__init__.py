"""2-approximate all-pairs shortest paths for distant vertex pairs."""

from .estimator import EstimateMatrix, init_21_approx, low_degree_apsp, seed_pivot_distances
from .graph import INF, Graph, bfs_sssp, degree_filtered_view, dijkstra_sssp, edge_degree, from_edge_list
from .pipeline import RunConfig, RunReport, run

__all__ = [
    "INF",
    "EstimateMatrix",
    "Graph",
    "RunConfig",
    "RunReport",
    "bfs_sssp",
    "degree_filtered_view",
    "dijkstra_sssp",
    "edge_degree",
    "from_edge_list",
    "init_21_approx",
    "low_degree_apsp",
    "run",
    "seed_pivot_distances",
]
