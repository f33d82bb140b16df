"""Small graphs shared across test modules."""

from distwcc.generators import erdos_renyi
from distwcc.graph import Graph

# bowtie: triangles {c,a,b} and {c,d,e} sharing c; c=0, a=1, b=2, d=3, e=4
BOWTIE = [(0, 1), (0, 2), (1, 2), (0, 3), (0, 4), (3, 4)]
C, A, B, D, E = range(5)


def complete(n: int) -> Graph:
    return Graph.from_edges([(i, j) for i in range(n) for j in range(i + 1, n)])


def er_graph(n: int, p: float, seed: int) -> Graph:
    """G(n, p) on exactly ``n`` vertices, isolated ones included."""
    return Graph.from_adjacency(n, erdos_renyi(n, p, seed))
