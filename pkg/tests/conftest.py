import numpy as np
import pytest

from bamle import (BiasedGraph, GridDomain, SolveConfig, boundary_function,
                   counterexample_ray, make_bias, path_1d, solve, square_2d,
                   three_node)

TIGHT = SolveConfig(tolerance=1e-14, max_iterations=2_000_000)


def random_graph(rng, n=24, n_terminal=4, extra_edges=12):
    """Connected random graph with random terminal payoffs."""
    nodes = list(range(n))
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        a = int(order[k])
        b = int(order[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    while len(edges) < n - 1 + extra_edges:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    term = rng.choice(n, size=n_terminal, replace=False)
    payoff = {int(t): float(rng.uniform(-1, 1)) for t in term}
    return BiasedGraph(nodes, sorted(edges), payoff)


def corpus():
    """Regression problems: (label, space, bias) triples."""
    rng = np.random.default_rng(20240817)
    out = []
    g, b = three_node(1.0, 0.0, 2.0)
    out.append(("three-node", g, b))
    g, b = path_1d(10, 0.0, 1.0, beta=0.5)
    out.append(("path-11", g, b))
    g, b = path_1d(50, -0.3, 0.7, beta=0.1)
    out.append(("path-51", g, b))
    g, b = counterexample_ray(0.5, 20)
    out.append(("ray", g, b))
    g, b = square_2d(21, "mixed", 1.0)
    out.append(("square-mixed-b1", g, b))
    g, b = square_2d(21, "mixed", 0.25)
    out.append(("square-mixed-b025", g, b))
    g, b = square_2d(21, "negative", 1.0)
    out.append(("square-negative", g, b))
    g = random_graph(rng)
    out.append(("random-graph", g, make_bias(0.7, 1.0)))
    hole = {"lo": [0.4, 0.4], "hi": [0.6, 0.6], "value": 0.2}
    gh = GridDomain(2, [1.0, 1.0], 0.0625, 0.0625,
                    boundary_function("mixed"), holes=[hole])
    out.append(("square-hole", gh, make_bias(0.5, 0.0625)))
    return out


@pytest.fixture(scope="session")
def corpus_solved():
    return [(label, space, bias, solve(space, bias, TIGHT))
            for label, space, bias in corpus()]


@pytest.fixture(scope="session")
def square_mixed():
    space, bias = square_2d(21, "mixed", 1.0)
    return space, bias, solve(space, bias, TIGHT)
