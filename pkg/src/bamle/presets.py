"""Built-in problems used by the CLI and the regression suite."""
from __future__ import annotations

import math

import numpy as np

from .bias import BiasParams, make_bias, unbiased
from .spaces import BiasedGraph, GridDomain


def boundary_function(name: str):
    """Named boundary payoff profiles for grids."""
    try:
        return _BOUNDARY_FUNCS[name]
    except KeyError:
        raise ValueError(f"unknown boundary preset {name!r}; "
                         f"have {sorted(_BOUNDARY_FUNCS)}") from None


def _linear_x(pos):
    return pos[:, 0]


def _mixed(pos):
    y = pos[:, 1] if pos.shape[1] > 1 else pos[:, 0]
    return pos[:, 0] + 0.25 * np.sin(2.0 * np.pi * y)


def _negative(pos):
    y = pos[:, 1] if pos.shape[1] > 1 else np.zeros(len(pos))
    return -1.5 + 0.3 * np.sin(2.0 * np.pi * pos[:, 0]) \
        + 0.3 * np.cos(2.0 * np.pi * y)


_BOUNDARY_FUNCS = {
    "linear-x": _linear_x,
    "mixed": _mixed,
    "negative": _negative,
}


def counterexample_ray(a: float = 0.5, n: int = 20
                       ) -> tuple[BiasedGraph, BiasParams]:
    """Truncated ray with a payoff spike, played at odds 2:1.

    Nodes are the ray (k,0) for k = -1..n plus the spike (0,1); both ray
    ends and the spike are terminal.  The truncation value continues the
    one-parameter family a*(1 - 2^-k), so the family field is an exact
    fixed point of the game operator on the truncated board.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    if n < 2:
        raise ValueError("need n >= 2")
    nodes = ["0,1", "-1,0"] + [f"{k},0" for k in range(n + 1)]
    edges = [("0,1", "0,0"), ("-1,0", "0,0")]
    edges += [(f"{k},0", f"{k + 1},0") for k in range(n)]
    terminal = {"0,1": 1.0, "-1,0": -2.0, f"{n},0": a * (1.0 - 2.0 ** -n)}
    graph = BiasedGraph(nodes, edges, terminal)
    return graph, make_bias(math.log(2.0), 1.0)


def counterexample_ray_field(graph: BiasedGraph, a: float) -> np.ndarray:
    """The a-indexed family member on the truncated ray."""
    vals = np.empty(graph.n)
    for i, v in enumerate(graph.ids):
        if v == "0,1":
            vals[i] = 1.0
        elif v == "-1,0":
            vals[i] = -2.0
        else:
            k = int(v.split(",")[0])
            vals[i] = a * (1.0 - 2.0 ** -k)
    return vals


def cone_values(grid: GridDomain, slope_a: float, beta: float,
                center_id: str | None = None) -> np.ndarray:
    """Exact positive-cone field (A/beta)(1 - exp(-beta*d)) on a grid."""
    ci = grid.id_index[center_id if center_id is not None else grid.ids[0]]
    d = grid.distances_from(ci)
    return (slope_a / beta) * -np.expm1(-beta * d)


def cone_1d(slope_a: float = 1.0, beta: float = 1.0, epsilon: float = 0.05,
            extent: float = 10.0) -> tuple[GridDomain, BiasParams]:
    """1D lattice whose boundary carries exact positive-cone data.

    The cone is centered at the left end; with rho = exp(beta*epsilon) it
    is an exact fixed point of the game operator at every lattice node.
    """
    def cone_boundary(pos):
        return (slope_a / beta) * -np.expm1(-beta * pos[:, 0])

    grid = GridDomain(1, [extent], epsilon, epsilon, cone_boundary,
                      boundary_name=None)
    return grid, make_bias(beta, epsilon)


def path_1d(n: int = 10, left: float = 0.0, right: float = 1.0,
            beta: float = 0.5, epsilon: float = 1.0
            ) -> tuple[BiasedGraph, BiasParams]:
    """Path graph 0..n with terminal payoffs at both ends."""
    nodes = list(range(n + 1))
    edges = [(k, k + 1) for k in range(n)]
    graph = BiasedGraph(nodes, edges, {0: left, n: right})
    bias = make_bias(beta, epsilon) if beta > 0 else unbiased(epsilon)
    return graph, bias


def path_closed_form(n: int, left: float, right: float, rho: float
                     ) -> np.ndarray:
    """Exact fixed point on the path: geometric interpolation of the ends."""
    k = np.arange(n + 1, dtype=float)
    if rho == 1.0:
        w = k / n
    else:
        w = (1.0 - rho ** -k) / (1.0 - rho ** float(-n))
    if right >= left:
        return left + (right - left) * w
    # decreasing data: same profile seen from the other end
    wr = (1.0 - rho ** -(n - k)) / (1.0 - rho ** float(-n)) \
        if rho != 1.0 else (n - k) / n
    return right + (left - right) * wr


def square_2d(n: int = 21, boundary: str = "mixed", beta: float = 1.0,
              extent: float = 1.0, epsilon: float | None = None
              ) -> tuple[GridDomain, BiasParams]:
    """Square grid with a named boundary profile; moves are lattice steps.

    ``epsilon`` overrides the lattice step (and move radius); otherwise
    the step is extent/(n-1).
    """
    h = epsilon if epsilon is not None else extent / (n - 1)
    grid = GridDomain(2, [extent, extent], h, h, boundary_function(boundary),
                      boundary_name=boundary)
    bias = make_bias(beta, h) if beta > 0 else unbiased(h)
    return grid, bias


def three_node(p: float = 1.0, q: float = 0.0, rho: float = 2.0
               ) -> tuple[BiasedGraph, BiasParams]:
    """Single interior node between two terminals; value (rho p + q)/(rho+1)
    when p >= q."""
    graph, _ = path_1d(2, q, p, beta=1.0)
    return graph, make_bias(math.log(rho), 1.0)


PRESETS = {
    "counterexample-ray": counterexample_ray,
    "cone-1d": cone_1d,
    "path-1d": path_1d,
    "square-2d": square_2d,
}


def build_preset(name: str, **kwargs) -> tuple:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return PRESETS[name](**kwargs)
