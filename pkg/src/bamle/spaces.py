"""Game boards: finite graphs and lattice discretizations of boxes.

Both space types expose the same surface used by the solver, the slope
calculus and the simulator:

* ``n``, ``ids``, ``id_index`` for node bookkeeping (canonical order),
* ``terminal_mask`` / ``terminal_values`` for the absorbing payoff set,
* ``running_payoff`` for the per-step payoff (zero by default),
* ``moves`` giving the legal move set of every node (index arrays,
  sorted so that ties in argmax/argmin scans resolve to the lowest id),
* shortest-path metric queries (``distance``, ``distances_from``,
  ``distance_matrix``, ``dist_to_terminals``).

Distances on graphs are hop counts scaled by a per-graph edge length; on
lattices they are shortest-path lengths with Euclidean edge weights, which
for axis-aligned moves is the L1 metric (computed by breadth-first search
when rectangular holes make the closed form invalid).

All instances are immutable after construction; the distance caches are
filled on demand and only ever grow, so sharing across readers is safe.
"""
from __future__ import annotations

import json
from collections import deque
from typing import Iterable, Mapping

import numpy as np

INF = float("inf")
DIST_TOL = 1e-12
_ALL_PAIRS_LIMIT = 2000


def _id_key(node_id):
    # Numbers sort before strings; keeps "lowest node id" well defined.
    if isinstance(node_id, bool):
        return (1, "", str(node_id))
    if isinstance(node_id, (int, float)):
        return (0, node_id, "")
    return (1, "", str(node_id))


class BiasedGraph:
    """Finite undirected board with absorbing payoff nodes.

    Parameters
    ----------
    nodes : iterable of hashable ids
    edges : iterable of (a, b) pairs
        Unordered; both players move along the same edges.
    terminal_payoff : mapping id -> float
        The absorbing set with its payoffs.  Must be nonempty.
    running_payoff : mapping id -> float, optional
        Per-step payoff collected at non-terminal states.  Defaults to 0.
    edge_length : float
        Metric length of one edge (default 1).
    """

    is_grid = False

    def __init__(self, nodes, edges, terminal_payoff, running_payoff=None,
                 edge_length=1.0):
        ids = sorted(nodes, key=_id_key)
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate node ids")
        if not terminal_payoff:
            raise ValueError("terminal set must be nonempty")
        if edge_length <= 0:
            raise ValueError("edge_length must be positive")
        self.ids = ids
        self.n = len(ids)
        self.id_index = {v: i for i, v in enumerate(ids)}
        self.edge_length = float(edge_length)

        nbr = [set() for _ in range(self.n)]
        edge_set = set()
        for a, b in edges:
            if a not in self.id_index or b not in self.id_index:
                raise ValueError(f"edge ({a!r}, {b!r}) uses unknown node")
            if a == b:
                raise ValueError(f"self loop at {a!r}")
            i, j = self.id_index[a], self.id_index[b]
            nbr[i].add(j)
            nbr[j].add(i)
            edge_set.add((min(i, j), max(i, j)))
        self.edges = tuple(sorted(edge_set))
        self.moves = tuple(np.array(sorted(s), dtype=np.int64) for s in nbr)

        self.terminal_mask = np.zeros(self.n, dtype=bool)
        self.terminal_values = np.full(self.n, np.nan)
        for v, g in terminal_payoff.items():
            if v not in self.id_index:
                raise ValueError(f"terminal id {v!r} not a node")
            i = self.id_index[v]
            self.terminal_mask[i] = True
            self.terminal_values[i] = float(g)

        self.running_payoff = np.zeros(self.n)
        for v, f in (running_payoff or {}).items():
            if v not in self.id_index:
                raise ValueError(f"running payoff id {v!r} not a node")
            self.running_payoff[self.id_index[v]] = float(f)

        for i in range(self.n):
            if not self.terminal_mask[i] and len(self.moves[i]) == 0:
                raise ValueError(f"non-terminal node {self.ids[i]!r} has no moves")

        self._dist_rows: dict[int, np.ndarray] = {}
        self._dist_matrix = None
        self._dist_to_terminals = None

    # -- metric -----------------------------------------------------------

    def _bfs_row(self, src: int) -> np.ndarray:
        hops = np.full(self.n, np.inf)
        hops[src] = 0.0
        q = deque([src])
        while q:
            i = q.popleft()
            h = hops[i] + 1.0
            for j in self.moves[i]:
                if hops[j] == np.inf:
                    hops[j] = h
                    q.append(j)
        return hops * self.edge_length

    def distances_from(self, i: int) -> np.ndarray:
        if self._dist_matrix is not None:
            return self._dist_matrix[i]
        row = self._dist_rows.get(i)
        if row is None:
            row = self._bfs_row(i)
            row.setflags(write=False)
            self._dist_rows[i] = row
        return row

    def distance_matrix(self) -> np.ndarray:
        if self._dist_matrix is None:
            if self.n > _ALL_PAIRS_LIMIT:
                raise ValueError(
                    f"all-pairs matrix limited to {_ALL_PAIRS_LIMIT} nodes")
            m = np.vstack([self._bfs_row(i) for i in range(self.n)])
            m.setflags(write=False)
            self._dist_matrix = m
        return self._dist_matrix

    def distance(self, a, b) -> float:
        return float(self.distances_from(self.id_index[a])[self.id_index[b]])

    def dist_to_terminals(self) -> np.ndarray:
        """Distance from every node to the nearest terminal node."""
        if self._dist_to_terminals is None:
            hops = np.full(self.n, np.inf)
            q = deque()
            for i in np.flatnonzero(self.terminal_mask):
                hops[i] = 0.0
                q.append(int(i))
            while q:
                i = q.popleft()
                h = hops[i] + 1.0
                for j in self.moves[i]:
                    if hops[j] == np.inf:
                        hops[j] = h
                        q.append(j)
            d = hops * self.edge_length
            d.setflags(write=False)
            self._dist_to_terminals = d
        return self._dist_to_terminals

    # -- JSON ---------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": list(self.ids),
            "edges": [[self.ids[i], self.ids[j]] for i, j in self.edges],
            "terminal": {str(self.ids[i]): float(self.terminal_values[i])
                         for i in np.flatnonzero(self.terminal_mask)},
            "running": {str(self.ids[i]): float(self.running_payoff[i])
                        for i in range(self.n) if self.running_payoff[i] != 0.0},
            "edge_length": self.edge_length,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "BiasedGraph":
        nodes = d["nodes"]
        by_str = {str(v): v for v in nodes}

        def resolve(k):
            return by_str.get(k, k)

        terminal = {resolve(k): v for k, v in d["terminal"].items()}
        running = {resolve(k): v for k, v in d.get("running", {}).items()}
        return cls(nodes, d["edges"], terminal, running,
                   edge_length=d.get("edge_length", 1.0))


class GridDomain:
    """Axis-aligned lattice discretization of a 1D interval or 2D box.

    Nodes are lattice points with spacing ``h``; the outermost layer (and
    the rim of any removed rectangular hole) is terminal and carries the
    boundary payoff.  Legal moves from a node are the lattice points within
    path distance ``epsilon`` (h <= epsilon), excluding the node itself.

    ``boundary`` may be a callable mapping a position array to payoffs, or
    a mapping from node id strings to values covering every boundary node.
    ``holes`` is a sequence of dicts ``{"lo": [...], "hi": [...], "value": v}``;
    lattice points inside the closed box are removed and the surviving
    nodes adjacent to a removed point become terminal with payoff ``v``.
    """

    is_grid = True

    def __init__(self, dim, extent, h, epsilon, boundary, holes=(),
                 boundary_name=None):
        if dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        extent = [float(e) for e in (extent if isinstance(extent, (list, tuple))
                                     else [extent])]
        if len(extent) != dim:
            raise ValueError("extent length must match dim")
        if h <= 0 or epsilon <= 0:
            raise ValueError("h and epsilon must be positive")
        if h > epsilon + DIST_TOL:
            raise ValueError("require h <= epsilon")
        self.dim = dim
        self.h = float(h)
        self.epsilon = float(epsilon)
        self.boundary_name = boundary_name

        counts = []
        for e in extent:
            k = int(round(e / h))
            if k < 2:
                raise ValueError("extent must span at least two steps")
            if abs(k * h - e) > 1e-9 * max(1.0, abs(e)):
                raise ValueError(f"extent {e} is not a multiple of h={h}")
            counts.append(k + 1)
        self.shape = tuple(counts)
        self.extent = tuple((c - 1) * self.h for c in self.shape)

        if dim == 1:
            coords = np.arange(self.shape[0], dtype=np.int64)[:, None]
        else:
            ii, jj = np.meshgrid(np.arange(self.shape[0]),
                                 np.arange(self.shape[1]), indexing="ij")
            coords = np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64)

        removed = np.zeros(len(coords), dtype=bool)
        hole_rim_value = {}
        self.holes = tuple(dict(hh) for hh in holes)
        for hole in self.holes:
            lo = np.asarray(hole["lo"], dtype=float)
            hi = np.asarray(hole["hi"], dtype=float)
            pos = coords * self.h
            inside = np.all((pos >= lo - DIST_TOL) & (pos <= hi + DIST_TOL),
                            axis=1)
            removed |= inside
        keep = ~removed
        if removed.any():
            # rim of each hole: kept nodes lattice-adjacent to a removed node
            removed_set = {tuple(c) for c in coords[removed]}
            for hole in self.holes:
                lo = np.asarray(hole["lo"], dtype=float)
                hi = np.asarray(hole["hi"], dtype=float)
                v = float(hole["value"])
                for c in coords[keep]:
                    for ax in range(dim):
                        for s in (-1, 1):
                            nb = c.copy()
                            nb[ax] += s
                            t = tuple(nb)
                            if t in removed_set:
                                pos = nb * self.h
                                if np.all((pos >= lo - DIST_TOL)
                                          & (pos <= hi + DIST_TOL)):
                                    hole_rim_value[tuple(c)] = v
        self.coords = coords[keep]
        self.n = len(self.coords)
        self.positions = self.coords * self.h
        self.positions.setflags(write=False)
        if dim == 1:
            self.ids = [str(int(c[0])) for c in self.coords]
        else:
            self.ids = [f"{int(c[0])},{int(c[1])}" for c in self.coords]
        self.id_index = {v: i for i, v in enumerate(self.ids)}
        self._coord_index = {tuple(c): i for i, c in enumerate(self.coords)}

        on_rim = np.zeros(self.n, dtype=bool)
        for ax in range(dim):
            on_rim |= (self.coords[:, ax] == 0)
            on_rim |= (self.coords[:, ax] == self.shape[ax] - 1)
        self.terminal_mask = on_rim.copy()
        for c in hole_rim_value:
            self.terminal_mask[self._coord_index[c]] = True

        # lattice adjacency (axis steps of one h) among surviving nodes
        adj = [[] for _ in range(self.n)]
        for i, c in enumerate(self.coords):
            for ax in range(dim):
                nb = c.copy()
                nb[ax] += 1
                j = self._coord_index.get(tuple(nb))
                if j is not None:
                    adj[i].append(j)
                    adj[j].append(i)
        self._lattice_adj = tuple(np.array(sorted(s), dtype=np.int64)
                                  for s in adj)

        self._dist_rows: dict[int, np.ndarray] = {}
        self._dist_matrix = None
        self._dist_to_terminals = None

        # move sets: path distance <= epsilon (+ tolerance), self excluded
        hop_radius = int(np.floor(self.epsilon / self.h + 1e-9))
        if hop_radius == 1:
            self.moves = self._lattice_adj
        else:
            mv = []
            for i in range(self.n):
                row = self.distances_from(i)
                ball = np.flatnonzero(row <= self.epsilon + DIST_TOL)
                mv.append(np.array(sorted(b for b in ball if b != i),
                                   dtype=np.int64))
            self.moves = tuple(mv)

        for i in range(self.n):
            if not self.terminal_mask[i] and len(self.moves[i]) == 0:
                raise ValueError("interior node with empty move set")

        self.terminal_values = np.full(self.n, np.nan)
        term_idx = np.flatnonzero(self.terminal_mask)
        rim_idx = {self._coord_index[c] for c in hole_rim_value}
        if callable(boundary):
            vals = boundary(self.positions[term_idx])
            self.terminal_values[term_idx] = np.asarray(vals, dtype=float)
        else:
            for i in term_idx:
                key = self.ids[i]
                if int(i) in rim_idx:
                    continue
                if key not in boundary:
                    raise ValueError(f"boundary value missing for node {key}")
                self.terminal_values[i] = float(boundary[key])
        for c, v in hole_rim_value.items():
            self.terminal_values[self._coord_index[c]] = v
        self._boundary_spec = boundary
        self.running_payoff = np.zeros(self.n)

    # -- metric -----------------------------------------------------------

    def _convex(self) -> bool:
        return not self.holes

    def _bfs_row(self, src: int) -> np.ndarray:
        hops = np.full(self.n, np.inf)
        hops[src] = 0.0
        q = deque([src])
        while q:
            i = q.popleft()
            h = hops[i] + 1.0
            for j in self._lattice_adj[i]:
                if hops[j] == np.inf:
                    hops[j] = h
                    q.append(j)
        return hops * self.h

    def distances_from(self, i: int) -> np.ndarray:
        if self._dist_matrix is not None:
            return self._dist_matrix[i]
        row = self._dist_rows.get(i)
        if row is None:
            if self._convex():
                row = self.h * np.abs(self.coords - self.coords[i]).sum(axis=1)
                row = row.astype(float)
            else:
                row = self._bfs_row(i)
            row.setflags(write=False)
            self._dist_rows[i] = row
        return row

    def distance_matrix(self) -> np.ndarray:
        if self._dist_matrix is None:
            if self.n > _ALL_PAIRS_LIMIT and not self._convex():
                raise ValueError(
                    f"all-pairs matrix limited to {_ALL_PAIRS_LIMIT} nodes")
            if self._convex():
                d = np.abs(self.coords[:, None, :]
                           - self.coords[None, :, :]).sum(axis=2) * self.h
                m = d.astype(float)
            else:
                m = np.vstack([self._bfs_row(i) for i in range(self.n)])
            m.setflags(write=False)
            self._dist_matrix = m
        return self._dist_matrix

    def distance(self, a, b) -> float:
        return float(self.distances_from(self.id_index[a])[self.id_index[b]])

    def dist_to_terminals(self) -> np.ndarray:
        if self._dist_to_terminals is None:
            hops = np.full(self.n, np.inf)
            q = deque()
            for i in np.flatnonzero(self.terminal_mask):
                hops[i] = 0.0
                q.append(int(i))
            while q:
                i = q.popleft()
                h = hops[i] + 1.0
                for j in self._lattice_adj[i]:
                    if hops[j] == np.inf:
                        hops[j] = h
                        q.append(j)
            d = hops * self.h
            d.setflags(write=False)
            self._dist_to_terminals = d
        return self._dist_to_terminals

    # -- refinement ---------------------------------------------------------

    def refine(self) -> "GridDomain":
        """Halve both the lattice step and the move radius."""
        if not callable(self._boundary_spec):
            raise ValueError("refinement needs a callable boundary")
        return GridDomain(self.dim, list(self.extent), self.h / 2.0,
                          self.epsilon / 2.0, self._boundary_spec,
                          holes=self.holes, boundary_name=self.boundary_name)

    def coarse_index_in(self, fine: "GridDomain") -> np.ndarray:
        """Indices of this grid's nodes inside a once-or-more refined grid."""
        ratio = self.h / fine.h
        k = int(round(ratio))
        if abs(ratio - k) > 1e-9:
            raise ValueError("grids are not nested")
        out = np.empty(self.n, dtype=np.int64)
        for i, c in enumerate(self.coords):
            j = fine._coord_index.get(tuple(c * k))
            if j is None:
                raise ValueError("coarse node missing from fine grid")
            out[i] = j
        return out

    # -- JSON ---------------------------------------------------------------

    def to_json_dict(self) -> dict:
        if self.boundary_name is not None:
            boundary = self.boundary_name
        else:
            boundary = {self.ids[i]: float(self.terminal_values[i])
                        for i in np.flatnonzero(self.terminal_mask)}
        d = {
            "dim": self.dim,
            "extent": list(self.extent),
            "h": self.h,
            "epsilon": self.epsilon,
            "boundary": boundary,
        }
        if self.holes:
            d["holes"] = [dict(h) for h in self.holes]
        return d

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "GridDomain":
        boundary = d["boundary"]
        name = None
        if isinstance(boundary, str):
            from .presets import boundary_function
            name = boundary
            boundary = boundary_function(name)
        return cls(d["dim"], d["extent"], d["h"], d["epsilon"], boundary,
                   holes=d.get("holes", ()), boundary_name=name)


Space = BiasedGraph | GridDomain


def path_distance(space: Space, x, y) -> float:
    """Shortest-path distance between two nodes; +inf if disconnected."""
    if x not in space.id_index or y not in space.id_index:
        raise KeyError(f"unknown node in pair ({x!r}, {y!r})")
    return space.distance(x, y)


def discrete_boundary(space: Space, interior: Iterable[int]) -> np.ndarray:
    """Nodes outside the set that can be reached in one move from it.

    Terminal nodes adjacent to the set are included, matching the role of
    the absorbing set in the comparison statements.
    """
    inside = np.zeros(space.n, dtype=bool)
    idx = np.fromiter(interior, dtype=np.int64)
    inside[idx] = True
    out = set()
    for i in idx:
        for j in space.moves[i]:
            if not inside[j]:
                out.add(int(j))
    return np.array(sorted(out), dtype=np.int64)


def move_csr(space: Space):
    """Flattened move lists (flat, ptr) for vectorized sweeps."""
    cached = getattr(space, "_move_csr", None)
    if cached is None:
        ptr = np.zeros(space.n + 1, dtype=np.int64)
        for i in range(space.n):
            ptr[i + 1] = ptr[i] + len(space.moves[i])
        flat = np.concatenate([m for m in space.moves]) if ptr[-1] else \
            np.empty(0, dtype=np.int64)
        cached = (flat, ptr)
        space._move_csr = cached
    return cached


def load_space(path_or_dict) -> Space:
    """Load a graph or grid from a JSON file path or parsed dict."""
    if isinstance(path_or_dict, (str,)):
        with open(path_or_dict) as fh:
            d = json.load(fh)
    else:
        d = path_or_dict
    if "nodes" in d:
        return BiasedGraph.from_json_dict(d)
    if "dim" in d:
        return GridDomain.from_json_dict(d)
    raise ValueError("unrecognized space JSON (need 'nodes' or 'dim')")
