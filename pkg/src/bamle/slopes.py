"""Exponential slope functionals.

The global slope of ``u`` over a node set ``E`` with bias ``beta`` is

    beta * sup over ordered pairs x != y of
        (u(y) - exp(-beta*d(x,y)) * u(x)) / (1 - exp(-beta*d(x,y)))

which reduces to the Lipschitz constant as ``beta -> 0``.  The one-sided
slopes at radius ``r`` take the same quotient pinned at a single node and
a fixed radius, extremized over the closed metric ball:

    s_plus(y, r)  = max over ball of beta*(u(w) - exp(-beta*r)*u(y)) / (1 - exp(-beta*r))
    s_minus(y, r) = min over ball of beta*(exp(beta*r)*u(w) - u(y)) / (exp(beta*r) - 1)

Both formulas evaluate the identical quotient at the ball maximizer and
minimizer respectively (the second is the first rewritten with the growing
exponential), so with the center included one always has

    s_minus(y, r) <= beta * u(y) <= s_plus(y, r).

On fields produced by the dynamic-programming solver, s_plus is
nondecreasing and s_minus nonincreasing in the radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import as_values
from .spaces import DIST_TOL, Space

_BETA_ZERO = 1e-14


@dataclass(frozen=True)
class SlopeReport:
    """A slope value with the pair of nodes attaining it."""

    value: float
    witness_pair: tuple
    radius: float | None = None


@dataclass(frozen=True)
class ChainResult:
    """Greedy ascent chain with its per-step data."""

    nodes: list
    flag: str                      # "terminal" or "local-max"
    steps: list                    # (u at x_{j-1}, u at x_j, step length)
    total_length: float


def _pair_quotient(u_x: float, u_y: float, d: float, beta: float) -> float:
    """The biased difference quotient for the ordered pair (x, y)."""
    if d <= 0.0:
        raise ValueError("quotient needs distinct nodes")
    if beta <= _BETA_ZERO:
        return (u_y - u_x) / d
    if math.isinf(d):
        return beta * u_y
    w = math.exp(-beta * d)
    return beta * (u_y - w * u_x) / (1.0 - w)


def exp_slope(space: Space, u, nodes=None, beta: float = 0.0) -> SlopeReport:
    """Global exponential slope of ``u`` over a node set.

    Parameters
    ----------
    space : BiasedGraph or GridDomain
    u : ValueField, mapping or array
    nodes : iterable of node ids, optional
        Defaults to all nodes.  A singleton set returns ``beta * u`` at
        that node, the constant-function limit of the quotient.
    beta : float
        Bias rate, >= 0.  ``beta = 0`` gives the Lipschitz constant.

    Returns
    -------
    SlopeReport
        The supremum over ordered pairs and a witnessing pair (x, y).
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    vals = as_values(space, u)
    if nodes is None:
        idx = np.arange(space.n)
    else:
        idx = np.array([space.id_index[v] for v in nodes], dtype=np.int64)
    if len(idx) == 0:
        raise ValueError("empty node set")
    if len(idx) == 1:
        i = int(idx[0])
        return SlopeReport(beta * float(vals[i]), (space.ids[i],))

    uv = vals[idx]
    best = -np.inf
    best_pair = (space.ids[int(idx[0])], space.ids[int(idx[1])])
    for a, i in enumerate(idx):
        d = space.distances_from(int(i))[idx]
        with np.errstate(invalid="ignore"):
            if beta <= _BETA_ZERO:
                q = (uv - uv[a]) / d
                q[np.isinf(d)] = 0.0
            else:
                w = np.exp(-beta * d)
                q = beta * (uv - w * uv[a]) / (1.0 - w)
                q[np.isinf(d)] = beta * uv[np.isinf(d)]
        q[a] = -np.inf
        b = int(np.argmax(q))
        if q[b] > best:
            best = float(q[b])
            best_pair = (space.ids[int(i)], space.ids[int(idx[b])])
    return SlopeReport(best, best_pair)


def boundary_slope(space: Space, beta: float) -> SlopeReport:
    """Exponential slope of the terminal payoff over the terminal set."""
    term = [space.ids[i] for i in np.flatnonzero(space.terminal_mask)]
    return exp_slope(space, np.nan_to_num(space.terminal_values), term, beta)


def _ball(space: Space, y_idx: int, r: float) -> np.ndarray:
    d = space.distances_from(y_idx)
    return np.flatnonzero(d <= r + DIST_TOL)


def local_slope(space: Space, u, y, beta: float) -> SlopeReport:
    """Slope of ``u`` over the smallest nontrivial ball around ``y``.

    The ball is ``y`` together with its move neighbors.  On a fixed
    lattice the slope over shrinking balls is nonincreasing, so this is
    the discrete local slope.  Rejected when the ball touches a terminal
    node (``y`` is too close to the absorbing set).
    """
    vals = as_values(space, u)
    yi = space.id_index[y]
    if space.terminal_mask[yi]:
        raise ValueError(f"{y!r} is terminal")
    ball = np.concatenate([[yi], space.moves[yi]])
    if space.terminal_mask[ball].any():
        raise ValueError(f"{y!r} is adjacent to the terminal set")
    radius = float(space.distances_from(yi)[ball].max())
    rep = exp_slope(space, vals, [space.ids[i] for i in ball], beta)
    return SlopeReport(rep.value, rep.witness_pair, radius)


def _check_radius(space: Space, yi: int, r: float) -> None:
    if not r > 0:
        raise ValueError("radius must be positive")
    dist_y = float(space.dist_to_terminals()[yi])
    if r >= dist_y - DIST_TOL:
        raise ValueError(
            f"radius {r} reaches the terminal set (dist={dist_y})")


def s_plus(space: Space, u, y, r: float, beta: float) -> SlopeReport:
    """Positive slope at radius ``r``: ball maximum of the pinned quotient."""
    vals = as_values(space, u)
    yi = space.id_index[y]
    _check_radius(space, yi, r)
    ball = _ball(space, yi, r)
    uy = vals[yi]
    gplus = vals[ball]
    k = int(np.argmax(gplus))
    if beta <= _BETA_ZERO:
        value = float((gplus[k] - uy) / r)
    else:
        w = math.exp(-beta * r)
        value = float(beta * (gplus[k] - w * uy) / (1.0 - w))
    return SlopeReport(value, (space.ids[int(ball[k])], y), r)


def s_minus(space: Space, u, y, r: float, beta: float) -> SlopeReport:
    """Negative slope at radius ``r``: ball minimum of the growing-exponential
    quotient ``beta*(exp(beta*r)*u(w) - u(y)) / (exp(beta*r) - 1)``."""
    vals = as_values(space, u)
    yi = space.id_index[y]
    _check_radius(space, yi, r)
    ball = _ball(space, yi, r)
    uy = vals[yi]
    gminus = vals[ball]
    k = int(np.argmin(gminus))
    if beta <= _BETA_ZERO:
        value = float((gminus[k] - uy) / r)
    else:
        w = math.exp(beta * r)
        value = float(beta * (w * gminus[k] - uy) / (w - 1.0))
    return SlopeReport(value, (space.ids[int(ball[k])], y), r)


def realizable_radii(space: Space, y, max_radius: float | None = None
                     ) -> np.ndarray:
    """Sorted positive ball radii realized by the lattice around ``y``.

    Radii at or beyond the distance to the terminal set are dropped, so
    every returned radius is valid for ``s_plus`` / ``s_minus``.
    """
    yi = space.id_index[y]
    d = space.distances_from(yi)
    limit = float(space.dist_to_terminals()[yi])
    if max_radius is not None:
        limit = min(limit, max_radius + DIST_TOL)
    r = np.unique(d[(d > DIST_TOL) & (d < limit - DIST_TOL)])
    return r


def increasing_slope_chain(space: Space, u, x0, delta: float) -> ChainResult:
    """Greedy ball-argmax chain from ``x0`` with step radius ``delta``.

    Each step moves to the maximizer of ``u`` over the closed ball of
    radius ``delta`` (ties broken by lowest node id).  The chain stops on
    reaching a terminal node, or is flagged ``local-max`` when no strict
    increase is available.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    vals = as_values(space, u)
    xi = space.id_index[x0]
    if space.terminal_mask[xi]:
        raise ValueError(f"{x0!r} is terminal")
    chain = [xi]
    steps: list[tuple] = []
    total = 0.0
    for _ in range(space.n + 1):
        cur = chain[-1]
        d = space.distances_from(cur)
        ball = np.flatnonzero((d <= delta + DIST_TOL) & (d > DIST_TOL))
        if len(ball) == 0 or vals[ball].max() <= vals[cur]:
            return ChainResult([space.ids[i] for i in chain], "local-max",
                               steps, total)
        nxt = int(ball[int(np.argmax(vals[ball]))])
        step = float(d[nxt])
        steps.append((float(vals[cur]), float(vals[nxt]), step))
        total += step
        chain.append(nxt)
        if space.terminal_mask[nxt]:
            return ChainResult([space.ids[i] for i in chain], "terminal",
                               steps, total)
    raise RuntimeError("chain failed to terminate")  # strict ascent forbids this


def chain_step_slopes(result: ChainResult, beta: float) -> list[float]:
    """Per-step pinned slopes s_plus(x_{j-1}, d_j) along a chain."""
    return [_pair_quotient(u_cur, u_next, step, beta)
            for u_cur, u_next, step in result.steps]
