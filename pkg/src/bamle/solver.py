"""Fixed-point solver for the discrete biased tug-of-war equation.

At every non-terminal node the game value satisfies

    u(x) = rho/(rho+1) * max over moves u(y)
         + 1/(rho+1)   * min over moves u(y)  + f(x)

with the coin odds rho = exp(beta*epsilon).  The solver iterates this
operator synchronously (Jacobi) from a configured initial field until the
sup-norm update drops below tolerance.  Starting from the minimal
extension gives a nondecreasing iteration whose limit is the smallest
solution; starting from the maximal extension probes from above.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bias import BiasParams, make_bias, unbiased
from .extensions import lambda_extension, psi_extension
from .fields import ValueField, as_values
from .slopes import boundary_slope
from .spaces import GridDomain, Space, move_csr


@dataclass(frozen=True)
class SolveConfig:
    """Iteration controls for :func:`solve`."""

    tolerance: float = 1e-12
    max_iterations: int = 10_000_000
    init: object = "from_lambda"     # "from_lambda" | "from_psi" | float | array
    sweep: str = "jacobi"            # "jacobi" | "gauss_seidel"

    def __post_init__(self):
        if isinstance(self.init, str) and \
                self.init not in ("from_lambda", "from_psi"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.sweep not in ("jacobi", "gauss_seidel"):
            raise ValueError(f"unknown sweep {self.sweep!r}")


@dataclass(frozen=True)
class RefineStep:
    """One level of an epsilon-refinement study."""

    epsilon: float
    field: ValueField
    cauchy_gap: float               # sup over the coarsest node set; nan at level 0


def bellman_apply(space: Space, u, rho: float) -> np.ndarray:
    """One synchronous sweep of the game operator.

    Terminal nodes keep their payoff; every other node is replaced by the
    rho-weighted max/min over its move set plus its running payoff.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    vals = as_values(space, u)
    out = vals.copy()
    interior = ~space.terminal_mask
    if not interior.any():
        return out
    flat, ptr = move_csr(space)
    moved = vals[flat]
    # reduceat over possibly-empty terminal segments: clamp the start
    # indices; interior segments are nonempty by the space invariant and
    # terminal rows are discarded below.
    starts = np.minimum(ptr[:-1], len(flat) - 1)
    mx = np.maximum.reduceat(moved, starts)
    mn = np.minimum.reduceat(moved, starts)
    out[interior] = (rho * mx[interior] + mn[interior]) / (rho + 1.0) \
        + space.running_payoff[interior]
    return out


def equation_residual(space: Space, u, rho: float) -> float:
    """Sup-norm distance between the field and one operator application."""
    vals = as_values(space, u)
    return float(np.max(np.abs(bellman_apply(space, vals, rho) - vals)))


def _gauss_seidel_sweep(space: Space, u: np.ndarray, rho: float) -> float:
    worst = 0.0
    for i in range(space.n):
        if space.terminal_mask[i]:
            continue
        nb = u[space.moves[i]]
        new = (rho * nb.max() + nb.min()) / (rho + 1.0) \
            + space.running_payoff[i]
        worst = max(worst, abs(new - u[i]))
        u[i] = new
    return worst


def _initial_field(space: Space, bias: BiasParams, init) -> tuple[np.ndarray, str]:
    if isinstance(init, str):
        if init == "from_lambda":
            return lambda_extension(space, bias.beta), "from_below"
        return psi_extension(space, bias.beta), "from_above"
    if np.isscalar(init):
        vals = np.full(space.n, float(init))
        vals[space.terminal_mask] = \
            space.terminal_values[space.terminal_mask]
        return vals, "unspecified"
    vals = as_values(space, init).copy()
    vals[space.terminal_mask] = space.terminal_values[space.terminal_mask]
    return vals, "unspecified"


def solve(space: Space, bias: BiasParams, config: SolveConfig | None = None
          ) -> ValueField:
    """Iterate the game operator to its fixed point.

    Returns a :class:`ValueField` whose flag is empty on convergence,
    ``"max_iterations"`` when the sweep budget ran out, and ``"diverged"``
    when a value escaped above the maximal extension (the signature of a
    game player II cannot end; only reachable from custom inits).

    Raises
    ------
    ValueError
        If some non-terminal node cannot reach the terminal set.
    """
    config = config or SolveConfig()
    if not np.isfinite(space.dist_to_terminals()).all():
        raise ValueError("every node must be connected to the terminal set")
    terminal = space.terminal_mask
    if terminal.all():
        vals = space.terminal_values.copy()
        return ValueField(space, vals, iterations=0, residual=0.0,
                          equation_residual=0.0)
    gb = boundary_slope(space, bias.beta)
    if not np.isfinite(gb.value):
        warnings.warn("boundary data has infinite exponential slope")

    u, direction = _initial_field(space, bias, config.init)
    guard = psi_extension(space, bias.beta) + 1.0
    rho = bias.rho

    flag = "max_iterations"
    iterations = 0
    residual = np.inf
    for iterations in range(1, config.max_iterations + 1):
        if config.sweep == "jacobi":
            new = bellman_apply(space, u, rho)
            residual = float(np.max(np.abs(new - u)))
            u = new
        else:
            residual = _gauss_seidel_sweep(space, u, rho)
        if np.any(u > guard):
            return ValueField(space, u, iterations=iterations,
                              residual=residual, direction=direction,
                              converged=False, flag="diverged",
                              equation_residual=equation_residual(
                                  space, u, rho))
        if residual <= config.tolerance:
            flag = ""
            break
    return ValueField(space, u, iterations=iterations, residual=residual,
                      direction=direction, converged=(flag == ""),
                      equation_residual=equation_residual(space, u, rho),
                      flag=flag)


def epsilon_refine(grid: GridDomain, beta: float, levels: int,
                   config: SolveConfig | None = None) -> list[RefineStep]:
    """Solve on successively halved grids and report Cauchy gaps.

    Each level halves both the lattice step and the move radius; the gap
    at level k is the sup-norm difference to the previous level restricted
    to the coarsest node set.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    out: list[RefineStep] = []
    g = grid
    prev_on_coarse = None
    coarse = grid
    for k in range(levels):
        bias = make_bias(beta, g.epsilon) if beta > 0 else unbiased(g.epsilon)
        fld = solve(g, bias, config)
        idx = coarse.coarse_index_in(g) if k else np.arange(coarse.n)
        on_coarse = fld.values[idx]
        gap = float("nan") if prev_on_coarse is None else \
            float(np.max(np.abs(on_coarse - prev_on_coarse)))
        out.append(RefineStep(g.epsilon, fld, gap))
        prev_on_coarse = on_coarse
        if k + 1 < levels:
            g = g.refine()
    return out
