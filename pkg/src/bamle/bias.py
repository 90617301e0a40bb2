"""Bias parameters for biased tug-of-war and exponential extensions.

The game couples a bias rate ``beta`` with a step size ``epsilon`` through
the odds ratio ``rho = exp(beta * epsilon)``: player I wins each coin toss
with probability ``rho / (rho + 1)``.  The equivalent coin advantage is
``theta = tanh(beta * epsilon / 2)`` and the reverse odds are ``1 / rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BiasParams:
    """Derived coin parameters for one (beta, epsilon) pair."""

    beta: float
    epsilon: float
    rho: float
    theta: float
    r_inv: float

    @property
    def p_win(self) -> float:
        """Probability that player I wins a single toss."""
        return self.rho / (self.rho + 1.0)


def make_bias(beta: float, epsilon: float) -> BiasParams:
    """Build consistent bias parameters from a rate and a step.

    Parameters
    ----------
    beta : float
        Bias rate, strictly positive.  A negative rate is handled by the
        caller by flipping the sign of the boundary data.
    epsilon : float
        Move radius of the game, strictly positive.

    Returns
    -------
    BiasParams
        With ``rho = exp(beta*epsilon)``, ``theta = tanh(beta*epsilon/2)``
        and ``r_inv = 1/rho``.
    """
    if not beta > 0.0:
        raise ValueError(f"beta must be > 0, got {beta!r}")
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    rho = math.exp(beta * epsilon)
    theta = math.tanh(beta * epsilon / 2.0)
    return BiasParams(beta=float(beta), epsilon=float(epsilon), rho=rho,
                      theta=theta, r_inv=1.0 / rho)


def unbiased(epsilon: float) -> BiasParams:
    """Classical fair-coin parameters (beta = 0, rho = 1)."""
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    return BiasParams(beta=0.0, epsilon=float(epsilon), rho=1.0, theta=0.0,
                      r_inv=1.0)
