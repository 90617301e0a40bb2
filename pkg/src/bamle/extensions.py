"""Exponential extensions, cones, comparison certificates and convexity.

For boundary data g on the terminal set Y with slope bound L, the maximal
and minimal slope-preserving extensions are

    psi(x)    = min over y in Y of  exp(-beta*d) g(y) + (L/beta) (1 - exp(-beta*d))
    lambda(x) = max over y in Y of  exp(+beta*d) g(y) + (L/beta) (1 - exp(+beta*d))

with d = d(x, y).  At beta = 0 these become the classical McShane-Whitney
envelopes g(y) + L d and g(y) - L d.

The cone family generalizing the linear cone A*d is, for slope A >= 0 and
center x0,

    positive: (A/beta) (1 - exp(-beta*d)) + B exp(-beta*d) + K
    negative: (A/beta) (1 - exp(+beta*d)) + B exp(+beta*d) + K

Comparison from above is checked against positive cones (CECA), comparison
from below against negative cones (CECB); the pairing is deliberately
asymmetric and mixed pairings are not checked.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fields import as_values
from .slopes import boundary_slope
from .spaces import DIST_TOL, Space, discrete_boundary

_BETA_ZERO = 1e-14


@dataclass(frozen=True)
class ExpCone:
    """One member of the exponential cone family."""

    center: object
    slope: float          # A >= 0
    sign: int             # +1 for positive cones, -1 for negative cones
    coeff_b: float = 0.0
    coeff_k: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("cone slope A must be >= 0")
        if self.sign not in (+1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.beta <= 0:
            raise ValueError("cone beta must be > 0")


@dataclass(frozen=True)
class ComparisonCertificate:
    """Outcome of one comparison check on a test set.

    ``boundary_slack`` is how far the hypothesis already fails on the
    boundary; it is added to the interior tolerance, so a certificate
    with ``holds=False`` always carries a genuine interior violation.
    """

    holds: bool
    violation_witness: tuple | None     # (node_id, gap) when holds is False
    test_set: tuple
    cone: ExpCone | None
    boundary_slack: float = 0.0
    worst_gap: float = 0.0


@dataclass(frozen=True)
class ConvexityCertificate:
    """Outcome of a biased convexity / concavity check on sampled radii."""

    holds: bool
    violation_witness: tuple | None     # ((s, t, r), gap) when holds is False
    worst_gap: float
    tolerance: float


def cone_eval(space: Space, cone: ExpCone, x=None):
    """Evaluate a cone at one node or over all nodes.

    At the center the value is ``coeff_b + coeff_k`` for either sign.
    """
    ci = space.id_index[cone.center]
    d = space.distances_from(ci)
    b, k, a, beta = cone.coeff_b, cone.coeff_k, cone.slope, cone.beta
    w = np.exp(-cone.sign * beta * d)
    vals = (a / beta) * (1.0 - w) + b * w + k
    if x is None:
        return vals
    return float(vals[space.id_index[x]])


def _terminal_data(space: Space, g=None):
    ti = np.flatnonzero(space.terminal_mask)
    if len(ti) == 0:
        raise ValueError("empty terminal set")
    if g is None:
        gv = space.terminal_values[ti]
    else:
        gvals = as_values(space, g) if not isinstance(g, dict) else None
        if gvals is not None:
            gv = gvals[ti]
        else:
            gv = np.array([float(g[space.ids[i]]) for i in ti])
    return ti, gv


def _check_L(space: Space, beta: float, L: float | None, gv, ti) -> float:
    computed = boundary_slope(space, beta).value if len(ti) > 1 else \
        (beta * float(gv[0]))
    if L is None:
        return computed
    if L < computed - 1e-12:
        warnings.warn(
            f"slope bound L={L} is below the boundary slope {computed}; "
            "the extension sandwich may fail", stacklevel=3)
    return float(L)


def psi_extension(space: Space, beta: float, L: float | None = None,
                  x=None, g=None):
    """Maximal slope-L extension of the terminal data (pointwise or full)."""
    ti, gv = _terminal_data(space, g)
    L = _check_L(space, beta, L, gv, ti)
    rows = np.vstack([space.distances_from(int(i)) for i in ti])
    if beta <= _BETA_ZERO:
        vals = np.min(gv[:, None] + L * rows, axis=0)
    else:
        w = np.exp(-beta * rows)
        vals = np.min(w * gv[:, None] + (L / beta) * (1.0 - w), axis=0)
    if x is None:
        return vals
    return float(vals[space.id_index[x]])


def lambda_extension(space: Space, beta: float, L: float | None = None,
                     x=None, g=None):
    """Minimal slope-L extension of the terminal data (pointwise or full)."""
    ti, gv = _terminal_data(space, g)
    L = _check_L(space, beta, L, gv, ti)
    rows = np.vstack([space.distances_from(int(i)) for i in ti])
    if beta <= _BETA_ZERO:
        vals = np.max(gv[:, None] - L * rows, axis=0)
    else:
        w = np.exp(beta * rows)
        vals = np.max(w * gv[:, None] + (L / beta) * (1.0 - w), axis=0)
    if x is None:
        return vals
    return float(vals[space.id_index[x]])


def _as_index_set(space: Space, nodes) -> np.ndarray:
    idx = np.array(sorted({space.id_index[v] for v in nodes}), dtype=np.int64)
    return idx


def _comparison(space: Space, u, V, cone: ExpCone, tol: float, above: bool
                ) -> ComparisonCertificate:
    vals = as_values(space, u)
    vidx = _as_index_set(space, V)
    if len(vidx) == 0:
        raise ValueError("empty test set")
    ci = space.id_index[cone.center]
    if ci in set(vidx.tolist()):
        raise ValueError("cone center must lie outside the test set")
    if space.terminal_mask[vidx].any():
        raise ValueError("test set must avoid terminal nodes")
    bidx = discrete_boundary(space, vidx)
    if len(bidx) == 0:
        raise ValueError("test set has empty discrete boundary")
    cv = cone_eval(space, cone)
    if above:
        bgap = vals[bidx] - cv[bidx]
        igap = vals[vidx] - cv[vidx]
    else:
        bgap = cv[bidx] - vals[bidx]
        igap = cv[vidx] - vals[vidx]
    slack = float(max(0.0, bgap.max()))
    worst = float(igap.max())
    k = int(np.argmax(igap))
    holds = worst <= slack + tol
    witness = None if holds else (space.ids[int(vidx[k])], worst - slack)
    return ComparisonCertificate(holds, witness,
                                 tuple(space.ids[i] for i in vidx), cone,
                                 boundary_slack=slack, worst_gap=worst)


def check_ceca(space: Space, u, V, cone: ExpCone,
               tol: float = 1e-10) -> ComparisonCertificate:
    """Comparison with a positive cone from above on the test set ``V``.

    Certifies the implication: if ``u <= cone`` holds on the discrete
    boundary of V (up to a measured slack), then it holds on V up to
    ``slack + tol``.
    """
    if cone.sign != +1:
        raise ValueError("comparison from above uses positive cones")
    return _comparison(space, u, V, cone, tol, above=True)


def check_cecb(space: Space, u, V, cone: ExpCone,
               tol: float = 1e-10) -> ComparisonCertificate:
    """Comparison with a negative cone from below on the test set ``V``."""
    if cone.sign != -1:
        raise ValueError("comparison from below uses negative cones")
    return _comparison(space, u, V, cone, tol, above=False)


# -- biased convexity -------------------------------------------------------

def _triple_weight(s, t, r, beta, concave: bool) -> float:
    """Weight on the inner-radius value in the three-point inequality.

    Both cases reduce to the classical (r - t) / (r - s) at beta = 0; for
    beta > 0 the concave weight carries an extra exp(beta*(t - s)) factor.
    """
    if beta <= _BETA_ZERO:
        return (r - t) / (r - s)
    lam = math.expm1(beta * (r - t)) / math.expm1(beta * (r - s))
    if concave:
        lam *= math.exp(beta * (t - s))
    return lam


def _validate_samples(samples):
    radii = np.asarray([p[0] for p in samples], dtype=float)
    vals = np.asarray([p[1] for p in samples], dtype=float)
    if len(radii) < 3:
        raise ValueError("need at least three samples")
    if not np.all(np.diff(radii) > 0):
        raise ValueError("radii must be strictly increasing")
    return radii, vals


def _convexity_scan(radii, vals, beta, tol, concave: bool):
    """Three-point scan plus the substituted-variable scan; both must agree.

    The second route rescales the profile by the appropriate exponential
    weight and checks ordinary discrete convexity (or concavity) in the
    substituted variable; the two scans are algebraically identical triple
    by triple, so a verdict mismatch indicates an implementation fault.
    """
    n = len(radii)
    if beta <= _BETA_ZERO:
        tau = radii.copy()
        h = vals.copy()
    elif not concave:
        tau = np.expm1(beta * radii)
        h = np.exp(beta * radii) * vals
    else:
        tau = np.expm1(-beta * radii)
        h = np.exp(-beta * radii) * vals
    worst = -np.inf
    witness = None
    for a in range(n - 2):
        for b in range(a + 1, n - 1):
            for c in range(b + 1, n):
                s, t, r = radii[a], radii[b], radii[c]
                lam = _triple_weight(s, t, r, beta, concave)
                bound = lam * vals[a] + (1.0 - lam) * vals[c]
                gap = (vals[b] - bound) if not concave else (bound - vals[b])
                # substituted route: chord condition for h against tau
                lam2 = (tau[c] - tau[b]) / (tau[c] - tau[a])
                bound2 = lam2 * h[a] + (1.0 - lam2) * h[c]
                gap2 = (h[b] - bound2) if not concave else (bound2 - h[b])
                scale = math.exp(beta * radii[b]) if not concave else \
                    math.exp(-beta * radii[b])
                if beta > _BETA_ZERO and \
                        (gap > tol) != (gap2 > tol * scale):
                    raise RuntimeError(
                        "convexity routes disagree; inconsistent scan")
                if gap > worst:
                    worst = gap
                    witness = ((float(s), float(t), float(r)), float(gap))
    holds = worst <= tol
    return ConvexityCertificate(holds, None if holds else witness,
                                float(worst), tol)


def check_beta_convex(samples: Sequence, beta: float,
                      tol: float = 1e-9) -> ConvexityCertificate:
    """Check biased convexity of a sampled radius profile.

    ``samples`` is a sequence of (radius, value) pairs with strictly
    increasing radii.  For every triple s < t < r the value at t must not
    exceed the exponentially weighted interpolation of the endpoint
    values; equivalently the profile rescaled by ``exp(beta*t)`` must be
    convex in ``exp(beta*t) - 1``.
    """
    radii, vals = _validate_samples(samples)
    return _convexity_scan(radii, vals, beta, tol, concave=False)


def check_beta_concave(samples: Sequence, beta: float,
                       tol: float = 1e-9) -> ConvexityCertificate:
    """Check biased concavity of a sampled radius profile.

    Mirror of :func:`check_beta_convex`: the rescaled profile
    ``exp(-beta*t) * g(t)`` must be concave in ``exp(-beta*t) - 1``.
    """
    radii, vals = _validate_samples(samples)
    return _convexity_scan(radii, vals, beta, tol, concave=True)


def sphere_profile(space: Space, u, y, kind: str = "max",
                   max_radius: float | None = None):
    """Radius profile of ball extrema around ``y``.

    Returns (radii, values) where radii are the realizable lattice radii
    below the distance to the terminal set (starting at 0) and values are
    the running ball maxima (``kind='max'``) or minima (``kind='min'``)
    taken over shells of width one lattice step.
    """
    vals = as_values(space, u)
    yi = space.id_index[y]
    d = space.distances_from(yi)
    limit = float(space.dist_to_terminals()[yi])
    if max_radius is not None:
        limit = min(limit, max_radius + DIST_TOL)
    radii = np.unique(d[d < limit - DIST_TOL])
    out = np.empty(len(radii))
    best = None
    for k, r in enumerate(radii):
        shell = np.flatnonzero(np.abs(d - r) <= DIST_TOL)
        ext = vals[shell].max() if kind == "max" else vals[shell].min()
        if best is None:
            best = ext
        else:
            best = max(best, ext) if kind == "max" else min(best, ext)
        out[k] = best
    return radii, out
