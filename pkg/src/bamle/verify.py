"""Batch property checks tying solver outputs to the game-value theory.

Every check is side-effect free and deterministic.  ``run_all`` collects
the full battery (sandwich, slope identity, one-sided slope monotonicity,
biased convexity of radius profiles, maximum principle, Harnack, mean
value residual, sampled cone comparisons, uniform Lipschitz bound) and
returns one :class:`CheckResult` per check; failures are collected, never
raised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bias import BiasParams
from .extensions import (ExpCone, check_beta_concave, check_beta_convex,
                         check_ceca, check_cecb, cone_eval, lambda_extension,
                         psi_extension, sphere_profile)
from .fields import ValueField, as_values
from .game import counter_uniform
from .slopes import boundary_slope, realizable_radii, s_minus, s_plus
from .spaces import DIST_TOL, GridDomain, Space, discrete_boundary

_BETA_ZERO = 1e-14


@dataclass(frozen=True)
class CheckResult:
    """One named check outcome; passed iff worst_gap <= tolerance_used."""

    name: str
    passed: bool
    worst_gap: float
    witness: dict
    tolerance_used: float

    def to_json_dict(self) -> dict:
        wit = {k: (str(v) if not isinstance(v, (int, float, bool)) else v)
               for k, v in self.witness.items()}
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "worst_gap": float(self.worst_gap),
            "witness": wit,
            "tolerance_used": float(self.tolerance_used),
        }


@dataclass(frozen=True)
class VerifyConfig:
    """Sampling controls for :func:`run_all`."""

    tolerance: float = 1e-9
    comparison_tolerance: float = 1e-10
    n_cones: int = 100
    max_centers: int = 40
    seed: int = 0


def _result(name, gap, tol, witness) -> CheckResult:
    return CheckResult(name, bool(gap <= tol), float(gap), witness, float(tol))


# -- individual checks -------------------------------------------------------

def mean_value_residual(space: GridDomain, u, x, bias: BiasParams) -> float:
    """u(x) minus the biased average of the ball extrema.

    The ball is the closed move ball of radius epsilon around ``x``; the
    weights are (1 + beta*eps/2)/2 on the maximum and (1 - beta*eps/2)/2
    on the minimum.  Rejected when the lattice ball is clipped by the edge
    of the domain.
    """
    if not space.is_grid:
        raise ValueError("mean value residual is defined on grids")
    vals = as_values(space, u)
    xi = space.id_index[x]
    if space.terminal_mask[xi]:
        raise ValueError("x must be interior")
    if _ball_clipped(space, xi):
        raise ValueError("epsilon ball around x is clipped by the domain")
    ball = np.concatenate([[xi], space.moves[xi]])
    s = bias.beta * bias.epsilon
    top = vals[ball].max()
    bot = vals[ball].min()
    return float(vals[xi] - ((1 + s / 2) * top + (1 - s / 2) * bot) / 2.0)


def _ball_clipped(space: GridDomain, xi: int) -> bool:
    hops = int(np.floor(space.epsilon / space.h + 1e-9))
    c = space.coords[xi]
    for ax in range(space.dim):
        if c[ax] - hops < 0 or c[ax] + hops > space.shape[ax] - 1:
            return True
    # interior holes also clip the lattice ball
    expected = 2 * hops * (hops + 1) + 1 if space.dim == 2 else 2 * hops + 1
    ball = np.flatnonzero(space.distances_from(xi)
                          <= space.epsilon + DIST_TOL)
    return len(ball) != expected


def mean_value_weight_gap(bias: BiasParams) -> float:
    """Exact gap between the game weight rho/(rho+1) and (1+s/2)/2.

    The mean value residual of an exactly solved field is bounded by this
    gap times the ball oscillation, plus the equation residual.
    """
    s = bias.beta * bias.epsilon
    return abs(bias.rho / (bias.rho + 1.0) - (1.0 + s / 2.0) / 2.0)


def mean_value_order_study(beta: float, x: float,
                           epsilons: Sequence[float]) -> list[float]:
    """Residuals of the analytic increasing profile 1 - exp(-beta*x).

    The ball extrema are evaluated analytically at x +/- eps, so these
    residuals isolate the order of the mean value formula itself.  Their
    log-log slope against eps is 4 for this profile.
    """
    def u(t):
        return 1.0 - math.exp(-beta * t)

    out = []
    for eps in epsilons:
        s = beta * eps
        r = u(x) - ((1 + s / 2) * u(x + eps) + (1 - s / 2) * u(x - eps)) / 2.0
        out.append(r)
    return out


def harnack_check(space: GridDomain, u, z, big_r: float,
                  bias: BiasParams, tol: float = 1e-9) -> CheckResult:
    """Oscillation bound over concentric balls of radius R and 4R.

    For a nonpositive field:  sup over B_R of u <= ratio * inf over B_R,
    with ratio = (exp(R*beta) - 1) / (exp(3*R*beta) - 1).  Sign-changing
    fields are shifted by their supremum over B_4R first.
    """
    if not space.is_grid:
        raise ValueError("harnack check is defined on grids")
    vals = as_values(space, u)
    zi = space.id_index[z]
    dist_z = float(space.dist_to_terminals()[zi])
    if not 4.0 * big_r < dist_z:
        raise ValueError("need 4R < dist(z, terminal set)")
    d = space.distances_from(zi)
    ball_r = np.flatnonzero(d <= big_r + DIST_TOL)
    ball_4r = np.flatnonzero(d <= 4.0 * big_r + DIST_TOL)
    beta = bias.beta
    ratio = math.expm1(big_r * beta) / math.expm1(3.0 * big_r * beta) \
        if beta > _BETA_ZERO else 1.0 / 3.0
    shift = max(0.0, float(vals[ball_4r].max()))
    v_sup = float(vals[ball_r].max()) - shift
    v_inf = float(vals[ball_r].min()) - shift
    gap = v_sup - ratio * v_inf
    witness = {"z": z, "R": big_r, "sup": v_sup, "inf": v_inf,
               "ratio": ratio, "shifted_by": shift}
    return _result("harnack", gap, tol, witness)


def blow_up_probe(space: GridDomain, u, x0, lambdas: Sequence[float]
                  ) -> list[tuple[float, float]]:
    """Relative linear-fit residuals of the rescaled field near ``x0``.

    For each scale the field is recentered, rescaled by 1/lambda and fit
    with an affine function of the coordinates over the lambda ball; the
    residual trend is diagnostic (a fixed mesh cannot reach the limit), so
    no pass/fail verdict is attached.
    """
    if not space.is_grid:
        raise ValueError("blow-up probe is defined on grids")
    vals = as_values(space, u)
    xi = space.id_index[x0]
    out = []
    for lam in lambdas:
        if lam < 2.0 * space.h - DIST_TOL:
            raise ValueError(f"lambda {lam} below twice the lattice step")
        d = space.distances_from(xi)
        ball = np.flatnonzero(d <= lam + DIST_TOL)
        z = (space.positions[ball] - space.positions[xi]) / lam
        v = (vals[ball] - vals[xi]) / lam
        design = np.hstack([np.ones((len(ball), 1)), z])
        coef, *_ = np.linalg.lstsq(design, v, rcond=None)
        resid = v - design @ coef
        denom = max(float(np.linalg.norm(v)), 1e-30)
        out.append((float(lam), float(np.linalg.norm(resid) / denom)))
    return out


# -- run_all ------------------------------------------------------------------

def _interior_centers(space: Space, min_depth: float, cap: int) -> np.ndarray:
    depth = space.dist_to_terminals()
    elig = np.flatnonzero((~space.terminal_mask)
                          & (depth > min_depth + DIST_TOL))
    if len(elig) > cap:
        stride = int(np.ceil(len(elig) / cap))
        elig = elig[::stride]
    return elig


def _check_sandwich(space, vals, bias, tol) -> CheckResult:
    lo = lambda_extension(space, bias.beta)
    hi = psi_extension(space, bias.beta)
    gap_lo = float(np.max(lo - vals))
    gap_hi = float(np.max(vals - hi))
    gap = max(gap_lo, gap_hi)
    side = "below_lambda" if gap_lo >= gap_hi else "above_psi"
    k = int(np.argmax(lo - vals)) if gap_lo >= gap_hi else \
        int(np.argmax(vals - hi))
    return _result("sandwich", gap, tol,
                   {"node": space.ids[k], "side": side})


def _check_slope_identity(space, vals, bias, centers, tol) -> CheckResult:
    """s_plus at the smallest radius equals the matched-normalization
    unbiased slope plus beta*u, exactly at any fixed radius."""
    beta = bias.beta
    worst, wit = -np.inf, {}
    for yi in centers:
        r = float(min(space.distances_from(int(yi))[space.moves[int(yi)]]))
        sp = s_plus(space, vals, space.ids[int(yi)], r, beta)
        ball = np.flatnonzero(space.distances_from(int(yi)) <= r + DIST_TOL)
        if beta > _BETA_ZERO:
            s0 = beta * float(vals[ball].max() - vals[yi]) \
                / -math.expm1(-beta * r)
        else:
            s0 = float(vals[ball].max() - vals[yi]) / r
        gap = abs(sp.value - (s0 + beta * vals[yi]))
        if gap > worst:
            worst, wit = gap, {"node": space.ids[int(yi)], "radius": r}
    if not len(centers):
        return _result("slope_identity", 0.0, tol, {"note": "no eligible nodes"})
    return _result("slope_identity", worst, tol, wit)


def _check_slope_monotone(space, vals, bias, centers, tol) -> CheckResult:
    beta = bias.beta
    worst, wit = -np.inf, {}
    for yi in centers:
        y = space.ids[int(yi)]
        radii = realizable_radii(space, y)
        if len(radii) < 2:
            continue
        sp = [s_plus(space, vals, y, float(r), beta).value for r in radii]
        sm = [s_minus(space, vals, y, float(r), beta).value for r in radii]
        gap_p = float(np.max(-np.diff(sp)))        # s_plus must not decrease
        gap_m = float(np.max(np.diff(sm)))         # s_minus must not increase
        bound_gap = max(
            float(np.max(beta * vals[yi] - np.asarray(sp))),
            float(np.max(np.asarray(sm) - beta * vals[yi])))
        gap = max(gap_p, gap_m, bound_gap)
        if gap > worst:
            worst, wit = gap, {"node": y, "n_radii": len(radii)}
    if worst == -np.inf:
        return _result("s_plus_minus_monotone", 0.0, tol,
                       {"note": "no eligible nodes"})
    return _result("s_plus_minus_monotone", worst, tol, wit)


def _check_profiles(space, vals, bias, centers, tol, concave: bool
                    ) -> CheckResult:
    kind = "min" if concave else "max"
    name = "beta_concave_gminus" if concave else "beta_convex_gplus"
    checker = check_beta_concave if concave else check_beta_convex
    worst, wit = -np.inf, {}
    for yi in centers:
        y = space.ids[int(yi)]
        radii, prof = sphere_profile(space, vals, y, kind=kind)
        if len(radii) < 3:
            continue
        cert = checker(list(zip(radii, prof)), bias.beta, tol)
        if cert.worst_gap > worst:
            worst = cert.worst_gap
            wit = {"node": y, "witness": str(cert.violation_witness)}
    if worst == -np.inf:
        return _result(name, 0.0, tol, {"note": "no eligible nodes"})
    return _result(name, worst, tol, wit)


def _check_max_principle(space, vals, tol) -> CheckResult:
    term_max = float(np.max(vals[space.terminal_mask]))
    k = int(np.argmax(vals))
    gap = float(vals[k] - term_max)
    return _result("max_principle", gap, tol, {"argmax": space.ids[k]})


def _check_lipschitz(space, vals, bias, tol) -> CheckResult:
    L = boundary_slope(space, bias.beta).value
    m = float(np.min(space.terminal_values[space.terminal_mask]))
    c = L - bias.beta * m
    worst, wit = -np.inf, {}
    n = space.n
    for i in range(n):
        d = space.distances_from(i)
        with np.errstate(invalid="ignore"):
            gap = np.abs(vals - vals[i]) - c * d
        gap[i] = -np.inf
        gap[np.isinf(d)] = -np.inf
        k = int(np.argmax(gap))
        if gap[k] > worst:
            worst, wit = float(gap[k]), {"pair": (space.ids[i], space.ids[k]),
                                         "bound_rate": c}
    return _result("lipschitz", worst, tol, wit)


def _check_mean_value(space, fld, bias, tol_abs) -> CheckResult:
    vals = fld.values
    dw = mean_value_weight_gap(bias)
    eq = fld.equation_residual if np.isfinite(fld.equation_residual) else 0.0
    worst, wit = -np.inf, {}
    count = 0
    for xi in np.flatnonzero(~space.terminal_mask):
        if _ball_clipped(space, int(xi)):
            continue
        count += 1
        ball = np.concatenate([[xi], space.moves[int(xi)]])
        osc = float(vals[ball].max() - vals[ball].min())
        r = mean_value_residual(space, vals, space.ids[int(xi)], bias)
        bound = 10.0 * (dw * osc + eq + tol_abs)
        gap = abs(r) - bound
        if gap > worst:
            worst, wit = gap, {"node": space.ids[int(xi)],
                               "residual": r, "bound": bound}
    if count == 0:
        return _result("mean_value", 0.0, 0.0, {"note": "no full balls"})
    return _result("mean_value", worst, 0.0, wit)


def _check_harnack(space, vals, bias, tol) -> CheckResult:
    depth = space.dist_to_terminals()
    zi = int(np.argmax(depth))
    big_r = space.h * max(1, int(np.floor((depth[zi] / 4.0 - DIST_TOL)
                                          / space.h)))
    if 4.0 * big_r >= depth[zi]:
        return _result("harnack", 0.0, tol, {"note": "domain too shallow"})
    return harnack_check(space, vals, space.ids[zi], big_r, bias, tol)


def _sample_cones(space, vals, bias, centers, n_cones, seed, tol,
                  negative: bool) -> CheckResult:
    """Random admissible cones dominating the boundary of the interior.

    Cones are sampled with B <= A/beta so that the cone family member is
    an exact discrete super/subsolution; the comparison implication is
    then tight on matched lattices.  The tight radius-cones pinned at
    sampled interior nodes are swept as well, which makes the check
    sensitive to any single-node corruption.
    """
    name = "cecb_sampled" if negative else "ceca_sampled"
    beta = bias.beta
    interior = np.flatnonzero(~space.terminal_mask)
    check = check_cecb if negative else check_ceca
    sign = -1 if negative else +1
    worst, wit = -np.inf, {}
    n_nodes = space.n
    slope_scale = max(abs(boundary_slope(space, beta).value), 1.0)
    for k in range(n_cones if beta > _BETA_ZERO else 0):
        u0 = counter_uniform(seed, np.array([k]), 0, 0)[0]
        u1 = counter_uniform(seed, np.array([k]), 1, 0)[0]
        u2 = counter_uniform(seed, np.array([k]), 2, 0)[0]
        ci = int(np.floor(u0 * n_nodes)) % n_nodes
        a = 2.0 * u1 * slope_scale
        b = a / beta - u2 * (a / beta + 1.0)       # keep B <= A/beta
        vset = [space.ids[i] for i in interior if i != ci]
        if not vset:
            continue
        cone0 = ExpCone(space.ids[ci], a, sign, b, 0.0, beta)
        cv = cone_eval(space, cone0)
        bidx = discrete_boundary(space, [space.id_index[v] for v in vset])
        if negative:
            kk = float(np.min(vals[bidx] - cv[bidx]))
        else:
            kk = float(np.max(vals[bidx] - cv[bidx]))
        cone = ExpCone(space.ids[ci], a, sign, b, kk, beta)
        cert = check(space, vals, vset, cone, tol)
        gap = cert.worst_gap - cert.boundary_slack
        if gap > worst:
            worst, wit = gap, {"cone_center": space.ids[ci], "A": a, "B": b}
    # tight pinned-radius cones (ball bound through every sampled center)
    for yi in centers:
        y = space.ids[int(yi)]
        d = space.distances_from(int(yi))
        for r in realizable_radii(space, y)[-3:]:
            ball = np.flatnonzero(d <= r + DIST_TOL)
            inner = ball[(d[ball] > DIST_TOL)]
            if beta > _BETA_ZERO:
                if negative:
                    q = beta * (vals[inner].min()
                                - math.exp(beta * r) * vals[yi]) \
                        / (1.0 - math.exp(beta * r))
                    bound = np.exp(beta * d[ball]) * vals[yi] \
                        + (q / beta) * (1.0 - np.exp(beta * d[ball]))
                    gaps = bound - vals[ball]
                else:
                    q = beta * (vals[inner].max()
                                - math.exp(-beta * r) * vals[yi]) \
                        / -math.expm1(-beta * r)
                    bound = np.exp(-beta * d[ball]) * vals[yi] \
                        + (q / beta) * (1.0 - np.exp(-beta * d[ball]))
                    gaps = vals[ball] - bound
            else:
                if negative:
                    q = (vals[inner].min() - vals[yi]) / r
                    bound = vals[yi] + q * d[ball]
                    gaps = bound - vals[ball]
                else:
                    q = (vals[inner].max() - vals[yi]) / r
                    bound = vals[yi] + q * d[ball]
                    gaps = vals[ball] - bound
            g = float(gaps.max())
            if g > worst:
                worst, wit = g, {"pinned_at": y, "radius": float(r)}
    return _result(name, worst, tol, wit)


def run_all(space: Space, fld: ValueField, bias: BiasParams,
            config: VerifyConfig | None = None) -> list[CheckResult]:
    """Run the full battery of checks on a solved field.

    Grid-only checks (harnack, mean value) are omitted on graphs.  Any
    exception inside a check is folded into a failed result rather than
    raised.
    """
    cfg = config or VerifyConfig()
    vals = fld.values
    tol = cfg.tolerance
    min_depth = space.h if space.is_grid else space.edge_length
    centers = _interior_centers(space, min_depth, cfg.max_centers)

    checks: list[tuple[str, Callable[[], CheckResult]]] = [
        ("sandwich", lambda: _check_sandwich(space, vals, bias, tol)),
        ("slope_identity",
         lambda: _check_slope_identity(space, vals, bias, centers, tol)),
        ("s_plus_minus_monotone",
         lambda: _check_slope_monotone(space, vals, bias, centers, tol)),
        ("beta_convex_gplus",
         lambda: _check_profiles(space, vals, bias, centers, tol, False)),
        ("beta_concave_gminus",
         lambda: _check_profiles(space, vals, bias, centers, tol, True)),
        ("max_principle", lambda: _check_max_principle(space, vals, tol)),
        ("ceca_sampled",
         lambda: _sample_cones(space, vals, bias, centers, cfg.n_cones,
                               cfg.seed, cfg.comparison_tolerance, False)),
        ("cecb_sampled",
         lambda: _sample_cones(space, vals, bias, centers, cfg.n_cones,
                               cfg.seed + 1, cfg.comparison_tolerance, True)),
        ("lipschitz", lambda: _check_lipschitz(space, vals, bias, tol)),
    ]
    if space.is_grid:
        checks.insert(6, ("harnack",
                          lambda: _check_harnack(space, vals, bias, tol)))
        checks.insert(7, ("mean_value",
                          lambda: _check_mean_value(space, fld, bias, tol)))

    results = []
    for name, fn in checks:
        try:
            results.append(fn())
        except Exception as exc:  # collected, not thrown
            results.append(CheckResult(name, False, float("inf"),
                                       {"error": str(exc)}, tol))
    return results


def corrupt_field(fld: ValueField, node_id=None, bump: float = 0.1
                  ) -> ValueField:
    """Return a copy with one interior value shifted (negative control)."""
    space = fld.space
    if node_id is None:
        depth = space.dist_to_terminals()
        node_id = space.ids[int(np.argmax(depth))]
    vals = fld.values.copy()
    vals[space.id_index[node_id]] += bump
    return fld.copy_with(values=vals, flag="corrupted")
