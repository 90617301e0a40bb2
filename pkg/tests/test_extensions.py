import itertools
import math

import numpy as np
import pytest

from bamle import (BiasedGraph, ExpCone, GridDomain, boundary_function,
                   boundary_slope, check_beta_concave, check_beta_convex,
                   check_ceca, check_cecb, cone_eval, cone_values,
                   lambda_extension, psi_extension, sphere_profile,
                   square_2d)


def single_terminal_path(n=10, g0=0.0):
    g = BiasedGraph(list(range(n + 1)), [(k, k + 1) for k in range(n)],
                    {0: g0})
    return g


# -- cones --------------------------------------------------------------------

def test_cone_center_value_is_b_plus_k():
    g = single_terminal_path()
    for sign in (+1, -1):
        cone = ExpCone(0, 1.5, sign, coeff_b=0.3, coeff_k=-0.2, beta=0.7)
        assert cone_eval(g, cone, 0) == pytest.approx(0.1, abs=1e-14)


def test_cone_zero_slope_zero_b_is_constant():
    g = single_terminal_path()
    cone = ExpCone(0, 0.0, +1, coeff_b=0.0, coeff_k=0.4, beta=1.0)
    assert np.allclose(cone_eval(g, cone), 0.4)


def test_cone_small_beta_approaches_linear():
    g = single_terminal_path(10)
    a, b, k = 1.2, 0.3, -0.1
    d = g.distances_from(0)
    vals = cone_eval(g, ExpCone(0, a, +1, b, k, beta=1e-8))
    assert np.max(np.abs(vals - (a * d + b + k))) < 1e-6
    # the negative cone tends to the downward linear cone
    vals = cone_eval(g, ExpCone(0, a, -1, b, k, beta=1e-8))
    assert np.max(np.abs(vals - (-a * d + b + k))) < 1e-6


def test_cone_validation():
    with pytest.raises(ValueError):
        ExpCone(0, -1.0, +1)
    with pytest.raises(ValueError):
        ExpCone(0, 1.0, 2)
    with pytest.raises(ValueError):
        ExpCone(0, 1.0, +1, beta=0.0)


# -- psi / lambda -------------------------------------------------------------

def test_extensions_agree_with_data_on_terminals(corpus_solved):
    for label, space, bias, fld in corpus_solved:
        psi = psi_extension(space, bias.beta)
        lam = lambda_extension(space, bias.beta)
        ti = np.flatnonzero(space.terminal_mask)
        g = space.terminal_values[ti]
        assert np.max(np.abs(psi[ti] - g)) < 1e-10, label
        assert np.max(np.abs(lam[ti] - g)) < 1e-10, label
        assert np.min(psi - lam) > -1e-10, label


def test_single_terminal_psi_is_positive_cone():
    g = single_terminal_path()
    beta, A = 0.9, 1.7
    psi = psi_extension(g, beta, L=A)
    d = g.distances_from(0)
    assert np.allclose(psi, (A / beta) * -np.expm1(-beta * d), atol=1e-13)


def test_single_terminal_lambda_is_negative_cone():
    g = single_terminal_path()
    beta, A = 0.9, 1.7
    lam = lambda_extension(g, beta, L=A)
    d = g.distances_from(0)
    assert np.allclose(lam, (A / beta) * (1.0 - np.exp(beta * d)),
                       atol=1e-12)


def test_low_L_warns():
    space, bias = square_2d(5, "mixed", 1.0)
    with pytest.warns(UserWarning):
        psi_extension(space, bias.beta, L=0.0)


def test_extension_slopes_equal_boundary_slope(corpus_solved):
    from bamle import exp_slope
    for label, space, bias, fld in corpus_solved:
        L = boundary_slope(space, bias.beta).value
        for ext in (psi_extension(space, bias.beta),
                    lambda_extension(space, bias.beta)):
            got = exp_slope(space, ext, beta=bias.beta).value
            assert got == pytest.approx(L, abs=1e-9), label


# -- comparison certificates ---------------------------------------------------

def test_cone_compares_with_itself():
    grid = GridDomain(1, [2.0], 0.1, 0.1, boundary_function("linear-x"))
    beta, A = 1.0, 1.4
    vals = cone_values(grid, A, beta)
    cone = ExpCone("0", A, +1, 0.0, 0.0, beta)
    interior = [grid.ids[i] for i in np.flatnonzero(~grid.terminal_mask)]
    cert = check_ceca(grid, vals, interior, cone, tol=1e-10)
    assert cert.holds
    assert cert.worst_gap == pytest.approx(0.0, abs=1e-12)


def test_ceca_rejects_center_inside_and_terminals():
    grid = GridDomain(1, [1.0], 0.1, 0.1, boundary_function("linear-x"))
    vals = cone_values(grid, 1.0, 1.0)
    cone = ExpCone("5", 1.0, +1, beta=1.0)
    with pytest.raises(ValueError):
        check_ceca(grid, vals, ["4", "5", "6"], cone)
    cone0 = ExpCone("0", 1.0, +1, beta=1.0)
    with pytest.raises(ValueError):
        check_ceca(grid, vals, ["0", "1"], cone0)
    with pytest.raises(ValueError):
        check_cecb(grid, vals, ["1", "2"], cone0)   # wrong sign


def test_ceca_produces_witness_on_violation():
    grid = GridDomain(1, [1.0], 0.1, 0.1, boundary_function("linear-x"))
    beta = 1.0
    vals = cone_values(grid, 1.0, beta).copy()
    vals[grid.id_index["5"]] += 0.25        # interior bump above the cone
    cone = ExpCone("0", 1.0, +1, 0.0, 0.0, beta)
    interior = [grid.ids[i] for i in np.flatnonzero(~grid.terminal_mask)]
    cert = check_ceca(grid, vals, interior, cone, tol=1e-10)
    assert not cert.holds
    node, gap = cert.violation_witness
    assert node == "5"
    assert gap == pytest.approx(0.25, abs=1e-12)


def test_sampled_admissible_cones_hold_on_solved_fields(square_mixed):
    space, bias, fld = square_mixed
    rng = np.random.default_rng(99)
    interior = np.flatnonzero(~space.terminal_mask)
    L = boundary_slope(space, bias.beta).value
    from bamle.spaces import discrete_boundary
    for sign in (+1, -1):
        for _ in range(100):
            ci = int(rng.integers(0, space.n))
            a = float(rng.uniform(0.0, 2.0 * L))
            b = a / bias.beta - float(rng.uniform(0.0, 2.0))
            vset = [space.ids[i] for i in interior if i != ci]
            cone0 = ExpCone(space.ids[ci], a, sign, b, 0.0, bias.beta)
            cv = cone_eval(space, cone0)
            bidx = discrete_boundary(space,
                                     [space.id_index[v] for v in vset])
            if sign == +1:
                k = float(np.max(fld.values[bidx] - cv[bidx]))
                cert = check_ceca(space, fld.values, vset,
                                  ExpCone(space.ids[ci], a, sign, b, k,
                                          bias.beta))
            else:
                k = float(np.min(fld.values[bidx] - cv[bidx]))
                cert = check_cecb(space, fld.values, vset,
                                  ExpCone(space.ids[ci], a, sign, b, k,
                                          bias.beta))
            assert cert.holds


def test_ray_family_passes_ceca_from_truncation_point():
    # the one-parameter family on the truncated ray satisfies comparison
    # with positive cones centered at the far truncation terminal
    from bamle import counterexample_ray, counterexample_ray_field
    from bamle.spaces import discrete_boundary
    graph, bias = counterexample_ray(0.5, 20)
    far = "20,0"
    interior = [v for v in graph.ids
                if not graph.terminal_mask[graph.id_index[v]] and v != far]
    for a in (0.25, 0.5, 0.75):
        vals = counterexample_ray_field(graph, a)
        for slope_a, b in ((1.0, 0.0), (2.0, -1.0), (0.5, 0.5)):
            cone0 = ExpCone(far, slope_a, +1, b, 0.0, bias.beta)
            cv = cone_eval(graph, cone0)
            bidx = discrete_boundary(graph,
                                     [graph.id_index[v] for v in interior])
            k = float(np.max(vals[bidx] - cv[bidx]))
            cert = check_ceca(graph, vals, interior,
                              ExpCone(far, slope_a, +1, b, k, bias.beta))
            assert cert.holds


# -- biased convexity -----------------------------------------------------------

def brute_force_convex_violation(samples, beta):
    """Independent oracle: scan all triples with the weight formula."""
    worst = -math.inf
    arg = None
    for (s, gs), (t, gt), (r, gr) in itertools.combinations(samples, 3):
        lam = math.expm1(beta * (r - t)) / math.expm1(beta * (r - s))
        gap = gt - (lam * gs + (1 - lam) * gr)
        if gap > worst:
            worst, arg = gap, (s, t, r)
    return worst, arg


def test_constant_profile_passes_with_equality():
    samples = [(0.1 * k, 0.8) for k in range(6)]
    cert = check_beta_convex(samples, 1.0)
    assert cert.holds and cert.worst_gap == pytest.approx(0.0, abs=1e-13)
    cert = check_beta_concave(samples, 1.0)
    assert cert.holds and cert.worst_gap == pytest.approx(0.0, abs=1e-13)


def test_cone_profile_passes_with_equality():
    beta, A = 1.3, 0.9
    samples = [(r, (A / beta) * -math.expm1(-beta * r))
               for r in np.linspace(0.0, 1.0, 9)]
    cert = check_beta_convex(samples, beta)
    assert cert.holds
    assert cert.worst_gap == pytest.approx(0.0, abs=1e-12)


def test_negative_cone_profile_is_beta_concave():
    beta, A = 1.3, 0.9
    samples = [(r, (A / beta) * (1.0 - math.exp(beta * r)))
               for r in np.linspace(0.0, 1.0, 9)]
    cert = check_beta_concave(samples, beta)
    assert cert.holds
    assert cert.worst_gap == pytest.approx(0.0, abs=1e-12)


def test_quadratic_profile_fails_with_witness():
    beta = 1.0
    rs = np.linspace(0.0, 0.2, 9)
    samples = [(r, r - 5.0 * r * r) for r in rs]
    worst, arg = brute_force_convex_violation(samples, beta)
    assert worst > 1e-3
    cert = check_beta_convex(samples, beta)
    assert not cert.holds
    triple, gap = cert.violation_witness
    assert gap == pytest.approx(worst, abs=1e-12)
    assert triple == pytest.approx(arg, abs=1e-12)


def test_convexity_needs_three_increasing_samples():
    with pytest.raises(ValueError):
        check_beta_convex([(0.0, 0.0), (0.1, 0.1)], 1.0)
    with pytest.raises(ValueError):
        check_beta_convex([(0.0, 0.0), (0.1, 0.1), (0.1, 0.2)], 1.0)


def test_solved_profiles_convex_and_concave(square_mixed):
    space, bias, fld = square_mixed
    depth = space.dist_to_terminals()
    for yi in np.flatnonzero((~space.terminal_mask) & (depth > 0.15)):
        y = space.ids[yi]
        radii, gplus = sphere_profile(space, fld.values, y, "max")
        _, gminus = sphere_profile(space, fld.values, y, "min")
        if len(radii) < 3:
            continue
        assert check_beta_convex(list(zip(radii, gplus)), bias.beta).holds
        assert check_beta_concave(list(zip(radii, gminus)), bias.beta).holds
