import numpy as np
import pytest

from bamle import (Strategy, check_pull_bounds, path_1d, play, solve,
                   three_node)
from bamle.game import counter_uniform, policy_table
from conftest import TIGHT


def test_counter_rng_is_deterministic_and_uniformish():
    a = counter_uniform(42, np.arange(1000, dtype=np.uint64), 3, 0)
    b = counter_uniform(42, np.arange(1000, dtype=np.uint64), 3, 0)
    c = counter_uniform(43, np.arange(1000, dtype=np.uint64), 3, 0)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert 0.4 < a.mean() < 0.6
    assert a.min() >= 0.0 and a.max() < 1.0


def test_policy_tables_lowest_id_tie_break():
    g, bias = path_1d(4, 0.0, 0.0, beta=0.5)
    dp = solve(g, bias)
    # all values equal: greedy argmax picks the lower-id neighbor
    table = policy_table(g, Strategy("greedy", field=dp), "I")
    assert table[g.id_index[2]] == g.id_index[1]


def test_pull_toward_deterministic_walk():
    g, bias = path_1d(6, -1.0, 2.0, beta=0.5)
    st = play(g, bias, 3, Strategy("pull_toward", target=6),
              Strategy("pull_toward", target=6), n=500, seed=9)
    assert st.termination_rate == 1.0
    assert st.mean_payoff == 2.0
    assert st.std_error == 0.0
    assert st.mean_length == 3.0


def test_greedy_vs_greedy_matches_dp_three_node():
    g, bias = three_node(1.0, 0.0, 2.0)
    dp = solve(g, bias)
    st = play(g, bias, 1, Strategy("greedy", field=dp),
              Strategy("greedy", field=dp), n=30_000, seed=4)
    assert abs(st.mean_payoff - 2.0 / 3.0) <= 3.0 * st.std_error
    assert st.termination_rate == 1.0


def test_identical_seed_bit_reproducible():
    g, bias = path_1d(10, 0.0, 1.0, beta=0.5)
    dp = solve(g, bias)
    kw = dict(n=5_000, seed=123)
    s1 = play(g, bias, 5, Strategy("greedy", field=dp),
              Strategy("random"), **kw)
    s2 = play(g, bias, 5, Strategy("greedy", field=dp),
              Strategy("random"), **kw)
    assert s1.to_json_dict() == s2.to_json_dict()
    assert np.array_equal(s1.payoffs, s2.payoffs, equal_nan=True)


def test_max_steps_counts_nontermination():
    g, bias = path_1d(10, 0.0, 1.0, beta=0.5)
    dp = solve(g, bias)
    st = play(g, bias, 5, Strategy("greedy", field=dp),
              Strategy("greedy", field=dp), n=200, seed=1, max_steps=2)
    assert st.termination_rate < 1.0


def test_constant_data_bounds_collapse():
    g, bias = path_1d(8, 0.4, 0.4, beta=0.5)
    rep = check_pull_bounds(g, bias, 4, 8, n=2_000, seed=5)
    assert rep.lower_bound == pytest.approx(0.4, abs=1e-12)
    assert rep.upper_bound == pytest.approx(0.4, abs=1e-12)
    assert rep.toward_stats.mean_payoff == pytest.approx(0.4, abs=1e-12)
    assert rep.holds_lower and rep.holds_upper


def test_pull_bounds_on_path():
    g, bias = path_1d(10, 0.0, 1.0, beta=0.5)
    dp = solve(g, bias, TIGHT)
    rep = check_pull_bounds(g, bias, 5, 10, n=20_000, seed=2,
                            greedy_field=dp)
    assert rep.holds_lower and rep.holds_upper
    assert rep.drift_nonnegative
    # adjacent start reduces the upper bound to one-step form
    rep1 = check_pull_bounds(g, bias, 9, 10, n=5_000, seed=3,
                             greedy_field=dp)
    import math
    L = rep1.upper_bound
    w = math.exp(-bias.beta * bias.epsilon)
    from bamle import boundary_slope
    Lb = boundary_slope(g, bias.beta).value
    assert L == pytest.approx(w * 1.0 + (Lb / bias.beta) * (1 - w), abs=1e-12)


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy("pull_toward")
    with pytest.raises(ValueError):
        Strategy("greedy")
    with pytest.raises(ValueError):
        Strategy("bogus")
    g, bias = path_1d(4, 0.0, 1.0, beta=0.5)
    dp = solve(g, bias)
    with pytest.raises(ValueError):
        play(g, bias, 0, Strategy("random"), Strategy("random"), 10, 1)
    with pytest.raises(ValueError):
        play(g, bias, 2, Strategy("random"), Strategy("random"), 0, 1)


def test_random_strategies_terminate_and_average_between_ends():
    g, bias = path_1d(6, 0.0, 1.0, beta=1.0)
    st = play(g, bias, 3, Strategy("random"), Strategy("random"),
              n=4_000, seed=77)
    assert st.termination_rate == 1.0
    assert 0.0 < st.mean_payoff < 1.0
