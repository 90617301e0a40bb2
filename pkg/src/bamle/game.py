"""Monte-Carlo biased tug-of-war with pluggable node strategies.

Episodes are simulated in vectorized lockstep.  All randomness comes from
a counter-based generator keyed on (seed, episode index, step, stream), so
results are bit-reproducible and independent of batching or worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bias import BiasParams
from .fields import ValueField
from .spaces import Space, move_csr

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)
_U53 = float(1 << 53)


def _splitmix(x: np.ndarray) -> np.ndarray:
    z = (x + _SM_GAMMA).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _SM_M1
    z ^= z >> np.uint64(27)
    z *= _SM_M2
    z ^= z >> np.uint64(31)
    return z


def counter_uniform(seed: int, episode: np.ndarray, step: int,
                    stream: int) -> np.ndarray:
    """Uniform [0, 1) draws addressed by (seed, episode, step, stream)."""
    with np.errstate(over="ignore"):
        s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        z = _splitmix(np.asarray(episode, dtype=np.uint64))
        z = _splitmix(z ^ np.uint64(step * 2 + stream))
        z = _splitmix(z ^ s)
    return (z >> np.uint64(11)).astype(np.float64) / _U53


@dataclass(frozen=True)
class Strategy:
    """A stationary node strategy.

    kind is one of ``pull_toward``, ``pull_away`` (both need ``target``),
    ``greedy`` (needs ``field``; maximizes for player I, minimizes for
    player II) or ``random``.  Ties always resolve to the lowest node id.
    """

    kind: str
    target: object = None
    field: Optional[ValueField] = None

    def __post_init__(self):
        if self.kind not in ("pull_toward", "pull_away", "greedy", "random"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind in ("pull_toward", "pull_away") and self.target is None:
            raise ValueError(f"{self.kind} strategy needs a target")
        if self.kind == "greedy" and self.field is None:
            raise ValueError("greedy strategy needs a value field")


@dataclass(frozen=True)
class EpisodeStats:
    """Summary of a batch of independent episodes."""

    n_episodes: int
    mean_payoff: float
    std_error: float
    termination_rate: float
    mean_length: float
    rng_seed: int
    payoffs: np.ndarray = field(repr=False, compare=False, default=None)

    def to_json_dict(self) -> dict:
        return {
            "n_episodes": int(self.n_episodes),
            "mean_payoff": float(self.mean_payoff),
            "std_error": float(self.std_error),
            "termination_rate": float(self.termination_rate),
            "mean_length": float(self.mean_length),
            "rng_seed": int(self.rng_seed),
        }


def policy_table(space: Space, strategy: Strategy, role: str) -> np.ndarray | None:
    """Per-node chosen move for a deterministic strategy; None for random.

    Move lists are stored sorted, so numpy's first-occurrence argmin and
    argmax give the lowest-id tie-break for free.
    """
    if strategy.kind == "random":
        return None
    table = np.full(space.n, -1, dtype=np.int64)
    if strategy.kind in ("pull_toward", "pull_away"):
        d = space.distances_from(space.id_index[strategy.target])
        pick = np.argmin if strategy.kind == "pull_toward" else np.argmax
        for i in range(space.n):
            if len(space.moves[i]):
                table[i] = space.moves[i][pick(d[space.moves[i]])]
    else:
        vals = strategy.field.values
        pick = np.argmax if role == "I" else np.argmin
        for i in range(space.n):
            if len(space.moves[i]):
                table[i] = space.moves[i][pick(vals[space.moves[i]])]
    return table


def _random_moves(space: Space, pos: np.ndarray, draws: np.ndarray
                  ) -> np.ndarray:
    flat, ptr = move_csr(space)
    deg = (ptr[1:] - ptr[:-1])[pos]
    offs = np.minimum((draws * deg).astype(np.int64), deg - 1)
    return flat[ptr[pos] + offs]


def play(space: Space, bias: BiasParams, start, strat_i: Strategy,
         strat_ii: Strategy, n: int, seed: int,
         max_steps: int = 1_000_000) -> EpisodeStats:
    """Simulate ``n`` independent episodes from ``start``.

    Player I wins each toss with probability rho/(rho+1).  Episodes still
    running after ``max_steps`` count as non-terminating: their payoff is
    excluded from the mean and they lower the termination rate.
    """
    if n < 1:
        raise ValueError("need n >= 1 episodes")
    si = space.id_index[start]
    if space.terminal_mask[si]:
        raise ValueError("start node must be non-terminal")
    p_win = bias.p_win
    t_i = policy_table(space, strat_i, "I")
    t_ii = policy_table(space, strat_ii, "II")

    episode = np.arange(n, dtype=np.uint64)
    pos = np.full(n, si, dtype=np.int64)
    running = np.zeros(n)
    length = np.zeros(n, dtype=np.int64)
    payoff = np.full(n, np.nan)
    done = np.zeros(n, dtype=bool)
    live_ids = np.arange(n)

    for step in range(max_steps):
        if len(live_ids) == 0:
            break
        cur = pos[live_ids]
        running[live_ids] += space.running_payoff[cur]
        coin = counter_uniform(seed, episode[live_ids], step, 0) < p_win
        if t_i is None or t_ii is None:
            draws = counter_uniform(seed, episode[live_ids], step, 1)
        nxt_i = t_i[cur] if t_i is not None else \
            _random_moves(space, cur, draws)
        nxt_ii = t_ii[cur] if t_ii is not None else \
            _random_moves(space, cur, draws)
        new = np.where(coin, nxt_i, nxt_ii)
        pos[live_ids] = new
        length[live_ids] += 1
        hit = space.terminal_mask[new]
        if hit.any():
            ended = live_ids[hit]
            payoff[ended] = space.terminal_values[pos[ended]] + running[ended]
            done[ended] = True
            live_ids = live_ids[~hit]

    m = int(done.sum())
    term_rate = m / n
    if m:
        pay = payoff[done]
        mean = float(pay.mean())
        se = float(pay.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        mean_len = float(length[done].mean())
    else:
        mean, se, mean_len = float("nan"), float("nan"), float("nan")
    return EpisodeStats(n_episodes=n, mean_payoff=mean, std_error=se,
                        termination_rate=term_rate, mean_length=mean_len,
                        rng_seed=int(seed), payoffs=payoff)


@dataclass(frozen=True)
class PullBoundsReport:
    """Strategy-bound checks against the closed-form game estimates."""

    target: object
    distance: float
    lower_bound: float
    upper_bound: float
    toward_stats: EpisodeStats
    away_stats: EpisodeStats
    holds_lower: bool
    holds_upper: bool
    drift_mean: float
    drift_se: float
    drift_nonnegative: bool

    def to_json_dict(self) -> dict:
        return {
            "target": str(self.target),
            "distance": self.distance,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "toward": self.toward_stats.to_json_dict(),
            "away": self.away_stats.to_json_dict(),
            "holds_lower": bool(self.holds_lower),
            "holds_upper": bool(self.holds_upper),
            "drift_mean": self.drift_mean,
            "drift_se": self.drift_se,
            "drift_nonnegative": bool(self.drift_nonnegative),
        }


def _drift_run(space: Space, bias: BiasParams, start, y, n: int, seed: int,
               max_steps: int) -> tuple[float, float]:
    """Empirical per-step drift of exp(-beta*d(x_k, y)) under the
    canonical pairing: player I pulls toward y, player II pulls away."""
    si = space.id_index[start]
    yi = space.id_index[y]
    d = space.distances_from(yi)
    t_i = policy_table(space, Strategy("pull_toward", target=y), "I")
    t_ii = policy_table(space, Strategy("pull_away", target=y), "II")
    p_win = bias.p_win
    beta = bias.beta

    episode = np.arange(n, dtype=np.uint64)
    pos = np.full(n, si, dtype=np.int64)
    live_ids = np.arange(n)
    total = 0.0
    total_sq = 0.0
    count = 0
    for step in range(max_steps):
        if len(live_ids) == 0:
            break
        cur = pos[live_ids]
        coin = counter_uniform(seed, episode[live_ids], step, 0) < p_win
        new = np.where(coin, t_i[cur], t_ii[cur])
        inc = np.exp(-beta * d[new]) - np.exp(-beta * d[cur])
        total += float(inc.sum())
        total_sq += float((inc * inc).sum())
        count += len(inc)
        pos[live_ids] = new
        live_ids = live_ids[~space.terminal_mask[new]]
    if count == 0:
        return float("nan"), float("nan")
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    se = math.sqrt(var / count)
    return mean, se


def check_pull_bounds(space: Space, bias: BiasParams, start, y,
                      L: float | None = None, n: int = 10_000,
                      seed: int = 0, max_steps: int = 1_000_000,
                      greedy_field: ValueField | None = None
                      ) -> PullBoundsReport:
    """Exercise the pull-strategy payoff bounds from a fixed start node.

    Run (a): player I pulls toward the terminal ``y`` against a greedy
    adversary; the empirical mean must stay above

        exp(beta*(2*eps+d)) g(y) - (exp(beta*(2*eps+d)) - 1) L / beta

    minus three standard errors.  Run (b): player II pulls away from ``y``
    against a greedy player I; the mean must stay below

        exp(-beta*d) g(y) + (L/beta) (1 - exp(-beta*d))

    plus three standard errors.  Non-termination in run (b) is reported in
    the stats, not failed.  Also reports the empirical per-step drift of
    exp(-beta*d(x_k, y)) under the toward/away pairing, which must be
    nonnegative within three standard errors.
    """
    from .slopes import boundary_slope
    yi = space.id_index[y]
    if not space.terminal_mask[yi]:
        raise ValueError("y must be terminal")
    beta, eps = bias.beta, bias.epsilon
    if L is None:
        L = boundary_slope(space, beta).value
    if greedy_field is None:
        from .solver import solve
        greedy_field = solve(space, bias)
    g_y = float(space.terminal_values[yi])
    d = float(space.distances_from(yi)[space.id_index[start]])

    s = beta * (2.0 * eps + d)
    lower = math.exp(s) * g_y - math.expm1(s) * L / beta if beta > 0 else \
        g_y - L * (2.0 * eps + d)
    w = math.exp(-beta * d)
    upper = w * g_y + (L / beta) * (1.0 - w) if beta > 0 else g_y + L * d

    toward = play(space, bias, start, Strategy("pull_toward", target=y),
                  Strategy("greedy", field=greedy_field), n, seed, max_steps)
    away = play(space, bias, start, Strategy("greedy", field=greedy_field),
                Strategy("pull_away", target=y), n, seed + 1, max_steps)
    holds_lower = toward.mean_payoff >= lower - 3.0 * toward.std_error
    holds_upper = (not np.isfinite(away.mean_payoff)) or \
        away.mean_payoff <= upper + 3.0 * away.std_error

    drift_n = min(n, 20_000)
    drift_mean, drift_se = _drift_run(space, bias, start, y, drift_n,
                                      seed + 2, max_steps)
    drift_ok = not np.isfinite(drift_mean) or \
        drift_mean >= -3.0 * drift_se
    return PullBoundsReport(target=y, distance=d, lower_bound=lower,
                            upper_bound=upper, toward_stats=toward,
                            away_stats=away, holds_lower=bool(holds_lower),
                            holds_upper=bool(holds_upper),
                            drift_mean=drift_mean, drift_se=drift_se,
                            drift_nonnegative=bool(drift_ok))
