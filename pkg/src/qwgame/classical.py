"""Exact classical iterated game: a Markov chain on the four joint moves.

Payoff for a round accrues on the joint state *after* both players have moved,
which is when the quantum walk applies its shift.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .qstate import CoinState, PayoffTable, coin_bits, coin_index
from .strategies import ClassicalStrategy, Player, received


class Order(str, enum.Enum):
    SIMULTANEOUS = "simultaneous"
    A_FIRST = "A_first"
    B_FIRST = "B_first"


@dataclass(frozen=True, eq=False)
class JointCoinDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.shape != (4,):
            raise ValueError("joint coin distribution needs 4 probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {p}")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def certain(cls, index: int) -> "JointCoinDistribution":
        p = np.zeros(4)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls) -> "JointCoinDistribution":
        return cls(np.full(4, 0.25))

    @classmethod
    def from_coin(cls, coin: CoinState) -> "JointCoinDistribution":
        p = np.abs(coin.amps) ** 2
        return cls(p / p.sum())

    def density(self) -> np.ndarray:
        return np.diag(self.probs).astype(complex)


def _cooperate_probability(player: Player, strat: ClassicalStrategy, c: int) -> float:
    return strat.probs[received(player, c)]


def _choice(player: Player, strat: ClassicalStrategy, c: int, bit: int) -> float:
    p = _cooperate_probability(player, strat, c)
    return p if bit == 0 else 1.0 - p


def classical_transition_matrix(
    strat_a: ClassicalStrategy, strat_b: ClassicalStrategy, order: Order = Order.SIMULTANEOUS
) -> np.ndarray:
    """Row-stochastic ``T[c, c']`` for one round.

    In the sequential orders the second mover reacts to the intermediate joint
    state made of the first mover's new choice and their own old choice.
    """
    order = Order(order)
    t = np.zeros((4, 4))
    for c in range(4):
        a, b = coin_bits(c)
        for a2 in (0, 1):
            for b2 in (0, 1):
                if order is Order.SIMULTANEOUS:
                    w = _choice(Player.A, strat_a, c, a2) * _choice(Player.B, strat_b, c, b2)
                elif order is Order.A_FIRST:
                    mid = coin_index(a2, b)
                    w = _choice(Player.A, strat_a, c, a2) * _choice(Player.B, strat_b, mid, b2)
                else:
                    mid = coin_index(a, b2)
                    w = _choice(Player.B, strat_b, c, b2) * _choice(Player.A, strat_a, mid, a2)
                t[c, coin_index(a2, b2)] = w
    return t


def classical_payoff_trajectory(
    strat_a: ClassicalStrategy,
    strat_b: ClassicalStrategy,
    initial: JointCoinDistribution,
    steps: int,
    payoffs: PayoffTable,
    order: Order = Order.SIMULTANEOUS,
) -> np.ndarray:
    """Expected cumulative payoffs after each round, shape ``(steps, 2)``."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    t = classical_transition_matrix(strat_a, strat_b, order)
    gain = np.stack([payoffs.steps_a, payoffs.steps_b], axis=1).astype(float)
    dist = initial.probs.copy()
    total = np.zeros(2)
    out = np.zeros((steps, 2))
    for n in range(steps):
        dist = dist @ t
        total = total + dist @ gain
        out[n] = total
    return out


def classical_expected_payoffs(
    strat_a: ClassicalStrategy,
    strat_b: ClassicalStrategy,
    initial: JointCoinDistribution,
    steps: int,
    payoffs: PayoffTable,
    order: Order = Order.SIMULTANEOUS,
) -> Tuple[float, float]:
    traj = classical_payoff_trajectory(strat_a, strat_b, initial, steps, payoffs, order)
    if steps == 0:
        return 0.0, 0.0
    return float(traj[-1, 0]), float(traj[-1, 1])
