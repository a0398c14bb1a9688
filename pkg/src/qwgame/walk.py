"""Complete iterated games: coherent (unitary) play and the measured classical limit."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .classical import JointCoinDistribution
from .qstate import (
    PRUNE_PROBABILITY,
    CoinOperator,
    CoinState,
    JointState,
    PayoffTable,
    entanglement_entropy,
    new_joint_state,
    payoff_distribution,
    payoff_means,
    shift_sites,
    step,
)


class Mode(str, enum.Enum):
    UNITARY = "unitary"
    MEASURED = "measured"


@dataclass(frozen=True)
class Record:
    trajectory: bool = False
    entropy_series: bool = False
    final_distribution: bool = False
    # full per-step distributions can be large
    distributions: bool = False


@dataclass(frozen=True)
class GameConfig:
    payoffs: PayoffTable
    coin_op: CoinOperator
    initial_coin: Union[CoinState, JointCoinDistribution]
    steps: int
    mode: Mode = Mode.UNITARY
    record: Record = Record()
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not isinstance(self.coin_op, CoinOperator):
            raise TypeError("coin_op must be a CoinOperator")
        if self.mode is Mode.UNITARY and not isinstance(self.initial_coin, CoinState):
            raise ValueError("unitary mode needs a pure initial coin state")
        if self.mode is Mode.MEASURED and self.record.entropy_series:
            raise ValueError("entropy series is only defined in unitary mode")


Distribution = List[Tuple[Tuple[int, int], float]]


@dataclass(frozen=True)
class GameResult:
    final_payoff_means: Tuple[float, float]
    mode: Mode
    steps: int
    trajectory: Optional[List[Tuple[float, float]]] = None
    entropy_series: Optional[List[float]] = None
    final_distribution: Optional[Distribution] = None
    distributions: Optional[List[Distribution]] = None
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "payoff_means": [float(v) for v in self.final_payoff_means],
            "mode": self.mode.value,
            "steps": self.steps,
        }
        if self.trajectory is not None:
            d["trajectory"] = [[float(a), float(b)] for a, b in self.trajectory]
        if self.entropy_series is not None:
            d["entropy_series"] = [float(s) for s in self.entropy_series]
        if self.final_distribution is not None:
            d["final_distribution"] = [[x, y, p] for (x, y), p in self.final_distribution]
        if self.distributions is not None:
            d["distributions"] = [[[x, y, p] for (x, y), p in dist] for dist in self.distributions]
        d["metadata"] = dict(self.metadata)
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "GameResult":
        def dist(rows):
            return [((int(x), int(y)), float(p)) for x, y, p in rows]

        return cls(
            final_payoff_means=tuple(d["payoff_means"]),
            mode=Mode(d["mode"]),
            steps=int(d["steps"]),
            trajectory=[tuple(r) for r in d["trajectory"]] if "trajectory" in d else None,
            entropy_series=list(d["entropy_series"]) if "entropy_series" in d else None,
            final_distribution=dist(d["final_distribution"]) if "final_distribution" in d else None,
            distributions=[dist(x) for x in d["distributions"]] if "distributions" in d else None,
            metadata=dict(d.get("metadata", {})),
        )


def evolve(state: JointState, config: GameConfig) -> JointState:
    for _ in range(config.steps):
        state = step(state, config.coin_op, config.payoffs)
    return state


def run_game(config: GameConfig) -> GameResult:
    """Apply the round operator ``steps`` times from both walkers at the origin."""
    if config.mode is not Mode.UNITARY:
        raise ValueError("run_game plays unitary games; use run_measured")
    rec = config.record
    state = new_joint_state(config.initial_coin)
    traj, ent, dists = [], [], []
    for _ in range(config.steps):
        state = step(state, config.coin_op, config.payoffs)
        if rec.trajectory:
            traj.append(payoff_means(state))
        if rec.entropy_series:
            ent.append(entanglement_entropy(state))
        if rec.distributions:
            dists.append(payoff_distribution(state))
    return GameResult(
        final_payoff_means=payoff_means(state),
        mode=Mode.UNITARY,
        steps=config.steps,
        trajectory=traj if rec.trajectory else None,
        entropy_series=ent if rec.entropy_series else None,
        final_distribution=payoff_distribution(state) if rec.final_distribution else None,
        distributions=dists if rec.distributions else None,
        metadata=dict(config.metadata),
    )


@dataclass(frozen=True, eq=False)
class MixedState:
    """Coin-diagonal mixture: ``probs[k, c]`` is the mass at site ``positions[k]`` with coin ``c``."""

    positions: np.ndarray
    probs: np.ndarray

    def site_probabilities(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def payoff_means(self) -> Tuple[float, float]:
        xa, xb = self.site_probabilities() @ self.positions
        return float(xa), float(xb)

    def distribution(self) -> Distribution:
        p = self.site_probabilities()
        return [((int(x), int(y)), float(w)) for (x, y), w in zip(self.positions, p) if w > 0]


def _shift_mixed(positions, coin_probs, payoffs) -> MixedState:
    pos, probs = shift_sites(positions, coin_probs, payoffs)
    keep = probs.sum(axis=1) >= PRUNE_PROBABILITY
    return MixedState(pos[keep], probs[keep])


def _initial_density(coin) -> np.ndarray:
    if isinstance(coin, CoinState):
        return coin.density()
    if isinstance(coin, JointCoinDistribution):
        return coin.density()
    raise TypeError("initial coin must be a CoinState or JointCoinDistribution")


def run_measured(config: GameConfig) -> GameResult:
    """Classical limit: the joint coin is measured after every coin operation,
    before the shift. Propagates the exact distribution (no sampling)."""
    rec = config.record
    u = config.coin_op.m
    w = config.coin_op.transition_probabilities()
    origin = np.zeros((1, 2), dtype=np.int64)
    state = MixedState(origin, np.zeros((1, 4)))
    traj, dists = [], []
    for n in range(config.steps):
        if n == 0:
            rho = u @ _initial_density(config.initial_coin) @ u.conj().T
            coin_probs = np.real(np.diag(rho)).reshape(1, 4)
            state = _shift_mixed(origin, coin_probs, config.payoffs)
        else:
            state = _shift_mixed(state.positions, state.probs @ w.T, config.payoffs)
        if rec.trajectory:
            traj.append(state.payoff_means())
        if rec.distributions:
            dists.append(state.distribution())
    if config.steps == 0:
        means = (0.0, 0.0)
        final = [((0, 0), 1.0)]
    else:
        means = state.payoff_means()
        final = state.distribution()
    return GameResult(
        final_payoff_means=means,
        mode=Mode.MEASURED,
        steps=config.steps,
        trajectory=traj if rec.trajectory else None,
        final_distribution=final if rec.final_distribution else None,
        distributions=dists if rec.distributions else None,
        metadata=dict(config.metadata),
    )


def simulate(config: GameConfig) -> GameResult:
    """Dispatch on ``config.mode``."""
    if config.mode is Mode.MEASURED:
        return run_measured(config)
    return run_game(config)
