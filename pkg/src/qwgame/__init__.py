"""Iterated two-player quantum games played on a two-walker discrete-time quantum walk."""

__version__ = "0.1.0"

from .qstate import (  # noqa: E402
    BELL_PHI_PLUS,
    BELL_PSI_PLUS,
    COIN_PRESETS,
    PD_PAYOFFS,
    UNBIASED_PRODUCT,
    CoinOperator,
    CoinState,
    InvalidState,
    JointState,
    NotUnitary,
    PayoffTable,
    entanglement_entropy,
    new_joint_state,
    payoff_means,
    step,
)
from .strategies import PAVLOV, RANDOM, TFT, ClassicalStrategy, Player  # noqa: E402
from .walk import GameConfig, GameResult, Mode, Record, run_game, run_measured, simulate  # noqa: E402
