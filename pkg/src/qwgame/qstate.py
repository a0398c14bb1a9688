"""Joint two-walker state on the integer plane and its unitary evolution.

Each walker carries one coin qubit; the joint coin lives in a 4-dimensional
space indexed ``2*alice_bit + bob_bit`` (``|00>, |01>, |10>, |11>``), where bit
0 means cooperate and bit 1 means defect. Walker positions are the players'
accumulated payoffs.

The state is stored sparsely: a lexicographically sorted array of occupied
sites ``(x_A, x_B)`` and a matching ``(K, 4)`` array of coin amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

COIN_LABELS = ("00", "01", "10", "11")

NORM_TOL = 1e-8
UNITARY_TOL = 1e-10
PRUNE_PROBABILITY = 1e-30


class InvalidState(ValueError):
    """Raised for unnormalized or malformed coin states."""


class NotUnitary(ValueError):
    """A requested coin operator is not unitary.

    ``failed`` lists the constraints that were violated, in human-readable form.
    """

    def __init__(self, failed, message=None):
        self.failed = list(failed)
        if message is None:
            message = "operator is not unitary: " + "; ".join(self.failed)
        super().__init__(message)


def coin_index(alice_bit: int, bob_bit: int) -> int:
    return 2 * alice_bit + bob_bit


def coin_bits(index: int) -> Tuple[int, int]:
    return index >> 1, index & 1


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    """True iff ``max |m^dagger m - I| <= tol`` elementwise."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    err = m.conj().T @ m - np.eye(m.shape[0])
    return bool(np.max(np.abs(err)) <= tol)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CoinState:
    """Pure state of the joint coin (4 complex amplitudes)."""

    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex).reshape(-1)
        if a.shape != (4,):
            raise InvalidState(f"coin state needs 4 amplitudes, got {a.size}")
        if not np.all(np.isfinite(a)):
            raise InvalidState("coin amplitudes must be finite")
        norm2 = float(np.vdot(a, a).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise InvalidState(f"coin state not normalized (|c|^2 = {norm2:.12g})")
        object.__setattr__(self, "amps", _readonly(a))

    @classmethod
    def basis(cls, index: int) -> "CoinState":
        a = np.zeros(4, dtype=complex)
        a[index] = 1.0
        return cls(a)

    def density(self) -> np.ndarray:
        return np.outer(self.amps, self.amps.conj())

    def __repr__(self):
        return f"CoinState({np.array2string(self.amps, precision=6)})"


# Initial coins used throughout the analysis.
BELL_PHI_PLUS = CoinState(np.array([1, 0, 0, 1]) / np.sqrt(2))
BELL_PSI_PLUS = CoinState(np.array([0, 1, 1, 0]) / np.sqrt(2))
UNBIASED_PRODUCT = CoinState(np.array([1, 1j, 1j, -1]) / 2)

COIN_PRESETS: Dict[str, CoinState] = {
    "00": CoinState.basis(0),
    "01": CoinState.basis(1),
    "10": CoinState.basis(2),
    "11": CoinState.basis(3),
    "bell00": BELL_PHI_PLUS,
    "bell01": BELL_PSI_PLUS,
    "product": UNBIASED_PRODUCT,
}


@dataclass(frozen=True, eq=False)
class CoinOperator:
    """4x4 unitary acting on the joint coin. Unitarity is checked on creation."""

    m: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"coin operator must be 4x4, got {m.shape}")
        if not is_unitary(m, UNITARY_TOL):
            err = np.max(np.abs(m.conj().T @ m - np.eye(4)))
            raise NotUnitary([f"max |m^dagger m - I| = {err:.3g} > {UNITARY_TOL:g}"])
        object.__setattr__(self, "m", _readonly(m))

    def apply(self, coin: CoinState) -> CoinState:
        return CoinState(self.m @ coin.amps)

    def transition_probabilities(self) -> np.ndarray:
        """``W[c', c] = |<c'|U|c>|^2``."""
        return np.abs(self.m) ** 2

    def __repr__(self):
        name = self.label or "CoinOperator"
        return f"{name}(\n{np.array2string(self.m, precision=4)})"


IDENTITY = CoinOperator(np.eye(4), "I")


@dataclass(frozen=True)
class PayoffTable:
    """Per-round payoffs R, S, T, P; also the step sizes of the conditional shift."""

    R: int
    S: int
    T: int
    P: int

    def __post_init__(self):
        for name in ("R", "S", "T", "P"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                if isinstance(v, float) and v.is_integer():
                    object.__setattr__(self, name, int(v))
                    continue
                raise ValueError(f"payoff {name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def steps_a(self) -> np.ndarray:
        """Alice's step for each joint coin state (00, 01, 10, 11)."""
        return np.array([self.R, self.S, self.T, self.P], dtype=np.int64)

    @property
    def steps_b(self) -> np.ndarray:
        """Bob's step for each joint coin state; he receives T when only Alice cooperates."""
        return np.array([self.R, self.T, self.S, self.P], dtype=np.int64)

    @property
    def game_class(self) -> str:
        R, S, T, P = self.R, self.S, self.T, self.P
        if T > R > P > S and 2 * R > T + S:
            return "prisoners_dilemma"
        if T > R > S > P:
            return "hawk_dove"
        if R > T > P > S:
            return "stag_hunt"
        return "other"

    @property
    def shift_is_separable(self) -> bool:
        # Each walker's step then depends only on its own coin bit.
        return self.R == self.S and self.T == self.P

    def as_dict(self) -> Dict[str, int]:
        return {"R": self.R, "S": self.S, "T": self.T, "P": self.P}


PD_PAYOFFS = PayoffTable(R=1, S=-2, T=2, P=-1)

PAYOFF_PRESETS: Dict[str, PayoffTable] = {
    "pd": PD_PAYOFFS,
    "hawk-dove": PayoffTable(R=1, S=-1, T=2, P=-2),
    "stag-hunt": PayoffTable(R=2, S=-2, T=1, P=-1),
}


@dataclass(frozen=True, eq=False)
class JointState:
    """Sparse amplitude field over occupied sites.

    ``positions`` is ``(K, 2)`` int64, unique and lexicographically sorted;
    ``amps`` is ``(K, 4)`` complex, one coin 4-vector per site.
    """

    positions: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.int64).reshape(-1, 2)
        amps = np.array(self.amps, dtype=complex).reshape(-1, 4)
        if len(pos) != len(amps):
            raise InvalidState("positions and amplitudes disagree in length")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "amps", _readonly(amps))

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def site_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=1)

    def as_dict(self) -> Dict[Tuple[int, int], np.ndarray]:
        return {(int(x), int(y)): a.copy() for (x, y), a in zip(self.positions, self.amps)}

    def amplitude(self, xa: int, xb: int) -> np.ndarray:
        hit = np.nonzero((self.positions[:, 0] == xa) & (self.positions[:, 1] == xb))[0]
        if len(hit) == 0:
            return np.zeros(4, dtype=complex)
        return self.amps[hit[0]].copy()


def merge_sites(positions: np.ndarray, values: np.ndarray):
    """Sum rows of ``values`` that share a site; returns sorted unique sites."""
    if len(positions) == 0:
        return positions.reshape(0, 2), values.reshape(0, values.shape[-1])
    lo = positions.min(axis=0)
    span = int(positions[:, 1].max() - lo[1]) + 1
    # scalar key is monotone in lexicographic (x_A, x_B) order
    key = (positions[:, 0] - lo[0]) * span + (positions[:, 1] - lo[1])
    ukey, inverse = np.unique(key, return_inverse=True)
    uniq = np.empty((len(ukey), 2), dtype=np.int64)
    uniq[:, 0] = ukey // span + lo[0]
    uniq[:, 1] = ukey % span + lo[1]
    out = np.zeros((len(ukey), values.shape[1]), dtype=values.dtype)
    np.add.at(out, inverse.reshape(-1), values)
    return uniq, out


def shift_sites(positions: np.ndarray, values: np.ndarray, payoffs: PayoffTable):
    """Move column ``c`` of ``values`` by Alice's and Bob's step for coin ``c``.

    Works for amplitudes and for coin probability vectors alike.
    """
    k = len(positions)
    sa, sb = payoffs.steps_a, payoffs.steps_b
    new_pos = np.empty((4 * k, 2), dtype=np.int64)
    new_val = np.zeros((4 * k, 4), dtype=values.dtype)
    for c in range(4):
        rows = slice(c * k, (c + 1) * k)
        new_pos[rows, 0] = positions[:, 0] + sa[c]
        new_pos[rows, 1] = positions[:, 1] + sb[c]
        new_val[rows, c] = values[:, c]
    keep = np.any(new_val != 0, axis=1)
    return merge_sites(new_pos[keep], new_val[keep])


def new_joint_state(coin) -> JointState:
    """Both walkers at the origin with the given joint coin."""
    if not isinstance(coin, CoinState):
        coin = CoinState(coin)
    return JointState(np.zeros((1, 2), dtype=np.int64), coin.amps.reshape(1, 4))


def apply_coin(state: JointState, op: CoinOperator) -> JointState:
    return JointState(state.positions, state.amps @ op.m.T)


def apply_shift(state: JointState, payoffs: PayoffTable) -> JointState:
    pos, amps = shift_sites(state.positions, state.amps, payoffs)
    return JointState(pos, amps)


def prune(state: JointState, threshold: float = PRUNE_PROBABILITY) -> JointState:
    keep = state.site_probabilities() >= threshold
    if np.all(keep):
        return state
    return JointState(state.positions[keep], state.amps[keep])


def step(state: JointState, op: CoinOperator, payoffs: PayoffTable) -> JointState:
    """One round: coin operation, conditional shift, then pruning of negligible sites."""
    return prune(apply_shift(apply_coin(state, op), payoffs))


def payoff_means(state: JointState) -> Tuple[float, float]:
    p = state.site_probabilities()
    xa, xb = p @ state.positions
    return float(xa), float(xb)


def payoff_distribution(state: JointState) -> List[Tuple[Tuple[int, int], float]]:
    p = state.site_probabilities()
    return [((int(x), int(y)), float(w)) for (x, y), w in zip(state.positions, p) if w > 0]


def reduced_coin_density(state: JointState) -> np.ndarray:
    """Joint-coin density matrix with both position registers traced out."""
    a = state.amps
    return a.T @ a.conj()


def schmidt_matrix(state: JointState) -> np.ndarray:
    """Amplitudes reshaped to rows (x_A, Alice bit) by columns (x_B, Bob bit)."""
    _, ia = np.unique(state.positions[:, 0], return_inverse=True)
    _, ib = np.unique(state.positions[:, 1], return_inverse=True)
    ia, ib = ia.reshape(-1), ib.reshape(-1)
    m = np.zeros((2 * (ia.max(initial=-1) + 1), 2 * (ib.max(initial=-1) + 1)), dtype=complex)
    for c in range(4):
        a, b = coin_bits(c)
        m[2 * ia + a, 2 * ib + b] = state.amps[:, c]
    return m


def entropy_from_probabilities(lam: np.ndarray, cutoff: float = 1e-20) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > cutoff]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def entanglement_entropy(state: JointState) -> float:
    """Von Neumann entropy (bits) across the Alice | Bob cut.

    Alice's subsystem is her position register plus her coin qubit; Bob's is
    the same for him. Computed from the singular values of the amplitude
    matrix, so the state is assumed pure.
    """
    m = schmidt_matrix(state)
    if m.size == 0:
        return 0.0
    s = np.linalg.svd(m, compute_uv=False)
    s_max = min(m.shape)
    return min(entropy_from_probabilities(s ** 2), float(np.log2(s_max)))
