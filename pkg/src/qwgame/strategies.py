"""Two-qubit coin operators that encode player strategies.

A classical conditional strategy ``[p_R, p_S, p_T, p_P]`` gives the probability
of cooperating after having received each payoff. Quantum versions are built
either *sequentially* (each player applies an operator that leaves the
opponent's qubit alone) or *simultaneously* (one joint 4x4 operator whose
entry moduli are products of both players' classical probabilities).

Basis ordering follows :mod:`qwgame.qstate`: index ``2*alice_bit + bob_bit``.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .qstate import CoinOperator, NotUnitary, coin_bits, coin_index, is_unitary

PAYOFF_NAMES = ("R", "S", "T", "P")
PROB_TOL = 1e-9
PHASE_TOL = 1e-9

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_I2 = np.eye(2, dtype=complex)


class Player(enum.Enum):
    A = "A"
    B = "B"

    @property
    def opponent(self) -> "Player":
        return Player.B if self is Player.A else Player.A


def received(player: Player, c: int) -> int:
    """Index into (R, S, T, P) of the payoff ``player`` got in joint state ``c``."""
    a, b = coin_bits(c)
    own, other = (a, b) if player is Player.A else (b, a)
    # C/C -> R, C/D -> S, D/C -> T, D/D -> P from the player's own viewpoint
    return 2 * own + other


def own_bit(player: Player, c: int) -> int:
    a, b = coin_bits(c)
    return a if player is Player.A else b


def with_own_bit(player: Player, c: int, bit: int) -> int:
    a, b = coin_bits(c)
    return coin_index(bit, b) if player is Player.A else coin_index(a, bit)


@dataclass(frozen=True)
class ClassicalStrategy:
    """Probability of playing C after receiving R, S, T, P respectively."""

    p_R: float
    p_S: float
    p_T: float
    p_P: float
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for key in ("p_R", "p_S", "p_T", "p_P"):
            v = float(getattr(self, key))
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{key} must lie in [0, 1], got {v}")
            object.__setattr__(self, key, v)

    @property
    def probs(self) -> Tuple[float, float, float, float]:
        return (self.p_R, self.p_S, self.p_T, self.p_P)

    @property
    def is_unconditional(self) -> bool:
        return max(self.probs) - min(self.probs) <= 1e-12

    def sequential_violations(self) -> List[str]:
        failed = []
        if abs(self.p_R + self.p_T - 1.0) > PROB_TOL:
            failed.append(f"p_R + p_T = 1 (got {self.p_R + self.p_T:.12g})")
        if abs(self.p_S + self.p_P - 1.0) > PROB_TOL:
            failed.append(f"p_S + p_P = 1 (got {self.p_S + self.p_P:.12g})")
        return failed

    @property
    def sequential_ok(self) -> bool:
        return not self.sequential_violations()

    def __str__(self):
        s = "[" + ", ".join(f"{p:g}" for p in self.probs) + "]"
        return f"{self.name} {s}" if self.name else s


PAVLOV = ClassicalStrategy(1, 0, 0, 1, name="pavlov")
RANDOM = ClassicalStrategy(0.5, 0.5, 0.5, 0.5, name="random")
TFT = ClassicalStrategy(1, 0, 1, 0, name="tft")
ALWAYS_C = ClassicalStrategy(1, 1, 1, 1, name="always-c")
ALWAYS_D = ClassicalStrategy(0, 0, 0, 0, name="always-d")

NAMED_STRATEGIES = {s.name: s for s in (PAVLOV, RANDOM, TFT, ALWAYS_C, ALWAYS_D)}


def _check_angles(values, what):
    for v in values:
        if not (-math.pi - 1e-12 <= v <= math.pi + 1e-12):
            raise ValueError(f"{what} angle {v} outside [-pi, pi]")


@dataclass(frozen=True)
class SequentialPhases:
    """Phases of the amplitudes to cooperate (``phi``) and defect (``theta``)
    after each payoff, in (R, S, T, P) order."""

    phi: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    theta: Tuple[float, float, float, float] = (0.0, 0.0, math.pi, math.pi)

    def __post_init__(self):
        phi = tuple(float(v) for v in self.phi)
        theta = tuple(float(v) for v in self.theta)
        if len(phi) != 4 or len(theta) != 4:
            raise ValueError("phi and theta need 4 angles each")
        _check_angles(phi + theta, "phase")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)


# Real convention shared by the Hadamard and the xi-family; satisfies the
# block orthogonality conditions for every admissible probability vector.
DEFAULT_SEQUENTIAL_PHASES = SequentialPhases()


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def _sequential_matrix(player: Player, to_c: Sequence[complex], to_d: Sequence[complex]) -> np.ndarray:
    """Operator sending each basis state to ``to_c[i]|own=0> + to_d[i]|own=1>``,
    where ``i`` is the payoff the player just received. Opponent bit untouched."""
    m = np.zeros((4, 4), dtype=complex)
    for c in range(4):
        i = received(player, c)
        m[with_own_bit(player, c, 0), c] = to_c[i]
        m[with_own_bit(player, c, 1), c] = to_d[i]
    return m


def sequential_from_classical(
    player: Player,
    probs: ClassicalStrategy,
    phases: SequentialPhases = DEFAULT_SEQUENTIAL_PHASES,
) -> CoinOperator:
    """Sequential quantum version of a classical strategy for one player.

    Raises :class:`NotUnitary` when the strategy has no sequential analog,
    i.e. unless ``p_R + p_T = p_S + p_P = 1`` and the phases make each 2x2
    block orthogonal.
    """
    failed = probs.sequential_violations()
    if failed:
        raise NotUnitary(failed, f"{probs} has no sequential quantum version: " + "; ".join(failed))
    p = list(probs.probs)
    p[2] = 1.0 - p[0]
    p[3] = 1.0 - p[1]
    phi, theta = list(phases.phi), list(phases.theta)
    for i in range(4):
        # irrelevant phases on vanishing amplitudes are canonicalized to 0
        if p[i] == 1.0:
            theta[i] = 0.0
        if p[i] == 0.0:
            phi[i] = 0.0
    to_c = [np.exp(1j * phi[i]) * math.sqrt(p[i]) for i in range(4)]
    to_d = [np.exp(1j * theta[i]) * math.sqrt(1.0 - p[i]) for i in range(4)]
    m = _sequential_matrix(player, to_c, to_d)
    if not is_unitary(m):
        failed = []
        for lo, hi in ((0, 2), (1, 3)):
            if 0.0 < p[lo] < 1.0:
                d = _wrap((phi[hi] - phi[lo]) - (theta[hi] - theta[lo]) - math.pi)
                if abs(d) > PHASE_TOL:
                    x, y = PAYOFF_NAMES[lo], PAYOFF_NAMES[hi]
                    failed.append(f"(phi_{y} - phi_{x}) - (theta_{y} - theta_{x}) = pi mod 2pi")
        raise NotUnitary(failed or ["block orthogonality"])
    return CoinOperator(m, f"seq[{player.value}]{probs}")


def pavlov(player: Player, nu1: float = 0.0, nu2: float = 0.0, nu3: float = 0.0) -> CoinOperator:
    """Pavlov family: a rephased CNOT with the opponent's qubit as control."""
    e = [np.exp(1j * v) for v in (nu1, nu2, nu3)]
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    if player is Player.A:
        m[3, 1], m[2, 2], m[1, 3] = e
    else:
        m[1, 1], m[3, 2], m[2, 3] = e
    return CoinOperator(m, f"pavlov[{player.value}]")


def random_hadamard(player: Player) -> CoinOperator:
    m = np.kron(_H, _I2) if player is Player.A else np.kron(_I2, _H)
    return CoinOperator(m, f"random[{player.value}]")


def local(alice=None, bob=None) -> CoinOperator:
    """Product operator from one-qubit unitaries (identity where omitted)."""
    a = _I2 if alice is None else np.asarray(alice, dtype=complex)
    b = _I2 if bob is None else np.asarray(bob, dtype=complex)
    return CoinOperator(np.kron(a, b), "local")


def interpolated(player: Player, xi: float) -> CoinOperator:
    """Real one-parameter family between Pavlov (xi=0) and Random (xi=pi/4).

    ``cos(xi)**2`` is the probability of cooperating after R (and after P);
    the minus signs sit on the defect amplitudes after T and P.
    """
    if not (-1e-12 <= xi <= math.pi / 4 + 1e-12):
        warnings.warn(f"xi={xi} outside [0, pi/4]", stacklevel=2)
    c, s = math.cos(xi), math.sin(xi)
    m = _sequential_matrix(player, to_c=(c, s, s, c), to_d=(s, c, -c, -s))
    return CoinOperator(m, f"xi[{player.value}]={xi:.6g}")


def interpolated_probs(xi: float) -> ClassicalStrategy:
    c2, s2 = math.cos(xi) ** 2, math.sin(xi) ** 2
    return ClassicalStrategy(c2, s2, s2, c2, name=f"xi={xi:.6g}")


def compose_sequential(first: CoinOperator, second: CoinOperator) -> CoinOperator:
    """``second @ first``: ``first`` acts on the coin first."""
    return CoinOperator(second.m @ first.m, f"{second.label}*{first.label}")


def acts_only_on(op: CoinOperator, player: Player, tol: float = 1e-10) -> bool:
    """True iff ``op`` never changes the opponent's coin bit."""
    opp = player.opponent
    for r in range(4):
        for c in range(4):
            if own_bit(opp, r) != own_bit(opp, c) and abs(op.m[r, c]) > tol:
                return False
    return True


# ---------------------------------------------------------------------------
# Simultaneous games
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    """Phases ``phi[k, l]`` of the simultaneous display: row ``k`` is the previous
    joint state, column ``l`` the new one."""

    phi: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.shape != (4, 4):
            raise ValueError("phase matrix must be 4x4")
        _check_angles(phi.ravel(), "phase matrix")
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(np.sin(self.phi)) < 1e-12))


def _choice_probs(player: Player, probs: ClassicalStrategy) -> np.ndarray:
    """``q[k, bit]``: probability the player's new bit is ``bit`` from joint state ``k``."""
    q = np.empty((4, 2))
    for k in range(4):
        p = probs.probs[received(player, k)]
        q[k] = (p, 1.0 - p)
    return q


def simultaneous_moduli(probs_a: ClassicalStrategy, probs_b: ClassicalStrategy) -> np.ndarray:
    """Display-ordered moduli ``sqrt(p^A p^B)`` (row = previous state)."""
    qa, qb = _choice_probs(Player.A, probs_a), _choice_probs(Player.B, probs_b)
    mod = np.empty((4, 4))
    for k in range(4):
        for l in range(4):
            a, b = coin_bits(l)
            mod[k, l] = math.sqrt(qa[k, a] * qb[k, b])
    return mod


def product_conditions(probs_a: ClassicalStrategy, probs_b: ClassicalStrategy) -> List[Tuple[str, float]]:
    """The six products that must vanish for a real simultaneous operator."""
    rA, sA, tA, pA = probs_a.probs
    rB, sB, tB, pB = probs_b.probs
    return [
        ("(p_R^A - ~p_S^A)(p_R^B - ~p_T^B)", (rA - (1 - sA)) * (rB - (1 - tB))),
        ("(p_R^A - ~p_T^A)(p_R^B - ~p_S^B)", (rA - (1 - tA)) * (rB - (1 - sB))),
        ("(p_R^A - ~p_P^A)(p_R^B - ~p_P^B)", (rA - (1 - pA)) * (rB - (1 - pB))),
        ("(p_S^A - ~p_T^A)(p_S^B - ~p_T^B)", (sA - (1 - tA)) * (sB - (1 - tB))),
        ("(p_S^A - ~p_P^A)(p_T^B - ~p_P^B)", (sA - (1 - pA)) * (tB - (1 - pB))),
        ("(p_T^A - ~p_P^A)(p_S^B - ~p_P^B)", (tA - (1 - pA)) * (sB - (1 - pB))),
    ]


def failed_product_conditions(probs_a, probs_b, tol: float = 1e-9) -> List[str]:
    return [f"{label} = 0 (got {v:.6g})" for label, v in product_conditions(probs_a, probs_b) if abs(v) > tol]


def acts_locally(op, player: Player, tol: float = 1e-9) -> bool:
    """True iff the player's new qubit state depends only on their own old bit
    (through one fixed one-qubit map), whatever the opponent does.

    ``op`` may be a :class:`CoinOperator` or a raw 4x4 matrix.
    """
    m = np.asarray(getattr(op, "m", op))
    for bit in (0, 1):
        rows = []
        for c in range(4):
            if own_bit(player, c) != bit:
                continue
            for opp_new in (0, 1):
                vec = []
                for own_new in (0, 1):
                    if player is Player.A:
                        vec.append(m[coin_index(own_new, opp_new), c])
                    else:
                        vec.append(m[coin_index(opp_new, own_new), c])
                rows.append(vec)
        s = np.linalg.svd(np.array(rows), compute_uv=False)
        if s[1] > tol:
            return False
    return True


def _locality_violations(m: np.ndarray, probs_a, probs_b) -> List[str]:
    failed = []
    for player, probs in ((Player.A, probs_a), (Player.B, probs_b)):
        if probs.is_unconditional and 0.0 < probs.p_R < 1.0:
            if not acts_locally(m, player):
                failed.append(f"unconditional strategy of player {player.value} must act on its own qubit only")
    return failed


def simultaneous_from_classical(
    probs_a: ClassicalStrategy,
    probs_b: ClassicalStrategy,
    phases: Optional[PhaseMatrix] = None,
    local_unconditional: bool = True,
) -> CoinOperator:
    """Joint operator for a simultaneous game between two classical strategies.

    With ``local_unconditional`` (default) an unconditional mixed strategy such
    as Random must be realized by a one-qubit operation on the player's own
    coin; this is what rules out TFT against Random.
    """
    if phases is None:
        phases = PhaseMatrix()
    display = np.exp(1j * phases.phi) * simultaneous_moduli(probs_a, probs_b)
    m = display.T.copy()
    failed = []
    if not is_unitary(m, 1e-9):
        failed.append("m^dagger m = I")
        if phases.is_real:
            failed += failed_product_conditions(probs_a, probs_b)
    if local_unconditional:
        failed += _locality_violations(m, probs_a, probs_b)
    if failed:
        raise NotUnitary(
            failed, f"{probs_a} vs {probs_b} cannot be played simultaneously: " + "; ".join(failed)
        )
    return CoinOperator(m, f"sim[{probs_a}|{probs_b}]")


def _sign_options(player: Player, probs: ClassicalStrategy, local_only: bool) -> np.ndarray:
    """All real sign patterns ``s[k, bit]`` for a player's amplitude vectors."""
    if not local_only:
        opts = list(itertools.product((1.0, -1.0), repeat=8))
        return np.array(opts).reshape(-1, 4, 2)
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=4):
        s = np.empty((4, 2))
        for k in range(4):
            b = own_bit(player, k)
            s[k] = signs[2 * b : 2 * b + 2]
        out.append(s)
    return np.array(out)


def find_real_phases(
    probs_a: ClassicalStrategy,
    probs_b: ClassicalStrategy,
    local_unconditional: bool = True,
) -> Optional[PhaseMatrix]:
    """First real (0/pi) phase matrix, in a fixed enumeration order starting from
    all-zero phases, making the simultaneous operator unitary; ``None`` if none.

    Phases are products of one sign per player and choice, so every column is
    a tensor product and the Gram matrix factorizes.
    """
    qa, qb = _choice_probs(Player.A, probs_a), _choice_probs(Player.B, probs_b)
    opts_a = _sign_options(Player.A, probs_a, local_unconditional and probs_a.is_unconditional)
    opts_b = _sign_options(Player.B, probs_b, local_unconditional and probs_b.is_unconditional)
    va = opts_a * np.sqrt(qa)  # (nA, 4, 2)
    vb = opts_b * np.sqrt(qb)
    ga = np.einsum("nki,nli->nkl", va, va)
    gb = np.einsum("nki,nli->nkl", vb, vb)
    off = ~np.eye(4, dtype=bool)
    err = np.abs(ga[:, None, :, :] * gb[None, :, :, :])[..., off].max(axis=-1)
    hits = np.argwhere(err < 1e-9)
    if len(hits) == 0:
        return None
    ia, ib = hits[0]
    phi = np.zeros((4, 4))
    for k in range(4):
        for l in range(4):
            a, b = coin_bits(l)
            if opts_a[ia, k, a] * opts_b[ib, k, b] < 0:
                phi[k, l] = math.pi
    return PhaseMatrix(phi)


def pavlov_tft(lam1: float = 0.0, lam2: float = 0.0, lam3: float = 0.0) -> CoinOperator:
    """Alice plays Pavlov while Bob simultaneously plays TFT."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    m[2, 1] = np.exp(1j * lam1)
    m[3, 2] = np.exp(1j * lam2)
    m[1, 3] = np.exp(1j * lam3)
    return CoinOperator(m, "pavlov-tft")


@dataclass(frozen=True)
class Compatibility:
    sequential_ok: bool
    simultaneous_ok: bool
    reason: str
    phases: Optional[PhaseMatrix] = field(default=None, compare=False)

    @property
    def table_entry(self) -> str:
        marks = [m for m, ok in (("1", self.sequential_ok), ("2", self.simultaneous_ok)) if ok]
        return ",".join(marks) if marks else "not unitary"


def compatibility(
    strat_a: ClassicalStrategy, strat_b: ClassicalStrategy, local_unconditional: bool = True
) -> Compatibility:
    """Whether two classical strategies can be confronted sequentially and/or
    simultaneously (real phases only for the latter)."""
    reasons = []
    seq_fail = [f"A: {f}" for f in strat_a.sequential_violations()]
    seq_fail += [f"B: {f}" for f in strat_b.sequential_violations()]
    sequential_ok = not seq_fail
    if seq_fail:
        reasons.append("sequential: " + "; ".join(seq_fail))
    phases = find_real_phases(strat_a, strat_b, local_unconditional)
    simultaneous_ok = False
    if phases is not None:
        try:
            simultaneous_from_classical(strat_a, strat_b, phases, local_unconditional)
            simultaneous_ok = True
        except NotUnitary as exc:  # pragma: no cover - search and check disagree
            reasons.append(f"simultaneous: {exc}")
    else:
        why = failed_product_conditions(strat_a, strat_b) or ["no real phase assignment is unitary"]
        if local_unconditional and (strat_a.is_unconditional or strat_b.is_unconditional):
            why.append("unconditional strategies restricted to local operations")
        reasons.append("simultaneous: " + "; ".join(why))
    return Compatibility(sequential_ok, simultaneous_ok, " | ".join(reasons) or "ok", phases)
