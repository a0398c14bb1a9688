import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference as ref
from qwgame.qstate import (
    BELL_PHI_PLUS,
    IDENTITY,
    PD_PAYOFFS,
    UNBIASED_PRODUCT,
    CoinOperator,
    CoinState,
    InvalidState,
    JointState,
    NotUnitary,
    PayoffTable,
    apply_coin,
    apply_shift,
    entanglement_entropy,
    new_joint_state,
    payoff_distribution,
    payoff_means,
    reduced_coin_density,
    step,
)
from qwgame.strategies import Player, compose_sequential, local, pavlov, random_hadamard

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
H2 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
R2 = 1 / np.sqrt(2)


def oracle_values():
    with open(os.path.join(FIXTURES, "oracle_values.json")) as fh:
        return json.load(fh)


def basis_state(c, xa=0, xb=0):
    amps = np.zeros((1, 4), dtype=complex)
    amps[0, c] = 1.0
    return JointState([[xa, xb]], amps)


def random_unitary(rng, n=4):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_coin(rng):
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return CoinState(v / np.linalg.norm(v))


class TestConstruction:
    def test_basis_embedding(self):
        s = new_joint_state(CoinState.basis(0))
        assert s.positions.tolist() == [[0, 0]]
        np.testing.assert_array_equal(s.amps[0], [1, 0, 0, 0])

    def test_bell_embedding(self):
        s = new_joint_state(BELL_PHI_PLUS)
        np.testing.assert_allclose(s.amps[0], [R2, 0, 0, R2], atol=1e-15)
        assert abs(s.norm2() - 1) < 1e-15

    def test_unnormalized_coin_rejected(self):
        with pytest.raises(InvalidState):
            new_joint_state([1, 1, 0, 0])

    def test_states_are_immutable(self):
        s = new_joint_state(BELL_PHI_PLUS)
        with pytest.raises(ValueError):
            s.amps[0, 0] = 0

    def test_non_unitary_operator_rejected(self):
        with pytest.raises(NotUnitary):
            CoinOperator(np.ones((4, 4)) / 2)


class TestPayoffTable:
    def test_game_classes(self):
        assert PD_PAYOFFS.game_class == "prisoners_dilemma"
        assert PayoffTable(R=1, S=-1, T=2, P=-2).game_class == "hawk_dove"
        assert PayoffTable(R=2, S=-2, T=1, P=-1).game_class == "stag_hunt"
        assert PayoffTable(0, 0, 0, 0).game_class == "other"

    def test_non_integer_rejected(self):
        with pytest.raises(ValueError):
            PayoffTable(1.5, 0, 0, 0)

    def test_pd_shift_not_separable(self):
        # R=S and T=P are needed for each walker to move on its own coin only
        assert not PD_PAYOFFS.shift_is_separable
        assert PayoffTable(1, 1, -1, -1).shift_is_separable


class TestCoinAndShift:
    def test_identity_coin(self):
        s = new_joint_state(UNBIASED_PRODUCT)
        np.testing.assert_array_equal(apply_coin(s, IDENTITY).amps, s.amps)

    def test_hadamard_on_alice(self):
        s = apply_coin(basis_state(0), local(alice=H2))
        np.testing.assert_allclose(s.amps[0], [R2, 0, R2, 0], atol=1e-15)

    def test_pavlov_a_flips_alice_when_bob_defects(self):
        s = apply_coin(basis_state(1), pavlov(Player.A))
        np.testing.assert_array_equal(s.amps[0], [0, 0, 0, 1])

    @pytest.mark.parametrize(
        "coin, start, end",
        [(0, (0, 0), (1, 1)), (1, (0, 0), (-2, 2)), (2, (0, 0), (2, -2)), (3, (3, -1), (2, -2))],
    )
    def test_shift_table(self, coin, start, end):
        s = apply_shift(basis_state(coin, *start), PD_PAYOFFS)
        assert s.positions.tolist() == [list(end)]
        assert s.amps[0, coin] == 1

    def test_shift_preserves_moduli(self):
        rng = np.random.default_rng(3)
        s = new_joint_state(random_coin(rng))
        for _ in range(3):
            s = step(s, CoinOperator(random_unitary(rng)), PD_PAYOFFS)
        shifted = apply_shift(s, PD_PAYOFFS)
        before = np.sort(np.abs(s.amps[s.amps != 0]))
        after = np.sort(np.abs(shifted.amps[shifted.amps != 0]))
        np.testing.assert_array_equal(before, after)

    def test_step_identity_is_translation(self):
        s = step(basis_state(0), IDENTITY, PD_PAYOFFS)
        assert s.positions.tolist() == [[1, 1]]
        s = basis_state(0)
        for _ in range(7):
            s = step(s, IDENTITY, PD_PAYOFFS)
        assert s.positions.tolist() == [[7, 7]]

    def test_step_pavlov_composes_coin_then_shift(self):
        s = step(basis_state(1), pavlov(Player.A), PD_PAYOFFS)
        assert s.positions.tolist() == [[-1, -1]]
        np.testing.assert_array_equal(s.amps[0], [0, 0, 0, 1])

    def test_support_bounds(self):
        rng = np.random.default_rng(5)
        op = CoinOperator(random_unitary(rng))
        s = new_joint_state(BELL_PHI_PLUS)
        for n in range(1, 9):
            s = step(s, op, PD_PAYOFFS)
            assert s.positions.min() >= n * -2 and s.positions.max() <= n * 2


class TestObservables:
    def test_means_at_origin(self):
        assert payoff_means(new_joint_state(UNBIASED_PRODUCT)) == (0.0, 0.0)

    def test_symmetric_superposition_means(self):
        amps = np.array([[0, 0, 0, R2], [R2, 0, 0, 0]])
        s = JointState([[-1, -1], [1, 1]], amps)
        assert payoff_means(s) == pytest.approx((0.0, 0.0), abs=1e-15)

    def test_means_against_dense_oracle(self):
        op = compose_sequential(pavlov(Player.A), random_hadamard(Player.B))
        s = new_joint_state(BELL_PHI_PLUS)
        for _ in range(50):
            s = step(s, op, PD_PAYOFFS)
        expected = oracle_values()["pavlovA_randomB_bell00_means"]
        assert payoff_means(s) == pytest.approx(expected, abs=1e-10)

    def test_distribution_initial(self):
        assert payoff_distribution(new_joint_state(BELL_PHI_PLUS)) == [((0, 0), pytest.approx(1.0))]

    def test_distribution_one_step_hadamard_alice(self):
        s = step(basis_state(0), local(alice=H2), PD_PAYOFFS)
        dist = dict(payoff_distribution(s))
        assert set(dist) == {(1, 1), (2, -2)}
        assert dist[(1, 1)] == pytest.approx(0.5) and dist[(2, -2)] == pytest.approx(0.5)

    def test_distribution_one_step_hadamard_bob(self):
        s = step(basis_state(0), local(bob=H2), PD_PAYOFFS)
        dist = dict(payoff_distribution(s))
        assert set(dist) == {(1, 1), (-2, 2)}
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-10)

    def test_coin_density_of_product(self):
        s = new_joint_state(UNBIASED_PRODUCT)
        np.testing.assert_allclose(reduced_coin_density(s), UNBIASED_PRODUCT.density(), atol=1e-15)

    def test_coin_density_after_coin_op(self):
        op = pavlov(Player.A, 0.3, 1.1, -0.4)
        s = apply_coin(new_joint_state(BELL_PHI_PLUS), op)
        expected = op.m @ BELL_PHI_PLUS.density() @ op.m.conj().T
        np.testing.assert_allclose(reduced_coin_density(s), expected, atol=1e-15)

    def test_coin_density_two_steps_against_oracle(self):
        op = compose_sequential(pavlov(Player.A), random_hadamard(Player.B))
        s = new_joint_state(CoinState.basis(0))
        for _ in range(2):
            s = step(s, op, PD_PAYOFFS)
        rho = reduced_coin_density(s)
        expected = np.array([[complex(*z) for z in row] for row in oracle_values()["pavlovA_randomB_00_rho2"]])
        np.testing.assert_allclose(rho, expected, atol=1e-12)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() >= -1e-10


class TestEntropy:
    def test_product_coin_is_unentangled(self):
        assert entanglement_entropy(new_joint_state(UNBIASED_PRODUCT)) == pytest.approx(0.0, abs=1e-12)

    def test_bell_coin_one_bit(self):
        assert entanglement_entropy(new_joint_state(BELL_PHI_PLUS)) == pytest.approx(1.0, abs=1e-12)

    def test_series_against_dense_oracle(self):
        op = compose_sequential(pavlov(Player.A), random_hadamard(Player.B))
        s = new_joint_state(CoinState.basis(0))
        series = []
        for _ in range(50):
            s = step(s, op, PD_PAYOFFS)
            series.append(entanglement_entropy(s))
        np.testing.assert_allclose(series, oracle_values()["pavlovA_randomB_00_entropy"], atol=1e-9)

    def test_invariant_under_local_unitary_on_alice(self):
        rng = np.random.default_rng(11)
        s = new_joint_state(random_coin(rng))
        op = CoinOperator(random_unitary(rng))
        for _ in range(6):
            s = step(s, op, PD_PAYOFFS)
        theta = 0.7
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        rotated = apply_coin(s, local(alice=rot))
        assert entanglement_entropy(rotated) == pytest.approx(entanglement_entropy(s), abs=1e-10)

    def test_separable_shift_keeps_product_states_unentangled(self):
        payoffs = PayoffTable(1, 1, -1, -1)
        rng = np.random.default_rng(2)
        op = local(alice=random_unitary(rng, 2), bob=random_unitary(rng, 2))
        s = new_joint_state(UNBIASED_PRODUCT)
        for _ in range(20):
            s = step(s, op, payoffs)
            assert entanglement_entropy(s) == pytest.approx(0.0, abs=1e-9)

    def test_pd_shift_entangles_product_states(self):
        op = local(alice=H2, bob=H2)
        s = new_joint_state(UNBIASED_PRODUCT)
        for _ in range(3):
            s = step(s, op, PD_PAYOFFS)
        assert entanglement_entropy(s) > 0.1


def test_norm_conserved_over_1000_steps():
    rng = np.random.default_rng(0)
    op = CoinOperator(random_unitary(rng))
    s = new_joint_state(random_coin(rng))
    payoffs = PayoffTable(1, 0, 0, -1)
    for _ in range(1000):
        s = step(s, op, payoffs)
    assert abs(s.norm2() - 1) < 1e-10


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    steps=st.integers(1, 4),
    payoffs=st.tuples(*[st.integers(-2, 2)] * 4),
)
def test_matches_assembled_dense_unitary(seed, steps, payoffs):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng)
    coin = random_coin(rng)
    s = new_joint_state(coin)
    table = PayoffTable(*payoffs)
    for _ in range(steps):
        s = step(s, CoinOperator(u), table)
    half = 2 * steps
    dense = ref.grid_to_dict(ref.matrix_evolution(u, payoffs, coin.amps, steps, half), half, tol=1e-30)
    sparse = s.as_dict()
    assert set(dense) == set(sparse)
    for k, v in dense.items():
        np.testing.assert_allclose(sparse[k], v, atol=1e-12)
