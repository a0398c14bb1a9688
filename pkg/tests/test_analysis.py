import json
import math
import os

import numpy as np
import pytest

from qwgame.analysis import (
    REFERENCE_NASH,
    PayoffSurface,
    SweepGrid,
    best_response_curves,
    default_workers,
    distance_to,
    entropy_growth,
    find_nash,
    fit_window,
    pareto_points,
    sweep,
    sweep_point,
    xi_grid,
)
from qwgame.classical import Order
from qwgame.qstate import BELL_PHI_PLUS, BELL_PSI_PLUS, IDENTITY, PD_PAYOFFS, UNBIASED_PRODUCT, CoinState
from qwgame.walk import GameConfig, Mode

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
COINS = {"product": UNBIASED_PRODUCT, "bell00": BELL_PHI_PLUS, "bell01": BELL_PSI_PLUS}


def load_surface(name):
    with open(os.path.join(FIXTURES, f"surface_{name}.json")) as fh:
        return json.load(fh)


def surface(pa, pb):
    pa, pb = np.asarray(pa, float), np.asarray(pb, float)
    return PayoffSurface(tuple(range(pa.shape[0])), tuple(range(pa.shape[1])), pa, pb)


class TestGrid:
    def test_xi_grid_contains_reference_point(self):
        g = xi_grid(21)
        assert len(g) == 21 and g[0] == 0.0 and g[-1] == pytest.approx(math.pi / 4)
        assert g[4] == pytest.approx(math.pi / 20, abs=1e-15)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            SweepGrid((0.0, 1.0), (0.0,), BELL_PHI_PLUS)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SweepGrid((0.2, 0.1), (0.0,), BELL_PHI_PLUS)

    def test_rejects_simultaneous(self):
        with pytest.raises(ValueError):
            SweepGrid((0.0,), (0.0,), BELL_PHI_PLUS, order=Order.SIMULTANEOUS)

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv("QWGAME_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.delenv("QWGAME_WORKERS")
        assert default_workers() >= 1


class TestEquilibria:
    # rows: Alice C/D, columns: Bob C/D, one-shot prisoner's dilemma
    PD_A = [[3, 0], [5, 1]]
    PD_B = [[3, 5], [0, 1]]

    def test_pd_nash(self):
        report = find_nash(surface(self.PD_A, self.PD_B))
        assert report.nash_points == ((1, 1),)

    def test_pd_pareto(self):
        assert set(pareto_points(surface(self.PD_A, self.PD_B))) == {(0, 0), (0, 1), (1, 0)}

    def test_pd_best_responses(self):
        br = best_response_curves(surface(self.PD_A, self.PD_B))
        assert br.alice == ((1,), (1,)) and br.bob == ((1,), (1,))

    def test_constant_surface(self):
        report = find_nash(surface(np.ones((3, 4)), np.ones((3, 4))))
        assert len(report.nash_points) == 12
        assert len(report.pareto_points) == 12

    def test_tie_tolerance(self):
        pa = [[1.0, 0.0], [1.0 + 1e-12, 0.0]]
        report = find_nash(surface(pa, [[1.0, 0.0], [1.0, 0.0]]))
        assert set(report.nash_points) == {(0, 0), (1, 0)}

    def test_no_pure_nash(self):
        # matching pennies
        report = find_nash(surface([[1, -1], [-1, 1]], [[-1, 1], [1, -1]]))
        assert report.nash_points == ()
        s = surface([[1, -1], [-1, 1]], [[-1, 1], [1, -1]])
        assert distance_to(s, report) is None

    def test_distance(self):
        s = PayoffSurface((0.0, math.pi / 20), (0.0, math.pi / 20), [[0, 0], [1, 1]], [[0, 0], [0, 1]])
        report = find_nash(s)
        assert report.nash_points == ((1, 1),)
        assert distance_to(s, report, REFERENCE_NASH) == pytest.approx(math.pi / 20)


class TestSweep:
    @pytest.mark.parametrize("name", sorted(COINS))
    def test_points_match_dense_fixtures(self, name):
        fx = load_surface(name)
        grid = SweepGrid(fx["xi"], fx["xi"], COINS[name], steps=fx["steps"])
        for i, j in [(0, 0), (0, 4), (4, 0), (7, 13), (20, 20), (20, 3)]:
            a, b = sweep_point(grid, fx["xi"][i], fx["xi"][j])
            assert a == pytest.approx(fx["payoff_a"][i][j], abs=1e-9)
            assert b == pytest.approx(fx["payoff_b"][i][j], abs=1e-9)

    def test_small_sweep_shape_and_metadata(self):
        grid = SweepGrid(xi_grid(3), xi_grid(2), BELL_PHI_PLUS, steps=5)
        s = sweep(grid, workers=1)
        assert s.shape == (3, 2)
        assert s.metadata["order"] == "A_first" and s.metadata["steps"] == 5
        rows = list(s.rows())
        assert len(rows) == 6 and rows[1][:2] == (0.0, pytest.approx(math.pi / 4))

    def test_parallel_equals_serial(self):
        grid = SweepGrid(xi_grid(4), xi_grid(3), UNBIASED_PRODUCT, steps=8)
        s1, s2 = sweep(grid, workers=1), sweep(grid, workers=2)
        np.testing.assert_array_equal(s1.payoff_a, s2.payoff_a)
        np.testing.assert_array_equal(s1.payoff_b, s2.payoff_b)

    @pytest.mark.parametrize("coin", [BELL_PHI_PLUS, UNBIASED_PRODUCT])
    def test_role_swap_symmetry(self, coin):
        a_first = SweepGrid((0.0, 0.3), (0.1, 0.7), coin, steps=12)
        b_first = SweepGrid((0.1, 0.7), (0.0, 0.3), coin, steps=12, order=Order.B_FIRST)
        for xa in a_first.xi_a:
            for xb in a_first.xi_b:
                pa, pb = sweep_point(a_first, xa, xb)
                qa, qb = sweep_point(b_first, xb, xa)
                assert pa == pytest.approx(qb, abs=1e-10) and pb == pytest.approx(qa, abs=1e-10)

    def test_random_vs_random_ties(self):
        grid = SweepGrid((math.pi / 4,), (math.pi / 4,), BELL_PSI_PLUS, steps=50)
        a, b = sweep_point(grid, math.pi / 4, math.pi / 4)
        assert abs(a) < 1e-9 and abs(b) < 1e-9


class TestEntropyGrowth:
    def test_fit_window(self):
        assert fit_window(50) == (25, 50)
        assert fit_window(1) == (1, 1)

    def test_identity_product_coin_has_no_entropy(self):
        g = entropy_growth(GameConfig(PD_PAYOFFS, IDENTITY, CoinState.basis(0), 10))
        assert [n for n, _ in g.series] == list(range(1, 11))
        assert max(s for _, s in g.series) == pytest.approx(0.0, abs=1e-12)
        assert g.fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_too_short_for_fit(self):
        g = entropy_growth(GameConfig(PD_PAYOFFS, IDENTITY, BELL_PHI_PLUS, 1))
        assert g.fit.residual == 0.0 and len(g.series) == 1

    def test_constant_entropy_fits(self):
        # the identity never changes the Bell coin, so S = 1 bit at every step
        g = entropy_growth(GameConfig(PD_PAYOFFS, IDENTITY, BELL_PHI_PLUS, 6), window=(2, 6))
        assert g.fit.intercept == pytest.approx(1.0, abs=1e-12)
        assert g.linear_fit.slope == pytest.approx(0.0, abs=1e-12)

    def test_measured_rejected(self):
        with pytest.raises(ValueError):
            entropy_growth(GameConfig(PD_PAYOFFS, IDENTITY, BELL_PHI_PLUS, 3, Mode.MEASURED))
