"""Strategy-space sweeps over the xi-family, grid equilibria and entropy growth."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .classical import Order
from .qstate import CoinState, PayoffTable, PD_PAYOFFS
from .strategies import Player, compose_sequential, interpolated
from .walk import GameConfig, Mode, Record, run_game

TIE_TOL = 1e-9
WORKERS_ENV = "QWGAME_WORKERS"

# The reference equilibrium reported for the Bell initial coin.
REFERENCE_NASH = (0.0, math.pi / 20)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def xi_grid(n: int = 21) -> Tuple[float, ...]:
    """``n`` evenly spaced values on [0, pi/4]; n = 21 contains pi/20 exactly."""
    if n == 1:
        return (0.0,)
    return tuple(float(v) for v in np.linspace(0.0, math.pi / 4, n))


@dataclass(frozen=True)
class SweepGrid:
    xi_a: Tuple[float, ...]
    xi_b: Tuple[float, ...]
    initial_coin: CoinState
    steps: int = 50
    payoffs: PayoffTable = PD_PAYOFFS
    order: Order = Order.A_FIRST

    def __post_init__(self):
        object.__setattr__(self, "xi_a", tuple(float(v) for v in self.xi_a))
        object.__setattr__(self, "xi_b", tuple(float(v) for v in self.xi_b))
        object.__setattr__(self, "order", Order(self.order))
        if self.order is Order.SIMULTANEOUS:
            raise ValueError("xi sweeps are sequential games (A_first or B_first)")
        for name in ("xi_a", "xi_b"):
            xs = getattr(self, name)
            if not xs:
                raise ValueError(f"{name} is empty")
            if any(x < -1e-12 or x > math.pi / 4 + 1e-12 for x in xs):
                raise ValueError(f"{name} values must lie in [0, pi/4]")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError(f"{name} must be strictly increasing")

    def coin_op(self, xi_a: float, xi_b: float):
        ua, ub = interpolated(Player.A, xi_a), interpolated(Player.B, xi_b)
        if self.order is Order.A_FIRST:
            return compose_sequential(ua, ub)
        return compose_sequential(ub, ua)

    def config(self, xi_a: float, xi_b: float) -> GameConfig:
        return GameConfig(self.payoffs, self.coin_op(xi_a, xi_b), self.initial_coin, self.steps, Mode.UNITARY)


@dataclass(frozen=True, eq=False)
class PayoffSurface:
    """``payoff_a[i, j]`` is Alice's mean payoff at ``(xi_a[i], xi_b[j])``."""

    xi_a: Tuple[float, ...]
    xi_b: Tuple[float, ...]
    payoff_a: np.ndarray
    payoff_b: np.ndarray
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        pa = np.asarray(self.payoff_a, dtype=float)
        pb = np.asarray(self.payoff_b, dtype=float)
        shape = (len(self.xi_a), len(self.xi_b))
        if pa.shape != shape or pb.shape != shape:
            raise ValueError(f"surface arrays must have shape {shape}")
        object.__setattr__(self, "payoff_a", pa)
        object.__setattr__(self, "payoff_b", pb)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.payoff_a.shape

    def rows(self):
        """(xi_a, xi_b, payoff_a, payoff_b) in row-major grid order."""
        for i, xa in enumerate(self.xi_a):
            for j, xb in enumerate(self.xi_b):
                yield xa, xb, float(self.payoff_a[i, j]), float(self.payoff_b[i, j])


def sweep_point(grid: SweepGrid, xi_a: float, xi_b: float) -> Tuple[float, float]:
    return run_game(grid.config(xi_a, xi_b)).final_payoff_means


def _sweep_row(args):
    grid, i = args
    return i, [sweep_point(grid, grid.xi_a[i], xb) for xb in grid.xi_b]


def sweep(grid: SweepGrid, workers: Optional[int] = None) -> PayoffSurface:
    """Play every grid point. Rows are farmed out to worker processes when
    ``workers > 1``; each point is computed identically either way."""
    if workers is None:
        workers = default_workers()
    pa = np.zeros((len(grid.xi_a), len(grid.xi_b)))
    pb = np.zeros_like(pa)
    jobs = [(grid, i) for i in range(len(grid.xi_a))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_row, jobs))
    else:
        results = [_sweep_row(job) for job in jobs]
    for i, row in results:
        for j, (a, b) in enumerate(row):
            pa[i, j], pb[i, j] = a, b
    meta = {
        "order": grid.order.value,
        "steps": grid.steps,
        "payoffs": grid.payoffs.as_dict(),
        "initial_coin": [[float(z.real), float(z.imag)] for z in grid.initial_coin.amps],
    }
    return PayoffSurface(grid.xi_a, grid.xi_b, pa, pb, meta)


@dataclass(frozen=True)
class BestResponses:
    # alice[j]: indices i maximizing payoff_a[:, j]; bob[i]: indices j maximizing payoff_b[i, :]
    alice: Tuple[Tuple[int, ...], ...]
    bob: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class EquilibriumReport:
    nash_points: Tuple[Tuple[int, int], ...]
    pareto_points: Tuple[Tuple[int, int], ...]
    best_responses: BestResponses

    def nash_coordinates(self, surface: PayoffSurface) -> List[Tuple[float, float]]:
        return [(surface.xi_a[i], surface.xi_b[j]) for i, j in self.nash_points]


def _argmax_set(values: np.ndarray, tol: float) -> Tuple[int, ...]:
    top = np.max(values)
    return tuple(int(k) for k in np.nonzero(values >= top - tol)[0])


def best_response_curves(surface: PayoffSurface, tol: float = TIE_TOL) -> BestResponses:
    na, nb = surface.shape
    alice = tuple(_argmax_set(surface.payoff_a[:, j], tol) for j in range(nb))
    bob = tuple(_argmax_set(surface.payoff_b[i, :], tol) for i in range(na))
    return BestResponses(alice, bob)


def pareto_points(surface: PayoffSurface, tol: float = TIE_TOL) -> Tuple[Tuple[int, int], ...]:
    a = surface.payoff_a.ravel()
    b = surface.payoff_b.ravel()
    ge = (a[None, :] >= a[:, None] - tol) & (b[None, :] >= b[:, None] - tol)
    gt = (a[None, :] > a[:, None] + tol) | (b[None, :] > b[:, None] + tol)
    dominated = np.any(ge & gt, axis=1)
    nb = surface.shape[1]
    return tuple((int(k // nb), int(k % nb)) for k in np.nonzero(~dominated)[0])


def find_nash(surface: PayoffSurface, tol: float = TIE_TOL) -> EquilibriumReport:
    """Grid Nash points (mutual best responses, ties within ``tol``) and the Pareto set."""
    br = best_response_curves(surface, tol)
    na, nb = surface.shape
    nash = tuple((i, j) for i in range(na) for j in range(nb) if i in br.alice[j] and j in br.bob[i])
    return EquilibriumReport(nash, pareto_points(surface, tol), br)


def distance_to(surface: PayoffSurface, report: EquilibriumReport, point=REFERENCE_NASH) -> Optional[float]:
    """Smallest Euclidean distance in (xi_a, xi_b) from a Nash point to ``point``."""
    coords = report.nash_coordinates(surface)
    if not coords:
        return None
    return min(math.hypot(x - point[0], y - point[1]) for x, y in coords)


@dataclass(frozen=True)
class Fit:
    intercept: float
    slope: float
    residual: float  # sum of squared residuals over the fit window


@dataclass(frozen=True)
class EntropyGrowth:
    series: List[Tuple[int, float]]
    fit: Fit
    linear_fit: Fit


def _lstsq(x: np.ndarray, y: np.ndarray) -> Fit:
    design = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    res = float(np.sum((design @ coef - y) ** 2))
    return Fit(float(coef[0]), float(coef[1]), res)


def fit_window(steps: int) -> Tuple[int, int]:
    return max(1, steps // 2), steps


def entropy_growth(config: GameConfig, window: Optional[Tuple[int, int]] = None) -> EntropyGrowth:
    """Entropy after every step, with least-squares fits of S against log n
    and against n over ``window`` (default: the second half of the game)."""
    if config.mode is not Mode.UNITARY:
        raise ValueError("entropy growth needs unitary mode")
    cfg = GameConfig(config.payoffs, config.coin_op, config.initial_coin, config.steps, Mode.UNITARY,
                     Record(entropy_series=True), config.metadata)
    ent = run_game(cfg).entropy_series or []
    series = [(n + 1, s) for n, s in enumerate(ent)]
    lo, hi = window or fit_window(config.steps)
    pts = [(n, s) for n, s in series if lo <= n <= hi]
    if len(pts) < 2:
        zero = Fit(0.0, 0.0, 0.0)
        return EntropyGrowth(series, zero, zero)
    n = np.array([p[0] for p in pts], dtype=float)
    s = np.array([p[1] for p in pts])
    return EntropyGrowth(series, _lstsq(np.log(n), s), _lstsq(n, s))
