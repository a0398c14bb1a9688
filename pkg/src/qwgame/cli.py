"""Command-line front end.

Subcommands: ``run``, ``sweep``, ``validate``, ``entropy``, ``classical``.
Settings come from an optional JSON config file (``--config``) overridden by
flags. Exit status: 0 on success, 1 for an invalid spec, 2 when a strategy
pair has no unitary embedding.

Strategy grammar (``--alice`` / ``--bob``)::

    pavlov[:nu1,nu2,nu3]     random     tft     always-c     always-d
    interpolated:XI          (alias xi:XI; XI may be e.g. pi/20)
    classical:pR,pS,pT,pP[;phi=a,b,c,d][;theta=a,b,c,d]
    [pR,pS,pT,pP]

Initial coin (``--coin``): a preset (00, 01, 10, 11, bell00, bell01, product),
four ``re,im`` pairs separated by ``;``, or for measured mode a distribution
``dist:p00,p01,p10,p11`` / ``uniform``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    SweepGrid,
    default_workers,
    entropy_growth,
    fit_window,
    sweep,
    xi_grid,
)
from .classical import JointCoinDistribution, Order, classical_payoff_trajectory
from .qstate import (
    COIN_PRESETS,
    PAYOFF_PRESETS,
    CoinState,
    InvalidState,
    NotUnitary,
    PayoffTable,
)
from .strategies import (
    NAMED_STRATEGIES,
    PAVLOV,
    RANDOM,
    ClassicalStrategy,
    Player,
    SequentialPhases,
    compatibility,
    compose_sequential,
    find_real_phases,
    interpolated,
    interpolated_probs,
    pavlov,
    product_conditions,
    random_hadamard,
    sequential_from_classical,
    simultaneous_from_classical,
)
from .walk import GameConfig, GameResult, Mode, Record, simulate

CONVENTIONS = {
    "basis": "index = 2*alice_bit + bob_bit; bit 0 = C",
    "xi_family": "to_C=(cos,sin,sin,cos), to_D=(sin,cos,-cos,-sin) after (R,S,T,P)",
    "sequential_phases_default": "phi=0, theta=(0,0,pi,pi)",
    "entropy": "log2, cut (x_A, coin_A) | (x_B, coin_B)",
    "measurement": "after coin operation, before shift",
    "unconditional_strategies": "local one-qubit operation",
}

RESULT_SCHEMA = {
    "type": "object",
    "required": ["payoff_means", "mode", "steps", "metadata"],
    "properties": {
        "payoff_means": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "mode": {"enum": ["unitary", "measured"]},
        "steps": {"type": "integer", "minimum": 0},
        "trajectory": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "entropy_series": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "final_distribution": {
            "type": "array",
            "items": {"type": "array", "minItems": 3, "maxItems": 3},
        },
        "distributions": {"type": "array"},
        "metadata": {
            "type": "object",
            "required": ["version", "conventions"],
        },
    },
}


class SpecError(ValueError):
    """Invalid textual configuration; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi)?\s*(?:/\s*(\d+(?:\.\d+)?))?\s*$")


def parse_angle(text: str, key: str = "angle") -> float:
    """Floats or simple multiples of pi: ``0.3``, ``pi/20``, ``-3pi/4``, ``0.5*pi``."""
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text)
    if not m or not m.group(3):
        raise SpecError(key, f"cannot parse angle {text!r}")
    sign, coef, _, den = m.groups()
    value = (float(coef) if coef else 1.0) * math.pi
    if den:
        value /= float(den)
    return -value if sign == "-" else value


def _floats(text: str, key: str, n: Optional[int] = None) -> List[float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip().strip("[]")) if p]
    try:
        vals = [parse_angle(p, key) for p in parts]
    except SpecError:
        raise SpecError(key, f"expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise SpecError(key, f"expected {n} numbers, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class StrategySpec:
    kind: str
    probs: ClassicalStrategy
    nu: tuple = (0.0, 0.0, 0.0)
    xi: float = 0.0
    phases: SequentialPhases = SequentialPhases()
    text: str = ""

    def sequential(self, player: Player):
        if self.kind == "pavlov":
            return pavlov(player, *self.nu)
        if self.kind == "random":
            return random_hadamard(player)
        if self.kind == "interpolated":
            return interpolated(player, self.xi)
        return sequential_from_classical(player, self.probs, self.phases)


def parse_strategy(text: str, key: str = "strategy") -> StrategySpec:
    raw = str(text).strip()
    low = raw.lower()
    name, _, arg = low.partition(":")
    try:
        if name == "pavlov":
            nu = tuple(_floats(arg, key, 3)) if arg else (0.0, 0.0, 0.0)
            return StrategySpec("pavlov", PAVLOV, nu=nu, text=raw)
        if name == "random" and not arg:
            return StrategySpec("random", RANDOM, text=raw)
        if name in NAMED_STRATEGIES and not arg:
            return StrategySpec("classical", NAMED_STRATEGIES[name], text=raw)
        if name in ("interpolated", "xi"):
            xi = parse_angle(arg, key)
            return StrategySpec("interpolated", interpolated_probs(xi), xi=xi, text=raw)
        if name == "classical" or low.startswith("["):
            body = arg if name == "classical" else low
            fields = body.split(";")
            probs = ClassicalStrategy(*_floats(fields[0], key, 4))
            phi, theta = SequentialPhases().phi, SequentialPhases().theta
            for extra in fields[1:]:
                k, _, v = extra.partition("=")
                if k.strip() == "phi":
                    phi = tuple(_floats(v, key, 4))
                elif k.strip() == "theta":
                    theta = tuple(_floats(v, key, 4))
                else:
                    raise SpecError(key, f"unknown strategy option {k!r}")
            return StrategySpec("classical", probs, phases=SequentialPhases(phi, theta), text=raw)
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(key, str(exc)) from None
    raise SpecError(key, f"unknown strategy {raw!r}")


def parse_payoffs(value: Any, key: str = "payoffs") -> PayoffTable:
    if isinstance(value, PayoffTable):
        return value
    try:
        if isinstance(value, dict):
            return PayoffTable(**{k: value[k] for k in ("R", "S", "T", "P")})
        text = str(value).strip().lower()
        if text in PAYOFF_PRESETS:
            return PAYOFF_PRESETS[text]
        vals = _floats(text, key, 4)
        return PayoffTable(*vals)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(key, f"invalid payoff table {value!r}: {exc}") from None


def parse_coin(value: Any, key: str = "coin"):
    """CoinState, or JointCoinDistribution for ``dist:...`` / ``uniform``."""
    try:
        if isinstance(value, (list, tuple)):
            pairs = [complex(float(re_), float(im)) for re_, im in value]
            return CoinState(np.array(pairs))
        text = str(value).strip().lower()
        if text in COIN_PRESETS:
            return COIN_PRESETS[text]
        if text == "uniform":
            return JointCoinDistribution.uniform()
        if text.startswith("dist:"):
            return JointCoinDistribution(_floats(text[5:], key, 4))
        pairs = [p for p in text.split(";") if p.strip()]
        if len(pairs) != 4:
            raise SpecError(key, "expected a preset or four re,im pairs separated by ';'")
        amps = []
        for p in pairs:
            re_, im = _floats(p, key, 2)
            amps.append(complex(re_, im))
        return CoinState(np.array(amps))
    except InvalidState as exc:
        raise SpecError(key, str(exc)) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(key, f"invalid coin {value!r}: {exc}") from None


def coin_to_json(coin) -> Any:
    if isinstance(coin, CoinState):
        return [[float(z.real), float(z.imag)] for z in coin.amps]
    return {"distribution": [float(p) for p in coin.probs]}


DEFAULTS: Dict[str, Any] = {
    "payoffs": "pd",
    "alice": "pavlov",
    "bob": "random",
    "scheme": "A_first",
    "coin": "bell00",
    "steps": 50,
    "mode": "unitary",
    "output": {"trajectory": False, "entropy": False, "distribution": False, "distributions": False},
    "sweep": {"points": 21, "xi_a": None, "xi_b": None},
    "classical": {"initial": "uniform"},
    "timestamp": False,
}


@dataclass
class RunSpec:
    payoffs: PayoffTable
    alice: StrategySpec
    bob: StrategySpec
    scheme: Order
    coin: Any
    steps: int
    mode: Mode
    record: Record
    timestamp: bool = False
    settings: Dict[str, Any] = field(default_factory=dict)

    def coin_op(self):
        if self.scheme is Order.SIMULTANEOUS:
            pa, pb = self.alice.probs, self.bob.probs
            phases = find_real_phases(pa, pb)
            if phases is None:
                # let the constructor produce the diagnostic
                return simultaneous_from_classical(pa, pb)
            return simultaneous_from_classical(pa, pb, phases)
        ua, ub = self.alice.sequential(Player.A), self.bob.sequential(Player.B)
        if self.scheme is Order.A_FIRST:
            return compose_sequential(ua, ub)
        return compose_sequential(ub, ua)

    def metadata(self) -> Dict[str, Any]:
        meta = {
            "version": __version__,
            "conventions": dict(CONVENTIONS),
            "payoffs": self.payoffs.as_dict(),
            "game_class": self.payoffs.game_class,
            "alice": self.alice.text,
            "bob": self.bob.text,
            "scheme": self.scheme.value,
            "initial_coin": coin_to_json(self.coin),
        }
        if self.timestamp:
            meta["timestamp"] = datetime.now(timezone.utc).isoformat()
        return meta

    def game_config(self) -> GameConfig:
        try:
            return GameConfig(self.payoffs, self.coin_op(), self.coin, self.steps, self.mode,
                              self.record, self.metadata())
        except NotUnitary:
            raise
        except (TypeError, ValueError) as exc:
            raise SpecError("config", str(exc)) from None


def _merge(base: Dict[str, Any], over: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """defaults < config file < flags"""
    settings = _merge(DEFAULTS, {})
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError("config", f"cannot read {args.config}: {exc}") from None
        if not isinstance(from_file, dict):
            raise SpecError("config", "top level must be an object")
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise SpecError(sorted(unknown)[0], "unknown configuration key")
        settings = _merge(settings, from_file)
    flags: Dict[str, Any] = {}
    for key in ("payoffs", "alice", "bob", "scheme", "coin", "steps", "mode"):
        v = getattr(args, key, None)
        if v is not None:
            flags[key] = v
    out_flags = {}
    for key in ("trajectory", "entropy", "distribution", "distributions"):
        if getattr(args, key, False):
            out_flags[key] = True
    if out_flags:
        flags["output"] = out_flags
    sweep_flags = {}
    if getattr(args, "points", None) is not None:
        sweep_flags["points"] = args.points
    for key in ("xi_a", "xi_b"):
        if getattr(args, key, None) is not None:
            sweep_flags[key] = getattr(args, key)
    if sweep_flags:
        flags["sweep"] = sweep_flags
    if getattr(args, "initial", None) is not None:
        flags["classical"] = {"initial": args.initial}
    if getattr(args, "timestamp", False):
        flags["timestamp"] = True
    return _merge(settings, flags)


def resolve(settings: Dict[str, Any]) -> RunSpec:
    try:
        scheme = Order(settings["scheme"])
    except ValueError:
        raise SpecError("scheme", f"expected A_first, B_first or simultaneous, got {settings['scheme']!r}") from None
    try:
        mode = Mode(settings["mode"])
    except ValueError:
        raise SpecError("mode", f"expected unitary or measured, got {settings['mode']!r}") from None
    steps = settings["steps"]
    try:
        steps_int = int(steps)
    except (TypeError, ValueError):
        raise SpecError("steps", f"not an integer: {steps!r}") from None
    if steps_int != float(steps) or steps_int < 0:
        raise SpecError("steps", f"must be a non-negative integer, got {steps!r}")
    out = settings.get("output", {})
    record = Record(
        trajectory=bool(out.get("trajectory")),
        entropy_series=bool(out.get("entropy")),
        final_distribution=bool(out.get("distribution")),
        distributions=bool(out.get("distributions")),
    )
    coin = parse_coin(settings["coin"])
    if mode is Mode.UNITARY and not isinstance(coin, CoinState):
        raise SpecError("coin", "unitary mode needs a pure coin state, not a distribution")
    if mode is Mode.MEASURED and record.entropy_series:
        raise SpecError("output.entropy", "entropy series is only defined in unitary mode")
    return RunSpec(
        payoffs=parse_payoffs(settings["payoffs"]),
        alice=parse_strategy(settings["alice"], "alice"),
        bob=parse_strategy(settings["bob"], "bob"),
        scheme=scheme,
        coin=coin,
        steps=steps_int,
        mode=mode,
        record=record,
        timestamp=bool(settings.get("timestamp")),
        settings=settings,
    )


def validate_result(d: Dict[str, Any]) -> GameResult:
    """Check a result dict against the schema and rebuild the GameResult."""
    jsonschema.validate(d, RESULT_SCHEMA)
    return GameResult.from_dict(d)


def result_json(result: GameResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"


def fmt(v: float) -> str:
    return f"{float(v) + 0.0:.12g}"


def _write(text: str, path: Optional[str], stream=None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)


# --- subcommands -----------------------------------------------------------


def cmd_run(args) -> int:
    spec = resolve(load_settings(args))
    result = simulate(spec.game_config())
    _write(result_json(result), args.out)
    return 0


def _xi_values(value: Any, points: int, key: str):
    if value is None:
        return xi_grid(int(points))
    if isinstance(value, (list, tuple)):
        return tuple(parse_angle(str(v), key) for v in value)
    return tuple(_floats(str(value), key))


def sweep_csv(surface) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi_a", "xi_b", "payoff_a", "payoff_b"])
    for row in surface.rows():
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    settings = load_settings(args)
    spec = resolve(settings)
    if spec.scheme is Order.SIMULTANEOUS:
        raise SpecError("scheme", "sweeps use sequential schemes (A_first or B_first)")
    if not isinstance(spec.coin, CoinState):
        raise SpecError("coin", "sweeps need a pure coin state")
    sw = settings.get("sweep", {})
    points = sw.get("points", 21)
    try:
        grid = SweepGrid(
            _xi_values(sw.get("xi_a"), points, "xi_a"),
            _xi_values(sw.get("xi_b"), points, "xi_b"),
            spec.coin,
            spec.steps,
            spec.payoffs,
            spec.scheme,
        )
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError("sweep", str(exc)) from None
    workers = args.workers if args.workers is not None else default_workers()
    surface = sweep(grid, workers=workers)
    _write(sweep_csv(surface), args.out)
    return 0


def validation_report(alice: StrategySpec, bob: StrategySpec) -> Dict[str, Any]:
    comp = compatibility(alice.probs, bob.probs)
    conditions = [
        {"condition": label, "value": float(v), "ok": abs(v) <= 1e-9}
        for label, v in product_conditions(alice.probs, bob.probs)
    ]

    def side(s: StrategySpec):
        return {
            "spec": s.text,
            "probs": list(s.probs.probs),
            "sequential_ok": s.probs.sequential_ok,
            "violations": s.probs.sequential_violations(),
        }

    return {
        "alice": side(alice),
        "bob": side(bob),
        "sequential_ok": comp.sequential_ok,
        "simultaneous_ok": comp.simultaneous_ok,
        "table_entry": comp.table_entry,
        "product_conditions": conditions,
        "real_phases": None if comp.phases is None else comp.phases.phi.tolist(),
        "reason": comp.reason,
    }


def cmd_validate(args) -> int:
    settings = load_settings(args)
    alice = parse_strategy(settings["alice"], "alice")
    bob = parse_strategy(settings["bob"], "bob")
    report = validation_report(alice, bob)
    _write(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    yes = {True: "yes", False: "no"}
    sys.stderr.write(
        f"{alice.text} vs {bob.text}: sequential {yes[report['sequential_ok']]}, "
        f"simultaneous {yes[report['simultaneous_ok']]} ({report['table_entry']})\n"
    )
    return 0


def cmd_entropy(args) -> int:
    spec = resolve(load_settings(args))
    if spec.mode is not Mode.UNITARY:
        raise SpecError("mode", "entropy needs unitary mode")
    window = tuple(int(v) for v in _floats(args.window, "window", 2)) if args.window else fit_window(spec.steps)
    growth = entropy_growth(spec.game_config(), window)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "entropy_bits"])
    for n, s in growth.series:
        w.writerow([n, fmt(s)])
    _write(buf.getvalue(), args.out)
    summary = {
        "window": list(window),
        "fit": {"intercept": growth.fit.intercept, "slope": growth.fit.slope, "residual": growth.fit.residual},
        "linear_fit": {
            "intercept": growth.linear_fit.intercept,
            "slope": growth.linear_fit.slope,
            "residual": growth.linear_fit.residual,
        },
    }
    _write(json.dumps(summary, sort_keys=True) + "\n", args.fit_out, sys.stderr)
    return 0


def cmd_classical(args) -> int:
    settings = load_settings(args)
    spec = resolve({**settings, "mode": "measured"})
    initial = parse_coin(settings["classical"]["initial"], "initial")
    if isinstance(initial, CoinState):
        initial = JointCoinDistribution.from_coin(initial)
    traj = classical_payoff_trajectory(spec.alice.probs, spec.bob.probs, initial, spec.steps,
                                       spec.payoffs, spec.scheme)
    means = [0.0, 0.0] if spec.steps == 0 else [float(v) for v in traj[-1]]
    out: Dict[str, Any] = {
        "payoff_means": means,
        "order": spec.scheme.value,
        "steps": spec.steps,
        "initial": [float(p) for p in initial.probs],
        "alice": list(spec.alice.probs.probs),
        "bob": list(spec.bob.probs.probs),
        "payoffs": spec.payoffs.as_dict(),
        "version": __version__,
    }
    if spec.record.trajectory:
        out["trajectory"] = traj.tolist()
    _write(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _game_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--payoffs", help="pd, hawk-dove, stag-hunt or R,S,T,P")
    p.add_argument("--alice", help="Alice's strategy spec")
    p.add_argument("--bob", help="Bob's strategy spec")
    p.add_argument("--scheme", help="A_first, B_first or simultaneous")
    p.add_argument("--coin", help="initial coin preset or re,im;re,im;re,im;re,im")
    p.add_argument("--steps", type=int)
    p.add_argument("--mode", help="unitary or measured")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--timestamp", action="store_true", help="add a timestamp to metadata")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qwgame", description="Iterated quantum games on a two-walker quantum walk.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play one game, write JSON")
    _game_flags(p)
    p.add_argument("--trajectory", action="store_true")
    p.add_argument("--entropy", action="store_true")
    p.add_argument("--distribution", action="store_true", help="final payoff distribution")
    p.add_argument("--distributions", action="store_true", help="per-step distributions")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="xi-family payoff surface as CSV")
    _game_flags(p)
    p.add_argument("--points", type=int, help="grid points per axis on [0, pi/4]")
    p.add_argument("--xi-a", dest="xi_a", help="explicit comma-separated xi_A values")
    p.add_argument("--xi-b", dest="xi_b", help="explicit comma-separated xi_B values")
    p.add_argument("--workers", type=int, help="worker processes (default: $QWGAME_WORKERS or CPU count)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check which schemes can confront two strategies")
    p.add_argument("--config")
    p.add_argument("--alice")
    p.add_argument("--bob")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("entropy", help="entanglement entropy series as CSV")
    _game_flags(p)
    p.add_argument("--window", help="fit window lo,hi (default: second half)")
    p.add_argument("--fit-out", dest="fit_out", help="write the fit summary JSON here (default stderr)")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("classical", help="exact classical iterated game")
    _game_flags(p)
    p.add_argument("--initial", help="initial distribution: uniform, dist:p00,p01,p10,p11 or a coin preset")
    p.add_argument("--trajectory", action="store_true")
    p.set_defaults(func=cmd_classical)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotUnitary as exc:
        sys.stderr.write(f"error: not unitary: {exc}\n")
        return 2
    except SpecError as exc:
        sys.stderr.write(f"error: invalid spec: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
