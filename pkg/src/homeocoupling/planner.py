"""Self-directed receding-horizon planner.

Candidate action sequences are rolled out through the world's own transition
function and scored only on the actor's predicted internal state. Partner
state can reach the score solely through coupled distress.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import product
from typing import Any, NamedTuple, Sequence

from .affect import AffectState
from .homeostat import HomeostatState, RegulationTrace
from .worlds import Action

EXHAUSTIVE_LIMIT = 10**6


@dataclass(frozen=True)
class ScoreWeights:
    valence: float = 2.0
    arousal: float = -1.2
    salience: float = -0.8
    body_budget_error: float = -0.4


DEFAULT_WEIGHTS = ScoreWeights()


class Strategy(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    BEAM = "beam"
    GREEDY_ROLLOUT = "greedy_rollout"


@dataclass(frozen=True)
class PlanConfig:
    horizon: int = 10
    strategy: Strategy = Strategy.BEAM
    beam_width: int = 4
    weights: ScoreWeights = DEFAULT_WEIGHTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.horizon < 1:
            raise ValueError("planning horizon must be >= 1")
        if self.beam_width < 1:
            raise ValueError("beam width must be >= 1")
        if self.strategy is Strategy.EXHAUSTIVE and len(Action) ** self.horizon > EXHAUSTIVE_LIMIT:
            raise ValueError(
                f"exhaustive search over horizon {self.horizon} exceeds {EXHAUSTIVE_LIMIT} sequences"
            )


def score_step(affect: AffectState, weights: ScoreWeights = DEFAULT_WEIGHTS) -> float:
    return (
        weights.valence * affect.valence
        + weights.arousal * affect.arousal
        + weights.salience * affect.salience
        + weights.body_budget_error * affect.body_budget_error
    )


class RolloutStep(NamedTuple):
    action: Action
    actor: HomeostatState
    affect: AffectState
    trace: RegulationTrace
    score: float


class RolloutTrace(NamedTuple):
    steps: tuple[RolloutStep, ...]
    score: float


def rollout(world, state, sequence: Sequence[Action], config: PlanConfig = PlanConfig()) -> RolloutTrace:
    if len(sequence) > config.horizon:
        raise ValueError(f"sequence of length {len(sequence)} exceeds horizon {config.horizon}")
    steps = []
    total = 0.0
    for action in sequence:
        state, info = world.step(state, action)
        s = score_step(state.affect, config.weights)
        total += s
        steps.append(RolloutStep(Action(action), state.actor, state.affect, info.trace, s))
    return RolloutTrace(tuple(steps), total)


def _depth(world, state, horizon: int) -> int:
    # never plan past the end of the episode
    return max(1, min(horizon, world.horizon - state.t))


def _better(score: float, seq: tuple, best_score: float, best_seq: tuple | None) -> bool:
    if best_seq is None or score > best_score:
        return True
    return score == best_score and seq < best_seq


def _exhaustive(world, state, depth: int, weights: ScoreWeights) -> tuple[float, tuple]:
    best: tuple[float, tuple | None] = (float("-inf"), None)

    def visit(s, seq: tuple, acc: float, remaining: int) -> None:
        nonlocal best
        actions = world.planning_actions(s)
        if remaining == 0 or s.t >= world.horizon or not actions:
            if _better(acc, seq, *best):
                best = (acc, seq)
            return
        for a in actions:
            nxt = world.transition(s, a)
            visit(nxt, seq + (a,), acc + score_step(nxt.affect, weights), remaining - 1)

    visit(state, (), 0.0, depth)
    return best  # type: ignore[return-value]


def _beam(world, state, depth: int, width: int, weights: ScoreWeights) -> tuple[float, tuple]:
    # One beam per (place, inventory, depth of the last inventory change).
    # Grouping by configuration keeps a costly detour toward a distant payoff
    # from being crowded out by cheap local moves; the change depth keeps
    # "act now" and "act later" variants of the same plan apart.
    transition, options, bucket = world.transition, world.planning_actions, world.bucket
    frontier: list[tuple[float, tuple, Any, Any, int]] = [(0.0, (), state, bucket(state)[1], 0)]
    for d in range(1, depth + 1):
        buckets: dict[Any, list[tuple[float, tuple, Any, Any, int]]] = {}
        for acc, seq, s, inventory, changed in frontier:
            for a in options(s):
                nxt = transition(s, a)
                place, inv = bucket(nxt)
                when = d if inv != inventory else changed
                buckets.setdefault((place, inv, when), []).append(
                    (acc + score_step(nxt.affect, weights), seq + (a,), nxt, inv, when)
                )
        if not buckets:
            break
        frontier = []
        for items in buckets.values():
            if len(items) > width:
                items.sort(key=lambda it: (-it[0], it[1]))
                del items[width:]
            frontier.extend(items)
    best_score, best_seq = float("-inf"), None
    for acc, seq, *_ in frontier:
        if _better(acc, seq, best_score, best_seq):
            best_score, best_seq = acc, seq
    return best_score, best_seq  # type: ignore[return-value]


def _greedy_tail(world, s, remaining: int, phases: tuple, weights: ScoreWeights) -> tuple[float, tuple]:
    # Base policy: each (action, steps) phase repeats its action while it is
    # effective and otherwise takes the best next step; None means pure greedy.
    acc, seq = 0.0, ()
    for keep, steps in phases:
        for _ in range(steps):
            if remaining == 0 or s.t >= world.horizon:
                return acc, seq
            options = world.planning_actions(s)
            if not options:
                return acc, seq
            if keep in options:
                a, nxt = keep, world.transition(s, keep)
            else:
                # on an exact tie prefer handling food over moving or idling
                a, nxt, best = None, None, (float("-inf"), False)
                inventory = world.bucket(s)[1]
                for cand in options:
                    n = world.transition(s, cand)
                    rank = (score_step(n.affect, weights), world.bucket(n)[1] != inventory)
                    if rank > best:
                        a, nxt, best = cand, n, rank
            acc += score_step(nxt.affect, weights)
            seq += (a,)
            s = nxt
            remaining -= 1
    return acc, seq


def _base_policies(actions: Sequence[Action], remaining: int):
    """Hold one action for k steps, optionally wait, then hold another."""
    keeps = (None, *actions)
    for first in keeps:
        for k in range(remaining + 1):
            for second in keeps:
                if k == remaining and second is not None:
                    break
                yield ((first, k), (second, remaining - k))
            for wait in range(1, remaining - k):
                for second in actions:
                    if second is not Action.STAY:
                        yield ((first, k), (Action.STAY, wait), (second, remaining - k - wait))


def _greedy(world, state, depth: int, weights: ScoreWeights) -> tuple[float, tuple]:
    """One-step lookahead over first actions, each completed by a family of base policies.

    Plain greedy completion cannot see the payoff of a long, locally
    unrewarding walk or of holding food before eating it. Two-phase
    macros ("do a for k steps, then keep doing b") cover both.
    """
    best_score, best_seq = float("-inf"), None
    for first in world.planning_actions(state):
        nxt = world.transition(state, first)
        head = score_step(nxt.affect, weights)
        seen = set()
        for phases in _base_policies(world.actions, depth - 1):
            tail, rest = _greedy_tail(world, nxt, depth - 1, phases, weights)
            if rest in seen:
                continue
            seen.add(rest)
            seq = (first, *rest)
            if _better(head + tail, seq, best_score, best_seq):
                best_score, best_seq = head + tail, seq
    return best_score, best_seq  # type: ignore[return-value]


def _search(world, state, config: PlanConfig) -> tuple[float, tuple]:
    depth = _depth(world, state, config.horizon)
    if config.strategy is Strategy.EXHAUSTIVE:
        return _exhaustive(world, state, depth, config.weights)
    if config.strategy is Strategy.BEAM:
        return _beam(world, state, depth, config.beam_width, config.weights)
    return _greedy(world, state, depth, config.weights)


def search(world, state, config: PlanConfig = PlanConfig()) -> tuple[float, tuple[Action, ...]]:
    """Best (score, sequence) found by the configured strategy."""
    memo = getattr(world, "memo", None)
    if memo is None:
        return _search(world, state, config)
    cache = memo.setdefault("search", {})
    key = (state, config)
    found = cache.get(key)
    if found is None:
        found = cache[key] = _search(world, state, config)
    return found


def plan(world, state, config: PlanConfig = PlanConfig()) -> Action:
    """First action of the best sequence; ties go to the canonically smaller sequence."""
    _, seq = search(world, state, config)
    return seq[0]
