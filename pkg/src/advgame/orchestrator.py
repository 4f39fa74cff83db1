"""The closed play loop: propose, validate, resolve, feed back, repeat.

A match is one (game, pair, move order) triple played for ``rounds`` rounds.
The first mover plays the invader role for the whole match; the tournament
schedules every pair under both orders so each model plays both roles.
Each round yields two :class:`TrajectoryRecord` lines, one per model.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from advgame.core import (
    GameKind,
    Outcome,
    Role,
    TrajectoryRecord,
    ViolationCode,
    new_match_id,
    record_sort_key,
    write_log,
)
from advgame.games import simulate
from advgame.providers import HistoryEntry, Proposal, ProposalRequest, Provider, derive_seed
from advgame.registry import Registry, load_registry, rules_digest
from advgame.strategy import DEFAULT_BUDGETS, Valid, Violation, partial_cost, validate

log = logging.getLogger(__name__)

ORDERS = ("a_first", "b_first")


@dataclass(frozen=True)
class MatchPlan:
    game: GameKind
    model_a: str
    model_b: str
    rounds: int = 5
    order: str = "a_first"
    budgets: Mapping[Role, int] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "game", GameKind.parse(self.game))
        if self.rounds < 1:
            raise ValueError("a match needs at least one round")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        if self.model_a == self.model_b:
            raise ValueError("a model cannot play itself")

    @property
    def invader(self) -> str:
        return self.model_a if self.order == "a_first" else self.model_b

    @property
    def defender(self) -> str:
        return self.model_b if self.order == "a_first" else self.model_a

    @property
    def match_id(self) -> str:
        return new_match_id(self.game, self.model_a, self.model_b, self.order)

    def budget(self, role: Role) -> int:
        if self.budgets and role in self.budgets:
            return int(self.budgets[role])
        return DEFAULT_BUDGETS[self.game][role]


@dataclass(frozen=True)
class Feedback:
    text: str
    negative: bool
    violation: str | None = None
    cause: str = ""


# -- feedback -----------------------------------------------------------------


def _loss_cause(game: GameKind, outcome: Outcome, trace: Sequence[dict[str, Any]]) -> str:
    if outcome.forfeits:
        return ""
    if game is GameKind.TOWER_DEFENSE:
        for e in trace:
            if e.get("kind") == "cross":
                return f"demon {e['actor']} crossed at {e['target'].replace('row', 'row ')}, t={e['t_ms']} ms"
        return f"{outcome.reason} at t={outcome.terminated_at} ms"
    if game is GameKind.BATTLE_CARD:
        return f"{outcome.reason} after {outcome.terminated_at} attacks"
    return f"{outcome.reason} in round {outcome.terminated_at}"


def compose_feedback(record: TrajectoryRecord, trace: Sequence[dict[str, Any]] = ()) -> Feedback:
    """Deterministic feedback text for one record; negative iff lost or violated."""
    outcome = record.outcome
    won = outcome.winner is record.role
    violated = not record.valid or outcome.forfeited(record.role)
    negative = violated or not won
    head = f"Round {record.round_index} ({record.game.value}, {record.role.value}): "

    violation = None
    if violated:
        code = record.violation_code.value if record.violation_code else "match_error"
        detail = record.extra.get("violation_detail", "")
        violation = f"{code}: {detail}" if detail else code
        if record.violation_code is ViolationCode.BUDGET_EXCEEDED:
            over = record.declared_cost - record.budget_limit
            violation += f" (declared cost {record.declared_cost}, limit {record.budget_limit}, over by {over})"
        return Feedback(head + f"LOSS by forfeit. Violation {violation}.", True, violation)

    if outcome.forfeited(record.role.opponent):
        return Feedback(head + "WIN, the opponent forfeited.", False)
    cause = _loss_cause(record.game, outcome, trace)
    if won:
        return Feedback(head + f"WIN ({cause}).", False, None, cause)
    return Feedback(head + f"LOSS ({cause}).", negative, None, cause)


# -- match ----------------------------------------------------------------------


@dataclass
class _Side:
    model: str
    role: Role
    history: list[HistoryEntry] = field(default_factory=list)
    last_doc: Any = None


def _phi_for(outcome: Outcome, sim_phi: Mapping[Role, float] | None, role: Role) -> float:
    if outcome.forfeits:
        return -1.0 if outcome.forfeited(role) else 1.0
    assert sim_phi is not None
    return float(sim_phi[role])


def run_match(
    plan: MatchPlan,
    providers: Mapping[str, Provider],
    registry: Registry | None = None,
    engine_config: Any = None,
) -> list[TrajectoryRecord]:
    reg = registry or load_registry()
    for model in (plan.model_a, plan.model_b):
        if model not in providers:
            raise KeyError(f"no provider for model {model!r}")
    digest = rules_digest()
    match_seed = derive_seed(plan.match_id)
    sides = [_Side(plan.invader, Role.INVADER), _Side(plan.defender, Role.DEFENDER)]
    records: list[TrajectoryRecord] = []

    for r in range(1, plan.rounds + 1):
        drafts = []
        for side in sides:
            budget = plan.budget(side.role)
            request = ProposalRequest(
                game=plan.game,
                role=side.role,
                rules_digest=digest,
                budget=budget,
                round_index=r,
                history=tuple(side.history),
                match_id=plan.match_id,
                model=side.model,
                seed=match_seed,
            )
            error = None
            try:
                proposal = providers[side.model].propose(request)
            except Exception as exc:  # any provider failure forfeits the round
                error = f"{type(exc).__name__}: {exc}"
                proposal = Proposal()
            kept = proposal.keep and error is None
            doc = side.last_doc if kept else proposal.strategy
            if error is not None:
                verdict: Valid | Violation = Violation(ViolationCode.PROVIDER_TIMEOUT, error)
                doc = None
            elif kept and side.last_doc is None:
                verdict = Violation(ViolationCode.MALFORMED_DOCUMENT, "keep requested with no prior strategy")
            else:
                verdict = validate(doc, plan.game, side.role, budget, reg)
            is_revision = r > 1 and error is None and not kept and doc != side.last_doc
            drafts.append((side, doc, verdict, kept, is_revision, error, budget))

        (inv, inv_doc, inv_v, *_), (dfd, dfd_doc, dfd_v, *_) = drafts
        sim = None
        if not inv_v.ok and not dfd_v.ok:
            outcome = Outcome.double_forfeit(inv_v.code, dfd_v.code)
        elif not inv_v.ok:
            outcome = Outcome.forfeit(Role.INVADER, inv_v.code)
        elif not dfd_v.ok:
            outcome = Outcome.forfeit(Role.DEFENDER, dfd_v.code)
        else:
            sim = simulate(plan.game, inv_v.strategy, dfd_v.strategy, engine_config, reg)
            outcome = sim.outcome
        trace = sim.trace if sim else []

        for side, doc, verdict, kept, is_revision, error, budget in drafts:
            opponent = dfd.model if side is inv else inv.model
            if verdict.ok:
                cost = verdict.cost
            else:
                cost = verdict.cost or (partial_cost(doc, plan.game, side.role, reg) if doc is not None else 0)
            extra: dict[str, Any] = {"kept": kept}
            if not verdict.ok:
                extra["violation_detail"] = verdict.detail
            if error is not None:
                extra["provider_error"] = error
            record = TrajectoryRecord(
                match_id=plan.match_id,
                game=plan.game,
                model_self=side.model,
                model_opponent=opponent,
                role=side.role,
                moved_first=side.role is Role.INVADER,
                round_index=r,
                max_rounds=plan.rounds,
                strategy_doc=doc,
                valid=verdict.ok,
                violation_code=verdict.code,
                declared_cost=cost,
                budget_limit=budget,
                outcome=outcome,
                is_revision=is_revision,
                phi=_phi_for(outcome, sim.phi if sim else None, side.role),
                extra=extra,
            )
            fb = compose_feedback(record, trace)
            record = replace(record, feedback_given=fb.text, feedback_negative=fb.negative)
            records.append(record)
            side.history.append(HistoryEntry(doc, outcome.to_dict(), fb.text, fb.negative))
            if doc is not None:
                side.last_doc = doc
    return records


def crashed_match(plan: MatchPlan, error: str) -> list[TrajectoryRecord]:
    """Records for a match that raised: every round is a double forfeit."""
    outcome = Outcome.double_forfeit(None, None, reason="match_error")
    records = []
    for r in range(1, plan.rounds + 1):
        for model, role in ((plan.invader, Role.INVADER), (plan.defender, Role.DEFENDER)):
            records.append(
                TrajectoryRecord(
                    match_id=plan.match_id,
                    game=plan.game,
                    model_self=model,
                    model_opponent=plan.defender if role is Role.INVADER else plan.invader,
                    role=role,
                    moved_first=role is Role.INVADER,
                    round_index=r,
                    max_rounds=plan.rounds,
                    strategy_doc=None,
                    valid=True,
                    violation_code=None,
                    declared_cost=0,
                    budget_limit=plan.budget(role),
                    outcome=outcome,
                    is_revision=False,
                    feedback_given=f"Round {r}: match aborted ({error}).",
                    feedback_negative=True,
                    phi=-1.0,
                    extra={"kept": False, "match_error": error},
                )
            )
    return records


# -- tournament -------------------------------------------------------------------


def schedule(
    models: Sequence[str],
    games: Iterable[GameKind | str],
    rounds: int,
    budgets: Mapping[GameKind, Mapping[Role, int]] | None = None,
    opponents: Iterable[str] | None = None,
) -> list[MatchPlan]:
    """Every unordered pair x every game x both orders (optionally filtered)."""
    if len(models) < 2:
        raise ValueError("a tournament needs at least two models")
    if len(set(models)) != len(models):
        raise ValueError("model identifiers must be unique")
    allow = set(opponents) if opponents else None
    plans = []
    for game in (GameKind.parse(g) for g in games):
        for a, b in itertools.combinations(models, 2):
            if allow is not None and a not in allow and b not in allow:
                continue
            for order in ORDERS:
                plans.append(
                    MatchPlan(game, a, b, rounds, order, (budgets or {}).get(game))
                )
    return plans


def _play(args: tuple[MatchPlan, Mapping[str, Provider], Any]) -> list[TrajectoryRecord]:
    plan, providers, engine_configs = args
    try:
        return run_match(plan, providers, engine_config=(engine_configs or {}).get(plan.game))
    except Exception as exc:
        log.warning("match %s crashed: %s", plan.match_id, exc)
        return crashed_match(plan, f"{type(exc).__name__}: {exc}")


def run_tournament(
    providers: Mapping[str, Provider],
    games: Iterable[GameKind | str],
    rounds: int = 5,
    budgets: Mapping[GameKind, Mapping[Role, int]] | None = None,
    opponents: Iterable[str] | None = None,
    jobs: int = 1,
    out: str | Path | None = None,
    engine_configs: Mapping[GameKind, Any] | None = None,
) -> list[TrajectoryRecord]:
    plans = schedule(list(providers), games, rounds, budgets, opponents)
    work = [(p, {p.model_a: providers[p.model_a], p.model_b: providers[p.model_b]}, engine_configs) for p in plans]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_play, work))
    else:
        chunks = [_play(w) for w in work]
    records = sorted((r for chunk in chunks for r in chunk), key=record_sort_key)
    if out is not None:
        write_log(out, records)
    return records
