"""Shared identifiers, outcomes, budgets and the trajectory-record schema.

Every engine produces an :class:`Outcome`; the orchestrator wraps outcomes into
:class:`TrajectoryRecord` lines, and the metrics layer consumes nothing but
those lines. The on-disk log is JSON-lines, one record per line.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator


class GameKind(str, Enum):
    TOWER_DEFENSE = "TDG"
    BATTLE_CARD = "BCG"
    TURN_ATTRIBUTE = "TAG"

    @classmethod
    def parse(cls, value: str | GameKind) -> GameKind:
        if isinstance(value, GameKind):
            return value
        key = str(value).strip().upper()
        aliases = {
            "TDG": cls.TOWER_DEFENSE,
            "TOWER_DEFENSE": cls.TOWER_DEFENSE,
            "TOWERDEFENSE": cls.TOWER_DEFENSE,
            "BCG": cls.BATTLE_CARD,
            "BATTLE_CARD": cls.BATTLE_CARD,
            "BATTLECARD": cls.BATTLE_CARD,
            "TAG": cls.TURN_ATTRIBUTE,
            "TURN_ATTRIBUTE": cls.TURN_ATTRIBUTE,
            "TURNATTRIBUTE": cls.TURN_ATTRIBUTE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown game {value!r}") from None


class Role(str, Enum):
    INVADER = "invader"
    DEFENDER = "defender"

    @property
    def opponent(self) -> Role:
        return Role.DEFENDER if self is Role.INVADER else Role.INVADER

    @classmethod
    def parse(cls, value: str | Role) -> Role:
        if isinstance(value, Role):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown role {value!r}") from None


class ViolationCode(str, Enum):
    """Closed set of machine-readable failure classes shared by all games."""

    BUDGET_EXCEEDED = "BudgetExceeded"
    PLACEMENT_OUT_OF_BOUNDS = "PlacementOutOfBounds"
    CELL_OCCUPIED = "CellOccupied"
    ROSTER_TOO_LARGE = "RosterTooLarge"
    UNKNOWN_UNIT = "UnknownUnit"
    UNKNOWN_SKILL = "UnknownSkill"
    MALFORMED_DOCUMENT = "MalformedDocument"
    PROVIDER_TIMEOUT = "ProviderTimeout"


class InvalidRecord(ValueError):
    """A trajectory record breaks one of its invariants."""


@dataclass(frozen=True)
class Budget:
    limit: int

    def __post_init__(self) -> None:
        if isinstance(self.limit, bool) or not isinstance(self.limit, int) or self.limit < 0:
            raise ValueError(f"budget limit must be a non-negative integer, got {self.limit!r}")

    def complies(self, cost: int) -> bool:
        return cost <= self.limit


@dataclass(frozen=True)
class Forfeit:
    role: Role
    code: ViolationCode | None


@dataclass(frozen=True)
class Outcome:
    """Result of one round.

    ``winner`` is ``None`` only for a double forfeit (both sides broke the
    rules, or the match crashed); in that case ``forfeits`` names both sides.
    """

    winner: Role | None
    terminated_at: int
    trace_digest: str
    reason: str
    forfeits: tuple[Forfeit, ...] = ()

    def __post_init__(self) -> None:
        if self.winner is None and len(self.forfeits) != 2:
            raise ValueError("an outcome without a winner must be a double forfeit")
        if self.winner is not None and any(f.role is self.winner for f in self.forfeits):
            raise ValueError("the winner cannot also forfeit")

    @classmethod
    def forfeit(cls, role: Role, code: ViolationCode | None, reason: str = "forfeit") -> Outcome:
        return cls(
            winner=role.opponent,
            terminated_at=0,
            trace_digest=trace_digest([]),
            reason=reason,
            forfeits=(Forfeit(role, code),),
        )

    @classmethod
    def double_forfeit(
        cls,
        invader_code: ViolationCode | None,
        defender_code: ViolationCode | None,
        reason: str = "double_forfeit",
    ) -> Outcome:
        return cls(
            winner=None,
            terminated_at=0,
            trace_digest=trace_digest([]),
            reason=reason,
            forfeits=(Forfeit(Role.INVADER, invader_code), Forfeit(Role.DEFENDER, defender_code)),
        )

    def forfeited(self, role: Role) -> bool:
        return any(f.role is role for f in self.forfeits)

    def to_dict(self) -> dict[str, Any]:
        return {
            "winner": self.winner.value if self.winner else None,
            "terminated_at": self.terminated_at,
            "trace_digest": self.trace_digest,
            "reason": self.reason,
            "forfeits": [
                {"role": f.role.value, "code": f.code.value if f.code else None}
                for f in self.forfeits
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Outcome:
        return cls(
            winner=Role(data["winner"]) if data.get("winner") else None,
            terminated_at=int(data["terminated_at"]),
            trace_digest=str(data["trace_digest"]),
            reason=str(data["reason"]),
            forfeits=tuple(
                Forfeit(Role(f["role"]), ViolationCode(f["code"]) if f.get("code") else None)
                for f in data.get("forfeits", [])
            ),
        )


@dataclass(frozen=True)
class SimOutcome:
    """What an engine returns: the round outcome plus its full event trace.

    ``phi`` holds the state-evaluation scalar per role (higher is better for
    that role); it feeds the constructive-rate metric.
    """

    outcome: Outcome
    trace: list[dict[str, Any]]
    phi: dict[Role, float]

    @property
    def winner(self) -> Role | None:
        return self.outcome.winner


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def trace_digest(events: Iterable[dict[str, Any]]) -> str:
    h = hashlib.sha256()
    for event in events:
        h.update(canonical_json(event).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def new_match_id(game: GameKind, model_a: str, model_b: str, order_tag: str) -> str:
    """Deterministic id, unique per (game, pair, order).

    ``order_tag`` is ``"a_first"`` or ``"b_first"``; the first mover is
    written before the ``>``.
    """
    if not model_a or not model_b:
        raise ValueError("model identifiers must be non-empty")
    if order_tag == "a_first":
        first, second = model_a, model_b
    elif order_tag == "b_first":
        first, second = model_b, model_a
    else:
        raise ValueError(f"unknown order tag {order_tag!r}")
    return f"{GameKind.parse(game).value}:{first}>{second}"


@dataclass(frozen=True)
class TrajectoryRecord:
    """One round of one match, seen from one model's perspective."""

    match_id: str
    game: GameKind
    model_self: str
    model_opponent: str
    role: Role
    moved_first: bool
    round_index: int
    max_rounds: int
    strategy_doc: Any
    valid: bool
    violation_code: ViolationCode | None
    declared_cost: int
    budget_limit: int
    outcome: Outcome
    is_revision: bool
    feedback_given: str | None = None
    feedback_negative: bool = False
    phi: float | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def won(self) -> bool:
        return self.outcome.winner is self.role

    @property
    def over_budget(self) -> bool:
        return self.declared_cost > self.budget_limit

    def check(self) -> None:
        if not self.match_id or not self.model_self or not self.model_opponent:
            raise InvalidRecord("identifiers must be non-empty")
        if not 1 <= self.round_index <= self.max_rounds:
            raise InvalidRecord(
                f"round_index {self.round_index} outside [1, {self.max_rounds}]"
            )
        if self.is_revision and self.round_index == 1:
            raise InvalidRecord("a revision cannot happen in round 1")
        if not self.valid and self.violation_code is None:
            raise InvalidRecord("invalid strategy without violation code")
        if self.valid and self.violation_code is not None:
            raise InvalidRecord("valid strategy carrying a violation code")

    def to_dict(self) -> dict[str, Any]:
        return {
            "match_id": self.match_id,
            "game": self.game.value,
            "model_self": self.model_self,
            "model_opponent": self.model_opponent,
            "role": self.role.value,
            "moved_first": self.moved_first,
            "round_index": self.round_index,
            "max_rounds": self.max_rounds,
            "strategy_doc": self.strategy_doc,
            "valid": self.valid,
            "violation_code": self.violation_code.value if self.violation_code else None,
            "declared_cost": self.declared_cost,
            "budget_limit": self.budget_limit,
            "outcome": self.outcome.to_dict(),
            "is_revision": self.is_revision,
            "feedback_given": self.feedback_given,
            "feedback_negative": self.feedback_negative,
            "phi": self.phi,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrajectoryRecord:
        try:
            return cls(
                match_id=str(data["match_id"]),
                game=GameKind.parse(data["game"]),
                model_self=str(data["model_self"]),
                model_opponent=str(data["model_opponent"]),
                role=Role(data["role"]),
                moved_first=bool(data["moved_first"]),
                round_index=int(data["round_index"]),
                max_rounds=int(data["max_rounds"]),
                strategy_doc=data.get("strategy_doc"),
                valid=bool(data["valid"]),
                violation_code=(
                    ViolationCode(data["violation_code"]) if data.get("violation_code") else None
                ),
                declared_cost=int(data["declared_cost"]),
                budget_limit=int(data["budget_limit"]),
                outcome=Outcome.from_dict(data["outcome"]),
                is_revision=bool(data["is_revision"]),
                feedback_given=data.get("feedback_given"),
                feedback_negative=bool(data.get("feedback_negative", False)),
                phi=None if data.get("phi") is None else float(data["phi"]),
                extra=dict(data.get("extra") or {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidRecord(f"cannot parse record: {exc}") from exc

    def to_line(self) -> str:
        return canonical_json(self.to_dict())

    @classmethod
    def from_line(cls, line: str) -> TrajectoryRecord:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidRecord(f"not JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidRecord("record line must be a JSON object")
        record = cls.from_dict(data)
        record.check()
        return record


def record_sort_key(record: TrajectoryRecord) -> tuple:
    return (record.match_id, record.round_index, record.model_self)


class TrajectoryLog:
    """Append-only JSON-lines log with a single-writer lock."""

    def __init__(self, path: str | os.PathLike[str]) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: TrajectoryRecord) -> None:
        record.check()
        line = record.to_line() + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        return iter(read_log(self.path))

    def __len__(self) -> int:
        if not self.path.exists():
            return 0
        with self.path.open(encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())


def record_round(log: TrajectoryLog, record: TrajectoryRecord) -> TrajectoryLog:
    log.append(record)
    return log


def read_log(path: str | os.PathLike[str]) -> list[TrajectoryRecord]:
    with open(path, encoding="utf-8") as fh:
        return [TrajectoryRecord.from_line(line) for line in fh if line.strip()]


def write_log(path: str | os.PathLike[str], records: Iterable[TrajectoryRecord]) -> None:
    """Write records sorted by (match, round, model); overwrites ``path``."""
    ordered = sorted(records, key=record_sort_key)
    for r in ordered:
        r.check()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for r in ordered:
            fh.write(r.to_line() + "\n")
