"""Strategy providers: where each round's strategy document comes from.

Three kinds exist. ``scripted`` wraps an in-process bot policy, ``replay``
reads strategies back out of an earlier trajectory log, and
``external_agent`` POSTs the round request to an HTTP endpoint (any LLM
wrapper can sit behind it).

Wire format for external agents, one request per round::

    -> {"game", "role", "rules_digest", "budget", "round_index",
        "history": [{"strategy", "outcome", "feedback"}]}
    <- {"strategy": {...}}  or  {"keep": true}
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import httpx

from advgame.core import GameKind, Role, TrajectoryRecord, read_log


class ProviderError(RuntimeError):
    """The provider failed to deliver a proposal (timeout, transport, bad reply)."""


@dataclass(frozen=True)
class HistoryEntry:
    strategy: Any
    outcome: dict[str, Any]
    feedback: str
    negative: bool

    def to_wire(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "outcome": self.outcome,
            "feedback": self.feedback,
            "negative": self.negative,
        }


@dataclass(frozen=True)
class ProposalRequest:
    game: GameKind
    role: Role
    rules_digest: str
    budget: int
    round_index: int
    history: tuple[HistoryEntry, ...] = ()
    match_id: str = ""
    model: str = ""
    seed: int = 0

    def to_wire(self) -> dict[str, Any]:
        return {
            "game": self.game.value,
            "role": self.role.value,
            "rules_digest": self.rules_digest,
            "budget": self.budget,
            "round_index": self.round_index,
            "history": [h.to_wire() for h in self.history],
        }

    @property
    def previous(self) -> Any:
        return self.history[-1].strategy if self.history else None


@dataclass(frozen=True)
class Proposal:
    strategy: Any = None
    keep: bool = False

    @classmethod
    def from_wire(cls, data: Any) -> Proposal:
        if not isinstance(data, dict):
            raise ProviderError("agent reply must be a JSON object")
        if data.get("keep") is True:
            return cls(keep=True)
        if "strategy" not in data:
            raise ProviderError("agent reply needs 'strategy' or 'keep'")
        return cls(strategy=data["strategy"])


class Provider(Protocol):
    kind: str

    def propose(self, request: ProposalRequest) -> Proposal: ...


def derive_seed(*parts: Any) -> int:
    """Stable 63-bit seed from arbitrary parts (never Python's salted hash)."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


@dataclass
class ScriptedProvider:
    policy: str
    seed: int = 0
    kind: str = field(default="scripted", init=False)

    def __post_init__(self) -> None:
        from advgame.bots import get_policy

        self._fn = get_policy(self.policy)

    def propose(self, request: ProposalRequest) -> Proposal:
        return self._fn(request, self.seed)


@dataclass
class ReplayProvider:
    """Replays ``model``'s strategies from a log, keyed by (match, round)."""

    path: str | Path
    model: str | None = None
    kind: str = field(default="replay", init=False)

    def __post_init__(self) -> None:
        self._index: dict[tuple[str, str, int], TrajectoryRecord] = {}
        for rec in read_log(self.path):
            self._index[(rec.match_id, rec.model_self, rec.round_index)] = rec

    def propose(self, request: ProposalRequest) -> Proposal:
        key = (request.match_id, self.model or request.model, request.round_index)
        rec = self._index.get(key)
        if rec is None:
            raise ProviderError(f"no logged strategy for {key}")
        if rec.extra.get("provider_error"):
            raise ProviderError(rec.extra["provider_error"])
        if rec.extra.get("kept"):
            return Proposal(keep=True)
        return Proposal(strategy=rec.strategy_doc)


@dataclass
class ExternalAgentProvider:
    endpoint: str
    timeout_s: float = 120.0
    client: httpx.Client | None = None
    kind: str = field(default="external_agent", init=False)

    def propose(self, request: ProposalRequest) -> Proposal:
        try:
            if self.client is not None:
                resp = self.client.post(self.endpoint, json=request.to_wire(), timeout=self.timeout_s)
            else:
                resp = httpx.post(self.endpoint, json=request.to_wire(), timeout=self.timeout_s)
            resp.raise_for_status()
            return Proposal.from_wire(resp.json())
        except (httpx.HTTPError, ValueError) as exc:
            raise ProviderError(f"{type(exc).__name__}: {exc}") from exc


def make_provider(kind: str, **params: Any) -> Provider:
    if kind == "scripted":
        return ScriptedProvider(policy=params["policy"], seed=int(params.get("seed", 0)))
    if kind == "replay":
        return ReplayProvider(path=params["path"], model=params.get("model"))
    if kind == "external_agent":
        return ExternalAgentProvider(
            endpoint=params["endpoint"], timeout_s=float(params.get("timeout_s", 120.0))
        )
    raise ValueError(f"unknown provider kind {kind!r}")
