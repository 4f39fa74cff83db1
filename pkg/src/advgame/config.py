"""Run configuration loaded from TOML and checked strictly (unknown keys fail).

Example::

    rounds = 5
    games = ["TDG", "BCG", "TAG"]
    opponents = ["keeper"]          # optional allowlist
    out = "logs/run.jsonl"

    [models.greedy]
    kind = "scripted"
    policy = "greedy_cost"

    [models.remote]
    kind = "external_agent"
    endpoint = "http://localhost:8000/agent/random_valid"
    timeout_s = 30

    [budgets.TDG]
    invader = 800

    [engine.TDG]
    tick_ms = 50
"""

from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from advgame.core import GameKind, Role
from advgame.providers import Provider, make_provider

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    kind: Literal["scripted", "replay", "external_agent"]
    policy: Optional[str] = None
    seed: int = 0
    path: Optional[str] = None
    model: Optional[str] = None
    endpoint: Optional[str] = None
    timeout_s: float = Field(120.0, gt=0)

    @model_validator(mode="after")
    def _required(self) -> ModelSpec:
        need = {"scripted": "policy", "replay": "path", "external_agent": "endpoint"}[self.kind]
        if getattr(self, need) is None:
            raise ValueError(f"{self.kind} provider needs '{need}'")
        return self

    def build(self) -> Provider:
        return make_provider(self.kind, **self.model_dump(exclude_none=True, exclude={"kind"}))


class RoleBudgets(_Strict):
    invader: Optional[int] = Field(None, ge=0)
    defender: Optional[int] = Field(None, ge=0)


class TdOverrides(_Strict):
    tick_ms: Optional[int] = Field(None, gt=0, multiple_of=2)
    time_cap_ms: Optional[int] = Field(None, gt=0)
    burn_duration_ms: Optional[int] = Field(None, ge=0)
    shield_reduction_pct: Optional[int] = Field(None, ge=0, le=100)
    machine_reduction_pct: Optional[int] = Field(None, ge=0, le=100)


class BcOverrides(_Strict):
    advantage_multiplier: Optional[str] = None
    attack_cap: Optional[int] = Field(None, gt=0)

    @field_validator("advantage_multiplier")
    @classmethod
    def _fraction(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and Fraction(v) <= 0:
            raise ValueError("advantage_multiplier must be positive")
        return v


class TaOverrides(_Strict):
    max_hp: Optional[int] = Field(None, gt=0)
    round_cap: Optional[int] = Field(None, gt=0)


class EngineOverrides(_Strict):
    TDG: TdOverrides = TdOverrides()
    BCG: BcOverrides = BcOverrides()
    TAG: TaOverrides = TaOverrides()


class RunConfig(_Strict):
    models: dict[str, ModelSpec]
    games: list[str] = ["TDG", "BCG", "TAG"]
    rounds: int = Field(5, ge=1)
    jobs: int = Field(1, ge=1)
    opponents: Optional[list[str]] = None
    out: Optional[str] = None
    budgets: dict[str, RoleBudgets] = {}
    engine: EngineOverrides = EngineOverrides()

    @field_validator("games")
    @classmethod
    def _games(cls, v: list[str]) -> list[str]:
        return [GameKind.parse(g).value for g in v]

    @field_validator("budgets")
    @classmethod
    def _budget_keys(cls, v: dict[str, RoleBudgets]) -> dict[str, RoleBudgets]:
        return {GameKind.parse(k).value: b for k, b in v.items()}

    @model_validator(mode="after")
    def _check(self) -> RunConfig:
        if len(self.models) < 2:
            raise ValueError("a tournament needs at least two models")
        if self.opponents:
            unknown = set(self.opponents) - set(self.models)
            if unknown:
                raise ValueError(f"opponents not among models: {sorted(unknown)}")
        return self

    def providers(self) -> dict[str, Provider]:
        return {name: spec.build() for name, spec in self.models.items()}

    def budget_map(self) -> dict[GameKind, dict[Role, int]]:
        out: dict[GameKind, dict[Role, int]] = {}
        for game, b in self.budgets.items():
            roles = {Role(k): v for k, v in b.model_dump(exclude_none=True).items()}
            if roles:
                out[GameKind(game)] = roles
        return out

    def engine_configs(self) -> dict[GameKind, Any]:
        from advgame.games.bc import BcConfig
        from advgame.games.ta import TaConfig
        from advgame.games.td import TdConfig

        td = self.engine.TDG.model_dump(exclude_none=True)
        bc = self.engine.BCG.model_dump(exclude_none=True)
        ta = self.engine.TAG.model_dump(exclude_none=True)
        return {
            GameKind.TOWER_DEFENSE: TdConfig(**td),
            GameKind.BATTLE_CARD: BcConfig(**bc),
            GameKind.TURN_ATTRIBUTE: TaConfig(**ta),
        }


def load_config(path: str | Path) -> RunConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return RunConfig.model_validate(data)
