"""Versioned unit and skill registries loaded from the bundled data files."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Any, Mapping

DATA_FILES = ("td_units.json", "bc_units.json", "ta_skills.json")


def _read(name: str) -> bytes:
    return resources.files("advgame.data").joinpath(name).read_bytes()


def data_file_hashes() -> dict[str, str]:
    """sha256 of every registry data file, so results can cite exact rule data."""
    return {name: hashlib.sha256(_read(name)).hexdigest() for name in DATA_FILES}


def rules_digest() -> str:
    h = hashlib.sha256()
    for name, digest in sorted(data_file_hashes().items()):
        h.update(f"{name}:{digest}\n".encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class TdUnitSpec:
    name: str
    side: str  # "human" | "demon"
    health: int
    cost: int
    attack_interval_ms: int
    damage: int
    speed: int = 0
    flags: frozenset[str] = frozenset()
    function: str = "attack"
    params: Mapping[str, Any] = field(default_factory=dict)

    def has(self, flag: str) -> bool:
        return flag in self.flags


@dataclass(frozen=True)
class Ability:
    trigger: str
    effect: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


@dataclass(frozen=True)
class BcUnitSpec:
    name: str
    side: str  # "invader" | "defender"
    attack: int
    health: int
    cost: int
    element: str
    abilities: tuple[Ability, ...] = ()
    function: str = "attack"
    tier: str = "bronze"

    def has(self, effect: str) -> bool:
        return any(a.effect == effect for a in self.abilities)

    def ability(self, effect: str) -> Ability | None:
        for a in self.abilities:
            if a.effect == effect:
                return a
        return None


@dataclass(frozen=True)
class SkillSpec:
    name: str
    element: str
    cost: int
    function: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)


@dataclass(frozen=True)
class Registry:
    td_units: Mapping[str, TdUnitSpec]
    td_grid: Mapping[str, int]
    bc_units: Mapping[str, BcUnitSpec]
    bc_meta: Mapping[str, Any]
    ta_skills: Mapping[str, SkillSpec]
    ta_meta: Mapping[str, Any]

    def td_side(self, side: str) -> dict[str, TdUnitSpec]:
        return {n: u for n, u in self.td_units.items() if u.side == side}

    def bc_side(self, side: str) -> dict[str, BcUnitSpec]:
        return {n: u for n, u in self.bc_units.items() if u.side == side}

    def ta_pool(self, element: str) -> dict[str, SkillSpec]:
        return {n: s for n, s in self.ta_skills.items() if s.element == element}

    def faction_elements(self, role: str) -> tuple[str, ...]:
        return tuple(self.ta_meta["factions"][role])


_TD_CORE = {"name", "side", "health", "cost", "attack_interval_ms", "damage", "speed", "flags", "function"}
_SKILL_CORE = {"name", "element", "cost", "function"}


def _td_unit(raw: dict[str, Any]) -> TdUnitSpec:
    return TdUnitSpec(
        name=raw["name"],
        side=raw["side"],
        health=raw["health"],
        cost=raw["cost"],
        attack_interval_ms=raw["attack_interval_ms"],
        damage=raw["damage"],
        speed=raw.get("speed", 0),
        flags=frozenset(raw.get("flags", ())),
        function=raw.get("function", "attack"),
        params=MappingProxyType({k: v for k, v in raw.items() if k not in _TD_CORE}),
    )


def _bc_unit(raw: dict[str, Any]) -> BcUnitSpec:
    abilities = tuple(
        Ability(
            trigger=a["trigger"],
            effect=a["effect"],
            params=MappingProxyType({k: v for k, v in a.items() if k not in ("trigger", "effect")}),
        )
        for a in raw.get("abilities", ())
    )
    return BcUnitSpec(
        name=raw["name"],
        side=raw["side"],
        attack=raw["attack"],
        health=raw["health"],
        cost=raw["cost"],
        element=raw.get("element", "Neutral"),
        abilities=abilities,
        function=raw.get("function", "attack"),
    )


def _skill(raw: dict[str, Any]) -> SkillSpec:
    return SkillSpec(
        name=raw["name"],
        element=raw["element"],
        cost=raw["cost"],
        function=raw.get("function", "attack"),
        params=MappingProxyType({k: v for k, v in raw.items() if k not in _SKILL_CORE}),
    )


@lru_cache(maxsize=1)
def load_registry() -> Registry:
    td = json.loads(_read("td_units.json"))
    bc = json.loads(_read("bc_units.json"))
    ta = json.loads(_read("ta_skills.json"))
    return Registry(
        td_units=MappingProxyType({u["name"]: _td_unit(u) for u in td["units"]}),
        td_grid=MappingProxyType(dict(td["grid"])),
        bc_units=MappingProxyType({u["name"]: _bc_unit(u) for u in bc["units"]}),
        bc_meta=MappingProxyType({k: v for k, v in bc.items() if k != "units"}),
        ta_skills=MappingProxyType({s["name"]: _skill(s) for s in ta["skills"]}),
        ta_meta=MappingProxyType({k: v for k, v in ta.items() if k != "skills"}),
    )
