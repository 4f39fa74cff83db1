"""Strategy documents: parsing, cost accounting and rule validation.

``validate`` is the gate every proposal passes before an engine sees it. It
never raises for a parsed JSON value; the first failing check decides the
violation code, in this order: malformed document, unknown unit/skill,
structural bounds, occupancy / roster size, budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Any, Union

from jsonschema import Draft202012Validator

from advgame.core import Budget, GameKind, Role, ViolationCode
from advgame.registry import Registry, load_registry

TARGET_PRIORITIES = ("leftmost", "lowest_hp", "highest_attack")
TARGET_POLICIES = ("first", "lowest_hp", "highest_threat")
TIERS = ("bronze", "gold")

DEFAULT_BUDGETS: dict[GameKind, dict[Role, int]] = {
    GameKind.TOWER_DEFENSE: {Role.DEFENDER: 1000, Role.INVADER: 1000},
    GameKind.BATTLE_CARD: {Role.DEFENDER: 12, Role.INVADER: 12},
    # per character
    GameKind.TURN_ATTRIBUTE: {Role.DEFENDER: 6, Role.INVADER: 6},
}


def default_budget(game: GameKind, role: Role) -> Budget:
    return Budget(DEFAULT_BUDGETS[game][role])


class StrategyError(ValueError):
    code = ViolationCode.MALFORMED_DOCUMENT


class UnknownUnitError(StrategyError):
    code = ViolationCode.UNKNOWN_UNIT


class UnknownSkillError(StrategyError):
    code = ViolationCode.UNKNOWN_SKILL


@dataclass(frozen=True)
class TdPlacement:
    unit_name: str
    x: int
    y: int


@dataclass(frozen=True)
class TdSpawn:
    unit_name: str
    y: int
    spawn_time_ms: int


@dataclass(frozen=True)
class TdStrategy:
    role: Role
    placements: tuple[TdPlacement, ...] = ()
    spawns: tuple[TdSpawn, ...] = ()
    declared_cost: int = 0


@dataclass(frozen=True)
class BcPick:
    unit_name: str
    tier: str = "bronze"
    target_priority: str = "leftmost"


@dataclass(frozen=True)
class BcStrategy:
    role: Role
    roster: tuple[BcPick, ...]
    declared_cost: int = 0


@dataclass(frozen=True)
class TaCharacter:
    element: str
    skills: tuple[str, str, str]
    target_policy: str = "first"
    declared_cost: int = 0


@dataclass(frozen=True)
class TaStrategy:
    role: Role
    characters: tuple[TaCharacter, ...]
    declared_cost: int = 0  # total over characters

    @property
    def max_character_cost(self) -> int:
        return max((c.declared_cost for c in self.characters), default=0)


Strategy = Union[TdStrategy, BcStrategy, TaStrategy]


@dataclass(frozen=True)
class Valid:
    strategy: Strategy
    cost: int

    ok = True
    code = None
    detail = ""


@dataclass(frozen=True)
class Violation:
    code: ViolationCode
    detail: str
    cost: int = 0

    ok = False
    strategy = None


@lru_cache(maxsize=None)
def schema(game: GameKind) -> dict[str, Any]:
    name = f"{game.value.lower()}.schema.json"
    raw = resources.files("advgame.data").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(raw)


@lru_cache(maxsize=None)
def _validator(game: GameKind) -> Draft202012Validator:
    return Draft202012Validator(schema(game))


def budgeted_cost(strategy: Strategy) -> int:
    """The quantity compared against the budget limit.

    Totals for TDG/BCG; the most expensive character for TAG, whose budget is
    per character.
    """
    if isinstance(strategy, TaStrategy):
        return strategy.max_character_cost
    return strategy.declared_cost


# -- cost accounting ---------------------------------------------------------


def _td_cost(names: list[str], reg: Registry, side: str) -> int:
    total = 0
    for name in names:
        spec = reg.td_units.get(name)
        if spec is None or spec.side != side:
            raise UnknownUnitError(f"unknown {side} unit {name!r}")
        total += spec.cost
    return total


def _bc_cost(picks: list[tuple[str, str]], reg: Registry, side: str | None) -> int:
    mult = reg.bc_meta["gold_cost_multiplier"]
    total = 0
    for name, tier in picks:
        spec = reg.bc_units.get(name)
        if spec is None or (side is not None and spec.side != side):
            raise UnknownUnitError(f"unknown {side or ''} unit {name!r}".replace("  ", " "))
        total += spec.cost * (mult if tier == "gold" else 1)
    return total


def _skill_cost(skills: list[str], reg: Registry, element: str | None = None) -> int:
    total = 0
    for name in skills:
        spec = reg.ta_skills.get(name)
        if spec is None:
            raise UnknownSkillError(f"unknown skill {name!r}")
        if element is not None and spec.element != element:
            raise UnknownSkillError(f"skill {name!r} is not in the {element} pool")
        total += spec.cost
    return total


def cost_of(doc: Any, game: GameKind | str, registry: Registry | None = None) -> int:
    """Sum of registry costs for a strategy document.

    For BCG gold picks cost three times the bronze price. For TAG a single
    character document (``{"skills": [...]}``) is priced on its own; a full
    strategy is the total over its characters.
    """
    reg = registry or load_registry()
    game = GameKind.parse(game)
    if game is GameKind.TOWER_DEFENSE:
        if isinstance(doc, list):
            return _td_cost([_name(e) for e in doc], reg, _td_side_of(doc, reg))
        placements = doc.get("placements") or []
        spawns = doc.get("spawns") or []
        return _td_cost([_name(p) for p in placements], reg, "human") + _td_cost(
            [_name(s) for s in spawns], reg, "demon"
        )
    if game is GameKind.BATTLE_CARD:
        roster = doc if isinstance(doc, list) else doc.get("roster") or []
        return _bc_cost([(_name(p), p.get("tier", "bronze")) for p in roster], reg, None)
    if isinstance(doc, list):
        return _skill_cost(list(doc), reg)
    if "skills" in doc:
        return _skill_cost(list(doc["skills"]), reg)
    return sum(_skill_cost(list(c["skills"]), reg) for c in doc.get("characters") or [])


def _name(entry: Any) -> str:
    if isinstance(entry, str):
        return entry
    return entry["unit_name"]


def _td_side_of(entries: list[Any], reg: Registry) -> str:
    for e in entries:
        spec = reg.td_units.get(_name(e))
        if spec is not None:
            return spec.side
    return "human"


# -- validation --------------------------------------------------------------


def validate(
    doc: Any,
    game: GameKind | str,
    role: Role | str,
    budget: Budget | int | None = None,
    registry: Registry | None = None,
) -> Valid | Violation:
    """Check a parsed strategy document against the game rules and budget."""
    game = GameKind.parse(game)
    role = Role.parse(role)
    if budget is None:
        budget = default_budget(game, role)
    elif isinstance(budget, int):
        budget = Budget(budget)
    reg = registry or load_registry()
    try:
        if game is GameKind.TOWER_DEFENSE:
            return _validate_td(doc, role, budget, reg)
        if game is GameKind.BATTLE_CARD:
            return _validate_bc(doc, role, budget, reg)
        return _validate_ta(doc, role, budget, reg)
    except RecursionError:
        return Violation(ViolationCode.MALFORMED_DOCUMENT, "document nested too deeply")


def _schema_error(doc: Any, game: GameKind) -> str | None:
    error = next(iter(_validator(game).iter_errors(doc)), None)
    if error is None:
        return None
    where = "/".join(str(p) for p in error.absolute_path) or "<root>"
    return f"{where}: {error.message}"[:300]


def _check_role(doc: dict[str, Any], role: Role) -> str | None:
    declared = doc.get("role")
    if declared is not None and declared.lower() != role.value:
        return f"document role {declared!r} does not match assigned role {role.value!r}"
    return None


def _validate_td(doc: Any, role: Role, budget: Budget, reg: Registry) -> Valid | Violation:
    malformed = _schema_error(doc, GameKind.TOWER_DEFENSE) or _check_role(doc, role)
    key = "placements" if role is Role.DEFENDER else "spawns"
    other = "spawns" if role is Role.DEFENDER else "placements"
    if malformed is None and key not in doc:
        malformed = f"{role.value} strategy requires {key!r}"
    if malformed is None and doc.get(other):
        malformed = f"{role.value} strategy cannot contain {other!r}"
    if malformed:
        return Violation(ViolationCode.MALFORMED_DOCUMENT, malformed)

    side = "human" if role is Role.DEFENDER else "demon"
    entries = doc[key]
    for e in entries:
        spec = reg.td_units.get(e["unit_name"])
        if spec is None or spec.side != side:
            return Violation(
                ViolationCode.UNKNOWN_UNIT, f"unknown {side} unit {e['unit_name']!r}"
            )
    cost = _td_cost([e["unit_name"] for e in entries], reg, side)

    cols, rows = reg.td_grid["columns"], reg.td_grid["rows"]
    for i, e in enumerate(entries):
        y = int(e["y"])
        if not 0 <= y < rows:
            return Violation(
                ViolationCode.PLACEMENT_OUT_OF_BOUNDS, f"entry {i}: y={y} outside 0-{rows - 1}", cost
            )
        if role is Role.DEFENDER:
            x = int(e["x"])
            if not 0 <= x < cols:
                return Violation(
                    ViolationCode.PLACEMENT_OUT_OF_BOUNDS,
                    f"entry {i}: x={x} outside 0-{cols - 1}",
                    cost,
                )
        elif int(e["spawn_time_ms"]) < 0:
            return Violation(
                ViolationCode.PLACEMENT_OUT_OF_BOUNDS, f"entry {i}: negative spawn_time_ms", cost
            )

    if role is Role.DEFENDER:
        seen: set[tuple[int, int]] = set()
        for e in entries:
            cell = (int(e["x"]), int(e["y"]))
            if cell in seen:
                return Violation(ViolationCode.CELL_OCCUPIED, f"cell {cell} already occupied", cost)
            seen.add(cell)

    if not budget.complies(cost):
        return Violation(
            ViolationCode.BUDGET_EXCEEDED,
            f"cost {cost} exceeds budget {budget.limit} by {cost - budget.limit}",
            cost,
        )
    if role is Role.DEFENDER:
        strategy = TdStrategy(
            role=role,
            placements=tuple(TdPlacement(e["unit_name"], int(e["x"]), int(e["y"])) for e in entries),
            declared_cost=cost,
        )
    else:
        strategy = TdStrategy(
            role=role,
            spawns=tuple(
                TdSpawn(e["unit_name"], int(e["y"]), int(e["spawn_time_ms"])) for e in entries
            ),
            declared_cost=cost,
        )
    return Valid(strategy, cost)


def _validate_bc(doc: Any, role: Role, budget: Budget, reg: Registry) -> Valid | Violation:
    malformed = _schema_error(doc, GameKind.BATTLE_CARD) or _check_role(doc, role)
    if malformed:
        return Violation(ViolationCode.MALFORMED_DOCUMENT, malformed)
    roster = doc["roster"]
    for p in roster:
        spec = reg.bc_units.get(p["unit_name"])
        if spec is None or spec.side != role.value:
            return Violation(
                ViolationCode.UNKNOWN_UNIT, f"unknown {role.value} unit {p['unit_name']!r}"
            )
    cost = _bc_cost([(p["unit_name"], p.get("tier", "bronze")) for p in roster], reg, role.value)
    limit = reg.bc_meta["max_roster"]
    if len(roster) > limit:
        return Violation(
            ViolationCode.ROSTER_TOO_LARGE, f"roster has {len(roster)} units, maximum is {limit}", cost
        )
    if not budget.complies(cost):
        return Violation(
            ViolationCode.BUDGET_EXCEEDED,
            f"cost {cost} exceeds budget {budget.limit} by {cost - budget.limit}",
            cost,
        )
    strategy = BcStrategy(
        role=role,
        roster=tuple(
            BcPick(p["unit_name"], p.get("tier", "bronze"), p.get("target_priority", "leftmost"))
            for p in roster
        ),
        declared_cost=cost,
    )
    return Valid(strategy, cost)


def _validate_ta(doc: Any, role: Role, budget: Budget, reg: Registry) -> Valid | Violation:
    malformed = _schema_error(doc, GameKind.TURN_ATTRIBUTE) or _check_role(doc, role)
    elements = reg.faction_elements(role.value)
    if malformed is None:
        for slot, (char, element) in enumerate(zip(doc["characters"], elements)):
            given = char.get("element")
            if given is not None and given != element:
                malformed = f"character {slot} must be {element}, not {given}"
                break
    if malformed:
        return Violation(ViolationCode.MALFORMED_DOCUMENT, malformed)

    costs = []
    for slot, (char, element) in enumerate(zip(doc["characters"], elements)):
        for name in char["skills"]:
            spec = reg.ta_skills.get(name)
            if spec is None:
                return Violation(ViolationCode.UNKNOWN_SKILL, f"character {slot}: unknown skill {name!r}")
            if spec.element != element:
                return Violation(
                    ViolationCode.UNKNOWN_SKILL,
                    f"character {slot}: skill {name!r} is not in the {element} pool",
                )
        costs.append(_skill_cost(list(char["skills"]), reg, element))

    worst = max(costs)
    for slot, c in enumerate(costs):
        if not budget.complies(c):
            return Violation(
                ViolationCode.BUDGET_EXCEEDED,
                f"character {slot} cost {c} exceeds per-character budget {budget.limit} "
                f"by {c - budget.limit}",
                worst,
            )
    strategy = TaStrategy(
        role=role,
        characters=tuple(
            TaCharacter(
                element=element,
                skills=tuple(char["skills"]),
                target_policy=char.get("target_policy", "first"),
                declared_cost=c,
            )
            for char, element, c in zip(doc["characters"], elements, costs)
        ),
        declared_cost=sum(costs),
    )
    return Valid(strategy, worst)


def partial_cost(doc: Any, game: GameKind, role: Role, registry: Registry | None = None) -> int:
    """Best-effort budgeted cost of a possibly invalid document (unknown parts count 0)."""
    reg = registry or load_registry()
    try:
        if game is GameKind.TOWER_DEFENSE:
            entries = doc.get("placements" if role is Role.DEFENDER else "spawns") or []
            return sum(
                reg.td_units[e["unit_name"]].cost
                for e in entries
                if isinstance(e, dict) and e.get("unit_name") in reg.td_units
            )
        if game is GameKind.BATTLE_CARD:
            mult = reg.bc_meta["gold_cost_multiplier"]
            return sum(
                reg.bc_units[p["unit_name"]].cost * (mult if p.get("tier") == "gold" else 1)
                for p in doc.get("roster") or []
                if isinstance(p, dict) and p.get("unit_name") in reg.bc_units
            )
        worst = 0
        for char in doc.get("characters") or []:
            skills = char.get("skills") if isinstance(char, dict) else None
            if isinstance(skills, list):
                worst = max(
                    worst,
                    sum(reg.ta_skills[s].cost for s in skills if isinstance(s, str) and s in reg.ta_skills),
                )
        return worst
    except (AttributeError, TypeError, KeyError):
        return 0


# -- similarity features -----------------------------------------------------


def action_tokens(doc: Any, game: GameKind) -> frozenset[str]:
    """Concrete chosen elements (units / skills) used for structural similarity."""
    try:
        if game is GameKind.TOWER_DEFENSE:
            entries = (doc.get("placements") or []) + (doc.get("spawns") or [])
            return frozenset(e["unit_name"] for e in entries)
        if game is GameKind.BATTLE_CARD:
            return frozenset(p["unit_name"] for p in doc.get("roster") or [])
        return frozenset(s for c in doc.get("characters") or [] for s in c["skills"])
    except (AttributeError, TypeError, KeyError):
        return frozenset()


def function_tags(doc: Any, game: GameKind, registry: Registry | None = None) -> frozenset[str]:
    """Strategic functions (attack/defense/support/economy) the strategy covers."""
    reg = registry or load_registry()
    tokens = action_tokens(doc, game)
    if game is GameKind.TOWER_DEFENSE:
        table = {n: u.function for n, u in reg.td_units.items()}
    elif game is GameKind.BATTLE_CARD:
        table = {n: u.function for n, u in reg.bc_units.items()}
    else:
        table = {n: s.function for n, s in reg.ta_skills.items()}
    return frozenset(table[t] for t in tokens if t in table)


def strategy_to_doc(strategy: Strategy) -> dict[str, Any]:
    """Inverse of parsing: the canonical document for a typed strategy."""
    if isinstance(strategy, TdStrategy):
        if strategy.role is Role.DEFENDER:
            return {
                "role": strategy.role.value,
                "placements": [
                    {"unit_name": p.unit_name, "x": p.x, "y": p.y} for p in strategy.placements
                ],
            }
        return {
            "role": strategy.role.value,
            "spawns": [
                {"unit_name": s.unit_name, "y": s.y, "spawn_time_ms": s.spawn_time_ms}
                for s in strategy.spawns
            ],
        }
    if isinstance(strategy, BcStrategy):
        return {
            "role": strategy.role.value,
            "roster": [
                {"unit_name": p.unit_name, "tier": p.tier, "target_priority": p.target_priority}
                for p in strategy.roster
            ],
        }
    return {
        "role": strategy.role.value,
        "characters": [
            {"element": c.element, "skills": list(c.skills), "target_policy": c.target_policy}
            for c in strategy.characters
        ],
    }
