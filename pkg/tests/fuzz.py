"""Seeded corpus of malformed and adversarial strategy documents."""

from __future__ import annotations

import copy
import random
from typing import Any

from advgame.bots import random_strategy
from advgame.core import GameKind, Role

LISTS = {GameKind.TOWER_DEFENSE: {Role.DEFENDER: "placements", Role.INVADER: "spawns"},
         GameKind.BATTLE_CARD: {Role.DEFENDER: "roster", Role.INVADER: "roster"},
         GameKind.TURN_ATTRIBUTE: {Role.DEFENDER: "characters", Role.INVADER: "characters"}}

REQUIRED = {"unit_name", "x", "y", "spawn_time_ms", "skills"}

JUNK = [None, True, -1, 2**70, 1.5, float("nan"), "", "x" * 500, "\u0000", [], {}, [[[]]], {"a": {"b": None}}, "-1"]


def _junk(rng: random.Random) -> Any:
    return copy.deepcopy(rng.choice(JUNK))


def _seed_doc(game: GameKind, role: Role, rng: random.Random) -> dict:
    doc = random_strategy(game, role, 10**6, rng)
    key = LISTS[game][role]
    while not doc.get(key):
        doc = random_strategy(game, role, 10**6, rng)
    return doc


def _break_item(item: dict, rng: random.Random) -> None:
    field = rng.choice([k for k in sorted(item) if k in REQUIRED])
    choice = rng.randrange(4)
    if choice == 0:
        del item[field]
    elif choice == 1:
        item[field] = rng.choice([None, [], {}, 1.5, "??", True]) if field != "unit_name" else "NoSuchUnit"
    elif choice == 2:
        item["surprise"] = _junk(rng)
    else:
        for k, v in item.items():
            if isinstance(v, int) and not isinstance(v, bool):
                item[k] = rng.choice([-1, 10**9])
                return
        item["unit_name" if "unit_name" in item else "skills"] = "NoSuchThing"


def adversarial(game: GameKind, role: Role, rng: random.Random) -> Any:
    kind = rng.randrange(7)
    if kind == 0:
        return _junk(rng)
    doc = _seed_doc(game, role, rng)
    key = LISTS[game][role]
    if kind == 1:
        doc.pop(key)
    elif kind == 2:
        doc["role"] = role.opponent.value
    elif kind == 3:
        doc[rng.choice(["extra", "__proto__", "budget"])] = _junk(rng)
    elif kind == 4:
        doc[key] = rng.choice([None, "list", 3, {"0": doc[key]}])
    elif kind == 5:
        _break_item(rng.choice(doc[key]), rng)
    else:
        nested: Any = doc[key]
        for _ in range(rng.randint(50, 3000)):
            nested = [nested]
        doc[key] = nested
    return doc


def corpus(n: int, seed: int = 0):
    rng = random.Random(seed)
    games, roles = list(GameKind), list(Role)
    for _ in range(n):
        game, role = rng.choice(games), rng.choice(roles)
        yield game, role, adversarial(game, role, rng)
