"""Scripted bot policies used as stand-in players for tests and tournaments.

Every policy except ``overspender`` only emits documents that pass
validation under the budget it is handed. All randomness is drawn from a
:class:`random.Random` seeded by (policy seed, match seed, role, round), so
a rerun reproduces every document.
"""

from __future__ import annotations

import functools
import random
from typing import Any, Callable

from advgame.core import GameKind, Role
from advgame.providers import Proposal, ProposalRequest, derive_seed
from advgame.registry import Registry, load_registry

Policy = Callable[[ProposalRequest, int], Proposal]

TD_SPAWN_WINDOW_MS = 20_000


def _rng(request: ProposalRequest, seed: int, salt: str = "") -> random.Random:
    return random.Random(derive_seed(seed, request.seed, request.role.value, request.round_index, salt))


# -- document generators ------------------------------------------------------


def random_strategy(
    game: GameKind, role: Role, budget: int, rng: random.Random, registry: Registry | None = None
) -> dict[str, Any]:
    """A random document that validates under ``budget`` (empty if nothing fits)."""
    reg = registry or load_registry()
    if game is GameKind.TOWER_DEFENSE:
        return _random_td(role, budget, rng, reg)
    if game is GameKind.BATTLE_CARD:
        return _random_bc(role, budget, rng, reg)
    return _random_ta(role, budget, rng, reg)


def _random_td(role: Role, budget: int, rng: random.Random, reg: Registry) -> dict[str, Any]:
    cols, rows = reg.td_grid["columns"], reg.td_grid["rows"]
    side = "human" if role is Role.DEFENDER else "demon"
    units = sorted(reg.td_side(side).values(), key=lambda u: u.name)
    remaining = budget
    entries: list[dict[str, Any]] = []
    cells = [(x, y) for x in range(cols) for y in range(rows)]
    rng.shuffle(cells)
    for _ in range(rng.randint(1, 12)):
        affordable = [u for u in units if u.cost <= remaining]
        if not affordable:
            break
        u = rng.choice(affordable)
        if role is Role.DEFENDER:
            if not cells:
                break
            x, y = cells.pop()
            entries.append({"unit_name": u.name, "x": x, "y": y})
        else:
            t = rng.randrange(0, TD_SPAWN_WINDOW_MS // 50 + 1) * 50
            entries.append({"unit_name": u.name, "y": rng.randrange(rows), "spawn_time_ms": t})
        remaining -= u.cost
    key = "placements" if role is Role.DEFENDER else "spawns"
    return {"role": role.value, key: entries}


def _random_bc(role: Role, budget: int, rng: random.Random, reg: Registry) -> dict[str, Any]:
    mult = reg.bc_meta["gold_cost_multiplier"]
    units = sorted(reg.bc_side(role.value).values(), key=lambda u: u.name)
    remaining = budget
    roster: list[dict[str, Any]] = []
    for _ in range(rng.randint(1, reg.bc_meta["max_roster"])):
        options = [(u, "bronze") for u in units if u.cost <= remaining]
        options += [(u, "gold") for u in units if u.cost * mult <= remaining]
        if not options:
            break
        u, tier = rng.choice(options)
        roster.append(
            {
                "unit_name": u.name,
                "tier": tier,
                "target_priority": rng.choice(("leftmost", "lowest_hp", "highest_attack")),
            }
        )
        remaining -= u.cost * (mult if tier == "gold" else 1)
    if not roster:  # an empty roster is malformed; fall back to the cheapest unit
        cheapest = min(units, key=lambda u: (u.cost, u.name))
        roster.append({"unit_name": cheapest.name, "tier": "bronze", "target_priority": "leftmost"})
    return {"role": role.value, "roster": roster}


def _random_ta(role: Role, budget: int, rng: random.Random, reg: Registry) -> dict[str, Any]:
    characters = []
    for element in reg.faction_elements(role.value):
        pool = sorted(reg.ta_pool(element).values(), key=lambda s: s.name)
        combos = [
            (a, b, c)
            for i, a in enumerate(pool)
            for j, b in enumerate(pool)
            for k, c in enumerate(pool)
            if len({i, j, k}) == 3 and a.cost + b.cost + c.cost <= budget
        ]
        if not combos:  # nothing fits; the cheapest skill three times is the best effort
            cheapest = min(pool, key=lambda s: (s.cost, s.name))
            combos = [(cheapest, cheapest, cheapest)]
        skills = rng.choice(combos)
        characters.append(
            {
                "element": element,
                "skills": [s.name for s in skills],
                "target_policy": rng.choice(("first", "lowest_hp", "highest_threat")),
            }
        )
    return {"role": role.value, "characters": characters}


def greedy_strategy(game: GameKind, role: Role, budget: int, registry: Registry | None = None) -> dict[str, Any]:
    """Spend as much of the budget as possible, priciest units first."""
    reg = registry or load_registry()
    if game is GameKind.TOWER_DEFENSE:
        cols, rows = reg.td_grid["columns"], reg.td_grid["rows"]
        side = "human" if role is Role.DEFENDER else "demon"
        units = sorted(reg.td_side(side).values(), key=lambda u: (-u.cost, u.name))
        remaining, entries = budget, []
        for i in range(cols * rows):
            pick = next((u for u in units if u.cost <= remaining), None)
            if pick is None:
                break
            remaining -= pick.cost
            if role is Role.DEFENDER:
                entries.append({"unit_name": pick.name, "x": i // rows, "y": i % rows})
            else:
                entries.append({"unit_name": pick.name, "y": i % rows, "spawn_time_ms": (i // rows) * 1000})
        key = "placements" if role is Role.DEFENDER else "spawns"
        return {"role": role.value, key: entries}
    if game is GameKind.BATTLE_CARD:
        units = sorted(reg.bc_side(role.value).values(), key=lambda u: (-u.cost, u.name))
        remaining, roster = budget, []
        while len(roster) < reg.bc_meta["max_roster"]:
            pick = next((u for u in units if u.cost <= remaining), None)
            if pick is None:
                break
            remaining -= pick.cost
            roster.append({"unit_name": pick.name, "tier": "bronze", "target_priority": "leftmost"})
        if not roster:
            cheapest = min(units, key=lambda u: (u.cost, u.name))
            roster.append({"unit_name": cheapest.name, "tier": "bronze", "target_priority": "leftmost"})
        return {"role": role.value, "roster": roster}
    characters = []
    for element in reg.faction_elements(role.value):
        pool = sorted(reg.ta_pool(element).values(), key=lambda s: (-s.cost, s.name))
        best = None
        for i, a in enumerate(pool):
            for j, b in enumerate(pool[i + 1 :], i + 1):
                for c in pool[j + 1 :]:
                    total = a.cost + b.cost + c.cost
                    if total <= budget and (best is None or total > best[0]):
                        best = (total, (a.name, b.name, c.name))
        skills = list(best[1]) if best else [pool[-1].name] * 3
        characters.append({"element": element, "skills": skills, "target_policy": "first"})
    return {"role": role.value, "characters": characters}


def overspend_strategy(game: GameKind, role: Role, budget: int, registry: Registry | None = None) -> dict[str, Any]:
    """A structurally valid document whose cost exceeds ``budget``."""
    reg = registry or load_registry()
    if game is GameKind.TOWER_DEFENSE:
        cols, rows = reg.td_grid["columns"], reg.td_grid["rows"]
        side = "human" if role is Role.DEFENDER else "demon"
        top = max(reg.td_side(side).values(), key=lambda u: (u.cost, u.name))
        entries, spent, i = [], 0, 0
        while spent <= budget and (role is Role.INVADER or i < cols * rows):
            if role is Role.DEFENDER:
                entries.append({"unit_name": top.name, "x": i // rows, "y": i % rows})
            else:
                entries.append({"unit_name": top.name, "y": i % rows, "spawn_time_ms": 0})
            spent += top.cost
            i += 1
        key = "placements" if role is Role.DEFENDER else "spawns"
        return {"role": role.value, key: entries}
    if game is GameKind.BATTLE_CARD:
        top = max(reg.bc_side(role.value).values(), key=lambda u: (u.cost, u.name))
        n = reg.bc_meta["max_roster"]
        return {
            "role": role.value,
            "roster": [{"unit_name": top.name, "tier": "gold", "target_priority": "leftmost"}] * n,
        }
    characters = []
    for element in reg.faction_elements(role.value):
        pool = sorted(reg.ta_pool(element).values(), key=lambda s: (-s.cost, s.name))
        characters.append(
            {"element": element, "skills": [s.name for s in pool[:3]], "target_policy": "first"}
        )
    return {"role": role.value, "characters": characters}


# -- policies -------------------------------------------------------------------


def greedy_cost(request: ProposalRequest, seed: int) -> Proposal:
    return Proposal(strategy=greedy_strategy(request.game, request.role, request.budget))


def random_valid(request: ProposalRequest, seed: int) -> Proposal:
    rng = _rng(request, seed)
    return Proposal(strategy=random_strategy(request.game, request.role, request.budget, rng))


def keeper(request: ProposalRequest, seed: int) -> Proposal:
    if request.history:
        return Proposal(keep=True)
    return random_valid(request, seed)


def oscillator(request: ProposalRequest, seed: int) -> Proposal:
    """Submit a different valid document every round."""
    previous = request.previous
    for attempt in range(64):
        rng = _rng(request, seed, salt=f"osc{attempt}")
        doc = random_strategy(request.game, request.role, request.budget, rng)
        if doc != previous:
            return Proposal(strategy=doc)
    # pathological tiny budgets: alternate with the greedy document
    greedy = greedy_strategy(request.game, request.role, request.budget)
    return Proposal(strategy=greedy if greedy != previous else doc)


def overspender(request: ProposalRequest, seed: int) -> Proposal:
    return Proposal(strategy=overspend_strategy(request.game, request.role, request.budget))


POLICIES: dict[str, Policy] = {
    "greedy_cost": greedy_cost,
    "random_valid": random_valid,
    "keeper": keeper,
    "oscillator": oscillator,
    "overspender": overspender,
}


def get_policy(policy_id: str) -> Policy:
    """Look up a policy; ``random_valid(7)`` style ids carry an inline seed."""
    name = policy_id.split("(", 1)[0].strip()
    if name not in POLICIES:
        raise ValueError(f"unknown bot policy {policy_id!r}; choose from {sorted(POLICIES)}")
    fn = POLICIES[name]
    if "(" in policy_id:
        inline = int(policy_id.split("(", 1)[1].rstrip(")").strip())
        return functools.partial(_offset, fn, inline)
    return fn


def _offset(fn: Policy, inline: int, request: ProposalRequest, seed: int) -> Proposal:
    return fn(request, seed + inline)
