"""Auto-battler resolution for the battle card game.

Sides alternate single-unit attacks. Each side walks its own line left to
right and wraps. There is no retaliation: only the target takes damage,
plus whatever triggered abilities add.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Any

from advgame.core import Outcome, Role, SimOutcome, trace_digest
from advgame.registry import Ability, BcUnitSpec, Registry, load_registry
from advgame.strategy import BcStrategy


@dataclass(frozen=True)
class BcConfig:
    advantage_multiplier: Fraction = Fraction(6, 5)
    attack_cap: int = 500

    def __post_init__(self) -> None:
        object.__setattr__(self, "advantage_multiplier", Fraction(str(self.advantage_multiplier)))


def apply_gold(spec: BcUnitSpec, registry: Registry | None = None) -> BcUnitSpec:
    """Gold tier: triple cost, double attack, health and numeric ability magnitudes."""
    if spec.tier == "gold":
        return spec
    reg = registry or load_registry()
    numeric = set(reg.bc_meta["numeric_params"])
    stat = reg.bc_meta["gold_stat_multiplier"]
    abilities = tuple(
        Ability(
            trigger=a.trigger,
            effect=a.effect,
            params=MappingProxyType(
                {
                    k: v * stat if k in numeric and isinstance(v, int) and not isinstance(v, bool) else v
                    for k, v in a.params.items()
                }
            ),
        )
        for a in spec.abilities
    )
    return replace(
        spec,
        cost=spec.cost * reg.bc_meta["gold_cost_multiplier"],
        attack=spec.attack * stat,
        health=spec.health * stat,
        abilities=abilities,
        tier="gold",
    )


@dataclass(eq=False)
class Minion:
    uid: int
    spec: BcUnitSpec
    side: Role
    hp: int
    max_hp: int
    attack: int
    target_priority: str = "leftmost"
    divine_shield: bool = False
    taunt: bool = False
    revive_available: bool = False
    burn: int = 0
    purchased_cost: int = 0
    killed_by: Minion | None = None

    @property
    def label(self) -> str:
        return f"{self.spec.name}#{self.uid}"

    @property
    def alive(self) -> bool:
        return self.hp > 0

    @property
    def element(self) -> str:
        return self.spec.element


def pick_target(attacker: Minion | str, enemy_line: list[Any]) -> int:
    """Index of the unit to attack: leftmost taunt if any, else by priority keyword.

    ``attacker`` may be a :class:`Minion` or a bare priority keyword. Enemy
    entries only need ``hp``, ``attack``, ``taunt`` attributes.
    """
    priority = attacker if isinstance(attacker, str) else attacker.target_priority
    living = [i for i, m in enumerate(enemy_line) if m.hp > 0]
    if not living:
        raise ValueError("no living enemy to target")
    taunts = [i for i in living if enemy_line[i].taunt]
    if taunts:
        return taunts[0]
    if priority == "lowest_hp":
        return min(living, key=lambda i: (enemy_line[i].hp, i))
    if priority == "highest_attack":
        return min(living, key=lambda i: (-enemy_line[i].attack, i))
    return living[0]


@dataclass
class Battle:
    config: BcConfig
    registry: Registry
    lines: dict[Role, list[Minion]] = field(default_factory=dict)
    pointer: dict[Role, int] = field(default_factory=lambda: {Role.INVADER: 0, Role.DEFENDER: 0})
    trace: list[dict[str, Any]] = field(default_factory=list)
    resolutions: int = 0
    next_uid: int = 0
    roster_cost: dict[Role, int] = field(default_factory=dict)

    # -- construction ------------------------------------------------------

    def make(self, spec: BcUnitSpec, side: Role, priority: str = "leftmost", cost: int = 0) -> Minion:
        m = Minion(
            uid=self.next_uid,
            spec=spec,
            side=side,
            hp=spec.health,
            max_hp=spec.health,
            attack=spec.attack,
            target_priority=priority,
            divine_shield=spec.has("divine_shield"),
            taunt=spec.has("taunt"),
            revive_available=spec.has("revive_once"),
            purchased_cost=cost,
        )
        self.next_uid += 1
        return m

    def emit(self, kind: str, attacker: str | None, target: str | None, raw: int = 0,
             multiplier: float = 1.0, dealt: int = 0) -> dict[str, Any]:
        event = {
            "step": self.resolutions,
            "kind": kind,
            "attacker": attacker,
            "target": target,
            "raw": raw,
            "multiplier": multiplier,
            "dealt": dealt,
            "deaths": [],
        }
        self.trace.append(event)
        return event

    # -- line bookkeeping --------------------------------------------------

    def remove(self, m: Minion) -> int:
        line = self.lines[m.side]
        j = line.index(m)
        del line[j]
        if j < self.pointer[m.side]:
            self.pointer[m.side] -= 1
        return j

    def insert(self, side: Role, j: int, m: Minion) -> bool:
        line = self.lines[side]
        if len(line) >= self.registry.bc_meta["max_roster"]:
            self.emit("summon_lost", None, m.spec.name)
            return False
        j = min(j, len(line))
        line.insert(j, m)
        if j < self.pointer[side]:
            self.pointer[side] += 1
        self.emit("summon", None, m.label)
        return True

    # -- damage ------------------------------------------------------------

    def multiplier(self, attacker: Minion, target: Minion) -> Fraction:
        beats = self.registry.bc_meta["element_advantage"]
        if beats.get(attacker.element) == target.element:
            return self.config.advantage_multiplier
        return Fraction(1)

    def damage(self, target: Minion, amount: int, source: Minion | None, kind: str) -> int:
        """Apply one damage instance; returns hp actually removed."""
        if amount <= 0 or not target.alive:
            return 0
        if target.divine_shield:
            target.divine_shield = False
            self.emit("shield_break", source.label if source else None, target.label)
            for m in self.lines[target.side]:
                a = m.spec.ability("gain_attack_on_shield_loss")
                if a is not None and m.alive:
                    m.attack += a.get("amount")
            self._on_damaged(target, source, kind, hp_lost=0)
            return 0
        target.hp -= amount
        if target.hp <= 0 and target.killed_by is None:
            target.killed_by = source
        if kind == "attack" and source is not None and source.spec.has("destroy_damaged") and target.hp > 0:
            target.hp = 0
            target.killed_by = source
            self.emit("destroy", source.label, target.label)
        self._on_damaged(target, source, kind, hp_lost=amount)
        return amount

    def _on_damaged(self, target: Minion, source: Minion | None, kind: str, hp_lost: int) -> None:
        if hp_lost > 0 and target.spec.has("double_attack"):
            target.attack *= 2
        if kind != "attack" or source is None or not source.alive:
            return
        burn = target.spec.ability("burn_attacker")
        if burn is not None:
            source.burn = max(source.burn, burn.get("amount"))
        shrink = target.spec.ability("reduce_attacker_attack")
        if shrink is not None:
            source.attack = max(0, source.attack - shrink.get("amount"))

    def strike(self, attacker: Minion, index: int) -> list[dict[str, Any]]:
        enemy = self.lines[attacker.side.opponent]
        main = enemy[index]
        victims = [main]
        if attacker.spec.has("cleave"):
            victims += [enemy[j] for j in (index - 1, index + 1) if 0 <= j < len(enemy) and enemy[j].alive]
        events = []
        raw = attacker.attack
        for v in victims:
            mult = self.multiplier(attacker, v)
            dealt = int(raw * mult + Fraction(1, 2))
            events.append(self.emit("attack", attacker.label, v.label, raw, float(mult), dealt))
            hp_before = v.hp
            shielded = v.divine_shield
            self.damage(v, dealt, attacker, "attack")
            excess = dealt - hp_before
            if v is main and attacker.spec.has("overkill_carry") and not shielded and excess > 0:
                self._carry(attacker, v, excess)
        return events

    def _carry(self, attacker: Minion, victim: Minion, excess: int) -> None:
        enemy = self.lines[attacker.side.opponent]
        j = enemy.index(victim) + 1
        while excess > 0:
            while j < len(enemy) and not enemy[j].alive:
                j += 1
            if j >= len(enemy):
                return
            nxt = enemy[j]
            hp_before = nxt.hp
            shielded = nxt.divine_shield
            self.emit("carry", attacker.label, nxt.label, excess, 1.0, excess)
            self.damage(nxt, excess, attacker, "attack")
            excess = 0 if shielded else excess - hp_before
            j += 1

    # -- deaths ------------------------------------------------------------

    def process_deaths(self, acting: Role) -> list[str]:
        died: list[str] = []
        while True:
            batch = [m for side in (acting.opponent, acting) for m in self.lines[side] if not m.alive]
            if not batch:
                return died
            for m in batch:
                if m not in self.lines[m.side]:
                    continue
                if m.revive_available:
                    m.revive_available = False
                    m.hp = m.max_hp
                    m.killed_by = None
                    self.emit("revive", None, m.label)
                    continue
                j = self.remove(m)
                died.append(m.label)
                self.emit("death", m.killed_by.label if m.killed_by else None, m.label)
                self._deathrattle(m, j)

    def _deathrattle(self, m: Minion, j: int) -> None:
        for a in m.spec.abilities:
            if a.trigger != "on_death":
                continue
            if a.effect == "damage_killer":
                killer = m.killed_by
                if killer is not None and killer.alive and killer in self.lines[killer.side]:
                    self.emit("deathrattle", m.label, killer.label, a.get("amount"), 1.0, a.get("amount"))
                    self.damage(killer, a.get("amount"), m, "deathrattle")
            elif a.effect == "damage_all_enemies":
                for e in list(self.lines[m.side.opponent]):
                    if e.alive:
                        self.emit("deathrattle", m.label, e.label, a.get("amount"), 1.0, a.get("amount"))
                        self.damage(e, a.get("amount"), m, "deathrattle")
            elif a.effect == "heal_all_friendly":
                for f in self.lines[m.side]:
                    if f.alive:
                        f.hp = min(f.max_hp, f.hp + a.get("amount"))
                self.emit("heal", m.label, None, a.get("amount"))
            elif a.effect == "summon":
                self.insert(m.side, j, self._token(a, m.side))

    def _token(self, a: Ability, side: Role) -> Minion:
        name = a.get("unit")
        if a.get("attack") is None:
            spec = self.registry.bc_units[name]
        else:
            spec = BcUnitSpec(
                name=name,
                side=side.value,
                attack=a.get("attack"),
                health=a.get("health"),
                cost=0,
                element="Neutral",
                abilities=(Ability("passive", "divine_shield"),) if a.get("divine_shield") else (),
            )
        return self.make(spec, side)

    # -- game flow ---------------------------------------------------------

    def start_of_game(self) -> None:
        for side in (Role.INVADER, Role.DEFENDER):
            line = self.lines[side]
            for idx, m in enumerate(list(line)):
                for a in m.spec.abilities:
                    if a.trigger != "start_of_game":
                        continue
                    others = [f for f in line if f is not m]
                    if a.effect == "buff_element_allies":
                        for f in others:
                            if f.element == a.get("element"):
                                self._buff(f, a.get("attack", 0), a.get("health", 0))
                    elif a.effect == "buff_all_allies":
                        for f in others:
                            self._buff(f, a.get("attack", 0), a.get("health", 0))
                    elif a.effect == "buff_adjacent":
                        for j in (idx - 1, idx + 1):
                            if 0 <= j < len(line):
                                f = line[j]
                                self._buff(f, a.get("attack", 0), 0)
                                if a.get("divine_shield"):
                                    f.divine_shield = True
                    elif a.effect == "health_per_friendly":
                        self._buff(m, 0, a.get("amount") * len(others))
                    self.emit("start_of_game", m.label, None)

    @staticmethod
    def _buff(m: Minion, attack: int, health: int) -> None:
        m.attack += attack
        m.hp += health
        m.max_hp += health

    def take_turn(self, side: Role) -> None:
        line = self.lines[side]
        idx = self.pointer[side] % len(line)
        self.pointer[side] = idx
        attacker = line[idx]
        self.resolutions += 1

        if attacker.burn:
            self.emit("burn", None, attacker.label, attacker.burn, 1.0, attacker.burn)
            self.damage(attacker, attacker.burn, None, "burn")
            self.process_deaths(side)
            if not attacker.alive or attacker not in line:
                return

        for a in attacker.spec.abilities:
            if a.trigger != "on_attack":
                continue
            if a.effect == "gain_attack":
                attacker.attack += a.get("amount")
            elif a.effect == "gain_health":
                attacker.hp += a.get("amount")
                attacker.max_hp += a.get("amount")
            elif a.effect == "summon":
                self.insert(side, line.index(attacker), self._token(a, side))

        swings = 2 if attacker.spec.has("attack_twice") else 1
        for _ in range(swings):
            enemy = self.lines[side.opponent]
            if not enemy or not attacker.alive:
                break
            events = self.strike(attacker, pick_target(attacker, enemy))
            events[0]["deaths"] = self.process_deaths(side)
            if attacker not in line:
                break

        if attacker in line:
            lose = attacker.spec.ability("lose_attack")
            if lose is not None:
                attacker.attack = max(0, attacker.attack - lose.get("amount"))
            self.pointer[side] = line.index(attacker) + 1

    def phi(self) -> dict[Role, float]:
        share = {}
        for side in (Role.INVADER, Role.DEFENDER):
            total = self.roster_cost[side]
            kept = sum(m.purchased_cost * m.hp / m.max_hp for m in self.lines[side] if m.alive)
            share[side] = kept / total if total else 0.0
        value = share[Role.INVADER] - share[Role.DEFENDER]
        return {Role.INVADER: value + 0.0, Role.DEFENDER: -value + 0.0}


def resolve_battle(
    invader: BcStrategy,
    defender: BcStrategy,
    config: BcConfig | None = None,
    registry: Registry | None = None,
) -> SimOutcome:
    reg = registry or load_registry()
    battle = Battle(config=config or BcConfig(), registry=reg)
    for side, strategy in ((Role.INVADER, invader), (Role.DEFENDER, defender)):
        line = []
        for pick in strategy.roster:
            spec = reg.bc_units[pick.unit_name]
            if pick.tier == "gold":
                spec = apply_gold(spec, reg)
            line.append(battle.make(spec, side, pick.target_priority, spec.cost))
        battle.lines[side] = line
        battle.roster_cost[side] = sum(m.purchased_cost for m in line)

    battle.start_of_game()
    n_inv, n_def = len(battle.lines[Role.INVADER]), len(battle.lines[Role.DEFENDER])
    side = Role.INVADER if n_inv >= n_def else Role.DEFENDER
    battle.emit("initiative", side.value, None)

    winner, reason = None, ""
    while winner is None:
        inv_alive = bool(battle.lines[Role.INVADER])
        def_alive = bool(battle.lines[Role.DEFENDER])
        if not def_alive:
            winner, reason = Role.INVADER, "simultaneous_wipe" if not inv_alive else "eliminated"
            break
        if not inv_alive:
            winner, reason = Role.DEFENDER, "eliminated"
            break
        if battle.resolutions >= battle.config.attack_cap:
            winner, reason = Role.DEFENDER, "attack_cap"
            break
        battle.take_turn(side)
        side = side.opponent

    battle.emit("end", winner.value, reason)
    outcome = Outcome(
        winner=winner,
        terminated_at=battle.resolutions,
        trace_digest=trace_digest(battle.trace),
        reason=reason,
    )
    return SimOutcome(outcome=outcome, trace=battle.trace, phi=battle.phi())
