"""Turn-based attribute duels: three characters a side, looping skill lists.

Direct skill damage runs through one pipeline and is floored once at the
end::

    base -> caster bonuses (residual_warmth x1.3, divine_sword +20)
         -> product of percentage modifiers (target taken%, caster attack%)
         -> elemental multiplier
         -> flat reduction (angelic_sanctuary, floor 0)
         -> floor -> quicksand deferral -> faith_emblem -> shields -> hp

Indirect damage (burning, poison, reflects, counters, deferred hits) skips
the modifiers and goes straight to shields then hp. Indirect damage never
triggers reflects, so nothing chains.

Status durations count round ends. Damage/heal-over-time statuses tick at
the end of the round they were applied in; every other timed status starts
counting at the end of the following round, so a one-round effect covers
the opponent's next turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from advgame.core import Outcome, Role, SimOutcome, trace_digest
from advgame.registry import Registry, SkillSpec, load_registry
from advgame.strategy import TaStrategy

Element = str
ELEMENTS: tuple[Element, ...] = ("Fire", "Water", "Dark", "Wood", "Earth", "Light")

PERIODIC = {"burning", "poison_vine", "bud_healing"}
NEGATIVE = {
    "burning",
    "poison_vine",
    "parasitic_seed",
    "quicksand_trap",
    "ice_branded",
    "night_ambush",
    "fear_whisper",
    "luminous_dispel",
}
# statuses that modify damage the holder takes, in percent
TAKEN_PCT = {"ice_branded", "night_ambush", "fear_whisper", "granite_barrier"}


@dataclass(frozen=True)
class TaConfig:
    max_hp: int = 100
    round_cap: int = 50


def elemental_multiplier(attacker: Element, target: Element, registry: Registry | None = None) -> Fraction:
    reg = registry or load_registry()
    eff = reg.ta_meta["effectiveness"]
    if eff["beats"].get(attacker) == target:
        return Fraction(eff["effective"])
    if eff["beats"].get(target) == attacker:
        return Fraction(eff["resisted"])
    for a, b in eff["counter_pairs"]:
        if {attacker, target} == {a, b} and attacker != target:
            return Fraction(eff["counter"])
    return Fraction(1)


@dataclass
class Status:
    kind: str
    rounds_left: int | None  # None = permanent
    magnitude: int = 0
    layers: int = 1
    reflect: int = 0
    charges: int = 0
    fresh: bool = True

    @property
    def negative(self) -> bool:
        return self.kind in NEGATIVE

    def label(self) -> str:
        return f"{self.kind}x{self.layers}" if self.layers != 1 else self.kind


@dataclass(eq=False)
class Character:
    side: Role
    slot: int
    element: Element
    max_hp: int
    hp: int
    skills: tuple[str, ...]
    target_policy: str = "first"
    loadout_cost: int = 0
    cursor: int = 0
    statuses: list[Status] = field(default_factory=list)
    stored_damage: int = 0
    deferred: list[tuple[int, int]] = field(default_factory=list)  # (due round, amount)

    @property
    def label(self) -> str:
        return f"{self.side.value[0].upper()}{self.slot}"

    @property
    def alive(self) -> bool:
        return self.hp > 0

    @property
    def shield_pool(self) -> int:
        return sum(s.magnitude for s in self.statuses if s.kind == "shield")

    def status(self, kind: str) -> Status | None:
        for s in self.statuses:
            if s.kind == kind:
                return s
        return None

    def layers(self, kind: str) -> int:
        s = self.status(kind)
        return s.layers if s else 0

    def drop(self, kind: str) -> None:
        self.statuses = [s for s in self.statuses if s.kind != kind]


@dataclass
class Duel:
    config: TaConfig
    registry: Registry
    teams: dict[Role, list[Character]]
    round: int = 0
    trace: list[dict[str, Any]] = field(default_factory=list)

    # -- helpers -----------------------------------------------------------

    def living(self, side: Role) -> list[Character]:
        return [c for c in self.teams[side] if c.alive]

    def pick_target(self, actor: Character) -> Character | None:
        enemies = self.living(actor.side.opponent)
        if not enemies:
            return None
        if actor.target_policy == "lowest_hp":
            return min(enemies, key=lambda c: (c.hp, c.slot))
        if actor.target_policy == "highest_threat":
            return min(enemies, key=lambda c: (-c.loadout_cost, c.slot))
        return enemies[0]

    def apply_status(self, who: Character, status: Status) -> str:
        if status.kind == "burning":
            existing = who.status("burning")
            if existing is not None:
                existing.layers += status.layers
                existing.rounds_left = max(existing.rounds_left or 0, status.rounds_left or 0)
                return existing.label()
        if status.kind not in ("shield", "tidal_surge"):
            who.drop(status.kind)
        if status.kind == "tidal_surge":
            existing = who.status("tidal_surge")
            if existing is not None:
                existing.layers += status.layers
                return existing.label()
        who.statuses.append(status)
        return status.label()

    def heal(self, who: Character, amount: int) -> int:
        """Heal ``who``; returns the overflow above max hp."""
        totem = who.status("life_totem")
        if totem is not None:
            amount = amount * (100 + totem.magnitude) // 100
        room = who.max_hp - who.hp
        gained = min(room, amount)
        who.hp += gained
        return amount - gained

    def _absorb(self, who: Character, amount: int) -> int:
        for s in who.statuses:
            if s.kind != "shield" or amount <= 0:
                continue
            used = min(s.magnitude, amount)
            s.magnitude -= used
            amount -= used
        who.statuses = [s for s in who.statuses if not (s.kind == "shield" and s.magnitude <= 0)]
        return amount

    def indirect(self, who: Character, amount: int) -> int:
        if amount <= 0 or not who.alive:
            return 0
        if who.element == "Earth":
            who.stored_damage += amount
        who.hp -= self._absorb(who, amount)
        return amount

    # -- direct damage -----------------------------------------------------

    def direct(
        self, caster: Character, target: Character, base: int, skill: SkillSpec, penetration: bool = False
    ) -> tuple[int, Fraction]:
        elem = elemental_multiplier(caster.element, target.element, self.registry)
        if penetration:
            dealt = base
            if target.element == "Earth":
                target.stored_damage += dealt
            target.hp -= dealt
            self._reflect(caster, target, dealt)
            return dealt, Fraction(1)

        x = Fraction(base)
        warmth = caster.status("residual_warmth")
        if warmth is not None and skill.element == "Fire":
            x *= Fraction(100 + warmth.magnitude, 100)
            caster.drop("residual_warmth")
        sword = caster.status("divine_sword")
        if sword is not None:
            x += sword.magnitude
            caster.drop("divine_sword")
        for s in target.statuses:
            if s.kind in TAKEN_PCT:
                x *= Fraction(100 + s.magnitude, 100)
        weak = caster.status("luminous_dispel")
        if weak is not None:
            x *= Fraction(100 + weak.magnitude, 100)
        x *= elem
        sanctuary = target.status("angelic_sanctuary")
        if sanctuary is not None:
            x = max(Fraction(0), x - sanctuary.magnitude)
        dealt = math.floor(x)

        trap = caster.status("quicksand_trap")
        if trap is not None and dealt > 0:
            delayed = dealt * trap.magnitude // 100
            dealt -= delayed
            if delayed:
                target.deferred.append((self.round + 1, delayed))
            trap.charges -= 1
            self.indirect(caster, trap.reflect)
            if trap.charges <= 0:
                caster.drop("quicksand_trap")

        emblem = target.status("faith_emblem")
        if emblem is not None and dealt > 0:
            reduced = dealt * emblem.magnitude // 100
            dealt -= reduced
            target.drop("faith_emblem")
            self.heal(target, reduced)
            self.indirect(caster, emblem.reflect)

        if target.element == "Earth":
            target.stored_damage += dealt
        target.hp -= self._absorb(target, dealt)
        self._reflect(caster, target, dealt)
        return dealt, elem

    def _reflect(self, caster: Character, target: Character, dealt: int) -> None:
        if dealt <= 0:
            return
        link = target.status("divine_link")
        if link is not None:
            target.drop("divine_link")
            self.indirect(caster, dealt)
        curtain = target.status("hell_curtain")
        if curtain is not None:
            target.drop("hell_curtain")
            self.indirect(caster, min(curtain.reflect, dealt))
        for s in target.statuses:
            if s.kind == "shield" and s.reflect:
                self.indirect(caster, s.reflect)
                break

    # -- skills ------------------------------------------------------------

    def cast(self, actor: Character) -> dict[str, Any]:
        name = actor.skills[actor.cursor]
        actor.cursor = (actor.cursor + 1) % len(actor.skills)
        skill = self.registry.ta_skills[name]
        event = {
            "round": self.round,
            "actor_slot": actor.label,
            "skill": name,
            "target_slot": None,
            "base": 0,
            "multiplier": 1.0,
            "dealt": 0,
            "statuses_applied": [],
        }
        handler = getattr(self, f"_skill_{name}")
        handler(actor, skill, event)
        return event

    def _hit(self, actor: Character, skill: SkillSpec, event: dict[str, Any], base: int,
             target: Character | None = None, penetration: bool = False) -> tuple[Character | None, int]:
        target = target or self.pick_target(actor)
        if target is None:
            return None, 0
        dealt, mult = self.direct(actor, target, base, skill, penetration)
        seed = actor.status("parasitic_seed")
        if seed is not None:
            self.indirect(actor, seed.reflect)
        event.update(target_slot=target.label, base=base, multiplier=float(mult), dealt=dealt)
        return target, dealt

    def _debuff(self, actor: Character, event: dict[str, Any], status: Status) -> Character | None:
        target = self.pick_target(actor)
        if target is None:
            return None
        event["target_slot"] = event["target_slot"] or target.label
        event["statuses_applied"].append(f"{target.label}:{self.apply_status(target, status)}")
        return target

    def _buff(self, actor: Character, event: dict[str, Any], status: Status) -> None:
        event["statuses_applied"].append(f"{actor.label}:{self.apply_status(actor, status)}")

    # Fire
    def _skill_flame_splash(self, a, s, e):
        target, _ = self._hit(a, s, e, s["damage"])
        if target is not None:
            self._debuff_on(target, e, Status("burning", s["burning_rounds"], s["burning_per_layer"], s["burning_layers"]))

    def _skill_residual_warmth(self, a, s, e):
        self._buff(a, e, Status("residual_warmth", s["rounds"], s["fire_bonus_pct"]))

    def _skill_burst_flame_bomb(self, a, s, e):
        target = self.pick_target(a)
        if target is not None:
            self._hit(a, s, e, s["damage"] + s["per_burning_layer"] * target.layers("burning"), target)

    def _skill_flame_whirlwind(self, a, s, e):
        self._debuff(a, e, Status("burning", s["burning_rounds"], s["burning_per_layer"], s["burning_layers"]))

    def _skill_magma_eruption(self, a, s, e):
        target = self.pick_target(a)
        if target is not None:
            self._hit(a, s, e, s["damage"] + s["per_burning_layer"] * target.layers("burning"), target)
            target.drop("burning")

    def _skill_hell_curtain(self, a, s, e):
        self._hit(a, s, e, s["damage"])
        self._buff(a, e, Status("hell_curtain", s["rounds"], reflect=s["reflect"]))

    # Water
    def _skill_stream_pierce(self, a, s, e):
        self._hit(a, s, e, s["damage"])
        self._buff(a, e, Status("tidal_surge", None, layers=s["tidal_layers"]))

    def _skill_water_barrier(self, a, s, e):
        self._buff(a, e, Status("shield", s["rounds"], s["shield"]))
        self._buff(a, e, Status("tidal_surge", None, layers=s["tidal_layers"]))

    def _skill_whirlpool_strangle(self, a, s, e):
        self._hit(a, s, e, s["damage"] + s["per_tidal_layer"] * a.layers("tidal_surge"))

    def _skill_ice_branded(self, a, s, e):
        target, _ = self._hit(a, s, e, s["damage"])
        if target is not None:
            self._debuff_on(target, e, Status("ice_branded", s["rounds"], s["vulnerability_pct"]))

    def _skill_tsunami_ending(self, a, s, e):
        self._hit(a, s, e, s["damage"] + s["per_tidal_layer"] * a.layers("tidal_surge"))
        a.drop("tidal_surge")

    def _skill_abyss_resonance(self, a, s, e):
        layers = a.layers("tidal_surge")
        self._hit(a, s, e, s["per_tidal_layer"] * layers)
        if layers:
            self._buff(a, e, Status("shield", s["rounds"], s["shield_per_layer"] * layers))

    # Dark
    def _skill_shadow_claw(self, a, s, e):
        _, dealt = self._hit(a, s, e, s["damage"])
        self.heal(a, dealt * s["lifesteal_pct"] // 100)

    def _skill_fear_whisper(self, a, s, e):
        self._debuff(a, e, Status("fear_whisper", s["rounds"], s["damage_taken_pct"]))

    def _skill_soul_siphon(self, a, s, e):
        target = self.pick_target(a)
        if target is not None:
            base = s["damage"]
            if target.hp * 100 < s["execute_threshold_pct"] * target.max_hp:
                base += s["execute_bonus"]
            self._hit(a, s, e, base, target)

    def _skill_night_ambush(self, a, s, e):
        target, _ = self._hit(a, s, e, s["damage"])
        if target is not None:
            self._debuff_on(target, e, Status("night_ambush", s["rounds"], s["vulnerability_pct"]))

    def _skill_final_announcment(self, a, s, e):
        target = self.pick_target(a)
        if target is not None:
            lost_tenths = (target.max_hp - target.hp) * 10 // target.max_hp
            self._hit(a, s, e, s["damage"] + s["per_10pct_lost"] * lost_tenths, target)

    def _skill_void_assimilation(self, a, s, e):
        if self.pick_target(a) is None:
            return
        sacrificed = a.hp * s["sacrifice_pct"] // 100
        a.hp -= sacrificed
        self._hit(a, s, e, s["penetration_factor"] * sacrificed, penetration=True)

    # Wood
    def _skill_bud_healing(self, a, s, e):
        self._buff(a, e, Status("bud_healing", s["rounds"], s["heal_per_round"]))

    def _skill_parasitic_seed(self, a, s, e):
        target, _ = self._hit(a, s, e, s["damage"])
        if target is not None:
            self._debuff_on(target, e, Status("parasitic_seed", s["rounds"], reflect=s["counter"]))

    def _skill_life_totem(self, a, s, e):
        self.heal(a, s["heal"])
        self._buff(a, e, Status("life_totem", s["rounds"], s["healing_bonus_pct"]))

    def _skill_natural_purification(self, a, s, e):
        a.statuses = [st for st in a.statuses if not st.negative]
        self._hit(a, s, e, s["damage"])

    def _skill_forest_reincarnation(self, a, s, e):
        excess = self.heal(a, s["heal"])
        shield = excess * s["overheal_shield_pct"] // 100
        if shield:
            self._buff(a, e, Status("shield", s["rounds"], shield))
        self._hit(a, s, e, s["damage"])

    def _skill_poison_vine(self, a, s, e):
        self._debuff(a, e, Status("poison_vine", s["rounds"], s["damage_per_round"]))

    # Earth
    def _skill_rock_armor(self, a, s, e):
        self._buff(a, e, Status("shield", s["rounds"], s["shield"], reflect=s["reflect"]))

    def _skill_earth_shock(self, a, s, e):
        self._hit(a, s, e, s["damage"])

    def _skill_granite_barrier(self, a, s, e):
        self._buff(a, e, Status("granite_barrier", s["rounds"], s["damage_taken_pct"]))

    def _skill_quicksand_trap(self, a, s, e):
        self._debuff(
            a, e, Status("quicksand_trap", s["rounds"], s["delay_pct"], reflect=s["trigger_damage"], charges=s["charges"])
        )

    def _skill_earth_pulse(self, a, s, e):
        lost_tenths = (a.max_hp - a.hp) * 10 // a.max_hp
        amount = s["shield_per_10pct_lost"] * lost_tenths
        if amount:
            self._buff(a, e, Status("shield", None, amount))

    def _skill_core_rebound(self, a, s, e):
        if self.pick_target(a) is None:
            return
        base = a.stored_damage * s["stored_pct"] // 100
        a.stored_damage = 0
        self._hit(a, s, e, base)

    # Light
    def _skill_holy_glimmer(self, a, s, e):
        for st in a.statuses:
            if st.negative:
                a.statuses.remove(st)
                break
        self.heal(a, s["heal"])
        self._hit(a, s, e, s["damage"])

    def _skill_faith_emblem(self, a, s, e):
        self._buff(a, e, Status("faith_emblem", s["rounds"], s["reduce_pct"], reflect=s["counter"]))

    def _skill_divine_link(self, a, s, e):
        self._buff(a, e, Status("divine_link", s["rounds"]))

    def _skill_luminous_dispel(self, a, s, e):
        target = self.pick_target(a)
        if target is None:
            return
        for st in reversed(target.statuses):
            if not st.negative and st.kind != "tidal_surge":
                target.statuses.remove(st)
                break
        self._debuff_on(target, e, Status("luminous_dispel", s["rounds"], s["attack_pct"]))

    def _skill_angelic_sanctuary(self, a, s, e):
        self._buff(a, e, Status("angelic_sanctuary", s["rounds"], s["flat_reduction"]))

    def _skill_divine_sword(self, a, s, e):
        self._hit(a, s, e, s["damage"])
        self._buff(a, e, Status("divine_sword", None, s["next_skill_bonus"]))

    def _debuff_on(self, target: Character, event: dict[str, Any], status: Status) -> None:
        if not target.alive:
            return
        event["target_slot"] = event["target_slot"] or target.label
        event["statuses_applied"].append(f"{target.label}:{self.apply_status(target, status)}")

    # -- round structure ---------------------------------------------------

    def status_phase(self, who: Character) -> None:
        apply_status_phase(who, self)

    def winner(self) -> Role | None:
        inv = bool(self.living(Role.INVADER))
        dfd = bool(self.living(Role.DEFENDER))
        if not dfd:
            return Role.INVADER
        if not inv:
            return Role.DEFENDER
        return None

    def hp_share(self, side: Role) -> Fraction:
        return sum((Fraction(max(c.hp, 0), c.max_hp) for c in self.teams[side]), Fraction(0))

    def phi(self) -> dict[Role, float]:
        n = len(self.teams[Role.INVADER]) or 1
        value = float((self.hp_share(Role.INVADER) - self.hp_share(Role.DEFENDER)) / n)
        return {Role.INVADER: value + 0.0, Role.DEFENDER: -value + 0.0}


def apply_status_phase(who: Character, duel: Duel | None = None) -> Character:
    """End-of-round upkeep for one character: DoT/HoT, deferred hits, durations.

    Mutates and returns ``who``.
    """
    if duel is None:
        duel = Duel(config=TaConfig(), registry=load_registry(), teams={Role.INVADER: [], Role.DEFENDER: []})
    for s in list(who.statuses):
        if not who.alive:
            break
        if s.kind == "burning":
            duel.indirect(who, s.magnitude * s.layers)
        elif s.kind == "poison_vine":
            duel.indirect(who, s.magnitude)
        elif s.kind == "bud_healing":
            duel.heal(who, s.magnitude)
    due = [d for d in who.deferred if d[0] <= duel.round]
    who.deferred = [d for d in who.deferred if d[0] > duel.round]
    for _, amount in due:
        duel.indirect(who, amount)
    kept = []
    for s in who.statuses:
        if s.rounds_left is not None:
            if s.fresh and s.kind not in PERIODIC:
                s.fresh = False
            else:
                s.rounds_left -= 1
                s.fresh = False
        if s.rounds_left is None or s.rounds_left > 0:
            kept.append(s)
    who.statuses = kept
    return who


def build_team(strategy: TaStrategy, side: Role, config: TaConfig, registry: Registry) -> list[Character]:
    return [
        Character(
            side=side,
            slot=i,
            element=c.element,
            max_hp=config.max_hp,
            hp=config.max_hp,
            skills=tuple(c.skills),
            target_policy=c.target_policy,
            loadout_cost=sum(registry.ta_skills[n].cost for n in c.skills),
        )
        for i, c in enumerate(strategy.characters)
    ]


def run_duel(
    invader: TaStrategy,
    defender: TaStrategy,
    config: TaConfig | None = None,
    registry: Registry | None = None,
) -> SimOutcome:
    reg = registry or load_registry()
    cfg = config or TaConfig()
    duel = Duel(
        config=cfg,
        registry=reg,
        teams={
            Role.INVADER: build_team(invader, Role.INVADER, cfg, reg),
            Role.DEFENDER: build_team(defender, Role.DEFENDER, cfg, reg),
        },
    )
    winner, reason = None, ""
    while winner is None:
        duel.round += 1
        for side in (Role.INVADER, Role.DEFENDER):
            for actor in duel.teams[side]:
                if not actor.alive:
                    continue
                duel.trace.append(duel.cast(actor))
                winner = duel.winner()
                if winner is not None:
                    break
            if winner is not None:
                break
        if winner is None:
            for side in (Role.INVADER, Role.DEFENDER):
                for c in duel.teams[side]:
                    if c.alive:
                        duel.status_phase(c)
            winner = duel.winner()
            if winner is not None:
                reason = "eliminated_upkeep"
        else:
            reason = "eliminated"
        if winner is None and duel.round >= cfg.round_cap:
            inv, dfd = duel.hp_share(Role.INVADER), duel.hp_share(Role.DEFENDER)
            winner = Role.INVADER if inv >= dfd else Role.DEFENDER
            reason = "round_cap"

    duel.trace.append({"round": duel.round, "end": winner.value, "reason": reason})
    outcome = Outcome(
        winner=winner,
        terminated_at=duel.round,
        trace_digest=trace_digest(duel.trace),
        reason=reason,
    )
    return SimOutcome(outcome=outcome, trace=duel.trace, phi=duel.phi())
