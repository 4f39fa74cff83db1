"""Tick-based tower defense on an 11x5 grid.

Positions are integers: one cell is ``CELL`` sub-units, so a speed-2 demon
covers the 11 columns in exactly 14 s with no float drift. Demon health is
kept in tenths of a point so the 70% damage reduction stays exact.

Phase order inside one tick: spawns & summons, human attacks (instant hits),
demon melee, movement, burning, deaths & win check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from advgame.core import Outcome, Role, SimOutcome, trace_digest
from advgame.registry import Registry, TdUnitSpec, load_registry
from advgame.strategy import TdStrategy

CELL = 28_000
HP_SCALE = 10
# sub-units per ms per point of speed: a speed-2 demon crosses 11 cells in 14 000 ms
_RATE_NUM = 11


@dataclass(frozen=True)
class TdConfig:
    tick_ms: int = 50
    time_cap_ms: int = 120_000
    burn_duration_ms: int = 3_000
    shield_reduction_pct: int = 70
    machine_reduction_pct: int = 70

    def __post_init__(self) -> None:
        if self.tick_ms <= 0 or self.tick_ms % 2:
            raise ValueError("tick_ms must be a positive even number of milliseconds")
        if self.time_cap_ms <= 0:
            raise ValueError("time_cap_ms must be positive")


@dataclass
class Human:
    spec: TdUnitSpec
    x: int
    y: int
    hp: int
    cooldown_ms: int = 0
    armed_at: int | None = None

    @property
    def label(self) -> str:
        return f"{self.spec.name}@{self.x},{self.y}"

    @property
    def alive(self) -> bool:
        return self.hp > 0


@dataclass
class Demon:
    uid: int
    spec: TdUnitSpec
    y: int
    pos: int
    hp: int
    purchased: bool = True
    cooldown_ms: int = 0
    slowed: bool = False
    defense_active: bool = False
    activated: bool = False
    next_summon_ms: int | None = None
    burn_until_ms: int | None = None
    next_burn_ms: int | None = None
    damage_taken: int = 0

    @property
    def label(self) -> str:
        return f"{self.spec.name}#{self.uid}"

    @property
    def alive(self) -> bool:
        return self.hp > 0

    @property
    def cell(self) -> int:
        return self.pos // CELL

    @property
    def x_pos(self) -> float:
        return self.pos / CELL

    @property
    def flying(self) -> bool:
        return self.spec.has("flying")


@dataclass
class TdState:
    clock_ms: int
    humans: dict[tuple[int, int], Human]
    demons: list[Demon]
    pending_spawns: list[tuple[int, int, str, int]]  # (time, order, unit, row)
    config: TdConfig
    registry: Registry
    trace: list[dict[str, Any]] = field(default_factory=list)
    next_uid: int = 0
    crossed: Demon | None = None
    finished: bool = False
    winner: Role | None = None
    reason: str = ""
    purchased_demon_cost: int = 0
    killed_demon_cost: int = 0
    human_cost: int = 0
    lost_human_cost: int = 0

    def emit(self, kind: str, actor: str | None = None, target: str | None = None, amount: float = 0) -> None:
        self.trace.append(
            {"t_ms": self.clock_ms, "kind": kind, "actor": actor, "target": target, "amount": amount}
        )

    def living_demons(self) -> list[Demon]:
        return [d for d in self.demons if d.alive]


def initial_state(
    defender: TdStrategy,
    invader: TdStrategy,
    config: TdConfig | None = None,
    registry: Registry | None = None,
) -> TdState:
    reg = registry or load_registry()
    cfg = config or TdConfig()
    humans = {}
    human_cost = 0
    for p in defender.placements:
        spec = reg.td_units[p.unit_name]
        humans[(p.x, p.y)] = Human(spec=spec, x=p.x, y=p.y, hp=spec.health)
        human_cost += spec.cost
    pending = sorted(
        (s.spawn_time_ms, i, s.unit_name, s.y) for i, s in enumerate(invader.spawns)
    )
    return TdState(
        clock_ms=0,
        humans=humans,
        demons=[],
        pending_spawns=pending,
        config=cfg,
        registry=reg,
        purchased_demon_cost=sum(reg.td_units[s.unit_name].cost for s in invader.spawns),
        human_cost=human_cost,
    )


def _spawn(state: TdState, name: str, y: int, pos: int, purchased: bool) -> Demon:
    spec = state.registry.td_units[name]
    demon = Demon(
        uid=state.next_uid,
        spec=spec,
        y=y,
        pos=pos,
        hp=spec.health * HP_SCALE,
        purchased=purchased,
        defense_active=spec.has("shield_damage_reduction_70pct") or spec.has("machine_body"),
    )
    if spec.has("summons_5000ms"):
        demon.next_summon_ms = state.clock_ms + spec.params["summon_interval_ms"]
    state.next_uid += 1
    state.demons.append(demon)
    return demon


def _shadowed(state: TdState, demon: Demon) -> bool:
    return any(
        d is not demon and d.alive and d.y == demon.y and d.spec.has("shadow_row_immunity")
        for d in state.demons
    )


def _light_row(state: TdState, y: int) -> bool:
    return any(h.alive and h.y == y and h.spec.has("light_convert") for h in state.humans.values())


def _hurt(state: TdState, demon: Demon, amount: int, dtype: str, actor: str) -> int:
    """Apply ``amount`` points of ``dtype`` damage; returns tenths actually dealt."""
    spec = demon.spec
    if dtype == "fire" and spec.has("fire_immune"):
        dealt = 0
    elif dtype == "ice" and spec.has("ice_immune"):
        dealt = 0
    elif dtype != "light" and _shadowed(state, demon):
        dealt = 0
    else:
        dealt = amount * HP_SCALE
        if demon.defense_active:
            pct = (
                state.config.shield_reduction_pct
                if spec.has("shield_damage_reduction_70pct")
                else state.config.machine_reduction_pct
            )
            dealt = dealt * (100 - pct) // 100
    demon.hp -= dealt
    demon.damage_taken += dealt
    if dealt > 0 and spec.has("speed_boost_when_active") and not demon.activated:
        demon.activated = True
        state.emit("activate", demon.label, None, 0)
    state.emit("hit", actor, demon.label, dealt / HP_SCALE)
    return dealt


def _target_in_row(state: TdState, shooter: Human, anti_air: bool) -> Demon | None:
    best = None
    floor_pos = shooter.x * CELL
    for d in state.demons:
        if not d.alive or d.y != shooter.y or d.pos < floor_pos:
            continue
        if d.flying and not anti_air:
            continue
        if best is None or (d.pos, d.uid) < (best.pos, best.uid):
            best = d
    return best


def _in_blast(human: Human, demon: Demon) -> bool:
    if demon.flying or not demon.alive:
        return False
    if human.spec.has("aoe_row"):
        return demon.y == human.y and demon.cell <= 10
    return abs(demon.y - human.y) <= 1 and abs(demon.cell - human.x) <= 1


def _human_phase(state: TdState, dt: int) -> None:
    t = state.clock_ms
    for key in sorted(state.humans, key=lambda k: (k[1], k[0])):
        h = state.humans[key]
        if not h.alive:
            continue
        spec = h.spec
        if spec.has("detonates_500ms"):
            if h.armed_at is None:
                if any(_in_blast(h, d) for d in state.demons):
                    h.armed_at = t
                    state.emit("arm", h.label, None, 0)
            if h.armed_at is not None and t >= h.armed_at + spec.params["detonation_ms"]:
                state.emit("detonate", h.label, None, spec.damage)
                for d in [d for d in state.demons if _in_blast(h, d)]:
                    _hurt(state, d, spec.damage, "explosion", h.label)
                h.hp = 0
            continue
        if spec.attack_interval_ms <= 0:
            continue
        h.cooldown_ms -= dt
        if h.cooldown_ms > 0:
            continue
        if spec.has("magnetic_pulse"):
            target = None
            for d in state.demons:
                if (
                    d.alive
                    and d.y == h.y
                    and d.pos >= h.x * CELL
                    and d.defense_active
                    and not d.flying
                    and (target is None or (d.pos, d.uid) < (target.pos, target.uid))
                ):
                    target = d
            if target is not None:
                target.defense_active = False
                h.cooldown_ms = spec.attack_interval_ms
                state.emit("pulse", h.label, target.label, 0)
            continue
        target = _target_in_row(state, h, spec.has("anti_air"))
        if target is None:
            h.cooldown_ms = 0
            continue
        h.cooldown_ms = spec.attack_interval_ms
        light = _light_row(state, h.y)
        if light:
            dtype = "light"
        elif spec.has("burns"):
            dtype = "fire"
        elif spec.has("slows"):
            dtype = "ice"
        else:
            dtype = "normal"
        _hurt(state, target, spec.damage, dtype, h.label)
        if spec.has("slows") and not target.spec.has("ice_immune") and not target.slowed:
            target.slowed = True
            state.emit("slow", h.label, target.label, 0)
        if spec.has("burns") and not target.spec.has("fire_immune"):
            if target.burn_until_ms is None:
                target.next_burn_ms = t + spec.params["burn_interval_ms"]
            target.burn_until_ms = t + state.config.burn_duration_ms
        if spec.has("rocket_splash"):
            tcell = target.cell
            for d in state.demons:
                if (
                    d is not target
                    and d.alive
                    and not d.flying
                    and abs(d.y - target.y) <= 1
                    and abs(d.cell - tcell) <= 1
                ):
                    _hurt(state, d, spec.damage, dtype, h.label)


def _blocker(state: TdState, demon: Demon) -> Human | None:
    if demon.flying:
        return None
    h = state.humans.get((demon.cell, demon.y))
    return h if h is not None and h.alive else None


def _demon_phase(state: TdState, dt: int) -> None:
    for d in state.demons:
        if not d.alive:
            continue
        d.cooldown_ms -= dt
        target = _blocker(state, d)
        if target is None or d.spec.has("bouncing") and not target.spec.has("unjumpable"):
            continue
        if d.cooldown_ms > 0:
            continue
        dmg = d.spec.damage
        if d.spec.has("shieldbreaker") and target.spec.has("shield_only"):
            dmg *= d.spec.params["shield_multiplier"]
        target.hp -= dmg
        d.cooldown_ms = d.spec.attack_interval_ms
        state.emit("melee", d.label, target.label, dmg)


def _step(demon: Demon, dt: int) -> int:
    speed = demon.spec.params.get("active_speed", demon.spec.speed) if demon.activated else demon.spec.speed
    step = speed * _RATE_NUM * dt
    return step // 2 if demon.slowed else step


def _movement_phase(state: TdState, dt: int) -> None:
    for d in state.demons:
        if not d.alive:
            continue
        blocker = _blocker(state, d)
        if blocker is None:
            d.pos -= _step(d, dt)
            blocker = _blocker(state, d) if d.pos >= 0 else None
        while blocker is not None and d.spec.has("bouncing") and not blocker.spec.has("unjumpable"):
            d.pos = blocker.x * CELL - 1
            state.emit("jump", d.label, blocker.label, 0)
            blocker = _blocker(state, d) if d.pos >= 0 else None
        if d.pos < 0 and state.crossed is None:
            state.crossed = d
            state.emit("cross", d.label, f"row{d.y}", 0)


def _status_phase(state: TdState) -> None:
    t = state.clock_ms
    for d in state.demons:
        if not d.alive or d.burn_until_ms is None:
            continue
        while d.next_burn_ms is not None and d.next_burn_ms <= min(t, d.burn_until_ms):
            _hurt(state, d, 1, "fire", "burn")
            d.next_burn_ms += 1000
            if not d.alive:
                break
        if d.next_burn_ms is None or d.next_burn_ms > d.burn_until_ms:
            d.burn_until_ms = None
            d.next_burn_ms = None


def _spawn_phase(state: TdState) -> None:
    t = state.clock_ms
    spawn_pos = state.registry.td_grid["spawn_x"] * CELL
    while state.pending_spawns and state.pending_spawns[0][0] <= t:
        _, _, name, y = state.pending_spawns.pop(0)
        d = _spawn(state, name, y, spawn_pos, purchased=True)
        state.emit("spawn", d.label, f"row{y}", 0)
    for d in list(state.demons):
        if not d.alive or d.next_summon_ms is None:
            continue
        while d.next_summon_ms <= t:
            pos = max(d.pos - CELL, 0)
            child = _spawn(state, d.spec.params["summon_unit"], d.y, pos, purchased=False)
            d.next_summon_ms += d.spec.params["summon_interval_ms"]
            state.emit("summon", d.label, child.label, 0)


def _death_phase(state: TdState) -> None:
    for d in state.demons:
        if not d.alive:
            state.emit("death", None, d.label, 0)
            if d.purchased:
                state.killed_demon_cost += d.spec.cost
    state.demons = [d for d in state.demons if d.alive]
    for key, h in list(state.humans.items()):
        if not h.alive:
            state.emit("death", None, h.label, 0)
            state.lost_human_cost += h.spec.cost
            del state.humans[key]


def _win_check(state: TdState) -> None:
    if state.crossed is not None:
        state.finished, state.winner, state.reason = True, Role.INVADER, "crossed"
    elif not state.demons and not state.pending_spawns:
        state.finished, state.winner, state.reason = True, Role.DEFENDER, "all_eliminated"
    elif state.clock_ms >= state.config.time_cap_ms:
        state.finished, state.winner, state.reason = True, Role.DEFENDER, "time_cap"


def tick(state: TdState, dt_ms: int) -> TdState:
    """Advance the battlefield by ``dt_ms`` (mutates and returns ``state``)."""
    state.clock_ms += dt_ms
    _spawn_phase(state)
    _human_phase(state, dt_ms)
    _demon_phase(state, dt_ms)
    _movement_phase(state, dt_ms)
    _status_phase(state)
    _death_phase(state)
    _win_check(state)
    return state


def phi(state: TdState) -> dict[Role, float]:
    """Defender view: share of purchased demon cost destroyed minus share of own cost lost."""
    killed = state.killed_demon_cost / state.purchased_demon_cost if state.purchased_demon_cost else 0.0
    lost = state.lost_human_cost / state.human_cost if state.human_cost else 0.0
    value = killed - lost
    return {Role.DEFENDER: value + 0.0, Role.INVADER: -value + 0.0}


def simulate_td(
    defender: TdStrategy,
    invader: TdStrategy,
    config: TdConfig | None = None,
    registry: Registry | None = None,
) -> SimOutcome:
    state = initial_state(defender, invader, config, registry)
    tick(state, 0)
    while not state.finished:
        tick(state, state.config.tick_ms)
    state.emit("end", state.winner.value, state.reason, 0)
    outcome = Outcome(
        winner=state.winner,
        terminated_at=state.clock_ms,
        trace_digest=trace_digest(state.trace),
        reason=state.reason,
    )
    return SimOutcome(outcome=outcome, trace=state.trace, phi=phi(state))
