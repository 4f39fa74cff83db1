import itertools
from fractions import Fraction

import pytest

from advgame.core import Role
from advgame.games.ta import (
    Character,
    Duel,
    Status,
    TaConfig,
    apply_status_phase,
    elemental_multiplier,
    run_duel,
)
from advgame.strategy import validate

ELEMENTS = ["Fire", "Water", "Dark", "Wood", "Earth", "Light"]


def char(side, element, skills=("earth_shock",) * 3, hp=100, slot=0):
    return Character(side=side, slot=slot, element=element, max_hp=100, hp=hp, skills=tuple(skills))


def duel(attacker, target, registry):
    return Duel(TaConfig(), registry, {attacker.side: [attacker], target.side: [target]})


@pytest.mark.parametrize(
    "a,t,expected",
    [("Fire", "Wood", Fraction(6, 5)), ("Wood", "Fire", Fraction(4, 5)),
     ("Light", "Dark", Fraction(3, 2)), ("Dark", "Light", Fraction(3, 2)), ("Fire", "Fire", Fraction(1))],
)
def test_multiplier_examples(a, t, expected):
    assert elemental_multiplier(a, t) == expected


def test_effective_never_below_resisted():
    for base in range(0, 200):
        assert (base * elemental_multiplier("Fire", "Wood")) // 1 >= (base * elemental_multiplier("Wood", "Fire")) // 1


def test_flame_splash_on_wood(registry):
    a, t = char(Role.INVADER, "Fire", ["flame_splash"] * 3), char(Role.DEFENDER, "Wood")
    d = duel(a, t, registry)
    event = d.cast(a)
    assert t.hp == 86 and event["dealt"] == 14
    burn = t.status("burning")
    assert (burn.layers, burn.rounds_left, burn.magnitude) == (1, 2, 5)


def test_burst_flame_bomb_scales_with_burning(registry):
    a, t = char(Role.INVADER, "Fire", ["burst_flame_bomb"] * 3), char(Role.DEFENDER, "Light")
    t.statuses.append(Status("burning", 2, 5, layers=4))
    event = duel(a, t, registry).cast(a)
    assert event["base"] == 37 and event["dealt"] == 37


def test_void_assimilation_penetrates_shields(registry):
    a, t = char(Role.INVADER, "Dark", ["void_assimilation"] * 3, hp=80), char(Role.DEFENDER, "Wood")
    t.statuses.append(Status("shield", 3, 50))
    t.statuses.append(Status("granite_barrier", 3, -40))
    duel(a, t, registry).cast(a)
    assert a.hp == 64
    assert t.hp == 100 - 32
    assert t.shield_pool == 50


def test_tsunami_consumes_tidal_surge(registry):
    a, t = char(Role.INVADER, "Water", ["tsunami_ending"] * 3), char(Role.DEFENDER, "Light")
    a.statuses.append(Status("tidal_surge", None, layers=4))
    event = duel(a, t, registry).cast(a)
    assert event["base"] == 50 and event["dealt"] == 50
    assert a.layers("tidal_surge") == 0


def test_skill_cursor_cycles(registry):
    a = char(Role.INVADER, "Water", ["stream_pierce", "water_barrier", "ice_branded"])
    t = char(Role.DEFENDER, "Light")
    d = duel(a, t, registry)
    assert [d.cast(a)["skill"] for _ in range(4)] == ["stream_pierce", "water_barrier", "ice_branded", "stream_pierce"]


def test_shield_absorbs_before_hp(registry):
    a, t = char(Role.DEFENDER, "Earth", ["earth_shock"] * 3), char(Role.INVADER, "Fire")
    t.statuses.append(Status("shield", 3, 12))
    duel(a, t, registry).cast(a)
    assert t.hp == 92 and t.shield_pool == 0


def test_burning_upkeep_scales_with_layers():
    c = char(Role.DEFENDER, "Wood")
    c.statuses.append(Status("burning", 2, 5, layers=3))
    apply_status_phase(c)
    assert c.hp == 85
    assert c.status("burning").rounds_left == 1


def test_bud_healing_caps_at_max_hp():
    c = char(Role.DEFENDER, "Wood", hp=97)
    c.statuses.append(Status("bud_healing", 3, 6))
    apply_status_phase(c)
    assert c.hp == 100


def test_status_phase_without_statuses_is_identity():
    c = char(Role.DEFENDER, "Wood", hp=73)
    apply_status_phase(c)
    assert c.hp == 73 and c.statuses == []


def test_forest_reincarnation_converts_half_of_overheal(registry):
    a, t = char(Role.DEFENDER, "Wood", ["forest_reincarnation"] * 3, hp=90), char(Role.INVADER, "Fire")
    duel(a, t, registry).cast(a)
    assert a.hp == 100
    assert a.shield_pool == 25


def test_core_rebound_spends_stored_damage(registry):
    a, t = char(Role.DEFENDER, "Earth", ["core_rebound"] * 3), char(Role.INVADER, "Fire")
    a.stored_damage = 50
    event = duel(a, t, registry).cast(a)
    assert event["base"] == 40 and a.stored_damage == 0


def _doc(role, elements, skills):
    return {
        "role": role,
        "characters": [{"element": e, "skills": list(s)} for e, s in zip(elements, skills)],
    }


INV = _doc("invader", ["Fire", "Water", "Dark"],
           [["flame_splash", "residual_warmth", "burst_flame_bomb"],
            ["stream_pierce", "water_barrier", "whirlpool_strangle"],
            ["shadow_claw", "fear_whisper", "soul_siphon"]])
DEF = _doc("defender", ["Wood", "Earth", "Light"],
           [["bud_healing", "parasitic_seed", "natural_purification"],
            ["rock_armor", "earth_shock", "granite_barrier"],
            ["holy_glimmer", "faith_emblem", "divine_link"]])


def test_full_duel_is_deterministic_and_ends():
    inv = validate(INV, "TAG", "invader")
    dfd = validate(DEF, "TAG", "defender")
    assert inv.ok and dfd.ok
    a = run_duel(inv.strategy, dfd.strategy)
    b = run_duel(inv.strategy, dfd.strategy)
    assert a.outcome.trace_digest == b.outcome.trace_digest
    assert a.outcome.winner in (Role.INVADER, Role.DEFENDER)
    assert a.outcome.reason in ("eliminated", "eliminated_upkeep", "round_cap")
    assert a.phi[Role.INVADER] == pytest.approx(-a.phi[Role.DEFENDER])


def test_round_cap_tiebreak_favours_invader():
    inv = validate(
        _doc("invader", ["Fire", "Water", "Dark"],
             [["residual_warmth"] * 3, ["water_barrier"] * 3, ["fear_whisper"] * 3]),
        "TAG", "invader",
    )
    dfd = validate(
        _doc("defender", ["Wood", "Earth", "Light"],
             [["bud_healing"] * 3, ["granite_barrier"] * 3, ["divine_link"] * 3]),
        "TAG", "defender",
    )
    assert inv.ok and dfd.ok
    result = run_duel(inv.strategy, dfd.strategy, TaConfig(round_cap=3))
    assert result.outcome.reason == "round_cap"
    assert result.outcome.winner is Role.INVADER


def test_every_skill_has_a_handler(registry):
    assert len(registry.ta_skills) == 36
    for name in registry.ta_skills:
        assert callable(getattr(Duel, f"_skill_{name}"))


def test_every_skill_casts_cleanly(registry):
    for name, spec in registry.ta_skills.items():
        side = Role.INVADER if spec.element in ("Fire", "Water", "Dark") else Role.DEFENDER
        a = char(side, spec.element, [name] * 3, hp=80)
        t = char(side.opponent, "Fire" if side is Role.DEFENDER else "Wood", hp=60)
        d = duel(a, t, registry)
        for _ in range(3):
            d.round += 1
            d.cast(a)
            apply_status_phase(a, d)
            apply_status_phase(t, d)
        assert a.hp <= a.max_hp and t.hp <= t.max_hp


def test_all_pairs_enumerated():
    assert len(list(itertools.product(ELEMENTS, repeat=2))) == 36
