import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advgame.core import GameKind, Role, ViolationCode
from advgame.bots import greedy_strategy, overspend_strategy, random_strategy
from advgame.strategy import (
    UnknownUnitError,
    cost_of,
    function_tags,
    partial_cost,
    strategy_to_doc,
    validate,
)

CODES = set(ViolationCode)


def td_def(*placements):
    return {"role": "defender", "placements": [{"unit_name": n, "x": x, "y": y} for n, x, y in placements]}


def bc(role, *names, tier="bronze"):
    return {"role": role, "roster": [{"unit_name": n, "tier": tier} for n in names]}


def test_roster_of_eight_is_too_large():
    v = validate(bc("invader", *["FireLizard"] * 8), "BCG", "invader", 100)
    assert v.code is ViolationCode.ROSTER_TOO_LARGE


def test_occupied_cell():
    v = validate(td_def(("HandgunSoldier", 3, 2), ("RifleSoldier", 3, 2)), "TDG", "defender")
    assert v.code is ViolationCode.CELL_OCCUPIED


def test_empty_defence_is_valid():
    v = validate(td_def(), "TDG", "defender", 1000)
    assert v.ok and v.cost == 0


def test_budget_overshoot():
    doc = td_def(("MachineGunSoldier", 0, 0), ("MachineGunSoldier", 0, 1), ("RifleSoldier", 0, 2),
                 ("ShieldSoldier", 1, 0))
    assert cost_of(doc, "TDG") == 1050
    v = validate(doc, "TDG", "defender", 1000)
    assert v.code is ViolationCode.BUDGET_EXCEEDED and v.cost == 1050


def test_out_of_bounds():
    v = validate(td_def(("HandgunSoldier", 11, 0)), "TDG", "defender")
    assert v.code is ViolationCode.PLACEMENT_OUT_OF_BOUNDS


def test_unknown_unit_comes_before_bounds():
    v = validate(td_def(("Dragon", 99, 0)), "TDG", "defender")
    assert v.code is ViolationCode.UNKNOWN_UNIT


def test_wrong_side_unit():
    v = validate(bc("invader", "Sapling"), "BCG", "invader")
    assert not v.ok


def test_cost_examples():
    assert cost_of(td_def(("HandgunSoldier", 0, 0), ("ShieldSoldier", 1, 0)), "TDG") == 150
    assert cost_of(bc("invader", "FireLizard", tier="gold"), "BCG") == 3
    ta = {"role": "invader", "characters": [
        {"element": "Fire", "skills": ["flame_splash", "residual_warmth", "burst_flame_bomb"]}]}
    assert cost_of(ta, "TAG") == 4


def test_cost_of_unknown_raises():
    with pytest.raises(UnknownUnitError):
        cost_of(bc("invader", "Nope"), "BCG")


def test_cost_is_order_independent():
    names = ["FireLizard", "PoisonFrog", "Phoenix", "LavaGolem"]
    base = cost_of(bc("invader", *names), "BCG")
    for _ in range(10):
        random.shuffle(names)
        assert cost_of(bc("invader", *names), "BCG") == base


def test_ta_skill_outside_pool():
    doc = {"role": "invader", "characters": [
        {"element": "Fire", "skills": ["stream_pierce", "flame_splash", "flame_splash"]},
        {"element": "Water", "skills": ["stream_pierce"] * 3},
        {"element": "Dark", "skills": ["shadow_claw"] * 3}]}
    assert validate(doc, "TAG", "invader").code is ViolationCode.UNKNOWN_SKILL


def test_ta_slots_fixed_by_role():
    doc = {"role": "invader", "characters": [
        {"element": "Water", "skills": ["stream_pierce"] * 3},
        {"element": "Fire", "skills": ["flame_splash"] * 3},
        {"element": "Dark", "skills": ["shadow_claw"] * 3}]}
    assert validate(doc, "TAG", "invader").code is ViolationCode.MALFORMED_DOCUMENT


def test_ta_per_character_budget():
    doc = {"role": "defender", "characters": [
        {"element": "Wood", "skills": ["poison_vine", "poison_vine", "bud_healing"]},
        {"element": "Earth", "skills": ["earth_shock"] * 3},
        {"element": "Light", "skills": ["holy_glimmer"] * 3}]}
    v = validate(doc, "TAG", "defender")
    assert v.code is ViolationCode.BUDGET_EXCEEDED and v.cost == 7


def test_role_mismatch_is_malformed():
    assert validate(bc("defender", "FireLizard"), "BCG", "invader").code is ViolationCode.MALFORMED_DOCUMENT


@pytest.mark.parametrize("game", list(GameKind))
@pytest.mark.parametrize("role", list(Role))
def test_bot_documents(game, role):
    budget = {GameKind.TOWER_DEFENSE: 1000, GameKind.BATTLE_CARD: 12, GameKind.TURN_ATTRIBUTE: 6}[game]
    greedy = validate(greedy_strategy(game, role, budget), game, role, budget)
    assert greedy.ok
    assert strategy_to_doc(greedy.strategy)["role"] == role.value
    assert validate(strategy_to_doc(greedy.strategy), game, role, budget).ok
    over = overspend_strategy(game, role, budget)
    assert validate(over, game, role, budget).code is ViolationCode.BUDGET_EXCEEDED
    assert partial_cost(over, game, role) > budget
    assert validate(random_strategy(game, role, budget, random.Random(7)), game, role, budget).ok


def test_function_tags_come_from_registry():
    assert function_tags(bc("defender", "RockBeetle", "Sapling"), GameKind.BATTLE_CARD) <= {
        "attack", "defense", "support", "economy"}


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.floats(allow_nan=True) | st.text(max_size=8),
    lambda children: st.lists(children, max_size=4) | st.dictionaries(st.text(max_size=10), children, max_size=4),
    max_leaves=20,
)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(list(GameKind)), st.sampled_from(list(Role)), json_values)
def test_validate_is_total_on_arbitrary_json(game, role, doc):
    v = validate(doc, game, role)
    assert v.ok or v.code in CODES


def test_validate_survives_deep_nesting():
    doc = []
    for _ in range(5000):
        doc = [doc]
    v = validate({"role": "invader", "roster": doc}, "BCG", "invader")
    assert v.code is ViolationCode.MALFORMED_DOCUMENT


def test_validate_is_pure():
    doc = bc("invader", "FireLizard", "Phoenix")
    before = json.dumps(doc, sort_keys=True)
    assert validate(doc, "BCG", "invader") == validate(doc, "BCG", "invader")
    assert json.dumps(doc, sort_keys=True) == before
