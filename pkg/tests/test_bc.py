from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advgame.core import Role
from advgame.games.bc import apply_gold, pick_target
from bc_scenarios import SCENARIOS, condensed, fight


@pytest.mark.parametrize("scenario", SCENARIOS, ids=[s.name for s in SCENARIOS])
def test_hand_resolved_scenario(scenario):
    result = scenario.run()
    assert result.outcome.winner is scenario.winner
    assert result.outcome.terminated_at == scenario.steps
    assert result.outcome.reason == scenario.reason
    assert condensed(result.trace) == scenario.trace


@pytest.mark.parametrize(
    "n_inv,n_def,first",
    [(5, 3, "FireLizard"), (4, 4, "FireLizard"), (3, 5, "RockBeetle"), (1, 1, "FireLizard")],
)
def test_initiative(n_inv, n_def, first):
    result = fight(["FireLizard"] * n_inv, ["RockBeetle"] * n_def)
    attack = next(e for e in result.trace if e["kind"] == "attack")
    assert attack["attacker"].startswith(first)


def _line(*units):
    return [SimpleNamespace(hp=hp, attack=atk, taunt=taunt) for hp, atk, taunt in units]


def test_pick_target_prefers_taunt():
    assert pick_target("leftmost", _line((2, 2, False), (5, 1, True))) == 1


def test_pick_target_leftmost_default():
    assert pick_target("leftmost", _line((2, 2, False), (5, 1, False))) == 0


def test_pick_target_lowest_hp():
    assert pick_target("lowest_hp", _line((5, 1, False), (2, 1, False), (4, 1, False))) == 1


def test_pick_target_highest_attack_breaks_ties_leftwards():
    assert pick_target("highest_attack", _line((5, 1, False), (2, 4, False), (4, 4, False))) == 1


def test_pick_target_skips_dead_taunt():
    assert pick_target("leftmost", _line((0, 1, True), (3, 1, False))) == 1


def test_pick_target_needs_a_living_enemy():
    with pytest.raises(ValueError):
        pick_target("leftmost", _line((0, 1, False)))


def test_gold_fire_lizard(registry):
    gold = apply_gold(registry.bc_units["FireLizard"], registry)
    assert (gold.cost, gold.attack, gold.health) == (3, 4, 4)
    assert gold.ability("damage_killer").get("amount") == 4


def test_gold_poison_frog_keeps_non_numeric(registry):
    bronze = registry.bc_units["PoisonFrog"]
    gold = apply_gold(bronze, registry)
    assert (gold.cost, gold.attack, gold.health) == (6, 2, 2)
    assert [a.effect for a in gold.abilities] == [a.effect for a in bronze.abilities]


def test_gold_is_idempotent(registry):
    gold = apply_gold(registry.bc_units["Phoenix"], registry)
    assert apply_gold(gold, registry) is gold


def test_phi_is_zero_sum_and_signed():
    result = fight(["FireLizard"], ["Sapling"])
    assert result.phi[Role.INVADER] > 0
    assert result.phi[Role.INVADER] == pytest.approx(-result.phi[Role.DEFENDER])


_INVADERS = ["FireLizard", "WaterElemental", "PoisonFrog", "MoltenHound", "BattleFrenzy",
             "BanditLeader", "LavaGolem", "TideGuardian", "TideLord", "Phoenix", "ShadowOverlord"]
_DEFENDERS = ["Sapling", "RockBeetle", "ForestSeer", "StoneWarrior", "EliteSoldier", "Paladin",
              "BlackRock", "VineProtector", "King", "MountainGiant", "AncientTreant"]


def _roster(names):
    return st.lists(
        st.tuples(
            st.sampled_from(names),
            st.sampled_from(["bronze", "gold"]),
            st.sampled_from(["leftmost", "lowest_hp", "highest_attack"]),
        ),
        min_size=1,
        max_size=7,
    )


@settings(max_examples=150, deadline=None)
@given(_roster(_INVADERS), _roster(_DEFENDERS))
def test_every_battle_terminates_with_a_winner(inv, dfd):
    a = fight(inv, dfd)
    b = fight(inv, dfd)
    assert a.outcome.winner in (Role.INVADER, Role.DEFENDER)
    assert 1 <= a.outcome.terminated_at <= 500
    assert a.outcome.trace_digest == b.outcome.trace_digest
    assert all(e.get("dealt", 0) >= 0 for e in a.trace)
