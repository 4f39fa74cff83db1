import math
import random

import pytest

from advgame.core import GameKind, Outcome, Role, TrajectoryRecord, ViolationCode, trace_digest
from advgame.metrics import (
    EPS,
    DegenerateInput,
    EmptyLog,
    InsufficientRounds,
    MetricReport,
    OneSidedData,
    SimilarityWeights,
    WeightSumInvalid,
    build_report,
    constructive_rate,
    correction_success,
    first_mover_advantage,
    improvement_slope,
    jaccard,
    masr,
    over_budget_rate,
    over_correction_risk,
    pearson,
    radar_normalize,
    rule_violation_rate,
    win_rate,
)
from synthetic import random_log


def rec(match="m", k=1, won=True, valid=True, rev=False, neg=None, phi=0.0, cost=0, budget=10,
        first=True, model="x", game=GameKind.BATTLE_CARD, doc=None, rounds=5):
    role = Role.INVADER
    if not valid:
        outcome = Outcome.forfeit(role, ViolationCode.BUDGET_EXCEEDED)
    else:
        outcome = Outcome(role if won else role.opponent, 1, trace_digest([]), "sim")
    return TrajectoryRecord(
        match_id=match, game=game, model_self=model, model_opponent="o", role=role,
        moved_first=first, round_index=k, max_rounds=rounds, strategy_doc=doc or {"roster": []},
        valid=valid, violation_code=None if valid else ViolationCode.BUDGET_EXCEEDED,
        declared_cost=cost, budget_limit=budget, outcome=outcome, is_revision=rev,
        feedback_negative=(not won or not valid) if neg is None else neg, phi=phi,
    )


def test_win_rate():
    assert win_rate([rec(won=True)] * 3 + [rec(won=False)]) == 0.75
    assert win_rate([rec(valid=False)] * 4) == 0.0
    with pytest.raises(EmptyLog):
        win_rate([])


def test_orr_counts_revisions_after_negative_feedback():
    rows = []
    for i in range(10):
        rows += [rec(f"m{i}", 1, won=False), rec(f"m{i}", 2, rev=i < 7)]
    assert over_correction_risk(rows) == pytest.approx(0.7)
    assert over_correction_risk([rec(k=1), rec(k=2, rev=True)]) == 0.0
    assert over_correction_risk([rec(k=1, won=False), rec(k=2, rev=False)]) == 0.0


def test_csr():
    rows = [
        rec("a", 1, valid=False), rec("a", 2, won=False, rev=True),
        rec("b", 1, won=False), rec("b", 2, won=False, rev=True),
        rec("c", 1, won=False), rec("c", 2, won=True, rev=True),
    ]
    assert correction_success(rows) == pytest.approx(2 / 3)
    assert correction_success([rec(k=1), rec(k=2)]) == 0.0


def test_slope_examples():
    assert improvement_slope([0, 0, 1, 1, 1]) == 0.3
    assert improvement_slope([0.4] * 5) == 0.0
    assert improvement_slope([0, 0.25, 0.5, 0.75, 1]) == 0.25
    with pytest.raises(InsufficientRounds):
        improvement_slope([1])


def test_obr_and_rvr():
    rows = [rec(cost=11) for _ in range(4)] + [rec(cost=10) for _ in range(16)]
    assert over_budget_rate(rows) == 0.2
    initial = [rec(f"m{i}", 1, valid=i >= 2) for i in range(8)]
    assert rule_violation_rate(initial) == 0.25
    later = [rec("z", 1), rec("z", 2, valid=False)]
    assert rule_violation_rate(later) == 0.0
    with pytest.raises(EmptyLog):
        rule_violation_rate([rec(k=2)])


def test_constructive_rate():
    rows = []
    for i, (before, after) in enumerate([(0.2, 0.5), (0.5, 0.1), (0.0, 0.3)]):
        rows += [rec(f"m{i}", 1, won=False, phi=before), rec(f"m{i}", 2, rev=True, phi=after)]
    assert constructive_rate(rows) == pytest.approx(2 / 3, abs=1e-8)
    flat = [rec(k=1, won=False, phi=0.4), rec(k=2, rev=True, phi=0.4)]
    assert constructive_rate(flat) == 0.0


def bc_doc(*names):
    return {"roster": [{"unit_name": n} for n in names]}


def test_masr_examples():
    struct = SimilarityWeights(1, 0, 0)
    same = bc_doc("FireLizard", "Phoenix")
    assert masr(same, same, "BCG", struct) == 1.0
    a, b = bc_doc("FireLizard", "PoisonFrog", "Phoenix"), bc_doc("PoisonFrog", "Phoenix", "TideLord")
    assert masr(a, b, "BCG", struct) == 0.5
    assert masr(bc_doc("FireLizard"), bc_doc("Phoenix"), "BCG", struct) == 0.0


def test_masr_semantic_hook_is_clamped():
    w = SimilarityWeights(0, 1, 0)
    assert masr(bc_doc("FireLizard"), bc_doc("Phoenix"), "BCG", w, semantic=lambda a, b: 7.0) == 1.0


@pytest.mark.parametrize("w", [(0.5, 0.5, 0.5), (-0.1, 0.6, 0.5), (float("nan"), 0.5, 0.5)])
def test_weights_must_sum_to_one(w):
    with pytest.raises(WeightSumInvalid):
        SimilarityWeights(*w)


def test_jaccard_of_empties_is_one():
    assert jaccard(frozenset(), frozenset()) == 1.0


def _fma_rows(first_wins, second_wins, n=10):
    rows = []
    for i in range(n):
        rows.append(rec(f"f{i}", 1, won=i < first_wins, first=True))
        rows.append(rec(f"s{i}", 1, won=i < second_wins, first=False))
    return rows


def test_fma():
    assert first_mover_advantage(_fma_rows(6, 5), "wr").value == pytest.approx(0.1, abs=1e-8)
    assert first_mover_advantage(_fma_rows(5, 5), "wr").value == 0.0
    rows = []
    for i in range(60):
        rows.append(rec(f"f{i}", 1, won=i < 20, first=True))
    for i in range(60):
        rows.append(rec(f"s{i}", 1, won=i < 33, first=False))
    assert first_mover_advantage(rows, "wr").value == pytest.approx(-0.216667, abs=1e-6)
    with pytest.raises(OneSidedData):
        first_mover_advantage([rec(first=True)], "wr")


def test_pearson():
    xs = [1.0, 2.0, 3.5, 4.0]
    assert pearson(xs, [-x for x in xs])[0] == pytest.approx(-1.0)
    assert pearson(xs, xs)[0] == pytest.approx(1.0)
    rng = random.Random(4)
    a = [rng.random() for _ in range(12)]
    b = [x + rng.random() for x in a]
    ma, mb = sum(a) / 12, sum(b) / 12
    brute = sum((x - ma) * (y - mb) for x, y in zip(a, b)) / math.sqrt(
        sum((x - ma) ** 2 for x in a) * sum((y - mb) ** 2 for y in b))
    r, p = pearson(a, b)
    assert abs(r - brute) < 1e-12 and 0 <= p <= 1
    with pytest.raises(DegenerateInput):
        pearson([1, 1, 1], [1, 2, 3])


def test_pearson_p_value_matches_scipy():
    from scipy import stats

    rng = random.Random(8)
    a = [rng.random() for _ in range(20)]
    b = [rng.random() for _ in range(20)]
    r, p = pearson(a, b)
    ref = stats.pearsonr(a, b)
    assert r == pytest.approx(ref[0], abs=1e-12) and p == pytest.approx(ref[1], rel=1e-9)


def test_radar():
    out, flagged = radar_normalize({"a": {"wr": 0.2, "orr": 0.1}, "b": {"wr": 0.8, "orr": 0.9}}, ("wr", "orr"))
    assert out["a"]["wr"] == 0.0 and out["b"]["wr"] == 1.0
    assert out["a"]["orr"] == 1.0 and out["b"]["orr"] == 0.0
    assert flagged == []
    out, flagged = radar_normalize({"a": {"wr": 0.5}, "b": {"wr": 0.5}}, ("wr",))
    assert out["a"]["wr"] == out["b"]["wr"] == 0.5 and flagged == ["wr"]
    with pytest.raises(DegenerateInput):
        radar_normalize({"a": {"wr": 1.0}}, ("wr",))


def test_report_invariants_and_roundtrip():
    records = random_log(random.Random(11))
    report = build_report(records)
    for mm in report.models.values():
        for gm in mm.games.values():
            for name in ("wr", "orr", "csr", "obr", "rvr", "cnstr", "masr"):
                assert 0.0 <= getattr(gm, name) <= 1.0
            c = gm.counts
            assert c["n_orr_revisions"] <= c["n_csr_revisions"]
            assert c["n_orr_revisions"] <= c["n_orr_events"]
        games = list(mm.games.values())
        assert mm.avg["wr"] == pytest.approx(sum(g.wr for g in games) / len(games))
    assert MetricReport.from_dict(report.to_dict()).to_dict() == report.to_dict()


def test_report_ignores_line_order():
    records = random_log(random.Random(12))
    shuffled = records[:]
    random.Random(0).shuffle(shuffled)
    assert build_report(records).to_dict() == build_report(shuffled).to_dict()


def test_epsilon_is_the_documented_constant():
    assert EPS == 1e-9
