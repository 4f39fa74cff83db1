"""Behavioural metrics computed purely from trajectory records.

Rate metrics share one convention: a zero denominator yields 0.0 and marks
the value undefined (reports list undefined metrics explicitly). WR, ORR,
CSR, OBR and RVR are plain ratios. The constructive rate, MASR and the
first-mover means divide by ``n + EPS`` as their defining formulas do, so a
perfect constructive rate reads 0.999999999 rather than 1.

A *transition* is a pair of consecutive rounds (k, k+1) of one model inside
one match. ORR, CSR, the constructive rate and MASR are all defined over
transitions:

* negative-feedback event: round k's record has ``feedback_negative``
* revision: round k+1's record has ``is_revision``
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

from advgame.core import GameKind, TrajectoryRecord
from advgame.strategy import action_tokens, function_tags

EPS = 1e-9
RATE_METRICS = ("wr", "orr", "csr", "obr", "rvr", "cnstr", "masr")
FMA_METRICS = ("wr", "orr", "csr", "obr", "slope")
RADAR_METRICS = ("wr", "csr", "slope", "orr", "obr")
INVERTED = frozenset({"orr", "obr"})


class MetricError(ValueError):
    pass


class EmptyLog(MetricError):
    pass


class InsufficientRounds(MetricError):
    pass


class WeightSumInvalid(MetricError):
    pass


class DegenerateInput(MetricError):
    pass


class OneSidedData(MetricError):
    pass


@dataclass(frozen=True)
class Rate:
    value: float
    defined: bool
    num: int = 0
    den: int = 0


def _ratio(num: int, den: int) -> Rate:
    if den == 0:
        return Rate(0.0, False, num, den)
    return Rate(num / den, True, num, den)


def _guarded(total: float, den: int) -> Rate:
    return Rate(total / (den + EPS), den > 0, 0, den)


# -- grouping ---------------------------------------------------------------------


def by_match(records: Iterable[TrajectoryRecord]) -> dict[tuple[str, str], list[TrajectoryRecord]]:
    """(match_id, model) -> that model's records ordered by round."""
    groups: dict[tuple[str, str], list[TrajectoryRecord]] = defaultdict(list)
    for r in records:
        groups[(r.match_id, r.model_self)].append(r)
    return {k: sorted(v, key=lambda r: r.round_index) for k, v in groups.items()}


def transitions(records: Iterable[TrajectoryRecord]) -> list[tuple[TrajectoryRecord, TrajectoryRecord]]:
    pairs = []
    for key in sorted(groups := by_match(records)):
        rows = groups[key]
        for prev, nxt in zip(rows, rows[1:]):
            if nxt.round_index == prev.round_index + 1:
                pairs.append((prev, nxt))
    return pairs


# -- rate metrics -----------------------------------------------------------------


def win_rate(records: Sequence[TrajectoryRecord]) -> float:
    if not records:
        raise EmptyLog("win rate needs at least one round")
    return sum(r.won for r in records) / len(records)


def orr_detail(records: Iterable[TrajectoryRecord]) -> Rate:
    events = [(p, n) for p, n in transitions(records) if p.feedback_negative]
    return _ratio(sum(n.is_revision for _, n in events), len(events))


def over_correction_risk(records: Iterable[TrajectoryRecord]) -> float:
    return orr_detail(records).value


def _corrected(prev: TrajectoryRecord, nxt: TrajectoryRecord) -> bool:
    return (not prev.valid and nxt.valid) or (not prev.won and nxt.won)


def csr_detail(records: Iterable[TrajectoryRecord]) -> Rate:
    revisions = [(p, n) for p, n in transitions(records) if n.is_revision]
    return _ratio(sum(_corrected(p, n) for p, n in revisions), len(revisions))


def correction_success(records: Iterable[TrajectoryRecord]) -> float:
    return csr_detail(records).value


def over_budget_rate(records: Sequence[TrajectoryRecord]) -> float:
    if not records:
        raise EmptyLog("over-budget rate needs at least one proposal")
    return sum(r.over_budget for r in records) / len(records)


def rule_violation_rate(records: Iterable[TrajectoryRecord]) -> float:
    initial = [r for r in records if r.round_index == 1]
    if not initial:
        raise EmptyLog("rule violation rate needs at least one initial proposal")
    return sum(not r.valid for r in initial) / len(initial)


def _phi(r: TrajectoryRecord) -> float:
    return r.phi if r.phi is not None else -math.inf


def cnstr_detail(records: Iterable[TrajectoryRecord]) -> Rate:
    events = [(p, n) for p, n in transitions(records) if p.feedback_negative and n.is_revision]
    hits = sum(_phi(n) > _phi(p) for p, n in events)
    rate = _guarded(hits, len(events))
    return Rate(rate.value, rate.defined, hits, len(events))


def constructive_rate(records: Iterable[TrajectoryRecord]) -> float:
    return cnstr_detail(records).value


# -- improvement slope ------------------------------------------------------------


def ols_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Exact least-squares slope (computed in rationals, rounded once)."""
    if len(xs) != len(ys):
        raise ValueError("xs and ys differ in length")
    if len(xs) < 2:
        raise InsufficientRounds("a slope needs at least two points")
    fx = [Fraction(x) for x in xs]
    fy = [Fraction(y) for y in ys]
    mx, my = sum(fx) / len(fx), sum(fy) / len(fy)
    sxx = sum((x - mx) ** 2 for x in fx)
    if sxx == 0:
        raise DegenerateInput("all x values are equal")
    sxy = sum((x - mx) * (y - my) for x, y in zip(fx, fy))
    return float(sxy / sxx)


def improvement_slope(win_series: Sequence[float]) -> float:
    """Slope of a per-round win-rate series against round index 1..R."""
    return ols_slope(range(1, len(win_series) + 1), win_series)


def win_series(records: Iterable[TrajectoryRecord]) -> tuple[list[int], list[float]]:
    """Per round index, the win rate over all of the model's matches at that index."""
    wins: dict[int, list[int]] = defaultdict(list)
    for r in records:
        wins[r.round_index].append(int(r.won))
    xs = sorted(wins)
    return xs, [sum(wins[x]) / len(wins[x]) for x in xs]


def slope_of(records: Iterable[TrajectoryRecord]) -> float:
    xs, ys = win_series(records)
    return ols_slope(xs, ys)


# -- similarity -------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityWeights:
    structural: float = 0.5
    semantic: float = 0.0
    functional: float = 0.5

    def __post_init__(self) -> None:
        parts = (self.structural, self.semantic, self.functional)
        if any(w < 0 or math.isnan(w) for w in parts):
            raise WeightSumInvalid(f"weights must be non-negative, got {parts}")
        if abs(sum(parts) - 1.0) > 1e-9:
            raise WeightSumInvalid(f"weights must sum to 1, got {sum(parts)}")


DEFAULT_WEIGHTS = SimilarityWeights()

SemanticHook = Callable[[Any, Any], float]


def jaccard(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def masr(
    prev_doc: Any,
    next_doc: Any,
    game: GameKind | str,
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
    semantic: SemanticHook | None = None,
) -> float:
    game = GameKind.parse(game)
    struct = jaccard(action_tokens(prev_doc, game), action_tokens(next_doc, game))
    func = jaccard(function_tags(prev_doc, game), function_tags(next_doc, game))
    sem = 0.0
    if semantic is not None and weights.semantic:
        sem = min(1.0, max(0.0, float(semantic(prev_doc, next_doc))))
    return weights.structural * struct + weights.semantic * sem + weights.functional * func


def masr_detail(
    records: Iterable[TrajectoryRecord],
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
    semantic: SemanticHook | None = None,
) -> Rate:
    events = [(p, n) for p, n in transitions(records) if p.feedback_negative and n.is_revision]
    total = math.fsum(masr(p.strategy_doc, n.strategy_doc, n.game, weights, semantic) for p, n in events)
    return _guarded(total, len(events))


def masr_average(
    records: Iterable[TrajectoryRecord],
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
    semantic: SemanticHook | None = None,
) -> float:
    return masr_detail(records, weights, semantic).value


# -- first-mover advantage -----------------------------------------------------------


def _per_match(metric: str) -> Callable[[list[TrajectoryRecord]], float | None]:
    def wr(rows: list[TrajectoryRecord]) -> float | None:
        return win_rate(rows)

    def obr(rows: list[TrajectoryRecord]) -> float | None:
        return over_budget_rate(rows)

    def rate(fn: Callable[[list[TrajectoryRecord]], Rate]) -> Callable[[list[TrajectoryRecord]], float | None]:
        def inner(rows: list[TrajectoryRecord]) -> float | None:
            r = fn(rows)
            return r.value if r.defined else None

        return inner

    def slope(rows: list[TrajectoryRecord]) -> float | None:
        if len(rows) < 2:
            return None
        return slope_of(rows)

    table = {
        "wr": wr,
        "obr": obr,
        "orr": rate(orr_detail),
        "csr": rate(csr_detail),
        "cnstr": rate(cnstr_detail),
        "masr": rate(masr_detail),
        "slope": slope,
    }
    if metric not in table:
        raise ValueError(f"unknown metric {metric!r}")
    return table[metric]


@dataclass(frozen=True)
class FmaResult:
    value: float
    mean_first: float
    mean_second: float
    n_first: int
    n_second: int


def first_mover_advantage(records: Iterable[TrajectoryRecord], metric: str = "wr") -> FmaResult:
    """Mean per-match metric when moving first minus when moving second.

    Matches where the metric is undefined are not applicable and skipped.
    """
    fn = _per_match(metric)
    first: list[float] = []
    second: list[float] = []
    for rows in by_match(records).values():
        value = fn(rows)
        if value is None:
            continue
        (first if rows[0].moved_first else second).append(value)
    if not first or not second:
        raise OneSidedData(
            f"{metric}: {len(first)} first-mover and {len(second)} second-mover matches"
        )
    mf = math.fsum(first) / (len(first) + EPS)
    ms = math.fsum(second) / (len(second) + EPS)
    return FmaResult(mf - ms, mf, ms, len(first), len(second))


# -- correlation and normalisation --------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r and its two-sided p-value (t distribution, n-2 dof)."""
    from scipy import stats

    if len(xs) != len(ys):
        raise DegenerateInput("xs and ys differ in length")
    if len(xs) < 2:
        raise DegenerateInput("need at least two points")
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        raise DegenerateInput("zero variance input")
    n = len(xs)
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if n < 3:
        return r, 1.0
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    p = float(2 * stats.t.sf(abs(t), n - 2))
    return r, p


def radar_normalize(
    table: Mapping[str, Mapping[str, float]], metrics: Sequence[str] = RADAR_METRICS
) -> tuple[dict[str, dict[str, float]], list[str]]:
    """Min-max scale each metric across models; ORR and OBR are inverted first.

    Returns the normalised table and the metrics that were constant (all 0.5).
    """
    if len(table) < 2:
        raise DegenerateInput("radar normalisation needs at least two models")
    out: dict[str, dict[str, float]] = {m: {} for m in table}
    flagged = []
    for metric in metrics:
        raw = {m: float(row[metric]) for m, row in table.items()}
        vals = {m: (1.0 - v if metric in INVERTED else v) for m, v in raw.items()}
        lo, hi = min(vals.values()), max(vals.values())
        if hi - lo <= 1e-12:
            flagged.append(metric)
            for m in vals:
                out[m][metric] = 0.5
            continue
        for m, v in vals.items():
            out[m][metric] = (v - lo) / (hi - lo)
    return out, flagged


# -- report -------------------------------------------------------------------------


@dataclass
class GameMetrics:
    wr: float
    orr: float
    csr: float
    slope: float | None
    obr: float
    rvr: float
    cnstr: float
    masr: float
    fma: dict[str, float | None] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    undefined: list[str] = field(default_factory=list)


@dataclass
class ModelMetrics:
    games: dict[str, GameMetrics]
    avg: dict[str, float | None]


@dataclass
class MetricReport:
    models: dict[str, ModelMetrics]
    weights: dict[str, float]
    radar: dict[str, dict[str, float]] = field(default_factory=dict)
    radar_flagged: list[str] = field(default_factory=list)
    correlations: dict[str, dict[str, float] | None] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> MetricReport:
        models = {
            name: ModelMetrics(
                games={g: GameMetrics(**gm) for g, gm in mm["games"].items()},
                avg=dict(mm["avg"]),
            )
            for name, mm in data["models"].items()
        }
        return cls(
            models=models,
            weights=dict(data["weights"]),
            radar={k: dict(v) for k, v in data.get("radar", {}).items()},
            radar_flagged=list(data.get("radar_flagged", [])),
            correlations=dict(data.get("correlations", {})),
        )


def game_metrics(
    records: Sequence[TrajectoryRecord],
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
    semantic: SemanticHook | None = None,
) -> GameMetrics:
    """All metrics for one model's records within one game."""
    undefined: list[str] = []
    orr, csr = orr_detail(records), csr_detail(records)
    cnstr, sim = cnstr_detail(records), masr_detail(records, weights, semantic)
    for name, rate in (("orr", orr), ("csr", csr), ("cnstr", cnstr), ("masr", sim)):
        if not rate.defined:
            undefined.append(name)
    try:
        slope: float | None = slope_of(records)
    except MetricError:
        slope = None
        undefined.append("slope")
    try:
        rvr = rule_violation_rate(records)
    except EmptyLog:
        rvr = 0.0
        undefined.append("rvr")
    fma: dict[str, float | None] = {}
    for metric in FMA_METRICS:
        try:
            fma[metric] = first_mover_advantage(records, metric).value
        except OneSidedData:
            fma[metric] = None
            undefined.append(f"fma_{metric}")
    n_revisions = sum(r.is_revision for r in records)
    counts = {
        "n_rounds": len(records),
        "n_proposals": len(records),
        "n_revisions": n_revisions,
        "n_neg_feedback": sum(r.feedback_negative for r in records),
        "n_orr_events": orr.den,
        "n_orr_revisions": orr.num,
        "n_csr_revisions": csr.den,
        "n_csr_successes": csr.num,
    }
    return GameMetrics(
        wr=win_rate(records),
        orr=orr.value,
        csr=csr.value,
        slope=slope,
        obr=over_budget_rate(records),
        rvr=rvr,
        cnstr=cnstr.value,
        masr=sim.value,
        fma=fma,
        counts=counts,
        undefined=undefined,
    )


def _mean(values: Iterable[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return sum(present) / len(present) if present else None


def build_report(
    records: Iterable[TrajectoryRecord],
    weights: SimilarityWeights = DEFAULT_WEIGHTS,
    semantic: SemanticHook | None = None,
) -> MetricReport:
    records = list(records)
    if not records:
        raise EmptyLog("no records to report on")
    grouped: dict[str, dict[str, list[TrajectoryRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        grouped[r.model_self][r.game.value].append(r)

    models: dict[str, ModelMetrics] = {}
    for model in sorted(grouped):
        games = {g: game_metrics(rows, weights, semantic) for g, rows in sorted(grouped[model].items())}
        avg: dict[str, float | None] = {}
        for metric in ("wr", "orr", "csr", "slope", "obr", "rvr", "cnstr", "masr"):
            avg[metric] = _mean(getattr(gm, metric) for gm in games.values())
        for metric in FMA_METRICS:
            avg[f"fma_{metric}"] = _mean(gm.fma.get(metric) for gm in games.values())
        models[model] = ModelMetrics(games=games, avg=avg)

    report = MetricReport(models=models, weights=asdict(weights))
    if len(models) >= 2:
        table = {m: {k: (mm.avg[k] or 0.0) for k in RADAR_METRICS} for m, mm in models.items()}
        report.radar, report.radar_flagged = radar_normalize(table)
        for a, b in (("obr", "wr"), ("orr", "csr")):
            xs = [table[m][a] for m in table]
            ys = [table[m][b] for m in table]
            try:
                r, p = pearson(xs, ys)
                report.correlations[f"{a}~{b}"] = {"r": r, "p": p, "n": len(xs)}
            except DegenerateInput:
                report.correlations[f"{a}~{b}"] = None
    return report
