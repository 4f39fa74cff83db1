"""Render a :class:`MetricReport` as Markdown, CSV or radar/FMA plot data."""

from __future__ import annotations

import csv
import io
import json
from typing import Any

from advgame.metrics import FMA_METRICS, MetricReport

COLUMNS = ("wr", "orr", "csr", "slope", "obr", "rvr", "cnstr", "masr")
FORMATS = ("md", "csv", "radar-json")


def _fmt(v: float | None, pct: bool) -> str:
    if v is None:
        return "n/a"
    return f"{100 * v:.1f}" if pct else f"{v:+.3f}"


def _rows(report: MetricReport) -> list[dict[str, Any]]:
    rows = []
    for model, mm in report.models.items():
        for game, gm in mm.games.items():
            row: dict[str, Any] = {"model": model, "game": game}
            row.update({c: getattr(gm, c) for c in COLUMNS})
            row.update({f"fma_{m}": gm.fma.get(m) for m in FMA_METRICS})
            row["undefined"] = ";".join(gm.undefined)
            rows.append(row)
        row = {"model": model, "game": "avg"}
        row.update({c: mm.avg.get(c) for c in COLUMNS})
        row.update({f"fma_{m}": mm.avg.get(f"fma_{m}") for m in FMA_METRICS})
        row["undefined"] = ""
        rows.append(row)
    return rows


def to_markdown(report: MetricReport) -> str:
    games = sorted({g for mm in report.models.values() for g in mm.games})
    head = ["Model"]
    for metric in ("wr", "orr", "csr"):
        head += [f"{metric.upper()} {g}" for g in games] + [f"{metric.upper()} avg"]
    head += ["slope avg", "OBR avg", "RVR avg", "CnstrR avg", "MASR avg", "FMA(WR) avg"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for model, mm in report.models.items():
        cells = [model]
        for metric in ("wr", "orr", "csr"):
            cells += [_fmt(getattr(mm.games[g], metric) if g in mm.games else None, True) for g in games]
            cells.append(_fmt(mm.avg.get(metric), True))
        cells += [
            _fmt(mm.avg.get("slope"), False),
            _fmt(mm.avg.get("obr"), True),
            _fmt(mm.avg.get("rvr"), True),
            _fmt(mm.avg.get("cnstr"), True),
            _fmt(mm.avg.get("masr"), True),
            _fmt(mm.avg.get("fma_wr"), False),
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Rates in percent; slope and FMA are signed differences. n/a marks undefined values.")
    if report.correlations:
        lines.append("")
        for name, c in report.correlations.items():
            if c is None:
                lines.append(f"- Pearson {name}: undefined (zero variance)")
            else:
                lines.append(f"- Pearson {name}: r = {c['r']:.3f}, p = {c['p']:.3g} (n = {c['n']})")
    return "\n".join(lines) + "\n"


def to_csv(report: MetricReport) -> str:
    rows = _rows(report)
    buf = io.StringIO()
    fields = ["model", "game", *COLUMNS, *(f"fma_{m}" for m in FMA_METRICS), "undefined"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


def to_radar_json(report: MetricReport) -> str:
    fma = {
        model: {
            game: {m: gm.fma.get(m) for m in FMA_METRICS} for game, gm in mm.games.items()
        }
        for model, mm in report.models.items()
    }
    payload = {
        "axes": ["wr", "csr", "slope", "1-orr", "1-obr"],
        "radar": {
            model: [vals["wr"], vals["csr"], vals["slope"], vals["orr"], vals["obr"]]
            for model, vals in report.radar.items()
        },
        "flagged_constant": report.radar_flagged,
        "fma": fma,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render(report: MetricReport, fmt: str) -> str:
    if fmt == "md":
        return to_markdown(report)
    if fmt == "csv":
        return to_csv(report)
    if fmt == "radar-json":
        return to_radar_json(report)
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
