"""``advgame`` command line.

Exit codes (stable, for CI use):

* 0  success
* 1  validation error (bad strategy, bad config, bad log record)
* 2  I/O error (missing or unreadable file, unwritable output)
* 64 usage error (bad flags, fewer than two models, ...)
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence

from pydantic import ValidationError

from advgame.core import GameKind, InvalidRecord, Role, ViolationCode, canonical_json, read_log, write_log
from advgame.registry import data_file_hashes, rules_digest

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit(2), which we reserve for I/O
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _version() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        v = "0+unknown"
    lines = [f"advgame {v}", f"rules digest {rules_digest()}"]
    lines += [f"  {name}  sha256:{digest}" for name, digest in sorted(data_file_hashes().items())]
    return "\n".join(lines)


class _VersionAction(argparse.Action):
    def __init__(self, option_strings: Sequence[str], dest: str, **kwargs: Any) -> None:
        super().__init__(option_strings, dest, nargs=0, help="print version and registry data hashes")

    def __call__(self, parser, namespace, values, option_string=None) -> None:  # type: ignore[override]
        print(_version())
        parser.exit(EXIT_OK)


def _load_json(path: str) -> Any:
    """Read a JSON document; IO problems raise OSError, bad JSON returns a marker."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        return _BadJson(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})")


class _BadJson:
    def __init__(self, detail: str) -> None:
        self.detail = detail


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _parse_budget(raw: str | None) -> int | None:
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"budget must be an integer, got {raw!r}") from None
    if value < 0:
        raise UsageError("budget must be non-negative")
    return value


def _check(doc: Any, game: GameKind, role: Role, budget: int | None):
    from advgame.strategy import Violation, validate

    if isinstance(doc, _BadJson):
        return Violation(ViolationCode.MALFORMED_DOCUMENT, doc.detail)
    return validate(doc, game, role, budget)


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    game, role = GameKind.parse(args.game), Role.parse(args.role)
    verdict = _check(_load_json(args.strategy), game, role, _parse_budget(args.budget))
    if verdict.ok:
        print(canonical_json({"valid": True, "cost": verdict.cost}))
        return EXIT_OK
    print(canonical_json({"valid": False, "code": verdict.code.value, "detail": verdict.detail}), file=sys.stderr)
    return EXIT_INVALID


def cmd_simulate(args: argparse.Namespace) -> int:
    from advgame.games import simulate

    game = GameKind.parse(args.game)
    verdicts = {}
    for role, path, budget in (
        (Role.INVADER, args.invader, args.invader_budget),
        (Role.DEFENDER, args.defender, args.defender_budget),
    ):
        verdicts[role] = _check(_load_json(path), game, role, _parse_budget(budget))
    failed = False
    for role, v in verdicts.items():
        if not v.ok:
            failed = True
            print(f"{role.value}: {v.code.value}: {v.detail}", file=sys.stderr)
    if failed:
        return EXIT_INVALID
    sim = simulate(game, verdicts[Role.INVADER].strategy, verdicts[Role.DEFENDER].strategy)
    result = {
        "game": game.value,
        "outcome": sim.outcome.to_dict(),
        "phi": {r.value: v for r, v in sim.phi.items()},
        "events": len(sim.trace),
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    if args.trace:
        _write("".join(canonical_json(e) + "\n" for e in sim.trace), args.trace)
    return EXIT_OK


def _provider_from_spec(spec: str):
    from advgame.providers import make_provider

    kind, _, value = spec.partition(":")
    if not value:
        raise UsageError(f"provider spec must look like kind:value, got {spec!r}")
    if kind == "scripted":
        return make_provider("scripted", policy=value)
    if kind == "replay":
        return make_provider("replay", path=value)
    if kind == "external_agent":
        return make_provider("external_agent", endpoint=value)
    raise UsageError(f"unknown provider kind {kind!r}")


def cmd_match(args: argparse.Namespace) -> int:
    from advgame.orchestrator import MatchPlan, run_match

    if args.rounds < 1:
        raise UsageError("--rounds must be at least 1")
    if args.a == args.b:
        raise UsageError("the two sides need distinct names (use --name-a/--name-b)")
    name_a, name_b = args.name_a or args.a, args.name_b or args.b
    if name_a == name_b:
        raise UsageError("model names must differ")
    plan = MatchPlan(GameKind.parse(args.game), name_a, name_b, args.rounds, args.order)
    providers = {name_a: _provider_from_spec(args.a), name_b: _provider_from_spec(args.b)}
    records = run_match(plan, providers)
    if args.out:
        write_log(args.out, records)
    else:
        sys.stdout.write("".join(r.to_line() + "\n" for r in records))
    return EXIT_OK


def _log_target(out: str | None, default_name: str = "tournament.jsonl") -> Path | None:
    if out is None:
        return None
    p = Path(out)
    if out.endswith(os.sep) or out.endswith("/") or p.is_dir():
        return p / default_name
    return p


def cmd_tournament(args: argparse.Namespace) -> int:
    from advgame.config import RunConfig, load_config
    from advgame.orchestrator import run_tournament

    if args.config:
        try:
            cfg = load_config(args.config)
        except ValidationError as exc:
            models = _model_count(args.config)
            if models is not None and models < 2:
                raise UsageError("tournament needs at least two models") from None
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_INVALID
        except ValueError as exc:  # TOML syntax errors subclass ValueError
            print(f"invalid config: {exc}", file=sys.stderr)
            return EXIT_INVALID
    else:
        bots = [b for b in (args.bots or "").split(",") if b]
        if len(bots) < 2:
            raise UsageError("tournament needs at least two models (--config or --bots a,b)")
        try:
            cfg = RunConfig.model_validate(
                {
                    "models": {b: {"kind": "scripted", "policy": b} for b in bots},
                    "games": args.games.split(",") if args.games else ["TDG", "BCG", "TAG"],
                    "rounds": args.rounds or 5,
                }
            )
        except ValidationError as exc:
            raise UsageError(str(exc)) from None
    if args.rounds:
        cfg.rounds = args.rounds
    jobs = args.jobs or cfg.jobs or os.cpu_count() or 1
    out = _log_target(args.out or cfg.out)
    records = run_tournament(
        cfg.providers(),
        cfg.games,
        cfg.rounds,
        budgets=cfg.budget_map(),
        opponents=cfg.opponents,
        jobs=jobs,
        out=out,
        engine_configs=cfg.engine_configs(),
    )
    matches = len({r.match_id for r in records})
    summary = {"matches": matches, "records": len(records), "log": str(out) if out else None}
    print(canonical_json(summary))
    if out is None:
        sys.stdout.write("".join(r.to_line() + "\n" for r in records))
    return EXIT_OK


def _model_count(path: str) -> int | None:
    from advgame.config import tomllib

    try:
        with open(path, "rb") as fh:
            models = tomllib.load(fh).get("models")
    except (OSError, ValueError):
        return None
    return len(models) if isinstance(models, dict) else 0


def _parse_weights(raw: str | None):
    from advgame.metrics import DEFAULT_WEIGHTS, SimilarityWeights, WeightSumInvalid

    if raw is None:
        return DEFAULT_WEIGHTS
    try:
        parts = [float(x) for x in raw.split(",")]
        if len(parts) != 3:
            raise ValueError
        return SimilarityWeights(*parts)
    except WeightSumInvalid as exc:
        raise UsageError(str(exc)) from None
    except ValueError:
        raise UsageError("--weights takes three comma-separated numbers") from None


def cmd_metrics(args: argparse.Namespace) -> int:
    from advgame.metrics import build_report

    weights = _parse_weights(args.weights)
    records = []
    for path in args.log:
        records.extend(read_log(path))
    if not records:
        print("no records in the given logs", file=sys.stderr)
        return EXIT_INVALID
    report = build_report(records, weights)
    _write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from advgame.metrics import MetricReport
    from advgame.report import render

    data = _load_json(args.report)
    if isinstance(data, _BadJson):
        print(data.detail, file=sys.stderr)
        return EXIT_INVALID
    try:
        report = MetricReport.from_dict(data)
    except (KeyError, TypeError) as exc:
        print(f"not a metrics report: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(render(report, args.format), args.out)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:  # pragma: no cover - blocks
    import uvicorn

    from advgame.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="advgame", description="Adversarial strategy games and behavioural metrics.")
    p.add_argument("--version", action=_VersionAction)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    games = [g.value for g in GameKind] + [g.value.lower() for g in GameKind]

    v = sub.add_parser("validate", help="check one strategy document")
    v.add_argument("--game", required=True, choices=games)
    v.add_argument("--role", required=True, choices=[r.value for r in Role])
    v.add_argument("--budget", help="budget limit (defaults per game/role)")
    v.add_argument("strategy", help="strategy JSON file")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="play one round between two strategy files")
    s.add_argument("--game", required=True, choices=games)
    s.add_argument("--invader", required=True, help="invader strategy JSON file")
    s.add_argument("--defender", required=True, help="defender strategy JSON file")
    s.add_argument("--invader-budget")
    s.add_argument("--defender-budget")
    s.add_argument("--trace", help="write the event trace (JSON lines) here")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("match", help="play a multi-round match between two providers")
    m.add_argument("--game", required=True, choices=games)
    m.add_argument("--a", required=True, help="provider spec, e.g. scripted:greedy_cost")
    m.add_argument("--b", required=True, help="provider spec, e.g. external_agent:http://host/agent")
    m.add_argument("--name-a")
    m.add_argument("--name-b")
    m.add_argument("--rounds", type=int, default=5)
    m.add_argument("--order", choices=("a_first", "b_first"), default="a_first")
    m.add_argument("--out", help="trajectory log (JSON lines); stdout if omitted")
    m.set_defaults(func=cmd_match)

    t = sub.add_parser("tournament", help="run the full pair x game x order matrix")
    t.add_argument("--config", help="TOML run configuration")
    t.add_argument("--bots", help="comma-separated scripted policies (instead of --config)")
    t.add_argument("--games", help="comma-separated games for --bots mode")
    t.add_argument("--rounds", type=int)
    t.add_argument("--jobs", type=int, help="parallel matches (default: config value, else cores)")
    t.add_argument("--out", help="log file, or directory to hold tournament.jsonl")
    t.set_defaults(func=cmd_tournament)

    me = sub.add_parser("metrics", help="compute the metric report from logs")
    me.add_argument("--log", nargs="+", required=True, help="one or more JSON-lines logs")
    me.add_argument("--out", help="report JSON path; stdout if omitted")
    me.add_argument("--weights", help="MASR weights struct,sem,func (default 0.5,0,0.5)")
    me.set_defaults(func=cmd_metrics)

    r = sub.add_parser("report", help="render a metric report")
    r.add_argument("--report", required=True)
    r.add_argument("--format", choices=("md", "csv", "radar-json"), default="md")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.set_defaults(func=cmd_serve)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_help().rstrip() + "\nadvgame: error: a subcommand is required")
        if getattr(args, "jobs", None) is not None and args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except InvalidRecord as exc:
        print(f"invalid log record: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
