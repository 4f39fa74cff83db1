"""HTTP wrapper around the engines, validator and metrics.

``/agent/{policy}`` doubles as a reference implementation of the external
agent wire contract: point an ``external_agent`` provider at it to exercise
the HTTP path end to end with a scripted bot behind it.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from advgame.core import GameKind, Role, TrajectoryRecord, InvalidRecord
from advgame.registry import data_file_hashes, load_registry, rules_digest
from advgame.service.schemas import (
    AgentRequest,
    AgentResponse,
    HealthResponse,
    MetricsRequest,
    RegistryResponse,
    SimulateRequest,
    SimulateResponse,
    ValidateRequest,
    ValidateResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="advgame", version="0.1.0")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", rules_digest=rules_digest())

    @app.get("/registry", response_model=RegistryResponse)
    def registry() -> RegistryResponse:
        reg = load_registry()
        return RegistryResponse(
            rules_digest=rules_digest(),
            data_files=data_file_hashes(),
            counts={"TDG": len(reg.td_units), "BCG": len(reg.bc_units), "TAG": len(reg.ta_skills)},
        )

    @app.post("/validate", response_model=ValidateResponse)
    def validate_doc(req: ValidateRequest) -> ValidateResponse:
        from advgame.strategy import validate

        v = validate(req.strategy, req.game, req.role, req.budget)
        return ValidateResponse(
            valid=v.ok, cost=v.cost, code=v.code.value if v.code else None, detail=v.detail
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_round(req: SimulateRequest) -> SimulateResponse:
        from advgame.games import simulate
        from advgame.strategy import validate

        inv = validate(req.invader, req.game, Role.INVADER, req.invader_budget)
        dfd = validate(req.defender, req.game, Role.DEFENDER, req.defender_budget)
        problems = [
            {"role": role, "code": v.code.value, "detail": v.detail}
            for role, v in (("invader", inv), ("defender", dfd))
            if not v.ok
        ]
        if problems:
            raise HTTPException(status_code=422, detail=problems)
        sim = simulate(req.game, inv.strategy, dfd.strategy)
        return SimulateResponse(
            outcome=sim.outcome.to_dict(),
            phi={r.value: v for r, v in sim.phi.items()},
            events=len(sim.trace),
            trace=sim.trace if req.include_trace else None,
        )

    @app.post("/metrics")
    def metrics(req: MetricsRequest) -> dict:
        from advgame.metrics import MetricError, SimilarityWeights, build_report

        try:
            records = [TrajectoryRecord.from_dict(r) for r in req.records]
            for r in records:
                r.check()
            report = build_report(records, SimilarityWeights(*req.weights))
        except (InvalidRecord, MetricError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return report.to_dict()

    @app.post("/agent/{policy}", response_model=AgentResponse, response_model_exclude_none=True)
    def agent(policy: str, req: AgentRequest) -> AgentResponse:
        from advgame.bots import get_policy
        from advgame.providers import HistoryEntry, ProposalRequest, derive_seed

        try:
            fn = get_policy(policy)
        except ValueError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        request = ProposalRequest(
            game=GameKind.parse(req.game),
            role=Role.parse(req.role),
            rules_digest=req.rules_digest,
            budget=req.budget,
            round_index=req.round_index,
            history=tuple(HistoryEntry(h.strategy, h.outcome, h.feedback, h.negative) for h in req.history),
            seed=derive_seed(req.game, req.role, req.rules_digest),
        )
        proposal = fn(request, 0)
        if proposal.keep:
            return AgentResponse(keep=True)
        return AgentResponse(strategy=proposal.strategy)

    return app


__all__ = ["create_app"]
