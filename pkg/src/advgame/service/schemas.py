from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

GameName = Literal["TDG", "BCG", "TAG"]
RoleName = Literal["invader", "defender"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(BaseModel):
    status: str
    rules_digest: str


class RegistryResponse(BaseModel):
    rules_digest: str
    data_files: dict[str, str]
    counts: dict[str, int]


class ValidateRequest(_Strict):
    game: GameName
    role: RoleName
    strategy: Any
    budget: Optional[int] = Field(None, ge=0)


class ValidateResponse(BaseModel):
    valid: bool
    cost: int
    code: Optional[str] = None
    detail: str = ""


class SimulateRequest(_Strict):
    game: GameName
    invader: Any
    defender: Any
    invader_budget: Optional[int] = Field(None, ge=0)
    defender_budget: Optional[int] = Field(None, ge=0)
    include_trace: bool = False


class SimulateResponse(BaseModel):
    outcome: dict[str, Any]
    phi: dict[str, float]
    events: int
    trace: Optional[list[dict[str, Any]]] = None


class MetricsRequest(_Strict):
    records: list[dict[str, Any]] = Field(min_length=1)
    weights: tuple[float, float, float] = (0.5, 0.0, 0.5)


class HistoryItem(BaseModel):
    strategy: Any = None
    outcome: dict[str, Any] = {}
    feedback: str = ""
    negative: bool = False


class AgentRequest(BaseModel):
    """The per-round request an external agent receives."""

    game: GameName
    role: RoleName
    rules_digest: str
    budget: int = Field(ge=0)
    round_index: int = Field(ge=1)
    history: list[HistoryItem] = []


class AgentResponse(BaseModel):
    strategy: Any = None
    keep: Optional[bool] = None
