# app/schemas.py
#
# Modelos de requisição e resposta da API HTTP.

from typing import List, Optional

from pydantic import BaseModel, Field

from app.models import (
    SEED_MAX,
    CoalitionPriority,
    CostPolicy,
    InitialPlacement,
    Instance,
    PriorityTag,
)


class SimulateRequest(BaseModel):
    instance: Instance
    policy: CostPolicy = CostPolicy.MAKESPAN
    priority: PriorityTag = PriorityTag.MAW
    coalition: Optional[CoalitionPriority] = None
    seed: int = Field(1, ge=0, le=SEED_MAX)
    initial: InitialPlacement = InitialPlacement.CONCENTRATED
    # Atribuição inicial explícita (máquina de cada usuário); tem precedência sobre `initial`
    assignment: Optional[List[int]] = None
    max_steps: Optional[int] = Field(None, ge=1)
    include_trace: bool = True


class TraceRow(BaseModel):
    step: int
    mover: str
    source: int
    target: int
    cost_before: str
    cost_after: str
    potential: str
    makespan: str
    move_type: str


class SimulateResponse(BaseModel):
    steps: int
    flips: int
    reached_ne: bool
    makespan: str
    assignment: List[int]
    trace: List[TraceRow] = []


class NashifyRequest(BaseModel):
    instance: Instance
    assignment: List[int]
    max_steps: Optional[int] = Field(None, ge=1)


class NashifyResponse(BaseModel):
    moves: int
    initial_makespan: str
    final_makespan: str
    reached_ne: bool
    assignment: List[int]


class VerifyRequest(BaseModel):
    instance: Instance
    policy: CostPolicy = CostPolicy.MAKESPAN
    budget: Optional[int] = Field(None, ge=1)


class VerifyResponse(BaseModel):
    states: int
    ne_states: int
    longest_path: Optional[int] = None
    cyclic: bool


class InfoResponse(BaseModel):
    app_name: str
    machine_models: List[str]
    policies: List[str]
    priorities: List[str]
    coalition_priorities: List[str]
    distributions: List[str]
