import logging

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response

# Importações do projeto
from app.core.config import settings
from app.core.logging import configure_logging
from app.models import (
    CoalitionPriority,
    CostPolicy,
    MachineModel,
    PolicyConfig,
    PriorityAlgorithm,
    PriorityTag,
    SimulationOutcome,
    State,
    WeightDistribution,
)
from app.schemas import (
    InfoResponse,
    NashifyRequest,
    NashifyResponse,
    SimulateRequest,
    SimulateResponse,
    TraceRow,
    VerifyRequest,
    VerifyResponse,
)
from app.services.io_service import TRACE_HEADER, format_cost, trace_rows, trace_to_csv
from app.services.nashification_service import nashify
from app.services.oracle_service import verify_instance
from app.services.simulation_service import SimulationService

configure_logging(settings.LOG_LEVEL)
logger = logging.getLogger(__name__)

app = FastAPI(title=settings.APP_NAME, debug=settings.DEBUG)


def _simulate(request: SimulateRequest) -> SimulationOutcome:
    instance = request.instance
    service = SimulationService(max_steps=request.max_steps)
    if request.assignment is not None:
        if len(request.assignment) != instance.n:
            raise ValueError(f"A atribuição tem {len(request.assignment)} usuários; a instância tem {instance.n}.")
        initial = State.from_assignment(request.assignment, instance.m)
    else:
        initial = service.initial_state(instance, request.initial, request.seed)

    seed = request.seed if request.priority is PriorityTag.RANDOM else None
    config = PolicyConfig(
        policy=request.policy,
        priority=PriorityAlgorithm.of(request.priority, seed),
        coalition=request.coalition,
        seed=request.seed,
    )
    return service.run(instance, initial, config)


@app.get("/api/info", response_model=InfoResponse)
def info():
    """Nome da aplicação e enumerações suportadas."""
    return InfoResponse(
        app_name=settings.APP_NAME,
        machine_models=[m.value for m in MachineModel],
        policies=[p.value for p in CostPolicy],
        priorities=[p.value for p in PriorityTag],
        coalition_priorities=[c.value for c in CoalitionPriority],
        distributions=[d.value for d in WeightDistribution],
    )


@app.post("/api/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest):
    """Executa a dinâmica até o equilíbrio (ou até o limite de passos)."""
    try:
        outcome = _simulate(request)
        rows = trace_rows(outcome.trace) if request.include_trace else []
        return SimulateResponse(
            steps=outcome.steps,
            flips=outcome.flips,
            reached_ne=outcome.reached_ne,
            makespan=format_cost(outcome.makespan),
            assignment=outcome.final_state.assignment,
            trace=[TraceRow(**dict(zip(TRACE_HEADER, row))) for row in rows],
        )
    except ValueError as ve:
        raise HTTPException(status_code=400, detail=str(ve))
    except Exception as e:
        logger.exception("Erro inesperado na simulação")
        raise HTTPException(status_code=500, detail=f"Erro interno no servidor: {e}")


@app.post("/api/export/trace-csv")
def export_trace_csv(request: SimulateRequest):
    """Mesma requisição de /api/simulate; devolve o traço em CSV."""
    try:
        outcome = _simulate(request)
        return Response(
            content=trace_to_csv(outcome.trace),
            media_type="text/csv",
            headers={"Content-Disposition": 'attachment; filename="trace.csv"'},
        )
    except ValueError as ve:
        raise HTTPException(status_code=400, detail=str(ve))
    except Exception as e:
        logger.exception("Erro inesperado na exportação do traço")
        raise HTTPException(status_code=500, detail=f"Erro interno no servidor: {e}")


@app.post("/api/nashify", response_model=NashifyResponse)
def nashify_assignment(request: NashifyRequest):
    """Converte uma atribuição em equilíbrio de Nash sem aumentar o makespan."""
    try:
        instance = request.instance
        if len(request.assignment) != instance.n:
            raise ValueError(f"A atribuição tem {len(request.assignment)} usuários; a instância tem {instance.n}.")
        initial = State.from_assignment(request.assignment, instance.m)
        result = nashify(instance, initial, max_steps=request.max_steps)
        return NashifyResponse(
            moves=result.moves,
            initial_makespan=format_cost(result.initial_makespan),
            final_makespan=format_cost(result.final_makespan),
            reached_ne=result.reached_ne,
            assignment=result.final_state.assignment,
        )
    except ValueError as ve:
        raise HTTPException(status_code=400, detail=str(ve))
    except Exception as e:
        logger.exception("Erro inesperado na nashificação")
        raise HTTPException(status_code=500, detail=f"Erro interno no servidor: {e}")


@app.post("/api/verify", response_model=VerifyResponse)
def verify(request: VerifyRequest):
    """Oráculo exaustivo para instâncias pequenas."""
    try:
        report = verify_instance(request.instance, request.policy, budget=request.budget)
        return VerifyResponse(
            states=report.states,
            ne_states=report.ne_states,
            longest_path=report.longest_path,
            cyclic=report.cyclic,
        )
    except ValueError as ve:
        raise HTTPException(status_code=400, detail=str(ve))
    except Exception as e:
        logger.exception("Erro inesperado na verificação")
        raise HTTPException(status_code=500, detail=f"Erro interno no servidor: {e}")
