# app/services/nashification_service.py

import logging
from typing import Optional

from app.core.exceptions import UnsupportedConfigurationError
from app.models import CostPolicy, Instance, MachineModel, NashifyResult, PriorityAlgorithm, PriorityTag, State
from app.services.cost_service import makespan
from app.services.dynamics_service import run_to_ne

logger = logging.getLogger(__name__)


def nashify(instance: Instance, initial: State, max_steps: Optional[int] = None) -> NashifyResult:
    """
    Leva uma atribuição a um equilíbrio de Nash puro sem aumentar o makespan.

    Usa a dinâmica de melhor resposta com prioridade maw sob makespan; em
    máquinas idênticas cada usuário migra no máximo uma vez.
    """
    if instance.machine_model is MachineModel.UNRELATED:
        raise UnsupportedConfigurationError("Nashificação não é suportada em máquinas não relacionadas.")

    initial.validate(instance)
    initial_makespan = makespan(instance, initial)
    result = run_to_ne(
        instance,
        initial,
        CostPolicy.MAKESPAN,
        PriorityAlgorithm(tag=PriorityTag.MAW),
        max_steps=max_steps,
    )
    final_makespan = makespan(instance, result.final_state)

    if not result.reached_ne:
        logger.warning(f"Nashificação interrompida após {result.steps} movimentos sem atingir equilíbrio.")
    logger.info(f"Nashificação: {result.steps} movimentos, makespan {initial_makespan} -> {final_makespan}.")

    return NashifyResult(
        moves=result.steps,
        final_state=result.final_state,
        initial_makespan=initial_makespan,
        final_makespan=final_makespan,
        reached_ne=result.reached_ne,
        trace=result.trace,
    )
