# app/services/simulation_service.py

import logging
from typing import Optional

from app.core.config import settings
from app.models import (
    InitialPlacement,
    Instance,
    PolicyConfig,
    SimulationOutcome,
    State,
)
from app.services.coalition_service import run_coalitional
from app.services.cost_service import makespan
from app.services.dynamics_service import run_to_ne
from app.services.experiment_service import initial_state

logger = logging.getLogger(__name__)


class SimulationService:
    """Uma execução isolada: escolhe a dinâmica individual ou a com coalizões."""

    def __init__(self, max_steps: Optional[int] = None):
        self.max_steps = settings.MAX_STEPS if max_steps is None else max_steps

    def initial_state(
        self,
        instance: Instance,
        placement: InitialPlacement = InitialPlacement.CONCENTRATED,
        seed: int = 0,
    ) -> State:
        return initial_state(placement, instance.n, instance.m, seed)

    def run(self, instance: Instance, initial: State, config: PolicyConfig) -> SimulationOutcome:
        logger.info(
            f"Simulação: {instance.machine_model.value}, n={instance.n}, m={instance.m}, "
            f"{config.policy.value}/{config.priority.tag.value}"
            + (f", coalizões {config.coalition.value}" if config.coalition else "")
        )

        if config.coalition is not None:
            result = run_coalitional(
                instance, initial, config.priority, config.coalition, max_steps=self.max_steps, policy=config.policy
            )
            single_moves, flips = result.single_moves, result.flips
        else:
            result = run_to_ne(instance, initial, config.policy, config.priority, max_steps=self.max_steps)
            single_moves, flips = result.steps, 0

        return SimulationOutcome(
            single_moves=single_moves,
            flips=flips,
            reached_ne=result.reached_ne,
            makespan=makespan(instance, result.final_state),
            final_state=result.final_state,
            trace=result.trace,
        )
