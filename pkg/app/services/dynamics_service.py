# app/services/dynamics_service.py

import logging
from typing import Dict, List, NamedTuple, Optional, Sequence

from app.core.config import settings
from app.core.exceptions import ContractViolationError
from app.models import (
    Cost,
    CostPolicy,
    Instance,
    MoveType,
    PriorityAlgorithm,
    PriorityTag,
    RunResult,
    State,
    TraceEvent,
)
from app.services.cost_service import CostView, selection_weight
from app.services.rng_service import SplitMix64

logger = logging.getLogger(__name__)


class SelectionHistory:
    """
    Ordem global "menos recentemente selecionado".

    Usuários nunca selecionados vêm primeiro, por id crescente; cada seleção
    manda o usuário para o fim da ordem.
    """

    def __init__(self) -> None:
        self._last: Dict[int, int] = {}
        self._tick = 0

    def rank(self, user: int) -> tuple:
        return (self._last.get(user, -1), user)

    def record(self, user: int) -> None:
        self._last[user] = self._tick
        self._tick += 1


def improving_users(instance: Instance, state: State, policy: CostPolicy, view: Optional[CostView] = None) -> List[int]:
    """Usuários com movimento estritamente melhor disponível, em ordem crescente de id."""
    view = view or CostView(instance, state)
    policy = CostPolicy(policy)
    return [u for u in range(instance.n) if view.best_response(u, policy) is not None]


def select_user(
    candidates: Sequence[int],
    algo: PriorityAlgorithm,
    history: SelectionHistory,
    rng: SplitMix64,
    weights: Sequence[int],
) -> int:
    """Escolhe o próximo usuário a migrar segundo o algoritmo de prioridade."""
    if not candidates:
        raise ContractViolationError("Não há usuários candidatos para seleção.")

    if algo.tag is PriorityTag.MAW:
        chosen = min(candidates, key=lambda u: (-weights[u], u))
    elif algo.tag is PriorityTag.MIW:
        chosen = min(candidates, key=lambda u: (weights[u], u))
    elif algo.tag is PriorityTag.FIFO:
        chosen = min(candidates, key=history.rank)
    else:
        chosen = rng.choice(candidates)

    history.record(chosen)
    return chosen


def potential(instance: Instance, state: State, policy: CostPolicy) -> Cost:
    """Soma dos custos atuais de todos os usuários."""
    return CostView(instance, state).potential(CostPolicy(policy))


class Migration(NamedTuple):
    mover: int
    source: int
    target: int
    cost_before: Cost


def advance(
    instance: Instance,
    state: State,
    policy: CostPolicy,
    algo: PriorityAlgorithm,
    history: SelectionHistory,
    rng: SplitMix64,
) -> Optional[Migration]:
    """Migra o usuário escolhido sem montar o evento de traço."""
    view = CostView(instance, state)
    candidates = improving_users(instance, state, policy, view)
    if not candidates:
        return None

    weights = [selection_weight(instance, state, u) for u in range(instance.n)]
    mover = select_user(candidates, algo, history, rng, weights)
    response = view.best_response(mover, policy)
    source = state.assignment[mover]
    cost_before = view.current_cost(mover, policy)
    state.move(mover, response.machine)
    return Migration(mover, source, response.machine, cost_before)


def step(
    instance: Instance,
    state: State,
    policy: CostPolicy,
    algo: PriorityAlgorithm,
    history: SelectionHistory,
    rng: SplitMix64,
    step_index: int = 0,
) -> Optional[TraceEvent]:
    """
    Executa um passo do modelo ESS: um único usuário migra para a melhor resposta.

    Retorna None quando o estado já é um equilíbrio de Nash puro.
    """
    moved = advance(instance, state, policy, algo, history, rng)
    if moved is None:
        return None
    mover, source, target, cost_before = moved

    after = CostView(instance, state)
    event = TraceEvent(
        step_index=step_index,
        mover=mover,
        source=source,
        target=target,
        cost_before=cost_before,
        cost_after=after.current_cost(mover, policy),
        potential_after=after.potential(policy),
        makespan_after=after.makespan(),
        move_type=MoveType.SINGLE,
    )
    logger.debug(
        "Passo %d: usuário %d %d->%d custo %s->%s",
        step_index, mover, source, target, event.cost_before, event.cost_after,
    )
    return event


def run_to_ne(
    instance: Instance,
    initial: State,
    policy: CostPolicy,
    algo: PriorityAlgorithm,
    max_steps: Optional[int] = None,
    keep_trace: bool = True,
) -> RunResult:
    """
    Itera passos até o equilíbrio ou até esgotar max_steps (resultado normal, não erro).

    Com keep_trace=False o traço fica vazio e só as contagens são mantidas;
    os experimentos usam esse modo.
    """
    max_steps = settings.MAX_STEPS if max_steps is None else max_steps
    if max_steps < 1:
        raise ContractViolationError(f"max_steps deve ser >= 1 (recebido {max_steps}).")

    policy = CostPolicy(policy)
    initial.validate(instance)
    state = initial.copy()
    history = SelectionHistory()
    rng = SplitMix64(algo.rng_seed or 0)
    trace: List[TraceEvent] = []
    selections: Dict[int, int] = {}
    steps = 0

    reached_ne = False
    while True:
        if steps >= max_steps:
            # o cap só é "esgotado" se ainda houver movimento possível
            reached_ne = not improving_users(instance, state, policy)
            break
        if keep_trace:
            event = step(instance, state, policy, algo, history, rng, step_index=steps)
            mover = event.mover if event is not None else None
            if event is not None:
                trace.append(event)
        else:
            moved = advance(instance, state, policy, algo, history, rng)
            mover = moved.mover if moved is not None else None
        if mover is None:
            reached_ne = True
            break
        steps += 1
        selections[mover] = selections.get(mover, 0) + 1

    if reached_ne:
        logger.debug(f"Equilíbrio atingido em {steps} passos ({policy.value}/{algo.tag.value}).")
    else:
        logger.warning(f"Limite de {max_steps} passos esgotado sem equilíbrio ({policy.value}/{algo.tag.value}).")

    return RunResult(
        steps=steps,
        reached_ne=reached_ne,
        final_state=state,
        trace=trace,
        selections=selections,
    )
