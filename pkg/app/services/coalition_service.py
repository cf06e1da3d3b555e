# app/services/coalition_service.py

import logging
from bisect import bisect_left, bisect_right
from typing import List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.exceptions import ContractViolationError, UnsupportedConfigurationError
from app.models import (
    CoalitionPriority,
    CoalitionRunResult,
    CostPolicy,
    FlipMove,
    Instance,
    MachineModel,
    MoveType,
    PriorityAlgorithm,
    State,
    TraceEvent,
)
from app.services.cost_service import CostView
from app.services.dynamics_service import SelectionHistory, advance, improving_users, step
from app.services.rng_service import SplitMix64

logger = logging.getLogger(__name__)


def _require_identical_makespan(instance: Instance, policy: CostPolicy) -> None:
    if instance.machine_model is not MachineModel.IDENTICAL or CostPolicy(policy) is not CostPolicy.MAKESPAN:
        raise UnsupportedConfigurationError(
            "2-flips só são suportados em máquinas idênticas com política makespan "
            f"(recebido {instance.machine_model.value}/{CostPolicy(policy).value})."
        )


def improving_flips(instance: Instance, state: State, policy: CostPolicy = CostPolicy.MAKESPAN) -> List[FlipMove]:
    """
    Todas as trocas de máquina entre pares que reduzem estritamente max(carga(A), carga(B)).

    Cada par é normalizado com o usuário mais pesado (a) na máquina mais carregada (A):
    a troca melhora sse 0 < w_a - w_b < carga(A) - carga(B).
    """
    _require_identical_makespan(instance, policy)
    view = CostView(instance, state)
    loads = [view.raw_load(j) for j in range(instance.m)]
    proc = instance.processing

    flips: List[FlipMove] = []
    for machine_a in range(instance.m):
        for machine_b in range(instance.m):
            gap = loads[machine_a] - loads[machine_b]
            if gap <= 0:
                continue
            for a in state.queues[machine_a]:
                for b in state.queues[machine_b]:
                    diff = proc[a][machine_a] - proc[b][machine_b]
                    if 0 < diff < gap:
                        flips.append(FlipMove(a, b, machine_a, machine_b, diff))
    flips.sort(key=lambda f: (f.user_a, f.user_b))
    return flips


def _flip_rank(flip: FlipMove, priority: CoalitionPriority) -> Tuple[int, int, int]:
    key = -flip.pair_key if priority is CoalitionPriority.MAP else flip.pair_key
    return (key, flip.user_a, flip.user_b)


def select_flip(flips: Sequence[FlipMove], priority: CoalitionPriority) -> FlipMove:
    """map: maior diferença de pesos; mip: menor. Empates por (user_a, user_b)."""
    if not flips:
        raise ContractViolationError("Não há 2-flips candidatos para seleção.")
    priority = CoalitionPriority(priority)
    return min(flips, key=lambda f: _flip_rank(f, priority))


def find_flip(instance: Instance, state: State, priority: CoalitionPriority) -> Optional[FlipMove]:
    """
    Equivalente a select_flip(improving_flips(...)) sem enumerar todos os pares.

    Para cada usuário a, o parceiro extremo é encontrado por busca binária nos
    pesos ordenados da máquina B.
    """
    _require_identical_makespan(instance, CostPolicy.MAKESPAN)
    priority = CoalitionPriority(priority)
    view = CostView(instance, state)
    loads = [view.raw_load(j) for j in range(instance.m)]
    proc = instance.processing

    ordered = []
    for machine in range(instance.m):
        keys = sorted((proc[u][machine], u) for u in state.queues[machine])
        ordered.append((keys, [w for w, _ in keys]))

    best: Optional[Tuple[Tuple[int, int, int], FlipMove]] = None
    for machine_a in range(instance.m):
        for machine_b in range(instance.m):
            gap = loads[machine_a] - loads[machine_b]
            if gap <= 0 or not ordered[machine_b][1]:
                continue
            keys_b, weights_b = ordered[machine_b]
            for a in state.queues[machine_a]:
                w_a = proc[a][machine_a]
                if priority is CoalitionPriority.MIP:
                    idx = bisect_left(weights_b, w_a) - 1
                    if idx < 0 or weights_b[idx] <= w_a - gap:
                        continue
                    idx = bisect_left(weights_b, weights_b[idx])
                else:
                    idx = bisect_right(weights_b, w_a - gap)
                    if idx >= len(weights_b) or weights_b[idx] >= w_a:
                        continue
                w_b, b = keys_b[idx]
                flip = FlipMove(a, b, machine_a, machine_b, w_a - w_b)
                rank = _flip_rank(flip, priority)
                if best is None or rank < best[0]:
                    best = (rank, flip)
    return best[1] if best else None


def apply_flip(instance: Instance, state: State, flip: FlipMove, step_index: int = 0) -> TraceEvent:
    """Troca as máquinas do par; custos do evento são a maior carga das duas máquinas."""
    before = CostView(instance, state)
    cost_before = max(before.load(flip.machine_a), before.load(flip.machine_b))

    state.move(flip.user_a, flip.machine_b)
    state.move(flip.user_b, flip.machine_a)

    after = CostView(instance, state)
    return TraceEvent(
        step_index=step_index,
        mover=flip.user_a,
        source=flip.machine_a,
        target=flip.machine_b,
        cost_before=cost_before,
        cost_after=max(after.load(flip.machine_a), after.load(flip.machine_b)),
        potential_after=after.potential(CostPolicy.MAKESPAN),
        makespan_after=after.makespan(),
        move_type=MoveType.FLIP,
        partner=flip.user_b,
    )


def run_coalitional(
    instance: Instance,
    initial: State,
    algo: PriorityAlgorithm,
    cpriority: CoalitionPriority,
    max_steps: Optional[int] = None,
    keep_trace: bool = True,
    policy: CostPolicy = CostPolicy.MAKESPAN,
) -> CoalitionRunResult:
    """
    Dinâmica com coalizões de até 2 usuários.

    Movimentos individuais têm precedência; 2-flips só ocorrem quando nenhum
    usuário melhora sozinho.
    """
    _require_identical_makespan(instance, policy)
    max_steps = settings.MAX_STEPS if max_steps is None else max_steps
    if max_steps < 1:
        raise ContractViolationError(f"max_steps deve ser >= 1 (recebido {max_steps}).")

    cpriority = CoalitionPriority(cpriority)
    initial.validate(instance)
    state = initial.copy()
    history = SelectionHistory()
    rng = SplitMix64(algo.rng_seed or 0)
    trace: List[TraceEvent] = []
    single_moves = flips = 0

    reached_ne = False
    while True:
        steps = single_moves + flips
        if steps >= max_steps:
            reached_ne = not improving_users(instance, state, CostPolicy.MAKESPAN) and (
                find_flip(instance, state, cpriority) is None
            )
            break
        if keep_trace:
            event = step(instance, state, CostPolicy.MAKESPAN, algo, history, rng, step_index=steps)
            moved = event is not None
            if moved:
                trace.append(event)
        else:
            moved = advance(instance, state, CostPolicy.MAKESPAN, algo, history, rng) is not None
        if moved:
            single_moves += 1
            continue

        flip = find_flip(instance, state, cpriority)
        if flip is None:
            reached_ne = True
            break
        if keep_trace:
            trace.append(apply_flip(instance, state, flip, step_index=steps))
        else:
            state.move(flip.user_a, flip.machine_b)
            state.move(flip.user_b, flip.machine_a)
        flips += 1

    if not reached_ne:
        logger.warning(f"Limite de {max_steps} passos esgotado na dinâmica com coalizões.")
    logger.debug(f"Coalizões ({cpriority.value}): {single_moves} movimentos individuais, {flips} 2-flips.")

    return CoalitionRunResult(
        single_moves=single_moves,
        flips=flips,
        reached_ne=reached_ne,
        final_state=state,
        trace=trace,
    )
