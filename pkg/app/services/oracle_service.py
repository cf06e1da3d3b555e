# app/services/oracle_service.py

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.exceptions import DomainError, RangeError
from app.models import (
    Cost,
    CostPolicy,
    ImprovementPathResult,
    Instance,
    MoveType,
    PathMove,
    State,
    TraceEvent,
)
from app.services.cost_service import CostView

logger = logging.getLogger(__name__)

Assignment = Tuple[int, ...]


def enumerate_states(n: int, m: int, budget: Optional[int] = None) -> Iterator[Assignment]:
    """Todas as m^n atribuições, em ordem lexicográfica."""
    budget = settings.ORACLE_BUDGET if budget is None else budget
    if n < 1 or m < 1:
        raise DomainError(f"n e m devem ser >= 1 (recebido n={n}, m={m}).")
    if m**n > budget:
        raise RangeError(f"{m}^{n} estados excedem o orçamento de enumeração ({budget}).")
    return itertools.product(range(m), repeat=n)


# --- Custos por simulação explícita do escalonamento ---


def brute_force_cost(instance: Instance, queues: Sequence[Sequence[int]], user: int, policy: CostPolicy) -> Cost:
    """Custo do usuário simulando a ordem de atendimento da máquina onde ele está."""
    machine = next(j for j, queue in enumerate(queues) if user in queue)
    residents = list(queues[machine])

    def size(k: int) -> int:
        return instance.proc(k, machine)

    if policy is CostPolicy.MAKESPAN:
        return instance.scale(sum(size(k) for k in residents), machine)
    if policy is CostPolicy.SJF:
        order = sorted(residents, key=lambda k: (size(k), k))
    elif policy is CostPolicy.LJF:
        order = sorted(residents, key=lambda k: (-size(k), k))
    else:
        order = residents

    clock = 0
    for k in order:
        clock += size(k)
        if k == user:
            break
    return instance.scale(clock, machine)


def brute_force_is_ne(instance: Instance, queues: Sequence[Sequence[int]], policy: CostPolicy) -> bool:
    """Testa todos os desvios unilaterais montando explicitamente o estado desviado."""
    for machine, queue in enumerate(queues):
        for user in queue:
            current = brute_force_cost(instance, queues, user, policy)
            for target in range(len(queues)):
                if target == machine:
                    continue
                deviated = [list(q) for q in queues]
                deviated[machine].remove(user)
                deviated[target].append(user)
                if brute_force_cost(instance, deviated, user, policy) < current:
                    return False
    return True


def _canonical_queues(assignment: Assignment, m: int) -> List[List[int]]:
    queues: List[List[int]] = [[] for _ in range(m)]
    for user, machine in enumerate(assignment):
        queues[machine].append(user)
    return queues


def verify_ne_oracle(instance: Instance, policy: CostPolicy, budget: Optional[int] = None) -> List[Assignment]:
    """Estados de equilíbrio por verificação exaustiva (filas FIFO canônicas por id crescente)."""
    policy = CostPolicy(policy)
    return [
        assignment
        for assignment in enumerate_states(instance.n, instance.m, budget)
        if brute_force_is_ne(instance, _canonical_queues(assignment, instance.m), policy)
    ]


# --- Grafo de configurações ---


class ConfigurationGraph:
    """
    Grafo de melhores respostas: uma aresta por usuário que melhora.

    Sob FIFO os nós são estados com filas reais (alcançáveis a partir das
    origens); nas demais políticas basta a atribuição.
    """

    def __init__(self, instance: Instance, policy: CostPolicy):
        self.instance = instance
        self.policy = CostPolicy(policy)
        self.states: Dict[Hashable, State] = {}
        self.edges: Dict[Hashable, List[Tuple[PathMove, Hashable]]] = {}

    def key(self, state: State) -> Hashable:
        if self.policy is CostPolicy.FIFO:
            return state.key()
        return tuple(state.assignment)

    def _successors(self, state: State) -> List[Tuple[PathMove, State]]:
        view = CostView(self.instance, state)
        result = []
        for user in range(self.instance.n):
            response = view.best_response(user, self.policy)
            if response is None:
                continue
            source = state.assignment[user]
            if self.policy is CostPolicy.FIFO:
                nxt = state.copy()
                nxt.move(user, response.machine)
            else:
                assignment = list(state.assignment)
                assignment[user] = response.machine
                nxt = State.from_assignment(assignment, self.instance.m)
            result.append((PathMove(user, source, response.machine), nxt))
        return result

    @classmethod
    def build(
        cls,
        instance: Instance,
        policy: CostPolicy,
        starts: Optional[Iterable[State]] = None,
        budget: Optional[int] = None,
    ) -> "ConfigurationGraph":
        budget = settings.ORACLE_BUDGET if budget is None else budget
        graph = cls(instance, policy)
        if starts is None:
            starts = (
                State.from_assignment(list(a), instance.m)
                for a in enumerate_states(instance.n, instance.m, budget)
            )

        pending: List[State] = []
        for start in starts:
            key = graph.key(start)
            if key not in graph.states:
                graph.states[key] = start
                pending.append(start)

        while pending:
            state = pending.pop()
            key = graph.key(state)
            out = []
            for move, nxt in graph._successors(state):
                nxt_key = graph.key(nxt)
                if nxt_key not in graph.states:
                    if len(graph.states) >= budget:
                        raise RangeError(f"Grafo de configurações excede o orçamento de {budget} nós.")
                    graph.states[nxt_key] = nxt
                    pending.append(nxt)
                out.append((move, nxt_key))
            graph.edges[key] = out

        logger.debug(f"Grafo construído: {len(graph.states)} nós ({graph.policy.value}).")
        return graph

    def sinks(self) -> List[Hashable]:
        return [key for key, out in self.edges.items() if not out]

    def longest_paths(self) -> Optional[Tuple[Dict[Hashable, int], Dict[Hashable, Tuple[PathMove, Hashable]]]]:
        """Comprimento do maior caminho de cada nó até um sorvedouro; None se houver ciclo."""
        length: Dict[Hashable, int] = {}
        choice: Dict[Hashable, Tuple[PathMove, Hashable]] = {}
        color: Dict[Hashable, int] = {}

        for root in self.edges:
            if color.get(root):
                continue
            color[root] = 1
            stack = [(root, iter(self.edges[root]))]
            while stack:
                node, children = stack[-1]
                descended = False
                for _, child in children:
                    mark = color.get(child, 0)
                    if mark == 1:
                        return None
                    if mark == 0:
                        color[child] = 1
                        stack.append((child, iter(self.edges[child])))
                        descended = True
                        break
                if descended:
                    continue
                best = 0
                for move, child in self.edges[node]:
                    if length[child] + 1 > best:
                        best = length[child] + 1
                        choice[node] = (move, child)
                length[node] = best
                color[node] = 2
                stack.pop()
        return length, choice

    def witness(self, start: Hashable, choice: Dict[Hashable, Tuple[PathMove, Hashable]]) -> List[PathMove]:
        path = []
        node = start
        while node in choice:
            move, node = choice[node]
            path.append(move)
        return path


def longest_improvement_path(
    instance: Instance,
    policy: CostPolicy,
    start: Optional[State] = None,
    budget: Optional[int] = None,
) -> ImprovementPathResult:
    """
    Maior caminho de melhorias até um equilíbrio, a partir de `start` ou de qualquer estado.

    Limita superiormente o número de passos de qualquer algoritmo de prioridade.
    """
    policy = CostPolicy(policy)
    starts = [start.copy()] if start is not None else None
    graph = ConfigurationGraph.build(instance, policy, starts=starts, budget=budget)
    solved = graph.longest_paths()
    if solved is None:
        logger.info(f"Ciclo de melhores respostas detectado ({policy.value}).")
        return ImprovementPathResult(cyclic=True, length=None, witness=[])

    length, choice = solved
    if start is not None:
        origin = graph.key(start)
    else:
        canonical = [
            graph.key(State.from_assignment(list(a), instance.m))
            for a in enumerate_states(instance.n, instance.m, budget)
        ]
        origin = max(canonical, key=lambda k: length[k])
    origin_assignment = tuple(graph.states[origin].assignment)
    return ImprovementPathResult(
        cyclic=False,
        length=length[origin],
        witness=graph.witness(origin, choice),
        start=origin_assignment,
    )


def is_trace_path(instance: Instance, policy: CostPolicy, initial: State, trace: Sequence[TraceEvent]) -> bool:
    """Reproduz o traço aresta por aresta no grafo de melhores respostas."""
    policy = CostPolicy(policy)
    state = initial.copy()
    for event in trace:
        if event.move_type is not MoveType.SINGLE:
            return False
        if state.assignment[event.mover] != event.source:
            return False
        response = CostView(instance, state).best_response(event.mover, policy)
        if response is None or response.machine != event.target:
            return False
        state.move(event.mover, event.target)
    return True


@dataclass
class OracleReport:
    states: int
    ne_states: int
    longest_path: Optional[int]
    cyclic: bool


def verify_instance(instance: Instance, policy: CostPolicy, budget: Optional[int] = None) -> OracleReport:
    """Resumo do oráculo: estados, equilíbrios, maior caminho e presença de ciclo."""
    policy = CostPolicy(policy)
    ne_states = verify_ne_oracle(instance, policy, budget)
    path = longest_improvement_path(instance, policy, budget=budget)
    return OracleReport(
        states=instance.m**instance.n,
        ne_states=len(ne_states),
        longest_path=path.length,
        cyclic=path.cyclic,
    )
