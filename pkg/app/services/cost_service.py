# app/services/cost_service.py

from bisect import bisect_left
from itertools import accumulate
from typing import Dict, List, NamedTuple, Optional, Tuple

from app.core.exceptions import CostOverflowError
from app.models import WEIGHT_MAX, Cost, CostPolicy, Instance, MachineModel, State

ACCUMULATOR_MAX = WEIGHT_MAX


class BestResponse(NamedTuple):
    machine: int
    cost: Cost


def _checked(total: int) -> int:
    if total > ACCUMULATOR_MAX:
        raise CostOverflowError(f"Custo {total} excede o acumulador de 128 bits.")
    return total


class CostView:
    """
    Visão somente-leitura de um estado para o cálculo de custos.

    Cargas, prefixos FIFO e ordens SJF/LJF de cada máquina são calculados sob
    demanda e guardados; a visão deixa de valer assim que o estado muda.
    """

    def __init__(self, instance: Instance, state: State):
        self.instance = instance
        self.state = state
        self._loads: Dict[int, int] = {}
        self._fifo: Dict[int, Tuple[Dict[int, int], List[int]]] = {}
        self._ordered: Dict[Tuple[int, CostPolicy], Tuple[List[Tuple[int, int]], List[int]]] = {}

    # --- somas brutas (antes da divisão pela velocidade) ---

    def raw_load(self, machine: int) -> int:
        load = self._loads.get(machine)
        if load is None:
            proc = self.instance.processing
            load = sum(proc[k][machine] for k in self.state.queues[machine])
            self._loads[machine] = load
        return load

    def _fifo_prefix(self, machine: int) -> Tuple[Dict[int, int], List[int]]:
        cached = self._fifo.get(machine)
        if cached is None:
            proc = self.instance.processing
            queue = self.state.queues[machine]
            position = {user: i for i, user in enumerate(queue)}
            prefix = list(accumulate(proc[k][machine] for k in queue))
            cached = (position, prefix)
            self._fifo[machine] = cached
        return cached

    def _order(self, machine: int, policy: CostPolicy) -> Tuple[List[Tuple[int, int]], List[int]]:
        cached = self._ordered.get((machine, policy))
        if cached is None:
            proc = self.instance.processing
            sign = 1 if policy is CostPolicy.SJF else -1
            keys = sorted((sign * proc[k][machine], k) for k in self.state.queues[machine])
            prefix = [0]
            for key, user in keys:
                prefix.append(prefix[-1] + proc[user][machine])
            cached = (keys, prefix)
            self._ordered[(machine, policy)] = cached
        return cached

    def raw_cost(self, user: int, machine: int, policy: CostPolicy) -> int:
        proc = self.instance.processing
        own = proc[user][machine]
        resident = self.state.assignment[user] == machine

        if policy is CostPolicy.MAKESPAN:
            total = self.raw_load(machine) + (0 if resident else own)
        elif policy is CostPolicy.FIFO:
            if resident:
                position, prefix = self._fifo_prefix(machine)
                total = prefix[position[user]]
            else:
                total = self.raw_load(machine) + own
        else:
            # SJF/LJF: empates pela ordem crescente de id
            sign = 1 if policy is CostPolicy.SJF else -1
            keys, prefix = self._order(machine, policy)
            key = (sign * own, user)
            ahead = bisect_left(keys, key)
            total = prefix[ahead] + own
        return _checked(total)

    # --- custos escalados ---

    def load(self, machine: int) -> Cost:
        return self.instance.scale(_checked(self.raw_load(machine)), machine)

    def cost(self, user: int, machine: int, policy: CostPolicy) -> Cost:
        return self.instance.scale(self.raw_cost(user, machine, policy), machine)

    def current_cost(self, user: int, policy: CostPolicy) -> Cost:
        return self.cost(user, self.state.assignment[user], policy)

    def best_response(self, user: int, policy: CostPolicy) -> Optional[BestResponse]:
        current = self.state.assignment[user]
        best_machine, best_cost = -1, None
        for machine in range(self.instance.m):
            if machine == current:
                continue
            cost = self.cost(user, machine, policy)
            if best_cost is None or cost < best_cost:
                best_machine, best_cost = machine, cost
        if best_cost is None or not best_cost < self.current_cost(user, policy):
            return None
        return BestResponse(best_machine, best_cost)

    def makespan(self) -> Cost:
        return max(self.load(j) for j in range(self.instance.m))

    def potential(self, policy: CostPolicy) -> Cost:
        total = sum(self.current_cost(u, policy) for u in range(self.instance.n))
        if total > ACCUMULATOR_MAX:
            raise CostOverflowError(f"Potencial {total} excede o acumulador de 128 bits.")
        return total


# --- Operações públicas ---


def machine_load(instance: Instance, state: State, machine: int) -> Cost:
    """Soma dos pesos residentes (escalada pela velocidade em máquinas relacionadas)."""
    instance.check_machine(machine)
    return CostView(instance, state).load(machine)


def user_cost(instance: Instance, state: State, user: int, machine: int, policy: CostPolicy) -> Cost:
    """
    Custo do usuário na máquina sob a política dada.

    Se o usuário não reside na máquina, o custo é o hipotético de entrar no
    fim da fila.
    """
    instance.check_user(user)
    instance.check_machine(machine)
    return CostView(instance, state).cost(user, machine, CostPolicy(policy))


def best_response(instance: Instance, state: State, user: int, policy: CostPolicy) -> Optional[BestResponse]:
    """Melhor resposta estritamente melhor que o custo atual; empates pela menor máquina."""
    instance.check_user(user)
    return CostView(instance, state).best_response(user, CostPolicy(policy))


def is_pure_ne(instance: Instance, state: State, policy: CostPolicy) -> bool:
    view = CostView(instance, state)
    policy = CostPolicy(policy)
    return all(view.best_response(u, policy) is None for u in range(instance.n))


def makespan(instance: Instance, state: State) -> Cost:
    return CostView(instance, state).makespan()


def selection_weight(instance: Instance, state: State, user: int) -> int:
    """Peso comparado pelos algoritmos de prioridade (máquinas não relacionadas: custo na máquina atual)."""
    if instance.machine_model is MachineModel.UNRELATED:
        return instance.proc(user, state.assignment[user])
    return instance.processing[user][0]
