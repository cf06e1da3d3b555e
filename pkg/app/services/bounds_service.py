# app/services/bounds_service.py
#
# Tabela de referência com os limites de convergência conhecidos para o
# modelo ESS. Os valores servem para conferência dos experimentos; não são
# recalculados aqui.

from typing import Optional

from app.models import CostPolicy, GrowthTag, MachineModel, PriorityTag

# (política, prioridade) -> crescimento esperado em máquinas idênticas
_IDENTICAL_GROWTH = {
    (CostPolicy.MAKESPAN, PriorityTag.MAW): GrowthTag.LINEAR,
    (CostPolicy.MAKESPAN, PriorityTag.MIW): GrowthTag.POLYNOMIAL,
    (CostPolicy.SJF, PriorityTag.MAW): GrowthTag.EXPONENTIAL,
    (CostPolicy.SJF, PriorityTag.MIW): GrowthTag.LINEAR,
    (CostPolicy.LJF, PriorityTag.MAW): GrowthTag.LINEAR,
    (CostPolicy.LJF, PriorityTag.MIW): GrowthTag.EXPONENTIAL,
}


def cited_upper_bound(
    machine_model: MachineModel,
    policy: CostPolicy,
    priority: PriorityTag,
    n: int,
    w_max: int,
) -> Optional[int]:
    """Limite superior de passos conhecido para a combinação, ou None se não houver."""
    machine_model, policy, priority = MachineModel(machine_model), CostPolicy(policy), PriorityTag(priority)

    if machine_model is MachineModel.IDENTICAL:
        if policy is CostPolicy.FIFO:
            return max(n - 1, 0)
        if (policy, priority) in {
            (CostPolicy.MAKESPAN, PriorityTag.MAW),
            (CostPolicy.SJF, PriorityTag.MIW),
            (CostPolicy.LJF, PriorityTag.MAW),
        }:
            return n
        return None

    if machine_model is MachineModel.UNRELATED and policy is CostPolicy.FIFO:
        return (n * n * w_max) // 2
    return None


def expected_growth(policy: CostPolicy, priority: PriorityTag) -> Optional[GrowthTag]:
    """Crescimento esperado em máquinas idênticas (FIFO é linear para qualquer prioridade)."""
    policy, priority = CostPolicy(policy), PriorityTag(priority)
    if policy is CostPolicy.FIFO:
        return GrowthTag.LINEAR
    return _IDENTICAL_GROWTH.get((policy, priority))
