# app/models.py

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import lcm
from typing import Annotated, Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from app.core.config import settings
from app.core.exceptions import DomainError

WEIGHT_MAX = 2**128 - 1
SEED_MAX = 2**64 - 1

Weight = Annotated[int, Field(ge=1, le=WEIGHT_MAX)]
Cost = Union[int, Fraction]

# --- Enumerações ---


class MachineModel(str, Enum):
    IDENTICAL = "identical"
    RELATED = "related"
    UNRELATED = "unrelated"


class CostPolicy(str, Enum):
    MAKESPAN = "makespan"
    SJF = "sjf"
    LJF = "ljf"
    FIFO = "fifo"


class PriorityTag(str, Enum):
    MAW = "maw"
    MIW = "miw"
    FIFO = "fifo"
    RANDOM = "random"


class CoalitionPriority(str, Enum):
    MAP = "map"
    MIP = "mip"


class MoveType(str, Enum):
    SINGLE = "single"
    FLIP = "flip"


class WeightDistribution(str, Enum):
    A = "a"
    B = "b"
    C = "c"
    D = "d"
    E = "e"


class InitialPlacement(str, Enum):
    CONCENTRATED = "concentrated"
    RANDOM = "random"


class GrowthTag(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"
    INCONCLUSIVE = "inconclusive"


def parse_speed(value: Any) -> Fraction:
    """Converte uma velocidade (int ou string 'p/q') em Fraction positiva."""
    if isinstance(value, bool):
        raise ValueError(f"Velocidade inválida: {value!r}")
    try:
        speed = Fraction(str(value).strip()) if isinstance(value, str) else Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ValueError(f"Velocidade inválida: {value!r}")
    if speed <= 0:
        raise ValueError(f"Velocidade deve ser positiva: {value!r}")
    return speed


# --- Instância do jogo ---


class Instance(BaseModel):
    """Jogo KP: n usuários com pesos (ou matriz de custos) e m máquinas."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    machine_model: MachineModel = Field(..., alias="model")
    m: Optional[int] = Field(None, ge=1, description="Número de máquinas")
    weights: Optional[List[Weight]] = None
    speeds: Optional[List[Union[int, str]]] = None
    cost_matrix: Optional[List[List[Weight]]] = None

    # tempo de processamento do usuário i na máquina j, e velocidades escaladas
    _processing: List[List[int]] = PrivateAttr(default_factory=list)
    _speed_num: List[int] = PrivateAttr(default_factory=list)
    _speed_den: int = PrivateAttr(default=1)

    @model_validator(mode="before")
    @classmethod
    def _fill_machine_count(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("m") is not None:
            return data
        data = dict(data)
        if data.get("speeds") is not None:
            data["m"] = len(data["speeds"])
        elif data.get("cost_matrix"):
            data["m"] = len(data["cost_matrix"][0])
        return data

    @field_validator("speeds")
    @classmethod
    def _check_speeds(cls, speeds: Optional[List[Union[int, str]]]) -> Optional[List[Union[int, str]]]:
        if speeds is not None:
            for s in speeds:
                parse_speed(s)
        return speeds

    @model_validator(mode="after")
    def _check_shape(self) -> "Instance":
        if self.m is None:
            raise ValueError("Campo 'm' é obrigatório para máquinas idênticas.")
        model = self.machine_model
        if model is MachineModel.UNRELATED:
            if self.cost_matrix is None or self.weights is not None or self.speeds is not None:
                raise ValueError("Modelo 'unrelated' exige apenas 'cost_matrix'.")
            if not self.cost_matrix:
                raise ValueError("cost_matrix deve ter ao menos um usuário.")
            if any(len(row) != self.m for row in self.cost_matrix):
                raise ValueError(f"Todas as linhas de cost_matrix devem ter {self.m} colunas.")
        else:
            if self.weights is None or self.cost_matrix is not None:
                raise ValueError(f"Modelo '{model.value}' exige 'weights' e não aceita 'cost_matrix'.")
            if not self.weights:
                raise ValueError("weights deve ter ao menos um usuário.")
            if model is MachineModel.RELATED:
                if self.speeds is None:
                    raise ValueError("Modelo 'related' exige 'speeds'.")
                if len(self.speeds) != self.m:
                    raise ValueError(f"speeds tem {len(self.speeds)} valores, esperado m={self.m}.")
            elif self.speeds is not None:
                raise ValueError("Modelo 'identical' não aceita 'speeds'.")
        return self

    def model_post_init(self, __context: Any) -> None:
        m = self.m or 0
        if self.cost_matrix is not None:
            self._processing = [list(row) for row in self.cost_matrix]
        else:
            self._processing = [[w] * m for w in self.weights or []]

        if self.speeds is not None:
            fractions_ = [parse_speed(s) for s in self.speeds]
            den = lcm(*(f.denominator for f in fractions_))
            self._speed_num = [int(f * den) for f in fractions_]
            self._speed_den = den
        else:
            self._speed_num = [1] * m
            self._speed_den = 1

    # --- construtores de conveniência ---

    @classmethod
    def identical(cls, weights: List[int], m: int) -> "Instance":
        return cls(machine_model=MachineModel.IDENTICAL, m=m, weights=list(weights))

    @classmethod
    def related(cls, weights: List[int], speeds: List[Union[int, str]]) -> "Instance":
        return cls(machine_model=MachineModel.RELATED, weights=list(weights), speeds=list(speeds))

    @classmethod
    def unrelated(cls, cost_matrix: List[List[int]]) -> "Instance":
        return cls(machine_model=MachineModel.UNRELATED, cost_matrix=[list(r) for r in cost_matrix])

    # --- acesso ---

    @property
    def n(self) -> int:
        return len(self._processing)

    @property
    def processing(self) -> List[List[int]]:
        return self._processing

    @property
    def w_max(self) -> int:
        return max(max(row) for row in self._processing)

    def proc(self, user: int, machine: int) -> int:
        return self._processing[user][machine]

    def scale(self, total: int, machine: int) -> Cost:
        """Converte uma soma de pesos em custo (divide pela velocidade nas máquinas relacionadas)."""
        if self.machine_model is not MachineModel.RELATED:
            return total
        return Fraction(total * self._speed_den, self._speed_num[machine])

    def check_user(self, user: int) -> None:
        if not isinstance(user, int) or not 0 <= user < self.n:
            raise DomainError(f"Usuário desconhecido: {user!r} (n={self.n}).")

    def check_machine(self, machine: int) -> None:
        if not isinstance(machine, int) or not 0 <= machine < (self.m or 0):
            raise DomainError(f"Máquina desconhecida: {machine!r} (m={self.m}).")


# --- Estado da dinâmica ---


@dataclass
class State:
    """Atribuição de usuários a máquinas com as filas de chegada de cada máquina."""

    assignment: List[int]
    queues: List[List[int]]
    stamps: List[int]
    arrival_counter: int

    @classmethod
    def from_queues(cls, queues: List[List[int]], n: int) -> "State":
        assignment = [-1] * n
        stamps = [0] * n
        counter = 0
        for machine, queue in enumerate(queues):
            for user in queue:
                if not 0 <= user < n or assignment[user] != -1:
                    raise DomainError(f"Usuário {user} inválido ou repetido nas filas.")
                assignment[user] = machine
        if -1 in assignment:
            raise DomainError(f"Usuário {assignment.index(-1)} não está em nenhuma fila.")
        # carimbos consistentes com a ordem das filas
        for queue in queues:
            for user in queue:
                stamps[user] = counter
                counter += 1
        return cls(assignment=assignment, queues=[list(q) for q in queues], stamps=stamps, arrival_counter=counter)

    @classmethod
    def from_assignment(cls, assignment: List[int], m: int) -> "State":
        """Filas canônicas: usuários em ordem crescente de id em cada máquina."""
        queues: List[List[int]] = [[] for _ in range(m)]
        for user, machine in enumerate(assignment):
            if not isinstance(machine, int) or not 0 <= machine < m:
                raise DomainError(f"Máquina {machine!r} do usuário {user} fora da faixa [0, {m}).")
            queues[machine].append(user)
        return cls.from_queues(queues, len(assignment))

    @classmethod
    def concentrated(cls, n: int, m: int, machine: int = 0) -> "State":
        return cls.from_assignment([machine] * n, m)

    @classmethod
    def random_placement(cls, n: int, m: int, rng: Any) -> "State":
        return cls.from_assignment([rng.randbelow(m) for _ in range(n)], m)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def m(self) -> int:
        return len(self.queues)

    def copy(self) -> "State":
        return State(
            assignment=list(self.assignment),
            queues=[list(q) for q in self.queues],
            stamps=list(self.stamps),
            arrival_counter=self.arrival_counter,
        )

    def key(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(q) for q in self.queues)

    def move(self, user: int, target: int) -> None:
        """Remove o usuário da fila de origem e o coloca no fim da fila de destino."""
        source = self.assignment[user]
        self.queues[source].remove(user)
        self.queues[target].append(user)
        self.assignment[user] = target
        self.stamps[user] = self.arrival_counter
        self.arrival_counter += 1

    def validate(self, instance: Instance) -> None:
        if self.n != instance.n or self.m != instance.m:
            raise DomainError(
                f"Estado ({self.n} usuários, {self.m} máquinas) incompatível com a instância "
                f"({instance.n} usuários, {instance.m} máquinas)."
            )
        seen = set()
        for machine, queue in enumerate(self.queues):
            last_stamp = -1
            for user in queue:
                if user in seen or self.assignment[user] != machine:
                    raise DomainError(f"Fila da máquina {machine} inconsistente no usuário {user}.")
                if self.stamps[user] <= last_stamp:
                    raise DomainError(f"Carimbos de chegada fora de ordem na máquina {machine}.")
                last_stamp = self.stamps[user]
                seen.add(user)
        if len(seen) != self.n:
            raise DomainError("As filas não particionam o conjunto de usuários.")


# --- Algoritmos e configurações ---


class PriorityAlgorithm(BaseModel):
    model_config = ConfigDict(frozen=True)

    tag: PriorityTag
    rng_seed: Optional[int] = Field(None, ge=0, le=SEED_MAX)

    @model_validator(mode="after")
    def _seed_iff_random(self) -> "PriorityAlgorithm":
        if (self.tag is PriorityTag.RANDOM) != (self.rng_seed is not None):
            raise ValueError("rng_seed deve ser informado se, e somente se, tag == 'random'.")
        return self

    @classmethod
    def of(cls, tag: Union[PriorityTag, str], seed: Optional[int] = None) -> "PriorityAlgorithm":
        tag = PriorityTag(tag)
        if tag is PriorityTag.RANDOM:
            return cls(tag=tag, rng_seed=(seed or 0) & SEED_MAX)
        return cls(tag=tag)


class PolicyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: CostPolicy = CostPolicy.MAKESPAN
    priority: PriorityAlgorithm = PriorityAlgorithm(tag=PriorityTag.MAW)
    coalition: Optional[CoalitionPriority] = None
    seed: int = Field(1, ge=0, le=SEED_MAX)

    @model_validator(mode="after")
    def _coalitions_need_makespan(self) -> "PolicyConfig":
        if self.coalition is not None and self.policy is not CostPolicy.MAKESPAN:
            raise ValueError(f"Coalizões exigem política makespan (recebido {self.policy.value}).")
        return self


# --- Resultados ---


@dataclass(frozen=True, slots=True)
class TraceEvent:
    step_index: int
    mover: int
    source: int
    target: int
    cost_before: Cost
    cost_after: Cost
    potential_after: Cost
    makespan_after: Cost
    move_type: MoveType = MoveType.SINGLE
    partner: Optional[int] = None


@dataclass
class RunResult:
    steps: int
    reached_ne: bool
    final_state: State
    trace: List[TraceEvent]
    selections: Dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True, order=True)
class FlipMove:
    user_a: int
    user_b: int
    machine_a: int
    machine_b: int
    pair_key: int


@dataclass
class CoalitionRunResult:
    single_moves: int
    flips: int
    reached_ne: bool
    final_state: State
    trace: List[TraceEvent]

    @property
    def flip_share(self) -> float:
        total = self.single_moves + self.flips
        return self.flips / total if total else 0.0


@dataclass
class NashifyResult:
    moves: int
    final_state: State
    initial_makespan: Cost
    final_makespan: Cost
    reached_ne: bool = True
    trace: List[TraceEvent] = field(default_factory=list)


@dataclass
class SimulationOutcome:
    """Resultado comum às dinâmicas individual e com coalizões."""

    single_moves: int
    flips: int
    reached_ne: bool
    makespan: Cost
    final_state: State
    trace: List[TraceEvent] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.single_moves + self.flips


@dataclass(frozen=True)
class PathMove:
    mover: int
    source: int
    target: int


@dataclass
class ImprovementPathResult:
    cyclic: bool
    length: Optional[int]
    witness: List[PathMove]
    start: Optional[Tuple[int, ...]] = None


# --- Experimentos ---

_M_EXPRESSION = re.compile(r"^\s*n\s*(?:/\s*(\d+))?\s*$")


class ExperimentConfig(BaseModel):
    policy: CostPolicy
    priority: PriorityTag
    coalition: Optional[CoalitionPriority] = None
    machine_model: MachineModel = MachineModel.IDENTICAL
    dist: WeightDistribution
    n_values: List[Annotated[int, Field(ge=1)]]
    m: Union[Annotated[int, Field(ge=1)], str] = Field(default_factory=lambda: settings.DEFAULT_M)
    repetitions: Optional[Annotated[int, Field(ge=1)]] = None
    seed: int = Field(1, ge=0, le=SEED_MAX)
    max_steps: int = Field(default_factory=lambda: settings.MAX_STEPS, ge=1)
    initial: InitialPlacement = InitialPlacement.CONCENTRATED

    @field_validator("n_values")
    @classmethod
    def _increasing(cls, values: List[int]) -> List[int]:
        if not values:
            raise ValueError("n_values não pode ser vazio.")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("n_values deve ser estritamente crescente.")
        return values

    @field_validator("m")
    @classmethod
    def _m_expression(cls, value: Union[int, str]) -> Union[int, str]:
        if isinstance(value, str):
            match = _M_EXPRESSION.match(value)
            if not match or (match.group(1) is not None and int(match.group(1)) == 0):
                raise ValueError(f"Expressão de m inválida: '{value}'. Use um inteiro, 'n' ou 'n/K'.")
        return value

    @model_validator(mode="after")
    def _coalitions_scope(self) -> "ExperimentConfig":
        if self.coalition is not None and (
            self.machine_model is not MachineModel.IDENTICAL or self.policy is not CostPolicy.MAKESPAN
        ):
            raise ValueError("Coalizões exigem máquinas idênticas e política makespan.")
        return self

    @property
    def is_randomized(self) -> bool:
        return (
            self.dist is WeightDistribution.D
            or self.priority is PriorityTag.RANDOM
            or self.initial is InitialPlacement.RANDOM
            or self.machine_model is not MachineModel.IDENTICAL
        )

    @property
    def resolved_repetitions(self) -> int:
        if self.repetitions is not None:
            return self.repetitions
        return 5 if self.is_randomized else 1


class GrowthClass(BaseModel):
    tag: GrowthTag
    fit_exponent_or_rate: float = 0.0
    r_squared: float = Field(0.0, ge=0.0, le=1.0)


class SeriesRow(BaseModel):
    n: int
    policy: CostPolicy
    priority: PriorityTag
    coalition: Optional[CoalitionPriority] = None
    dist: WeightDistribution
    mean_steps: float
    max_steps_observed: int
    mean_flips: float
    capped_runs: int
    runs: int = 1
