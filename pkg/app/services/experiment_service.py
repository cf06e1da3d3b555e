# app/services/experiment_service.py

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.core.config import settings
from app.core.exceptions import DomainError, RangeError
from app.models import (
    WEIGHT_MAX,
    CoalitionPriority,
    CostPolicy,
    ExperimentConfig,
    GrowthClass,
    GrowthTag,
    InitialPlacement,
    Instance,
    MachineModel,
    PriorityAlgorithm,
    PriorityTag,
    SeriesRow,
    State,
    WeightDistribution,
)
from app.services.bounds_service import cited_upper_bound, expected_growth
from app.services.coalition_service import run_coalitional
from app.services.dynamics_service import run_to_ne
from app.services.rng_service import SplitMix64

logger = logging.getLogger(__name__)

SERIES_COLUMNS = [
    "n",
    "policy",
    "priority",
    "coalition",
    "dist",
    "mean_steps",
    "max_steps_observed",
    "mean_flips",
    "capped_runs",
]

# fração de usuários pesados por distribuição
_HEAVY_SHARE = {
    WeightDistribution.A: 10,
    WeightDistribution.B: 50,
    WeightDistribution.C: 90,
}

_M_EXPRESSION = re.compile(r"^\s*n\s*(?:/\s*(\d+))?\s*$")


# --- Geração de instâncias ---


def heavy_weight(n: int) -> int:
    """10^⌊n/10⌋, o peso pesado das distribuições a-d."""
    weight = 10 ** (n // 10)
    if weight > WEIGHT_MAX:
        raise RangeError(f"10^{n // 10} não cabe em 128 bits (n={n}).")
    return weight


def gen_weights(dist: WeightDistribution, n: int, seed: int = 0) -> List[int]:
    """
    Pesos das distribuições de teste.

    a/b/c: 10%/50%/90% (arredondado para cima) dos usuários com peso 10^⌊n/10⌋,
    os demais com peso 1; os pesados são os de menor id.
    d: uniforme em [1, 10^⌊n/10⌋].
    e: o peso é o próprio id contado a partir de 1.
    """
    dist = WeightDistribution(dist)
    if n < 1:
        raise DomainError(f"n deve ser >= 1 (recebido {n}).")

    if dist is WeightDistribution.E:
        return list(range(1, n + 1))

    heavy = heavy_weight(n)
    if dist is WeightDistribution.D:
        rng = SplitMix64(seed)
        return [rng.randint(1, heavy) for _ in range(n)]

    count = -(-n * _HEAVY_SHARE[dist] // 100)
    return [heavy] * count + [1] * (n - count)


def resolve_machine_count(expr: Union[int, str], n: int) -> int:
    """Resolve m a partir de um inteiro, 'n' ou 'n/K' (arredondado para cima)."""
    if isinstance(expr, int):
        if expr < 1:
            raise DomainError(f"m deve ser >= 1 (recebido {expr}).")
        return expr
    text = str(expr)
    if text.strip().isdigit():
        return resolve_machine_count(int(text), n)
    match = _M_EXPRESSION.match(text)
    if not match:
        raise DomainError(f"Expressão de m inválida: '{expr}'. Use um inteiro, 'n' ou 'n/K'.")
    divisor = int(match.group(1) or 1)
    if divisor == 0:
        raise DomainError("Divisor de m não pode ser zero.")
    return max(1, -(-n // divisor))


def build_instance(machine_model: MachineModel, weights: List[int], m: int, seed: int = 0) -> Instance:
    """Instância do modelo pedido; velocidades e fatores vêm de um fluxo SplitMix64 próprio."""
    machine_model = MachineModel(machine_model)
    if machine_model is MachineModel.IDENTICAL:
        return Instance.identical(weights, m)

    rng = SplitMix64(seed)
    if machine_model is MachineModel.RELATED:
        speeds = [rng.randint(1, settings.MAX_SPEED) for _ in range(m)]
        return Instance.related(weights, speeds)

    if max(weights) * settings.UNRELATED_SPREAD > WEIGHT_MAX:
        raise RangeError("Entradas da matriz de custos não cabem em 128 bits.")
    matrix = [[w * rng.randint(1, settings.UNRELATED_SPREAD) for _ in range(m)] for w in weights]
    return Instance.unrelated(matrix)


def initial_state(placement: InitialPlacement, n: int, m: int, seed: int = 0) -> State:
    if InitialPlacement(placement) is InitialPlacement.RANDOM:
        return State.random_placement(n, m, SplitMix64(seed))
    return State.concentrated(n, m)


# --- Células (n, repetição) ---


@dataclass(frozen=True)
class CellSpec:
    n: int
    m: int
    repetition: int
    policy: CostPolicy
    priority: PriorityTag
    coalition: Optional[CoalitionPriority]
    machine_model: MachineModel
    dist: WeightDistribution
    initial: InitialPlacement
    max_steps: int
    weight_seed: int
    priority_seed: int
    instance_seed: int
    placement_seed: int


@dataclass
class CellOutcome:
    n: int
    repetition: int
    steps: int
    flips: int
    capped: bool
    bound: Optional[int] = None

    @property
    def bound_violated(self) -> bool:
        return self.bound is not None and not self.capped and self.steps > self.bound


def plan_cells(config: ExperimentConfig) -> List[CellSpec]:
    """Células em ordem (n, repetição); as sementes saem em sequência do fluxo da semente base."""
    stream = SplitMix64(config.seed)
    cells = []
    for n in config.n_values:
        m = resolve_machine_count(config.m, n)
        for repetition in range(config.resolved_repetitions):
            weight_seed, priority_seed, instance_seed, placement_seed = stream.spawn_seeds(4)
            cells.append(
                CellSpec(
                    n=n,
                    m=m,
                    repetition=repetition,
                    policy=config.policy,
                    priority=config.priority,
                    coalition=config.coalition,
                    machine_model=config.machine_model,
                    dist=config.dist,
                    initial=config.initial,
                    max_steps=config.max_steps,
                    weight_seed=weight_seed,
                    priority_seed=priority_seed,
                    instance_seed=instance_seed,
                    placement_seed=placement_seed,
                )
            )
    return cells


def run_cell(cell: CellSpec) -> CellOutcome:
    """Executa uma célula. Função de módulo para poder ser enviada a processos filhos."""
    weights = gen_weights(cell.dist, cell.n, cell.weight_seed)
    instance = build_instance(cell.machine_model, weights, cell.m, cell.instance_seed)
    start = initial_state(cell.initial, cell.n, cell.m, cell.placement_seed)
    seed = cell.priority_seed if cell.priority is PriorityTag.RANDOM else None
    algo = PriorityAlgorithm.of(cell.priority, seed)

    if cell.coalition is not None:
        result = run_coalitional(
            instance, start, algo, cell.coalition, max_steps=cell.max_steps, keep_trace=False, policy=cell.policy
        )
        steps, flips, capped, bound = result.single_moves + result.flips, result.flips, not result.reached_ne, None
    else:
        result = run_to_ne(instance, start, cell.policy, algo, max_steps=cell.max_steps, keep_trace=False)
        steps, flips, capped = result.steps, 0, not result.reached_ne
        bound = cited_upper_bound(cell.machine_model, cell.policy, cell.priority, cell.n, instance.w_max)

    logger.info(f"Célula n={cell.n} rep={cell.repetition}: {steps} passos, {flips} 2-flips{' (cap)' if capped else ''}.")
    return CellOutcome(n=cell.n, repetition=cell.repetition, steps=steps, flips=flips, capped=capped, bound=bound)


def run_cells(config: ExperimentConfig, jobs: int = 1) -> List[CellOutcome]:
    cells = plan_cells(config)
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        outcomes = list(executor.map(run_cell, cells))
    return sorted(outcomes, key=lambda o: (o.n, o.repetition))


def aggregate(config: ExperimentConfig, outcomes: Sequence[CellOutcome]) -> List[SeriesRow]:
    """
    Uma linha por n. Médias sobre as execuções que atingiram o equilíbrio;
    se todas esgotaram o cap, a média usa todas.
    """
    frame = pd.DataFrame([asdict(o) for o in outcomes])
    frame["done_steps"] = frame["steps"].where(~frame["capped"])
    frame["done_flips"] = frame["flips"].where(~frame["capped"])
    grouped = frame.groupby("n").agg(
        mean_done=("done_steps", "mean"),
        mean_all=("steps", "mean"),
        flips_done=("done_flips", "mean"),
        flips_all=("flips", "mean"),
        max_steps_observed=("steps", "max"),
        capped_runs=("capped", "sum"),
        runs=("steps", "size"),
    )
    grouped["mean_steps"] = grouped["mean_done"].fillna(grouped["mean_all"])
    grouped["mean_flips"] = grouped["flips_done"].fillna(grouped["flips_all"])

    return [
        SeriesRow(
            n=int(n),
            policy=config.policy,
            priority=config.priority,
            coalition=config.coalition,
            dist=config.dist,
            mean_steps=float(row.mean_steps),
            max_steps_observed=int(row.max_steps_observed),
            mean_flips=float(row.mean_flips),
            capped_runs=int(row.capped_runs),
            runs=int(row.runs),
        )
        for n, row in grouped.sort_index().iterrows()
    ]


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> List[SeriesRow]:
    """Varre n_values e agrega as contagens de passos; reproduzível dada a semente base."""
    return aggregate(config, run_cells(config, jobs))


# --- Classificação de crescimento ---


def _r_squared(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0.0:
        return float(slope), 0.0
    r2 = 1.0 - float(np.sum(residual**2)) / total
    return float(slope), min(max(r2, 0.0), 1.0)


def classify_growth(
    series: Sequence[Tuple[int, float]],
    threshold: Optional[float] = None,
    linear_cutoff: Optional[float] = None,
) -> GrowthClass:
    """
    Ajusta passos = a·n + b, log passos = p·log n + b e log passos = r·n + b
    por mínimos quadrados; vence o maior r². Polinomial com p <= linear_cutoff
    conta como linear.
    """
    threshold = settings.GROWTH_R2_THRESHOLD if threshold is None else threshold
    linear_cutoff = settings.POLY_LINEAR_CUTOFF if linear_cutoff is None else linear_cutoff

    points = sorted({int(n): float(steps) for n, steps in series if steps > 0}.items())
    if len(points) < 4:
        return GrowthClass(tag=GrowthTag.INCONCLUSIVE)
    n = np.array([p[0] for p in points], dtype=float)
    steps = np.array([p[1] for p in points], dtype=float)
    if np.ptp(steps) == 0:
        return GrowthClass(tag=GrowthTag.INCONCLUSIVE)

    log_steps = np.log(steps)
    fits = [
        (GrowthTag.LINEAR, *_r_squared(n, steps)),
        (GrowthTag.POLYNOMIAL, *_r_squared(np.log(n), log_steps)),
        (GrowthTag.EXPONENTIAL, *_r_squared(n, log_steps)),
    ]
    tag, coefficient, r2 = fits[0]
    for candidate in fits[1:]:
        if candidate[2] > r2:
            tag, coefficient, r2 = candidate

    if tag is GrowthTag.POLYNOMIAL and coefficient <= linear_cutoff:
        tag = GrowthTag.LINEAR
    if r2 < threshold:
        tag = GrowthTag.INCONCLUSIVE
    return GrowthClass(tag=tag, fit_exponent_or_rate=coefficient, r_squared=r2)


def fitting_series(rows: Sequence[SeriesRow], column: str = "mean_steps") -> List[Tuple[int, float]]:
    """Pontos para ajuste; linhas em que todas as execuções esgotaram o cap ficam de fora."""
    return [(row.n, getattr(row, column)) for row in rows if row.capped_runs < row.runs]


# --- Relatório ---


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: List[SeriesRow]
    outcomes: List[CellOutcome] = field(default_factory=list)

    @property
    def steps_growth(self) -> GrowthClass:
        return classify_growth(fitting_series(self.rows, "mean_steps"))

    @property
    def flips_growth(self) -> GrowthClass:
        return classify_growth(fitting_series(self.rows, "mean_flips"))

    @property
    def flip_share(self) -> float:
        total = sum(o.steps for o in self.outcomes)
        return sum(o.flips for o in self.outcomes) / total if total else 0.0

    @property
    def capped_runs(self) -> int:
        return sum(1 for o in self.outcomes if o.capped)

    @property
    def bound_violations(self) -> List[CellOutcome]:
        return [o for o in self.outcomes if o.bound_violated]


class ExperimentService:
    """Executa uma configuração de experimento e grava series.csv e summary.txt."""

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        self.config = config
        self.jobs = max(1, jobs)

    def run(self) -> ExperimentReport:
        logger.info(
            f"Experimento {self.config.policy.value}/{self.config.priority.value} "
            f"dist={self.config.dist.value} n={self.config.n_values} jobs={self.jobs}"
        )
        outcomes = run_cells(self.config, self.jobs)
        return ExperimentReport(config=self.config, rows=aggregate(self.config, outcomes), outcomes=outcomes)

    def write(self, report: ExperimentReport, out_dir: Union[str, Path]) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_series_csv(report.rows, out / "series.csv")
        (out / "summary.txt").write_text(summary_text(report), encoding="utf-8")
        logger.info(f"Resultados gravados em {out}")
        return out


def series_frame(rows: Sequence[SeriesRow]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=SERIES_COLUMNS + ["runs"])
    frame["coalition"] = frame["coalition"].fillna("")
    return frame[SERIES_COLUMNS]


def write_series_csv(rows: Sequence[SeriesRow], path: Union[str, Path]) -> None:
    series_frame(rows).to_csv(path, index=False, lineterminator="\n")


def _growth_line(label: str, growth: GrowthClass) -> str:
    return f"{label}: {growth.tag.value} fit={growth.fit_exponent_or_rate:.4f} r2={growth.r_squared:.4f}"


def summary_text(report: ExperimentReport) -> str:
    config = report.config
    lines = [
        f"policy={config.policy.value} priority={config.priority.value} "
        f"coalition={config.coalition.value if config.coalition else '-'} "
        f"model={config.machine_model.value} dist={config.dist.value} m={config.m} "
        f"repetitions={config.resolved_repetitions} seed={config.seed} initial={config.initial.value}",
        _growth_line("steps", report.steps_growth),
    ]
    if config.coalition is not None:
        lines.append(_growth_line("flips", report.flips_growth))
        lines.append(f"flip_share={report.flip_share:.4f}")

    expected = expected_growth(config.policy, config.priority)
    if config.machine_model is MachineModel.IDENTICAL and config.coalition is None and expected is not None:
        lines.append(f"expected_steps={expected.value}")
        observed = report.steps_growth.tag
        if observed is not expected:
            logger.warning(f"Crescimento observado ({observed.value}) difere do esperado ({expected.value}).")
            lines.append(f"growth_mismatch: observed={observed.value} expected={expected.value}")
    lines.append(f"capped_runs={report.capped_runs}")
    violations = report.bound_violations
    lines.append(f"bound_violations={len(violations)}")
    for outcome in violations:
        lines.append(f"  n={outcome.n} rep={outcome.repetition} steps={outcome.steps} bound={outcome.bound}")
    return "\n".join(lines) + "\n"


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Lê a configuração JSON de um experimento."""
    try:
        contents = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DomainError(f"Não foi possível ler a configuração '{path}': {e}")
    try:
        return ExperimentConfig.model_validate_json(contents)
    except ValueError as e:
        raise DomainError(f"Configuração de experimento inválida: {e}")
