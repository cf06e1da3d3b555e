# app/cli.py
#
# Interface de linha de comando. Códigos de saída: 0 sucesso, 1 erro de uso
# ou de domínio, 2 limite de passos esgotado.

import logging
import sys
from typing import Optional

import click
from click.core import ParameterSource

from app.core.config import settings
from app.core.exceptions import SSLabError
from app.core.logging import configure_logging
from app.models import (
    CoalitionPriority,
    CostPolicy,
    InitialPlacement,
    Instance,
    MachineModel,
    PolicyConfig,
    PriorityAlgorithm,
    PriorityTag,
    WeightDistribution,
)
from app.services import io_service
from app.services.experiment_service import ExperimentService, build_instance, gen_weights, load_config, resolve_machine_count
from app.services.nashification_service import nashify
from app.services.oracle_service import verify_instance
from app.services.rng_service import SplitMix64
from app.services.simulation_service import SimulationService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CAPPED = 2


class SSLabGroup(click.Group):
    """Grupo que converte erros de uso e de domínio em saída 1."""

    def main(self, args=None, prog_name=None, **extra):
        extra.pop("standalone_mode", None)
        try:
            code = super().main(args=args, prog_name=prog_name, standalone_mode=False, **extra)
        except click.exceptions.Abort:
            click.echo("Abortado.", err=True)
            sys.exit(EXIT_ERROR)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_ERROR)
        except (SSLabError, ValueError) as e:
            click.echo(f"Erro: {e}", err=True)
            sys.exit(EXIT_ERROR)
        sys.exit(code if isinstance(code, int) else EXIT_OK)


def _choice(enum_cls) -> click.Choice:
    return click.Choice([member.value for member in enum_cls])


def _generated_instance(model: str, n: int, m_expr: str, dist: str, seed: int) -> Instance:
    weight_seed, instance_seed = _derived_seeds(seed)[:2]
    weights = gen_weights(WeightDistribution(dist), n, weight_seed)
    m = resolve_machine_count(m_expr, n)
    return build_instance(MachineModel(model), weights, m, instance_seed)


def _derived_seeds(seed: int) -> list:
    """Sementes de pesos, instância, prioridade e posicionamento, nesta ordem."""
    return SplitMix64(seed).spawn_seeds(4)


def _explicit(ctx: click.Context, *names: str) -> list:
    return [name for name in names if ctx.get_parameter_source(name) is ParameterSource.COMMANDLINE]


seed_option = click.option(
    "--seed",
    type=click.IntRange(0, 2**64 - 1),
    envvar="SSLAB_SEED",
    default=lambda: settings.SEED,
    show_default="SSLAB_SEED ou Settings.SEED",
    help="Semente base dos sorteios.",
)


@click.group(cls=SSLabGroup)
@click.option("--log-level", default=None, help="Nível de log (padrão: Settings.LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """Simulador de dinâmicas egoístas de melhor resposta no modelo KP."""
    configure_logging(log_level or settings.LOG_LEVEL)


@cli.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True, dir_okay=False), help="Instância JSON (substitui --n/--m/--dist).")
@click.option("--model", type=_choice(MachineModel), default=MachineModel.IDENTICAL.value, show_default=True)
@click.option("--policy", type=_choice(CostPolicy), default=CostPolicy.MAKESPAN.value, show_default=True)
@click.option("--priority", type=_choice(PriorityTag), default=PriorityTag.MAW.value, show_default=True)
@click.option("--n", "n", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--m", "m_expr", default=lambda: settings.DEFAULT_M, show_default="Settings.DEFAULT_M", help="Inteiro ou 'n/K'.")
@click.option("--dist", type=_choice(WeightDistribution), default=WeightDistribution.E.value, show_default=True)
@seed_option
@click.option("--max-steps", type=click.IntRange(min=1), default=None, help="Padrão: Settings.MAX_STEPS.")
@click.option("--coalitions", is_flag=True, help="Permite 2-flips (máquinas idênticas, makespan).")
@click.option("--coalition-priority", type=_choice(CoalitionPriority), default=CoalitionPriority.MIP.value, show_default=True)
@click.option("--initial", type=_choice(InitialPlacement), default=InitialPlacement.CONCENTRATED.value, show_default=True)
@click.option("--assignment", "assignment_path", type=click.Path(exists=True, dir_okay=False), help="Atribuição inicial CSV user,machine.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False, writable=True), help="Grava o traço em CSV.")
@click.pass_context
def simulate(
    ctx: click.Context,
    instance_path: Optional[str],
    model: str,
    policy: str,
    priority: str,
    n: int,
    m_expr: str,
    dist: str,
    seed: int,
    max_steps: Optional[int],
    coalitions: bool,
    coalition_priority: str,
    initial: str,
    assignment_path: Optional[str],
    trace_path: Optional[str],
):
    """Executa uma dinâmica até o equilíbrio de Nash ou até o limite de passos."""
    if instance_path and _explicit(ctx, "model"):
        raise click.UsageError("--model não pode ser usado junto com --instance.")
    if assignment_path and _explicit(ctx, "initial"):
        raise click.UsageError("--initial não pode ser usado junto com --assignment.")

    if instance_path:
        instance = io_service.load_instance(instance_path)
    else:
        instance = _generated_instance(model, n, m_expr, dist, seed)

    _, _, priority_seed, placement_seed = _derived_seeds(seed)
    service = SimulationService(max_steps=max_steps)
    if assignment_path:
        start = io_service.read_assignment(assignment_path, instance)
    else:
        start = service.initial_state(instance, InitialPlacement(initial), placement_seed)

    algo = PriorityAlgorithm.of(priority, priority_seed if PriorityTag(priority) is PriorityTag.RANDOM else None)
    config = PolicyConfig(
        policy=CostPolicy(policy),
        priority=algo,
        coalition=CoalitionPriority(coalition_priority) if coalitions else None,
        seed=seed,
    )
    outcome = service.run(instance, start, config)

    if trace_path:
        io_service.write_trace(outcome.trace, trace_path)
    click.echo(
        f"steps={outcome.steps} flips={outcome.flips} ne={str(outcome.reached_ne).lower()} "
        f"makespan={io_service.format_cost(outcome.makespan)}"
    )
    return EXIT_OK if outcome.reached_ne else EXIT_CAPPED


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", default=lambda: settings.RESULTS_DIR, show_default="Settings.RESULTS_DIR", type=click.Path(file_okay=False))
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Processos paralelos.")
def experiment(config_path: str, out_dir: str, jobs: int):
    """Varre n_values conforme a configuração e grava series.csv e summary.txt."""
    config = load_config(config_path)
    service = ExperimentService(config, jobs=jobs)
    report = service.run()
    out = service.write(report, out_dir)
    steps = report.steps_growth
    click.echo(f"rows={len(report.rows)} growth={steps.tag.value} capped_runs={report.capped_runs} out={out}")
    return EXIT_OK


@cli.command("nashify")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--assignment", "assignment_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, writable=True))
@click.option("--max-steps", type=click.IntRange(min=1), default=None)
def nashify_cmd(instance_path: str, assignment_path: str, out_path: str, max_steps: Optional[int]):
    """Converte uma atribuição em equilíbrio de Nash sem aumentar o makespan."""
    instance = io_service.load_instance(instance_path)
    start = io_service.read_assignment(assignment_path, instance)
    result = nashify(instance, start, max_steps=max_steps)
    io_service.write_assignment(result.final_state, out_path)
    click.echo(
        f"moves={result.moves} makespan "
        f"{io_service.format_cost(result.initial_makespan)}->{io_service.format_cost(result.final_makespan)}"
    )
    return EXIT_OK if result.reached_ne else EXIT_CAPPED


@cli.command()
@click.option("--instance", "instance_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", type=_choice(MachineModel), default=MachineModel.IDENTICAL.value, show_default=True)
@click.option("--policy", type=_choice(CostPolicy), default=CostPolicy.MAKESPAN.value, show_default=True)
@click.option("--n", "n", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--m", "m_expr", default="2", show_default=True)
@click.option("--dist", type=_choice(WeightDistribution), default=WeightDistribution.E.value, show_default=True)
@seed_option
@click.option("--budget", type=click.IntRange(min=1), default=None, help="Padrão: Settings.ORACLE_BUDGET.")
@click.pass_context
def verify(
    ctx: click.Context,
    instance_path: Optional[str],
    model: str,
    policy: str,
    n: int,
    m_expr: str,
    dist: str,
    seed: int,
    budget: Optional[int],
):
    """Oráculo exaustivo: equilíbrios e maior caminho de melhorias em instâncias pequenas."""
    if instance_path and _explicit(ctx, "model"):
        raise click.UsageError("--model não pode ser usado junto com --instance.")
    if instance_path:
        instance = io_service.load_instance(instance_path)
    else:
        instance = _generated_instance(model, n, m_expr, dist, seed)

    report = verify_instance(instance, CostPolicy(policy), budget=budget)
    longest = "-" if report.longest_path is None else str(report.longest_path)
    click.echo(
        f"states={report.states} ne_states={report.ne_states} "
        f"longest_path={longest} cyclic={str(report.cyclic).lower()}"
    )
    return EXIT_OK


if __name__ == "__main__":
    cli()
