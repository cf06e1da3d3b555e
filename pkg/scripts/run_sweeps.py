import os
import sys
from pathlib import Path

import click

# Adiciona o diretório raiz do projeto ao sys.path para permitir importações de 'app'
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.core.config import settings
from app.core.logging import configure_logging
from app.models import CostPolicy, ExperimentConfig, MachineModel, PriorityTag, WeightDistribution
from app.services.bounds_service import expected_growth
from app.services.experiment_service import ExperimentReport, ExperimentService, load_config

# Configurações JSON das varreduras em data/experiments/
CONFIG_DIR = Path(__file__).resolve().parent.parent / "data" / "experiments"


def run_config(path: Path, out_root: Path, jobs: int) -> ExperimentReport:
    config = load_config(path)
    service = ExperimentService(config, jobs=jobs)
    report = service.run()
    service.write(report, out_root / path.stem)
    return report


def fifo_bound_sweep(out_root: Path, jobs: int, repetitions: int) -> int:
    """FIFO em máquinas idênticas para todas as prioridades e distribuições; retorna o total de violações de n-1."""
    violations = 0
    for priority in PriorityTag:
        for dist in WeightDistribution:
            config = ExperimentConfig(
                policy=CostPolicy.FIFO,
                priority=priority,
                dist=dist,
                n_values=list(range(10, 201, 10)),
                repetitions=repetitions,
            )
            service = ExperimentService(config, jobs=jobs)
            report = service.run()
            service.write(report, out_root / f"fifo_{priority.value}_{dist.value}")
            violations += len(report.bound_violations)
            click.echo(f"fifo/{priority.value} dist={dist.value}: violações={len(report.bound_violations)}")
    return violations


@click.command()
@click.option("--only", multiple=True, help="Nome da configuração (sem .json); pode repetir.")
@click.option("--out", "out_dir", default=lambda: settings.RESULTS_DIR, show_default="Settings.RESULTS_DIR")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--fifo-check", is_flag=True, help="Roda também a varredura FIFO completa (todas as prioridades e distribuições).")
@click.option("--repetitions", type=click.IntRange(min=1), default=10, show_default=True, help="Repetições da varredura FIFO.")
def main(only, out_dir, jobs, fifo_check, repetitions):
    """Executa as varreduras de data/experiments/ e grava series.csv e summary.txt por configuração."""
    configure_logging(settings.LOG_LEVEL)
    out_root = Path(out_dir)

    paths = sorted(CONFIG_DIR.glob("*.json"))
    if only:
        paths = [p for p in paths if p.stem in set(only)]
        missing = set(only) - {p.stem for p in paths}
        if missing:
            raise click.BadParameter(f"Configurações não encontradas: {', '.join(sorted(missing))}", param_hint="--only")

    for path in paths:
        report = run_config(path, out_root, jobs)
        steps = report.steps_growth
        line = f"{path.stem}: passos {steps.tag.value} (r2={steps.r_squared:.3f})"
        expected = expected_growth(report.config.policy, report.config.priority)
        identical = report.config.machine_model is MachineModel.IDENTICAL
        if identical and report.config.coalition is None and expected is not None and steps.tag is not expected:
            line += f" [esperado {expected.value}]"
        if report.config.coalition is not None:
            flips = report.flips_growth
            line += f", 2-flips {flips.tag.value} (fit={flips.fit_exponent_or_rate:.2f}, r2={flips.r_squared:.3f})"
        click.echo(line)

    if fifo_check:
        total = fifo_bound_sweep(out_root, jobs, repetitions)
        click.echo(f"Violações do limite n-1 sob FIFO: {total}")
        if total:
            sys.exit(1)


if __name__ == "__main__":
    main()
