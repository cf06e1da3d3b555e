# app/services/io_service.py

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Union

from pydantic import ValidationError

from app.core.exceptions import DomainError
from app.models import Cost, Instance, MoveType, State, TraceEvent

TRACE_HEADER = ["step", "mover", "source", "target", "cost_before", "cost_after", "potential", "makespan", "move_type"]
ASSIGNMENT_HEADER = ["user", "machine"]

PathLike = Union[str, Path]


def format_cost(value: Cost) -> str:
    """Racionais como 'p/q' quando q != 1; inteiros caso contrário."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return str(value)


# --- Instâncias (JSON) ---


def parse_instance(payload: Union[str, bytes, dict]) -> Instance:
    try:
        data = json.loads(payload) if isinstance(payload, (str, bytes)) else payload
    except json.JSONDecodeError as e:
        raise DomainError(f"Arquivo de instância não é um JSON válido: {e}")
    if not isinstance(data, dict):
        raise DomainError("Arquivo de instância deve conter um objeto JSON.")
    try:
        return Instance.model_validate(data)
    except ValidationError as e:
        raise DomainError(f"Instância inválida: {e}")


def load_instance(path: PathLike) -> Instance:
    try:
        contents = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise DomainError(f"Não foi possível ler a instância '{path}': {e}")
    return parse_instance(contents)


def dump_instance(instance: Instance, path: PathLike) -> None:
    data = instance.model_dump(mode="json", by_alias=True, exclude_none=True)
    Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")


# --- Atribuições (CSV user,machine) ---


def parse_assignment(contents: Union[str, bytes], instance: Instance) -> State:
    """Lê o CSV `user,machine` (ids a partir de 0); as filas ficam em ordem crescente de id."""
    if isinstance(contents, bytes):
        try:
            contents = contents.decode("utf-8-sig")
        except UnicodeDecodeError:
            raise DomainError("Não foi possível decodificar a atribuição. Verifique se ela está em UTF-8.")
    if not contents.strip():
        raise DomainError("Arquivo de atribuição está vazio.")

    reader = csv.DictReader(io.StringIO(contents.lstrip("\ufeff")))
    headers = {h.strip().lower() for h in reader.fieldnames or []}
    missing = set(ASSIGNMENT_HEADER) - headers
    if missing:
        raise DomainError(f"Headers obrigatórios não encontrados: {', '.join(sorted(missing))}")

    assignment = [-1] * instance.n
    for i, row in enumerate(reader):
        line_number = i + 2  # a linha 1 é o header
        normalized = {k.strip().lower(): (v or "").strip() for k, v in row.items() if k}
        try:
            user = int(normalized["user"])
            machine = int(normalized["machine"])
        except ValueError:
            raise DomainError(f"Linha {line_number}: valores inteiros esperados, recebido {row}.")
        instance.check_user(user)
        instance.check_machine(machine)
        if assignment[user] != -1:
            raise DomainError(f"Linha {line_number}: usuário {user} repetido.")
        assignment[user] = machine

    if -1 in assignment:
        raise DomainError(f"Usuário {assignment.index(-1)} sem máquina na atribuição.")
    return State.from_assignment(assignment, instance.m)


def read_assignment(path: PathLike, instance: Instance) -> State:
    try:
        contents = Path(path).read_bytes()
    except OSError as e:
        raise DomainError(f"Não foi possível ler a atribuição '{path}': {e}")
    return parse_assignment(contents, instance)


def assignment_to_csv(state: State) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(ASSIGNMENT_HEADER)
    for user, machine in enumerate(state.assignment):
        writer.writerow([user, machine])
    return output.getvalue()


def write_assignment(state: State, path: PathLike) -> None:
    Path(path).write_text(assignment_to_csv(state), encoding="utf-8")


# --- Traços (CSV) ---


def trace_rows(trace: Iterable[TraceEvent]) -> List[List[str]]:
    rows = []
    for event in trace:
        if event.move_type is MoveType.FLIP:
            mover = f"{event.mover}+{event.partner}"
        else:
            mover = str(event.mover)
        rows.append([
            str(event.step_index),
            mover,
            str(event.source),
            str(event.target),
            format_cost(event.cost_before),
            format_cost(event.cost_after),
            format_cost(event.potential_after),
            format_cost(event.makespan_after),
            event.move_type.value,
        ])
    return rows


def trace_to_csv(trace: Iterable[TraceEvent]) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    writer.writerows(trace_rows(trace))
    return output.getvalue()


def write_trace(trace: Iterable[TraceEvent], path: PathLike) -> None:
    Path(path).write_text(trace_to_csv(trace), encoding="utf-8")
