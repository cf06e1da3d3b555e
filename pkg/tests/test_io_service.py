import unittest
from fractions import Fraction

import pytest

from app.core.exceptions import DomainError
from app.models import Instance, MachineModel, MoveType, State, TraceEvent
from app.services import io_service


class TestInstanceFiles(unittest.TestCase):

    def test_parse_instance(self):
        instance = io_service.parse_instance('{"model": "identical", "m": 2, "weights": [3, 3, 2]}')
        self.assertEqual(instance.machine_model, MachineModel.IDENTICAL)
        self.assertEqual(instance.n, 3)

    def test_parse_related_with_rational_speed(self):
        instance = io_service.parse_instance({"model": "related", "weights": [1], "speeds": ["3/2", 2]})
        self.assertEqual(instance.m, 2)

    def test_invalid_json(self):
        with self.assertRaises(DomainError):
            io_service.parse_instance("{model: identical")
        with self.assertRaises(DomainError):
            io_service.parse_instance("[1, 2]")

    def test_invalid_instance(self):
        with self.assertRaises(DomainError):
            io_service.parse_instance('{"model": "identical", "weights": [1]}')
        with self.assertRaises(DomainError):
            io_service.parse_instance('{"model": "quantum", "m": 1, "weights": [1]}')

    def test_unknown_fields_rejected(self):
        with self.assertRaises(DomainError):
            io_service.parse_instance('{"model": "identical", "m": 2, "weights": [1, 2], "label": "x"}')
        with self.assertRaises(DomainError):
            io_service.parse_instance({"model": "related", "weights": [1], "speeds": [1], "m_max": 3})


class TestAssignmentFiles(unittest.TestCase):

    def setUp(self):
        self.instance = Instance.identical([3, 3, 2], 2)

    def test_parse_assignment(self):
        state = io_service.parse_assignment("user,machine\n2,1\n0,0\n1,1\n", self.instance)
        self.assertEqual(state.assignment, [0, 1, 1])
        self.assertEqual(state.queues, [[0], [1, 2]])

    def test_parse_assignment_with_bom(self):
        state = io_service.parse_assignment("\ufeffuser,machine\n0,0\n1,0\n2,1\n".encode("utf-8"), self.instance)
        self.assertEqual(state.assignment, [0, 0, 1])

    def test_missing_header(self):
        with self.assertRaises(DomainError):
            io_service.parse_assignment("u,m\n0,0\n", self.instance)

    def test_bad_rows(self):
        cases = [
            "user,machine\n0,0\n0,1\n2,1\n",  # usuário repetido
            "user,machine\n0,0\n1,0\n",  # usuário faltando
            "user,machine\n0,0\n1,5\n2,0\n",  # máquina desconhecida
            "user,machine\n0,0\n1,x\n2,0\n",  # valor não inteiro
            "",
        ]
        for contents in cases:
            with self.assertRaises(DomainError):
                io_service.parse_assignment(contents, self.instance)

    def test_assignment_csv_sorted_by_user(self):
        state = State.from_queues([[2], [1, 0]], 3)
        self.assertEqual(io_service.assignment_to_csv(state), "user,machine\n0,1\n1,1\n2,0\n")


class TestTraceFiles(unittest.TestCase):

    def test_trace_csv(self):
        trace = [
            TraceEvent(0, 1, 0, 1, 6, 3, 11, 5),
            TraceEvent(1, 0, 0, 1, Fraction(9, 2), Fraction(4), 9, Fraction(4), MoveType.FLIP, partner=2),
        ]
        lines = io_service.trace_to_csv(trace).splitlines()
        self.assertEqual(lines[0], "step,mover,source,target,cost_before,cost_after,potential,makespan,move_type")
        self.assertEqual(lines[1], "0,1,0,1,6,3,11,5,single")
        self.assertEqual(lines[2], "1,0+2,0,1,9/2,4,9,4,flip")

    def test_format_cost(self):
        self.assertEqual(io_service.format_cost(Fraction(3, 2)), "3/2")
        self.assertEqual(io_service.format_cost(Fraction(4, 2)), "2")
        self.assertEqual(io_service.format_cost(5), "5")


def test_instance_file_roundtrip(tmp_path):
    instance = Instance.related([4, 1], [1, "1/3"])
    path = tmp_path / "instance.json"
    io_service.dump_instance(instance, path)
    assert '"model": "related"' in path.read_text(encoding="utf-8")
    assert io_service.load_instance(path) == instance


def test_missing_files(tmp_path):
    with pytest.raises(DomainError):
        io_service.load_instance(tmp_path / "nope.json")
    with pytest.raises(DomainError):
        io_service.read_assignment(tmp_path / "nope.csv", Instance.identical([1], 1))
