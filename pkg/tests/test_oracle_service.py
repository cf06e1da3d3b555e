import dataclasses
import itertools
import unittest

from app.core.exceptions import RangeError
from app.models import CostPolicy, Instance, PathMove, PriorityAlgorithm, State
from app.services.cost_service import is_pure_ne, user_cost
from app.services.dynamics_service import run_to_ne
from app.services.oracle_service import (
    ConfigurationGraph,
    brute_force_cost,
    brute_force_is_ne,
    enumerate_states,
    is_trace_path,
    longest_improvement_path,
    verify_instance,
    verify_ne_oracle,
)
from app.services.rng_service import SplitMix64

SMALL_INSTANCES = [
    Instance.identical([3, 1, 2, 2], 3),
    Instance.related([3, 1, 2, 2], [1, 2, "1/2"]),
    Instance.unrelated([[1, 4, 2], [3, 1, 1], [2, 2, 5], [4, 1, 3]]),
]


class TestEnumeration(unittest.TestCase):

    def test_enumerate_states(self):
        self.assertEqual(list(enumerate_states(2, 2)), [(0, 0), (0, 1), (1, 0), (1, 1)])

    def test_budget(self):
        with self.assertRaises(RangeError):
            enumerate_states(10, 4, budget=1000)


class TestBruteForce(unittest.TestCase):

    def test_brute_force_cost(self):
        instance = Instance.identical([3, 3, 2], 2)
        queues = [[0, 1, 2], []]
        self.assertEqual(brute_force_cost(instance, queues, 2, CostPolicy.SJF), 2)
        self.assertEqual(brute_force_cost(instance, queues, 0, CostPolicy.SJF), 5)
        self.assertEqual(brute_force_cost(instance, queues, 1, CostPolicy.FIFO), 6)
        self.assertEqual(brute_force_cost(instance, queues, 2, CostPolicy.LJF), 8)
        self.assertEqual(brute_force_cost(instance, queues, 0, CostPolicy.MAKESPAN), 8)

    def test_brute_force_matches_cost_model(self):
        for instance in SMALL_INSTANCES:
            for assignment in itertools.product(range(3), repeat=4):
                state = State.from_assignment(list(assignment), 3)
                for policy in CostPolicy:
                    for user in range(4):
                        self.assertEqual(
                            brute_force_cost(instance, state.queues, user, policy),
                            user_cost(instance, state, user, assignment[user], policy),
                        )

    def test_oracle_agrees_with_is_pure_ne(self):
        for instance in SMALL_INSTANCES:
            for policy in CostPolicy:
                expected = [
                    a
                    for a in itertools.product(range(3), repeat=4)
                    if is_pure_ne(instance, State.from_assignment(list(a), 3), policy)
                ]
                self.assertEqual(verify_ne_oracle(instance, policy), expected)

    def test_every_small_game_has_an_equilibrium(self):
        rng = SplitMix64(11)
        for _ in range(100):
            n, m = rng.randint(2, 4), rng.randint(2, 3)
            instance = Instance.identical([rng.randint(1, 10) for _ in range(n)], m)
            for policy in CostPolicy:
                self.assertTrue(verify_ne_oracle(instance, policy), f"{instance.weights} m={m} {policy.value}")

    def test_brute_force_is_ne(self):
        instance = Instance.identical([2, 2], 2)
        self.assertTrue(brute_force_is_ne(instance, [[0], [1]], CostPolicy.MAKESPAN))
        self.assertFalse(brute_force_is_ne(instance, [[0, 1], []], CostPolicy.FIFO))


class TestImprovementPaths(unittest.TestCase):

    def test_fifo_identical_longest_path(self):
        instance = Instance.identical([1, 2, 3, 4], 2)
        result = longest_improvement_path(instance, CostPolicy.FIFO, start=State.concentrated(4, 2))
        self.assertFalse(result.cyclic)
        self.assertLessEqual(result.length, 3)
        self.assertEqual(len(result.witness), result.length)

    def test_longest_path_bounds_every_priority(self):
        instance = Instance.identical([4, 3, 2, 2, 1], 2)
        start = State.concentrated(5, 2)
        for policy in (CostPolicy.MAKESPAN, CostPolicy.SJF, CostPolicy.LJF, CostPolicy.FIFO):
            longest = longest_improvement_path(instance, policy, start=start)
            self.assertFalse(longest.cyclic)
            for tag in ("maw", "miw", "fifo"):
                steps = run_to_ne(instance, start, policy, PriorityAlgorithm.of(tag)).steps
                self.assertLessEqual(steps, longest.length)

    def test_cycle_detection(self):
        graph = ConfigurationGraph(Instance.identical([1], 2), CostPolicy.MAKESPAN)
        graph.edges = {
            "a": [(PathMove(0, 0, 1), "b")],
            "b": [(PathMove(0, 1, 0), "a")],
        }
        self.assertIsNone(graph.longest_paths())

    def test_sinks_are_the_equilibria(self):
        for instance in SMALL_INSTANCES:
            for policy in (CostPolicy.MAKESPAN, CostPolicy.SJF, CostPolicy.LJF):
                graph = ConfigurationGraph.build(instance, policy)
                self.assertEqual(sorted(graph.sinks()), verify_ne_oracle(instance, policy))

    def test_is_trace_path(self):
        instance = Instance.identical([3, 3, 2], 3)
        start = State.concentrated(3, 3)
        result = run_to_ne(instance, start, CostPolicy.MAKESPAN, PriorityAlgorithm.of("maw"))
        self.assertTrue(is_trace_path(instance, CostPolicy.MAKESPAN, start, result.trace))

        tampered = [dataclasses.replace(result.trace[0], target=2)] + result.trace[1:]
        self.assertFalse(is_trace_path(instance, CostPolicy.MAKESPAN, start, tampered))

    def test_verify_instance(self):
        report = verify_instance(Instance.identical([1, 1], 2), CostPolicy.MAKESPAN)
        self.assertEqual(report.states, 4)
        self.assertEqual(report.ne_states, 2)
        self.assertEqual(report.longest_path, 1)
        self.assertFalse(report.cyclic)

    def test_graph_budget(self):
        with self.assertRaises(RangeError):
            verify_instance(Instance.identical([1, 2, 3, 4, 5], 3), CostPolicy.FIFO, budget=10)


if __name__ == "__main__":
    unittest.main()
