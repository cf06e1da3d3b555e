import unittest

from app.core.exceptions import UnsupportedConfigurationError
from app.models import CostPolicy, Instance, MachineModel, State
from app.services.cost_service import is_pure_ne, makespan
from app.services.nashification_service import nashify
from app.services.oracle_service import brute_force_is_ne
from app.services.rng_service import SplitMix64


class TestNashify(unittest.TestCase):

    def test_three_users_example(self):
        instance = Instance.identical([3, 3, 2], 2)
        result = nashify(instance, State.concentrated(3, 2))
        self.assertEqual(result.moves, 1)
        self.assertEqual(result.initial_makespan, 8)
        self.assertEqual(result.final_makespan, 5)
        self.assertEqual(result.final_state.assignment, [1, 0, 0])
        self.assertEqual(len(result.trace), 1)

    def test_already_at_equilibrium(self):
        instance = Instance.identical([4, 2, 2], 2)
        start = State.from_assignment([0, 1, 1], 2)
        result = nashify(instance, start)
        self.assertEqual(result.moves, 0)
        self.assertEqual(result.final_state.assignment, start.assignment)
        self.assertEqual(result.initial_makespan, result.final_makespan)

    def test_never_increases_makespan(self):
        for seed in range(10):
            rng = SplitMix64(seed)
            weights = [rng.randint(1, 30) for _ in range(10)]
            for instance in (Instance.identical(weights, 3), Instance.related(weights, [1, 2, "3/2"])):
                start = State.random_placement(10, 3, rng)
                result = nashify(instance, start)
                self.assertTrue(result.reached_ne)
                self.assertLessEqual(result.final_makespan, makespan(instance, start))
                self.assertTrue(is_pure_ne(instance, result.final_state, CostPolicy.MAKESPAN))

    def test_small_instances_checked_by_oracle(self):
        rng = SplitMix64(2024)
        for i in range(500):
            n, m = rng.randint(1, 4), rng.randint(2, 3)
            weights = [rng.randint(1, 12) for _ in range(n)]
            if i % 2:
                instance = Instance.related(weights, [rng.randint(1, 4) for _ in range(m)])
            else:
                instance = Instance.identical(weights, m)
            start = State.random_placement(n, m, rng)
            result = nashify(instance, start)

            if instance.machine_model is MachineModel.IDENTICAL:
                self.assertLessEqual(result.moves, n)
            self.assertLessEqual(result.final_makespan, result.initial_makespan)
            self.assertTrue(brute_force_is_ne(instance, result.final_state.queues, CostPolicy.MAKESPAN))

    def test_identical_each_user_moves_at_most_once(self):
        rng = SplitMix64(4)
        instance = Instance.identical([rng.randint(1, 50) for _ in range(15)], 4)
        result = nashify(instance, State.random_placement(15, 4, rng))
        movers = [event.mover for event in result.trace]
        self.assertEqual(len(movers), len(set(movers)))
        self.assertLessEqual(result.moves, 15)

    def test_unrelated_is_rejected(self):
        instance = Instance.unrelated([[1, 2], [2, 1]])
        with self.assertRaises(UnsupportedConfigurationError):
            nashify(instance, State.concentrated(2, 2))


if __name__ == "__main__":
    unittest.main()
