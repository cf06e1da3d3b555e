# app/services/rng_service.py

from typing import List, Sequence, TypeVar

from app.core.exceptions import ContractViolationError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


class SplitMix64:
    """
    Gerador SplitMix64 com saída bit-a-bit reproduzível.

    Sorteios uniformes em [0, bound) usam amostragem por rejeição sobre
    palavras de 64 bits concatenadas, o que permite limites acima de 2^64
    (pesos de 128 bits).
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randbelow(self, bound: int) -> int:
        if bound <= 0:
            raise ContractViolationError(f"Limite de sorteio deve ser positivo: {bound}")
        if bound == 1:
            return 0
        bits = (bound - 1).bit_length()
        words = (bits + 63) // 64
        mask = (1 << bits) - 1
        while True:
            value = 0
            for _ in range(words):
                value = (value << 64) | self.next_u64()
            value &= mask
            if value < bound:
                return value

    def randint(self, low: int, high: int) -> int:
        """Inteiro uniforme no intervalo fechado [low, high]."""
        return low + self.randbelow(high - low + 1)

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ContractViolationError("Sequência vazia para sorteio.")
        return seq[self.randbelow(len(seq))]

    def spawn_seeds(self, count: int) -> List[int]:
        """Sementes derivadas para execuções independentes."""
        return [self.next_u64() for _ in range(count)]
