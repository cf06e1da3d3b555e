# app/core/exceptions.py


class SSLabError(Exception):
    """Erro base da aplicação."""


class DomainError(SSLabError, ValueError):
    """Dados inválidos: ids desconhecidos, instâncias ou arquivos malformados."""


class CostOverflowError(SSLabError, OverflowError):
    """O acumulador de custo excedeu 128 bits."""


class UnsupportedConfigurationError(SSLabError, ValueError):
    """Combinação de modelo de máquina e política não suportada pela operação."""


class ContractViolationError(SSLabError, ValueError):
    """Pré-condição violada pelo chamador (ex.: lista de candidatos vazia)."""


class RangeError(SSLabError, ValueError):
    """Limite de enumeração ou de faixa numérica excedido."""
