from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_NAME: str = "SSLab - Selfish Scheduling Lab"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Semente padrão quando nem --seed nem SSLAB_SEED são informados
    SEED: int = 1

    # Limites de execução
    MAX_STEPS: int = 10**7
    ORACLE_BUDGET: int = 10**6

    # Classificação de crescimento
    GROWTH_R2_THRESHOLD: float = 0.9
    POLY_LINEAR_CUTOFF: float = 1.2

    # Geração de instâncias para os experimentos
    DEFAULT_M: str = "n/2"
    MAX_SPEED: int = 4
    UNRELATED_SPREAD: int = 4

    # Diretório padrão para os resultados dos scripts
    RESULTS_DIR: Optional[str] = "results"

    model_config = SettingsConfigDict(
        env_prefix="SSLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
