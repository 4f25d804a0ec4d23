from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Toolkit settings loaded from environment variables (prefix PHMOR_) or a .env file
    """
    model_config = SettingsConfigDict(env_prefix="PHMOR_", env_file=".env", extra="ignore")

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Output settings
    DEFAULT_OUTPUT_DIR: str = "results"
    DEFAULT_JOBS: int = 1

    # Numerical safeguards
    SG_CONDITION_LIMIT: float = 1e12
    FD_JACOBIAN_STEP: float = 1e-7
    PORT_SPAN_TOL: float = 1e-8

    # Structural audits
    STRUCTURE_CHECK_SAMPLES: int = 50
    RUNTIME_STRUCTURE_CHECKS: bool = False


settings = Settings()
