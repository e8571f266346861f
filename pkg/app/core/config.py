from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # App
    APP_NAME: str = "wasserstat"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    # Parallelism
    WASSERSTAT_THREADS: int = 4

    # Linear algebra
    SYMMETRY_TOL: float = 1e-12
    SINGULAR_TOL: float = 1e-12

    # MLE (gradient ascent with Armijo backtracking)
    MLE_TOL: float = 1e-8
    MLE_MAX_ITER: int = 2000
    ARMIJO_C: float = 1e-4
    BACKTRACK_SHRINK: float = 0.5
    MAX_BACKTRACKS: int = 60

    # Root finding for equipartition points
    BISECTION_ITER: int = 200

    # Monte Carlo acceptance gate, in standard errors
    MC_GATE_SE: float = 5.0

    # Output
    OUTPUT_DIR: str = "results"

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
