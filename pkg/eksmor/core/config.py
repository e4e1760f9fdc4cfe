import os

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import model_validator


current_dir = os.path.dirname(os.path.abspath(__file__))

class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=os.path.join(current_dir, "..", "..", ".env"),
        env_file_encoding='utf-8',
        extra='ignore',
    )

    # Solver settings
    RANK_TOL: float = 1e-10
    PIVOT_TOL: float = 1e-14
    ORTH_TOL: float = 1e-10

    # Netlist settings
    VSOURCE_SERIES_R: float = 1e-6
    CAP_ZERO_TOL: float = 1e-30
    ADD_CAP_VALUE: float = 1e-12

    # Dense caps
    DENSE_ORACLE_CAP: int = 2000
    DENSE_A_CAP: int = 20000

    # Frequency grid settings (rad/s)
    FMIN: float = 1.0
    FMAX: float = 1e12
    NPOINTS: int = 200

    # Runtime settings
    MOR_WORKERS: int = 4
    LOG_DIR: str = "logs"
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "eksmor.log"
    LOG_MAX_BYTES: int = 10 * 1024 * 1024
    LOG_BACKUPS: int = 5

    @model_validator(mode="after")
    def check_ranges(self):
        if self.FMIN <= 0 or self.FMAX <= self.FMIN:
            raise ValueError("FMIN must be positive and below FMAX")
        if self.NPOINTS < 2:
            raise ValueError("NPOINTS must be at least 2")
        if self.MOR_WORKERS < 1:
            self.MOR_WORKERS = 1
        return self

settings = Settings()
