"""Configuration management for the qsecure toolkit."""
import math
import os
from functools import lru_cache

# Load environment variables first
from dotenv import load_dotenv
load_dotenv()


class Config:
    """Toolkit configuration with environment variable support."""

    def __init__(self):
        self.environment = os.getenv("QSE_ENVIRONMENT", "development")

        # E91 protocol defaults
        self.singlets = int(os.getenv("QSE_SINGLETS", "500"))
        self.seed = int(os.getenv("QSE_SEED", "7"))
        self.depolarizing_p = float(os.getenv("QSE_DEPOLARIZING_P", "1.0"))
        self.chsh_threshold = float(os.getenv("QSE_CHSH_THRESHOLD", "2.5"))

        # Steganography and image defaults
        self.lsb_bits = int(os.getenv("QSE_LSB_BITS", "2"))
        self.analyze_sizes = [
            int(size)
            for size in os.getenv("QSE_ANALYZE_SIZES", "64,128,256,512").split(",")
            if size.strip()
        ]
        self.output_dir = os.getenv("QSE_OUTPUT_DIR", "out")

        # Hardcoded numeric tolerances
        self.exact_tolerance = 1e-12
        self.eigenvalue_floor = -1e-10

        # Logging
        self.log_level = os.getenv("LOG_LEVEL", "WARNING").upper()
        self.log_format = os.getenv(
            "QSE_LOG_FORMAT", "json" if self.is_production else "text"
        ).lower()

    def validate(self):
        """Validate configuration values."""
        errors = []

        if self.singlets < 1:
            errors.append("QSE_SINGLETS must be at least 1")

        if not 0.0 <= self.depolarizing_p <= 1.0:
            errors.append("QSE_DEPOLARIZING_P must lie in [0, 1]")

        if not 2.0 < self.chsh_threshold < 2.0 * math.sqrt(2.0):
            errors.append("QSE_CHSH_THRESHOLD must lie strictly between 2 and 2*sqrt(2)")

        if self.lsb_bits not in (1, 2, 4):
            errors.append("QSE_LSB_BITS must be one of 1, 2, 4")

        if not self.analyze_sizes or any(size <= 0 for size in self.analyze_sizes):
            errors.append("QSE_ANALYZE_SIZES must be a list of positive integers")

        if self.log_format not in ("text", "json"):
            errors.append("QSE_LOG_FORMAT must be 'text' or 'json'")

        if errors:
            raise ValueError(f"Configuration errors: {'; '.join(errors)}")

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment == "production"

    def get_log_config(self, level: str | None = None, json_logs: bool | None = None) -> dict:
        """Get logging configuration.

        Logs go to stderr; stdout is reserved for command output.
        """
        use_json = self.log_format == "json" if json_logs is None else json_logs
        log_level = (level or self.log_level).upper()
        return {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "default": {
                    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                },
                "json": {
                    "()": "pythonjsonlogger.json.JsonFormatter",
                    "format": "%(asctime)s %(name)s %(levelname)s %(message)s",
                },
            },
            "handlers": {
                "console": {
                    "class": "logging.StreamHandler",
                    "level": log_level,
                    "formatter": "json" if use_json else "default",
                    "stream": "ext://sys.stderr",
                },
            },
            "root": {
                "level": log_level,
                "handlers": ["console"],
            },
        }


@lru_cache()
def get_config() -> Config:
    """Get cached configuration instance."""
    config = Config()
    config.validate()
    return config
