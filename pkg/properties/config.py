import os
from dotenv import load_dotenv

load_dotenv()


def _flag(name: str, default: str = "0") -> bool:
    return os.getenv(name, default).strip().lower() in {"1", "true", "yes", "on"}


def _count(name: str, default: str = "1") -> int:
    """Integer setting; 0 when the value is not an integer, so validation reports it."""
    try:
        return int(os.getenv(name, default).strip())
    except ValueError:
        return 0


class Configuration:
    """Process-level settings read from the environment (or a .env file)."""

    # Parallelism: cap on concurrent client updates per round
    FLSIM_THREADS = _count("FLSIM_THREADS")

    # Logging
    FLSIM_LOG_LEVEL = os.getenv("FLSIM_LOG_LEVEL", "INFO").upper()

    # Reports
    FLSIM_OUTPUT_DIR = os.getenv("FLSIM_OUTPUT_DIR", "results")
    FLSIM_FORMAT = os.getenv("FLSIM_FORMAT", "both")
    FLSIM_PROGRESS = _flag("FLSIM_PROGRESS")
    # Measured wall-clock values only reach the reports when enabled
    FLSIM_RECORD_TIMING = _flag("FLSIM_RECORD_TIMING")

    LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
    REPORT_FORMATS = {"csv", "json", "both"}
    LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

    @classmethod
    def validate_required_config(cls):
        """Validate that every environment-driven setting is in range."""
        invalid_vars = []
        if cls.FLSIM_THREADS < 1:
            invalid_vars.append("FLSIM_THREADS")
        if cls.FLSIM_LOG_LEVEL not in cls.LOG_LEVELS:
            invalid_vars.append("FLSIM_LOG_LEVEL")
        if cls.FLSIM_FORMAT not in cls.REPORT_FORMATS:
            invalid_vars.append("FLSIM_FORMAT")
        if not cls.FLSIM_OUTPUT_DIR:
            invalid_vars.append("FLSIM_OUTPUT_DIR")

        if invalid_vars:
            raise ValueError(
                f"Invalid environment variables: {', '.join(invalid_vars)}"
            )

        return True
