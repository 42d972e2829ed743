import logging
import os
from fractions import Fraction
from typing import Optional

from dotenv import load_dotenv

# Load environment variables if .env file exists
if os.path.exists(".env"):
    load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _flag(name: str, default: str = "False") -> bool:
    return os.getenv(name, default).lower() == "true"


# Simple config settings, read once at import
class Settings:
    # Application settings
    APP_NAME = "ornament-mu"
    DEBUG = _flag("DEBUG")
    LOG_LEVEL = os.getenv("ORNAMENT_LOG_LEVEL", "WARNING").upper()

    # Exact arithmetic
    DENOMINATOR_LIMIT = int(os.getenv("ORNAMENT_DENOMINATOR_LIMIT", str(2 ** 16)))
    DEFAULT_EPS = Fraction(os.getenv("ORNAMENT_DEFAULT_EPS", "1/100"))

    # Genericity retries
    MAX_RETRIES = int(os.getenv("ORNAMENT_MAX_RETRIES", "24"))
    MAX_SUBDIVISION = int(os.getenv("ORNAMENT_MAX_SUBDIVISION", "2"))

    # Triple maps
    WORKERS = int(os.getenv("ORNAMENT_WORKERS", "1"))
    SHOW_PROGRESS = _flag("ORNAMENT_SHOW_PROGRESS")


settings = Settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Install the root handler once; DEBUG wins over any requested level."""
    chosen = "DEBUG" if settings.DEBUG else (level or settings.LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, chosen, logging.WARNING), format=LOG_FORMAT)
