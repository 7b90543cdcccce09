# bernreach/settings.py
"""Environment-driven defaults. A .env file in the working directory is honoured."""
import logging
import os

from dotenv import load_dotenv

load_dotenv()


# ==============================================================================
# NUMERIC DEFAULTS
# ==============================================================================

TM_ORDER = int(os.getenv("BERNREACH_TM_ORDER", "6"))
WORKERS = int(os.getenv("BERNREACH_WORKERS", str(min(8, os.cpu_count() or 1))))
MAX_SAMPLES = int(os.getenv("BERNREACH_MAX_SAMPLES", "2000000"))
WIDTH_CAP = float(os.getenv("BERNREACH_WIDTH_CAP", "100"))

# Rows evaluated per task when work is split across the pool
CHUNK_SIZE = int(os.getenv("BERNREACH_CHUNK_SIZE", "16384"))


# ==============================================================================
# LOGGING
# ==============================================================================

LOG_LEVEL = os.getenv("BERNREACH_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
