import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# --- Configuration ---
# Look for .env in the project root, then fall back to the default search.
env_path = Path(__file__).resolve().parent.parent / ".env"
if env_path.exists():
    load_dotenv(env_path)
else:
    load_dotenv()

LOG_LEVEL = os.getenv("TICK_DRIFT_LOG_LEVEL", "INFO")
OUTPUT_DIR = Path(os.getenv("TICK_DRIFT_OUTPUT_DIR", "results"))
THREADS = int(os.getenv("TICK_DRIFT_THREADS", "1"))
DEFAULT_SEED = int(os.getenv("TICK_DRIFT_SEED", "20130101"))
API_MAX_REPLICATES = int(os.getenv("TICK_DRIFT_API_MAX_REPLICATES", "5000"))

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: str | None = None) -> None:
    logging.basicConfig(level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT)
