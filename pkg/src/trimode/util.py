import os
import logging
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

logging.basicConfig(level=os.getenv("TRIMODE_LOG_LEVEL", "INFO").upper())
logger = logging.getLogger("trimode")

SERIES_TOL = float(os.getenv("TRIMODE_SERIES_TOL", "1e-12"))
LEAKAGE_BUDGET = float(os.getenv("TRIMODE_LEAKAGE_BUDGET", "1e-8"))
MAX_SERIES_TERMS = int(os.getenv("TRIMODE_MAX_SERIES_TERMS", "200000"))
MAX_FOCK_DIM = int(os.getenv("TRIMODE_MAX_FOCK_DIM", "4096"))
LINDBLAD_STEP = float(os.getenv("TRIMODE_LINDBLAD_STEP", "0.01"))
OUTPUT_DIR = Path(os.getenv("TRIMODE_OUTPUT_DIR", "."))
