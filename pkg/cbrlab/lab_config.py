# cbrlab/lab_config.py
# Execution settings for cbrlab.
# Values come from the environment (or a .env file next to the repo, see
# .env.example). Physics parameters are never configured here; they live in
# scenario files.
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

REPO_ROOT = Path(__file__).resolve().parent.parent

# Worker threads for sweeps and trajectory batches
DEFAULT_THREADS = int(os.getenv("CBRLAB_THREADS", "1"))

# Where `run` writes result bundles when --out is not given
DEFAULT_OUT_DIR = os.getenv("CBRLAB_OUT_DIR", "results")

LOG_LEVEL = os.getenv("CBRLAB_LOG_LEVEL", "INFO").upper()

# Built-in scenarios shipped with the repository
SCENARIO_DIR = Path(os.getenv("CBRLAB_SCENARIO_DIR", str(REPO_ROOT / "scenarios")))

# Limits
MAX_SWEEP_POINTS = 10_000
MAX_JOINT_DIM = 4096

# Trajectories integrated together in one vectorized batch. The batch layout
# is fixed by this number alone so results do not depend on thread count.
DEFAULT_BATCH_SIZE = int(os.getenv("CBRLAB_BATCH_SIZE", "250"))
