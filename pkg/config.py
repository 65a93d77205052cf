"""
Configuration management for the quantized power codebook designer
"""

import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Base configuration"""

    PROFILE = "full"

    # Monte Carlo sample sets
    N_TRAIN = int(os.getenv("QP_N_TRAIN", "100000"))
    N_EVAL = int(os.getenv("QP_N_EVAL", os.getenv("QP_N_TRAIN", "100000")))
    SEED = int(os.getenv("QP_SEED", "1"))

    # Sweep execution
    WORKERS = int(os.getenv("QP_WORKERS", "1"))

    # Solver tolerances
    TOL_FEAS = float(os.getenv("QP_TOL_FEAS", "1e-4"))  # relative
    TOL_CS = float(os.getenv("QP_TOL_CS", "1e-3"))
    TOL_ROOT = float(os.getenv("QP_TOL_ROOT", "1e-10"))  # absolute, on powers
    GLA_TOL = float(os.getenv("QP_GLA_TOL", "1e-6"))  # relative Lagrangian change
    GLA_MAX_ITER = int(os.getenv("QP_GLA_MAX_ITER", "500"))
    GLA_RESTARTS = int(os.getenv("QP_GLA_RESTARTS", "1"))
    MAX_OUTER = int(os.getenv("QP_MAX_OUTER", "50"))

    # Multiplier brackets
    BRACKET_LOW = 1e-8
    BRACKET_HIGH = 1e4

    # AQPA
    AQPA_EPS_POWER = float(os.getenv("QP_AQPA_EPS_POWER", "1e-6"))
    AQPA_TAIL_MULTIPLE = 25.0

    LOG_LEVEL = os.getenv("QP_LOG_LEVEL", "INFO").upper()


class FullConfig(Config):
    """Full study scale"""

    PROFILE = "full"


class QuickConfig(Config):
    """Small sample sets for smoke runs and CI"""

    PROFILE = "quick"
    N_TRAIN = int(os.getenv("QP_N_TRAIN", "5000"))
    N_EVAL = int(os.getenv("QP_N_EVAL", os.getenv("QP_N_TRAIN", "5000")))
    GLA_MAX_ITER = int(os.getenv("QP_GLA_MAX_ITER", "200"))


# Configuration dictionary
config = {
    "full": FullConfig,
    "quick": QuickConfig,
    "default": FullConfig,
}


def get_config(profile=None):
    """Get configuration based on environment (or an explicit profile name)"""
    name = profile or os.getenv("QP_PROFILE", "full")
    return config.get(name, config["default"])
