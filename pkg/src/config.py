"""Configuration settings for g2lab."""

import os
import logging
from typing import Optional, Dict
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Run defaults
DEFAULT_SEED = int(os.getenv("G2LAB_SEED", "42"))
DEFAULT_OUTPUT_DIR = "output"

SUITE_NAMES = ("calculus", "curvature", "gradient", "contraction", "evi", "cd")

# Numerical tolerances shared by every module
TOLERANCES: Dict[str, float] = {
    "row_sum": 1e-10,
    "detailed_balance": 1e-10,
    "symmetry": 1e-12,
    "psd": 1e-10,
    "indefinite_gamma": 1e-8,
    "pencil": 1e-9,
    "bisection_iterations": 60,
    "poly_coefficient": 1e-9,
    "pointwise": 1e-10,
    "gradient": 1e-8,
    "lp_certificate": 1e-9,
    "marginal": 1e-9,
    "clamp_limit": 1e-8,
    "heat_noise_floor": 1e-14,
    "winf_mass_floor": 1e-14,
    "eigen_reconstruction": 1e-8,
}

# Size guards
MAX_DENSE_STATES = 2000
MAX_LP_ATOMS = 500
MAX_UNIVARIATE_DEGREE = 16
MAX_MULTIVARIATE_DEGREE = 8

# Tracing configuration
ENABLE_TRACING = os.getenv("G2LAB_TRACE", "False").lower() == "true"

# Verbosity settings
VERBOSITY_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

VERBOSITY = os.getenv("VERBOSITY", "info").lower()
LOG_LEVEL = VERBOSITY_LEVELS.get(VERBOSITY, logging.INFO)

# Configure logging
logging.basicConfig(
    level=LOG_LEVEL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)

def get_logger(name: str) -> logging.Logger:
    """Get a logger with the specified name and configured log level."""
    logger = logging.getLogger(name)
    logger.setLevel(LOG_LEVEL)
    return logger


def resolve_output_dir(configured: Optional[str]) -> str:
    """Return the output directory, honouring the G2LAB_OUT override."""
    return os.getenv("G2LAB_OUT") or configured or DEFAULT_OUTPUT_DIR
