"""Numerical defaults. Every value can be overridden per call or via the run config."""

import os

TOL_INV = 1e-10
TOL_FD = 1e-6
H_FD = 1e-7
TOL_ORBIT = 1e-9
TOL_EIG = 1e-12
TOL_MEAS = 1e-9
TOL_EQ = 1e-3

SAMPLES_PER_INTERVAL = 64
MAX_PREIMAGES = 1_000_000
MAX_CHAINS = 100_000
MAX_ITERS = 10_000
THETA_MIN = 0.05
DIVERGENCE_GAP = 0.5

SCHEMA_VERSION = 1


def worker_count():
    """Worker cap from ``ZOOMTHERM_THREADS`` (defaults to 1)."""
    raw = os.environ.get("ZOOMTHERM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
