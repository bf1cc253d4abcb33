"""
Benchmark-adjusted style break detection and risk-shift attribution for
equity mutual funds
"""
__version__ = "0.1.0"

from .cohort import Cohort  # noqa: E402

__all__ = ["Cohort", "__version__"]
