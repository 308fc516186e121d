"""Occupation statistics of a Poisson field of independent random walks."""
import warnings

# numba probes for TBB at first parallel launch; the fallback layer is fine
warnings.filterwarnings("ignore", message="The TBB threading layer")

__version__ = "0.1.0"
