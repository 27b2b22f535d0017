"""Multi-terminal source and channel codes from linear hash functions.

Exact desk-scale evaluation of CRNG-based source and channel codes, hash
ensemble verification, and rate-region computation.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
