"""Private information retrieval with side information.

Schemes: :mod:`pirsi.partition` (single server, demand-private),
:mod:`pirsi.mds` (single server, demand- and side-information-private) and
:mod:`pirsi.multiserver` (replicated servers, demand-private).  Privacy is
checked by :mod:`pirsi.audit`; converse bounds live in :mod:`pirsi.bounds`.
"""

from .core import (
    CapacityError,
    Database,
    DecodeError,
    DemandSpec,
    ParameterError,
    PirError,
    ProblemParams,
    ProtocolError,
    RateReport,
    joint_prior,
    rate_of,
    sample_demand,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "Database", "DecodeError", "DemandSpec", "ParameterError", "PirError",
    "ProblemParams", "ProtocolError", "RateReport", "joint_prior", "rate_of", "sample_demand",
]
