"""Desk-scale laboratory for covert identification codes over binary-input
discrete memoryless channels.

The pipeline: validate a channel pair, derive the PPM parameter ledger and
its explicit finite-n bounds, generate a stochastic identification codebook,
estimate the three error kinds against exact oracles, audit covertness via
the three-term divergence decomposition, then refine / expurgate /
soft-cover the code while tracking exactly how much each step may cost.
"""

from .channels import (
    ChannelPair,
    Dist,
    bern,
    bsc_rows,
    chi2,
    kl,
    tv,
    validate_channel_pair,
)
from .codebook import Codebook, demap, deserialize, generate, serialize
from .errors import BudgetExceeded, ConfigError, CovertIdError, FormatError
from .params import covert_id_capacity, derive_bounds, derive_params

__version__ = "0.1.0"

__all__ = [
    "ChannelPair",
    "Dist",
    "bern",
    "bsc_rows",
    "kl",
    "tv",
    "chi2",
    "validate_channel_pair",
    "Codebook",
    "generate",
    "demap",
    "serialize",
    "deserialize",
    "covert_id_capacity",
    "derive_params",
    "derive_bounds",
    "CovertIdError",
    "ConfigError",
    "FormatError",
    "BudgetExceeded",
    "__version__",
]
