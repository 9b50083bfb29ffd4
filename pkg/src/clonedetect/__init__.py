"""Node-replication (clone) attack detection: polynomial key pre-distribution,
generation-window verification at a central station, two witness/broadcast
baselines, and a deterministic ring-road simulator to compare them."""

from .field_poly import (
    DEFAULT_MODULUS,
    ModulusError,
    SymmetricBivariatePoly,
    UnivariatePoly,
    eval_bivariate,
    eval_univariate,
    gen_master_poly,
    interpolate_oracle,
    restrict_to_x,
)
from .keying import KeyShare, derive_share, identity_hash, node_hash, pairwise_key, verify_agreement
from .netsim import SimConfig, Trace, build_topology, run

__version__ = "0.1.0"
