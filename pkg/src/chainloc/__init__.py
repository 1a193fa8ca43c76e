"""Competitive multi-facility location with multipurpose shopping trips.

A chain places p new facilities among existing competitors so as to
maximize the buying power it captures under a gravity choice model, where
a proportion of customers chain the visit with a stop at a cluster
facility.  The package provides reproducible instance generation, share
evaluation for power and exponential distance decay, a multistart local
optimizer, brute-force validation oracles, and a benchmark CLI.
"""

from .instance import (
    ChainFacility,
    ClusterFacility,
    CompetitorFacility,
    DEFAULT_MULTIPLIER,
    DEFAULT_SEEDS,
    DemandPoint,
    GeneratorConfig,
    Instance,
    InstanceFormatError,
    LcgState,
    LcgStream,
    SeedSet,
    generate_instance,
    lcg_next,
    lcg_uniform,
    read_instance,
    write_instance,
)
from .market import (
    ChainLayout,
    CompetitorConstants,
    DecayModel,
    EXPONENTIAL,
    POWER,
    PerDemandShare,
    ShareReport,
    TripMix,
    captured_market_share,
    competitor_constants,
    distance,
    share_proportion,
)
from .optimizer import (
    Box,
    OptimizerConfig,
    Solution,
    gradient_fd,
    local_optimize,
    multistart_optimize,
    objective,
)
from .validation import conservation_audit, grid_oracle_p1, random_baseline

__version__ = "0.1.0"

__all__ = [
    "Box",
    "ChainFacility",
    "ChainLayout",
    "ClusterFacility",
    "CompetitorConstants",
    "CompetitorFacility",
    "DEFAULT_MULTIPLIER",
    "DEFAULT_SEEDS",
    "DecayModel",
    "DemandPoint",
    "EXPONENTIAL",
    "GeneratorConfig",
    "Instance",
    "InstanceFormatError",
    "LcgState",
    "LcgStream",
    "OptimizerConfig",
    "POWER",
    "PerDemandShare",
    "SeedSet",
    "ShareReport",
    "Solution",
    "TripMix",
    "captured_market_share",
    "competitor_constants",
    "conservation_audit",
    "distance",
    "generate_instance",
    "gradient_fd",
    "grid_oracle_p1",
    "lcg_next",
    "lcg_uniform",
    "local_optimize",
    "multistart_optimize",
    "objective",
    "random_baseline",
    "read_instance",
    "share_proportion",
    "write_instance",
]
