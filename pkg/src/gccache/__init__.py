"""Granularity-change caching: simulator, policies, oracles, adversaries, bounds."""
from .core import (BlockMap, BudgetExceeded, CacheState, ConfigError, DomainError, GCError,
                   InfeasibleSchedule, ItemId, LoadOp, PolicyViolation, SimResult, Simulator,
                   replay_schedule, simulate, validate_block_map)
from .oracle import OfflineSchedule, VarSizeInstance, belady, opt_gc, opt_varsize
from .policies import GCMarking, IBLP, BlockLRU, IblpConfig, ItemLRU, make_policy
from .adversary import (AdversaryOutput, ConstructionFailure, gen_block_adversary,
                        gen_general_adversary, gen_item_adversary, gen_locality_adversary)
from .locality import LocalityProfile, fit_polynomial, profile, spatial_ratio, validate_against
from .reduction import reduce, scale_instance, verify_reduction

__version__ = "0.1.0"
