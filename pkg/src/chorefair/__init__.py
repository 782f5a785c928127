"""Envy-free and proportional allocation of chores with random disutilities."""

from .allocators import (AllocatorOutcome, TwoStageParams, alg_div, cost_minimizing,
                         dispatch_envy_free, dispatch_proportional, prop_medium, prop_small,
                         two_stage)
from .core import (Allocation, FairnessReport, bundle_disutility, fairness_report, is_efx,
                   is_envy_free, is_mms_fair, is_proportional, mms_share)
from .estimators import (CostMinimizingAllocator, DivisibleAllocator, EnvyFreeAllocator,
                         PropMediumAllocator, PropSmallAllocator, ProportionalAllocator,
                         TwoStageAllocator, make_allocator)
from .experiments import ExperimentConfig, TrialRecord, run_grid, summarize
from .instance import DisutilityMatrix, DistributionSpec, inverse_cdf, sample_instance
from .matching import (BipartiteGraph, Matching, max_matching, min_cost_perfect_matching,
                       right_saturated_2_matching)
from .oracle import exists_envy_free, exists_proportional
from .theory import (NonExistenceCertificate, count_repeated_favorites,
                     ef_nonexistence_certificate, expected_repeated_favorites,
                     prop_nonexistence_certificate, solve_nu)

__version__ = "0.1.0"
