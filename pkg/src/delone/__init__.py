"""Finite-window analysis of Delone sets: patterns, densities, Voronoi cells, repetitivity."""

__version__ = "0.1.0"

from .errors import (BoundaryContaminationError, CapExceededError, DeloneError, DuplicatePointError,
                     EmptyRegionError, FormatError, InadmissiblePatternError, InsufficientWindowError,
                     SchemaError, UndefinedRadiusError, ValidationError)
from .kernels import BACKEND
from .pointset import (BoxRegion, PointSample, check_delone, covering_radius, detect_periods, flc_census,
                       load_sample, packing_radius, safe_covering_radius, save_sample, shrink)
from .generators import (GeneratorSpec, gen_fibonacci_chain, gen_lattice, gen_perturbed_lattice,
                         gen_product_chain_2d, gen_sturmian_chain, generate, integer_lattice)
from .patterns import (BallPattern, ConflictGraph, LocaterSet, Patch, copies_count, disjoint_copies_count,
                       extract_patch, locater_set, patch_classes, patch_equal)
from .densities import (CubeFamily, DensityReport, WeightEstimate, lower_density, lower_reduced_density,
                        unit_ball_volume, weight_estimate)
from .voronoi import (DistortionReport, UniformityEstimate, VoronoiCell, set_distortion, uniformity_estimate,
                      voronoi_cell)
from .properties import (ConsistencyVerdict, LemmaRipCheck, consistency_report, harmonic_lower_bound,
                         lemma_rip_check, lr_constant, rp_constant)
from .set_harness import (LimitEstimate, RegionFunction, builtin_neg_copies, builtin_scaled_disjoint,
                          check_invariance, check_subadditive, cube_limit, pattern_frequency)
