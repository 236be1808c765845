"""Numerical toolkit for the model resolvent of conformally compact
manifolds: Bessel-kernel evaluation, weighted resolvent norms, metric
assumption checks, resonance scans, and wave decay experiments."""

from .besselz import (ComplexOrder, QuadratureSpec, DEFAULT_QUADRATURE,
                      eval_I, eval_K, eval_I_dz, eval_K_dz,
                      check_pointwise_bounds, check_appendix_inequality,
                      merge_bound_reports, wronskian_residual)
from .errors import (ToolkitError, DomainError, RangeError, ConvergenceError,
                     DegenerateDenominatorError, StabilityError, ConfigError)
from .model import (CrossSectionSpectrum, ModelManifold, SpectralPoint,
                    RadialGrid, CutoffWeight, KernelMatrix, XiRegion,
                    reduce_to_Q, green_kernel_Q, mode_kernel, operator_norm,
                    weighted_resolvent_norm, check_product_bounds,
                    verify_prop_model)
from .report import BoundSummary, EstimateReport
from .cvcheck import (WarpedMetric, ProductGrid, CVScanSpec, FourierAlpha,
                      PolyhomExpansion, conjugated_potential,
                      conjugation_identity_residual, check_assumptions,
                      energy_estimate_check, high_energy_resolvent_check)
from .scanner import (PotentialProfile, ResonanceMap, Resonance, RegionFit,
                      matching_determinant, scan_region, find_resonances,
                      refine_zero, fit_region_boundary)
from .wavesim import (TimeCutoff, CauchyData, WaveField, DecayReport,
                      evolve, apply_cutoff, commutator_forcing,
                      contour_synthesis, verify_decay,
                      save_snapshots, load_snapshots)

__version__ = "0.1.0"
