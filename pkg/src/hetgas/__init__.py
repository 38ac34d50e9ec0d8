"""Heterogeneous gases of positive charges with singular repulsion:
energy minimization, closed-form equilibrium profiles, inverse design of
charge laws, and empirical observables."""

from .gasmodel import (AtomicCharges, ChargeDistribution, ConfinementSpec,
                       Configuration, ContinuousCharges, GasSpec,
                       GeometricConstants, KernelSpec, ManifoldSpec,
                       WeightSpec, geometric_constants, sample_charges)
from .energy import (MeanField, SplitBreakdown, forces, intensive_energy,
                     mean_field_potential, splitting_terms, total_energy)
from .equilibrium import (EquilibriumProfile, Shell, ShellLayout,
                          constant_g_profile, continuous_profile, predict,
                          shell_layout)
from .minimizer import AnnealSchedule, FAST_SCHEDULE, MinimizeResult, minimize
from .inverse import (ManifoldCurve, RadialTarget, design_charge_density,
                      integrate_unstable_manifold, reconstruct_charge_density,
                      saddle_charge, verify_roundtrip)
from .stats import (CorrelationCurve, RadialHistogram,
                    local_pair_correlation, nearest_neighbor_distances,
                    ordering_metric, radial_profiles)
from .config import ScenarioConfig, load_preset, preset_names

__version__ = "0.1.0"

__all__ = [
    "AtomicCharges", "ChargeDistribution", "ConfinementSpec", "Configuration",
    "ContinuousCharges", "GasSpec", "GeometricConstants", "KernelSpec",
    "ManifoldSpec", "WeightSpec", "geometric_constants", "sample_charges",
    "MeanField", "SplitBreakdown", "forces", "intensive_energy",
    "mean_field_potential", "splitting_terms", "total_energy",
    "EquilibriumProfile", "Shell", "ShellLayout", "constant_g_profile",
    "continuous_profile", "predict", "shell_layout",
    "AnnealSchedule", "FAST_SCHEDULE", "MinimizeResult", "minimize",
    "ManifoldCurve", "RadialTarget", "design_charge_density",
    "integrate_unstable_manifold", "reconstruct_charge_density",
    "saddle_charge", "verify_roundtrip",
    "CorrelationCurve", "RadialHistogram", "local_pair_correlation",
    "nearest_neighbor_distances", "ordering_metric", "radial_profiles",
    "ScenarioConfig", "load_preset", "preset_names",
    "__version__",
]
