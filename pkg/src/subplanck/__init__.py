"""Squeezed number-state superpositions, compass states and their phase-space metrology."""

from .errors import (DegenerateParams, InvalidState, OutsideMonotoneWindow, SubPlanckError,
                     TruncationOverflow, UnstableRegime, ZeroEnergyProbe, ZeroProbabilityBranch)
from .fock import FockVector, TruncationPolicy
from .hermite import GaussHermiteParams, gauss_hermite_closed, gauss_hermite_quad, overlap_I
from .metrology import (DampingEstimate, SensitivityReport, damping_error, fig6_curves,
                        overlap_curvature, ratio_curves, simulate_tls_protocol, variance_report)
from .phasespace import PhaseSpaceGrid, WignerField, displaced_overlap, first_zero, wigner
from .preparation import (QubitOscillatorState, RabiParams, build_h1_effective, build_h2,
                          evolve_h2, h1_diagonalization_check, project_qubit)
from .states import StateSpec, build_state, fidelity, fidelity_closed, number_distribution

__version__ = "0.1.0"

__all__ = [
    "DampingEstimate", "DegenerateParams", "FockVector", "GaussHermiteParams", "InvalidState",
    "OutsideMonotoneWindow", "PhaseSpaceGrid", "QubitOscillatorState", "RabiParams",
    "SensitivityReport", "StateSpec", "SubPlanckError", "TruncationOverflow",
    "TruncationPolicy", "UnstableRegime", "WignerField", "ZeroEnergyProbe",
    "ZeroProbabilityBranch", "build_h1_effective", "build_h2", "build_state", "damping_error",
    "displaced_overlap", "evolve_h2", "fidelity", "fidelity_closed", "fig6_curves",
    "first_zero", "gauss_hermite_closed", "gauss_hermite_quad", "h1_diagonalization_check",
    "number_distribution", "overlap_I", "overlap_curvature", "project_qubit", "ratio_curves",
    "simulate_tls_protocol", "variance_report", "wigner",
]
