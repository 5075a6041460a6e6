"""Degenerate mirrorless lasing in alkali vapor.

Builds driven F_g -> F_e Zeeman-degenerate systems, solves their Lindblad
dynamics to steady state, computes weak-probe absorption/gain spectra via the
quantum regression theorem, and propagates pump and orthogonally polarized
emission intensities along a pencil-shaped cell.
"""

__version__ = "0.1.0"

from .angular import (BranchingTable, ThreeJArgs, branching_ratios,
                      dipole_weight, threej, wigner3j)
from .dynamics import (DegenerateSteadyStateError, Evolution, InversionScan,
                       Liouvillian, SaturationPoint, build_liouvillian,
                       equal_ground_state, evolve, inversion_scan,
                       omega_from_saturation, pump_only_steady_state,
                       saturation_parameter, steady_state)
from .levels import (CollapseChannels, FieldConfig, LevelScheme,
                     build_collapse, build_hamiltonian, build_scheme,
                     probe_raising, pump_hamiltonian, pump_raising)
from .propagation import (CellConfig, PropagationProfile,
                          absorption_coefficients, output_curve, propagate,
                          spontaneous_sources, transport_coefficients)
from .spectra import (CorrelationWindowError, DipoleOperator, DressedLadder,
                      PerpendicularGain, SpectrumResult, correlation_spectrum,
                      dressed_ladder, min_absorption_scan, parallel_dipole,
                      perpendicular_dipole, perpendicular_gain_spectrum,
                      resolvent_spectrum, weak_probe_absorption)

__all__ = [
    "BranchingTable", "ThreeJArgs", "branching_ratios", "dipole_weight",
    "threej", "wigner3j",
    "CollapseChannels", "FieldConfig", "LevelScheme", "build_collapse",
    "build_hamiltonian", "build_scheme", "probe_raising", "pump_hamiltonian",
    "pump_raising",
    "DegenerateSteadyStateError", "Evolution", "InversionScan", "Liouvillian",
    "SaturationPoint", "build_liouvillian", "equal_ground_state", "evolve",
    "inversion_scan", "omega_from_saturation", "pump_only_steady_state",
    "saturation_parameter", "steady_state",
    "CorrelationWindowError", "DipoleOperator", "DressedLadder",
    "PerpendicularGain", "SpectrumResult", "correlation_spectrum",
    "dressed_ladder", "min_absorption_scan", "parallel_dipole",
    "perpendicular_dipole", "perpendicular_gain_spectrum",
    "resolvent_spectrum", "weak_probe_absorption",
    "CellConfig", "PropagationProfile", "absorption_coefficients",
    "output_curve", "propagate", "spontaneous_sources",
    "transport_coefficients",
]
