"""Numerical toolkit for Lorentzian spectral quadruples on a lattice circle."""

__version__ = "0.1.0"

from .examples import (
    ExampleSpec,
    FiniteSearchConfig,
    build_desitter,
    build_flat_cylinder,
    finite_quadruple_search,
)
from .foliation import (
    CliffordRep,
    Field,
    FoliationData,
    build_hamiltonian,
    cayley_step,
    clifford_1plus1,
    evolve,
    spin_connection,
    time_vector,
    transport,
    volume_element,
)
from .opcore import AntilinearOperator, ToleranceConfig, commutator, matrix_exponential
from .quadruple import (
    CheckReport,
    GroupoidSpec,
    HochschildCycle,
    SpectralQuadruple,
    TimeSlice,
    ValidationConfig,
    all_passed,
    s_exponent,
    validate_all,
)
from .reconstruct import ReconstructionResult, commutator_series, reconstruct_metric

__all__ = [
    "AntilinearOperator", "CheckReport", "CliffordRep", "ExampleSpec", "Field", "FiniteSearchConfig",
    "FoliationData", "GroupoidSpec", "HochschildCycle", "ReconstructionResult", "SpectralQuadruple",
    "TimeSlice", "ToleranceConfig", "ValidationConfig", "all_passed", "build_desitter",
    "build_flat_cylinder", "build_hamiltonian", "cayley_step", "clifford_1plus1", "commutator",
    "commutator_series", "evolve", "finite_quadruple_search", "matrix_exponential",
    "reconstruct_metric", "s_exponent", "spin_connection", "time_vector", "transport",
    "validate_all", "volume_element",
]
