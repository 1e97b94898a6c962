"""cheegerlab: spectral gaps, Cheeger constants, heat semigroups and sharp
isoperimetric-type inequalities on discretized weighted 1D spaces."""

__version__ = "0.1.0"

from .kernels import (
    BuserEvaluation,
    buser_sharp_bound,
    eval_I,
    eval_J,
    reference_bounds,
)
from .mmspace import (
    BoundaryCondition,
    CheegerResult,
    DiscreteSet,
    MeasureMode,
    SpaceModel,
    WeightedGrid,
    build_space,
    cheeger_search,
    coarea_decompose,
    coarea_integral,
    complement_set,
    indicator,
    interval_set,
    measure_and_perimeter,
    parse_descriptor,
    total_variation,
)
from .plaplacian import PEigenResult, lambda_1p, monotonicity_sweep, recentering_shift
from .reports import VerificationReport, Verdict
from .spectral import (
    DiscreteOperator,
    HeatOperator,
    SpectralDecomposition,
    assemble_operator,
    heat_apply,
    smoothing_report,
    solve_spectrum,
)
from .verify import (
    revolution_diagnostics,
    rigidity_scan,
    verify_buser,
    verify_cheeger,
    verify_heat_chain,
    verify_isoperimetry,
)

__all__ = [
    "__version__",
    "BuserEvaluation",
    "buser_sharp_bound",
    "eval_I",
    "eval_J",
    "reference_bounds",
    "BoundaryCondition",
    "CheegerResult",
    "DiscreteSet",
    "MeasureMode",
    "SpaceModel",
    "WeightedGrid",
    "build_space",
    "cheeger_search",
    "coarea_decompose",
    "coarea_integral",
    "complement_set",
    "indicator",
    "interval_set",
    "measure_and_perimeter",
    "parse_descriptor",
    "total_variation",
    "PEigenResult",
    "lambda_1p",
    "monotonicity_sweep",
    "recentering_shift",
    "VerificationReport",
    "Verdict",
    "DiscreteOperator",
    "HeatOperator",
    "SpectralDecomposition",
    "assemble_operator",
    "heat_apply",
    "smoothing_report",
    "solve_spectrum",
    "revolution_diagnostics",
    "rigidity_scan",
    "verify_buser",
    "verify_cheeger",
    "verify_heat_chain",
    "verify_isoperimetry",
]
