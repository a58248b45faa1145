"""Transmission-coefficient reconstruction for steplike Jacobi operators.

The package splits into a potential-theory half living on hyperelliptic band
surfaces (surface, quadrature, abelian, potential) and a scattering half
(scattering = direct-problem oracle, reconstruct = boundary-value formula
for the transmission coefficient, cli = batch front-end).
"""

from .surface import (
    BandSet,
    HyperellipticSurface,
    SpectralDecomposition,
    SurfacePoint,
    decompose_spectra,
    rho,
    sqrt_P,
    star,
    surface_from_bands,
)
from .quadrature import (
    ErrorBudget,
    Polyline,
    QuadratureError,
    QuadratureSpec,
    integrate_endpoint_singular,
    integrate_path,
    integrate_principal_value,
)
from .abelian import (
    PeriodData,
    ThirdKindKernel,
    a_period,
    compute_periods,
    delta_b_period,
    omega_density,
    third_kind_kernel,
)
from .potential import (
    BlaschkeEvaluator,
    blaschke,
    blaschke_evaluator,
    blaschke_gap_phase,
    green,
    log_blaschke,
)
from .scattering import (
    Background,
    SamplingGrids,
    ScatteringData,
    SteplikeOperator,
    floquet,
    jost,
    reflection,
    scattering_data,
    scattering_data_from_json,
    scattering_data_to_json,
    translate_data,
    transmission,
    wronskian,
    wronskian_constant,
)
from .reconstruct import (
    ReconstructionProblem,
    build_problem,
    delta_minus_table,
    q_eval,
    reconstruct_T,
    reconstruct_on_grid,
    write_grid_csv,
)

__version__ = "0.1.0"
