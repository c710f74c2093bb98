"""Proximal regularization, epsilon-monotone enlargements and constructive subgradient approximation on l_p."""
__version__ = "0.1.0"

from .br_engine import (
    CertificateRecord, br_approximate, ekeland_conditions, ekeland_point, iterate_bound,
    minty_surjectivity_check, range_density_probe,
)
from .catalog import (
    FunctionSpec, SubdiffDescription, add, catalog_get, catalog_names, from_piecewise,
    resolve_function, tilt, zero,
)
from .errors import (
    ConfigError, DimensionError, InconclusiveError, InvalidFunctionError, LambdaBelowThreshold,
    NumericalFailure, PreconditionError, ProxbrError, ToleranceNotReached, UnboundedBelowError,
    UnknownFunctionError,
)
from .harness import RunReport, ScenarioConfig, default_lambda_grid, run_scenario
from .monotone import (
    GraphSample, SubgradPair, entourage_check, eps_subdiff_test, sample_graph,
    subgradient_residual, violation_measure,
)
from .normed_space import NormedSpace, dual_norm, duality_map, j_value, norm
from .prox_bounded import (
    ThresholdEstimate, boundedness_probe, estimate_threshold, shifted_boundedness,
)
from .proximal import ProxResult, moreau_envelope, regularized_argmin
