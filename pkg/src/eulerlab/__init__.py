"""Euler-Maruyama experiments on SDEs with smooth coefficients where the scheme
converges slower than any polynomial rate, plus the numerical oracles and
bound checkers around them."""

from .bounds import (
    PreconditionError,
    bound_lemma33_first,
    bound_lemma33_second,
    bound_theorem5,
    check_lemma32,
    check_lemma52,
    check_lemma53,
    order0_reference,
)
from .estimation import ErrorCurve, ErrorRow, weak_strong_errors
from .euler import (
    EulerConfig,
    Trajectory,
    coupled_terminal_values,
    euler_run,
    euler_run_batch,
    euler_y1_representation,
)
from .grid import DomainError, FloorIndex, TimeGrid, floor_h, subsample_indices
from .models import (
    SdeModel,
    SeriesDriftSpec,
    bump_test_function,
    get_model,
    model_bsp1,
    model_ex2b,
    model_ex3,
    model_series3,
    mollifier,
)
from .probes import HolderProbe, holder_probe, lipschitz_blowup_probe
from .quadrature import (
    IntegrationError,
    McExpectation,
    QuadratureResult,
    ToleranceNotMet,
    adaptive_simpson,
    brownian_functional_mc,
    gaussian_expectation_mc,
)
from .rng import BrownianPath, SeedSpec, gaussian, sample_path, subsample

__version__ = "0.1.0"
