"""Energy-efficient HARQ power control via monomial outage bounds and geometric programming."""

__version__ = "0.1.0"

from .scenario import (  # noqa: E402
    FadingModel,
    HarqType,
    ParseError,
    PowerSchedule,
    Receiver,
    ScenarioConfig,
    ValidationError,
    load_scenario,
    reference_scenario,
)
from .outage import (  # noqa: E402
    BoundSet,
    Flavor,
    bound_outage,
    bound_outages,
    bounds_for,
    broadcast_bound_terms,
    cc_bound_outage,
    classic_bound_coefficients,
    exact_outage,
    exact_outages,
    new_bound_coefficients,
)
from .gpsolve import build_gp, optimize, predicted_metrics, solve_gp  # noqa: E402
from .sim import run_trials, validate_schedule  # noqa: E402
