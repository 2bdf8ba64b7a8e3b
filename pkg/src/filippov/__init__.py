"""Toolkit for second-order Filippov systems.

Piecewise-smooth ODEs ``x' = f^L(x)`` for ``H(x) < 0`` and ``x' = f^R(x)`` for
``H(x) > 0`` whose first Lie derivatives agree on ``H = 0``. The package
computes exact Lie derivatives with Taylor jets, classifies switching and
tangency surfaces, builds first- and second-order sliding fields, integrates
Filippov solutions with event location, measures return maps around
invisible-invisible tangencies and locates pseudo-equilibria.
"""

from .equilibria import Order, PseudoEquilibrium, Verdict, classify_stability, find_pseudo_equilibria
from .errors import FilippovError
from .integrate import EventKind, IntegrateOptions, Mode, Trajectory, integrate, integrate_slideT
from .jets import Jet, directional_lie, lie_series
from .retmap import AsymptoticFit, ReturnMapSample, fit_asymptotics, full_return, half_return
from .sliding import beta, second_order_sliding_field, sliding_field, tangential_field_carvalho
from .surface import RegionKind, SurfaceKind, classify_point, find_region_boundaries, lambda_value
from .system import PiecewiseSystem, Side, build_model, check_second_order, model_ids

__version__ = "0.1.0"

__all__ = [
    "AsymptoticFit", "EventKind", "FilippovError", "IntegrateOptions", "Jet", "Mode", "Order",
    "PiecewiseSystem", "PseudoEquilibrium", "RegionKind", "ReturnMapSample", "Side", "SurfaceKind",
    "Trajectory", "Verdict", "beta", "build_model", "check_second_order", "classify_point",
    "classify_stability", "directional_lie", "find_pseudo_equilibria", "find_region_boundaries",
    "fit_asymptotics", "full_return", "half_return", "integrate", "integrate_slideT", "lambda_value",
    "lie_series", "model_ids", "second_order_sliding_field", "sliding_field", "tangential_field_carvalho",
]
