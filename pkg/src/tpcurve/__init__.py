"""Tangent-point self-avoidance energies and related diagnostics for discretized curves."""

from .curve_model import (ArcCurve, Polyline, ShapeSpec, arc_curve, estimate_tangents, generate,
                          resample_arclength, tangent_estimate)
from .errors import NumericalError, ResolutionError, TangentError, TPCurveError, ValidationError
from .flow import FlowTrace, discrete_gradient, minimize, pull_tight_experiment
from .geometry_analysis import (BetaProfile, ConeCheckResult, beta_number, beta_profile, bilipschitz_report,
                                cone_containment_check, omega_E_estimate, secant_inclusion_frontier)
from .hausdorff import hausdorff_distance
from .knot_ops import (InscribedPolygon, IsotopyCertificate, certify_isotopy, delta_move_valid,
                       injectivity_screen, inscribe_polygon, isotopy_threshold)
from .menger import circumradius, menger_energy, thickness, thickness_limit_check
from .regularity import HoelderFit, hoelder_fit, tangent_oscillation, verify_main_estimate
from .tp_energy import (EnergyReport, energy, local_energy, refine_energy, scale_invariant_energy,
                        tangent_point_radius)
from ._parallel import set_threads

__version__ = "0.1.0"
