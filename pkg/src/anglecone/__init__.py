"""Angle cones on metric spaces from slopes of distance functions."""
from .angle import AngleCone, angle_cone, angle_cones, angle_pxp, euclidean_angle, homothety_check
from .calculus import (EpsSchedule, PairingEstimate, ScalarField, SlopeEstimate, SlopeOptions, constant,
                       distance_field, pairing, pairing_sign_dual, slope)
from .errors import (AngleConeError, CapabilityError, DegenerateInputError, DisconnectedGraphError,
                     EstimationError, PointError)
from .geodesics import compare_cone_vs_honda, geodesic, honda_angle
from .mmscan import ScanReport, scan_equivalence, scan_single_valuedness, scan_symmetry
from .spaces import (EuclideanSpace, MetricSpace, NormedSpace, Sphere, TangentProbe, WeightedGraph, euclidean,
                     from_config, load_space, measure_sample, normed, rescale, sample_directions)

__version__ = "0.1.0"
