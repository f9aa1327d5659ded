"""Dynamic rays and escaping points of the cosine family E(z) = a e^z + b e^{-z}."""

__version__ = "0.1.0"

from .classify import ClassificationResult, ClassifierConfig, classify, make_classifier, potential_of
from .dimension import (BoxCountReport, ParabolaParams, Window, box_dimension, escape_fraction,
                        in_parabola, sample_S)
from .errors import CosRaysError
from .mapcore import CosineMap, PotentialTower, F, F_inv, evaluate, derivative, make_map
from .rays import Ray, RaySample, extend_ray, sample_tail, separation_check, tail_point
from .symbolic import (ExplicitPrefix, FastParametric, Periodic, StripSymbol, address_from_json,
                       address_of_orbit, inverse_branch, make_partition, strip_of, tail_threshold)

__all__ = [name for name in dir() if not name.startswith("_")]
