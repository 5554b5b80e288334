"""Exact linear strands of point sets in P^n, special quadrics and their classification."""
from .classify import Verdict, classify
from .field import Field
from .koszul import KoszulElement, a_top_via_intersection, strand_betti
from .projective import PointConfig

__all__ = ["Field", "PointConfig", "KoszulElement", "Verdict", "classify", "strand_betti",
           "a_top_via_intersection"]
__version__ = "0.1.0"
