"""Exact minimizer of the empirical one-sided loss for orthogonal designs.

When every covariate is a standard basis vector the problem splits into one
threshold decision per coordinate, and each decision only has two
equivalence classes: accept the group (``beta_i > c``) or reject it.
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction

__all__ = ["Side", "orthogonal_exact_minimizer"]


class Side(enum.Enum):
    ABOVE = "above"
    BELOW = "below"


def _sum(terms):
    terms = list(terms)
    # rationals stay exact; floats get a correctly rounded sum
    if all(isinstance(v, (int, Fraction)) for v in terms):
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def orthogonal_exact_minimizer(labels_per_group, c: float):
    """Best side and objective value for each group of labels.

    Accepting a group costs ``l = sum_{y <= c} (c - y)``; rejecting it costs
    ``u = sum_{y >= c} (y - c)``. Ties go to the reject side. Integer or
    :class:`fractions.Fraction` inputs are summed exactly.

    Returns
    -------
    sides : list of Side
    objectives : list of float
    """
    sides, objectives = [], []
    for ys in labels_per_group:
        ys = list(ys)
        if not ys:
            raise ValueError("each group needs at least one label")
        lower = _sum(c - y for y in ys if y <= c)
        upper = _sum(y - c for y in ys if y >= c)
        if lower < upper:
            sides.append(Side.ABOVE)
            objectives.append(lower)
        else:
            sides.append(Side.BELOW)
            objectives.append(upper)
    return sides, objectives
