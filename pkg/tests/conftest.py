import pytest

from linstrand.field import Field
from linstrand.projective import PointConfig

FP = Field.fp()
QQ = Field.rational()


@pytest.fixture
def fp():
    return FP


@pytest.fixture
def qq():
    return QQ


def twisted_cubic_points(ts, field=QQ):
    return PointConfig.from_coords(field, [[1, t, t * t, t ** 3] for t in ts])


@pytest.fixture
def twisted_cubic():
    return twisted_cubic_points(range(8))


def coordinate_rows(n):
    return [[1 if k == l else 0 for k in range(n + 1)] for l in range(n + 1)]


@pytest.fixture
def skew_lines():
    """5 + 5 points on the lines {x2=x3=0} and {x0=x1=0} of P^3."""
    rows = [[1, t, 0, 0] for t in range(5)] + [[0, 0, 1, t] for t in range(5)]
    return PointConfig.from_coords(FP, rows)


@pytest.fixture
def union_fixture():
    """Coordinate points of P^4 plus extras on {x3=x4=0} (a plane) and {x0=x1=0} (another plane)."""
    rows = coordinate_rows(4) + [[1, 2, 3, 0, 0], [1, 5, 7, 0, 0], [0, 0, 1, 1, 1], [0, 0, 2, 3, 5]]
    return PointConfig.from_coords(FP, rows)
