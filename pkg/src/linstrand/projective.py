"""Projective points, configurations, position predicates and frames."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BadUnit, ConfigError, SingularFrame, SizeLimit
from .field import Field, Matrix, inverse, rank_array, solve

DEFAULT_SUBSET_CAP = 200_000


def canonical(field: Field, coords: Sequence) -> tuple:
    """Scale so the first nonzero coordinate is 1."""
    vals = [field(c) for c in coords]
    for v in vals:
        if v != 0:
            inv = field.inv(v)
            return tuple(field.mul(x, inv) for x in vals)
    raise ConfigError("the zero vector is not a projective point")


@dataclass(frozen=True)
class ProjPoint:
    field: Field
    coords: tuple

    @classmethod
    def of(cls, field: Field, coords: Sequence) -> ProjPoint:
        return cls(field, canonical(field, coords))

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def to_json(self) -> list[str]:
        return [self.field.fmt(c) for c in self.coords]


@dataclass(frozen=True)
class PointConfig:
    """A set X of s >= n+1 distinct points spanning P^n."""

    n: int
    field: Field
    points: tuple[ProjPoint, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("ambient dimension must be >= 1")
        if not self.points:
            raise ConfigError("empty point list")
        for P in self.points:
            if len(P) != self.n + 1:
                raise ConfigError(f"point {P.to_json()} has wrong length for P^{self.n}")
            if P.field != self.field:
                raise ConfigError("points over mixed fields")
        if len(set(P.coords for P in self.points)) != len(self.points):
            raise ConfigError("points are not pairwise distinct")
        if len(self.points) < self.n + 1:
            raise ConfigError(f"need at least n+1 = {self.n + 1} points")
        if rank_array(self.field, self.coord_array()) != self.n + 1:
            raise ConfigError("points lie on a hyperplane (do not span P^n)")

    @classmethod
    def from_coords(cls, field: Field, rows: Sequence[Sequence], n: int | None = None) -> PointConfig:
        if not rows:
            raise ConfigError("empty point list")
        n = len(rows[0]) - 1 if n is None else n
        return cls(n, field, tuple(ProjPoint.of(field, r) for r in rows))

    @property
    def s(self) -> int:
        return len(self.points)

    def coord_array(self) -> np.ndarray:
        return self.field.array([list(P.coords) for P in self.points])

    def coord_matrix(self) -> Matrix:
        return Matrix(self.field, self.coord_array())

    def reordered(self, order: Sequence[int]) -> PointConfig:
        return PointConfig(self.n, self.field, tuple(self.points[k] for k in order))

    def to_json(self) -> dict:
        return {"n": self.n, "field": self.field.to_json(),
                "points": [P.to_json() for P in self.points]}

    @classmethod
    def from_json(cls, data: dict) -> PointConfig:
        field = Field.from_json(data["field"])
        pts = data["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("'points' must be a nonempty array")
        return cls.from_coords(field, [[str(c) for c in p] for p in pts], int(data["n"]))


def subset_rank(cfg: PointConfig, idxs: Sequence[int]) -> int:
    """Rank of the coordinate rows indexed by ``idxs``."""
    if not idxs:
        raise ValueError("empty index list")
    for k in idxs:
        if not 0 <= k < cfg.s:
            raise IndexError(f"point index {k} out of range")
    return rank_array(cfg.field, cfg.coord_array()[list(idxs)])


def _subsets(cfg: PointConfig, size: int, cap: int):
    total = comb(cfg.s, size)
    if total > cap:
        raise SizeLimit(f"C({cfg.s},{size}) = {total} subsets exceeds cap {cap}")
    return combinations(range(cfg.s), size)


def _first_deficient(cfg: PointConfig, size: int, max_rank: int, cap: int):
    """Lexicographically first ``size``-subset of rank <= max_rank, else None."""
    a = cfg.coord_array()
    for sub in _subsets(cfg, size, cap):
        if rank_array(cfg.field, a[list(sub)]) <= max_rank:
            return sub
    return None


def is_general_position(cfg: PointConfig, cap: int = DEFAULT_SUBSET_CAP) -> bool:
    """True iff no n+1 points of X lie on a hyperplane."""
    return _first_deficient(cfg, cfg.n + 1, cfg.n, cap) is None


class SpecialPosition(NamedTuple):
    i: int
    witness: tuple[int, ...]


def special_position_index(cfg: PointConfig, cap: int = DEFAULT_SUBSET_CAP) -> SpecialPosition | None:
    """Smallest i in 0..n-2 at which no n-i points lie on a P^{n-i-2}.

    Returns None for a configuration in general position.  Otherwise the
    witness is the lexicographically first set of n-i+1 points spanning only
    a P^{n-i-1}.
    """
    n = cfg.n
    witness = _first_deficient(cfg, n + 1, n, cap)
    if witness is None:
        return None
    for i in range(0, n - 1):
        # condition (2) at i fails exactly when some n-i points have rank <= n-i-1
        bad = _first_deficient(cfg, n - i, n - i - 1, cap) if i < n - 2 else None
        if bad is None:
            if i > 0:
                witness = _first_deficient(cfg, n - i + 1, n - i, cap)
            return SpecialPosition(i, witness)
    raise AssertionError("unreachable: pairwise distinct points satisfy condition (2) at i = n-2")


@dataclass(frozen=True)
class FrameMap:
    """Projective coordinate change P -> g P."""

    g: Matrix

    def __post_init__(self):
        if self.g.rows != self.g.cols:
            raise SingularFrame("frame matrix must be square")

    @classmethod
    def identity(cls, field: Field, n: int) -> FrameMap:
        return cls(Matrix.identity(field, n + 1))

    def apply_point(self, P: ProjPoint) -> ProjPoint:
        return ProjPoint.of(P.field, self.g @ list(P.coords))

    def apply(self, cfg: PointConfig) -> PointConfig:
        return PointConfig(cfg.n, cfg.field, tuple(self.apply_point(P) for P in cfg.points))

    def inverse(self) -> FrameMap:
        return FrameMap(inverse(self.g))

    def compose(self, other: FrameMap) -> FrameMap:
        """``self`` after ``other``."""
        return FrameMap(self.g @ other.g)

    def form_pullback(self) -> Matrix:
        """Matrix acting on linear-form coefficient vectors: L o g^{-1}."""
        return inverse(self.g).T


def frame_transform(cfg: PointConfig, frame_idxs: Sequence[int],
                    unit_idx: int | None = None) -> tuple[FrameMap, PointConfig]:
    """Coordinates in which the frame points become e_0..e_n (and the unit point (1:...:1))."""
    f, n = cfg.field, cfg.n
    if len(frame_idxs) != n + 1:
        raise SingularFrame(f"need n+1 = {n + 1} frame points")
    a = cfg.coord_array()
    cols = Matrix(f, a[list(frame_idxs)].T)
    if rank_array(f, cols.array) < n + 1:
        raise SingularFrame("frame points are dependent")
    if unit_idx is not None:
        scal = solve(cols, list(a[unit_idx]))
        if any(c == 0 for c in scal):
            raise BadUnit("unit point lies on a coordinate hyperplane of the frame")
        scaled = cols.array.copy()
        for l, c in enumerate(scal):
            scaled[:, l] = f.reduce(scaled[:, l] * c)
        cols = Matrix(f, scaled)
    fm = FrameMap(inverse(cols))
    return fm, fm.apply(cfg)


def coordinate_points(field: Field, n: int) -> list[list]:
    return [[field.one if k == l else field.zero for k in range(n + 1)] for l in range(n + 1)]
