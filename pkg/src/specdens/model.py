"""Domain types for the matrix model M = S + L X R.

S is a diagonal source, L and R are positive diagonal deformation factors
and X is an i.i.d. complex Gaussian matrix whose entries have variance
1/n_inv_var.  Every analytic formula downstream depends on the three
diagonals only through their block structure: maximal runs of indices on
which (S_jj, L_jj, R_jj) is constant.  Ensembles therefore store one value
triple per group plus a multiplicity, and the full N x N matrices are never
materialized on the analytic path (the Monte Carlo path builds them).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

from .errors import DomainError, InvalidInputError

__all__ = [
    "MultiplicityVector",
    "EnsembleGroup",
    "StructuredEnsemble",
    "RankOneNonNormalEnsemble",
    "ScanGeometry",
    "LineScan",
    "GridScan",
    "merge_multiplicities",
    "build_ensemble",
    "alpha_pair",
    "alpha_pair_indep",
]


def _check_positive_ints(groups) -> tuple[int, ...]:
    out = []
    for g in groups:
        if int(g) != g or g < 1:
            raise InvalidInputError(f"group sizes must be positive integers, got {groups!r}")
        out.append(int(g))
    if not out:
        raise InvalidInputError("multiplicity vector needs at least one group")
    return tuple(out)


@dataclass(frozen=True)
class MultiplicityVector:
    """Ordered positive group sizes (n_1, ..., n_d) partitioning a matrix size."""

    groups: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", _check_positive_ints(self.groups))

    @property
    def dimension(self) -> int:
        return len(self.groups)

    @property
    def total(self) -> int:
        return sum(self.groups)

    def boundaries(self) -> frozenset[int]:
        """Interior cut positions; 0 and the total are implicit."""
        cuts, acc = [], 0
        for g in self.groups[:-1]:
            acc += g
            cuts.append(acc)
        return frozenset(cuts)


def merge_multiplicities(*vectors) -> MultiplicityVector:
    """Common refinement of several multiplicity vectors of equal total.

    The result's boundaries are the union of the inputs' boundaries, i.e.
    the coarsest blocking that refines every input.
    """
    if not vectors:
        raise InvalidInputError("need at least one multiplicity vector")
    mvs = [v if isinstance(v, MultiplicityVector) else MultiplicityVector(tuple(v)) for v in vectors]
    total = mvs[0].total
    if any(v.total != total for v in mvs):
        raise InvalidInputError(
            f"multiplicity vectors describe different sizes: {[v.total for v in mvs]}"
        )
    cuts = sorted(set().union(*[v.boundaries() for v in mvs]))
    edges = [0] + cuts + [total]
    return MultiplicityVector(tuple(b - a for a, b in zip(edges, edges[1:])))


@dataclass(frozen=True)
class EnsembleGroup:
    """One constant-diagonal block: source value s, factors l and r, size m."""

    s: complex
    l: float
    r: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "l", float(self.l))
        object.__setattr__(self, "r", float(self.r))
        if not (self.l > 0.0 and self.r > 0.0):
            raise InvalidInputError(f"deformation factors must be positive, got l={self.l}, r={self.r}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidInputError(f"group multiplicity must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))


@dataclass(frozen=True)
class StructuredEnsemble:
    """Diagonal-source ensemble M = S + L X R.

    Adjacent groups with identical (s, l, r) are tolerated: densities are
    invariant under artificial splits, and the invariance is tested.  Use
    ``build_ensemble`` to get the maximally merged form.
    """

    groups: tuple[EnsembleGroup, ...]
    n_inv_var: float

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise InvalidInputError("ensemble needs at least one group")
        if not all(isinstance(g, EnsembleGroup) for g in groups):
            groups = tuple(EnsembleGroup(*g) for g in groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "n_inv_var", float(self.n_inv_var))
        if not self.n_inv_var > 0.0:
            raise InvalidInputError(f"n_inv_var must be positive, got {self.n_inv_var}")

    @property
    def size(self) -> int:
        return sum(g.m for g in self.groups)

    @property
    def multiplicities(self) -> MultiplicityVector:
        return MultiplicityVector(tuple(g.m for g in self.groups))

    def diagonals(self):
        """Expanded per-index (s, l, r) arrays, as plain lists."""
        s, l, r = [], [], []
        for g in self.groups:
            s.extend([g.s] * g.m)
            l.extend([g.l] * g.m)
            r.extend([g.r] * g.m)
        return s, l, r

    def is_identity_deformed(self) -> bool:
        return all(g.l == 1.0 and g.r == 1.0 for g in self.groups)


def build_ensemble(s_diag, l_diag, r_diag, n_inv_var=None) -> StructuredEnsemble:
    """Assemble an ensemble from run-length encoded diagonals.

    Each diagonal is a sequence of (value, multiplicity) pairs.  The three
    encodings must describe the same total size; the result carries the
    maximally merged groups (runs of indices where all three diagonals are
    constant).  ``n_inv_var`` defaults to the matrix size.
    """
    expanded = []
    for name, diag, cast in (("s_diag", s_diag, complex), ("l_diag", l_diag, float), ("r_diag", r_diag, float)):
        col = []
        for pair in diag:
            try:
                value, mult = pair
            except (TypeError, ValueError):
                raise InvalidInputError(f"{name} entries must be (value, multiplicity) pairs, got {pair!r}")
            if int(mult) != mult or mult < 1:
                raise InvalidInputError(f"{name} multiplicities must be positive integers, got {mult!r}")
            col.extend([cast(value)] * int(mult))
        if not col:
            raise InvalidInputError(f"{name} must not be empty")
        expanded.append(col)

    s_full, l_full, r_full = expanded
    if not (len(s_full) == len(l_full) == len(r_full)):
        raise InvalidInputError(
            f"diagonal lengths disagree: s={len(s_full)}, l={len(l_full)}, r={len(r_full)}"
        )

    groups = []
    for s, l, r in zip(s_full, l_full, r_full):
        if groups and groups[-1][0] == s and groups[-1][1] == l and groups[-1][2] == r:
            groups[-1][3] += 1
        else:
            groups.append([s, l, r, 1])

    size = len(s_full)
    n = size if n_inv_var is None else n_inv_var
    return StructuredEnsemble(tuple(EnsembleGroup(*g) for g in groups), n)


def alpha_pair(group: EnsembleGroup, x: complex, y: complex) -> complex:
    """Group kernel (conj(x) - conj(s)) (y - s) / (l r)^2.

    The first argument enters conjugated, so alpha_pair(g, x, x) is real
    and nonnegative, vanishing exactly at the group source.
    """
    return alpha_pair_indep(group, complex(x).conjugate(), y)


def alpha_pair_indep(group: EnsembleGroup, x_bar: complex, y: complex) -> complex:
    """Kernel with the conjugated slot supplied directly.

    Needed by the finite-difference machinery, which moves x_bar and y
    independently rather than on the conjugate-paired diagonal.
    """
    lr = group.l * group.r
    return (complex(x_bar) - group.s.conjugate()) * (complex(y) - group.s) / (lr * lr)


class ScanGeometry:
    """Marker base for scan geometries over the complex plane."""

    def centers(self) -> list[complex]:
        raise NotImplementedError


@dataclass(frozen=True)
class LineScan(ScanGeometry):
    """Evenly binned segment scan.

    ``centers()`` are the bin midpoints; they double as the analytic sample
    locations.  ``strip_half_width`` only matters for empirical estimation,
    where eigenvalues within that perpendicular distance of the segment are
    collected.
    """

    start: complex
    stop: complex
    points: int
    strip_half_width: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "start", complex(self.start))
        object.__setattr__(self, "stop", complex(self.stop))
        if int(self.points) != self.points or self.points < 2:
            raise InvalidInputError(f"line scan needs at least 2 points, got {self.points}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "strip_half_width", float(self.strip_half_width))
        if not self.strip_half_width > 0.0:
            raise InvalidInputError("strip_half_width must be positive")
        if self.start == self.stop:
            raise InvalidInputError("line scan endpoints must differ")

    @property
    def length(self) -> float:
        return abs(self.stop - self.start)

    @property
    def bin_length(self) -> float:
        return self.length / self.points

    def centers(self) -> list[complex]:
        step = (self.stop - self.start) / self.points
        return [self.start + (k + 0.5) * step for k in range(self.points)]


@dataclass(frozen=True)
class GridScan(ScanGeometry):
    """Rectangular cell grid; centers() walks rows (re fast, im slow)."""

    corner_min: complex
    corner_max: complex
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "corner_min", complex(self.corner_min))
        object.__setattr__(self, "corner_max", complex(self.corner_max))
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.nx * self.ny < 2:
            raise InvalidInputError("grid scan needs at least 2 cells")
        if not (self.corner_max.real > self.corner_min.real and self.corner_max.imag > self.corner_min.imag):
            raise InvalidInputError("corner_max must exceed corner_min in both coordinates")

    @property
    def dx(self) -> float:
        return (self.corner_max.real - self.corner_min.real) / self.nx

    @property
    def dy(self) -> float:
        return (self.corner_max.imag - self.corner_min.imag) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def centers(self) -> list[complex]:
        out = []
        for j in range(self.ny):
            im = self.corner_min.imag + (j + 0.5) * self.dy
            for i in range(self.nx):
                re = self.corner_min.real + (i + 0.5) * self.dx
                out.append(complex(re, im))
        return out


@dataclass(frozen=True)
class RankOneNonNormalEnsemble:
    """Rank-one off-diagonal source: M = alpha E_(row,col) + X.

    E_(row,col) is the matrix unit at the given 1-based position, row != col,
    so the source is maximally non-normal (a single Jordan-like coupling).
    The density depends on alpha only through |alpha|^2; the placement only
    matters to the sampling path.
    """

    size: int
    alpha: complex
    n_inv_var: float = None  # type: ignore[assignment]  # defaults to size
    row: int = 1
    col: int = 2

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise InvalidInputError(f"size must be an integer >= 2, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "alpha", complex(self.alpha))
        n = self.size if self.n_inv_var is None else float(self.n_inv_var)
        if not n > 0.0:
            raise InvalidInputError(f"n_inv_var must be positive, got {self.n_inv_var}")
        object.__setattr__(self, "n_inv_var", n)
        for name in ("row", "col"):
            v = getattr(self, name)
            if int(v) != v or not 1 <= v <= self.size:
                raise InvalidInputError(f"{name} must be in 1..{self.size}, got {v}")
            object.__setattr__(self, name, int(v))
        if self.row == self.col:
            raise InvalidInputError("source position must be off-diagonal (row != col)")
