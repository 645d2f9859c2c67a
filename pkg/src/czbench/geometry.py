"""Exact dyadic cube geometry.

All cubes are half-open axis-parallel boxes [a_1, a_1+s) x ... x [a_n, a_n+s)
carried by integer lattice coordinates relative to a root cube, so that
disjointness and coverage checks run in integer / rational arithmetic with
zero tolerance.  Real coordinates are derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RootCube",
    "DyadicCube",
    "SlabRectangle",
    "Decomposition",
    "Monomial",
    "unit_root",
    "dyadic_family",
    "refinement_depth",
    "decompose_rectangle",
    "complementary_decomposition",
    "reflect_decomposition",
    "generation_children",
    "boundary_collections",
    "boundary_shell_box",
    "count_bound",
    "paper_count_bound",
    "check_decomposition",
    "recovery_rhs",
    "monomial_recovery_error",
]


@dataclass(frozen=True)
class RootCube:
    """Reference cube: everything else is located by integers relative to it."""

    n: int
    center: tuple[Fraction, ...]
    side: Fraction

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if len(self.center) != self.n:
            raise ValueError("center has wrong dimension")
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def lower(self) -> tuple[Fraction, ...]:
        return tuple(c - self.side / 2 for c in self.center)

    @property
    def upper(self) -> tuple[Fraction, ...]:
        return tuple(c + self.side / 2 for c in self.center)


def unit_root(n: int) -> RootCube:
    """The unit cube [0,1)^n."""
    return RootCube(n=n, center=tuple([Fraction(1, 2)] * n), side=Fraction(1))


@dataclass(frozen=True)
class DyadicCube:
    """Dyadic subcube of a root cube.

    ``corner`` holds the lattice coordinates of the lower corner in units of
    2**-level of the root side; the cube occupies
    [corner_i, corner_i + 1) * side in each axis.
    """

    level: int
    corner: tuple[int, ...]
    root: RootCube

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        if len(self.corner) != self.root.n:
            raise ValueError("corner has wrong dimension")

    @property
    def n(self) -> int:
        return self.root.n

    @property
    def side(self) -> Fraction:
        return self.root.side / 2**self.level

    @property
    def lower(self) -> tuple[Fraction, ...]:
        s = self.side
        rl = self.root.lower
        return tuple(rl[i] + self.corner[i] * s for i in range(self.n))

    @property
    def upper(self) -> tuple[Fraction, ...]:
        s = self.side
        return tuple(a + s for a in self.lower)

    @property
    def center(self) -> tuple[Fraction, ...]:
        s = self.side
        return tuple(a + s / 2 for a in self.lower)

    @property
    def volume(self) -> Fraction:
        return self.side**self.n

    def inside_root(self) -> bool:
        top = 2**self.level
        return all(0 <= c < top for c in self.corner)

    def contains(self, point: Sequence[Fraction | float]) -> bool:
        lo, up = self.lower, self.upper
        return all(lo[i] <= Fraction(point[i]) < up[i] for i in range(self.n))

    def child(self, offset: tuple[int, ...], k: int = 1) -> "DyadicCube":
        base = tuple(2**k * c for c in self.corner)
        return DyadicCube(
            level=self.level + k,
            corner=tuple(base[i] + offset[i] for i in range(self.n)),
            root=self.root,
        )

    def descriptor(self) -> dict:
        return {"level": self.level, "corner": list(self.corner)}


@dataclass(frozen=True)
class SlabRectangle:
    """[0,1)^(n-1) x [lo, hi) along one coordinate axis (in root coordinates)."""

    n: int
    axis: int
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi <= 1):
            raise ValueError("slab bounds must satisfy 0 <= lo <= hi <= 1")
        if not (0 <= self.axis < self.n):
            raise ValueError("axis out of range")

    @property
    def thickness(self) -> Fraction:
        return self.hi - self.lo

    @property
    def volume(self) -> Fraction:
        return self.thickness

    def is_empty(self) -> bool:
        return self.lo == self.hi


def dyadic_family(n: int, depth: int, root: RootCube | None = None) -> list[DyadicCube]:
    """All dyadic subcubes of the root at levels 0..depth, lexicographic order."""
    if root is None:
        root = unit_root(n)
    out = []
    for level in range(depth + 1):
        for corner in product(range(2**level), repeat=n):
            out.append(DyadicCube(level=level, corner=corner, root=root))
    return out


def refinement_depth(eps: float | Fraction) -> int:
    """Smallest m >= 1 with 2**-m strictly below eps."""
    e = Fraction(eps)
    if not (0 < e < 1):
        raise ValueError("eps must lie in (0,1)")
    m = 1
    while Fraction(1, 2**m) >= e:
        m += 1
    return m


def count_bound(n: int, m: int) -> int:
    """Cube-count bound for the m-bit expansion.

    The closed form 2 * 2**((n-1)m) dominates the geometric sum
    sum_{k=1..m} 2**((n-1)k) only for n >= 2; in one dimension each binary
    digit contributes a single interval, so the exact bound is m.
    """
    if n == 1:
        return m
    return 2 * 2 ** ((n - 1) * m)


def paper_count_bound(n: int, m: int) -> int:
    """The (m-1)-bit bound 2**(nm - n - m + 2) recorded for reference."""
    return 2 ** (n * m - n - m + 2)


@dataclass(frozen=True)
class Decomposition:
    """Partition of [0,1)^(n-1) x [0, t) into a thin slab and dyadic cubes.

    ``slab_levels[i]`` and ``slab_prefixes[i]`` describe the i-th nonzero
    binary digit of t_star: a slab of thickness 2**-k starting at
    slab_prefixes[i] / 2**k along the last axis, tiled by 2**((n-1)k) dyadic
    cubes of side 2**-k.  Cube corner arrays are materialized lazily so that
    very fine decompositions stay cheap to build and to verify.
    """

    n: int
    m: int
    t: Fraction
    t_star: Fraction
    slab: SlabRectangle
    slab_levels: tuple[int, ...]
    slab_prefixes: tuple[int, ...]
    reflected: bool = False
    root: RootCube = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.root is None:
            object.__setattr__(self, "root", unit_root(self.n))

    @property
    def B(self) -> int:
        return sum(2 ** ((self.n - 1) * k) for k in self.slab_levels)

    @property
    def count_bound(self) -> int:
        return count_bound(self.n, self.m)

    @property
    def paper_count_bound(self) -> int:
        return paper_count_bound(self.n, self.m)

    def corner_arrays(self) -> list[tuple[int, np.ndarray]]:
        """Per-slab (level, corners) with corners shaped (2**((n-1)k), n).

        Corners are emitted in lexicographic order; the last axis holds the
        slab prefix (start of the slab in units of 2**-k), possibly reflected.
        """
        out = []
        for k, pref in zip(self.slab_levels, self.slab_prefixes):
            cnt = 2 ** ((self.n - 1) * k)
            corners = np.empty((cnt, self.n), dtype=np.int64)
            if self.n == 1:
                corners[:, 0] = pref
            else:
                grid = np.indices([2**k] * (self.n - 1)).reshape(self.n - 1, cnt)
                corners[:, : self.n - 1] = grid.T
                corners[:, self.n - 1] = pref
            out.append((k, corners))
        return out

    @property
    def cubes(self) -> list[DyadicCube]:
        result = []
        for k, corners in self.corner_arrays():
            for row in corners:
                result.append(DyadicCube(level=k, corner=tuple(int(v) for v in row), root=self.root))
        return result


def _binary_digits(b: int, m: int) -> list[tuple[int, int]]:
    """(k, prefix_numerator) for each set bit of b / 2**m, k = 1..m.

    prefix_numerator is sum_{j<k, bit j set} 2**(k-j), i.e. the slab start in
    units of 2**-k, always an integer.
    """
    digits = []
    prefix = Fraction(0)
    for k in range(1, m + 1):
        bit = (b >> (m - k)) & 1
        if bit:
            num = prefix * 2**k
            assert num.denominator == 1
            digits.append((k, int(num)))
            prefix += Fraction(1, 2**k)
    return digits


def decompose_rectangle(n: int, t: float | Fraction, eps: float | Fraction) -> Decomposition:
    """Split [0,1)^(n-1) x [0, t) into dyadic cubes plus a slab of thickness < eps.

    m is the smallest depth with 2**-m < eps.  t_star = b / 2**m is the
    pigeonholed dyadic approximation 2**m t - 1 <= b < 2**m t, except that an
    exactly dyadic t keeps t_star = t (empty slab), which only sharpens the
    approximation.  Cubes come from tiling the binary-digit slabs of t_star.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    tf = Fraction(t)
    if not (0 < tf < 1):
        raise ValueError("t must lie in (0,1)")
    m = refinement_depth(eps)
    scaled = tf * 2**m
    if scaled.denominator == 1:
        b = int(scaled)
    else:
        b = math.floor(scaled)
    t_star = Fraction(b, 2**m)
    digits = _binary_digits(b, m)
    slab = SlabRectangle(n=n, axis=n - 1, lo=t_star, hi=tf)
    return Decomposition(
        n=n,
        m=m,
        t=tf,
        t_star=t_star,
        slab=slab,
        slab_levels=tuple(k for k, _ in digits),
        slab_prefixes=tuple(p for _, p in digits),
    )


def reflect_decomposition(dec: Decomposition) -> Decomposition:
    """Reflect a decomposition of [0, t) about the hyperplane y_axis = 1/2.

    The cubes then tile [0,1)^(n-1) x [1 - t_star, 1) and the slab becomes
    [1 - t, 1 - t_star).
    """
    prefixes = []
    for k, pref in zip(dec.slab_levels, dec.slab_prefixes):
        prefixes.append(2**k - pref - 1)
    slab = SlabRectangle(n=dec.n, axis=dec.slab.axis, lo=1 - dec.t, hi=1 - dec.t_star)
    return Decomposition(
        n=dec.n,
        m=dec.m,
        t=dec.t,
        t_star=dec.t_star,
        slab=slab,
        slab_levels=dec.slab_levels,
        slab_prefixes=tuple(prefixes),
        reflected=not dec.reflected,
        root=dec.root,
    )


def complementary_decomposition(n: int, r: float | Fraction, eps: float | Fraction) -> Decomposition:
    """Decompose [0,1)^(n-1) x [r, 1) by reflecting the [0, 1-r) decomposition."""
    rf = Fraction(r)
    if not (0 < rf < 1):
        raise ValueError("r must lie in (0,1)")
    return reflect_decomposition(decompose_rectangle(n, 1 - rf, eps))


def check_decomposition(dec: Decomposition) -> None:
    """Exact verification of the decomposition invariants; raises on failure.

    Checks, in integer / rational arithmetic with zero tolerance:
      * slab intervals along the split axis are pairwise disjoint and tile
        [0, t_star) (or [1 - t_star, 1) after reflection);
      * within each slab the cube corners are in-bounds, lexicographically
        strictly increasing (hence pairwise distinct) and exhaustive;
      * cube volumes sum exactly to the covered rectangle volume;
      * |t - t_star| < 2**-m, with equality to zero exactly in the dyadic case.
    """
    n, m = dec.n, dec.m
    gap = abs(dec.t - dec.t_star)
    if gap >= Fraction(1, 2**m):
        raise AssertionError("t_star misses t by at least 2**-m")
    scaled = dec.t * 2**m
    if scaled.denominator == 1 and gap != 0:
        raise AssertionError("dyadic t must be represented exactly")

    intervals = []
    total_volume = Fraction(0)
    for k, arr in dec.corner_arrays():
        pref = arr[0, n - 1]
        if not np.all(arr[:, n - 1] == pref):
            raise AssertionError("slab cubes must share the split-axis coordinate")
        lo = Fraction(int(pref), 2**k)
        hi = lo + Fraction(1, 2**k)
        intervals.append((lo, hi))
        cnt = 2 ** ((n - 1) * k)
        if arr.shape != (cnt, n):
            raise AssertionError("slab cube count mismatch")
        if arr.min() < 0 or arr.max() >= 2**k:
            raise AssertionError("cube corner out of bounds")
        if n > 1:
            lin = np.zeros(cnt, dtype=np.int64)
            for i in range(n - 1):
                lin = lin * 2**k + arr[:, i]
            if cnt > 1 and not np.all(np.diff(lin) > 0):
                raise AssertionError("slab corners must be strictly increasing")
            # distinct + in-bounds + full count => the tiling is exhaustive
        total_volume += cnt * Fraction(1, 2**k) ** n

    intervals.sort()
    for (lo1, hi1), (lo2, _) in zip(intervals, intervals[1:]):
        if hi1 != lo2:
            raise AssertionError("slab intervals must be contiguous")
    covered = dec.t_star
    if intervals:
        lo0, hi_last = intervals[0][0], intervals[-1][1]
        if hi_last - lo0 != covered or (hi_last - lo0) != sum(h - l for l, h in intervals):
            raise AssertionError("slab intervals do not tile the covered range")
        expected_lo = (1 - dec.t_star) if dec.reflected else Fraction(0)
        if lo0 != expected_lo:
            raise AssertionError("covered range starts at the wrong point")
    elif covered != 0:
        raise AssertionError("empty cube list but nonzero covered volume")
    if total_volume != covered:
        raise AssertionError("cube volumes do not sum to the covered volume")


def generation_children(Q: DyadicCube, k: int = 1) -> list[DyadicCube]:
    """All 2**(nk) dyadic descendants of Q at depth k, in lexicographic order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    base = tuple(2**k * c for c in Q.corner)
    out = []
    for off in product(range(2**k), repeat=Q.n):
        out.append(
            DyadicCube(
                level=Q.level + k,
                corner=tuple(base[i] + off[i] for i in range(Q.n)),
                root=Q.root,
            )
        )
    return out


def boundary_collections(Q: DyadicCube, m: int) -> tuple[list[DyadicCube], list[DyadicCube]]:
    """Depth-m children of Q touching the boundary, and their tripled guards.

    Returns (G, H): G holds the children whose closure meets the boundary of
    Q; H holds the children I with 3I inside Q and the boundary of 3I meeting
    the boundary of Q.  The union of G is exactly the boundary shell
    Q minus (1 - 2*2**-m)Q under the half-open convention.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    top = 2**m
    base = tuple(top * c for c in Q.corner)
    G, H = [], []
    for off in product(range(top), repeat=Q.n):
        touches = any(o == 0 or o == top - 1 for o in off)
        if touches:
            G.append(
                DyadicCube(level=Q.level + m, corner=tuple(base[i] + off[i] for i in range(Q.n)), root=Q.root)
            )
        inside = all(1 <= o <= top - 2 for o in off)
        guards = any(o == 1 or o == top - 2 for o in off)
        if inside and guards:
            H.append(
                DyadicCube(level=Q.level + m, corner=tuple(base[i] + off[i] for i in range(Q.n)), root=Q.root)
            )
    return G, H


def boundary_shell_box(Q: DyadicCube, m: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Lower/upper corners of the concentric inner box (1 - 2*2**-m) Q."""
    delta = Fraction(1, 2**m)
    inner_side = Q.side * (1 - 2 * delta)
    c = Q.center
    lo = tuple(c[i] - inner_side / 2 for i in range(Q.n))
    hi = tuple(c[i] + inner_side / 2 for i in range(Q.n))
    return lo, hi


@dataclass(frozen=True)
class Monomial:
    """Cube-normalized centered monomial ((x - c_Q) / side)**beta."""

    beta: tuple[int, ...]
    cube: DyadicCube

    def __post_init__(self):
        if len(self.beta) != self.cube.n:
            raise ValueError("multiindex has wrong dimension")
        if any(b < 0 for b in self.beta):
            raise ValueError("multiindex entries must be >= 0")

    @property
    def degree(self) -> int:
        return sum(self.beta)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (..., n)."""
        c = np.array([float(v) for v in self.cube.center])
        s = float(self.cube.side)
        u = (np.asarray(x, dtype=float) - c) / s
        out = np.ones(u.shape[:-1])
        for i, b in enumerate(self.beta):
            if b:
                out = out * u[..., i] ** b
        return out


def _corner_coords(Q: DyadicCube, y: np.ndarray) -> np.ndarray:
    lo = np.array([float(v) for v in Q.lower])
    return (np.asarray(y, dtype=float) - lo) / float(Q.side)


def recovery_rhs(
    Q: DyadicCube,
    beta: tuple[int, ...],
    y: np.ndarray,
    M: int | None,
) -> np.ndarray:
    """Right side of the indicator-recovery identity for the corner power v**beta.

    With v the corner coordinates of Q and d = beta[-1] >= 1,

        1_Q(y) v**beta = integral_0^1 1_{slab(r)}(y) * prod_{i<n} v_i**beta_i
                                    * d * (v_n - r)**(d-1) dr,

    where slab(r) is the part of Q with v_n >= r.  M midpoint nodes are used
    for the r-integral; M=None evaluates the integral in closed form (the
    result then coincides with the left side exactly, up to rounding).
    """
    n = Q.n
    if len(beta) != n:
        raise ValueError("multiindex has wrong dimension")
    d = beta[-1]
    if d < 1:
        raise ValueError("the split-axis exponent must be >= 1; permute axes first")
    v = _corner_coords(Q, y)
    inside_others = np.ones(v.shape[:-1], dtype=bool)
    lower_factor = np.ones(v.shape[:-1])
    for i in range(n - 1):
        inside_others &= (0 <= v[..., i]) & (v[..., i] < 1)
        if beta[i]:
            lower_factor = lower_factor * v[..., i] ** beta[i]
    vn = v[..., n - 1]
    if M is None:
        inner = np.where((0 <= vn) & (vn < 1), np.maximum(vn, 0.0) ** d, 0.0)
    else:
        if M < 1:
            raise ValueError("M must be >= 1")
        nodes = (np.arange(M) + 0.5) / M
        diff = vn[..., None] - nodes
        terms = np.where((diff > 0) & (vn[..., None] < 1), d * np.maximum(diff, 0.0) ** (d - 1), 0.0)
        inner = terms.mean(axis=-1)
    return np.where(inside_others, lower_factor * inner, 0.0)


def monomial_recovery_error(
    Q: DyadicCube,
    beta: tuple[int, ...],
    M: int,
    grid: int = 4096,
) -> float:
    """Max deviation of the midpoint-quadrature recovery from the exact power.

    Evaluates both sides of the recovery identity on a dense grid covering Q
    (plus a margin outside, where both sides vanish) and returns the maximum
    absolute error; the midpoint rule keeps it below roughly 4 * beta[-1] / M.
    """
    n = Q.n
    lo = np.array([float(v) for v in Q.lower])
    s = float(Q.side)
    axes = [np.linspace(lo[i] - 0.25 * s, lo[i] + 1.25 * s, grid if i == n - 1 else 33) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    lhs = recovery_rhs(Q, beta, pts, M=None)
    rhs = recovery_rhs(Q, beta, pts, M=M)
    return float(np.max(np.abs(lhs - rhs)))
