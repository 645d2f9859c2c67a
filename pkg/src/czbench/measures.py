"""Discrete measures on dyadic lattices.

A measure lives on the cells of a depth-L lattice over a root cube.  Cube
masses are exact cell sums: measures built from dyadic data carry integer
numerators over a common denominator, so additivity and the boundary-shell
lemma can be checked with zero tolerance.  Operator evaluation uses the
float64 view (atoms at cell centers).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .geometry import DyadicCube, RootCube, unit_root

__all__ = [
    "DiscreteMeasure",
    "DoublingProfile",
    "AInfinityProfile",
    "uniform_measure",
    "coarsen",
    "generate_doubling_measure",
    "power_weight_measure",
    "mixture_measure",
    "cube_mass",
    "box_mass",
    "doubling_profile",
    "a_infinity_profile",
    "boundary_mass_check",
    "write_measure",
    "read_measure",
]

_CASCADE_GRID = 2**12  # dyadic grid for cascade perturbations


@dataclass(eq=False)
class DiscreteMeasure:
    """Nonnegative masses on the cells of a dyadic lattice.

    ``numerators`` (object array of Python ints) over ``denominator`` give the
    exact masses when ``exact`` is True; ``floats`` is always available.
    """

    n: int
    L: int
    floats: np.ndarray
    numerators: np.ndarray | None = None
    denominator: int = 1
    root: RootCube = field(default=None)  # type: ignore[assignment]
    name: str = "measure"

    def __post_init__(self):
        if self.root is None:
            self.root = unit_root(self.n)
        shape = (2**self.L,) * self.n
        if self.floats.shape != shape:
            raise ValueError(f"mass grid must have shape {shape}")
        if np.any(self.floats < 0):
            raise ValueError("masses must be nonnegative")
        self._float_prefix = None
        self._exact_prefix = None
        self._support = None

    @property
    def exact(self) -> bool:
        return self.numerators is not None

    @property
    def cells_per_side(self) -> int:
        return 2**self.L

    @property
    def cell_side(self) -> Fraction:
        return self.root.side / 2**self.L

    @property
    def total(self) -> Fraction | float:
        if self.exact:
            return Fraction(int(self.numerators.sum()), self.denominator)
        return float(self.floats.sum())

    # -- prefix tables ----------------------------------------------------

    def _prefix(self, exact: bool):
        if exact:
            if not self.exact:
                raise ValueError("measure has no exact backing")
            if self._exact_prefix is None:
                self._exact_prefix = _build_prefix(self.numerators.astype(object))
            return self._exact_prefix
        if self._float_prefix is None:
            self._float_prefix = _build_prefix(self.floats.astype(np.float64))
        return self._float_prefix

    # -- atoms -------------------------------------------------------------

    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(points, masses, cell indices) of the nonzero cells.

        Points are cell centers in real coordinates, shape (N, n); iteration
        order is C order of the grid, so results are reproducible.
        """
        if self._support is None:
            idx = np.argwhere(self.floats > 0)
            masses = self.floats[tuple(idx.T)]
            lo = np.array([float(v) for v in self.root.lower])
            h = float(self.cell_side)
            pts = lo + (idx + 0.5) * h
            self._support = (pts, masses, idx)
        return self._support


def _build_prefix(grid: np.ndarray) -> np.ndarray:
    n = grid.ndim
    pref = grid
    for axis in range(n):
        pref = np.cumsum(pref, axis=axis)
    padded_shape = tuple(s + 1 for s in grid.shape)
    out = np.zeros(padded_shape, dtype=grid.dtype)
    out[(slice(1, None),) * n] = pref
    return out


def _prefix_box_sum(pref: np.ndarray, lo: Sequence[int], hi: Sequence[int]):
    """Inclusion-exclusion over the padded prefix table for the box [lo, hi)."""
    n = len(lo)
    if any(l >= h for l, h in zip(lo, hi)):
        return pref.flat[0] * 0
    total = pref.flat[0] * 0
    for mask in range(2**n):
        idx = []
        bits = 0
        for i in range(n):
            if (mask >> i) & 1:
                idx.append(lo[i])
                bits += 1
            else:
                idx.append(hi[i])
        total = total + (-1) ** bits * pref[tuple(idx)]
    return total


def box_mass(mu: DiscreteMeasure, lo: Sequence[int], hi: Sequence[int], exact: bool | None = None):
    """Mass of the lattice box [lo, hi) in cell units, clipped to the root."""
    use_exact = mu.exact if exact is None else exact
    top = mu.cells_per_side
    lo_c = [min(max(int(v), 0), top) for v in lo]
    hi_c = [min(max(int(v), 0), top) for v in hi]
    val = _prefix_box_sum(mu._prefix(use_exact), lo_c, hi_c)
    if use_exact:
        return Fraction(int(val), mu.denominator)
    return float(val)


def _cube_cell_range(mu: DiscreteMeasure, Q: DyadicCube) -> tuple[list[int], list[int]]:
    if Q.root != mu.root:
        raise ValueError("cube lives on a different root")
    if Q.level > mu.L:
        raise ValueError("cube is finer than the lattice; not aligned")
    u = 2 ** (mu.L - Q.level)
    lo = [c * u for c in Q.corner]
    hi = [(c + 1) * u for c in Q.corner]
    return lo, hi


def cube_mass(mu: DiscreteMeasure, Q: DyadicCube, exact: bool | None = None):
    """Exact mass of a lattice-aligned dyadic cube."""
    lo, hi = _cube_cell_range(mu, Q)
    return box_mass(mu, lo, hi, exact=exact)


def scaled_cube_box(mu: DiscreteMeasure, Q: DyadicCube, factor: int) -> tuple[list[int], list[int]]:
    """Cell-unit bounds of the concentric dilate factor*Q (factor 2 or 3)."""
    lo, hi = _cube_cell_range(mu, Q)
    u = 2 ** (mu.L - Q.level)
    if factor == 3:
        pad = u
    elif factor == 2:
        if u % 2 != 0:
            raise ValueError("2Q is not lattice-aligned at this depth")
        pad = u // 2
    else:
        raise ValueError("factor must be 2 or 3")
    return [l - pad for l in lo], [h + pad for h in hi]


@dataclass
class DoublingProfile:
    C_doub: Fraction | float
    C_triple: Fraction | float
    theta: float
    argmax_double: DyadicCube | None
    argmax_triple: DyadicCube | None
    infinite: bool = False
    zero_witness: DyadicCube | None = None

    @property
    def is_finite(self) -> bool:
        return not self.infinite


def doubling_profile(mu: DiscreteMeasure, family: Iterable[DyadicCube]) -> DoublingProfile:
    """Exact suprema of |2Q|/|Q| and |3Q|/|Q| over a finite cube family.

    Dilates are clipped to the root (the measure carries no outside mass).
    A zero-mass cube in the family yields an infinite profile with a witness.
    Cubes at full lattice depth, whose 2Q cannot be aligned, enter only the
    tripling supremum.  Ties break toward the lexicographically smallest
    (level, corner) cube.
    """
    cubes = sorted(family, key=lambda q: (q.level, q.corner))
    if not cubes:
        raise ValueError("empty cube family")
    exact = mu.exact
    pref = mu._prefix(exact)
    top = mu.cells_per_side

    def raw_box(lo, hi):
        lo_c = [min(max(v, 0), top) for v in lo]
        hi_c = [min(max(v, 0), top) for v in hi]
        return _prefix_box_sum(pref, lo_c, hi_c)

    # ratios tracked as raw (numerator, denominator) pairs; the measure's
    # common denominator cancels, and cross-multiplication avoids building
    # a Fraction (with its gcd) per cube
    best2 = best3 = None
    arg2 = arg3 = None
    for Q in cubes:
        lo, hi = _cube_cell_range(mu, Q)
        q = raw_box(lo, hi)
        if q == 0:
            return DoublingProfile(
                C_doub=float("inf"),
                C_triple=float("inf"),
                theta=float("inf"),
                argmax_double=None,
                argmax_triple=None,
                infinite=True,
                zero_witness=Q,
            )
        if Q.level < mu.L:
            lo2, hi2 = scaled_cube_box(mu, Q, 2)
            d2 = raw_box(lo2, hi2)
            if best2 is None or d2 * best2[1] > best2[0] * q:
                best2, arg2 = (d2, q), Q
        lo3, hi3 = scaled_cube_box(mu, Q, 3)
        d3 = raw_box(lo3, hi3)
        if best3 is None or d3 * best3[1] > best3[0] * q:
            best3, arg3 = (d3, q), Q
    if best2 is None:
        raise ValueError("family holds no cube coarser than the lattice")
    c2 = Fraction(int(best2[0]), int(best2[1])) if exact else best2[0] / best2[1]
    c3 = Fraction(int(best3[0]), int(best3[1])) if exact else best3[0] / best3[1]
    return DoublingProfile(
        C_doub=c2,
        C_triple=c3,
        theta=float(np.log2(float(c2))) if c2 > 0 else float("-inf"),
        argmax_double=arg2,
        argmax_triple=arg3,
    )


@dataclass
class AInfinityProfile:
    eps: tuple[float, ...]
    eta: tuple[float, ...]
    skipped: int = 0

    def eta_of_eps(self, e: float) -> float:
        for ev, et in zip(self.eps, self.eta):
            if ev == e:
                return et
        raise KeyError(e)


def a_infinity_profile(
    omega: DiscreteMeasure, family: Iterable[DyadicCube], eps_grid: Sequence[float]
) -> AInfinityProfile:
    """Worst-case omega-fraction carried by Lebesgue-small cell unions.

    For each cube and each eps, greedily takes the lightest cells subject to
    the strict volume constraint |E|/|Q| < eps; the greedy sum is the exact
    minimum.  eta(eps) is the sup over the family; zero-mass cubes are
    skipped and counted.
    """
    eps_grid = list(eps_grid)
    eta = [0.0] * len(eps_grid)
    skipped = 0
    for Q in sorted(family, key=lambda q: (q.level, q.corner)):
        lo, hi = _cube_cell_range(omega, Q)
        sl = tuple(slice(l, h) for l, h in zip(lo, hi))
        cells = omega.floats[sl].ravel()
        total = cells.sum()
        if total <= 0:
            skipped += 1
            continue
        cells = np.sort(cells)
        csum = np.concatenate([[0.0], np.cumsum(cells)])
        count = cells.size
        for i, e in enumerate(eps_grid):
            take = int(np.ceil(e * count)) - 1 if (e * count) == int(e * count) else int(e * count)
            take = min(max(take, 0), count)
            frac = csum[take] / total
            if frac > eta[i]:
                eta[i] = float(frac)
    return AInfinityProfile(eps=tuple(eps_grid), eta=tuple(eta), skipped=skipped)


def boundary_mass_check(
    mu: DiscreteMeasure, Q: DyadicCube, m: int, compute_bound: bool = True
) -> tuple[Fraction | float, Fraction | float]:
    """Shell-mass ratio of Q and its tripling-based bound.

    ratio = |Q \\ (1 - 2*2**-m) Q|_mu / |Q|_mu, the mass of the depth-m
    boundary cells; bound = D / (m - 1) with D the measured tripling constant
    over the guard cubes at depths 2..m whose triples sit inside Q.  Passing
    compute_bound=False skips the guard sweep and returns bound = inf, for
    callers carrying an externally measured tripling constant.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if Q.level + m > mu.L:
        raise ValueError("shell cells are finer than the lattice")
    q = cube_mass(mu, Q)
    if q == 0:
        raise ValueError("cube has zero mass")
    lo, hi = _cube_cell_range(mu, Q)
    u = 2 ** (mu.L - Q.level - m)
    inner_lo = [l + u for l in lo]
    inner_hi = [h - u for h in hi]
    shell = q - box_mass(mu, inner_lo, inner_hi)
    ratio = shell / q
    if not compute_bound:
        return ratio, float("inf")

    D = None
    base = 2 ** (mu.L - Q.level)
    for k in range(2, m + 1):
        uk = 2 ** (mu.L - Q.level - k)
        top = 2**k
        for off in _guard_offsets(Q.n, top):
            g_lo = [lo[i] + off[i] * uk for i in range(Q.n)]
            g_hi = [g + uk for g in g_lo]
            g_mass = box_mass(mu, g_lo, g_hi)
            t_mass = box_mass(mu, [g - uk for g in g_lo], [g + uk for g in g_hi])
            if g_mass == 0:
                if t_mass > 0:
                    D = float("inf")
                continue
            r = t_mass / g_mass
            if D is None or r > D:
                D = r
    if D is None:
        D = Fraction(1) if mu.exact else 1.0
    bound = D / (m - 1) if D != float("inf") else float("inf")
    return ratio, bound


def _guard_offsets(n: int, top: int):
    """Offsets of depth-k children I with 3I inside Q touching the inner rim."""
    from itertools import product

    for off in product(range(1, top - 1), repeat=n):
        if any(o == 1 or o == top - 2 for o in off):
            yield off


def coarsen(mu: DiscreteMeasure, L_new: int) -> DiscreteMeasure:
    """Exact aggregation onto a coarser lattice (refinement-study companion)."""
    if L_new > mu.L:
        raise ValueError("can only coarsen to a smaller depth")
    f = 2 ** (mu.L - L_new)
    n = mu.n
    shape = (2**L_new, f) * n
    axes = tuple(2 * i + 1 for i in range(n))
    floats = mu.floats.reshape(shape).sum(axis=axes)
    nums = None
    if mu.exact:
        nums = mu.numerators.reshape(shape)
        for ax in sorted(axes, reverse=True):
            nums = nums.sum(axis=ax)
    out = DiscreteMeasure(
        n=n, L=L_new, floats=floats, numerators=nums, denominator=mu.denominator,
        root=mu.root, name=mu.name + f"@L{L_new}",
    )
    return out


# -- generators -----------------------------------------------------------


def uniform_measure(n: int, L: int, root: RootCube | None = None) -> DiscreteMeasure:
    """Lebesgue surrogate: equal mass 2**(-nL) per cell, total 1."""
    shape = (2**L,) * n
    den = 2 ** (n * L)
    nums = np.ones(shape, dtype=object)
    floats = np.full(shape, 1.0 / den)
    return DiscreteMeasure(
        n=n, L=L, floats=floats, numerators=nums, denominator=den, root=root, name="uniform"
    )


def generate_doubling_measure(
    n: int, L: int, a: float, seed: int, root: RootCube | None = None
) -> DiscreteMeasure:
    """Dyadic multiplicative cascade with perturbation amplitude a in [0, 1).

    Each refinement splits a cell's mass over its 2**n children with factors
    drawn from [1-a, 1+a] that sum to 2**n exactly: children are paired and a
    pair receives (1+x, 1-x) with x uniform on a dyadic grid in [-a, a].  All
    masses stay exact dyadic rationals and the total is exactly 1.
    """
    if not (0 <= a < 1):
        raise ValueError("a must lie in [0, 1)")
    af = Fraction(a)
    rng = np.random.default_rng(seed)
    G = _CASCADE_GRID
    pair_den = af.denominator * G
    nums = np.array(1, dtype=object).reshape((1,) * n)
    den = 1
    for _ in range(L):
        side = nums.shape[0]
        parents = nums.reshape(-1)
        n_pairs = parents.size * 2 ** (n - 1)
        draws = rng.integers(0, 2 * G + 1, size=n_pairs).astype(object)
        # factor numerators over pair_den: 1 +- x with x = a (k - G)/G;
        # Python ints throughout, the numerators outgrow int64 quickly
        x_nums = af.numerator * (draws - G)
        child_factors = np.empty(parents.size * 2**n, dtype=object)
        child_factors[0::2] = pair_den + x_nums
        child_factors[1::2] = pair_den - x_nums
        children_flat = np.repeat(parents, 2**n) * child_factors
        # interleave parent axes with offset axes to land on the refined grid
        children = children_flat.reshape((side,) * n + (2,) * n)
        order = []
        for axis in range(n):
            order.extend([axis, n + axis])
        nums = children.transpose(order).reshape((side * 2,) * n)
        den = den * 2**n * pair_den
    floats = (nums / den).astype(np.float64)
    return DiscreteMeasure(
        n=n,
        L=L,
        floats=floats,
        numerators=nums,
        denominator=den,
        root=root,
        name=f"cascade(a={a},seed={seed})",
    )


def power_weight_measure(
    exponent_a: float, L: int, n: int = 1, root: RootCube | None = None
) -> DiscreteMeasure:
    """|x|**a on [0,1), cell masses by the closed-form antiderivative, total 1."""
    if n != 1:
        raise ValueError("power weights are one-dimensional")
    if exponent_a <= -1:
        raise ValueError("exponent must exceed -1 for local integrability")
    N = 2**L
    i = np.arange(N + 1, dtype=np.float64)
    anti = (i / N) ** (exponent_a + 1.0)
    masses = np.diff(anti)
    masses = masses / masses.sum()
    return DiscreteMeasure(
        n=1, L=L, floats=masses, root=root, name=f"power(a={exponent_a})"
    )


def mixture_measure(
    n: int,
    L: int,
    atom_cell: Sequence[int],
    atom_weight: float = 0.5,
    background_halves: int = 1,
    root: RootCube | None = None,
) -> DiscreteMeasure:
    """Atom plus uniform background restricted to the lower half of axis 0.

    Leaves entire cubes with zero mass (away from the atom and the background
    half), which stresses degenerate-denominator handling downstream.
    """
    wf = Fraction(atom_weight)
    if not (0 <= wf <= 1):
        raise ValueError("atom weight must lie in [0, 1]")
    shape = (2**L,) * n
    half = 2 ** (L - background_halves)
    n_bg = half * (2**L) ** (n - 1)
    den = (1 - wf).denominator * n_bg * wf.denominator
    nums = np.zeros(shape, dtype=object)
    bg_num = (1 - wf) * den / n_bg
    atom_num = wf * den
    assert bg_num.denominator == 1 and atom_num.denominator == 1
    sl = (slice(0, half),) + (slice(None),) * (n - 1)
    nums[sl] = int(bg_num)
    atom_idx = tuple(int(v) for v in atom_cell)
    nums[atom_idx] = int(nums[atom_idx]) + int(atom_num)
    floats = (nums / den).astype(np.float64)
    return DiscreteMeasure(
        n=n, L=L, floats=floats, numerators=nums, denominator=den, root=root, name="mixture"
    )


# -- file format ----------------------------------------------------------


def write_measure(mu: DiscreteMeasure, path) -> None:
    """Plain text: header `n=<dim>,L=<depth>`, then `i1,...,in,mass` per
    nonzero cell.  Masses are written with repr so floats round-trip
    bit-exactly."""
    with open(path, "w") as fh:
        fh.write(f"n={mu.n},L={mu.L}\n")
        idx = np.argwhere(mu.floats > 0)
        for cell in idx:
            mass = float(mu.floats[tuple(cell)])
            coords = ",".join(str(int(v)) for v in cell)
            fh.write(f"{coords},{mass!r}\n")


def read_measure(path, name: str | None = None) -> DiscreteMeasure:
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            parts = dict(kv.split("=") for kv in header.split(","))
            n, L = int(parts["n"]), int(parts["L"])
        except Exception as exc:
            raise ValueError(f"bad measure header: {header!r}") from exc
        floats = np.zeros((2**L,) * n)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            toks = line.split(",")
            if len(toks) != n + 1:
                raise ValueError(f"bad measure line: {line!r}")
            cell = tuple(int(t) for t in toks[:n])
            floats[cell] = float(Fraction(toks[n])) if "/" in toks[n] else float(toks[n])
    return DiscreteMeasure(n=n, L=L, floats=floats, name=name or "file")
