"""Fractional singular-integral kernels, truncations, and verification.

Built-in convolution kernels (Hilbert, vector Riesz, fractional integral)
are homogeneous of degree alpha - n; smoothness and ellipticity are probed
numerically under the scaling |grad^j K| <= C |x-y|**(alpha - j - n).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "KernelSpec",
    "TruncationWindow",
    "hilbert_kernel",
    "riesz_kernel",
    "fractional_kernel",
    "make_kernel",
    "adjoint_kernel",
    "eval_kernel",
    "eval_truncated",
    "window_values",
    "verify_smoothness",
    "ellipticity_margin",
    "sample_directions",
]

KernelFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


GridFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelSpec:
    """A (possibly vector-valued) kernel with declared smoothness data.

    ``grid_eval(diff, dist)`` evaluates all components at once from the
    precomputed difference and distance arrays, so dense assemblies never
    recompute geometry per component.
    """

    name: str
    n: int
    alpha: float
    components: tuple[KernelFn, ...]
    kappa1: int = 1
    kappa2: int = 1
    delta_smooth: float = 1.0
    C_CZ: float = 1.0
    grid_form: GridFn | None = None

    def __post_init__(self):
        if not (0 <= self.alpha < self.n):
            raise ValueError("alpha must lie in [0, n)")
        if not self.components:
            raise ValueError("kernel needs at least one component")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def grid_eval(self, diff: np.ndarray, dist: np.ndarray) -> np.ndarray | None:
        """All components stacked along axis 0, from x - y and |x - y|.

        Returns None for user kernels registered without a grid form; dense
        assembly then falls back to pointwise component evaluation.
        """
        if self.grid_form is None:
            return None
        return self.grid_form(diff, dist)


@dataclass(frozen=True)
class TruncationWindow:
    """Radial window: 0 below delta (with optional ramp), 1 on [delta, R]."""

    delta: float
    R: float
    shape: str = "sharp"
    ramp: float = 0.5

    def __post_init__(self):
        if not (0 < self.delta < self.R):
            raise ValueError("need 0 < delta < R")
        if self.shape not in ("sharp", "smooth"):
            raise ValueError("shape must be 'sharp' or 'smooth'")
        if self.shape == "smooth" and not (0 < self.ramp < 1):
            raise ValueError("ramp must lie in (0, 1)")


def window_values(W: TruncationWindow, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if W.shape == "sharp":
        return ((s >= W.delta) & (s <= W.R)).astype(float)
    lo0, lo1 = W.delta * (1 - W.ramp), W.delta
    hi0, hi1 = W.R, W.R * (1 + W.ramp)
    up = np.clip((s - lo0) / (lo1 - lo0), 0.0, 1.0)
    down = np.clip((hi1 - s) / (hi1 - hi0), 0.0, 1.0)
    smoothstep = lambda t: t * t * (3.0 - 2.0 * t)
    return smoothstep(up) * smoothstep(down)


def _as_points(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    return a


def _dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x - y
    if d.shape[-1] == 1:
        return np.abs(d[..., 0])
    return np.sqrt(np.sum(d * d, axis=-1))


def hilbert_kernel() -> KernelSpec:
    def k(x, y):
        return 1.0 / (x[..., 0] - y[..., 0])

    def grid(diff, dist):
        return (1.0 / diff[..., 0])[None]

    return KernelSpec(
        name="hilbert", n=1, alpha=0.0, components=(k,), kappa1=2, kappa2=2, C_CZ=2.0, grid_form=grid
    )


def riesz_kernel(n: int, alpha: float = 0.0) -> KernelSpec:
    comps = []
    for j in range(n):
        def kj(x, y, _j=j):
            d = x - y
            r = _dist(x, y)
            return d[..., _j] / r ** (n - alpha + 1)

        comps.append(kj)

    def grid(diff, dist):
        scale = dist ** -(n - alpha + 1)
        return np.stack([diff[..., j] * scale for j in range(n)])

    c = 3.0 * (n + 2 - alpha) ** 2
    return KernelSpec(
        name="riesz", n=n, alpha=alpha, components=tuple(comps), kappa1=2, kappa2=2, C_CZ=c,
        grid_form=grid,
    )


def fractional_kernel(n: int, alpha: float) -> KernelSpec:
    def k(x, y):
        return _dist(x, y) ** (alpha - n)

    def grid(diff, dist):
        return (dist ** (alpha - n))[None]

    c = max(1.0, (n - alpha) * (n - alpha + 1))
    return KernelSpec(
        name="frac-int", n=n, alpha=alpha, components=(k,), kappa1=2, kappa2=2, C_CZ=c, grid_form=grid
    )


_REGISTRY = {
    "hilbert": lambda n, alpha: hilbert_kernel(),
    "riesz": riesz_kernel,
    "frac-int": fractional_kernel,
}


def make_kernel(name: str, n: int, alpha: float = 0.0) -> KernelSpec:
    if name not in _REGISTRY:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_REGISTRY)}")
    if name == "hilbert" and n != 1:
        raise ValueError("the Hilbert kernel is one-dimensional")
    return _REGISTRY[name](n, alpha)


def adjoint_kernel(K: KernelSpec) -> KernelSpec:
    comps = tuple((lambda x, y, _f=f: _f(y, x)) for f in K.components)
    grid = None
    if K.grid_form is not None:
        grid = lambda diff, dist, _g=K.grid_form: _g(-diff, dist)
    return replace(K, name=K.name + "*", components=comps, kappa1=K.kappa2, kappa2=K.kappa1, grid_form=grid)


def eval_kernel(K: KernelSpec, j: int, x, y) -> np.ndarray:
    """Component j at (x, y); x = y is rejected as an undefined point."""
    xp, yp = _as_points(x), _as_points(y)
    if np.any(_dist(xp, yp) == 0):
        raise ValueError("kernel undefined on the diagonal x = y")
    return K.components[j](xp, yp)


def eval_truncated(K: KernelSpec, W: TruncationWindow, j: int, x, y) -> np.ndarray:
    """Windowed kernel; returns 0 at x = y (the window vanishes there)."""
    xp, yp = _as_points(x), _as_points(y)
    s = _dist(xp, yp)
    eta = window_values(W, s)
    out = np.zeros_like(s, dtype=float)
    mask = (eta != 0.0) & (s > 0)
    if np.any(mask):
        out[mask] = eta[mask] * K.components[j](xp[mask], yp[mask])
    return out


# -- smoothness -----------------------------------------------------------


def _deriv_norm(f: KernelFn, x: np.ndarray, y: np.ndarray, order: int, h: float) -> float:
    """Norm of the order-th x-derivative tensor by central differences."""
    n = x.shape[-1]
    if order == 0:
        return abs(float(f(x, y)))
    if order == 1:
        g = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            g[i] = (float(f(x + e, y)) - float(f(x - e, y))) / (2 * h)
        return float(np.linalg.norm(g))
    if order == 2:
        H = np.zeros((n, n))
        f0 = float(f(x, y))
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h
            H[i, i] = (float(f(x + ei, y)) - 2 * f0 + float(f(x - ei, y))) / h**2
            for k in range(i + 1, n):
                ek = np.zeros(n)
                ek[k] = h
                H[i, k] = H[k, i] = (
                    float(f(x + ei + ek, y))
                    - float(f(x + ei - ek, y))
                    - float(f(x - ei + ek, y))
                    + float(f(x - ei - ek, y))
                ) / (4 * h**2)
        return float(np.linalg.norm(H))
    raise ValueError("derivative order must be <= 2")


def _richardson(f: KernelFn, x, y, order: int, h: float) -> float:
    v1 = _deriv_norm(f, x, y, order, h)
    v2 = _deriv_norm(f, x, y, order, h / 2)
    if order == 0:
        return v1
    return (4 * v2 - v1) / 3  # central differences are O(h^2)


def verify_smoothness(
    K: KernelSpec,
    j_max: int,
    sample_pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    holder_step: float = 0.25,
) -> dict:
    """Measured size/smoothness constants under the |x-y|**(alpha-j-n) scaling.

    For orders j <= j_max, returns the sup over samples and components of
    |grad_1^j K| * |x-y|**(n+j-alpha), plus the Holder quotient of order
    kappa1 probed at x' = x + holder_step*|x-y| along coordinate directions.
    Degenerate samples (x = y) are skipped and counted.
    """
    if j_max > 2:
        raise ValueError("derivative order must be <= 2")
    sup = {j: 0.0 for j in range(j_max + 1)}
    holder = 0.0
    skipped = 0
    for x, y in sample_pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = float(_dist(x[None, :], y[None, :])[0])
        if r == 0:
            skipped += 1
            continue
        h = r * 1e-4
        for f in K.components:
            fx = lambda xx, yy: f(xx[None, :] if xx.ndim == 1 else xx, yy[None, :] if yy.ndim == 1 else yy)[0]
            for j in range(j_max + 1):
                v = _richardson(fx, x, y, j, h)
                sup[j] = max(sup[j], abs(v) * r ** (K.n + j - K.alpha))
            kap = min(K.kappa1, 2)
            base = _richardson(fx, x, y, kap, h)
            for i in range(K.n):
                e = np.zeros(K.n)
                e[i] = holder_step * r
                moved = _richardson(fx, x + e, y, kap, h)
                quot = abs(moved - base) / holder_step**K.delta_smooth
                holder = max(holder, quot * r ** (K.n + kap - K.alpha))
    return {"orders": sup, "holder": holder, "skipped": skipped, "kappa": min(K.kappa1, 2)}


# -- ellipticity ----------------------------------------------------------


def sample_directions(n: int, per_nant: int = 8, seed: int = 0) -> dict[tuple[int, ...], np.ndarray]:
    """Unit directions grouped by n-ant (sign pattern), deterministic."""
    rng = np.random.default_rng(seed)
    out = {}
    for m in product((1, -1), repeat=n):
        raw = np.abs(rng.standard_normal((per_nant, n))) + 1e-3
        raw = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        out[m] = raw * np.array(m, dtype=float)
    return out


def _lambda_candidates(J: int) -> list[np.ndarray]:
    cands = []
    for signs in product((-1.0, 0.0, 1.0), repeat=J):
        v = np.array(signs)
        norm = np.abs(v).max()
        if norm > 0:
            cands.append(v / norm)
    return cands


def ellipticity_margin(
    K: KernelSpec,
    direction_samples: dict[tuple[int, ...], np.ndarray] | None = None,
    coefficient_search: bool = True,
    t_values: Sequence[float] = (0.25, 1.0, 4.0),
    x0: np.ndarray | None = None,
) -> dict:
    """Lower ellipticity margins over sampled directions, per n-ant.

    plain: min over u of max_j |K_j(x, x+tu)| t**(n-alpha);
    strong: per n-ant, best coefficient combination on a sign grid of the
    min over that n-ant's directions of |sum lambda_j K_j| t**(n-alpha).
    Scale invariance across t_values is verified before fixing t = 1.
    """
    if direction_samples is None:
        direction_samples = sample_directions(K.n)
    if not direction_samples or any(v.size == 0 for v in direction_samples.values()):
        raise ValueError("empty direction set")
    x = np.zeros(K.n) if x0 is None else np.asarray(x0, dtype=float)

    def comp_values(t: float) -> dict[tuple[int, ...], np.ndarray]:
        vals = {}
        for m, dirs in direction_samples.items():
            pts = x[None, :] + t * dirs
            mat = np.stack([f(pts, np.broadcast_to(x, pts.shape)) for f in K.components], axis=0)
            vals[m] = mat * t ** (K.n - K.alpha)
        return vals

    ref = comp_values(1.0)
    scale_dev = 0.0
    for t in t_values:
        vt = comp_values(float(t))
        for m in ref:
            denom = np.maximum(np.abs(ref[m]), 1e-300)
            scale_dev = max(scale_dev, float(np.max(np.abs(vt[m] - ref[m]) / denom)))

    plain = min(float(np.min(np.max(np.abs(v), axis=0))) for v in ref.values())
    strong = {}
    if coefficient_search:
        cands = _lambda_candidates(K.n_components)
        for m, mat in ref.items():
            best = 0.0
            best_lam = None
            for lam in cands:
                margin = float(np.min(np.abs(lam @ mat.reshape(K.n_components, -1))))
                if margin > best:
                    best, best_lam = margin, lam
            strong[m] = {"margin": best, "lambda": None if best_lam is None else best_lam.tolist()}
    return {"plain": plain, "strong": strong, "scale_deviation": scale_dev}
