"""Discrete-time reduction of the zero-crossing reset loop.

Between consecutive jumps the loop flows linearly, so the whole hybrid
evolution is captured by two maps acting on the reduced (non-reset)
coordinates z:

* the reset-interval map  I(z) = min { tau >= tau_min : C e^{A tau} J z >= 0 },
* the after-jump map      g(z) = -J^T e^{A I(z)} J z,

together with the direction map Pi(s) = g(s)/||g(s)|| on the unit
sphere.  Both are positively homogeneous, which is why the direction
map on the sphere carries all the asymptotic information.

Evaluation strategy: a PoincareMap instance caches e^{A tau} J on a
uniform grid over the search window once, so a batch of directions is
screened with a single matrix product; each bracketed crossing is then
refined by bisection whose halved-step exponentials are shared across
the batch.  The scalar reference implementation of the same search is
numerics.first_crossing, and the two routes are held together by a
dedicated consistency test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateImageError, DimensionError, NoCrossingError
from .model import ClosedLoopSystem
from .numerics import as_vector, eigenvalues, is_hurwitz, expm

CROSSING_TOL = 1e-9     # nonnegativity slack at the window start
TAU_PRECISION = 1e-9    # absolute bisection precision on crossing times
DEGENERATE_REL = 1e-12  # ||g|| below this times ||z|| counts as a zero image


def default_search_cap(A: np.ndarray, tau_min: float) -> float:
    """Search horizon for the crossing: ten periods of the dominant
    oscillatory mode past the dwell time, or 100x the dwell time for
    real spectra."""
    lam = eigenvalues(A)
    cplx = lam[np.abs(lam.imag) > 1e-12]
    if cplx.size:
        dom = cplx[int(np.argmax(cplx.real))]
        return 10.0 * (tau_min + 2.0 * math.pi / abs(dom.imag))
    return 100.0 * tau_min


class PoincareMap:
    """Reset-interval and after-jump maps bound to one system and dwell time.

    Instances are immutable in their defining data; internal caches are
    filled lazily and are safe to share across read-only parameter sweeps.
    """

    def __init__(
        self,
        sys: ClosedLoopSystem,
        tau_min: float,
        tau_cap: Optional[float] = None,
        grid_n: int = 1000,
    ):
        if not tau_min > 0:
            raise DimensionError(f"tau_min must be > 0, got {tau_min}")
        self.sys = sys
        self.tau_min = float(tau_min)
        self.tau_cap = float(tau_cap) if tau_cap is not None else default_search_cap(sys.A, self.tau_min)
        if not self.tau_cap > self.tau_min:
            raise DimensionError(f"tau_cap {self.tau_cap} must exceed tau_min {self.tau_min}")
        if grid_n < 2:
            raise DimensionError("grid_n must be at least 2")
        self.grid_n = int(grid_n)
        self._PJ: Optional[np.ndarray] = None   # (grid_n+1, n, n_reduced): e^{A tau_i} J
        self._R: Optional[np.ndarray] = None    # (grid_n+1, n_reduced): rows C e^{A tau_i} J
        self._delta = (self.tau_cap - self.tau_min) / self.grid_n
        self._halves = {}
        self._hurwitz: Optional[bool] = None

    # -- cached machinery ---------------------------------------------------

    @property
    def n_reduced(self) -> int:
        return self.sys.n_reduced

    @property
    def hurwitz(self) -> bool:
        if self._hurwitz is None:
            self._hurwitz = is_hurwitz(self.sys.A)
        return self._hurwitz

    def _ensure_grid(self) -> None:
        if self._R is not None:
            return
        A, J, c = self.sys.A, self.sys.J, self.sys.C[0]
        m = self.grid_n
        E = expm(A, self._delta)
        PJ = np.empty((m + 1, self.sys.n, J.shape[1]))
        PJ[0] = expm(A, self.tau_min) @ J
        for i in range(1, m + 1):
            PJ[i] = E @ PJ[i - 1]
        self._PJ = PJ
        self._R = PJ.transpose(0, 2, 1) @ c

    def _half_step(self, level: int) -> np.ndarray:
        got = self._halves.get(level)
        if got is None:
            got = expm(self.sys.A, self._delta / (2.0 ** level))
            self._halves[level] = got
        return got

    # -- batched core --------------------------------------------------------

    def crossings(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Crossing times and states for a batch of reduced directions.

        Z has the directions as columns, shape (n_reduced, N).  Returns
        (taus, W) with taus[j] the first time in [tau_min, tau_cap] where
        C e^{A tau} J Z[:,j] becomes nonnegative and W[:,j] the full state
        e^{A taus[j]} J Z[:,j] there.  Raises NoCrossingError if any column
        never crosses inside the window (reporting whether A is Hurwitz,
        the one case where that is a legitimate outcome).
        """
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != self.n_reduced:
            raise DimensionError(f"expected shape ({self.n_reduced}, N), got {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise DimensionError("directions must be finite")
        if np.any(np.linalg.norm(Z, axis=0) == 0.0):
            raise DimensionError("directions must be nonzero")
        self._ensure_grid()

        H = self._R @ Z                       # (grid_n+1, N) switching values
        N = Z.shape[1]
        immediate = H[0] >= -CROSSING_TOL
        nonneg = H >= 0.0
        crossed = nonneg.any(axis=0)
        missing = ~(immediate | crossed)
        if np.any(missing):
            raise NoCrossingError(
                f"{int(missing.sum())} of {N} directions never reach the jump "
                f"condition in [{self.tau_min:g}, {self.tau_cap:g}]"
                + ("; A is Hurwitz, so flowing forever is a legitimate outcome"
                   if self.hurwitz
                   else "; A is not Hurwitz, so the search cap is too small"),
                hurwitz=self.hurwitz,
            )

        taus = np.full(N, self.tau_min)
        W = np.empty((self.sys.n, N))
        if np.any(immediate):
            W[:, immediate] = self._PJ[0] @ Z[:, immediate]

        refine = ~immediate
        if np.any(refine):
            first = np.argmax(nonneg[:, refine], axis=0)  # >= 1: H[0] < -tol here
            Zr = Z[:, refine]
            W_lo = np.einsum("jnk,kj->nj", self._PJ[first - 1], Zr)
            W_hi = np.einsum("jnk,kj->nj", self._PJ[first], Zr)
            t_lo = self.tau_min + (first - 1) * self._delta
            c = self.sys.C[0]
            levels = max(1, int(math.ceil(math.log2(max(self._delta / TAU_PRECISION, 2.0)))))
            for k in range(1, levels + 1):
                half = self._delta / (2.0 ** k)
                W_mid = self._half_step(k) @ W_lo
                up = (c @ W_mid) >= 0.0
                W_hi[:, up] = W_mid[:, up]
                W_lo[:, ~up] = W_mid[:, ~up]
                t_lo = t_lo + np.where(up, 0.0, half)
            taus[refine] = t_lo + self._delta / (2.0 ** levels)
            W[:, refine] = W_hi
        return taus, W

    def map_many(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Batched (I(z), g(z)): returns (taus (N,), G (n_reduced, N))."""
        taus, W = self.crossings(Z)
        G = -(self.sys.J.T @ W)
        return taus, G


# ---------------------------------------------------------------------------
# scalar operations


def interval_map(pm: PoincareMap, z: Sequence[float]) -> float:
    """First time >= tau_min at which the switching value of J z becomes
    nonnegative; tau_min itself when already nonnegative there."""
    z = as_vector(z, size=pm.n_reduced, name="z")
    taus, _ = pm.crossings(z.reshape(-1, 1))
    return float(taus[0])


def interval_and_image(pm: PoincareMap, z: Sequence[float]) -> Tuple[float, np.ndarray]:
    """(I(z), g(z)) in a single crossing search."""
    z = as_vector(z, size=pm.n_reduced, name="z")
    taus, G = pm.map_many(z.reshape(-1, 1))
    return float(taus[0]), G[:, 0]


def g_map(pm: PoincareMap, z: Sequence[float]) -> np.ndarray:
    """After-jump reduced state -J^T e^{A I(z)} J z."""
    return interval_and_image(pm, z)[1]


def angle_map(pm: PoincareMap, s: Sequence[float]) -> np.ndarray:
    """Direction map g(s)/||g(s)|| on the unit sphere.

    A zero image (the state landing entirely in the reset subspace) has
    no direction and raises DegenerateImageError.
    """
    s = as_vector(s, size=pm.n_reduced, name="s")
    norm_in = float(np.linalg.norm(s))
    if norm_in == 0.0:
        raise DimensionError("s must be nonzero")
    g = g_map(pm, s)
    norm_g = float(np.linalg.norm(g))
    if norm_g <= DEGENERATE_REL * norm_in:
        raise DegenerateImageError(
            "after-jump image is numerically zero; the direction map is undefined there"
        )
    return g / norm_g


# ---------------------------------------------------------------------------
# 1-D parameterizations


@dataclass(frozen=True)
class CircleParam:
    """Angle u in (-pi, pi] <-> unit vector (cos u, sin u) in the plane."""

    dim: int = 2
    periodic: bool = True

    def __post_init__(self):
        if self.dim != 2:
            raise DimensionError("the circle parameterization lives in 2-D reduced space")

    @property
    def domain(self) -> Tuple[float, float]:
        return (-math.pi, math.pi)

    def to_vector(self, u: float) -> np.ndarray:
        return np.array([math.cos(u), math.sin(u)])

    def to_vectors(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        return np.vstack([np.cos(us), np.sin(us)])

    def from_vector(self, s: np.ndarray) -> float:
        s = as_vector(s, size=2, name="s")
        return math.atan2(s[1], s[0])

    def from_vectors(self, S: np.ndarray) -> np.ndarray:
        return np.arctan2(S[1], S[0])

    def wrap(self, du):
        """Difference wrapped into (-pi, pi]."""
        return -np.remainder(-np.asarray(du) + math.pi, 2.0 * math.pi) + math.pi

    def distance(self, u1, u2):
        return np.abs(self.wrap(np.asarray(u1) - np.asarray(u2)))

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(-math.pi, math.pi, n)

    def clip(self, u: float) -> float:
        return float(self.wrap(u))


@dataclass(frozen=True)
class SegmentParam:
    """Parameter u in [a, b] <-> unit vector (u, 1, 0, ...)/sqrt(1+u^2).

    Used for invariant segments of the direction map in reduced spaces of
    dimension >= 3; off-segment coordinates of images beyond `off_tol`
    raise DegenerateImageError (the invariant set was left).
    """

    a: float
    b: float
    dim: int = 3
    periodic: bool = field(default=False, init=False)
    off_tol: float = 1e-6

    def __post_init__(self):
        if not self.b > self.a:
            raise DimensionError(f"segment needs b > a, got [{self.a}, {self.b}]")
        if self.dim < 2:
            raise DimensionError("segment parameterization needs dim >= 2")

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.a, self.b)

    def to_vector(self, u: float) -> np.ndarray:
        v = np.zeros(self.dim)
        v[0], v[1] = u, 1.0
        return v / math.sqrt(1.0 + u * u)

    def to_vectors(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        V = np.zeros((self.dim, us.size))
        V[0], V[1] = us, 1.0
        return V / np.sqrt(1.0 + us * us)

    def from_vector(self, s: np.ndarray) -> float:
        s = as_vector(s, size=self.dim, name="s")
        off = float(np.max(np.abs(s[2:]))) if self.dim > 2 else 0.0
        if off > self.off_tol:
            raise DegenerateImageError(
                f"image leaves the invariant segment: off-segment coordinate {off:.3e}"
            )
        if s[1] <= 0.0:
            raise DegenerateImageError(
                "image leaves the invariant segment: second coordinate not positive"
            )
        u = s[0] / s[1]
        slack = self.off_tol * (1.0 + abs(self.a) + abs(self.b))
        if u < self.a - slack or u > self.b + slack:
            raise DegenerateImageError(
                f"image parameter {u:.6g} outside [{self.a}, {self.b}]"
            )
        return min(max(u, self.a), self.b)

    def from_vectors(self, S: np.ndarray) -> np.ndarray:
        return np.array([self.from_vector(S[:, j]) for j in range(S.shape[1])])

    def wrap(self, du):
        return np.asarray(du)

    def distance(self, u1, u2):
        return np.abs(np.asarray(u1) - np.asarray(u2))

    def grid(self, n: int) -> np.ndarray:
        return np.linspace(self.a, self.b, n)

    def clip(self, u: float) -> float:
        return min(max(float(u), self.a), self.b)


Parameterization = Union[CircleParam, SegmentParam]


# ---------------------------------------------------------------------------
# 1-D map, orbits, graphs


def angle_map_1d(pm: PoincareMap, param: Parameterization, u: float) -> float:
    """Parameter of the direction-map image of param(u)."""
    if param.dim != pm.n_reduced:
        raise DimensionError(
            f"parameterization dim {param.dim} != reduced dim {pm.n_reduced}"
        )
    return param.from_vector(angle_map(pm, param.to_vector(float(u))))


def map_1d_many(
    pm: PoincareMap, param: Parameterization, us: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Batched 1-D map: returns (images, intervals) aligned with us."""
    if param.dim != pm.n_reduced:
        raise DimensionError(
            f"parameterization dim {param.dim} != reduced dim {pm.n_reduced}"
        )
    us = np.asarray(us, dtype=float)
    taus, G = pm.map_many(param.to_vectors(us))
    norms = np.linalg.norm(G, axis=0)
    if np.any(norms <= DEGENERATE_REL):
        raise DegenerateImageError("after-jump image is numerically zero on the batch")
    return param.from_vectors(G / norms), taus


def orbit(
    pm: PoincareMap, param: Parameterization, u0: float, k: int
) -> List[float]:
    """u0 and its first k images under the 1-D direction map."""
    if k < 0:
        raise DimensionError("k must be >= 0")
    out = [float(u0)]
    for _ in range(k):
        out.append(angle_map_1d(pm, param, out[-1]))
    return out


def map_graph(
    pm: PoincareMap, param: Parameterization, grid_n: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u, image(u), interval(u)) sampled on a uniform parameter grid."""
    us = param.grid(int(grid_n))
    images, taus = map_1d_many(pm, param, us)
    return us, images, taus
