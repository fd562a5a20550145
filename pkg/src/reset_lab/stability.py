"""Stability analysis for the reduced reset dynamics.

Two independent routes produce verdicts:

* the eigenvalue route — find periodic points of the 1-D direction map,
  classify them by the map derivative, attach the linear return matrix
  accumulated along the orbit, and combine Schur tests with an empirical
  basin-coverage fraction;
* the dwell-time Lyapunov route — search for a single matrix P certifying
  contraction of flow-then-jump over a grid of dwell times, a sufficient
  condition that never reports instability.

Verdicts record their evidence (orbits or certificate) and serialize to
plain JSON-compatible dictionaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_discrete_lyapunov

from .errors import AlignmentError, DegenerateImageError, DimensionError, NoCrossingError
from .model import ClosedLoopSystem
from .numerics import (
    as_matrix,
    as_vector,
    expm,
    max_symmetric_eigenvalue,
    min_symmetric_eigenvalue,
    spectral_radius,
    symmetrize,
)
from .poincare import Parameterization, PoincareMap, angle_map_1d, interval_map, map_1d_many

SINK = "Sink"
SOURCE = "Source"
NEUTRAL = "Neutral"

STABLE = "Stable"
UNSTABLE = "Unstable"
INCONCLUSIVE = "Inconclusive"

CLASSIFY_TOL = 1e-4      # band around |derivative| = 1 reported as Neutral
RESIDUAL_TOL = 1e-8      # max |Pi^k(p) - p| for an accepted periodic point
DEDUP_TOL = 1e-6         # parameter distance identifying two points
ROOT_WIDTH = 1e-12       # bisection bracket width for periodic points
ALIGN_COS = 0.99         # minimum |cosine| between p and its eigenvector
COVERAGE_TOL = 1e-4      # basin sample counts as converged within this


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic orbit of the 1-D direction map.

    points are the k parameter values in orbit order starting from the
    smallest; intervals are the reset times at each point; M_p is the
    linear return matrix accumulated along one loop from the first point;
    lambda_p is its dominant real eigenvalue and lambda_aligned the one
    whose eigenvector points along the orbit direction (they coincide for
    symmetric spectra but differ in general); derivative classifies the
    orbit in parameter space.
    """

    period: int
    points: Tuple[float, ...]
    intervals: Tuple[float, ...]
    M_p: np.ndarray
    lambda_p: float
    lambda_aligned: float
    classification: str
    derivative: float
    one_sided_derivative: bool = False

    @property
    def is_schur(self) -> bool:
        return spectral_radius(self.M_p) < 1.0

    def to_json_dict(self) -> dict:
        return {
            "period": self.period,
            "points": list(self.points),
            "intervals": list(self.intervals),
            "M_p": self.M_p.tolist(),
            "lambda_p": self.lambda_p,
            "lambda_aligned": self.lambda_aligned,
            "classification": self.classification,
            "derivative": self.derivative,
            "one_sided_derivative": self.one_sided_derivative,
        }


class ClassifyResult(NamedTuple):
    derivative: float
    classification: str
    one_sided: bool


def _iterate_1d(pm: PoincareMap, param: Parameterization, u: float, k: int) -> float:
    for _ in range(k):
        u = angle_map_1d(pm, param, u)
    return u


def classify(
    pm: PoincareMap, param: Parameterization, p: float, k: int, step: float = 1e-5
) -> ClassifyResult:
    """Derivative of the k-fold 1-D map at p by central finite difference.

    Falls back to a one-sided difference (flagged) when the other side is
    outside the parameter domain or sits across a discontinuity, picking
    the side whose half-step slope is self-consistent.
    """
    if k < 1:
        raise DimensionError("period k must be >= 1")
    if step <= 0:
        raise DimensionError("step must be > 0")
    lo, hi = param.domain
    f0 = _iterate_1d(pm, param, float(p), k)

    def slope(offset: float) -> float:
        f1 = _iterate_1d(pm, param, float(p) + offset, k)
        return float(param.wrap(f1 - f0)) / offset

    has_plus = param.periodic or (p + step) <= hi
    has_minus = param.periodic or (p - step) >= lo

    d_plus = d_plus_h = d_minus = d_minus_h = None
    if has_plus:
        d_plus, d_plus_h = slope(step), slope(step / 2.0)
    if has_minus:
        d_minus, d_minus_h = slope(-step), slope(-step / 2.0)

    if d_plus_h is not None and d_minus_h is not None:
        scale = max(1.0, abs(d_plus_h), abs(d_minus_h))
        if abs(d_plus_h - d_minus_h) <= 0.05 * scale:
            derivative = 0.5 * (d_plus_h + d_minus_h)  # central difference at step/2
            one_sided = False
        else:
            # a discontinuity sits on one side; keep the self-consistent side
            c_plus = abs(d_plus_h - d_plus)
            c_minus = abs(d_minus_h - d_minus)
            derivative = d_plus_h if c_plus <= c_minus else d_minus_h
            one_sided = True
    elif d_plus_h is not None:
        derivative, one_sided = d_plus_h, True
    elif d_minus_h is not None:
        derivative, one_sided = d_minus_h, True
    else:
        raise DimensionError("parameter domain too small for finite differencing")

    mag = abs(derivative)
    if mag < 1.0 - CLASSIFY_TOL:
        cls = SINK
    elif mag > 1.0 + CLASSIFY_TOL:
        cls = SOURCE
    else:
        cls = NEUTRAL
    return ClassifyResult(derivative=float(derivative), classification=cls, one_sided=one_sided)


# ---------------------------------------------------------------------------
# monodromy


def _orbit_eigenvalues(M: np.ndarray, p_vec: np.ndarray, k: int) -> Tuple[float, float]:
    """(dominant real eigenvalue, eigenvalue aligned with p_vec) of M.

    Raises AlignmentError when no essentially-real eigenvalue exists, when
    none of their eigenvectors aligns with p_vec beyond |cos| = 0.99, or
    when the aligned eigenvalue violates the sign-alternation identity
    lambda = (-1)^k ||M p||.
    """
    lam, V = np.linalg.eig(M)
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    real_idx = [i for i in range(lam.size) if abs(lam[i].imag) <= 1e-9 * (1.0 + scale)]
    if not real_idx:
        raise AlignmentError("return matrix has no essentially-real eigenvalue")

    p_unit = p_vec / np.linalg.norm(p_vec)
    best_i, best_cos = -1, -1.0
    for i in real_idx:
        v = np.real(V[:, i])
        nv = np.linalg.norm(v)
        if nv == 0.0:
            continue
        c = abs(float(v @ p_unit)) / nv
        if c > best_cos:
            best_i, best_cos = i, c
    if best_i < 0 or best_cos < ALIGN_COS:
        raise AlignmentError(
            f"no real eigenvalue aligns with the orbit direction (best |cos| = {best_cos:.4f})"
        )
    lam_aligned = float(lam[best_i].real)
    expected = ((-1.0) ** k) * float(np.linalg.norm(M @ p_unit))
    if abs(lam_aligned - expected) > 1e-4 * (1.0 + float(np.linalg.norm(M))):
        raise AlignmentError(
            f"aligned eigenvalue {lam_aligned:.6g} fails the sign-alternation "
            f"identity (expected {expected:.6g})"
        )
    lam_dom = max((float(lam[i].real) for i in real_idx), key=abs)
    return lam_dom, lam_aligned


def _points_to_vectors(
    points: Sequence, param: Optional[Parameterization]
) -> List[np.ndarray]:
    vecs = []
    for p in points:
        if np.isscalar(p):
            if param is None:
                raise DimensionError("scalar orbit points require a parameterization")
            v = param.to_vector(float(p))
        else:
            v = np.asarray(p, dtype=float).reshape(-1)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            raise DimensionError("orbit points must be nonzero")
        vecs.append(v / nv)
    return vecs


def monodromy_matrix(
    pm: PoincareMap, points: Sequence, param: Optional[Parameterization] = None
) -> Tuple[np.ndarray, float]:
    """Linear return matrix along one loop of the orbit, and its dominant
    real eigenvalue.

    points are the orbit in order (parameters if param is given, reduced
    unit vectors otherwise); the accumulated product applies the flow over
    the first point's reset interval first.
    """
    vecs = _points_to_vectors(points, param)
    if not vecs:
        raise DimensionError("orbit must contain at least one point")
    sys = pm.sys
    taus = [interval_map(pm, v) for v in vecs]
    X = expm(sys.A, taus[0]) @ sys.J
    for t in taus[1:]:
        X = expm(sys.A, t) @ (sys.A_R @ X)
    M = sys.J.T @ X
    lam_dom, _ = _orbit_eigenvalues(M, vecs[0], k=len(vecs))
    return M, lam_dom


# ---------------------------------------------------------------------------
# periodic-point search


def _discontinuity_mask(param: Parameterization, images: np.ndarray) -> np.ndarray:
    """True for grid gaps whose image jump dwarfs the local trend.

    Adjacent-sample jumps beyond 10x the local median (window of 25) mark
    discontinuities of the map; a floor of a few grid spacings stops a
    flat map from flagging noise.
    """
    jumps = np.asarray(param.distance(images[1:], images[:-1]), dtype=float)
    m = jumps.size
    half = 12
    local_med = np.empty(m)
    for i in range(m):
        a, b = max(0, i - half), min(m, i + half + 1)
        local_med[i] = np.median(jumps[a:b])
    lo, hi = param.domain
    floor = 5.0 * (hi - lo) / max(m, 1)
    return jumps > np.maximum(10.0 * local_med, floor)


def _bisect_parameter_root(f, a: float, b: float, fa: float, fb: float) -> float:
    """Bisection for a sign change of a continuous scalar function."""
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(200):
        if (b - a) <= ROOT_WIDTH:
            break
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def find_periodic_points(
    pm: PoincareMap, param: Parameterization, k_max: int, grid_n: int
) -> List[PeriodicOrbit]:
    """All periodic orbits of the 1-D direction map up to period k_max.

    For each k the displacement u -> Pi^k(u) - u (wrapped on the circle)
    is sampled on the parameter grid, sign changes are bracketed away from
    detected discontinuities and bisected; roots are kept when the
    periodicity residual is below 1e-8, reduced to their minimal period,
    and deduplicated against rotations of already-found orbits.  Output is
    sorted by (period, first point).
    """
    if k_max < 1:
        raise DimensionError("k_max must be >= 1")
    if grid_n < 100:
        raise DimensionError("grid_n must be >= 100")

    us = np.asarray(param.grid(int(grid_n)), dtype=float)
    iterates = [us]
    for _ in range(k_max):
        iterates.append(map_1d_many(pm, param, iterates[-1])[0])

    orbits: List[PeriodicOrbit] = []
    for k in range(1, k_max + 1):
        F = np.asarray(param.wrap(iterates[k] - us), dtype=float)
        disc = _discontinuity_mask(param, iterates[k])

        def f_k(u: float) -> float:
            return float(param.wrap(_iterate_1d(pm, param, u, k) - u))

        roots: List[float] = []
        for i in range(us.size - 1):
            if disc[i]:
                continue
            fa, fb = F[i], F[i + 1]
            if param.periodic and min(abs(fa), abs(fb)) > 0.5 * math.pi:
                continue  # wrap seam of the displacement, not a root
            if fa == 0.0:
                roots.append(float(us[i]))
            elif fa * fb < 0.0:
                roots.append(_bisect_parameter_root(f_k, float(us[i]), float(us[i + 1]), fa, fb))
        if F[-1] == 0.0:
            roots.append(float(us[-1]))

        for r in roots:
            if float(param.distance(_iterate_1d(pm, param, r, k), r)) > RESIDUAL_TOL:
                continue
            lower = any(
                k % m == 0
                and float(param.distance(_iterate_1d(pm, param, r, m), r)) <= DEDUP_TOL
                for m in range(1, k)
                if k % m == 0
            )
            if lower:
                continue
            pts = [r]
            for _ in range(k - 1):
                pts.append(angle_map_1d(pm, param, pts[-1]))
            shift = int(np.argmin(pts))
            pts = pts[shift:] + pts[:shift]  # canonical rotation: smallest first
            duplicate = any(
                ob.period == k
                and float(np.max(param.distance(np.asarray(ob.points), np.asarray(pts)))) <= DEDUP_TOL
                for ob in orbits
            )
            if duplicate:
                continue

            vecs = [param.to_vector(p) for p in pts]
            intervals = [interval_map(pm, v) for v in vecs]
            M, lam_dom = monodromy_matrix(pm, pts, param)
            _, lam_aligned = _orbit_eigenvalues(M, vecs[0], k=k)
            cres = classify(pm, param, pts[0], k)
            orbits.append(
                PeriodicOrbit(
                    period=k,
                    points=tuple(float(p) for p in pts),
                    intervals=tuple(float(t) for t in intervals),
                    M_p=M,
                    lambda_p=lam_dom,
                    lambda_aligned=lam_aligned,
                    classification=cres.classification,
                    derivative=cres.derivative,
                    one_sided_derivative=cres.one_sided,
                )
            )

    orbits.sort(key=lambda o: (o.period, o.points[0]))
    return orbits


def basin_coverage(
    pm: PoincareMap,
    param: Parameterization,
    orbits: Sequence[PeriodicOrbit],
    n_samples: int,
    n_iter: int,
    seed: Optional[int] = None,
) -> float:
    """Fraction of uniform random initial parameters whose n_iter-fold
    image lands within 1e-4 of some found orbit point."""
    if n_samples < 1 or n_iter < 0:
        raise DimensionError("n_samples must be >= 1 and n_iter >= 0")
    if not orbits:
        return 0.0
    rng = np.random.default_rng(seed)
    lo, hi = param.domain
    starts = rng.uniform(lo, hi, size=int(n_samples))
    targets = np.concatenate([np.asarray(o.points) for o in orbits])

    finals = np.empty(starts.size)
    reached = np.zeros(starts.size, dtype=bool)
    try:
        vals = starts.copy()
        for _ in range(int(n_iter)):
            vals = map_1d_many(pm, param, vals)[0]
        finals, reached = vals, np.ones(starts.size, dtype=bool)
    except (NoCrossingError, DegenerateImageError):
        # isolate the failing samples; the rest still count
        for j, u in enumerate(starts):
            try:
                v = float(u)
                for _ in range(int(n_iter)):
                    v = angle_map_1d(pm, param, v)
                finals[j], reached[j] = v, True
            except (NoCrossingError, DegenerateImageError):
                pass

    covered = sum(
        1
        for j in range(starts.size)
        if reached[j] and float(np.min(param.distance(finals[j], targets))) <= COVERAGE_TOL
    )
    return covered / starts.size


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class LyapunovCertificate:
    """A dwell-time Lyapunov certificate: P with its grid and margin.

    margin is re-verified independently of the search: the most negative
    value over the grid of -max_eig(flow-jump quadratic form + eps I).
    """

    P: np.ndarray
    eps: float
    tau_grid: Tuple[float, ...]
    margin: float
    iterations: int

    def __post_init__(self):
        if not np.allclose(self.P, self.P.T, atol=1e-12):
            raise DimensionError("certificate P must be symmetric within 1e-12")
        if min_symmetric_eigenvalue(self.P) <= 0:
            raise DimensionError("certificate P must be positive definite")
        if self.margin < 0:
            raise DimensionError("certificate margin must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "eps": self.eps,
            "tau_grid": list(self.tau_grid),
            "margin": self.margin,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class Infeasible:
    """Failed certificate search: one-sided, never a proof of instability."""

    best_margin: float
    eps: float
    tau_grid: Tuple[float, ...]
    iterations: int
    message: str

    def to_json_dict(self) -> dict:
        return {
            "best_margin": self.best_margin,
            "eps": self.eps,
            "tau_grid": list(self.tau_grid),
            "iterations": self.iterations,
            "message": self.message,
        }


@dataclass(frozen=True)
class StabilityVerdict:
    method: str                      # "EigenOrbit" | "DwellLMI"
    result: str                      # "Stable" | "Unstable" | "Inconclusive"
    orbits: Tuple[PeriodicOrbit, ...] = ()
    certificate: Optional[LyapunovCertificate] = None
    infeasibility: Optional[Infeasible] = None
    coverage_fraction: Optional[float] = None
    notes: str = ""

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "result": self.result,
            "orbits": [o.to_json_dict() for o in self.orbits],
            "certificate": self.certificate.to_json_dict() if self.certificate else None,
            "infeasibility": self.infeasibility.to_json_dict() if self.infeasibility else None,
            "coverage_fraction": self.coverage_fraction,
            "notes": self.notes,
        }


def eigen_stability_verdict(
    pm: PoincareMap,
    param: Parameterization,
    k_max: int,
    grid_n: int = 1200,
    n_samples: int = 200,
    n_iter: int = 60,
    seed: Optional[int] = None,
) -> StabilityVerdict:
    """Verdict from periodic orbits of the direction map.

    Stable requires every found orbit to have a Schur return matrix and
    the sampled basin coverage to be complete; Unstable requires an
    attracting (nonzero-basin) orbit whose return matrix is not Schur;
    anything else — including chaotic regimes where no sink attracts —
    is Inconclusive.
    """
    orbits = find_periodic_points(pm, param, k_max, grid_n)
    coverage = basin_coverage(pm, param, orbits, n_samples, n_iter, seed=seed) if orbits else 0.0

    unstable = any(o.classification == SINK and not o.is_schur for o in orbits)
    if unstable:
        result = UNSTABLE
    elif orbits and all(o.is_schur for o in orbits) and coverage == 1.0:
        result = STABLE
    else:
        result = INCONCLUSIVE
    return StabilityVerdict(
        method="EigenOrbit",
        result=result,
        orbits=tuple(orbits),
        coverage_fraction=coverage,
        notes=f"periodic search up to period {k_max} on a {grid_n}-point grid",
    )


# ---------------------------------------------------------------------------
# dwell-time Lyapunov route


def default_tau_grid(lo: float, hi: float, n: int = 60) -> np.ndarray:
    """Dwell-time grid: log-spaced when the interval spans more than one
    decade, linear otherwise."""
    if lo <= 0:
        raise DimensionError("grid endpoints must be positive")
    if hi < lo:
        raise DimensionError("grid upper end below lower end")
    if hi == lo or n == 1:
        return np.array([float(lo)])
    if hi / lo > 10.0:
        return np.geomspace(lo, hi, int(n))
    return np.linspace(lo, hi, int(n))


def verify_certificate_margin(
    A: np.ndarray, A_R: np.ndarray, P: np.ndarray, tau_grid: Sequence[float], eps: float
) -> float:
    """Independent certificate check: for each grid tau, the flow-jump
    quadratic form must decrease by eps; returns the worst margin
    (nonnegative means the certificate holds on the grid)."""
    n = A.shape[0]
    worst = math.inf
    for tau in tau_grid:
        Psi = A_R @ expm(A, float(tau))
        S = Psi.T @ P @ Psi - P + eps * np.eye(n)
        worst = min(worst, -max_symmetric_eigenvalue(S))
    return worst


def _svec_ops(n: int):
    """Orthonormal vectorization of symmetric matrices (off-diagonals
    scaled by sqrt(2) so Frobenius inner products are preserved)."""
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    r2 = math.sqrt(2.0)

    def sv(P: np.ndarray) -> np.ndarray:
        return np.array([P[i, j] * (1.0 if i == j else r2) for (i, j) in idx])

    def unsv(v: np.ndarray) -> np.ndarray:
        P = np.zeros((n, n))
        for k, (i, j) in enumerate(idx):
            if i == j:
                P[i, j] = v[k]
            else:
                P[i, j] = P[j, i] = v[k] / r2
        return P

    return idx, sv, unsv


def _clip_psd(S: np.ndarray, floor: float) -> Tuple[np.ndarray, float]:
    """Nearest matrix with eigenvalues >= floor, plus the clip amount."""
    S = 0.5 * (S + S.T)
    w, U = np.linalg.eigh(S)
    if w[0] >= floor:
        return S, 0.0
    return (U * np.maximum(w, floor)) @ U.T, float(floor - w[0])


def dwell_lmi_constant_P(
    A: np.ndarray,
    A_R: np.ndarray,
    tau_grid: Sequence[float],
    eps: float,
    max_iterations: int = 5000,
    anderson_depth: int = 5,
) -> Union[LyapunovCertificate, Infeasible]:
    """Search for one P > 0 making flow-then-jump contract by eps at every
    grid dwell time.

    The search alternates projections between the semidefinite cone
    (eigenvalue clipping per constraint block, with P floored at I for
    scale) and the affine coupling between P and the per-tau slack blocks,
    starting from the discrete Lyapunov solution at the grid midpoint.
    Convergence within the iteration cap is helped by a decreasing
    eps-inflation ladder and residual extrapolation over recent iterates,
    accepted only when it reduces the stacked cone violation; acceptance
    is declared only when the true-eps margin is nonnegative AND P itself
    is positive definite (a negative P can fake a positive margin).  The
    returned certificate's margin is re-verified from scratch.
    """
    A = as_matrix(A, name="A")
    A_R = as_matrix(A_R, rows=A.shape[0], cols=A.shape[1], name="A_R")
    if A.shape[0] != A.shape[1]:
        raise DimensionError("A must be square")
    taus = [float(t) for t in tau_grid]
    if not taus:
        raise DimensionError("tau_grid must be nonempty")
    if any(t < 0 for t in taus):
        raise DimensionError("tau_grid entries must be >= 0")
    if not eps > 0:
        raise DimensionError("eps must be > 0")

    n = A.shape[0]
    eye = np.eye(n)
    Psis = [A_R @ expm(A, t) for t in taus]

    _, sv, unsv = _svec_ops(n)
    d = sv(eye).size
    Ks = []
    for Psi in Psis:
        K = np.empty((d, d))
        for col in range(d):
            e = np.zeros(d)
            e[col] = 1.0
            B = unsv(e)
            K[:, col] = sv(B - Psi.T @ B @ Psi)
        Ks.append(K)
    normal = np.eye(d) + sum(K.T @ K for K in Ks)
    chol = cho_factor(normal)

    def affine_project(P_hat: np.ndarray, Y_hats: List[np.ndarray], eps_run: float):
        rhs = sv(P_hat) + sum(K.T @ sv(Y + eps_run * eye) for K, Y in zip(Ks, Y_hats))
        P_new = unsv(cho_solve(chol, rhs))
        Y_new = [P_new - Psi.T @ P_new @ Psi - eps_run * eye for Psi in Psis]
        return P_new, Y_new

    def true_margin(P: np.ndarray) -> float:
        return min(
            min_symmetric_eigenvalue(P - Psi.T @ P @ Psi - eps * eye) for Psi in Psis
        )

    # midpoint discrete Lyapunov init, floored at I
    mid = Psis[len(Psis) // 2]
    try:
        P = solve_discrete_lyapunov(mid.T, eye)
        P, _ = _clip_psd(symmetrize(P), 1.0)
    except Exception:
        P = eye.copy()

    rungs = [e for e in (1e-2, 1e-3, 1e-4) if e > 2.0 * eps] + [2.0 * eps]
    share = max(1, max_iterations // len(rungs))
    total = 0
    best_margin = -math.inf
    hist_x: List[np.ndarray] = []
    hist_f: List[np.ndarray] = []

    for eps_run in rungs:
        Ys = [P - Psi.T @ P @ Psi - eps_run * eye for Psi in Psis]
        it = 0
        while it < share and total < max_iterations:
            P_cone, viol = _clip_psd(P, 1.0)
            Y_cones = []
            for Y in Ys:
                Yc, v = _clip_psd(Y, 0.0)
                Y_cones.append(Yc)
                viol = max(viol, v)

            p_min = min_symmetric_eigenvalue(P)
            margin = true_margin(P)
            if p_min > 0:
                best_margin = max(best_margin, margin)
                if margin >= 0.0:
                    verified = verify_certificate_margin(A, A_R, P, taus, eps)
                    if verified >= 0.0:
                        return LyapunovCertificate(
                            P=symmetrize(P),
                            eps=eps,
                            tau_grid=tuple(taus),
                            margin=verified,
                            iterations=total,
                        )

            P_next, Ys_next = affine_project(P_cone, Y_cones, eps_run)

            hist_x.append(sv(P))
            hist_f.append(sv(P_next))
            if len(hist_x) > anderson_depth + 1:
                hist_x.pop(0)
                hist_f.pop(0)
            if anderson_depth and len(hist_x) >= 3:
                resid = np.array([hist_f[i] - hist_x[i] for i in range(len(hist_x))]).T
                d_resid = np.diff(resid, axis=1)
                try:
                    gamma, *_ = np.linalg.lstsq(d_resid, resid[:, -1], rcond=None)
                    f_cols = np.array(hist_f).T
                    x_acc = hist_f[-1] - (f_cols[:, 1:] - f_cols[:, :-1]) @ gamma
                    P_acc = unsv(x_acc)
                    Y_acc = [P_acc - Psi.T @ P_acc @ Psi - eps_run * eye for Psi in Psis]
                    v_acc = max(
                        max(0.0, 1.0 - min_symmetric_eigenvalue(P_acc)),
                        max(max(0.0, -min_symmetric_eigenvalue(Y)) for Y in Y_acc),
                    )
                    if v_acc < viol:
                        P_next, Ys_next = P_acc, Y_acc
                        hist_x.clear()
                        hist_f.clear()
                except np.linalg.LinAlgError:
                    pass

            P, Ys = P_next, Ys_next
            it += 1
            total += 1

    return Infeasible(
        best_margin=best_margin if math.isfinite(best_margin) else float("nan"),
        eps=eps,
        tau_grid=tuple(taus),
        iterations=total,
        message=(
            "no certificate within the iteration cap; a one-sided outcome "
            "(the gridded sufficient condition may simply be too strong)"
        ),
    )


def lmi_stability_verdict(
    sys: ClosedLoopSystem, tau_grid: Sequence[float], eps: float
) -> StabilityVerdict:
    """Dwell-time Lyapunov verdict over an explicit grid: Stable on a
    verified certificate, Inconclusive otherwise; never Unstable."""
    res = dwell_lmi_constant_P(sys.A, sys.A_R, tau_grid, eps)
    if isinstance(res, LyapunovCertificate):
        return StabilityVerdict(
            method="DwellLMI",
            result=STABLE,
            certificate=res,
            notes="gridded certificate; continuum validity not claimed",
        )
    return StabilityVerdict(
        method="DwellLMI",
        result=INCONCLUSIVE,
        infeasibility=res,
        notes="certificate search failed; sufficient condition only, not instability",
    )


def ranged_dwell_verdict(
    sys: ClosedLoopSystem,
    tau_min: float,
    tau_max: float,
    grid_n: int = 80,
    eps: float = 1e-6,
) -> StabilityVerdict:
    """Verdict for the forced-jump timer policy: certificate over a linear
    grid of [tau_min, tau_max]; equal endpoints reduce to a single point."""
    if tau_min <= 0:
        raise DimensionError("tau_min must be > 0")
    if tau_max < tau_min:
        raise DimensionError("tau_max must be >= tau_min")
    if grid_n < 1:
        raise DimensionError("grid_n must be >= 1")
    if tau_max == tau_min or grid_n == 1:
        grid = np.array([tau_min])
    else:
        grid = np.linspace(tau_min, tau_max, int(grid_n))
    verdict = lmi_stability_verdict(sys, grid, eps)
    notes = verdict.notes + f"; forced-jump window [{tau_min:g}, {tau_max:g}]"
    return StabilityVerdict(
        method=verdict.method,
        result=verdict.result,
        certificate=verdict.certificate,
        infeasibility=verdict.infeasibility,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# initial-state preparation


def prepare_initial(
    sys: ClosedLoopSystem, x0: Sequence[float], q0: int, tau0: float
) -> np.ndarray:
    """Reduced representative z of an arbitrary initial condition.

    Applies the jump action once if the state has reset-block content
    (which also flips the toggle), then absorbs a negative toggle as a
    sign flip, leaving a state equivalent to (J z, +1, 0).
    """
    x0 = as_vector(x0, size=sys.n, name="x0")
    if q0 not in (1, -1):
        raise DimensionError(f"q0 must be +1 or -1, got {q0}")
    if tau0 < 0:
        raise DimensionError("tau0 must be >= 0")
    x_jumped = sys.A_R @ x0
    q = int(q0)
    if not np.allclose(x_jumped, x0, atol=1e-12 * (1.0 + float(np.linalg.norm(x0)))):
        q = -q
    z = sys.J.T @ x_jumped
    return q * z
