"""Dense real-matrix numerics used by every other module.

Everything here targets desk-scale problems: state dimensions below ten,
certificate matrices at most 10x10, eigenvalue work capped at 20x20.
Accuracy and predictability win over speed throughout, so the matrix
exponential is delegated to a scaling-and-squaring implementation and
eigenvalues to a QR solver rather than anything approximate.

Matrices are plain numpy float arrays.  ``as_matrix`` is the single entry
point that enforces the shared invariants (2-D, finite entries), and the
public operations validate through it.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError

#: Eigenvalue routines are only guaranteed at desk scale.
MAX_EIG_DIM = 20

#: Tolerance for treating an eigenvalue's imaginary part as numerical noise.
REAL_EIG_TOL = 1e-9


def as_matrix(a, rows: Optional[int] = None, cols: Optional[int] = None, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a float 2-D array and validate it.

    Rejects non-finite entries outright; NaN and Inf are never admitted
    into any public operation.  Optional ``rows``/``cols`` pin expected
    dimensions, producing an error that names the offending operand.
    """
    m = np.array(a, dtype=float, copy=True)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise DimensionError(f"{name} contains non-finite entries")
    r, c = m.shape
    if rows is not None and r != rows:
        raise DimensionError(f"{name} must have {rows} rows, got {r}")
    if cols is not None and c != cols:
        raise DimensionError(f"{name} must have {cols} columns, got {c}")
    return m


def as_vector(a, size: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite float 1-D array."""
    v = np.array(a, dtype=float, copy=True).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise DimensionError(f"{name} contains non-finite entries")
    if size is not None and v.size != size:
        raise DimensionError(f"{name} must have length {size}, got {v.size}")
    return v


def _square(a, name) -> np.ndarray:
    m = as_matrix(a, name=name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


def expm(A, t: float = 1.0) -> np.ndarray:
    """e^{At} for square A.

    Backed by scipy's scaling-and-squaring Pade implementation; the test
    suite holds it to a 30-term scaled Taylor oracle at 1e-10 and to the
    semigroup identity, so the backend is replaceable without contract
    drift.
    """
    M = _square(A, "expm operand")
    if not np.isfinite(t):
        raise DimensionError("expm time must be finite")
    if t == 0.0:
        return np.eye(M.shape[0])
    out = scipy.linalg.expm(M * float(t))
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"expm produced non-finite entries (norm ~ {np.abs(M).max() * abs(t):.3g})")
    return out


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues of a square matrix as a complex array.

    Dimension is capped at desk scale; the QR iteration behind numpy is
    robust there.  Convergence failures surface as NumericalError with
    the matrix size in the message.
    """
    M = _square(A, "eigenvalue operand")
    if M.shape[0] > MAX_EIG_DIM:
        raise DimensionError(f"eigenvalues limited to {MAX_EIG_DIM}x{MAX_EIG_DIM}, got {M.shape[0]}")
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed on {M.shape[0]}x{M.shape[0]} matrix: {exc}") from exc


def spectral_radius(A) -> float:
    w = eigenvalues(A)
    return float(np.max(np.abs(w))) if w.size else 0.0


def is_schur(A, margin: float = 0.0) -> bool:
    """True iff the spectral radius is strictly below 1 - margin."""
    if margin < 0:
        raise DimensionError("margin must be nonnegative")
    return spectral_radius(A) < 1.0 - margin


def is_hurwitz(A, margin: float = 0.0) -> bool:
    """True iff every eigenvalue has real part strictly below -margin."""
    w = eigenvalues(A)
    return bool(np.all(w.real < -margin))


def symmetrize(S) -> np.ndarray:
    M = _square(S, "symmetrize operand")
    return 0.5 * (M + M.T)


def symmetric_eigenvalues(S) -> np.ndarray:
    """Ascending real eigenvalues of a symmetric matrix (symmetrized first)."""
    return np.linalg.eigvalsh(symmetrize(S))


def min_symmetric_eigenvalue(S) -> float:
    return float(symmetric_eigenvalues(S)[0])


def max_symmetric_eigenvalue(S) -> float:
    return float(symmetric_eigenvalues(S)[-1])


def real_eigenvalues(A, tol: float = REAL_EIG_TOL) -> np.ndarray:
    """Essentially-real eigenvalues, with the imaginary noise stripped."""
    w = eigenvalues(A)
    scale = 1.0 + (np.max(np.abs(w)) if w.size else 0.0)
    keep = np.abs(w.imag) <= tol * scale
    return np.sort(w[keep].real)


def first_crossing(
    h: Callable[[float], float],
    tau_start: float,
    tau_cap: float,
    grid_step: Optional[float] = None,
    tol: float = 1e-9,
) -> Optional[float]:
    """Smallest tau in [tau_start, tau_cap] where h first becomes nonnegative.

    If h(tau_start) >= -tol the start itself is returned; the slack absorbs
    after-jump states sitting exactly on the switching surface.  Otherwise
    the interval is scanned at ``grid_step`` (default: 1e-3 of the span),
    the first negative-to-nonnegative transition is bracketed, and bisection
    refines it to absolute precision ``tol``.  Returns None when no sign
    change occurs on the interval.

    A double root inside one grid cell (dip to zero and back) can be
    stepped over at the default resolution; callers needing those tune
    grid_step down.
    """
    if tau_start > tau_cap:
        raise DimensionError(f"tau_start {tau_start} exceeds tau_cap {tau_cap}")
    if grid_step is None:
        grid_step = 1e-3 * (tau_cap - tau_start)
    if grid_step <= 0:
        raise DimensionError("grid_step must be positive")

    h0 = float(h(tau_start))
    if h0 >= -tol:
        return float(tau_start)

    lo = float(tau_start)
    tau = float(tau_start)
    while tau < tau_cap:
        tau = min(tau + grid_step, tau_cap)
        val = float(h(tau))
        if val >= 0.0:
            hi = tau
            # invariant: h(lo) < 0 <= h(hi); report the hi end so the
            # returned point satisfies h >= 0
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if float(h(mid)) >= 0.0:
                    hi = mid
                else:
                    lo = mid
            return float(hi)
        lo = tau
        if tau >= tau_cap:
            break
    return None
