"""Plant, reset-controller, and exosystem types plus the closed-loop builders.

The closed loop couples a SISO LTI plant with a linear controller whose
last ``n_rho`` states are zeroed at resets, optionally embedding an
exosystem that generates the reference/disturbance signals.  Two flavors
come out of the builders:

* ``ClosedLoopSystem``: flow matrix A, reset matrix A_R, and the scalar
  switching row C whose sign (together with the toggle q) drives the
  zero-crossing resetting law.
* ``SectorClosedLoop``: same flow/reset pair with a symmetric quadratic
  form M; jumps are allowed where x'Mx <= 0, no toggle involved.

State ordering is fixed: exosystem block first, plant block second,
controller block last, with the reset states at the very end.  The
builders offer no permutations; callers reorder their own states.
SISO only throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError
from .numerics import as_matrix


def reset_projector(n_r: int, n_rho: int) -> np.ndarray:
    """Diagonal projector keeping the first n_r - n_rho controller states.

    Idempotent by construction; multiplying a controller state vector by it
    zeroes exactly the states that a reset clears.
    """
    if not (0 <= n_rho <= n_r):
        raise DimensionError(f"need 0 <= n_rho <= n_r, got n_rho={n_rho}, n_r={n_r}")
    d = np.ones(n_r)
    if n_rho:
        d[n_r - n_rho:] = 0.0
    return np.diag(d)


@dataclass(frozen=True, eq=False)
class LtiPlant:
    """Strictly proper SISO plant (A_p, B_p, C_p)."""

    A_p: np.ndarray
    B_p: np.ndarray
    C_p: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A_p, name="A_p")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A_p must be square, got {A.shape}")
        n = A.shape[0]
        B = as_matrix(self.B_p, rows=n, cols=1, name="B_p")
        C = as_matrix(self.C_p, rows=1, cols=n, name="C_p")
        object.__setattr__(self, "A_p", A)
        object.__setattr__(self, "B_p", B)
        object.__setattr__(self, "C_p", C)

    @property
    def n_p(self) -> int:
        return self.A_p.shape[0]


@dataclass(frozen=True, eq=False)
class ResetController:
    """Linear controller whose last n_rho states are zeroed at resets.

    D_r is the scalar direct feedthrough from the error to the controller
    output v = D_r e + C_r x_r.
    """

    A_r: np.ndarray
    B_r: np.ndarray
    C_r: np.ndarray
    D_r: float
    n_rho: int

    def __post_init__(self):
        A = as_matrix(self.A_r, name="A_r")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A_r must be square, got {A.shape}")
        n = A.shape[0]
        B = as_matrix(self.B_r, rows=n, cols=1, name="B_r")
        C = as_matrix(self.C_r, rows=1, cols=n, name="C_r")
        if not (0 <= self.n_rho <= n):
            raise DimensionError(f"n_rho={self.n_rho} out of range for n_r={n}")
        object.__setattr__(self, "A_r", A)
        object.__setattr__(self, "B_r", B)
        object.__setattr__(self, "C_r", C)
        D = np.asarray(self.D_r, dtype=float)
        if D.size != 1:
            raise DimensionError(f"D_r must be scalar (1x1), got shape {D.shape}")
        object.__setattr__(self, "D_r", D.reshape(()).item())
        proj = reset_projector(n, self.n_rho)
        if not np.array_equal(proj @ proj, proj):
            raise DimensionError("reset projector failed idempotence")

    @property
    def n_r(self) -> int:
        return self.A_r.shape[0]

    @property
    def A_rho(self) -> np.ndarray:
        return reset_projector(self.n_r, self.n_rho)


@dataclass(frozen=True, eq=False)
class Exosystem:
    """Autonomous generator of the reference input (row C_w1) and the plant-side feedthrough (row C_w2)."""

    A_w: np.ndarray
    C_w1: np.ndarray
    C_w2: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A_w, name="A_w")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A_w must be square, got {A.shape}")
        n = A.shape[0]
        object.__setattr__(self, "A_w", A)
        object.__setattr__(self, "C_w1", as_matrix(self.C_w1, rows=1, cols=n, name="C_w1"))
        object.__setattr__(self, "C_w2", as_matrix(self.C_w2, rows=1, cols=n, name="C_w2"))

    @property
    def n_w(self) -> int:
        return self.A_w.shape[0]


def _reset_embedding(n: int, n_rho: int) -> np.ndarray:
    """Tall matrix J whose columns span the non-reset subspace; A_R = J J'."""
    return np.eye(n)[:, : n - n_rho]


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """Autonomous zero-crossing reset system: flow A, reset A_R = J J', switching row C.

    C_v, when present, is the row reading the controller output v out of
    the full state (attached by build_closed_loop; literal constructions
    have no block information so it stays None).
    """

    A: np.ndarray
    A_R: np.ndarray
    C: np.ndarray
    n_rho: int
    J: np.ndarray = field(default=None)  # derived in __post_init__ when not supplied
    C_v: Optional[np.ndarray] = None

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        n = A.shape[0]
        if A.shape[1] != n:
            raise DimensionError(f"A must be square, got {A.shape}")
        A_R = as_matrix(self.A_R, rows=n, cols=n, name="A_R")
        C = as_matrix(self.C, rows=1, cols=n, name="C")
        if not (0 <= self.n_rho <= n):
            raise DimensionError(f"n_rho={self.n_rho} out of range for n={n}")
        J = self.J
        if J is None:
            J = _reset_embedding(n, self.n_rho)
        else:
            J = as_matrix(J, rows=n, cols=n - self.n_rho, name="J")
        # structural identities the whole reduction rests on
        if not np.allclose(A_R, J @ J.T, atol=1e-12):
            raise DimensionError("A_R != J J' (reset states must be the trailing ones)")
        if not np.allclose(J.T @ J, np.eye(n - self.n_rho), atol=1e-12):
            raise DimensionError("J'J != I")
        if not np.allclose(A_R @ A_R, A_R, atol=1e-12):
            raise DimensionError("A_R is not idempotent")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A_R", A_R)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "J", J)
        if self.C_v is not None:
            object.__setattr__(self, "C_v", as_matrix(self.C_v, rows=1, cols=n, name="C_v"))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_reduced(self) -> int:
        return self.n - self.n_rho


@dataclass(frozen=True, eq=False)
class SectorClosedLoop:
    """Reset system with the sector resetting law x'Mx <= 0; no toggle state.

    C and C_v are optional trace rows carried over from the block builder
    so error/output traces stay available; they play no role in the law.
    """

    A: np.ndarray
    A_R: np.ndarray
    M: np.ndarray
    C: Optional[np.ndarray] = None
    C_v: Optional[np.ndarray] = None

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        n = A.shape[0]
        if A.shape[1] != n:
            raise DimensionError(f"A must be square, got {A.shape}")
        A_R = as_matrix(self.A_R, rows=n, cols=n, name="A_R")
        M = as_matrix(self.M, rows=n, cols=n, name="M")
        if not np.array_equal(M, M.T):
            raise DimensionError("M must be exactly symmetric")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "A_R", A_R)
        object.__setattr__(self, "M", M)
        if self.C is not None:
            object.__setattr__(self, "C", as_matrix(self.C, rows=1, cols=n, name="C"))
        if self.C_v is not None:
            object.__setattr__(self, "C_v", as_matrix(self.C_v, rows=1, cols=n, name="C_v"))

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _block_diag(*blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    k = 0
    for b in blocks:
        m = b.shape[0]
        out[k:k + m, k:k + m] = b
        k += m
    return out


def _assemble(exosystem: Optional[Exosystem], plant: LtiPlant, controller: ResetController):
    """Common block assembly for both laws.

    Returns (A, A_R, C, C_v, n_rho).  Block layout: exosystem rows first,
    plant rows, controller rows; absent exosystem drops that block
    entirely rather than padding with zeros.
    """
    n_w = exosystem.n_w if exosystem is not None else 0
    n_p, n_r = plant.n_p, controller.n_r
    n = n_w + n_p + n_r

    A = np.zeros((n, n))
    iw, ip, ir = slice(0, n_w), slice(n_w, n_w + n_p), slice(n_w + n_p, n)

    if exosystem is not None:
        A[iw, iw] = exosystem.A_w
        A[ip, iw] = plant.B_p @ (controller.D_r * exosystem.C_w1 + exosystem.C_w2)
        A[ir, iw] = controller.B_r @ exosystem.C_w1
    A[ip, ip] = plant.A_p - controller.D_r * (plant.B_p @ plant.C_p)
    A[ip, ir] = plant.B_p @ controller.C_r
    A[ir, ip] = -controller.B_r @ plant.C_p
    A[ir, ir] = controller.A_r

    blocks = [np.eye(n_w), np.eye(n_p), controller.A_rho] if exosystem is not None else [np.eye(n_p), controller.A_rho]
    A_R = _block_diag(*blocks)

    C = np.zeros((1, n))
    if exosystem is not None:
        C[0, iw] = exosystem.C_w1
    C[0, ip] = -plant.C_p

    # controller output row: v = D_r e + C_r x_r
    C_v = controller.D_r * C
    C_v[0, ir] += controller.C_r[0]

    return A, A_R, C, C_v, controller.n_rho


def build_closed_loop(exosystem: Optional[Exosystem], plant: LtiPlant, controller: ResetController) -> ClosedLoopSystem:
    """Assemble the zero-crossing closed loop from blocks.

    Pass exosystem=None to build the unforced loop (the same matrices with
    the exosystem rows and columns removed).
    """
    A, A_R, C, C_v, n_rho = _assemble(exosystem, plant, controller)
    return ClosedLoopSystem(A=A, A_R=A_R, C=C, n_rho=n_rho, C_v=C_v)


def build_sector_closed_loop(exosystem: Optional[Exosystem], plant: LtiPlant, controller: ResetController) -> SectorClosedLoop:
    """Assemble the sector-law closed loop from the same blocks.

    The quadratic form couples the error row with the controller output
    row, x'Mx = 2 e v, and is symmetrized exactly by construction.
    """
    A, A_R, C, C_v, _ = _assemble(exosystem, plant, controller)
    n = A.shape[0]
    n_w = exosystem.n_w if exosystem is not None else 0
    n_p, n_r = plant.n_p, controller.n_r
    ir = slice(n_w + n_p, n)

    M = np.zeros((n, n))
    if exosystem is not None:
        iw = slice(0, n_w)
        blk = exosystem.C_w1.T @ controller.C_r
        M[iw, ir] = blk
        M[ir, iw] = blk.T
    ip = slice(n_w, n_w + n_p)
    blk = -plant.C_p.T @ controller.C_r
    M[ip, ir] = blk
    M[ir, ip] = blk.T
    # direct feedthrough contributes 2 D_r e^2 to x'Mx = 2 e v
    d = np.asarray(controller.D_r, dtype=float).item()
    if d != 0.0:
        M += 2.0 * d * (C.T @ C)

    return SectorClosedLoop(A=A, A_R=A_R, M=M, C=C, C_v=C_v)


def closed_loop_from_matrices(A, A_R, C, n_rho: int, C_v=None) -> ClosedLoopSystem:
    """Wrap literal (A, A_R, C) matrices; validates the reset structure."""
    return ClosedLoopSystem(A=A, A_R=A_R, C=C, n_rho=n_rho, C_v=C_v)


def sector_from_matrices(A, A_R, M, C=None, C_v=None) -> SectorClosedLoop:
    """Wrap literal sector-law matrices."""
    return SectorClosedLoop(A=A, A_R=A_R, M=M, C=C, C_v=C_v)
