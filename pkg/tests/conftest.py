"""Shared fixtures: reference systems and independent numerical oracles."""

import numpy as np
import pytest

import reset_lab as rl


# ---------------------------------------------------------------------------
# independent propagator oracle: scaled 30-term Taylor series with squaring.
# Kept deliberately separate from the library's expm so the two routes can
# disagree in tests if either is wrong.


def taylor_expm(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    M = np.asarray(A, dtype=float) * float(t)
    n = M.shape[0]
    norm = np.linalg.norm(M, ord=np.inf)
    s = 0
    while norm > 0.5:
        norm /= 2.0
        s += 1
    B = M / (2.0 ** s)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 31):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


# ---------------------------------------------------------------------------
# reference systems


@pytest.fixture(scope="session")
def horowitz3():
    """3-state closed loop: plant + 2-state resetting controller, nominal form."""
    A = np.array([[-1.0, 1.0, 1.0], [-4.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    A_R = np.diag([1.0, 1.0, 0.0])
    C = np.array([[-1.0, 0.0, 0.0]])
    return rl.closed_loop_from_matrices(A, A_R, C, 1)


@pytest.fixture(scope="session")
def fore3():
    """First-order reset element against an oscillatory plant."""
    A = np.array([[0.0, 0.0, 1.0], [1.0, -0.2, 1.0], [0.0, -1.0, -1.0]])
    A_R = np.diag([1.0, 1.0, 0.0])
    C = np.array([[0.0, -1.0, 0.0]])
    return rl.closed_loop_from_matrices(A, A_R, C, 1)


@pytest.fixture(scope="session")
def chaos4():
    """4-state loop whose reset-interval sequence is chaotic."""
    A = np.array(
        [
            [0.0, 0.0, 3.5, 5.0],
            [1.0, 0.0, -4.3, 1.0],
            [0.0, 1.0, -1.0, 0.0],
            [0.0, 0.0, -1.0, -1.0],
        ]
    )
    A_R = np.diag([1.0, 1.0, 1.0, 0.0])
    C = np.array([[0.0, 0.0, -1.0, 0.0]])
    return rl.closed_loop_from_matrices(A, A_R, C, 1)


@pytest.fixture(scope="session")
def step_blocks():
    """Step-tracking blocks: integrator exosystem, first-order plant, PI+CI controller."""
    exo = rl.Exosystem(
        A_w=np.array([[0.0]]), C_w1=np.array([[1.0]]), C_w2=np.array([[0.0]])
    )
    plant = rl.LtiPlant(
        A_p=np.array([[-1.0]]), B_p=np.array([[1.0]]), C_p=np.array([[1.0]])
    )
    ctrl = rl.ResetController(
        A_r=np.zeros((2, 2)),
        B_r=np.array([[4.0], [1.0]]),
        C_r=np.array([[1.0, 1.0]]),
        D_r=np.array([[0.0]]),
        n_rho=1,
    )
    return exo, plant, ctrl


@pytest.fixture(scope="session")
def step4(step_blocks):
    exo, plant, ctrl = step_blocks
    return rl.build_closed_loop(exo, plant, ctrl)


@pytest.fixture(scope="session")
def step4_sector(step_blocks):
    exo, plant, ctrl = step_blocks
    return rl.build_sector_closed_loop(exo, plant, ctrl)


# frequently used constants
SQRT19 = np.sqrt(19.0)
NATURAL_INTERVAL_3 = 2.0 * np.pi / SQRT19  # interior crossing period of horowitz3
FORE_BETA = 0.99498743710662
