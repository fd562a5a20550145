"""Event-driven simulation of the reset closed loops on hybrid time domains.

Flows are linear, so propagation is exact: states advance by cached
matrix-exponential products over a sampling grid (default horizon/2000),
never by a generic ODE stepper.  Jumps are localized by bracketing the
scalar switching function on that grid and bisecting to 1e-9 seconds.
A crossing that enters and leaves the jump region inside a single grid
cell can be missed at the default resolution; the sampling step is
caller-tunable for that case.

Two selection policies resolve the nondeterminism of the law:

* Eager (default) jumps at the earliest enabled instant, i.e. as soon as
  the timer allows and the switching function is nonnegative.
* Lazy keeps flowing as long as flowing remains possible, jumping only
  when the switching function becomes strictly positive; it realizes
  only-flowing solutions along stationary rays where the function is
  identically zero.

The ranged policy (tau_max set) forces a jump when the timer hits
tau_max even if the switching function is still negative.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, EventLocalizationError, NumericalError
from .model import ClosedLoopSystem, SectorClosedLoop
from .numerics import as_vector, expm

EVENT_TOL = 1e-9  # absolute bisection precision on event times, seconds


@dataclass(frozen=True)
class TimerPolicy:
    """Minimum dwell time, optionally a maximum forcing jumps.

    tau_min must be strictly positive; that is what rules out Zeno
    behavior and makes jump counts bounded by horizon/tau_min + 1.
    """

    tau_min: float
    tau_max: Optional[float] = None

    def __post_init__(self):
        if not (self.tau_min > 0):
            raise DimensionError(f"tau_min must be > 0, got {self.tau_min}")
        if self.tau_max is not None and self.tau_max < self.tau_min:
            raise DimensionError(f"tau_max {self.tau_max} < tau_min {self.tau_min}")


@dataclass(frozen=True)
class Leg:
    """One flow interval: constant jump index and toggle, sampled trace."""

    j: int
    q: int
    t: np.ndarray        # sample times, ascending, first = interval start
    tau: np.ndarray      # timer trace, unit rate along the leg
    X: np.ndarray        # samples, shape (len(t), n)


@dataclass(frozen=True)
class Jump:
    t: float
    x_before: np.ndarray
    x_after: np.ndarray
    q_before: int


@dataclass(frozen=True)
class HybridTimeDomain:
    intervals: Tuple[Tuple[float, float, int], ...]


@dataclass(frozen=True)
class HybridSolution:
    legs: Tuple[Leg, ...]
    jumps: Tuple[Jump, ...]
    policy: TimerPolicy
    horizon: float
    tau0: float
    selection: str

    @property
    def domain(self) -> HybridTimeDomain:
        return HybridTimeDomain(tuple((leg.t[0], leg.t[-1], leg.j) for leg in self.legs))

    @property
    def jump_times(self) -> List[float]:
        return [jp.t for jp in self.jumps]

    @property
    def final_state(self) -> np.ndarray:
        return self.legs[-1].X[-1]

    @property
    def n(self) -> int:
        return self.legs[0].X.shape[1]


@dataclass(frozen=True)
class ResetIntervalSequence:
    """Timer values at the jump instants.

    The first entry is the timer at the first jump (initial timer plus
    elapsed time), later entries are the gaps between consecutive jumps.
    Every value is >= tau_min of the generating policy because jumps are
    only enabled there.
    """

    values: Tuple[float, ...]
    tau_min: float


def reset_intervals(sol: HybridSolution) -> ResetIntervalSequence:
    times = sol.jump_times
    vals: List[float] = []
    prev = None
    for t in times:
        if prev is None:
            vals.append(t + sol.tau0)
        else:
            vals.append(t - prev)
        prev = t
    return ResetIntervalSequence(values=tuple(vals), tau_min=sol.policy.tau_min)


@dataclass
class Traces:
    t: np.ndarray
    e: np.ndarray
    v: Optional[np.ndarray]


def error_and_output_traces(sys, sol: HybridSolution) -> Traces:
    """Scalar traces aligned with the concatenated solution samples.

    e is the q-signed switching value (plain Cx for the sector law, whose
    recorded q is identically +1); v is the controller output when the
    system carries an output row, None otherwise.
    """
    C = sys.C
    if C is None:
        raise DimensionError("system has no switching/error row to trace")
    c = C[0]
    cv = sys.C_v[0] if sys.C_v is not None else None
    ts, es, vs = [], [], []
    for leg in sol.legs:
        ts.append(leg.t)
        es.append(leg.q * (leg.X @ c))
        if cv is not None:
            vs.append(leg.X @ cv)
    t = np.concatenate(ts) if ts else np.zeros(0)
    e = np.concatenate(es) if es else np.zeros(0)
    v = np.concatenate(vs) if cv is not None and vs else None
    return Traces(t=t, e=e, v=v)


# ---------------------------------------------------------------------------
# core event loop


class _Propagator:
    """Exact flow over one simulate() call: caches e^{A dt} and odd steps."""

    def __init__(self, A: np.ndarray):
        self.A = A
        self._cache = {}

    def step(self, dt: float) -> np.ndarray:
        key = float(dt)
        got = self._cache.get(key)
        if got is None:
            got = expm(self.A, key)
            self._cache[key] = got
        return got

    def at(self, x: np.ndarray, dt: float) -> np.ndarray:
        """One-off propagation; not cached (dt varies during bisection)."""
        if dt == 0.0:
            return x
        return expm(self.A, float(dt)) @ x


def _bisect_event(
    h: Callable[[np.ndarray], float],
    prop: _Propagator,
    x_leg: np.ndarray,
    s_lo: float,
    s_hi: float,
    target: float,
) -> float:
    """Refine an event bracket [s_lo, s_hi] (offsets from leg start).

    Invariant: h(x(s_lo)) < target <= h(x(s_hi)).  Returns the hi end, so
    the event state satisfies the jump condition.
    """
    if not (s_lo < s_hi):
        raise EventLocalizationError("empty event bracket", bracket=(s_lo, s_hi))
    while s_hi - s_lo > EVENT_TOL:
        mid = 0.5 * (s_lo + s_hi)
        if h(prop.at(x_leg, mid)) >= target:
            s_hi = mid
        else:
            s_lo = mid
    return s_hi


def _simulate_core(
    A: np.ndarray,
    A_R: np.ndarray,
    h_of: Callable[[np.ndarray, int], float],
    h_scale: Callable[[np.ndarray], float],
    flip_q: bool,
    x0: np.ndarray,
    q0: int,
    tau0: float,
    policy: TimerPolicy,
    horizon: float,
    selection: str,
    sample_dt: Optional[float],
) -> HybridSolution:
    if horizon <= 0:
        raise DimensionError(f"horizon must be > 0, got {horizon}")
    if selection not in ("eager", "lazy"):
        raise DimensionError(f"selection must be 'eager' or 'lazy', got {selection!r}")
    if tau0 < 0:
        raise DimensionError("tau0 must be >= 0")
    dt = horizon / 2000.0 if sample_dt is None else float(sample_dt)
    if dt <= 0:
        raise DimensionError("sample_dt must be > 0")

    prop = _Propagator(A)
    jump_cap = math.ceil(horizon / policy.tau_min) + 2

    legs: List[Leg] = []
    jumps: List[Jump] = []
    t0, x_leg, q, tau_leg = 0.0, x0.copy(), q0, tau0

    while True:
        remaining = horizon - t0
        # event search happens on timer offsets s from the leg start
        s_event = _find_event(h_of, h_scale, prop, x_leg, q, tau_leg, policy, remaining, selection, dt)
        s_end = remaining if s_event is None else s_event

        legs.append(_sample_leg(prop, x_leg, q, tau_leg, t0, s_end, dt, len(jumps)))

        if s_event is None:
            break
        t_ev = t0 + s_event
        x_ev = prop.at(x_leg, s_event)
        x_plus = A_R @ x_ev
        jumps.append(Jump(t=t_ev, x_before=x_ev, x_after=x_plus, q_before=q))
        if len(jumps) > jump_cap:
            raise NumericalError(f"jump count exceeded the no-Zeno bound {jump_cap}; event localization is broken")
        q = -q if flip_q else q
        t0, x_leg, tau_leg = t_ev, x_plus, 0.0
        if t0 >= horizon - 1e-12:
            # domain closes with a zero-length leg so jumps and legs stay aligned
            legs.append(_sample_leg(prop, x_leg, q, tau_leg, t0, 0.0, dt, len(jumps)))
            break

    return HybridSolution(
        legs=tuple(legs),
        jumps=tuple(jumps),
        policy=policy,
        horizon=horizon,
        tau0=tau0,
        selection=selection,
    )


def _find_event(h_of, h_scale, prop, x_leg, q, tau_leg, policy, remaining, selection, dt) -> Optional[float]:
    """Offset of the next jump within this leg, or None if the leg outlives the horizon."""
    s_enable = max(policy.tau_min - tau_leg, 0.0)
    s_force = None
    if policy.tau_max is not None:
        s_force = policy.tau_max - tau_leg
        if s_force < 0:
            raise DimensionError(f"timer {tau_leg} already beyond tau_max {policy.tau_max}")

    if s_enable > remaining:
        return None
    s_cap = remaining if s_force is None else min(s_force, remaining)

    x_en = prop.at(x_leg, s_enable)
    tol = EVENT_TOL * h_scale(x_en)
    h_en = h_of(x_en, q)

    if selection == "eager":
        if h_en >= -tol:
            return s_enable
    else:
        if h_en > tol:
            return s_enable

    if s_cap <= s_enable:
        # can only happen in the ranged case with the force point at/before enable
        return s_force if s_force is not None and s_force <= remaining else None

    # grid scan from the enable point
    def h_at(x):
        return h_of(x, q)

    E = prop.step(dt)
    n_steps = int(math.ceil((s_cap - s_enable) / dt - 1e-12))
    s_prev, x_prev = s_enable, x_en
    for i in range(1, n_steps + 1):
        s_next = s_enable + i * dt
        if s_next >= s_cap - 1e-15 or i == n_steps:
            s_next = s_cap
            x_next = prop.at(x_leg, s_next)
        else:
            x_next = E @ x_prev
        h_next = h_at(x_next)
        triggered = h_next >= 0.0 if selection == "eager" else h_next > tol
        if triggered:
            return _bisect_event(h_at, prop, x_leg, s_prev, s_next, 0.0 if selection == "eager" else tol)
        s_prev, x_prev = s_next, x_next

    if s_force is not None and s_force <= remaining:
        return s_force
    return None


def _sample_leg(prop, x_leg, q, tau_leg, t0, s_end, dt, j) -> Leg:
    """Sample the flow on [t0, t0 + s_end] at step dt, endpoint exact."""
    if s_end < 0:
        s_end = 0.0
    k = int(math.floor(s_end / dt + 1e-12))
    offs = [i * dt for i in range(k + 1)]
    if offs[-1] < s_end - 1e-15:
        offs.append(s_end)
    else:
        offs[-1] = s_end
    E = prop.step(dt)
    xs = np.empty((len(offs), x_leg.size))
    x = x_leg
    xs[0] = x
    for i in range(1, len(offs)):
        if abs((offs[i] - offs[i - 1]) - dt) < 1e-15:
            x = E @ x
        else:
            x = prop.at(x_leg, offs[i])
        xs[i] = x
    t = t0 + np.asarray(offs)
    tau = tau_leg + np.asarray(offs)
    return Leg(j=j, q=q, t=t, tau=tau, X=xs)


# ---------------------------------------------------------------------------
# public entry points


def simulate(
    sys: ClosedLoopSystem,
    xi: Tuple[Sequence[float], int, float],
    policy: TimerPolicy,
    horizon: float,
    selection: str = "eager",
    sample_dt: Optional[float] = None,
) -> HybridSolution:
    """Simulate the zero-crossing law from xi = (x0, q0, tau0).

    Jumps fire where q.Cx >= 0 with the timer at or past tau_min (at
    tau_max exactly when the ranged policy forces them); each jump maps
    x to A_R x, flips q, and zeroes the timer.  A jump at t = 0 is
    permitted when the initial condition already sits in the jump region
    with tau0 >= tau_min.
    """
    x0, q0, tau0 = xi
    x0 = as_vector(x0, size=sys.n, name="x0")
    if q0 not in (1, -1):
        raise DimensionError(f"q0 must be +1 or -1, got {q0}")
    c = sys.C[0]
    cnorm = float(np.linalg.norm(c)) or 1.0

    def h_of(x, q):
        return q * float(c @ x)

    def h_scale(x):
        return cnorm * (1.0 + float(np.linalg.norm(x)))

    return _simulate_core(
        sys.A, sys.A_R, h_of, h_scale, True, x0, int(q0), float(tau0), policy, float(horizon), selection, sample_dt
    )


def simulate_sector(
    sys: SectorClosedLoop,
    xi: Tuple[Sequence[float], float],
    policy: TimerPolicy,
    horizon: float,
    sample_dt: Optional[float] = None,
) -> HybridSolution:
    """Simulate the sector law from xi = (x0, tau0); always eager.

    The jump region is x'Mx <= 0 (with the dwell timer at or past
    tau_min).  There is no toggle; solutions record q identically +1.
    """
    x0, tau0 = xi
    x0 = as_vector(x0, size=sys.n, name="x0")
    M = sys.M
    mnorm = float(np.abs(M).max()) or 1.0

    def h_of(x, q):
        return -float(x @ M @ x)

    def h_scale(x):
        nx = float(np.linalg.norm(x))
        return mnorm * (1.0 + nx * nx)

    return _simulate_core(
        sys.A, sys.A_R, h_of, h_scale, False, x0, 1, float(tau0), policy, float(horizon), "eager", sample_dt
    )


# ---------------------------------------------------------------------------
# serialization


def solution_to_csv(sol: HybridSolution) -> str:
    """CSV trace: t, j, q, tau, x_1..x_n with 17 significant digits."""
    n = sol.n
    buf = io.StringIO()
    buf.write("t,j,q,tau," + ",".join(f"x_{i + 1}" for i in range(n)) + "\n")
    for leg in sol.legs:
        for i in range(leg.t.size):
            row = [f"{leg.t[i]:.17g}", str(leg.j), str(leg.q), f"{leg.tau[i]:.17g}"]
            row += [f"{v:.17g}" for v in leg.X[i]]
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def solution_to_json_dict(sol: HybridSolution) -> dict:
    return {
        "horizon": sol.horizon,
        "selection": sol.selection,
        "policy": {"tau_min": sol.policy.tau_min, "tau_max": sol.policy.tau_max},
        "tau0": sol.tau0,
        "domain": [list(iv) for iv in sol.domain.intervals],
        "jumps": [
            {
                "t": jp.t,
                "q_before": jp.q_before,
                "x_before": jp.x_before.tolist(),
                "x_after": jp.x_after.tolist(),
            }
            for jp in sol.jumps
        ],
        "legs": [
            {
                "j": leg.j,
                "q": leg.q,
                "t": leg.t.tolist(),
                "tau": leg.tau.tolist(),
                "x": leg.X.tolist(),
            }
            for leg in sol.legs
        ],
    }
