"""Command-line front end and shared analysis handlers.

Scenario files (JSON) fully describe a reset-loop experiment: the system
(either structured blocks or literal matrices), the resetting law, the
timer policy, the initial condition, and the analyses the scenario is
meant for.  The same handlers back both the CLI and the HTTP service;
the CLI runs them in-process by default or forwards to a running service
with --server.

Exit codes are the machine contract:
  0  success (and Stable verdicts)
  1  invalid scenario / input / runtime failure
  2  Inconclusive verdict
  3  Unstable verdict
  4  analysis inapplicable to the scenario
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import urllib.error
import urllib.request
from importlib import resources
from typing import Dict, List, Literal, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import (
    DimensionError,
    NoCrossingError,
    NumericalError,
    ResetLabError,
    ScenarioError,
    UnsupportedConfigurationError,
)
from .hybrid_sim import (
    TimerPolicy,
    reset_intervals,
    simulate,
    simulate_sector,
    solution_to_csv,
)
from .model import (
    ClosedLoopSystem,
    Exosystem,
    LtiPlant,
    ResetController,
    SectorClosedLoop,
    build_closed_loop,
    build_sector_closed_loop,
    closed_loop_from_matrices,
    sector_from_matrices,
)
from .poincare import (
    CircleParam,
    PoincareMap,
    SegmentParam,
    default_search_cap,
    map_1d_many,
    angle_map_1d,
    interval_map,
)
from .stability import (
    INCONCLUSIVE,
    STABLE,
    UNSTABLE,
    default_tau_grid,
    eigen_stability_verdict,
    find_periodic_points,
    lmi_stability_verdict,
    ranged_dwell_verdict,
)

ALL_KINDS = ("simulate", "poincare", "periodic", "stability", "compare")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INCONCLUSIVE = 2
EXIT_UNSTABLE = 3
EXIT_INAPPLICABLE = 4

_VERDICT_EXIT = {STABLE: EXIT_OK, INCONCLUSIVE: EXIT_INCONCLUSIVE, UNSTABLE: EXIT_UNSTABLE}

Matrix = List[List[float]]


# ---------------------------------------------------------------------------
# scenario schema


class ExoBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")
    A_w: Matrix
    C_w1: Matrix
    C_w2: Matrix


class PlantBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")
    A_p: Matrix
    B_p: Matrix
    C_p: Matrix


class ControllerBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")
    A_r: Matrix
    B_r: Matrix
    C_r: Matrix
    D_r: Matrix
    n_rho: int


class BlocksSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    plant: PlantBlock
    controller: ControllerBlock
    exosystem: Optional[ExoBlock] = None


class LiteralSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    A: Matrix
    A_R: Matrix
    n_rho: int
    C: Optional[Matrix] = None
    M: Optional[Matrix] = None
    C_v: Optional[Matrix] = None


class PolicySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    tau_min: float
    tau_max: Optional[float] = None


class InitialSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    x0: List[float]
    q0: int = 1
    tau0: float = 0.0


class SegmentSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a: float
    b: float


class AnalysisSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: Literal["simulate", "poincare-graph", "periodic", "stability", "compare"]
    method: Optional[Literal["eigen", "lmi", "ranged"]] = None
    k_max: Optional[int] = None
    grid_n: Optional[int] = None
    eps: Optional[float] = None
    grid_lo: Optional[float] = None
    grid_hi: Optional[float] = None


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")
    version: int = 1
    name: str
    law: Literal["ZeroCrossing", "Sector"]
    policy: PolicySpec
    initial: InitialSpec
    horizon: float
    analyses: List[AnalysisSpec] = Field(default_factory=list)
    blocks: Optional[BlocksSpec] = None
    literal: Optional[LiteralSpec] = None
    segment: Optional[SegmentSpec] = None
    selection: Literal["eager", "lazy"] = "eager"

    @model_validator(mode="after")
    def _check(self) -> "Scenario":
        if (self.blocks is None) == (self.literal is None):
            raise ValueError("exactly one of 'blocks' or 'literal' must be given")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        if self.law == "Sector" and self.literal is not None and self.literal.M is None:
            raise ValueError("Sector law with literal matrices requires M")
        if self.law == "ZeroCrossing" and self.literal is not None and self.literal.C is None:
            raise ValueError("ZeroCrossing law with literal matrices requires C")
        if self.segment is not None and self.segment.b <= self.segment.a:
            raise ValueError("segment needs b > a")
        try:
            sys_obj = self.build_system()
        except Exception as exc:  # dimension mismatches etc., named precisely
            raise ValueError(f"system construction failed: {exc}") from exc
        if len(self.initial.x0) != sys_obj.n:
            raise ValueError(
                f"initial.x0 has length {len(self.initial.x0)}, system dimension is {sys_obj.n}"
            )
        if self.initial.q0 not in (1, -1):
            raise ValueError("initial.q0 must be +1 or -1")
        if self.initial.tau0 < 0:
            raise ValueError("initial.tau0 must be >= 0")
        # TimerPolicy validates tau_min/tau_max relations
        TimerPolicy(self.policy.tau_min, self.policy.tau_max)
        return self

    # -- construction -------------------------------------------------------

    def build_system(self):
        """The closed-loop system for this scenario's law."""
        if self.blocks is not None:
            b = self.blocks
            exo = (
                Exosystem(
                    A_w=np.array(b.exosystem.A_w, dtype=float),
                    C_w1=np.array(b.exosystem.C_w1, dtype=float),
                    C_w2=np.array(b.exosystem.C_w2, dtype=float),
                )
                if b.exosystem is not None
                else None
            )
            plant = LtiPlant(
                A_p=np.array(b.plant.A_p, dtype=float),
                B_p=np.array(b.plant.B_p, dtype=float),
                C_p=np.array(b.plant.C_p, dtype=float),
            )
            ctrl = ResetController(
                A_r=np.array(b.controller.A_r, dtype=float),
                B_r=np.array(b.controller.B_r, dtype=float),
                C_r=np.array(b.controller.C_r, dtype=float),
                D_r=np.array(b.controller.D_r, dtype=float),
                n_rho=b.controller.n_rho,
            )
            if self.law == "Sector":
                return build_sector_closed_loop(exo, plant, ctrl)
            return build_closed_loop(exo, plant, ctrl)
        lit = self.literal
        A = np.array(lit.A, dtype=float)
        A_R = np.array(lit.A_R, dtype=float)
        C = np.array(lit.C, dtype=float) if lit.C is not None else None
        C_v = np.array(lit.C_v, dtype=float) if lit.C_v is not None else None
        if self.law == "Sector":
            M = np.array(lit.M, dtype=float)
            return sector_from_matrices(A, A_R, M, C=C, C_v=C_v)
        return closed_loop_from_matrices(A, A_R, C, lit.n_rho, C_v=C_v)

    def build_both_systems(self) -> Tuple[ClosedLoopSystem, SectorClosedLoop]:
        """Zero-crossing and sector loops from the same blocks (compare)."""
        if self.blocks is None:
            raise UnsupportedConfigurationError(
                "compare requires a block-structured scenario (both laws are assembled "
                "from the same plant/controller/exosystem)"
            )
        b = self.blocks
        exo = (
            Exosystem(
                A_w=np.array(b.exosystem.A_w, dtype=float),
                C_w1=np.array(b.exosystem.C_w1, dtype=float),
                C_w2=np.array(b.exosystem.C_w2, dtype=float),
            )
            if b.exosystem is not None
            else None
        )
        plant = LtiPlant(
            A_p=np.array(b.plant.A_p, dtype=float),
            B_p=np.array(b.plant.B_p, dtype=float),
            C_p=np.array(b.plant.C_p, dtype=float),
        )
        ctrl = ResetController(
            A_r=np.array(b.controller.A_r, dtype=float),
            B_r=np.array(b.controller.B_r, dtype=float),
            C_r=np.array(b.controller.C_r, dtype=float),
            D_r=np.array(b.controller.D_r, dtype=float),
            n_rho=b.controller.n_rho,
        )
        return build_closed_loop(exo, plant, ctrl), build_sector_closed_loop(exo, plant, ctrl)

    def analysis_for(self, kind: str) -> Optional[AnalysisSpec]:
        wanted = "poincare-graph" if kind == "poincare" else kind
        for a in self.analyses:
            if a.kind == wanted:
                return a
        return None


class RunOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")
    grid: Optional[int] = None
    kmax: Optional[int] = None
    eps: Optional[float] = None
    seed: Optional[int] = None
    method: Optional[Literal["eigen", "lmi", "ranged"]] = None


class RunResult(NamedTuple):
    summary: dict
    artifacts: Dict[str, str]
    exit_code: int


# ---------------------------------------------------------------------------
# scenario IO


def load_scenario_text(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.model_dump(mode="json"), indent=2) + "\n"


def list_bundled() -> List[str]:
    root = resources.files("reset_lab").joinpath("_bundled")
    names = [p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json")]
    return sorted(names)


def load_bundled(name: str) -> Scenario:
    path = resources.files("reset_lab").joinpath("_bundled").joinpath(f"{name}.json")
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ScenarioError(
            f"no bundled scenario named {name!r}; available: {', '.join(list_bundled())}"
        ) from exc
    return load_scenario_text(text)


def load_scenario(ref: str) -> Scenario:
    """Load from a file path, or fall back to the bundled registry."""
    if os.path.exists(ref):
        with open(ref, "r", encoding="utf-8") as fh:
            return load_scenario_text(fh.read())
    if os.path.sep not in ref and ref.replace("_", "").replace("-", "").isalnum():
        return load_bundled(ref)
    raise ScenarioError(f"scenario file not found: {ref}")


# ---------------------------------------------------------------------------
# handler plumbing


def _parameterization_for(scenario: Scenario, sys_obj):
    if not isinstance(sys_obj, ClosedLoopSystem):
        raise UnsupportedConfigurationError(
            "the discrete reduction applies to the zero-crossing law only"
        )
    nr = sys_obj.n_reduced
    if nr == 2:
        return CircleParam()
    if scenario.segment is not None:
        return SegmentParam(a=scenario.segment.a, b=scenario.segment.b, dim=nr)
    raise UnsupportedConfigurationError(
        f"no 1-D parameterization: reduced dimension is {nr} and the scenario declares "
        "no invariant segment"
    )


def _interval_tail(values: List[float]) -> dict:
    if not values:
        return {"count": 0, "last": None, "mean_of_last_3": None}
    tail = values[-3:] if len(values) >= 3 else values
    return {
        "count": len(values),
        "last": float(values[-1]),
        "mean_of_last_3": float(np.mean(tail)),
    }


def _simulate_solution(scenario: Scenario, sys_obj):
    policy = TimerPolicy(scenario.policy.tau_min, scenario.policy.tau_max)
    init = scenario.initial
    if isinstance(sys_obj, SectorClosedLoop):
        return simulate_sector(sys_obj, (init.x0, init.tau0), policy, scenario.horizon)
    return simulate(
        sys_obj,
        (init.x0, init.q0, init.tau0),
        policy,
        scenario.horizon,
        selection=scenario.selection,
    )


# ---------------------------------------------------------------------------
# handlers (shared by CLI and service)


def cmd_simulate(scenario: Scenario, options: RunOptions) -> RunResult:
    sys_obj = scenario.build_system()
    sol = _simulate_solution(scenario, sys_obj)
    seq = reset_intervals(sol)
    summary = {
        "name": scenario.name,
        "law": scenario.law,
        "selection": sol.selection,
        "policy": {"tau_min": sol.policy.tau_min, "tau_max": sol.policy.tau_max},
        "horizon": sol.horizon,
        "jump_count": len(sol.jumps),
        "jump_times": [float(t) for t in sol.jump_times],
        "reset_intervals": [float(v) for v in seq.values],
        "interval_tail": _interval_tail(list(seq.values)),
        "final_state": [float(v) for v in sol.final_state],
        "final_norm": float(np.linalg.norm(sol.final_state)),
    }
    artifacts = {
        f"{scenario.name}_trace.csv": solution_to_csv(sol),
        f"{scenario.name}_summary.json": json.dumps(summary, indent=2) + "\n",
    }
    return RunResult(summary=summary, artifacts=artifacts, exit_code=EXIT_OK)


def cmd_poincare(scenario: Scenario, options: RunOptions) -> RunResult:
    sys_obj = scenario.build_system()
    param = _parameterization_for(scenario, sys_obj)
    ana = scenario.analysis_for("poincare")
    grid_n = options.grid or (ana.grid_n if ana and ana.grid_n else 400)
    pm = PoincareMap(sys_obj, scenario.policy.tau_min)

    us = param.grid(int(grid_n))
    images = np.full(us.size, np.nan)
    taus = np.full(us.size, np.nan)
    status = ["ok"] * us.size
    try:
        images, taus = map_1d_many(pm, param, us)
    except (NoCrossingError, ResetLabError):
        for j, u in enumerate(us):
            try:
                images[j] = angle_map_1d(pm, param, float(u))
                taus[j] = interval_map(pm, param.to_vector(float(u)))
            except NoCrossingError:
                status[j] = "no-crossing"
            except ResetLabError:
                status[j] = "degenerate"

    buf = io.StringIO()
    buf.write("u,image,interval,status\n")
    for j in range(us.size):
        img = f"{images[j]:.17g}" if math.isfinite(images[j]) else ""
        tv = f"{taus[j]:.17g}" if math.isfinite(taus[j]) else ""
        buf.write(f"{us[j]:.17g},{img},{tv},{status[j]}\n")
    bad = sum(1 for s in status if s != "ok")
    summary = {
        "name": scenario.name,
        "rows": int(us.size),
        "no_crossing_points": int(bad),
        "parameter_domain": [float(param.domain[0]), float(param.domain[1])],
    }
    artifacts = {f"{scenario.name}_map.csv": buf.getvalue()}
    return RunResult(summary=summary, artifacts=artifacts, exit_code=EXIT_OK)


def cmd_periodic(scenario: Scenario, options: RunOptions) -> RunResult:
    sys_obj = scenario.build_system()
    param = _parameterization_for(scenario, sys_obj)
    ana = scenario.analysis_for("periodic")
    k_max = options.kmax or (ana.k_max if ana and ana.k_max else 3)
    grid_n = options.grid or (ana.grid_n if ana and ana.grid_n else 1200)
    pm = PoincareMap(sys_obj, scenario.policy.tau_min)
    orbits = find_periodic_points(pm, param, k_max, grid_n)
    census = {}
    for o in orbits:
        census[str(o.period)] = census.get(str(o.period), 0) + o.period
    summary = {
        "name": scenario.name,
        "k_max": int(k_max),
        "grid_n": int(grid_n),
        "orbit_count": len(orbits),
        "point_census_by_period": census,
        "orbits": [o.to_json_dict() for o in orbits],
    }
    artifacts = {f"{scenario.name}_orbits.json": json.dumps(summary, indent=2) + "\n"}
    return RunResult(summary=summary, artifacts=artifacts, exit_code=EXIT_OK)


def cmd_stability(scenario: Scenario, options: RunOptions) -> RunResult:
    sys_obj = scenario.build_system()
    ana = scenario.analysis_for("stability")
    method = options.method or (ana.method if ana and ana.method else "eigen")

    if method == "eigen":
        param = _parameterization_for(scenario, sys_obj)
        k_max = options.kmax or (ana.k_max if ana and ana.k_max else 3)
        grid_n = options.grid or (ana.grid_n if ana and ana.grid_n else 1200)
        pm = PoincareMap(sys_obj, scenario.policy.tau_min)
        verdict = eigen_stability_verdict(
            pm, param, k_max, grid_n=grid_n, seed=options.seed
        )
    elif method == "ranged":
        if scenario.policy.tau_max is None:
            raise UnsupportedConfigurationError(
                "the ranged dwell method requires a policy with tau_max"
            )
        grid_n = options.grid or (ana.grid_n if ana and ana.grid_n else 80)
        eps = options.eps or (ana.eps if ana and ana.eps else 1e-6)
        verdict = ranged_dwell_verdict(
            sys_obj, scenario.policy.tau_min, scenario.policy.tau_max, grid_n=grid_n, eps=eps
        )
    elif method == "lmi":
        lo = ana.grid_lo if ana and ana.grid_lo else scenario.policy.tau_min
        hi = (
            ana.grid_hi
            if ana and ana.grid_hi
            else (scenario.policy.tau_max or default_search_cap(sys_obj.A, lo))
        )
        grid_n = options.grid or (ana.grid_n if ana and ana.grid_n else 60)
        eps = options.eps or (ana.eps if ana and ana.eps else 1e-6)
        grid = default_tau_grid(lo, hi, grid_n)
        verdict = lmi_stability_verdict(sys_obj, grid, eps)
    else:  # pragma: no cover - schema restricts values
        raise UnsupportedConfigurationError(f"unknown stability method {method!r}")

    vd = verdict.to_json_dict()
    summary = {"name": scenario.name, "verdict": vd}
    artifacts = {f"{scenario.name}_verdict.json": json.dumps(vd, indent=2) + "\n"}
    return RunResult(summary=summary, artifacts=artifacts, exit_code=_VERDICT_EXIT[verdict.result])


def cmd_compare(scenario: Scenario, options: RunOptions) -> RunResult:
    zc_sys, sec_sys = scenario.build_both_systems()
    policy = TimerPolicy(scenario.policy.tau_min, scenario.policy.tau_max)
    init = scenario.initial
    zc = simulate(zc_sys, (init.x0, init.q0, init.tau0), policy, scenario.horizon)
    sec = simulate_sector(sec_sys, (init.x0, init.tau0), policy, scenario.horizon)

    def stats(sol):
        seq = reset_intervals(sol)
        return {
            "jump_count": len(sol.jumps),
            "jump_times": [float(t) for t in sol.jump_times],
            "reset_intervals": [float(v) for v in seq.values],
            "interval_tail": _interval_tail(list(seq.values)),
        }

    summary = {
        "name": scenario.name,
        "horizon": scenario.horizon,
        "zero_crossing": stats(zc),
        "sector": stats(sec),
        "sector_extra_jumps": len(sec.jumps) - len(zc.jumps),
    }
    artifacts = {
        f"{scenario.name}_zero_crossing.csv": solution_to_csv(zc),
        f"{scenario.name}_sector.csv": solution_to_csv(sec),
        f"{scenario.name}_compare.json": json.dumps(summary, indent=2) + "\n",
    }
    return RunResult(summary=summary, artifacts=artifacts, exit_code=EXIT_OK)


_HANDLERS = {
    "simulate": cmd_simulate,
    "poincare": cmd_poincare,
    "periodic": cmd_periodic,
    "stability": cmd_stability,
    "compare": cmd_compare,
}


def run_analysis(kind: str, scenario: Scenario, options: Optional[RunOptions] = None) -> RunResult:
    """Dispatch one analysis; the single entry point shared by CLI and service."""
    if kind not in _HANDLERS:
        raise ScenarioError(f"unknown analysis kind {kind!r}; expected one of {ALL_KINDS}")
    return _HANDLERS[kind](scenario, options or RunOptions())


# ---------------------------------------------------------------------------
# CLI


def _remote_run(server: str, kind: str, scenario: Scenario, options: RunOptions) -> RunResult:
    url = server.rstrip("/") + f"/analyses/{kind}"
    body = json.dumps(
        {
            "scenario": scenario.model_dump(mode="json"),
            "options": options.model_dump(mode="json"),
        }
    ).encode("utf-8")
    req = urllib.request.Request(url, data=body, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        data = json.loads(resp.read().decode("utf-8"))
    return RunResult(
        summary=data["summary"], artifacts=data["artifacts"], exit_code=data["exit_code"]
    )


def _write_artifacts(out_dir: str, artifacts: Dict[str, str]) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fname, content in artifacts.items():
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(content)
        written.append(path)
    return written


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="reset-lab",
        description=(
            "Construct, simulate, and stability-analyze reset control loops "
            "with dwell-time regularized resetting laws."
        ),
    )
    p.add_argument("command", choices=list(ALL_KINDS))
    p.add_argument(
        "--scenario",
        required=True,
        help="scenario JSON file, or the name of a bundled scenario",
    )
    p.add_argument("--out", default="reset-lab-out", help="directory for artifacts")
    p.add_argument("--grid", type=int, default=None, help="grid size override")
    p.add_argument("--kmax", type=int, default=None, help="max period override")
    p.add_argument("--eps", type=float, default=None, help="certificate eps override")
    p.add_argument("--method", choices=["eigen", "lmi", "ranged"], default=None)
    p.add_argument("--server", default=None, help="forward to a running service URL")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    seed = None
    seed_env = os.environ.get("RESET_LAB_SEED")
    if seed_env:
        try:
            seed = int(seed_env)
        except ValueError:
            print(f"RESET_LAB_SEED must be an integer, got {seed_env!r}", file=sys.stderr)
            return EXIT_INVALID

    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID

    options = RunOptions(
        grid=args.grid, kmax=args.kmax, eps=args.eps, seed=seed, method=args.method
    )
    try:
        if args.server:
            result = _remote_run(args.server, args.command, scenario, options)
        else:
            result = run_analysis(args.command, scenario, options)
    except UnsupportedConfigurationError as exc:
        print(f"analysis not applicable: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except (NoCrossingError, NumericalError, DimensionError, ResetLabError) as exc:
        print(f"analysis failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except urllib.error.URLError as exc:
        print(f"server request failed: {exc}", file=sys.stderr)
        return EXIT_INVALID

    written = _write_artifacts(args.out, result.artifacts)
    print(json.dumps(result.summary, indent=2))
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
