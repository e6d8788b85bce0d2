"""Command-line front end.

Subcommands: ``simulate``, ``gradcheck``, ``splay``, ``qp``, ``sweep``.
Configuration is JSON (unknown keys are rejected), time series are CSV, and
summaries are JSON.  All randomness flows from a single 64-bit seed through
NumPy's PCG64 generator, so reruns with the same seed produce byte-identical
CSV bodies.  The ``MSYNC_LOG`` environment variable (error, info, debug)
controls logging verbosity.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import itertools
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (
    Algorithm,
    FlowSpec,
    SmoothingProfile,
    SystemState,
    consensus_state,
    finite_difference_gradient,
    perturb_state,
    random_state,
)
from .graphs import NetworkGraph, cycle_graph, graph_from_json
from .integrators import IntegrationError, Trajectory, integrate
from .manifolds import (
    Circle,
    FlatTorus,
    GeodesicDomainError,
    Manifold,
    SpecialOrthogonal,
    Sphere,
    UnitaryRealified,
    manifold_from_json,
)
from .splay import (
    SplayConfig,
    circle_loop,
    construct_splay,
    great_circle_loop,
    is_equilibrium,
    phase_loop,
    rotation_plane_loop,
    solve_partition_qp,
    stability_probe,
    torus_generator_loop,
)
from .topology import threshold_check, winding_invariant

logger = logging.getLogger("msync")

EXIT_OK = 0
EXIT_RUN_FAILURE = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(ValueError):
    """Invalid or malformed experiment configuration."""


def _setup_logging():
    level = os.environ.get("MSYNC_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        raise ConfigError(f"MSYNC_LOG must be one of {sorted(levels)}, got {level!r}")
    logging.basicConfig(level=levels[level], format="%(levelname)s %(name)s: %(message)s")


def _check_keys(obj: dict, required: set[str], optional: set[str], where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where} is missing keys {sorted(missing)}")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"{where} has unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated simulation configuration."""

    manifold: Manifold
    graph: NetworkGraph
    algorithm: Algorithm
    dt: float
    t_end: float
    sample_every: int
    grad_tol: float
    epsilon: float | None
    initial_condition: dict
    seed: int
    output_dir: str | None

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        _check_keys(
            obj,
            required={"manifold", "graph", "algorithm", "initial_condition", "seed"},
            optional={"dt", "t_end", "sample_every", "grad_tol", "epsilon", "output_dir"},
            where="config",
        )
        try:
            manifold = manifold_from_json(obj["manifold"])
            graph = graph_from_json(obj["graph"])
            algorithm = Algorithm(obj["algorithm"])
        except (ValueError, TypeError) as err:
            raise ConfigError(str(err)) from err
        ic = obj["initial_condition"]
        _check_keys(
            ic,
            required={"type"},
            optional={"sigma", "loops", "windings", "coords", "base_angle"},
            where="initial_condition",
        )
        if ic["type"] not in {"random", "consensus_plus_noise", "splay", "explicit"}:
            raise ConfigError(f"unknown initial_condition type {ic['type']!r}")
        return cls(
            manifold=manifold,
            graph=graph,
            algorithm=algorithm,
            dt=float(obj.get("dt", 1e-3)),
            t_end=float(obj.get("t_end", 10.0)),
            sample_every=int(obj.get("sample_every", 100)),
            grad_tol=float(obj.get("grad_tol", 1e-9)),
            epsilon=None if obj.get("epsilon") is None else float(obj["epsilon"]),
            initial_condition=dict(ic),
            seed=int(obj["seed"]),
            output_dir=obj.get("output_dir"),
        )

    def flow_spec(self) -> FlowSpec:
        profile = None
        if self.epsilon is not None:
            profile = SmoothingProfile(self.manifold.injectivity_radius, self.epsilon)
        try:
            return FlowSpec(
                algorithm=self.algorithm,
                graph=self.graph,
                profile=profile,
                dt=self.dt,
                t_end=self.t_end,
                sample_every=self.sample_every,
                grad_tol=self.grad_tol,
            )
        except ValueError as err:
            raise ConfigError(str(err)) from err


def _closed_loop_for(manifold: Manifold, ic: dict):
    loops = int(ic.get("loops", 1))
    if isinstance(manifold, Circle):
        return circle_loop(manifold, loops, base_angle=float(ic.get("base_angle", 0.0)))
    if isinstance(manifold, Sphere):
        return great_circle_loop(manifold, loops)
    if isinstance(manifold, FlatTorus):
        p, q = ic.get("windings", [1, 0])
        return torus_generator_loop(manifold, int(p), int(q))
    if isinstance(manifold, SpecialOrthogonal):
        return rotation_plane_loop(manifold, loops=loops)
    if isinstance(manifold, UnitaryRealified):
        return phase_loop(manifold, loops)
    raise ConfigError(f"no closed-geodesic catalog entry for {manifold.kind}")


def build_initial_state(config: ExperimentConfig) -> SystemState:
    ic = config.initial_condition
    m = config.manifold
    n = config.graph.n_agents
    rng = np.random.default_rng(config.seed)
    kind = ic["type"]
    try:
        if kind == "random":
            return random_state(m, n, rng)
        if kind == "consensus_plus_noise":
            sigma = float(ic.get("sigma", 0.01))
            return perturb_state(consensus_state(m, n, seed=rng), sigma, rng)
        if kind == "splay":
            loop = _closed_loop_for(m, ic)
            state = construct_splay(SplayConfig(loop, config.graph))
            sigma = float(ic.get("sigma", 0.0))
            return perturb_state(state, sigma, rng) if sigma > 0 else state
        coords = np.asarray(ic["coords"], dtype=float)
        return SystemState(m, coords)
    except (ValueError, KeyError) as err:
        raise ConfigError(f"cannot build initial condition: {err}") from err


# ---------------------------------------------------------------------------
# artifact writers


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: Path, traj: Trajectory):
    """One row per (sample, agent): t, agent_id, flattened coords, potential, grad_norm."""
    n_coords = int(np.prod(traj.states[0].manifold.ambient_shape))
    header = ["t", "agent_id"] + [f"c{k}" for k in range(n_coords)] + ["potential", "grad_norm"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, state, pot, gn in zip(traj.times, traj.states, traj.potentials, traj.grad_norms):
            for i in range(state.n_agents):
                row = [_fmt(t), str(i + 1)]
                row += [_fmt(v) for v in state.coords[i].ravel()]
                row += [_fmt(pot), _fmt(gn)]
                writer.writerow(row)


def _winding_json(w):
    return list(w) if isinstance(w, tuple) else w


def summarize(traj: Trajectory, config: ExperimentConfig, wall_time: float) -> dict:
    order = tuple(range(1, config.graph.n_agents + 1))
    can_wind = config.graph.has_cycle(order)

    def safe_winding(state):
        if not can_wind:
            return None
        try:
            return winding_invariant(state, order)
        except GeodesicDomainError:
            return None

    threshold = threshold_check(
        traj.states[0], config.graph, config.algorithm,
        cycle_order=order if can_wind else None,
    )
    return {
        "outcome": traj.outcome.outcome.value,
        "converged": traj.converged,
        "final_potential": float(traj.potentials[-1]),
        "final_grad_norm": float(traj.grad_norms[-1]),
        "winding_start": _winding_json(safe_winding(traj.states[0])),
        "winding_end": _winding_json(safe_winding(traj.final_state)),
        "threshold": threshold.to_json(),
        "steps": traj.meta.get("steps"),
        "step_bound_violations": traj.step_bound_violations,
        "wall_time_s": wall_time,
    }


# ---------------------------------------------------------------------------
# subcommands


def _load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path}: {err}") from err


def cmd_simulate(args) -> int:
    raw = _load_config_file(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    config = ExperimentConfig.from_json(raw)
    out_dir = Path(args.out or config.output_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = config.flow_spec()
    initial = build_initial_state(config)
    started = time.perf_counter()
    try:
        traj = integrate(initial, spec)
    except IntegrationError as err:
        print(f"integrator failure: {err}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    wall = time.perf_counter() - started
    write_trajectory_csv(out_dir / "trajectory.csv", traj)
    summary = summarize(traj, config, wall)
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    logger.info("simulate: outcome %s in %d steps", summary["outcome"], summary["steps"])
    print(json.dumps({k: summary[k] for k in ("outcome", "final_potential", "converged")}))
    return EXIT_OK


def gradient_check(manifold: Manifold, algorithm: Algorithm, trials: int, seed: int,
                   n_agents: int = 5, in_band_fraction: float = 0.25) -> dict:
    """Compare analytic flow velocities against central finite differences.

    A fraction of trials place one edge inside the smoothing transition band
    so the cutoff's interpolating branch is exercised too.
    """
    if trials < 0:
        raise ConfigError("trials must be nonnegative")
    graph = cycle_graph(n_agents)
    profile = SmoothingProfile.for_manifold(manifold)
    rng = np.random.default_rng(seed)
    worst = 0.0
    from .dynamics import (
        _chordal_potential_raw,
        _chordal_velocity_raw,
        _geodesic_potential_raw,
        _geodesic_velocity_raw,
    )

    geodesic = Algorithm(algorithm) == Algorithm.GEODESIC_CONSENSUS
    n_band = int(np.floor(trials * in_band_fraction)) if geodesic else 0
    for trial in range(trials):
        state = random_state(manifold, n_agents, rng)
        coords = np.asarray(state.coords)
        if trial < n_band:
            # move agent 2 so the edge (1, 2) lands inside the transition band
            lo, hi = profile.band
            target = np.sqrt(rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)))
            v = manifold.random_tangent(rng, coords[0], target)
            coords = coords.copy()
            coords[1] = manifold.exp(coords[0], v)
            state = SystemState(manifold, coords)
        if geodesic:
            analytic = _geodesic_velocity_raw(manifold, state.coords, graph, profile)
            fd = finite_difference_gradient(
                state, lambda s: _geodesic_potential_raw(manifold, s.coords, graph, profile)
            )
        else:
            analytic = _chordal_velocity_raw(manifold, state.coords, graph)
            fd = finite_difference_gradient(
                state, lambda s: _chordal_potential_raw(manifold, s.coords, graph)
            )
        fd_arr = np.stack([v.coords for v in fd])
        scale = max(float(np.max(np.sqrt(np.einsum("kij,kij->k", fd_arr, fd_arr)))), 1e-12)
        err = float(np.max(np.abs(analytic + fd_arr))) / scale
        worst = max(worst, err)
    return {
        "manifold": manifold.to_json(),
        "algorithm": Algorithm(algorithm).value,
        "trials": trials,
        "max_relative_error": worst,
        "tolerance": 1e-6,
        "pass": worst < 1e-6,
    }


def cmd_gradcheck(args) -> int:
    try:
        manifold = manifold_from_json(json.loads(args.manifold))
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed manifold JSON: {err}") from err
    try:
        algorithm = Algorithm(args.algorithm)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    report = gradient_check(manifold, algorithm, args.trials, args.seed)
    if args.trials == 0:
        print("warning: 0 trials requested, gradient check passes vacuously", file=sys.stderr)
    print(json.dumps(report))
    return EXIT_OK if report["pass"] else EXIT_RUN_FAILURE


def cmd_splay(args) -> int:
    raw = _load_config_file(args.config)
    _check_keys(
        raw,
        required={"manifold", "graph"},
        optional={"loops", "windings", "epsilon", "probe", "base_angle", "output_dir"},
        where="splay config",
    )
    try:
        manifold = manifold_from_json(raw["manifold"])
        graph = graph_from_json(raw["graph"])
        loop = _closed_loop_for(manifold, raw)
        config = SplayConfig(loop, graph, epsilon=raw.get("epsilon"))
        state = construct_splay(config)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
    spacing, value = config.spacings()
    flow = FlowSpec(Algorithm.GEODESIC_CONSENSUS, graph)
    equilibrium, speed = is_equilibrium(state, flow, tol=1e-10)
    report = {
        "label": loop.label,
        "length": loop.length,
        "spacings": [float(s) for s in spacing],
        "qp_value": value,
        "is_equilibrium": equilibrium,
        "velocity_norm": speed,
        "is_local_min_length": loop.is_local_min_length,
    }
    if raw.get("probe"):
        probe_cfg = raw["probe"]
        _check_keys(
            probe_cfg,
            required={"magnitude", "trials"},
            optional={"algorithm", "dt", "t_end", "grad_tol"},
            where="probe config",
        )
        probe_flow = FlowSpec(
            algorithm=Algorithm(probe_cfg.get("algorithm", "GeodesicConsensus")),
            graph=graph,
            dt=float(probe_cfg.get("dt", 0.02)),
            t_end=float(probe_cfg.get("t_end", 100.0)),
            sample_every=1000,
            grad_tol=float(probe_cfg.get("grad_tol", 1e-9)),
        )
        probe = stability_probe(
            state, probe_flow, float(probe_cfg["magnitude"]),
            int(probe_cfg["trials"]), args.seed if args.seed is not None else 0,
            splay=config,
        )
        report["probe"] = probe.to_json()
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "splay_report.json", "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(json.dumps(report))
    return EXIT_OK


def cmd_qp(args) -> int:
    try:
        weights = [float(w) for w in args.weights.split(",")]
        d, value = solve_partition_qp(weights, args.length)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    print(json.dumps({"segments": [float(x) for x in d], "value": value}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _set_dotted(obj: dict, path: str, value):
    keys = path.split(".")
    node = obj
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def run_sweep_point(payload: tuple[dict, dict]) -> dict:
    """Execute one grid point; failures are captured in the returned row."""
    template, assignment = payload
    raw = json.loads(json.dumps(template))
    for path, value in assignment.items():
        _set_dotted(raw, path, value)
    row = {path: value for path, value in assignment.items()}
    try:
        config = ExperimentConfig.from_json(raw)
        spec = config.flow_spec()
        initial = build_initial_state(config)
        traj = integrate(initial, spec)
        order = tuple(range(1, config.graph.n_agents + 1))
        can_wind = config.graph.has_cycle(order)
        windings = []
        if can_wind:
            try:
                windings = [winding_invariant(s, order) for s in traj.states]
            except GeodesicDomainError:
                windings = []
        conserved = bool(windings) and all(w == windings[0] for w in windings)
        row.update(
            outcome=traj.outcome.outcome.value,
            converged=traj.converged,
            final_potential=float(traj.potentials[-1]),
            initial_potential=float(traj.potentials[0]),
            final_grad_norm=float(traj.grad_norms[-1]),
            winding_start=json.dumps(_winding_json(windings[0])) if windings else "",
            winding_conserved=conserved,
            error="",
        )
    except (ConfigError, ValueError, IntegrationError, GeodesicDomainError) as err:
        row.update(
            outcome="Error", converged=False, final_potential="", initial_potential="",
            final_grad_norm="", winding_start="", winding_conserved="",
            error=f"{type(err).__name__}: {err}",
        )
    return row


def cmd_sweep(args) -> int:
    raw = _load_config_file(args.config)
    _check_keys(raw, required={"template", "vary"}, optional=set(), where="sweep config")
    template = raw["template"]
    vary = raw["vary"]
    if not isinstance(vary, dict) or not vary:
        raise ConfigError("sweep 'vary' must be a nonempty object of parameter lists")
    for key, values in vary.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"vary[{key!r}] must be a nonempty list")
    paths = list(vary)
    grid = [dict(zip(paths, combo)) for combo in itertools.product(*(vary[p] for p in paths))]
    logger.info("sweep: %d grid points, jobs=%d", len(grid), args.jobs)

    payloads = [(template, assignment) for assignment in grid]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_sweep_point, payloads))
    else:
        rows = [run_sweep_point(p) for p in payloads]

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "sweep.csv"
    fields = paths + [
        "outcome", "converged", "final_potential", "initial_potential",
        "final_grad_norm", "winding_start", "winding_conserved", "error",
    ]
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    n_err = sum(1 for r in rows if r["error"])
    print(json.dumps({"rows": len(rows), "failures": n_err, "csv": str(out_path)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msync",
        description="Consensus gradient flows and multistability on Riemannian manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a configured flow, write CSV + JSON")
    p_sim.add_argument("--config", required=True, help="experiment config JSON path")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--out", default=None, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_grad = sub.add_parser("gradcheck", help="finite-difference check of flow gradients")
    p_grad.add_argument("--manifold", required=True, help='manifold JSON, e.g. {"kind":"Sphere","params":[2]}')
    p_grad.add_argument("--algorithm", default="ChordalConsensus")
    p_grad.add_argument("--trials", type=int, default=100)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_splay = sub.add_parser("splay", help="construct a splay state, verify, optionally probe")
    p_splay.add_argument("--config", required=True)
    p_splay.add_argument("--seed", type=int, default=None)
    p_splay.add_argument("--out", default=None)
    p_splay.set_defaults(func=cmd_splay)

    p_qp = sub.add_parser("qp", help="solve the weighted partition program")
    p_qp.add_argument("--weights", required=True, help="comma-separated positive weights")
    p_qp.add_argument("--length", type=float, required=True)
    p_qp.set_defaults(func=cmd_qp)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid, aggregate to CSV")
    p_sweep.add_argument("--config", required=True, help="sweep config with template and vary")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except IntegrationError as err:
        print(f"integrator failure: {err}", file=sys.stderr)
        return EXIT_RUN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
