"""Experiment driver: config parsing, grid sweeps, adversarial runs,
certificate checks, and rate-curve export.

Every output is reproducible from the config file alone.  Per-cell
randomness is seeded by the cell's own coordinates (degree, noise level,
repeat index), so editing the grid never reshuffles the randomness of
cells that were already there.  With PROXIQ_WORKERS > 1 the cells of a
sweep run in a thread pool; files are written after the join, in grid
order, with %.17g floats and forced newlines, so parallel runs are
byte-identical to serial ones.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import rates
from .oracle import (NoisyGradientOracle, OracleCertificate, OracleEval,
                     bounded_noise, certify_oracle)
from .problems import generate_logsum_instance, sample_l1_ball
from .prox import ProxFunction, project_l1_ball, prox_apply
from .solver import DivergenceError, ScheduleConfig, prox_gradient


class ConfigError(ValueError):
    """Bad experiment configuration."""


CONFIG_VERSION = 1


@dataclass(frozen=True)
class ProblemSpec:
    family: str = "logsum"
    n: int = 64
    N: int = 128
    radius: float = 4.0
    seed: int = 0
    noise_level: Optional[float] = None


@dataclass(frozen=True)
class OracleSpec:
    family: str = "noisy_gradient"
    degrees: Tuple[float, ...] = (0.0, 0.5, 1.0)
    noise_bounds: Tuple[float, ...] = (0.1, 1.0, 3.0)
    claimed_delta_scale: float = 1.0  # != 1 deliberately mis-claims, for refutation tests


@dataclass(frozen=True)
class SolverSpec:
    algorithm: str = "prox_gradient"
    iterations: int = 5000
    step_scale: float = 0.5
    beta: float = 0.0
    zeta: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    version: int
    output_dir: str
    problem: ProblemSpec = ProblemSpec()
    oracle: OracleSpec = OracleSpec()
    solver: SolverSpec = SolverSpec()
    repeats: int = 1
    master_seed: int = 0
    worst_case_directions: int = 0


def _reject_unknown(mapping, allowed, context):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")


def parse_config(data):
    """Validate a JSON-shaped mapping into an ExperimentConfig, strictly.

    Unknown keys anywhere are an error: silently ignoring a typo like
    'iteratons' would produce a run that looks fine and answers the wrong
    question.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(data, {"version", "problem", "oracle", "solver", "output_dir",
                           "repeats", "master_seed", "worst_case_directions"}, "config")
    if data.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    if not data.get("output_dir"):
        raise ConfigError("output_dir is required")

    prob_data = data.get("problem", {})
    _reject_unknown(prob_data, {"family", "n", "N", "radius", "seed", "noise_level"}, "problem")
    problem = ProblemSpec(
        family=prob_data.get("family", "logsum"),
        n=int(prob_data.get("n", 64)),
        N=int(prob_data.get("N", 128)),
        radius=float(prob_data.get("radius", 4.0)),
        seed=int(prob_data.get("seed", 0)),
        noise_level=(None if prob_data.get("noise_level") is None
                     else float(prob_data["noise_level"])),
    )
    if problem.family != "logsum":
        raise ConfigError(f"unsupported problem family {problem.family!r}")
    if problem.n < 1 or problem.N < 1 or problem.radius <= 0.0:
        raise ConfigError("problem dimensions and radius must be positive")

    oracle_data = data.get("oracle", {})
    _reject_unknown(oracle_data, {"family", "degrees", "noise_bounds",
                                  "claimed_delta_scale"}, "oracle")
    oracle = OracleSpec(
        family=oracle_data.get("family", "noisy_gradient"),
        degrees=tuple(float(q) for q in oracle_data.get("degrees", (0.0, 0.5, 1.0))),
        noise_bounds=tuple(float(d) for d in oracle_data.get("noise_bounds", (0.1, 1.0, 3.0))),
        claimed_delta_scale=float(oracle_data.get("claimed_delta_scale", 1.0)),
    )
    if oracle.family != "noisy_gradient":
        raise ConfigError(f"unsupported oracle family {oracle.family!r}")
    if not oracle.degrees or not oracle.noise_bounds:
        raise ConfigError("degrees and noise_bounds must be nonempty")
    for q in oracle.degrees:
        if not 0.0 <= q <= 1.0:
            raise ConfigError("noisy-gradient degrees must lie in [0, 1]")
    for bound in oracle.noise_bounds:
        if bound < 0.0:
            raise ConfigError("noise_bounds must be nonnegative")
    if oracle.claimed_delta_scale <= 0.0:
        raise ConfigError("claimed_delta_scale must be positive")

    solver_data = data.get("solver", {})
    _reject_unknown(solver_data, {"algorithm", "iterations", "step_scale", "beta", "zeta"},
                    "solver")
    solver = SolverSpec(
        algorithm=solver_data.get("algorithm", "prox_gradient"),
        iterations=int(solver_data.get("iterations", 5000)),
        step_scale=float(solver_data.get("step_scale", 0.5)),
        beta=float(solver_data.get("beta", 0.0)),
        zeta=float(solver_data.get("zeta", 0.0)),
    )
    if solver.algorithm != "prox_gradient":
        raise ConfigError(f"unsupported algorithm {solver.algorithm!r}")
    if solver.iterations < 1:
        raise ConfigError("iterations must be positive")
    if not 0.0 < solver.step_scale <= 1.0:
        raise ConfigError("step_scale must lie in (0, 1]")
    if not 0.0 <= solver.beta < 1.0 or not 0.0 <= solver.zeta < 1.0:
        raise ConfigError("beta and zeta must lie in [0, 1)")

    repeats = int(data.get("repeats", 1))
    if repeats < 1:
        raise ConfigError("repeats must be positive")
    worst = int(data.get("worst_case_directions", 0))
    if worst < 0:
        raise ConfigError("worst_case_directions must be nonnegative")
    return ExperimentConfig(version=CONFIG_VERSION, output_dir=str(data["output_dir"]),
                            problem=problem, oracle=oracle, solver=solver,
                            repeats=repeats, master_seed=int(data.get("master_seed", 0)),
                            worst_case_directions=worst)


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(data)


def fig1_config(output_dir, iterations=5000, repeats=5, master_seed=0):
    """The bundled benchmark preset: canonical instance, full degree/noise grid."""
    return ExperimentConfig(version=CONFIG_VERSION, output_dir=str(output_dir),
                            problem=ProblemSpec(), oracle=OracleSpec(),
                            solver=SolverSpec(iterations=int(iterations)),
                            repeats=int(repeats), master_seed=int(master_seed))


def cell_seed(master_seed, degree, noise_bound, repeat):
    """Content-addressed seed for one grid cell.

    Keyed by the cell's own coordinates (scaled to integers) rather than by
    its position in the grid, so inserting or removing sibling cells never
    changes the randomness of existing ones.
    """
    return np.random.SeedSequence([int(master_seed), int(round(float(degree) * 1e6)),
                                   int(round(float(noise_bound) * 1e6)), int(repeat)])


def plateau_estimate(values, fraction=0.1):
    """Mean of the trailing fraction of a series; the empirical noise floor."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    tail = max(1, int(round(fraction * values.size)))
    return float(values[-tail:].mean())


@dataclass
class CellResult:
    """Slimmed-down outcome of one (degree, noise, repeat) cell."""

    degree: float
    noise_bound: float
    repeat: int
    seed_label: str
    status: str                     # "ok" or "diverged"
    f0: float
    objective: Optional[np.ndarray]     # (K,) value at the pre-step iterate
    gm_sq: Optional[np.ndarray]
    min_gm_sq: Optional[np.ndarray]
    alpha: Optional[np.ndarray]
    delta: Optional[np.ndarray]
    bound: np.ndarray
    wall_time: float

    @property
    def plateau(self):
        return plateau_estimate(self.min_gm_sq) if self.status == "ok" else float("nan")

    @property
    def bound_plateau(self):
        return plateau_estimate(self.bound)

    @property
    def dominated(self):
        if self.status != "ok":
            return False
        return bool(np.all(self.min_gm_sq <= self.bound))

    @property
    def trace_filename(self):
        return f"trace_q{self.degree:g}_delta{self.noise_bound:g}_rep{self.repeat}.csv"


def _cell_setup(problem, config, degree, noise_bound):
    lip = problem.lipschitz
    diameter = 2.0 * problem.radius
    delta_eff = float(noise_bound) * diameter ** (1.0 - float(degree))
    # exact cells get rho = 0 so the step is 1/L regardless of the degree
    rho = 0.0 if noise_bound == 0.0 else lip
    cfg = ScheduleConfig(lipschitz=lip, rho=rho, degree=float(degree), delta0=delta_eff,
                         max_iters=config.solver.iterations, beta=config.solver.beta,
                         zeta=config.solver.zeta, step_scale=config.solver.step_scale)
    oracle = NoisyGradientOracle(problem, float(noise_bound), degree=float(degree),
                                 diameter=diameter)
    h = ProxFunction.l1_ball(problem.radius)
    return cfg, oracle, h, delta_eff


def _cell_bound(problem, config, degree, delta_eff, f0):
    ks = np.arange(config.solver.iterations, dtype=float)
    return rates.bound_nonconvex_const(problem.lipschitz, float(degree), delta_eff,
                                       f0 - problem.f_lower, ks)


def _seed_label(config, degree, noise_bound, repeat):
    return (f"{config.master_seed}-{int(round(float(degree) * 1e6))}"
            f"-{int(round(float(noise_bound) * 1e6))}-{repeat}")


def run_cell(problem, config, degree, noise_bound, repeat):
    """One sweep cell: seeded run plus its theoretical bound curve."""
    rng = np.random.default_rng(cell_seed(config.master_seed, degree, noise_bound, repeat))
    cfg, oracle, h, delta_eff = _cell_setup(problem, config, degree, noise_bound)
    x0 = np.zeros(problem.dim)
    f0 = problem.value(x0) + h.value(x0)
    bound = _cell_bound(problem, config, degree, delta_eff, f0)
    label = _seed_label(config, degree, noise_bound, repeat)
    start = time.perf_counter()
    try:
        trace = prox_gradient(problem.value, oracle, h, cfg, x0, rng=rng)
    except DivergenceError:
        return CellResult(degree=float(degree), noise_bound=float(noise_bound),
                          repeat=repeat, seed_label=label, status="diverged", f0=f0,
                          objective=None, gm_sq=None, min_gm_sq=None, alpha=None,
                          delta=None, bound=bound, wall_time=time.perf_counter() - start)
    return CellResult(degree=float(degree), noise_bound=float(noise_bound),
                      repeat=repeat, seed_label=label, status="ok", f0=f0,
                      objective=trace.objective[:-1].copy(), gm_sq=trace.gm_sq,
                      min_gm_sq=trace.min_gm_sq, alpha=trace.alpha, delta=trace.delta,
                      bound=bound, wall_time=time.perf_counter() - start)


def _write_cell_csv(path, cell):
    header = "k,f,gm_sq,min_gm_sq,alpha,delta_k,bound"
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(len(cell.gm_sq)):
            fh.write(f"{k},{cell.objective[k]:.17g},{cell.gm_sq[k]:.17g},"
                     f"{cell.min_gm_sq[k]:.17g},{cell.alpha[k]:.17g},"
                     f"{cell.delta[k]:.17g},{cell.bound[k]:.17g}\n")


def _write_bounds_csv(path, cells):
    seen = set()
    with open(path, "w", newline="\n") as fh:
        fh.write("q,delta,k,bound\n")
        for cell in cells:
            key = (cell.degree, cell.noise_bound)
            if key in seen:
                continue  # the bound does not depend on the repeat
            seen.add(key)
            for k, value in enumerate(cell.bound):
                fh.write(f"{cell.degree:.17g},{cell.noise_bound:.17g},{k},{value:.17g}\n")


def _write_summary_csv(path, cells):
    header = ("q,delta,repeat,seed,status,f0,final_f,final_min_gm_sq,"
              "plateau,bound_plateau,dominated")
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for cell in cells:
            if cell.status == "ok":
                final_f = f"{cell.objective[-1]:.17g}"
                final_min = f"{cell.min_gm_sq[-1]:.17g}"
                plateau = f"{cell.plateau:.17g}"
                dominated = str(cell.dominated).lower()
            else:
                final_f = final_min = plateau = "nan"
                dominated = ""
            fh.write(f"{cell.degree:.17g},{cell.noise_bound:.17g},{cell.repeat},"
                     f"{cell.seed_label},{cell.status},{cell.f0:.17g},{final_f},"
                     f"{final_min},{plateau},{cell.bound_plateau:.17g},{dominated}\n")


def _grid(config):
    return [(q, d, r) for q in config.oracle.degrees
            for d in config.oracle.noise_bounds
            for r in range(config.repeats)]


def _map_cells(worker, cells):
    workers = int(os.environ.get("PROXIQ_WORKERS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(worker, cells))
    return [worker(cell) for cell in cells]


def run_experiment(config):
    """Run the full (degree, noise, repeat) grid and write the result bundle.

    Writes one trace CSV per successful cell, the bound curves, and a
    summary with per-cell plateau and domination flags.  A diverged cell is
    reported in the summary and skipped in the trace output; its siblings
    are unaffected.  Returns the CellResults in grid order.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = generate_logsum_instance(config.problem.n, config.problem.N,
                                       config.problem.radius, config.problem.noise_level,
                                       config.problem.seed)
    problem.lipschitz  # materialize the cached constant before threads share it
    results = _map_cells(lambda cell: run_cell(problem, config, *cell), _grid(config))
    for cell in results:
        if cell.status == "ok":
            _write_cell_csv(out / cell.trace_filename, cell)
    _write_bounds_csv(out / "bound_q_delta.csv", results)
    _write_summary_csv(out / "summary.csv", results)
    return results


def run_worst_case_cell(problem, config, degree, noise_bound, repeat):
    """Adversarial variant of one cell: per step, the noise direction that
    moves the iterate farthest wins among m candidate draws.

    The first candidate consumes the generator exactly like the plain run,
    so m = 1 reproduces run_cell bit for bit.
    """
    m = config.worst_case_directions
    rng = np.random.default_rng(cell_seed(config.master_seed, degree, noise_bound, repeat))
    cfg, oracle, h, delta_eff = _cell_setup(problem, config, degree, noise_bound)
    x = np.zeros(problem.dim)
    f0 = problem.value(x) + h.value(x)
    bound = _cell_bound(problem, config, degree, delta_eff, f0)
    label = _seed_label(config, degree, noise_bound, repeat)
    iters = config.solver.iterations
    objective = np.empty(iters)
    gm_sq = np.empty(iters)
    alpha_arr = np.empty(iters)
    delta_arr = np.empty(iters)
    ceiling = f0 + 1e6 * (1.0 + abs(f0))
    start = time.perf_counter()
    lip = problem.lipschitz
    status = "ok"
    for k in range(iters):
        delta_k = cfg.delta_at(k)
        noise_scale = oracle.noise_for(delta_k)
        alpha_k = cfg.alpha_at(k, lip)
        grad = problem.gradient(x)
        objective[k] = problem.value(x) + h.value(x)
        best = None
        best_move_sq = -1.0
        for _ in range(m):
            noisy = grad + bounded_noise(rng, x.size, noise_scale)
            cand = prox_apply(h, alpha_k, x - alpha_k * noisy)
            step = cand - x
            move_sq = float(step @ step)  # same expression as the solver, so m=1 is bitwise
            if move_sq > best_move_sq:
                best_move_sq = move_sq
                best = cand
        gm_sq[k] = best_move_sq / alpha_k ** 2
        alpha_arr[k] = alpha_k
        delta_arr[k] = delta_k
        x = best
        f = problem.value(x) + h.value(x)
        if not np.isfinite(f) or f > ceiling:
            status = "diverged"
            objective = objective[:k + 1]
            gm_sq, alpha_arr, delta_arr = gm_sq[:k + 1], alpha_arr[:k + 1], delta_arr[:k + 1]
            break
    wall = time.perf_counter() - start
    if status == "diverged":
        return CellResult(degree=float(degree), noise_bound=float(noise_bound),
                          repeat=repeat, seed_label=label, status=status, f0=f0,
                          objective=None, gm_sq=None, min_gm_sq=None, alpha=None,
                          delta=None, bound=bound, wall_time=wall)
    return CellResult(degree=float(degree), noise_bound=float(noise_bound),
                      repeat=repeat, seed_label=label, status=status, f0=f0,
                      objective=objective, gm_sq=gm_sq,
                      min_gm_sq=np.minimum.accumulate(gm_sq), alpha=alpha_arr,
                      delta=delta_arr, bound=bound, wall_time=wall)


def run_worst_case(config):
    """Adversarial counterpart of run_experiment; outputs carry a worst_ prefix."""
    if config.worst_case_directions < 1:
        raise ConfigError("worst_case_directions must be at least 1 for a worst-case run")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = generate_logsum_instance(config.problem.n, config.problem.N,
                                       config.problem.radius, config.problem.noise_level,
                                       config.problem.seed)
    problem.lipschitz
    results = _map_cells(lambda cell: run_worst_case_cell(problem, config, *cell),
                         _grid(config))
    for cell in results:
        if cell.status == "ok":
            _write_cell_csv(out / ("worst_" + cell.trace_filename), cell)
    _write_summary_csv(out / "worst_summary.csv", results)
    return results


class _ScaledClaim:
    """Wrapper reporting a scaled accuracy in the certificate.

    With scale < 1 the claim understates the true error, which the
    certifier is expected to refute.
    """

    def __init__(self, inner, scale):
        self.inner = inner
        self.scale = float(scale)
        self.degree = inner.degree

    def evaluate(self, x, rng=None, delta=None):
        ev = self.inner.evaluate(x, rng=rng, delta=delta)
        cert = ev.certificate
        scaled = OracleCertificate(delta=cert.delta * self.scale, lipschitz=cert.lipschitz,
                                   degree=cert.degree,
                                   convex_lower_bound=cert.convex_lower_bound)
        return OracleEval(point=ev.point, value=ev.value, gradient=ev.gradient,
                          certificate=scaled)


def ball_pair_sampler(radius, dim):
    """Pairs in the l1 ball mixing global and near-collocated scales.

    Half the pairs are independent uniform draws; the other half place x a
    log-uniform distance from y, because certificate violations with a
    small claimed delta only show up at short range where the quadratic
    term cannot mask them.
    """
    log_lo, log_hi = -4.0, float(np.log10(2.0 * radius))

    def sample(rng):
        y = sample_l1_ball(rng, dim, radius)
        if rng.random() < 0.5:
            x = sample_l1_ball(rng, dim, radius)
        else:
            direction = rng.standard_normal(dim)
            direction /= np.linalg.norm(direction)
            r = 10.0 ** rng.uniform(log_lo, log_hi)
            x = project_l1_ball(y + r * direction, radius)
        return x, y

    return sample


def certify_command(config, pairs=1000, tolerance=1e-7):
    """Check every grid cell's oracle certificate on sampled pairs.

    Writes certification.txt into the output directory, one line per
    (degree, noise) cell plus a verdict line.  Returns True when every cell
    certified.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = generate_logsum_instance(config.problem.n, config.problem.N,
                                       config.problem.radius, config.problem.noise_level,
                                       config.problem.seed)
    sampler = ball_pair_sampler(problem.radius, problem.dim)
    lines = []
    all_ok = True
    for degree in config.oracle.degrees:
        for noise_bound in config.oracle.noise_bounds:
            oracle = NoisyGradientOracle(problem, float(noise_bound), degree=float(degree),
                                         diameter=2.0 * problem.radius)
            if config.oracle.claimed_delta_scale != 1.0:
                oracle = _ScaledClaim(oracle, config.oracle.claimed_delta_scale)
            rng = np.random.default_rng(cell_seed(config.master_seed, degree,
                                                  noise_bound, 7878787))
            report = certify_oracle(oracle, problem.value, sampler, pairs=pairs,
                                    tolerance=tolerance, rng=rng)
            all_ok = all_ok and report.certified
            lines.append(f"q={degree:g} delta={noise_bound:g} {report.summary()}")
            if not report.certified and report.worst_pair is not None:
                x_bad, y_bad = report.worst_pair
                lines.append(f"  worst pair: x={np.array2string(x_bad, precision=6)}"
                             f" y={np.array2string(y_bad, precision=6)}")
    lines.append("all certified" if all_ok else "REFUTED")
    with open(out / "certification.txt", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return all_ok


def rates_command(kind, parameters, ks, path):
    """Sample one named theoretical curve and write it as CSV."""
    curve = rates.sample_curve(kind, parameters, ks)
    curve.write_csv(path)
    return curve
