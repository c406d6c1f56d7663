"""Proximal gradient solvers driven by inexact oracles.

Three variants share the step x+ = prox_{alpha h}(x - alpha g):

* prox_gradient: fixed schedules for the step size and the oracle accuracy;
  works for nonconvex smooth parts.
* fast_prox_gradient: accelerated variant for convex smooth parts, mixing
  the prox step with an aggregated linear model anchored at x0.
* adaptive_prox_gradient: plain iteration whose quadratic majorization
  weight is retuned every step from a running optimistic estimate of the
  reachable objective gap.

All of them record a RunTrace with the squared gradient-mapping norm
||x_k - x_{k+1}||**2 / alpha_k**2 per step, the quantity the nonconvex
guarantees control.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .prox import prox_apply
from .rates import rho_opt_horizon


class DivergenceError(RuntimeError):
    """Objective blow-up or a retry loop that will not terminate."""


# start values of the momentum sequence, per rule
_THETA0 = {"equality_root": 1.0, "half_linear": 0.5}

# a run is declared divergent when f exceeds f(x0) by this relative margin
_BLOWUP_MARGIN = 1e6


@dataclass(frozen=True)
class ScheduleConfig:
    """Step and accuracy schedules shared by the solvers.

    alpha_k = step_scale / ((L_k + q*rho) * (k+1)**zeta) and
    delta_k = delta0 / (k+1)**(beta*(2-q)/2), with L_k taken from the
    oracle's certificate at step k.  step_scale in (0, 1] keeps the step at
    or below the 1/(L + q*rho) ceiling the guarantees assume.  rho may be 0
    only when no quadratic majorization is needed (degree 0 or exact runs).
    """

    lipschitz: float
    rho: float
    degree: float
    delta0: float
    max_iters: int
    beta: float = 0.0
    zeta: float = 0.0
    step_scale: float = 1.0

    def __post_init__(self):
        if self.lipschitz <= 0.0:
            raise ValueError("lipschitz must be positive")
        if not 0.0 <= self.degree < 2.0:
            raise ValueError("degree must lie in [0, 2)")
        if self.delta0 < 0.0:
            raise ValueError("delta0 must be nonnegative")
        if self.rho < 0.0:
            raise ValueError("rho must be nonnegative")
        if self.rho == 0.0 and self.degree > 0.0 and self.delta0 > 0.0:
            raise ValueError("rho must be positive when degree > 0 and delta0 > 0")
        if not 0.0 <= self.beta < 1.0 or not 0.0 <= self.zeta < 1.0:
            raise ValueError("beta and zeta must lie in [0, 1)")
        if not 0.0 < self.step_scale <= 1.0:
            raise ValueError("step_scale must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def delta_at(self, k):
        return self.delta0 / (k + 1.0) ** (self.beta * (2.0 - self.degree) / 2.0)

    def alpha_at(self, k, lipschitz=None):
        lip = self.lipschitz if lipschitz is None else lipschitz
        return self.step_scale / ((lip + self.degree * self.rho) * (k + 1.0) ** self.zeta)


@dataclass
class RunTrace:
    """Everything recorded along one solver run.

    Per-step arrays have length equal to the number of completed steps;
    iterates and objective carry one extra leading entry for x0.  The
    fast-method fields stay None for the other solvers.  For the fast
    method gm_sq is measured on the prox point y_k rather than x_{k+1}.
    """

    iterates: np.ndarray           # (K+1, n)
    objective: np.ndarray          # (K+1,) composite value f(x_k)
    alpha: np.ndarray              # (K,)
    delta: np.ndarray              # (K,) scheduled accuracy per step
    gm_sq: np.ndarray              # (K,) squared gradient-mapping norm
    min_gm_sq: np.ndarray          # (K,) running minimum of gm_sq
    cum_alpha_gm_sq: np.ndarray    # (K,) running sum of alpha_j*gm_sq_j
    adversarial: bool = False
    y_points: Optional[np.ndarray] = None
    z_points: Optional[np.ndarray] = None
    objective_y: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    a_weights: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None

    @property
    def steps(self):
        return len(self.gm_sq)

    def write_csv(self, path, bound=None):
        """One row per step: k,f,gm_sq,min_gm_sq,alpha,delta_k and optionally bound."""
        header = ["k", "f", "gm_sq", "min_gm_sq", "alpha", "delta_k"]
        if bound is not None:
            if len(bound) != self.steps:
                raise ValueError("bound column length does not match the trace")
            header.append("bound")
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for k in range(self.steps):
                row = [str(k), f"{self.objective[k]:.17g}", f"{self.gm_sq[k]:.17g}",
                       f"{self.min_gm_sq[k]:.17g}", f"{self.alpha[k]:.17g}",
                       f"{self.delta[k]:.17g}"]
                if bound is not None:
                    row.append(f"{bound[k]:.17g}")
                writer.writerow(row)


@dataclass
class AdaptiveState:
    """Snapshot of the adaptive solver's target at one accepted step."""

    epsilon: float
    f_best: float
    retry_count: int


def _check_start(oracle, config, h, x0):
    if float(oracle.degree) != float(config.degree):
        raise ValueError("oracle degree does not match the schedule degree")
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim != 1:
        raise ValueError("x0 must be a vector")
    if not h.contains(x):
        raise ValueError("x0 lies outside dom h")
    return x


def prox_gradient(objective, oracle, h, config, x0, rng=None):
    """Proximal gradient iteration with scheduled inexact oracle calls.

    objective is the exact smooth part F (h contributes through its prox
    and value).  Each step queries the oracle at accuracy delta_k and takes
    the step size from the certificate's smoothness constant.  Raises
    DivergenceError if the composite value blows up or turns non-finite,
    which in practice means a certificate lied.
    """
    x = _check_start(oracle, config, h, x0)
    iters = config.max_iters
    iterates = np.empty((iters + 1, x.size))
    iterates[0] = x
    objective_vals = np.empty(iters + 1)
    alpha_arr = np.empty(iters)
    delta_arr = np.empty(iters)
    gm_sq = np.empty(iters)
    f0 = float(objective(x)) + h.value(x)
    objective_vals[0] = f0
    ceiling = f0 + _BLOWUP_MARGIN * (1.0 + abs(f0))
    for k in range(iters):
        delta_k = config.delta_at(k)
        ev = oracle.evaluate(x, rng=rng, delta=delta_k)
        alpha_k = config.alpha_at(k, ev.certificate.lipschitz)
        nxt = prox_apply(h, alpha_k, x - alpha_k * ev.gradient)
        step = nxt - x
        gm_sq[k] = float(step @ step) / alpha_k ** 2
        alpha_arr[k] = alpha_k
        delta_arr[k] = delta_k
        x = nxt
        iterates[k + 1] = x
        f = float(objective(x)) + h.value(x)
        objective_vals[k + 1] = f
        if not math.isfinite(f) or f > ceiling:
            raise DivergenceError(f"objective blew up at step {k + 1}: f = {f!r}")
    return RunTrace(iterates=iterates, objective=objective_vals, alpha=alpha_arr,
                    delta=delta_arr, gm_sq=gm_sq,
                    min_gm_sq=np.minimum.accumulate(gm_sq),
                    cum_alpha_gm_sq=np.cumsum(alpha_arr * gm_sq))


def theta_next(a_prev, lipschitz_next, rule="equality_root"):
    """Next weight of the momentum sequence given the accumulated weight.

    equality_root takes the largest root of theta**2/L = a_prev + theta/L,
    the fastest growth the convergence argument allows.  half_linear solves
    the same recursion tightened by a factor 4, which for constant L
    reproduces the linear sequence theta_k = (k+1)/2.
    """
    if a_prev <= 0.0:
        raise ValueError("a_prev must be positive")
    if lipschitz_next <= 0.0:
        raise ValueError("lipschitz_next must be positive")
    if rule == "equality_root":
        return (1.0 + math.sqrt(1.0 + 4.0 * lipschitz_next * a_prev)) / 2.0
    if rule == "half_linear":
        return (1.0 + math.sqrt(1.0 + 16.0 * lipschitz_next * a_prev)) / 4.0
    raise ValueError(f"unknown theta rule {rule!r}")


def fast_prox_gradient(objective, oracle, h, config, x0, theta_rule="equality_root", rng=None):
    """Accelerated proximal gradient with an aggregated model sequence.

    Alongside the prox point y_k the method maintains z_k, the minimizer of
    the accumulated linear models plus half the squared distance to x0, and
    steps to x_{k+1} = tau_k*z_k + (1-tau_k)*y_k with the vanishing weight
    tau_k = theta_{k+1}/(A_{k+1}*L_{k+1}) on the model point.  (Putting the
    heavy weight on z instead makes the iteration chase the aggregated
    model and diverge, exact oracle included.)  The objective guarantees
    are stated at the y points and assume a convex smooth part whose oracle
    answers never overshoot the linearization; the run itself does not
    enforce that claim.  The whole recursion (steps, weights, theta) runs
    on the working constant L_k + q*rho, the smoothness of the quadratic
    majorization the guarantees are proved through; the upcoming constant
    is assumed equal to the current one when sizing theta.
    """
    if theta_rule not in _THETA0:
        raise ValueError(f"unknown theta rule {theta_rule!r}")
    x = _check_start(oracle, config, h, x0)
    origin = x.copy()
    iters = config.max_iters
    n = x.size
    iterates = np.empty((iters + 1, n))
    iterates[0] = x
    y_points = np.empty((iters, n))
    z_points = np.empty((iters, n))
    objective_vals = np.empty(iters + 1)
    objective_y = np.empty(iters)
    alpha_arr = np.empty(iters)
    delta_arr = np.empty(iters)
    gm_sq = np.empty(iters)
    thetas = np.empty(iters)
    a_arr = np.empty(iters)
    taus = np.empty(iters)
    f0 = float(objective(x)) + h.value(x)
    objective_vals[0] = f0
    ceiling = f0 + _BLOWUP_MARGIN * (1.0 + abs(f0))
    theta = _THETA0[theta_rule]
    a_weight = 0.0
    model_sum = np.zeros(n)
    for k in range(iters):
        delta_k = config.delta_at(k)
        ev = oracle.evaluate(x, rng=rng, delta=delta_k)
        lip = ev.certificate.lipschitz + config.degree * config.rho
        if k == 0:
            a_weight = theta / lip
        alpha_k = config.alpha_at(k, ev.certificate.lipschitz)
        y = prox_apply(h, alpha_k, x - alpha_k * ev.gradient)
        model_sum += (theta / lip) * ev.gradient
        z = prox_apply(h, 1.0, origin - model_sum)
        theta_new = theta_next(a_weight, lip, theta_rule)
        a_new = a_weight + theta_new / lip
        tau = theta_new / (a_new * lip)
        if not 0.0 < tau <= 1.0:
            raise ValueError(f"tau = {tau!r} outside (0, 1]: momentum rule violated")
        step = y - x
        gm_sq[k] = float(step @ step) / alpha_k ** 2
        thetas[k] = theta
        a_arr[k] = a_weight
        taus[k] = tau
        alpha_arr[k] = alpha_k
        delta_arr[k] = delta_k
        x = tau * z + (1.0 - tau) * y
        iterates[k + 1] = x
        y_points[k] = y
        z_points[k] = z
        f = float(objective(x)) + h.value(x)
        fy = float(objective(y)) + h.value(y)
        objective_vals[k + 1] = f
        objective_y[k] = fy
        if not (math.isfinite(f) and math.isfinite(fy)) or f > ceiling:
            raise DivergenceError(f"objective blew up at step {k + 1}: f = {f!r}")
        theta = theta_new
        a_weight = a_new
    return RunTrace(iterates=iterates, objective=objective_vals, alpha=alpha_arr,
                    delta=delta_arr, gm_sq=gm_sq,
                    min_gm_sq=np.minimum.accumulate(gm_sq),
                    cum_alpha_gm_sq=np.cumsum(alpha_arr * gm_sq),
                    y_points=y_points, z_points=z_points, objective_y=objective_y,
                    theta=thetas, a_weights=a_arr, tau=taus)


def adaptive_prox_gradient(objective, oracle, h, config, x0, epsilon0,
                           rng=None, max_doublings=64):
    """Plain iteration with the majorization weight retuned on the fly.

    The horizon-optimal weight needs the gap f(x0) - f_inf, which is
    unknown; the solver substitutes f(x0) - f_best where f_best sits an
    optimistic slack epsilon below the best value seen.  Whenever a new
    iterate beats f_best, the slack doubles and the step is recomputed with
    the same oracle answer; after each accepted step the slack halves and
    the target is refreshed.  Returns (trace, history) where history holds
    one AdaptiveState per accepted step.  Requires degree in [1, 2) (the
    weight formula) and flat schedules.
    """
    if not 1.0 <= config.degree < 2.0:
        raise ValueError("the adaptive variant needs degree in [1, 2)")
    if config.beta != 0.0 or config.zeta != 0.0:
        raise ValueError("the adaptive variant uses flat schedules")
    if epsilon0 <= 0.0:
        raise ValueError("epsilon0 must be positive")
    if max_doublings < 1:
        raise ValueError("max_doublings must be positive")
    x = _check_start(oracle, config, h, x0)
    iters = config.max_iters
    iterates = np.empty((iters + 1, x.size))
    iterates[0] = x
    objective_vals = np.empty(iters + 1)
    alpha_arr = np.empty(iters)
    delta_arr = np.empty(iters)
    gm_sq = np.empty(iters)
    history: List[AdaptiveState] = []
    f0 = float(objective(x)) + h.value(x)
    objective_vals[0] = f0
    ceiling = f0 + _BLOWUP_MARGIN * (1.0 + abs(f0))
    epsilon = float(epsilon0)
    f_min = f0
    f_best = f_min - epsilon
    for k in range(iters):
        delta_k = config.delta0
        ev = oracle.evaluate(x, rng=rng, delta=delta_k)
        lip = ev.certificate.lipschitz
        retries = 0
        while True:
            gap = f0 - f_best
            rho = rho_opt_horizon(lip, config.degree, delta_k, gap, k) if delta_k > 0.0 else 0.0
            alpha_k = config.step_scale / (lip + config.degree * rho)
            nxt = prox_apply(h, alpha_k, x - alpha_k * ev.gradient)
            f_next = float(objective(nxt)) + h.value(nxt)
            if not math.isfinite(f_next) or f_next > ceiling:
                raise DivergenceError(f"objective blew up at step {k + 1}: f = {f_next!r}")
            if f_next >= f_best:
                break
            retries += 1
            if retries > max_doublings:
                raise DivergenceError(
                    f"adaptive target chase exceeded {max_doublings} doublings at step {k}")
            epsilon *= 2.0
            f_best = f_min - epsilon
        history.append(AdaptiveState(epsilon=epsilon, f_best=f_best, retry_count=retries))
        step = nxt - x
        gm_sq[k] = float(step @ step) / alpha_k ** 2
        alpha_arr[k] = alpha_k
        delta_arr[k] = delta_k
        x = nxt
        iterates[k + 1] = x
        objective_vals[k + 1] = f_next
        f_min = min(f_min, f_next)
        epsilon /= 2.0
        f_best = f_min - epsilon
    trace = RunTrace(iterates=iterates, objective=objective_vals, alpha=alpha_arr,
                     delta=delta_arr, gm_sq=gm_sq,
                     min_gm_sq=np.minimum.accumulate(gm_sq),
                     cum_alpha_gm_sq=np.cumsum(alpha_arr * gm_sq))
    return trace, history


def ergodic_average(trace, k):
    """Uniform average of the iterates x_1 .. x_{k+1} of a recorded run."""
    if not 0 <= k < trace.steps:
        raise ValueError("k outside the recorded range")
    return trace.iterates[1:k + 2].mean(axis=0)


def stationarity_gap(trace, oracle_kind, lipschitz=None, noise_bound=0.0,
                     holder_constant=None, holder_exponent=None):
    """Per-step bound on the distance from 0 to the composite subdifferential.

    Evaluated at the post-step iterates.  The gradient-mapping norm alone is
    not a valid stationarity measure under an inexact oracle; the correction
    depends on the oracle family:

    * noisy_gradient: gm + L*||x_{k+1} - x_k|| + noise_bound,
    * holder: gm + H*||x_{k+1} - x_k||**nu (exact subgradient answers).
    """
    gm = np.sqrt(trace.gm_sq)
    move = trace.alpha * gm
    if oracle_kind == "noisy_gradient":
        if lipschitz is None:
            raise ValueError("noisy_gradient needs the smoothness constant")
        return gm + lipschitz * move + float(noise_bound)
    if oracle_kind == "holder":
        if holder_constant is None or holder_exponent is None:
            raise ValueError("holder needs holder_constant and holder_exponent")
        return gm + holder_constant * move ** holder_exponent
    raise ValueError(f"unknown oracle kind {oracle_kind!r}")
