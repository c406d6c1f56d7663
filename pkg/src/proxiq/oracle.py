"""Inexact first-order oracles with a tunable error degree.

An oracle for a function F answers a query at y with the exact value F(y)
and a vector g approximating the gradient.  The answer carries a
certificate (delta, L, q) claiming that for every feasible x

    F(x) - F(y) - <g, x - y>  <=  (L/2)*||x - y||**2 + delta*||x - y||**q.

The degree q in [0, 2) controls how the error term scales with distance:
q = 0 is a flat error budget, larger q makes the error fade near the query
point, which buys better convergence guarantees downstream.  Certificates
may additionally claim a convex lower bound, meaning the linearization
never overshoots F.

Besides the abstract certificate this module provides several constructive
oracle families (additive gradient noise, evaluation at shifted points,
mini-batch subsampling, approximate inner maximization, weakly smooth
functions), the AM-GM split used by the solvers, and an empirical
certifier that hunts for violating point pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class OracleCertificate:
    """Error certificate (delta, L, q) attached to an oracle answer.

    convex_lower_bound additionally claims 0 <= F(x) - F(y) - <g, x - y>
    for all feasible x, i.e. g is a true subgradient of a convex F.
    """

    delta: float
    lipschitz: float
    degree: float
    convex_lower_bound: bool = False

    def __post_init__(self):
        if not 0.0 <= self.degree < 2.0:
            raise ValueError("degree must lie in [0, 2)")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.lipschitz <= 0.0:
            raise ValueError("lipschitz must be positive")


@dataclass(frozen=True)
class OracleEval:
    """One oracle answer: exact value, approximate gradient, certificate."""

    point: np.ndarray
    value: float
    gradient: np.ndarray
    certificate: OracleCertificate

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("oracle value is not finite")
        if self.gradient.shape != self.point.shape:
            raise ValueError("gradient and point shapes differ")
        if not np.all(np.isfinite(self.gradient)):
            raise ValueError("oracle gradient has non-finite entries")


def majorize_amgm(delta, degree, rho):
    """Split the error term delta*r**q into a quadratic plus a constant.

    Weighted AM-GM gives, for every r >= 0 and every rho > 0,

        delta*r**q  <=  (q*rho/2)*r**2 + (2-q)*delta**(2/(2-q)) / (2*rho**(q/(2-q))).

    Returns the pair (quadratic coefficient, additive constant).  At q = 0
    the split degenerates to (0, delta) and rho is irrelevant.
    """
    q = float(degree)
    if not 0.0 <= q < 2.0:
        raise ValueError("degree must lie in [0, 2)")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    if q == 0.0:
        return 0.0, float(delta)
    if rho <= 0.0:
        raise ValueError("rho must be positive when degree > 0")
    additive = (2.0 - q) * delta ** (2.0 / (2.0 - q)) / (2.0 * rho ** (q / (2.0 - q)))
    return 0.5 * q * rho, additive


def holder_smoothing_constant(holder_constant, exponent, degree, delta):
    """Smoothness constant certifying a weakly smooth function at accuracy delta.

    If the (sub)gradient of F is Holder continuous with constant H and
    exponent nu, then (H/(1+nu))*r**(1+nu) <= (L/2)*r**2 + delta*r**q holds
    for all r >= 0 with

        L(delta) = 2*lam * (H/(1+nu))**(1/lam) * ((1-lam)/delta)**(1/lam - 1),
        lam = (1+nu-q)/(2-q),

    and this L is the smallest such constant (the AM-GM split is tight).
    At nu = 1 the function is plainly smooth, L = H, and delta is ignored.
    Shrinking delta only ever increases L.
    """
    nu = float(exponent)
    q = float(degree)
    h = float(holder_constant)
    if not 0.0 <= nu <= 1.0:
        raise ValueError("exponent must lie in [0, 1]")
    if h <= 0.0:
        raise ValueError("holder_constant must be positive")
    if not 0.0 <= q < 1.0 + nu:
        raise ValueError("degree must lie in [0, 1 + exponent)")
    if nu == 1.0:
        return h
    if delta <= 0.0:
        raise ValueError("delta must be positive when exponent < 1")
    lam = (1.0 + nu - q) / (2.0 - q)
    base = (h / (1.0 + nu)) ** (1.0 / lam)
    return 2.0 * lam * base * ((1.0 - lam) / float(delta)) ** (1.0 / lam - 1.0)


def holder_smoothing_coefficient(holder_constant, exponent, degree):
    """Coefficient C with holder_smoothing_constant = C * delta**(-(1-nu)/(1+nu-q)).

    Splitting off the delta power lets rate formulas carry the delta
    dependence symbolically.  At nu = 1 the power is zero and C = H.
    """
    nu = float(exponent)
    q = float(degree)
    h = float(holder_constant)
    if not 0.0 <= nu <= 1.0:
        raise ValueError("exponent must lie in [0, 1]")
    if h <= 0.0:
        raise ValueError("holder_constant must be positive")
    if not 0.0 <= q < 1.0 + nu:
        raise ValueError("degree must lie in [0, 1 + exponent)")
    if nu == 1.0:
        return h
    lam = (1.0 + nu - q) / (2.0 - q)
    base = (h / (1.0 + nu)) ** (1.0 / lam)
    return 2.0 * lam * base * (1.0 - lam) ** (1.0 / lam - 1.0)


def bounded_noise(rng, dim, bound):
    """Random vector with Euclidean norm at most bound.

    The direction is standard normal; the norm equals the bound with
    probability 1/2 and is uniform on [0, bound] otherwise, so the worst
    case is exercised often.  A zero bound returns zeros without touching
    the generator, keeping exact runs bit-identical to noise-free code.
    """
    if bound < 0.0:
        raise ValueError("bound must be nonnegative")
    if bound == 0.0:
        return np.zeros(dim)
    if rng is None:
        raise ValueError("a generator is required to draw noise")
    direction = rng.standard_normal(dim)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return np.zeros(dim)
    radius = float(bound) if rng.random() < 0.5 else float(bound) * rng.random()
    return (radius / norm) * direction


def spectral_norm(operator, iters=200, tol=1e-10):
    """Largest singular value via power iteration on operator.T @ operator.

    Deterministic: starts from the normalized all-ones vector and runs a
    fixed maximum of iterations with a relative stopping tolerance.
    """
    a = np.asarray(operator, dtype=float)
    if a.ndim != 2:
        raise ValueError("operator must be a matrix")
    n = a.shape[1]
    v = np.ones(n) / math.sqrt(n)
    estimate = 0.0
    for _ in range(iters):
        w = a.T @ (a @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - estimate) <= tol * max(norm, 1.0):
            estimate = norm
            break
        estimate = norm
    return math.sqrt(estimate)


@dataclass(frozen=True)
class SaddleProblem:
    """Max-type objective F(x) = max_u { G(u) + <A u, x> } with quadratic G.

    G(u) = -(kappa/2)*||u - c||**2 is strongly concave, so the inner problem
    has the closed-form maximizer u(x) = c + A.T x / kappa.  This makes
    F(x) = <A c, x> + ||A.T x||**2 / (2 kappa), a convex smooth function
    with gradient A u(x) and smoothness constant ||A||**2 / kappa.
    """

    operator: np.ndarray
    concave_center: np.ndarray
    concavity: float
    inner_iterations: int = 1  # reserved for iterative inner solvers

    def __post_init__(self):
        if self.concavity <= 0.0:
            raise ValueError("concavity must be positive")
        if self.operator.shape[1] != self.concave_center.shape[0]:
            raise ValueError("operator and concave_center dimensions differ")
        if self.inner_iterations < 1:
            raise ValueError("inner_iterations must be positive")

    def maximizer(self, x):
        return self.concave_center + self.operator.T @ np.asarray(x, dtype=float) / self.concavity

    def value(self, x):
        x = np.asarray(x, dtype=float)
        atx = self.operator.T @ x
        return float((self.operator @ self.concave_center) @ x + atx @ atx / (2.0 * self.concavity))

    def gradient(self, x):
        return self.operator @ self.maximizer(x)

    @cached_property
    def lipschitz(self):
        return spectral_norm(self.operator) ** 2 / self.concavity


@dataclass(frozen=True)
class HolderFunction:
    """Function whose (sub)gradient is Holder continuous.

    ||g(x) - g(y)|| <= holder_constant * ||x - y||**exponent for all
    admissible subgradient selections.
    """

    exponent: float
    holder_constant: float
    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]
    convex: bool = True


def eval_noisy_gradient(problem, x, noise_norm_bound, rng, degree=1.0, diameter=None):
    """Gradient corrupted by additive noise with a hard norm cap.

    The natural certificate has degree 1 with delta equal to the noise
    bound.  On a domain of known diameter D the same answer also certifies
    any degree q in [0, 1] with delta scaled by D**(1-q), because
    ||x - y|| <= D there.  Degrees above 1 are not certifiable this way.
    """
    if noise_norm_bound < 0.0:
        raise ValueError("noise_norm_bound must be nonnegative")
    x = np.asarray(x, dtype=float)
    grad = problem.gradient(x) + bounded_noise(rng, x.size, noise_norm_bound)
    q = float(degree)
    if q == 1.0:
        delta = float(noise_norm_bound)
    else:
        if not 0.0 <= q < 1.0:
            raise ValueError("degree must lie in [0, 1] for a noisy-gradient oracle")
        if diameter is None:
            raise ValueError("degree < 1 needs a domain diameter to rescale delta")
        delta = float(noise_norm_bound) * float(diameter) ** (1.0 - q)
    cert = OracleCertificate(delta=delta, lipschitz=float(problem.lipschitz), degree=q)
    return OracleEval(point=x, value=float(problem.value(x)), gradient=grad, certificate=cert)


def eval_shifted_point(problem, x, shift_bound, rng):
    """Exact gradient evaluated at a point displaced by at most shift_bound.

    The value stays the exact F(x); only the gradient is off.  Smoothness
    turns the displacement into a degree-1 certificate with
    delta = L * shift_bound, keeping L itself unchanged.
    """
    if shift_bound < 0.0:
        raise ValueError("shift_bound must be nonnegative")
    x = np.asarray(x, dtype=float)
    shifted = x + bounded_noise(rng, x.size, shift_bound)
    lip = float(problem.lipschitz)
    cert = OracleCertificate(delta=lip * float(shift_bound), lipschitz=lip, degree=1.0)
    return OracleEval(point=x, value=float(problem.value(x)),
                      gradient=problem.gradient(shifted), certificate=cert)


def eval_minibatch(components, x, batch, scaling="mean",
                   claimed_delta=0.0, claimed_lipschitz=1.0, degree=1.0):
    """Subsampled gradient of a finite sum of component objectives.

    Under mean scaling the gradient is the batch average and the value is
    the exact mean of all components; sum scaling multiplies both by the
    number of components.  No certificate can be derived from the batch
    alone (the error is probabilistic), so the claimed constants are passed
    through and certify_oracle is the judge.
    """
    batch = [int(j) for j in batch]
    if not batch:
        raise ValueError("batch must be nonempty")
    n = len(components)
    for j in batch:
        if not 0 <= j < n:
            raise IndexError(f"component index {j} out of range for {n} components")
    if scaling not in ("mean", "sum"):
        raise ValueError("scaling must be 'mean' or 'sum'")
    x = np.asarray(x, dtype=float)
    grad = sum(components[j].gradient(x) for j in batch) / len(batch)
    value = sum(float(c.value(x)) for c in components) / n
    if scaling == "sum":
        grad = grad * n
        value = value * n
    cert = OracleCertificate(delta=float(claimed_delta), lipschitz=float(claimed_lipschitz),
                             degree=float(degree))
    return OracleEval(point=x, value=float(value), gradient=grad, certificate=cert)


def eval_saddle(saddle, x, inner_accuracy, rng=None, operator_norm=None):
    """Gradient through an approximately solved inner maximization.

    The inner problem is solved in closed form and the approximation error
    is injected deliberately: the returned gradient is A @ u with u within
    inner_accuracy of the true maximizer.  Certifies at degree 1 with
    delta = inner_accuracy * ||A||.  An exact inner solution makes the
    answer the true gradient of a convex function, so the certificate then
    claims the convex lower bound too.
    """
    if inner_accuracy < 0.0:
        raise ValueError("inner_accuracy must be nonnegative")
    x = np.asarray(x, dtype=float)
    u = saddle.maximizer(x)
    if inner_accuracy > 0.0:
        u = u + bounded_noise(rng, u.size, inner_accuracy)
    if operator_norm is None:
        operator_norm = spectral_norm(saddle.operator)
    cert = OracleCertificate(delta=float(inner_accuracy) * operator_norm,
                             lipschitz=operator_norm ** 2 / saddle.concavity,
                             degree=1.0,
                             convex_lower_bound=(inner_accuracy == 0.0))
    return OracleEval(point=x, value=saddle.value(x), gradient=saddle.operator @ u,
                      certificate=cert)


def eval_holder(holder, x, degree, delta):
    """Exact subgradient of a weakly smooth function, certified at degree q.

    Weak smoothness admits a certificate at any accuracy delta > 0 by
    inflating the smoothness constant via holder_smoothing_constant.  The
    certificate claims the convex lower bound when the function is convex.
    """
    x = np.asarray(x, dtype=float)
    lip = holder_smoothing_constant(holder.holder_constant, holder.exponent, degree, delta)
    cert = OracleCertificate(delta=float(delta), lipschitz=lip, degree=float(degree),
                             convex_lower_bound=holder.convex)
    return OracleEval(point=x, value=float(holder.value(x)),
                      gradient=np.asarray(holder.subgradient(x), dtype=float),
                      certificate=cert)


class ExactOracle:
    """Exact value and gradient wrapped in the oracle interface.

    The zero-delta certificate is valid at any degree, so the degree is
    whatever the caller wants to run with.
    """

    def __init__(self, problem, degree=1.0, convex_lower_bound=False):
        self.problem = problem
        self.degree = float(degree)
        self.convex_lower_bound = bool(convex_lower_bound)

    def evaluate(self, x, rng=None, delta=None):
        x = np.asarray(x, dtype=float)
        cert = OracleCertificate(delta=0.0, lipschitz=float(self.problem.lipschitz),
                                 degree=self.degree,
                                 convex_lower_bound=self.convex_lower_bound)
        return OracleEval(point=x, value=float(self.problem.value(x)),
                          gradient=self.problem.gradient(x), certificate=cert)


class NoisyGradientOracle:
    """Noisy-gradient family with the noise level as the accuracy knob.

    A delta override at call time is translated back into a noise bound, so
    a solver can drive a delta_k schedule without knowing the noise model.
    """

    def __init__(self, problem, noise_bound, degree=1.0, diameter=None):
        q = float(degree)
        if q != 1.0 and not 0.0 <= q < 1.0:
            raise ValueError("degree must lie in [0, 1] for a noisy-gradient oracle")
        if q != 1.0 and diameter is None:
            raise ValueError("degree < 1 needs a domain diameter")
        if noise_bound < 0.0:
            raise ValueError("noise_bound must be nonnegative")
        self.problem = problem
        self.noise_bound = float(noise_bound)
        self.degree = q
        self.diameter = None if diameter is None else float(diameter)

    def noise_for(self, delta):
        """Noise bound realizing a certificate accuracy delta at this degree."""
        if self.degree == 1.0:
            return float(delta)
        return float(delta) / self.diameter ** (1.0 - self.degree)

    def evaluate(self, x, rng=None, delta=None):
        bound = self.noise_bound if delta is None else self.noise_for(delta)
        return eval_noisy_gradient(self.problem, x, bound, rng,
                                   degree=self.degree, diameter=self.diameter)


class ShiftedPointOracle:
    """Shifted-point family; the shift radius is the accuracy knob."""

    degree = 1.0

    def __init__(self, problem, shift_bound):
        if shift_bound < 0.0:
            raise ValueError("shift_bound must be nonnegative")
        self.problem = problem
        self.shift_bound = float(shift_bound)

    def evaluate(self, x, rng=None, delta=None):
        shift = self.shift_bound if delta is None else float(delta) / float(self.problem.lipschitz)
        return eval_shifted_point(self.problem, x, shift, rng)


class MinibatchOracle:
    """Random fixed-size batches; the certificate constants are claimed.

    A full batch needs no generator and reproduces the exact (mean or sum)
    gradient.
    """

    def __init__(self, components, batch_size, scaling="mean",
                 claimed_delta=0.0, claimed_lipschitz=1.0, degree=1.0):
        if not 1 <= batch_size <= len(components):
            raise ValueError("batch_size out of range")
        self.components = list(components)
        self.batch_size = int(batch_size)
        self.scaling = scaling
        self.claimed_delta = float(claimed_delta)
        self.claimed_lipschitz = float(claimed_lipschitz)
        self.degree = float(degree)

    def evaluate(self, x, rng=None, delta=None):
        n = len(self.components)
        if self.batch_size == n:
            batch = range(n)
        else:
            if rng is None:
                raise ValueError("a generator is required to sample batches")
            batch = rng.choice(n, size=self.batch_size, replace=False)
        claimed = self.claimed_delta if delta is None else float(delta)
        return eval_minibatch(self.components, x, batch, scaling=self.scaling,
                              claimed_delta=claimed,
                              claimed_lipschitz=self.claimed_lipschitz,
                              degree=self.degree)


class SaddleOracle:
    """Approximate inner maximization; inner accuracy is the knob."""

    degree = 1.0

    def __init__(self, saddle, inner_accuracy):
        if inner_accuracy < 0.0:
            raise ValueError("inner_accuracy must be nonnegative")
        self.saddle = saddle
        self.inner_accuracy = float(inner_accuracy)
        self.operator_norm = spectral_norm(saddle.operator)

    def evaluate(self, x, rng=None, delta=None):
        acc = self.inner_accuracy if delta is None else float(delta) / self.operator_norm
        return eval_saddle(self.saddle, x, acc, rng, operator_norm=self.operator_norm)


class HolderOracle:
    """Weakly smooth family; the certificate adapts L to the requested delta."""

    def __init__(self, holder, degree, delta):
        self.holder = holder
        self.degree = float(degree)
        self.delta = float(delta)

    def evaluate(self, x, rng=None, delta=None):
        return eval_holder(self.holder, x, self.degree,
                           self.delta if delta is None else float(delta))


@dataclass
class CertificationReport:
    """Outcome of an empirical certificate check over sampled pairs."""

    certified: bool
    pairs: int
    tolerance: float
    max_violation: float
    worst_pair: Optional[tuple]
    lower_bound_checked: bool
    min_lower_slack: float
    worst_lower_pair: Optional[tuple]

    def summary(self):
        status = "certified" if self.certified else "REFUTED"
        line = f"{status}: {self.pairs} pairs, max upper violation {self.max_violation:.3e}"
        if self.lower_bound_checked:
            line += f", min lower slack {self.min_lower_slack:.3e}"
        return line


def certify_oracle(oracle, exact_value, domain_sampler, pairs=1000, tolerance=1e-7, rng=None):
    """Empirically test an oracle's certificates on sampled point pairs.

    For each sampled (x, y) the oracle answers at y and the claimed upper
    bound is checked at x against the exact objective.  When the
    certificate claims a convex lower bound, the linearization must also
    not overshoot.  The worst pair is reported either way, so a refutation
    comes with a concrete witness.
    """
    if pairs <= 0:
        raise ValueError("pairs must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    max_violation = -math.inf
    worst_pair = None
    lower_checked = False
    min_lower = math.inf
    worst_lower = None
    for _ in range(int(pairs)):
        x, y = domain_sampler(rng)
        ev = oracle.evaluate(y, rng=rng)
        cert = ev.certificate
        diff = np.asarray(x, dtype=float) - ev.point
        dist = float(np.linalg.norm(diff))
        gap = float(exact_value(x)) - ev.value - float(ev.gradient @ diff)
        violation = gap - 0.5 * cert.lipschitz * dist ** 2 - cert.delta * dist ** cert.degree
        if violation > max_violation:
            max_violation = violation
            worst_pair = (np.array(x, dtype=float, copy=True), ev.point.copy())
        if cert.convex_lower_bound:
            lower_checked = True
            if gap < min_lower:
                min_lower = gap
                worst_lower = (np.array(x, dtype=float, copy=True), ev.point.copy())
    certified = max_violation <= tolerance and (not lower_checked or min_lower >= -tolerance)
    return CertificationReport(certified=certified, pairs=int(pairs), tolerance=float(tolerance),
                               max_violation=float(max_violation), worst_pair=worst_pair,
                               lower_bound_checked=lower_checked,
                               min_lower_slack=float(min_lower) if lower_checked else math.nan,
                               worst_lower_pair=worst_lower)
