"""Hybrid predator-prey model definitions.

A model is the triple of evaluators (g, b, d): the prey drift, the predator
birth rate and the predator death rate, each a function of the prey
concentration x (real) and the predator count n (nonnegative integer).
:func:`predator_prey` builds the benchmark chemostat instance with Monod
consumption; :func:`validate_assumptions` certifies the structural
hypotheses (sign structure, sub-linear growth, dissipativity) numerically on
a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels

__all__ = [
    "ModelParams",
    "ModelSpec",
    "AssumptionReport",
    "predator_prey",
    "constant_consumption",
    "monod_mu",
    "drift_g",
    "birth_rate",
    "death_rate",
    "validate_assumptions",
    "default_grid",
]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the chemostat predator-prey family.

    Defaults are the benchmark values used throughout the test-suite and the
    bundled configuration: Monod consumption mu(x) = mu_max*x/(mu_half+x).
    """

    x_in: float = 7.0     # prey inflow concentration
    D: float = 0.1        # dilution / death rate
    V: float = 1.0        # volume
    alpha: float = 0.5    # prey-side conversion efficiency
    beta: float = 1.0     # predator-side conversion efficiency
    gamma: float = 1.0    # predator death ratio
    mu_max: float = 0.15  # consumption plateau
    mu_half: float = 1.0  # consumption half-saturation

    def __post_init__(self):
        for name in ("x_in", "D", "V", "alpha", "beta", "gamma", "mu_max", "mu_half"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ValueError(f"ModelParams.{name} must be strictly positive, got {v!r}")

    def as_kernel_vector(self) -> np.ndarray:
        return np.array(
            [self.x_in, self.D, self.V, self.alpha, self.beta,
             self.gamma, self.mu_max, self.mu_half],
            dtype=np.float64,
        )


def _check_x_nonneg(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    return x


def _check_n_nonneg(n):
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    return int(n)


def _mu_extended(x, params: ModelParams):
    """Monod consumption extended by zero to x <= 0 (drift stays defined on R)."""
    x = np.asarray(x, dtype=float)
    xc = np.maximum(x, 0.0)
    out = np.where(x > 0.0, params.mu_max * xc / (params.mu_half + xc), 0.0)
    return out if out.ndim else float(out)


def monod_mu(x, params: ModelParams):
    """Monod consumption mu(x) = mu_max*x/(mu_half+x); rejects negative x."""
    x = _check_x_nonneg(x)
    out = np.where(x > 0.0, params.mu_max * x / (params.mu_half + x), 0.0)
    return out if out.ndim else float(out)


def drift_g(x, n, params: ModelParams):
    """Prey drift D*(x_in - x) - (alpha/V)*mu(x)*n."""
    n = _check_n_nonneg(n)
    x = np.asarray(x, dtype=float)
    out = params.D * (params.x_in - x) - (params.alpha / params.V) * _mu_extended(x, params) * n
    return out if out.ndim else float(out)


def birth_rate(x, n, params: ModelParams):
    """Predator birth rate beta*mu(x)*n."""
    n = _check_n_nonneg(n)
    x = _check_x_nonneg(x)
    out = params.beta * _mu_extended(x, params) * n
    return out if out.ndim else float(out)


def death_rate(x, n, params: ModelParams):
    """Predator death rate gamma*D*n."""
    n = _check_n_nonneg(n)
    _check_x_nonneg(x)
    out = np.full_like(np.asarray(x, dtype=float), params.gamma * params.D * n)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModelSpec:
    """A hybrid model: drift g, birth rate b, death rate d as pure evaluators.

    The evaluators accept a scalar or ndarray x and a scalar nonnegative
    integer n, and must be cheap, pure and reentrant.  ``delta`` is the
    dissipativity rate of g in x (uniform contraction); ``kernel_kind`` and
    ``kernel_params`` expose the model to the compiled simulators and are set
    for the built-in families only (kernel_kind == -1 means the model can be
    analyzed but not run through the fast path).
    """

    params: ModelParams
    g: Callable = field(repr=False)
    b: Callable = field(repr=False)
    d: Callable = field(repr=False)
    delta: float = 0.0
    kernel_kind: int = -1
    name: str = "custom"

    def kernel_vector(self) -> np.ndarray:
        if self.kernel_kind < 0:
            raise ValueError(
                f"model {self.name!r} has no kernel-backed rate family; "
                "use predator_prey() or constant_consumption()"
            )
        return self.params.as_kernel_vector()

    def g_zero_bound(self, n_max: int) -> float:
        """sup of g(0, n) over n in 0..n_max."""
        return max(float(self.g(0.0, n)) for n in range(n_max + 1))


def predator_prey(params: ModelParams | None = None) -> ModelSpec:
    """The chemostat predator-prey model with Monod consumption."""
    p = params if params is not None else ModelParams()
    return ModelSpec(
        params=p,
        g=lambda x, n: drift_g(x, n, p),
        b=lambda x, n: params_birth(x, n, p),
        d=lambda x, n: params_death(x, n, p),
        delta=p.D,
        kernel_kind=_kernels.KIND_MONOD,
        name="predator_prey",
    )


def constant_consumption(params: ModelParams | None = None) -> ModelSpec:
    """Degenerate family with mu held constant at mu_max (any x).

    Jump rates from state n are then n*(beta*mu_max + gamma*D) regardless of
    x, which makes inter-jump times exactly exponential; used to test the
    schedulers against a known law.
    """
    p = params if params is not None else ModelParams()
    c = p.mu_max

    def g(x, n):
        x = np.asarray(x, dtype=float)
        out = p.D * (p.x_in - x) - (p.alpha / p.V) * c * n
        return out if out.ndim else float(out)

    def b(x, n):
        out = np.full_like(np.asarray(x, dtype=float), p.beta * c * n)
        return out if out.ndim else float(out)

    def d(x, n):
        out = np.full_like(np.asarray(x, dtype=float), p.gamma * p.D * n)
        return out if out.ndim else float(out)

    return ModelSpec(params=p, g=g, b=b, d=d, delta=p.D,
                     kernel_kind=_kernels.KIND_CONST_MU, name="constant_consumption")


# internal, non-validating evaluators used by ModelSpec closures (grids and
# simulators guarantee x >= 0 themselves; keep them exception-free and
# vectorized)
def params_birth(x, n, p: ModelParams):
    out = p.beta * _mu_extended(x, p) * n
    out = np.asarray(out)
    return out if out.ndim else float(out)


def params_death(x, n, p: ModelParams):
    out = np.full_like(np.asarray(x, dtype=float), p.gamma * p.D * n)
    return out if out.ndim else float(out)


@dataclass
class AssumptionReport:
    """Outcome of the numerical certification of the structural hypotheses."""

    dissipativity_rate_delta: float
    growth_constants: tuple[float, float, float]
    g_zero_bound: float
    violations: list[tuple[str, tuple]]

    @property
    def ok(self) -> bool:
        return not self.violations


def default_grid(x_max: float = 10.0, step: float = 0.01) -> np.ndarray:
    npts = int(round(x_max / step)) + 1
    return np.linspace(0.0, x_max, npts)


def validate_assumptions(model: ModelSpec, x_grid, n_max: int) -> AssumptionReport:
    """Certify the model hypotheses on a grid; violations are reported, not thrown.

    Checks, for n in 0..n_max and x in the grid:

    * rates are nonnegative, vanish identically at n = 0, and are positive
      for n >= 1 at positive x;
    * the summed rate b+d admits a fitted bound c1 + c2*n, and the x-Lipschitz
      modulus of b+d admits a fitted bound c1*(1 + c2*n + c3*n^2);
    * every adjacent secant slope of g(., n) is <= -delta for a fitted
      delta > 0 (strict dissipativity);
    * g(0, n) is positive and bounded, and g changes sign on the bracket
      [0, g_zero_bound/delta + 1] (unique positive root).
    """
    grid = np.asarray(x_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("x_grid must be a 1-d array with at least two points")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("x_grid must be strictly increasing and nonnegative")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    violations: list[tuple[str, tuple]] = []
    dx = np.diff(grid)
    pos = grid > 0

    sup_rate = np.zeros(n_max + 1)      # sup_x (b+d) per n
    lip = np.zeros(n_max + 1)           # max secant modulus of b+d per n
    slope_max = -np.inf                 # max secant slope of g over all n
    slope_witness = (0.0, 0)
    g_zero = np.zeros(n_max + 1)

    for n in range(n_max + 1):
        bv = np.asarray(model.b(grid, n), dtype=float)
        dv = np.asarray(model.d(grid, n), dtype=float)
        gv = np.asarray(model.g(grid, n), dtype=float)
        if not (np.all(np.isfinite(bv)) and np.all(np.isfinite(dv)) and np.all(np.isfinite(gv))):
            violations.append(("finite_rates", (float(grid[0]), n)))
            continue
        if n == 0:
            if np.any(bv != 0.0) or np.any(dv != 0.0):
                i = int(np.argmax((bv != 0.0) | (dv != 0.0)))
                violations.append(("rates_vanish_at_zero", (float(grid[i]), 0)))
        else:
            if np.any(bv < 0.0) or np.any(dv < 0.0):
                i = int(np.argmax((bv < 0.0) | (dv < 0.0)))
                violations.append(("rates_nonnegative", (float(grid[i]), n)))
            bad = pos & ((bv <= 0.0) | (dv <= 0.0))
            if np.any(bad):
                i = int(np.argmax(bad))
                violations.append(("rates_positive", (float(grid[i]), n)))
        tot = bv + dv
        sup_rate[n] = float(np.max(tot))
        lip[n] = float(np.max(np.abs(np.diff(bv)) / dx + np.abs(np.diff(dv)) / dx))
        slopes = np.diff(gv) / dx
        j = int(np.argmax(slopes))
        if slopes[j] > slope_max:
            slope_max = float(slopes[j])
            slope_witness = (float(grid[j]), n)
        g_zero[n] = float(model.g(0.0, n))

    delta = -slope_max
    if not (delta > 0):
        violations.append(("dissipativity", slope_witness))

    if np.any(g_zero <= 0.0) or not np.all(np.isfinite(g_zero)):
        n_bad = int(np.argmax((g_zero <= 0.0) | ~np.isfinite(g_zero)))
        violations.append(("g_positive_at_zero", (0.0, n_bad)))
    g_bound = float(np.max(g_zero))

    if delta > 0 and np.all(g_zero > 0.0):
        bracket = g_bound / delta + 1.0
        g_at_b = np.array([float(model.g(bracket, n)) for n in range(n_max + 1)])
        if np.any(g_at_b >= 0.0):
            n_bad = int(np.argmax(g_at_b >= 0.0))
            violations.append(("unique_positive_root", (bracket, n_bad)))

    # least upper envelopes for the growth and Lipschitz bounds
    ns = np.arange(1, n_max + 1, dtype=float)
    c1 = max(1e-9, sup_rate[0], lip[1] if n_max >= 1 else 0.0)
    c2 = max(1e-9, float(np.max((sup_rate[1:] - c1) / ns)))
    c3 = max(1e-9, float(np.max((lip[1:] / c1 - 1.0 - c2 * ns) / ns ** 2)))

    return AssumptionReport(
        dissipativity_rate_delta=delta,
        growth_constants=(c1, c2, c3),
        g_zero_bound=g_bound,
        violations=violations,
    )
