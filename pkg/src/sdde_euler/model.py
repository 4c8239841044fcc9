"""SDDE problem description, the grid map and delay validation.

Coefficient callables follow one broadcasting convention so the integrator
can push a whole batch of Monte Carlo paths through a single call::

    drift(t, y, x)      x: (..., d), y: (..., k, d)  ->  (..., d)
    diffusion(t, y, x)  x: (..., d), y: (..., k, d)  ->  (..., d, m)

``t`` is a Python float.  Leading axes are batch axes and are never mixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

CONSTANT_LAG = "constant_lag"
PIECEWISE_FLOOR = "piecewise_floor"
CUSTOM = "custom"
CONDITION_TAGS = frozenset({"C1", "C2", "C3", "C4", "C5"})


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def kappa_index(n: int, t0, t) -> int:
    """``floor(n * (t - t0))`` computed exactly from the binary values."""
    d = _exact(t) - _exact(t0)
    if d < 0:
        raise ValueError(f"kappa needs t >= t0, got t={t}, t0={t0}")
    return math.floor(n * d)


def kappa(n: int, t0, t):
    """Largest point of the grid ``{t0 + j/n}`` not exceeding ``t``.

    Exact when the arguments are ``Fraction``; otherwise the exact grid point
    is rounded once to the nearest float, which never lands above ``t``.
    """
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    k = Fraction(kappa_index(n, t0, t), n) + _exact(t0)
    if isinstance(t, Fraction) and isinstance(t0, Fraction):
        return k
    return float(k)


def signed_pow(z, l):
    """Odd extension of ``|z|**l``: continuous and real for negative ``z``."""
    if l == 1:
        return z
    return np.sign(z) * np.abs(z) ** l


@dataclass(frozen=True)
class DelaySpec:
    """One delayed argument ``delta(t)``.

    ``constant_lag`` is ``t - lag``; ``piecewise_floor`` is ``[t/tau]*tau`` with
    ``tau`` taken from ``period`` or, if unset, from the owning problem.
    ``custom`` wraps an arbitrary ``func(t)``; it exists mostly so that bad
    delays can be expressed and rejected by :func:`validate_delays`.
    """
    kind: str
    lag: Optional[float] = None
    period: Optional[float] = None
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == CONSTANT_LAG:
            if self.lag is None or not self.lag > 0:
                raise ConfigurationError("constant_lag delay needs lag > 0")
        elif self.kind == PIECEWISE_FLOOR:
            if self.period is not None and not self.period > 0:
                raise ConfigurationError("piecewise_floor period must be > 0")
        elif self.kind == CUSTOM:
            if self.func is None:
                raise ConfigurationError("custom delay needs func")
        else:
            raise ConfigurationError(f"unknown delay kind {self.kind!r}")

    def __call__(self, t, tau=None):
        """Delayed time; exact when ``t`` is a ``Fraction``."""
        if self.kind == CONSTANT_LAG:
            return t - (_exact(self.lag) if isinstance(t, Fraction) else self.lag)
        if self.kind == PIECEWISE_FLOOR:
            tau = self.period if self.period is not None else tau
            if tau is None:
                raise ConfigurationError("piecewise_floor delay has no period")
            if isinstance(t, Fraction):
                tau = _exact(tau)
                return math.floor(t / tau) * tau
            return math.floor(t / tau) * tau
        out = self.func(t)
        return _exact(out) if isinstance(t, Fraction) else out


@dataclass(frozen=True)
class InitialSegment:
    """History ``xi`` on ``[-H, 0]``; ``evaluator(t)`` returns a length-d vector."""
    H: float
    evaluator: Callable = field(compare=False)
    bound: float = math.inf

    def __post_init__(self):
        if not self.H > 0:
            raise ConfigurationError("initial segment needs H > 0")


def evaluate_initial(segment: InitialSegment, t) -> np.ndarray:
    if t < -segment.H or t > 0:
        raise ValueError(
            f"t={float(t)} outside the initial domain [{-segment.H}, 0]")
    return np.atleast_1d(np.asarray(segment.evaluator(float(t)), dtype=float))


@dataclass(frozen=True)
class SDDEProblem:
    dim_state: int
    dim_noise: int
    drift: Callable = field(compare=False)
    diffusion: Callable = field(compare=False)
    delays: tuple
    initial: InitialSegment
    horizon: float
    period: float
    condition_tags: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(self.delays))
        if not self.period > 0:
            raise ConfigurationError("period tau must be > 0")
        if self.dim_state < 1 or self.dim_noise < 1:
            raise ConfigurationError("dimensions must be >= 1")
        ratio = self.horizon / self.period
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigurationError(
                f"horizon {self.horizon} is not a positive integer multiple "
                f"of the period {self.period}")
        unknown = set(self.condition_tags) - CONDITION_TAGS
        if unknown:
            raise ConfigurationError(f"unknown condition tags {sorted(unknown)}")

    @property
    def num_periods(self) -> int:
        return int(round(self.horizon / self.period))

    @property
    def exact_horizon(self) -> Fraction:
        """``N * tau`` in exact arithmetic; grid code uses this, not ``horizon``."""
        return self.num_periods * Fraction(self.period)

    @property
    def num_delays(self) -> int:
        return len(self.delays)


@dataclass(frozen=True)
class DelayViolation:
    delay: int
    t: float
    value: float
    bound: float
    reason: str


@dataclass(frozen=True)
class DelayValidation:
    violation: Optional[DelayViolation] = None

    @property
    def ok(self) -> bool:
        return self.violation is None

    def __bool__(self):
        return self.ok


def validate_delays(problem: SDDEProblem, grid_n) -> DelayValidation:
    """Check ``-H <= delta_j(t) <= [t/tau]*tau`` and monotonicity at ``t = i/grid_n``.

    ``grid_n`` is the number of grid points per unit time; a ``Fraction`` is
    accepted when ``tau`` is not a unit.  Returns the first violation found
    instead of raising.
    """
    grid_n = _exact(grid_n)
    tau = _exact(problem.period)
    H = _exact(problem.initial.H)
    last_i = kappa_index(grid_n, 0, problem.exact_horizon)
    for j, delay in enumerate(problem.delays):
        if delay.period is not None and _exact(delay.period) != tau:
            return DelayValidation(DelayViolation(
                j, 0.0, float(delay.period), float(tau), "period"))
        prev = None
        for i in range(last_i + 1):
            t = i / grid_n
            d = delay(t, tau)
            upper = math.floor(t / tau) * tau
            if d > upper:
                return DelayValidation(
                    DelayViolation(j, float(t), float(d), float(upper), "upper"))
            if d < -H:
                return DelayValidation(
                    DelayViolation(j, float(t), float(d), float(-H), "lower"))
            if prev is not None and d < prev:
                return DelayValidation(
                    DelayViolation(j, float(t), float(d), float(prev), "monotone"))
            prev = d
    return DelayValidation()


class AffineHistory:
    """``xi(t) = slope * t + intercept``; array friendly and serialisable."""

    def __init__(self, slope: float = 0.0, intercept: float = 1.0):
        self.slope = float(slope)
        self.intercept = float(intercept)

    def __call__(self, t):
        return self.slope * np.asarray(t, dtype=float) + self.intercept

    def __eq__(self, other):
        return (isinstance(other, AffineHistory)
                and (self.slope, self.intercept) == (other.slope, other.intercept))

    def __repr__(self):
        return f"AffineHistory(slope={self.slope}, intercept={self.intercept})"


@dataclass(frozen=True)
class TestProblemParams:
    """Scalar family ``dZ = [aZ + b Z(t-tau)^l1] dt + [b1 + b2 Z + b3 Z(t-tau)^l2] dW``."""
    __test__ = False

    p: float = 2.0
    tau: float = 1.0
    a: float = -8.0
    b: float = 4.0
    beta1: float = 0.0
    beta2: float = 1.0
    beta3: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    xi: Callable = field(default_factory=lambda: AffineHistory(1.0, 1.0))

    @property
    def is_deterministic(self) -> bool:
        return self.beta1 == self.beta2 == self.beta3 == 0

    def history(self, t):
        """``xi`` evaluated on an array of times, whatever the callable returns."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.xi(t), dtype=float)
        if out.shape != t.shape:
            out = np.vectorize(lambda s: float(np.squeeze(self.xi(s))))(t)
        return out


def table1_params(l1: float = 1.0, l2: float = 1.0) -> TestProblemParams:
    """p=2, tau=1, a=-8, b=4, beta=(0, 1, 1), xi(t)=t+1."""
    return TestProblemParams(p=2.0, tau=1.0, a=-8.0, b=4.0, beta1=0.0,
                             beta2=1.0, beta3=1.0, l1=l1, l2=l2,
                             xi=AffineHistory(1.0, 1.0))


def build_test_problem(params: TestProblemParams) -> SDDEProblem:
    if not params.tau > 0:
        raise ConfigurationError("tau must be > 0")
    if not (params.l1 > 0 and params.l2 > 0):
        raise ConfigurationError("l1 and l2 must be > 0")
    a, b, l1, l2 = params.a, params.b, params.l1, params.l2
    b1, b2, b3 = params.beta1, params.beta2, params.beta3

    def drift(t, y, x):
        return a * x + b * signed_pow(y[..., 0, :], l1)

    def diffusion(t, y, x):
        return (b1 + b2 * x + b3 * signed_pow(y[..., 0, :], l2))[..., None]

    initial = InitialSegment(
        H=params.tau, evaluator=lambda t: np.atleast_1d(params.history(t)))
    # linear in x, so C2/C5 hold; polynomial Lipschitz in y (C4) needs l >= 1
    tags = {"C1": {"l": max(l1, l2)}, "C2": {}, "C3": {}}
    if l1 >= 1 and l2 >= 1:
        tags.update(C4={"l1": 2 * max(l1, l2) - 2}, C5={"l2": 0.0})
    return SDDEProblem(
        dim_state=1, dim_noise=1, drift=drift, diffusion=diffusion,
        delays=(DelaySpec(CONSTANT_LAG, lag=params.tau),),
        initial=initial, horizon=2 * params.tau, period=params.tau,
        condition_tags=tags)
