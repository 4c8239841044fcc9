"""Explicit Euler-Maruyama scheme for SDDEs on the grid ``h = tau / n_per_tau``.

Delayed arguments are read from the stored grid values (left snap through
the grid map) or, for non-positive delayed times, from the initial segment.
Times on the grid are handled as integer indices; continuous times only
appear when talking to the initial segment or to user code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .brownian import is_power_of_two
from .errors import CausalityError, ConfigurationError, NonFiniteStateError
from .model import (CONSTANT_LAG, PIECEWISE_FLOOR, InitialSegment, SDDEProblem,
                    evaluate_initial, validate_delays)


@dataclass
class EulerPath:
    """Euler trajectory; ``states[j]`` is ``X_n(j*h)`` with shape ``(*batch, d)``.

    ``filled`` counts the grid values computed so far, which is what lookups
    are checked against while the path is being built.
    """
    problem: SDDEProblem
    n_per_tau: int
    states: np.ndarray = field(repr=False)
    noise: np.ndarray = field(repr=False)
    filled: int = 0
    midpoints: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def step(self) -> Fraction:
        return Fraction(self.problem.period) / self.n_per_tau

    @property
    def h(self) -> float:
        return float(self.step)

    @property
    def num_steps(self) -> int:
        return self.problem.num_periods * self.n_per_tau

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_steps + 1) * self.h

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def _grid_index(path: EulerPath, t: Fraction) -> int:
    return int(t // path.step)


def lookup_delayed(path: EulerPath, segment: InitialSegment, t_query) -> np.ndarray:
    """State at a delayed time: ``xi(t)`` for ``t <= 0``, else ``X_n(kappa_n(t))``."""
    t = Fraction(t_query)
    if t <= 0:
        if t < -Fraction(segment.H):
            raise ValueError(f"delayed time {float(t)} is before -H")
        return evaluate_initial(segment, t)
    k = _grid_index(path, t)
    if k >= path.filled:
        raise CausalityError(
            f"lookup at t={float(t)} (index {k}) but only {path.filled} "
            "grid values exist")
    return path.states[k]


def _delay_plan(problem: SDDEProblem, n_per_tau: int):
    """Per delay and step: grid index to read, or -1 with the history value."""
    k, J, d = problem.num_delays, problem.num_periods * n_per_tau, problem.dim_state
    step = Fraction(problem.period) / n_per_tau
    idx = np.full((k, J), -1, dtype=np.int64)
    hist = np.zeros((k, J, d))
    lag_steps = {}
    for i, delay in enumerate(problem.delays):
        if delay.kind == CONSTANT_LAG:
            q = Fraction(delay.lag) / step
            lag_steps[i] = q.numerator if q.denominator == 1 else None
    for i, delay in enumerate(problem.delays):
        for j in range(J):
            if lag_steps.get(i) is not None:
                kj = j - lag_steps[i]
                td = kj * step
            elif delay.kind == PIECEWISE_FLOOR and delay.period is None:
                kj = (j // n_per_tau) * n_per_tau
                td = kj * step
            else:
                td = delay(j * step, Fraction(problem.period))
                kj = int(td // step)
            if td <= 0:
                hist[i, j] = evaluate_initial(problem.initial, td)
                idx[i, j] = -1
            else:
                if kj > j:
                    raise CausalityError(
                        f"delay {i} at step {j} looks ahead to index {kj}")
                idx[i, j] = kj
    return idx, hist


def _as_noise(noise, m: int) -> np.ndarray:
    w = np.asarray(noise, dtype=float)
    if w.ndim == 1:
        if m != 1:
            raise ConfigurationError(
                f"1-D noise only allowed for m=1, problem has m={m}")
        w = w[:, None]
    if w.shape[-1] != m:
        raise ConfigurationError(
            f"noise last axis {w.shape[-1]} != noise dimension {m}")
    return w


def integrate(problem: SDDEProblem, noise, n_per_tau: int, *,
              midpoint_noise=None, check_delays: bool = True) -> EulerPath:
    """Run the scheme with Brownian increments ``noise`` at step ``h``.

    ``noise`` has shape ``(J, *batch, m)`` with ``J = T/h``; a 1-D array is
    taken as a single path of scalar noise.  If ``midpoint_noise`` holds the
    increments over the first half of every step, the half-step values
    ``X_n(t_j + h/2)`` are stored in ``path.midpoints``.
    """
    if not is_power_of_two(n_per_tau):
        raise ConfigurationError(f"n_per_tau must be a power of two, got {n_per_tau}")
    d, m = problem.dim_state, problem.dim_noise
    J = problem.num_periods * n_per_tau
    dW = _as_noise(noise, m)
    if dW.shape[0] != J:
        raise ConfigurationError(
            f"noise has {dW.shape[0]} increments, grid needs {J}")
    if check_delays:
        report = validate_delays(problem, Fraction(n_per_tau) / Fraction(problem.period))
        if not report.ok:
            raise ConfigurationError(f"inadmissible delay: {report.violation}")
    half = None
    if midpoint_noise is not None:
        half = _as_noise(midpoint_noise, m)
        if half.shape != dW.shape:
            raise ConfigurationError("midpoint_noise shape differs from noise")

    batch = dW.shape[1:-1]
    step = Fraction(problem.period) / n_per_tau
    h = float(step)
    states = np.empty((J + 1,) + batch + (d,))
    states[0] = evaluate_initial(problem.initial, 0.0)
    path = EulerPath(problem, n_per_tau, states, dW, filled=1)
    mids = np.empty((J,) + batch + (d,)) if half is not None else None

    idx, hist = _delay_plan(problem, n_per_tau)
    k = problem.num_delays
    y = np.empty(batch + (k, d))
    drift, diffusion = problem.drift, problem.diffusion
    for j in range(J):
        for i in range(k):
            src = idx[i, j]
            y[..., i, :] = states[src] if src >= 0 else hist[i, j]
        t = float(j * step)
        x = states[j]
        f = drift(t, y, x)
        g = diffusion(t, y, x)
        states[j + 1] = x + f * h + (g @ dW[j][..., None])[..., 0]
        if half is not None:
            mids[j] = x + f * (0.5 * h) + (g @ half[j][..., None])[..., 0]
        if not np.all(np.isfinite(states[j + 1])):
            raise NonFiniteStateError(j + 1, states[j + 1])
        path.filled = j + 2
    path.midpoints = mids
    return path
