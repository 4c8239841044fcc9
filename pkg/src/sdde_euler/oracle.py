"""Reference solutions for the scalar linear test family.

On each delay interval the test equation is linear in ``Z(t)`` with a known
forcing built from the previous interval, so it is solved by variation of
constants around the fundamental factor

    Phi_{s,t} = exp((a - beta2**2 / 2)(t - s) + beta2 (W(t) - W(s))).

The remaining ds- and dW-integrals are evaluated with left-point sums on
the fine grid of the Brownian path (optionally coarsened by ``factor``).
For the noise-free case :func:`method_of_steps_ode` gives an independent
answer by adaptive quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as spi

from .brownian import BrownianPath, coarsen
from .errors import ConfigurationError, NonFiniteStateError
from .model import TestProblemParams, signed_pow

MIN_STEPS_PER_TAU = 4


@dataclass(frozen=True)
class OracleSolution:
    fine_steps: int
    values: np.ndarray = field(repr=False)
    quadrature_step: float
    path_ref: tuple

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def at_index(self, k: int, stride: int = 1) -> float:
        return float(self.values[k * stride])


def fundamental_factor(a: float, beta2: float, path: BrownianPath,
                       s_index: int, t_index: int) -> float:
    if not 0 <= s_index <= t_index <= path.fine_steps:
        raise ValueError(f"need 0 <= s_index <= t_index, got {s_index}, {t_index}")
    dt = (t_index - s_index) * path.h
    dw = float(path.increments[s_index:t_index].sum())
    return math.exp((a - 0.5 * beta2 ** 2) * dt + beta2 * dw)


def _grid(params: TestProblemParams, path: BrownianPath, factor: int):
    """Increments, prefix sums and step on the (possibly coarsened) grid."""
    if not np.isclose(path.t0, 0.0) or path.t1 < params.tau * (1 - 1e-12):
        raise ConfigurationError("path must start at 0 and cover [0, tau]")
    dw = coarsen(path, factor)
    h = path.h * factor
    per_tau = params.tau / h
    F = int(round(per_tau))
    if abs(per_tau - F) > 1e-9 * per_tau or F < MIN_STEPS_PER_TAU:
        raise ConfigurationError(
            f"grid step {h} must divide tau with at least "
            f"{MIN_STEPS_PER_TAU} steps per tau")
    w = np.empty(len(dw) + 1)
    w[0] = 0.0
    np.cumsum(dw, out=w[1:])
    return dw, w, h, F


def _segment(params, z_start, delayed, dw, w, h, F):
    """Variation-of-constants solution over one delay interval of F steps.

    ``delayed`` holds Z(s - tau) at the F left points, ``dw``/``w`` the
    increments and W values on the interval (``w`` relative to its start).
    """
    a, b, b1, b2, b3 = params.a, params.b, params.beta1, params.beta2, params.beta3
    c = a - 0.5 * b2 ** 2
    s = np.arange(F + 1) * h
    log_phi = c * s + b2 * w
    inv_phi = np.exp(-log_phi[:-1])
    noise_coef = b1 + b3 * signed_pow(delayed, params.l2)
    drift_coef = b * signed_pow(delayed, params.l1) - b2 * noise_coef
    acc = np.empty(F + 1)
    acc[0] = z_start
    np.cumsum(inv_phi * (drift_coef * h + noise_coef * dw), out=acc[1:])
    acc[1:] += z_start
    out = np.exp(log_phi) * acc
    out[0] = z_start
    return out


def exact_segment_first(params: TestProblemParams, path: BrownianPath,
                        factor: int = 1) -> np.ndarray:
    """Z on ``[0, tau]``: ``F + 1`` values at the grid points."""
    dw, w, h, F = _grid(params, path, factor)
    xi_delayed = params.history(np.arange(F) * h - params.tau)
    xi0 = float(params.history(0.0))
    z = _segment(params, xi0, xi_delayed, dw[:F], w[:F + 1], h, F)
    if not np.all(np.isfinite(z)):
        raise NonFiniteStateError(int(np.argmin(np.isfinite(z))), z, stream=path.stream_id)
    return z


def exact_segment_second(params: TestProblemParams, path: BrownianPath,
                         first_segment: np.ndarray, factor: int = 1) -> np.ndarray:
    """Z on ``[tau, 2 tau]``, reading ``Z(s - tau)`` from ``first_segment``."""
    dw, w, h, F = _grid(params, path, factor)
    if len(first_segment) != F + 1:
        raise ConfigurationError(
            f"first segment has {len(first_segment)} points, grid needs {F + 1}")
    if len(dw) < 2 * F:
        raise ConfigurationError("path does not cover [0, 2 tau]")
    z = _segment(params, float(first_segment[-1]), np.asarray(first_segment[:F]),
                 dw[F:2 * F], w[F:2 * F + 1] - w[F], h, F)
    if not np.all(np.isfinite(z)):
        raise NonFiniteStateError(int(np.argmin(np.isfinite(z))), z, stream=path.stream_id)
    return z


def exact_solution(params: TestProblemParams, path: BrownianPath,
                   factor: int = 1) -> OracleSolution:
    """Z on ``[0, 2 tau]`` (``2F + 1`` grid values)."""
    first = exact_segment_first(params, path, factor)
    second = exact_segment_second(params, path, first, factor)
    values = np.concatenate([first, second[1:]])
    return OracleSolution(path.fine_steps // factor, values, path.h * factor,
                          path.path_ref)


def method_of_steps_ode(params: TestProblemParams, t: float) -> float:
    """Noise-free solution of ``dZ = [aZ + b Z(t - tau)^l1] dt`` by segments.

    Each interval is solved by variation of constants; the forcing integral
    is done by adaptive Gauss-Kronrod quadrature (nested on the second
    interval, where the forcing is itself a first-interval solution).
    """
    if not params.is_deterministic:
        raise ConfigurationError("method_of_steps_ode needs beta1 = beta2 = beta3 = 0")
    tau, a, b, l1 = params.tau, params.a, params.b, params.l1
    if not 0 <= t <= 2 * tau:
        raise ValueError(f"t={t} outside [0, {2 * tau}]")
    opts = dict(epsabs=1e-13, epsrel=1e-13, limit=200)

    def xi(s):
        return float(params.history(s))

    def first(u):
        forcing, _ = spi.quad(
            lambda s: math.exp(a * (u - s)) * b * signed_pow(xi(s - tau), l1),
            0.0, u, **opts)
        return math.exp(a * u) * xi(0.0) + forcing

    if t <= tau:
        return first(t)
    z_tau = first(tau)
    forcing, _ = spi.quad(
        lambda s: math.exp(a * (t - s)) * b * signed_pow(first(s - tau), l1),
        tau, t, **opts)
    return math.exp(a * (t - tau)) * z_tau + forcing
