"""Monte Carlo strong errors, log-log rate fits and moment estimators."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .brownian import coarsen, ensemble
from .errors import ConfigurationError
from .euler import EulerPath, integrate
from .model import SDDEProblem


@dataclass
class ConvergenceReport:
    """Per-level strong errors of the scheme against a coupled reference.

    ``levels`` holds ``(n_per_tau, h)`` pairs.  ``slope`` is the least-squares
    slope of ``log2(error)`` against ``log2(n_per_tau)`` (``-0.5`` is strong
    order one half); it is ``None`` when fewer than three levels were run or
    some error is exactly zero, in which case ``degenerate`` is set.
    """
    levels: list
    errors: list
    num_paths: int
    seed: int
    p: float = 2.0
    slope: Optional[float] = None
    slope_stderr: Optional[float] = None
    mc_stderr: list = field(default_factory=list)
    degenerate: bool = False
    sup_norm: bool = False

    def __post_init__(self):
        if len(self.errors) != len(self.levels):
            raise ValueError("one error per level required")

    @property
    def n_values(self) -> list:
        return [n for n, _ in self.levels]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["levels"] = [[int(n), float(h)] for n, h in self.levels]
        return out

    @classmethod
    def from_errors(cls, levels, errors, num_paths, seed, p=2.0, mc_stderr=(),
                    sup_norm=False) -> "ConvergenceReport":
        errors = [float(e) for e in errors]
        slope = stderr = None
        degenerate = any(e == 0.0 for e in errors)
        if not degenerate and len(errors) >= 3:
            slope, stderr = fit_rate([n for n, _ in levels], errors)
        return cls(list(levels), errors, int(num_paths), int(seed), float(p),
                   slope, stderr, [float(s) for s in mc_stderr], degenerate,
                   sup_norm)


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    value: float
    num_paths: int
    level: Optional[int] = None


def _distances(ref, approx) -> np.ndarray:
    ref = np.asarray(ref, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if ref.shape != approx.shape:
        raise ValueError(
            f"coupled samples differ in shape: {ref.shape} vs {approx.shape}")
    if ref.shape[0] < 1:
        raise ValueError("need at least one sample")
    diff = ref - approx
    if diff.ndim > 1:
        return np.sqrt(np.sum(diff.reshape(len(diff), -1) ** 2, axis=1))
    return np.abs(diff)


def strong_error(ref_terminals, euler_terminals, p: float = 2.0) -> float:
    """``(mean |ref - euler|^p)^(1/p)`` over paired samples (axis 0)."""
    dist = _distances(ref_terminals, euler_terminals)
    scale = float(dist.max())
    if scale == 0.0:
        return 0.0
    # scaled so |d|^p neither underflows nor overflows
    return scale * float(np.mean((dist / scale) ** p) ** (1.0 / p))


def strong_error_stderr(ref_terminals, euler_terminals, p: float = 2.0) -> float:
    """Delta-method Monte Carlo standard error of :func:`strong_error`."""
    dist = _distances(ref_terminals, euler_terminals) ** p
    m = float(np.mean(dist))
    if m == 0.0 or len(dist) < 2:
        return 0.0
    se_m = float(np.std(dist, ddof=1)) / math.sqrt(len(dist))
    return se_m * m ** (1.0 / p - 1.0) / p


def fit_rate(levels: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """OLS slope of ``log2(error)`` on ``log2(n)`` and its standard error."""
    n = np.asarray(levels, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(n) != len(e):
        raise ValueError("levels and errors differ in length")
    if len(n) < 3:
        raise ValueError("need at least three levels to fit a rate")
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValueError("errors and levels must be positive")
    x, y = np.log2(n), np.log2(e)
    xc = x - x.mean()
    sxx = float(np.sum(xc * xc))
    if sxx == 0.0:
        raise ValueError("levels must not all be equal")
    slope = float(np.sum(xc * (y - y.mean()))) / sxx
    resid = y - y.mean() - slope * xc
    stderr = math.sqrt(float(np.sum(resid * resid)) / (len(x) - 2) / sxx)
    return slope, stderr


def moment_estimate(paths, p: float = 2.0) -> MomentEstimate:
    """Mean over paths of ``max_t |X_n(t)|^p`` (Euclidean norm over states).

    ``paths`` is an :class:`EulerPath` (possibly batched) or a sequence of them.
    """
    if isinstance(paths, EulerPath):
        paths = [paths]
    paths = list(paths)
    if not paths:
        raise ValueError("empty ensemble")
    sups = []
    for path in paths:
        norms = np.sqrt(np.sum(path.states ** 2, axis=-1))
        sups.append(np.atleast_1d(norms.max(axis=0)).ravel())
    sups = np.concatenate(sups)
    levels = {path.n_per_tau for path in paths}
    level = levels.pop() if len(levels) == 1 else None
    return MomentEstimate(float(p), float(np.mean(sups ** p)), len(sups), level)


def batched_noise(paths, factor: int) -> np.ndarray:
    """Stack coarsened increments of scalar paths into shape ``(J, M, 1)``."""
    return np.stack([coarsen(w, factor) for w in paths], axis=1)[..., None]


def increment_scaling(problem: SDDEProblem, seed: int, levels: Sequence[int],
                      num_paths: int, p: float = 2.0, batch_size: int = 500):
    """Estimate ``E int_0^T |X_n(s) - X_n(kappa_n(s))|^p ds`` per level.

    ``s`` is sampled at step midpoints, where ``X_n`` is advanced by half a
    step with the half-step Brownian increment, so each step contributes
    ``h * |X_n(t_j + h/2) - X_n(t_j)|^p``.  Returns ``(slope, values)``;
    the slope is ``nan`` when some value is exactly zero.
    """
    levels = [int(n) for n in levels]
    if len(levels) < 3:
        raise ValueError("need at least three levels")
    if problem.dim_noise != 1:
        raise ConfigurationError("increment_scaling supports scalar noise only")
    fine_per_tau = 2 * max(levels)
    fine_steps = problem.num_periods * fine_per_tau
    totals = np.zeros(len(levels))
    for start in range(0, num_paths, batch_size):
        streams = range(start, min(start + batch_size, num_paths))
        ws = ensemble(seed, streams, 0.0, problem.horizon, fine_steps)
        for li, n in enumerate(levels):
            factor = fine_per_tau // n
            noise = batched_noise(ws, factor)
            half = batched_noise(ws, factor // 2)[::2]
            path = integrate(problem, noise, n, midpoint_noise=half)
            jumps = np.sqrt(np.sum((path.midpoints - path.states[:-1]) ** 2, axis=-1))
            totals[li] += np.sum(path.h * np.sum(jumps ** p, axis=0))
    values = totals / num_paths
    if np.any(values <= 0):
        return math.nan, values
    slope, _ = fit_rate(levels, values)
    return slope, values
