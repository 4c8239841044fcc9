"""Configuration-driven strong-convergence experiment for the test family.

For every stream ``i < num_paths`` one fine Brownian path is drawn, the
reference solution is evaluated on it, and the Euler scheme is run at every
level on coarsenings of that same path.  Streams are processed in fixed-size
batches; worker threads only change which batch runs when, so the output
files are byte-identical for any worker count.

Command line::

    python -m sdde_euler --preset table1 --paths 2000 --seed 42 --out results
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .brownian import ensemble
from .convergence import (ConvergenceReport, batched_noise, strong_error,
                          strong_error_stderr)
from .errors import ConfigurationError, NonFiniteStateError
from .euler import integrate
from .model import AffineHistory, TestProblemParams, build_test_problem, table1_params
from .oracle import exact_solution, method_of_steps_ode

log = logging.getLogger(__name__)

EMIT_KINDS = ("errors_csv", "report_json", "plot_data")
ERRORS_HEADER = ["h", "n", "rmse", "mc_stderr", "num_paths", "p", "seed"]
PLOT_HEADER = ["log2_n", "log2_error", "series"]
# execution settings that never change results; kept out of report.json
RUNTIME_FIELDS = ("outputs", "workers")
REFERENCE_SLOPE = -0.5
U64_MAX = 2 ** 64 - 1

PRESETS = {
    "table1": table1_params(1.0, 1.0),
    "table1_holder": table1_params(0.5, 0.5),
    "table1_poly": table1_params(2.0, 3.0),
    "zero": TestProblemParams(p=2.0, tau=1.0, a=0.0, b=0.0, beta1=0.0, beta2=0.0,
                              beta3=0.0, xi=AffineHistory(1.0, 1.0)),
    "additive": TestProblemParams(p=2.0, tau=1.0, a=0.0, b=0.0, beta1=1.0, beta2=0.0,
                                  beta3=0.0, xi=AffineHistory(0.0, 1.0)),
    "deterministic": TestProblemParams(p=2.0, tau=1.0, a=0.0, b=1.0, beta1=0.0,
                                       beta2=0.0, beta3=0.0, l1=1.0, l2=1.0,
                                       xi=AffineHistory(0.0, 1.0)),
}

_PARAM_FIELDS = ("p", "tau", "a", "b", "beta1", "beta2", "beta3", "l1", "l2")


def params_to_dict(params: TestProblemParams) -> dict:
    if not isinstance(params.xi, AffineHistory):
        raise ConfigurationError("problem.xi: only affine histories serialise")
    out = {k: float(getattr(params, k)) for k in _PARAM_FIELDS}
    out["xi"] = {"slope": params.xi.slope, "intercept": params.xi.intercept}
    return out


def params_from_dict(raw) -> TestProblemParams:
    if isinstance(raw, str):
        if raw not in PRESETS:
            raise ConfigurationError(f"problem: unknown preset {raw!r}")
        return PRESETS[raw]
    if not isinstance(raw, dict):
        raise ConfigurationError("problem: expected a preset name or an object")
    raw = dict(raw)
    base = params_from_dict(raw.pop("preset", "table1"))
    updates = {}
    for key, value in raw.items():
        if key == "xi":
            if not isinstance(value, dict) or set(value) - {"slope", "intercept"}:
                raise ConfigurationError("problem.xi: expected {slope, intercept}")
            updates["xi"] = AffineHistory(value.get("slope", 0.0),
                                          value.get("intercept", 1.0))
        elif key in _PARAM_FIELDS:
            try:
                updates[key] = float(value)
            except (TypeError, ValueError):
                raise ConfigurationError(f"problem.{key}: not a number: {value!r}")
        else:
            raise ConfigurationError(f"problem.{key}: unknown field")
    params = replace(base, **updates)
    if not params.tau > 0:
        raise ConfigurationError("problem.tau: must be > 0")
    if not (params.l1 > 0 and params.l2 > 0):
        raise ConfigurationError("problem.l1/l2: must be > 0")
    return params


@dataclass
class ExperimentConfig:
    problem: TestProblemParams = field(default_factory=lambda: PRESETS["table1"])
    levels: list = field(default_factory=lambda: [6, 7, 8, 9, 10, 11])
    fine_exponent: int = 15
    num_paths: int = 2000
    seed: int = 42
    p: float = 2.0
    outputs: str = "results"
    emit: list = field(default_factory=lambda: list(EMIT_KINDS))
    workers: int = 1
    batch_size: int = 250
    sup_norm: bool = False

    def validate(self) -> "ExperimentConfig":
        lv = self.levels
        if not lv or any(not isinstance(x, int) or x < 0 for x in lv):
            raise ConfigurationError("levels: need non-negative integer exponents")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ConfigurationError("levels: must be strictly ascending")
        if not isinstance(self.fine_exponent, int) or self.fine_exponent < max(lv) + 4:
            raise ConfigurationError(
                f"fine_exponent: must be >= max(levels) + 4 = {max(lv) + 4}")
        if not isinstance(self.num_paths, int) or self.num_paths < 1:
            raise ConfigurationError("num_paths: must be >= 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= U64_MAX:
            raise ConfigurationError("seed: must be an unsigned 64-bit integer")
        if not self.p > 0:
            raise ConfigurationError("p: must be > 0")
        bad = set(self.emit) - set(EMIT_KINDS)
        if bad:
            raise ConfigurationError(f"emit: unknown outputs {sorted(bad)}")
        if "plot_data" in self.emit and len(lv) < 2:
            raise ConfigurationError("emit: plot_data needs at least two levels")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigurationError("workers: must be >= 1")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigurationError("batch_size: must be >= 1")
        return self

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["problem"] = params_to_dict(self.problem)
        out["levels"] = list(self.levels)
        out["emit"] = list(self.emit)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"{sorted(unknown)[0]}: unknown config field")
        kwargs = {}
        if "problem" in raw:
            kwargs["problem"] = params_from_dict(raw.pop("problem"))
        for key, value in raw.items():
            if key in ("levels", "emit"):
                if not isinstance(value, list):
                    raise ConfigurationError(f"{key}: expected a list")
                value = list(value)
            kwargs[key] = value
        return cls(**kwargs).validate()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config: invalid JSON ({exc})")
        if not isinstance(raw, dict):
            raise ConfigurationError("config: top level must be an object")
        return cls.from_dict(raw)


def _process_batch(config: ExperimentConfig, streams: range):
    """Errors for one batch of streams: ``(terminal diffs, sup diffs)`` per level."""
    params = config.problem
    problem = build_test_problem(params)
    fine_per_tau = 2 ** config.fine_exponent
    fine_steps = problem.num_periods * fine_per_tau
    ws = ensemble(config.seed, streams, 0.0, problem.horizon, fine_steps)
    if params.is_deterministic:
        ref_T = method_of_steps_ode(params, problem.horizon)
        refs = None
    else:
        refs = []
        for w in ws:
            try:
                sol = exact_solution(params, w)
            except NonFiniteStateError as exc:
                raise NonFiniteStateError(exc.step, exc.state, stream=w.stream_id,
                                          level="oracle") from None
            assert sol.path_ref == (config.seed, w.stream_id)
            refs.append(sol.values)
        refs = np.stack(refs, axis=1)
        ref_T = refs[-1]
    terminal, sup = [], []
    for e in config.levels:
        n = 2 ** e
        factor = fine_per_tau // n
        try:
            path = integrate(problem, batched_noise(ws, factor), n)
        except NonFiniteStateError as exc:
            raise NonFiniteStateError(exc.step, exc.state,
                                      stream=f"{streams.start}..{streams.stop - 1}",
                                      level=e) from None
        x = path.states[..., 0]
        terminal.append(np.broadcast_to(ref_T, x[-1].shape) - x[-1])
        if config.sup_norm:
            if refs is None:
                grid = np.array([method_of_steps_ode(params, float(t))
                                 for t in path.times])[:, None]
            else:
                grid = refs[::factor]
            sup.append(np.max(np.abs(grid - x), axis=0))
    return terminal, sup


def compute_report(config: ExperimentConfig) -> ConvergenceReport:
    config.validate()
    batches = [range(s, min(s + config.batch_size, config.num_paths))
               for s in range(0, config.num_paths, config.batch_size)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(lambda b: _process_batch(config, b), batches))
    # reduction in stream order, independent of scheduling
    k = 1 if config.sup_norm else 0
    diffs = [np.concatenate([r[k][li] for r in results])
             for li in range(len(config.levels))]
    zeros = np.zeros(config.num_paths)
    errors = [strong_error(zeros, d, config.p) for d in diffs]
    stderrs = [strong_error_stderr(zeros, d, config.p) for d in diffs]
    tau = config.problem.tau
    levels = [(2 ** e, tau / 2 ** e) for e in config.levels]
    return ConvergenceReport.from_errors(levels, errors, config.num_paths,
                                         config.seed, config.p, stderrs,
                                         config.sup_norm)


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_errors_csv(report: ConvergenceReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ERRORS_HEADER)
        for (n, h), err, se in zip(report.levels, report.errors, report.mc_stderr):
            w.writerow([_g17(h), n, _g17(err), _g17(se), report.num_paths,
                        _g17(report.p), report.seed])


def write_report_json(report: ConvergenceReport, path, config=None) -> None:
    doc = report.to_dict()
    if config is not None:
        doc["config"] = {k: v for k, v in config.to_dict().items()
                         if k not in RUNTIME_FIELDS}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


def plot_rows(report: ConvergenceReport) -> list:
    if len(report.levels) < 2:
        raise ConfigurationError("plot data needs at least two levels")
    if any(e <= 0 for e in report.errors):
        raise ConfigurationError("plot data needs strictly positive errors")
    xs = [math.log2(n) for n in report.n_values]
    ys = [math.log2(e) for e in report.errors]
    rows = [(x, y, "data") for x, y in zip(xs, ys)]
    rows += [(x, ys[0] + REFERENCE_SLOPE * (x - xs[0]), "reference") for x in xs]
    return rows


def emit_plot_data(report: ConvergenceReport, path) -> Path:
    """Write ``log2_n,log2_error,series`` rows: the data and a slope -0.5 line."""
    rows = plot_rows(report)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_HEADER)
        for x, y, series in rows:
            w.writerow([_g17(x), _g17(y), series])
    return path


def run_experiment(config: ExperimentConfig) -> ConvergenceReport:
    report = compute_report(config)
    out = Path(config.outputs)
    out.mkdir(parents=True, exist_ok=True)
    if "errors_csv" in config.emit:
        write_errors_csv(report, out / "errors.csv")
    if "report_json" in config.emit:
        write_report_json(report, out / "report.json", config)
    if "plot_data" in config.emit:
        if report.degenerate:
            log.warning("zero error at some level; plot data skipped")
        else:
            emit_plot_data(report, out / "plot_data.csv")
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sdde-experiment",
        description="Strong convergence study of Euler-Maruyama on the linear test SDDE.")
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--preset", choices=sorted(PRESETS), help="problem preset")
    ap.add_argument("--seed", type=int, help="master seed (u64)")
    ap.add_argument("--paths", type=int, help="number of Monte Carlo paths")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--workers", type=int, help="worker threads")
    return ap


def config_from_args(args) -> ExperimentConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"config: cannot read {args.config} ({exc})")
        raw = json.loads(text) if text.strip() else {}
    else:
        raw = {}
    if args.preset:
        raw["problem"] = args.preset
    for key, value in (("seed", args.seed), ("num_paths", args.paths),
                       ("outputs", args.out), ("workers", args.workers)):
        if value is not None:
            raw[key] = value
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report = run_experiment(config)
    except (ConfigurationError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteStateError as exc:
        print(f"error: blow-up: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 4
    for (n, h), err in zip(report.levels, report.errors):
        log.info("h=%s n=%d rmse=%.6e", _g17(h), n, err)
    if report.slope is not None:
        log.info("slope %.5f (stderr %.5f)", report.slope, report.slope_stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
