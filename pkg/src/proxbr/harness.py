"""Scenario sweeps: config loading, query generation, certification and reports."""
import csv
import datetime
import hashlib
import io
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from .br_engine import br_approximate
from .catalog import resolve_function
from .errors import ConfigError, InconclusiveError, InvalidFunctionError, LambdaBelowThreshold, UnknownFunctionError
from .monotone import default_slack, entourage_check, sample_graph, violation_measure
from .normed_space import NormedSpace
from .prox_bounded import estimate_threshold

CSV_HEADER = ("scenario", "function", "p", "eps", "lambda", "qx", "qxstar", "nu", "cx", "cxstar",
              "dx", "dxstar", "bound_x", "bound_xstar", "iterate_bound", "solver_gap", "pass")
ADMIT_TOL = 1e-12
ATTEMPTS_PER_QUERY = 200
THRESHOLD_TOL = 0.05

# stream labels for SeedSequence spawn keys
STREAM_QUERY = 1
STREAM_PERTURB = 2


@dataclass(frozen=True)
class ScenarioConfig:
    function: Any
    p: float = 2.0
    eps_grid: tuple = (0.0, 0.01, 0.1, 1.0)
    lambda_grid: Any = "auto"
    query_count: int = 100
    query_box: Optional[tuple] = None
    sample_density: float = 50.0
    slack: Optional[float] = None
    seed: int = 0
    tol: float = 1e-9

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_grid)
        if not eps or any(not np.isfinite(e) or e < 0 for e in eps):
            raise ConfigError("eps_grid must be a nonempty list of nonnegative numbers")
        object.__setattr__(self, "eps_grid", eps)
        if self.lambda_grid != "auto":
            if isinstance(self.lambda_grid, str):
                raise ConfigError('lambda_grid must be "auto" or a list of positive numbers')
            lams = tuple(float(v) for v in self.lambda_grid)
            if not lams or any(not v > 0 for v in lams):
                raise ConfigError("lambda_grid values must be positive")
            object.__setattr__(self, "lambda_grid", lams)
        if int(self.query_count) != self.query_count or self.query_count < 1:
            raise ConfigError("query_count must be a positive integer")
        if not float(self.sample_density) > 0:
            raise ConfigError("sample_density must be positive")
        if self.slack is not None and not float(self.slack) >= 0:
            raise ConfigError("slack must be nonnegative")
        if not float(self.tol) > 0:
            raise ConfigError("tol must be positive")
        if int(self.seed) != self.seed or not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.query_box is not None:
            qb = self.query_box
            if len(qb) != 2:
                raise ConfigError("query_box must be [lo, hi]")
            object.__setattr__(self, "query_box", (qb[0], qb[1]))
        object.__setattr__(self, "query_count", int(self.query_count))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "function" not in d:
            raise ConfigError("config needs a 'function' field")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def to_dict(self):
        d = asdict(self)
        d["eps_grid"] = list(self.eps_grid)
        if self.lambda_grid != "auto":
            d["lambda_grid"] = list(self.lambda_grid)
        if self.query_box is not None:
            d["query_box"] = [np.asarray(v, dtype=float).tolist() for v in self.query_box]
        return d

    @property
    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def default_lambda_grid(threshold):
    """``{1.1*t + 0.01, 0.5, 1, 2, 8}`` restricted to values above ``t``."""
    cands = sorted({threshold * 1.1 + 0.01, 0.5, 1.0, 2.0, 8.0})
    return tuple(v for v in cands if v > threshold)


@dataclass
class CellStats:
    eps: float
    lam: float
    attempts: int = 0
    rejected_sample: int = 0
    rejected_constructed: int = 0
    admitted: int = 0
    passed: int = 0
    sample_entourage_passed: int = 0
    max_excess_x: float = 0.0
    max_excess_xstar: float = 0.0


@dataclass
class RunReport:
    scenario: str
    function: str
    threshold: float
    lambda_grid: tuple
    rows: list
    records: list
    cells: list
    summary: dict
    csv_text: str
    wall_time: float
    version: str
    extra: dict = field(default_factory=dict)

    @property
    def digest(self):
        return hashlib.sha256(self.csv_text.encode()).hexdigest()

    def sidecar(self, timestamp=True):
        d = {
            "scenario": self.scenario,
            "function": self.function,
            "csv_sha256": self.digest,
            "threshold_estimate": self.threshold,
            "lambda_grid": list(self.lambda_grid),
            "summary": self.summary,
            "cells": [asdict(c) for c in self.cells],
            "version": self.version,
            "wall_time_s": self.wall_time,
        }
        d.update(self.extra)
        if timestamp:
            d["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return d

    def write(self, prefix):
        with open(f"{prefix}.csv", "w", newline="") as fh:
            fh.write(self.csv_text)
        with open(f"{prefix}.json", "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return f"{prefix}.csv", f"{prefix}.json"


def _num(v):
    return repr(float(v))


def _vec(v):
    v = np.atleast_1d(v)
    return ";".join(repr(float(t)) for t in v)


def _rng(seed, stream, *key):
    ss = np.random.SeedSequence(seed, spawn_key=(stream,) + tuple(key))
    return np.random.Generator(np.random.PCG64(ss))


def _thread_count():
    raw = os.environ.get("PROXBR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_cell(ctx, ei, li):
    f, space, sample, cfg = ctx["f"], ctx["space"], ctx["sample"], ctx["config"]
    eps = cfg.eps_grid[ei]
    lam = ctx["lams"][li]
    lam_mid = ctx["lam_mid"]
    rx, rxs = np.sqrt(eps / lam_mid), np.sqrt(eps * lam_mid)
    n = space.n
    stats = CellStats(eps, lam)
    out = []
    for qi in range(cfg.query_count):
        for attempt in range(ATTEMPTS_PER_QUERY):
            stats.attempts += 1
            rq = _rng(cfg.seed, STREAM_QUERY, ei, li, qi, attempt)
            rp = _rng(cfg.seed, STREAM_PERTURB, ei, li, qi, attempt)
            k = int(rq.integers(len(sample)))
            x = sample.X[k] + rx * rp.uniform(-1.0, 1.0, n)
            xs = sample.XS[k] + rxs * rp.uniform(-1.0, 1.0, n)
            viol = violation_measure(sample, x, xs)
            if viol < -eps - ADMIT_TOL:
                stats.rejected_sample += 1
                continue
            rec = br_approximate(f, space, x, xs, eps, lam, cfg.tol, ctx["slack"], ctx["threshold"])
            # the constructed pair is itself a graph element, so it joins the pre-test
            if rec.pair_violation < -eps - ADMIT_TOL:
                stats.rejected_constructed += 1
                continue
            rec.pair_violation = min(viol, rec.pair_violation)
            ent = entourage_check(sample, space, x, xs, eps, lam, ctx["slack"])
            rec.extra["sample_entourage"] = ent.passed
            stats.admitted += 1
            stats.passed += rec.passed
            stats.sample_entourage_passed += ent.passed
            if rec.bound_x > 0:
                stats.max_excess_x = max(stats.max_excess_x, rec.dx / rec.bound_x)
                stats.max_excess_xstar = max(stats.max_excess_xstar, rec.dxstar / rec.bound_xstar)
            out.append(((ei, li, qi), rec))
            break
    return stats, out


def run_scenario(config, threads=None):
    """Run every (eps, lambda, query) cell of ``config`` and build the report."""
    from . import __version__

    t0 = time.perf_counter()
    if isinstance(config, dict):
        config = ScenarioConfig.from_dict(config)
    try:
        f = resolve_function(config.function)
    except (UnknownFunctionError, InvalidFunctionError) as exc:
        raise ConfigError(f"invalid function: {exc}") from exc
    space = NormedSpace(f.dim, config.p)
    try:
        est = estimate_threshold(f, space, THRESHOLD_TOL)
        thr = est.value
    except InconclusiveError:
        if config.lambda_grid == "auto":
            raise
        thr = float(f.known_threshold or 0.0)
    if config.lambda_grid == "auto":
        lams = default_lambda_grid(thr)
    else:
        lams = tuple(config.lambda_grid)
        low = [v for v in lams if not v > thr]
        if low:
            raise LambdaBelowThreshold(
                f"lambda values {low} do not exceed the threshold estimate {thr!r} of {f.name}")
    slack = default_slack(config.sample_density) if config.slack is None else float(config.slack)
    sample = sample_graph(f, space, config.query_box, config.sample_density,
                          lam=max(1.0, 2.0 * thr + 1.0))
    ctx = {
        "f": f, "space": space, "sample": sample, "config": config, "lams": lams,
        "lam_mid": float(np.median(lams)), "slack": slack, "threshold": thr,
    }
    jobs = [(ei, li) for ei in range(len(config.eps_grid)) for li in range(len(lams))]
    nthreads = threads or _thread_count()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            results = list(pool.map(lambda j: _run_cell(ctx, *j), jobs))
    else:
        results = [_run_cell(ctx, *j) for j in jobs]

    cells = [r[0] for r in results]
    keyed = sorted((item for r in results for item in r[1]), key=lambda t: t[0])
    scen = config.digest[:12]
    rows = []
    for _, rec in keyed:
        c = rec.constructed
        rows.append([
            scen, f.name, _num(space.p), _num(rec.eps), _num(rec.lam), _vec(rec.query_x),
            _vec(rec.query_xstar), _num(rec.nu), _vec(c.x), _vec(c.xstar), _num(rec.dx),
            _num(rec.dxstar), _num(rec.bound_x), _num(rec.bound_xstar), _num(rec.iterate_bound),
            _num(rec.solver_gap), "true" if rec.passed else "false",
        ])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    csv_text = buf.getvalue()

    admitted = sum(c.admitted for c in cells)
    passed = sum(c.passed for c in cells)
    summary = {
        "admitted": admitted,
        "passed": passed,
        "pass_rate": (passed / admitted) if admitted else None,
        "sample_entourage_passed": sum(c.sample_entourage_passed for c in cells),
        "attempts": sum(c.attempts for c in cells),
        "max_excess_x": max((c.max_excess_x for c in cells), default=0.0),
        "max_excess_xstar": max((c.max_excess_xstar for c in cells), default=0.0),
        "threshold_estimate": thr,
        "slack": slack,
        "sample_size": len(sample),
        "sample_dual_cap": sample.dual_cap,
    }
    return RunReport(
        scenario=scen, function=f.name, threshold=thr, lambda_grid=lams, rows=rows,
        records=[rec for _, rec in keyed], cells=cells, summary=summary, csv_text=csv_text,
        wall_time=time.perf_counter() - t0, version=__version__,
        extra={"config": config.to_dict()},
    )
