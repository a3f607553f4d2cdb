"""Repeated-response simulation harness: nonsingularity, MSE and worst-case prediction error.

Seeding
-------
Everything derives from one master seed through :class:`numpy.random.SeedSequence`
entropy lists, so any single repetition can be replayed on its own:

* covariate data:          ``[master, DATA]``
* repetition ``t`` stream: ``[master, t, stream]`` with ``stream`` one of
  ``NOISE`` (full-data response), ``SELECT`` (selection seed), ``WSPE``
  (fresh test-point noise).

Covariate data are generated once per experiment; only the response noise
and the selection seed change between repetitions.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import scipy.linalg

from .anova import DOMAIN_CAP, OlsFit, code, dummy_code, evaluation_domain, fit_ols
from .criterion import f_of
from .dataset import GENERATORS, Dataset, LevelSpec, ResponseModel, gen_response
from .selector import SelectionConfig, select

DATA, NOISE, SELECT, WSPE = 0, 1, 2, 3

WspeMode = Literal["empirical", "analytic", "both"]


def stream_seed(master: int, *keys: int) -> int:
    """64-bit seed for the stream ``[master, *keys]``."""
    ss = np.random.SeedSequence([int(master), *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    spec: LevelSpec
    N: int
    n: int
    reps: int = 200
    case: int | None = 2
    methods: tuple[str, ...] = ("balanced", "uniform")
    model: ResponseModel | None = None
    seed: int = 0
    wspe_mode: WspeMode = "both"
    data: Dataset | None = None
    threads: int = 1
    domain_cap: int = DOMAIN_CAP
    tie_rule: str = "lowest-index"

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.data is not None:
            object.__setattr__(self, "N", self.data.N)
            object.__setattr__(self, "spec", self.data.spec)
        elif self.case not in GENERATORS:
            raise ValueError(f"case must be one of {sorted(GENERATORS)} or data given")
        if not 1 <= self.n <= self.N:
            raise ValueError(f"subsample size n={self.n} must be in [1, N={self.N}]")
        if self.wspe_mode not in ("empirical", "analytic", "both"):
            raise ValueError(f"unknown wspe mode {self.wspe_mode!r}")
        if self.model is None:
            object.__setattr__(self, "model", ResponseModel.ones(self.spec))
        object.__setattr__(self, "methods", tuple(self.methods))

    def resolved(self) -> dict:
        """Plain description of every setting, for reports."""
        return {
            "case": None if self.data is not None else self.case,
            "N": self.N,
            "q": list(self.spec.q),
            "n": self.n,
            "reps": self.reps,
            "methods": list(self.methods),
            "beta": self.model.beta.tolist(),
            "sigma": self.model.sigma,
            "seed": self.seed,
            "wspe_mode": self.wspe_mode,
            "threads": self.threads,
            "domain_cap": self.domain_cap,
            "tie_rule": self.tie_rule,
        }


@dataclass
class RepRecord:
    method: str
    rep: int
    nonsingular: bool
    sq_error: float
    max_leverage: float
    f: float
    selection_seed: int
    noise_seed: int


@dataclass
class MethodMetrics:
    reps: int
    nonsingular_count: int
    nonsingular_proportion: float
    mse: float
    mse_median: float
    wspe_empirical: float | None
    wspe_analytic: float | None
    domain: str | None
    flags: list[str] = field(default_factory=list)


@dataclass
class MetricsReport:
    config: dict
    methods: dict[str, MethodMetrics]
    records: list[RepRecord]

    @property
    def all_singular(self) -> bool:
        return all(m.nonsingular_count == 0 for m in self.methods.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "methods": {k: asdict(v) for k, v in self.methods.items()},
            "records": [asdict(r) for r in self.records],
        }

    def write_json(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        names = list(RepRecord.__dataclass_fields__)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for r in self.records:
                w.writerow([_csv_cell(getattr(r, k)) for k in names])

    def summary_lines(self) -> list[str]:
        out = []
        for name, m in self.methods.items():
            out.append(
                f"{name}: nonsingular={m.nonsingular_proportion:.4f} "
                f"({m.nonsingular_count}/{m.reps}) mse={_fmt(m.mse)} "
                f"wspe_empirical={_fmt(m.wspe_empirical)} wspe_analytic={_fmt(m.wspe_analytic)}"
                + (f" flags={','.join(m.flags)}" if m.flags else "")
            )
        return out


def _fmt(v):
    return "n/a" if v is None else f"{v:.6g}"


def _csv_cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(obj):
    # NaN is not valid JSON; write it as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def mse(beta_hats: Sequence, beta_true) -> float:
    """Mean over repetitions of ``||beta_hat - beta||^2``."""
    B = np.atleast_2d(np.asarray(beta_hats, dtype=float))
    if B.shape[0] == 0 or B.size == 0:
        raise ValueError("mse needs at least one estimate")
    return float(np.mean(np.sum((B - np.asarray(beta_true, dtype=float)) ** 2, axis=1)))


def wspe_empirical(beta_hats: Sequence, model: ResponseModel, spec: LevelSpec,
                   rep_ids: Sequence[int] | None = None, candidates=None,
                   cap: int = DOMAIN_CAP) -> tuple[float, str]:
    """Worst case over the domain of the repetition-averaged squared prediction error.

    Each repetition ``t`` predicts a fresh noisy response at every domain
    point, with noise from stream ``[model.seed, rep_ids[t], WSPE]``.
    Returns the value and the domain label (``"full"`` or ``"partial"``).
    """
    B = np.atleast_2d(np.asarray(beta_hats, dtype=float))
    if B.shape[0] == 0:
        raise ValueError("need at least one nonsingular fit")
    T = B.shape[0]
    if rep_ids is None:
        rep_ids = range(T)
    rngs = [np.random.default_rng([int(model.seed), int(t), WSPE]) for t in rep_ids]
    chunks, domain = evaluation_domain(spec, candidates, cap)
    worst = -np.inf
    for rows in chunks:
        Z = dummy_code(rows, spec).values
        mu = Z @ model.beta
        acc = np.zeros(rows.shape[0])
        pred = Z @ B.T
        for t, rng in enumerate(rngs):
            noise = rng.standard_normal(rows.shape[0])
            acc += (mu + model.sigma * noise - pred[:, t]) ** 2
        worst = max(worst, float(acc.max()) / T)
    return worst, domain


def wspe_analytic(fits: Sequence[OlsFit], sigma: float, spec: LevelSpec, candidates=None,
                  cap: int = DOMAIN_CAP) -> tuple[float, np.ndarray, str]:
    """Exact counterpart of :func:`wspe_empirical` for given subsamples.

    ``sigma^2 (1 + max_x mean_t z^T M_t^-1 z)``; also returns the per-fit
    maximum leverage. For a single fit this is ``sigma^2 (1 + max_leverage)``.
    """
    if not fits:
        raise ValueError("need at least one nonsingular fit")
    factors = [scipy.linalg.cholesky(f.info_matrix, lower=True) for f in fits]
    per_fit = np.full(len(fits), -np.inf)
    chunks, domain = evaluation_domain(spec, candidates, cap)
    worst = -np.inf
    for rows in chunks:
        acc = np.zeros(rows.shape[0])
        for t, (fit, L) in enumerate(zip(fits, factors)):
            Z = code(rows, spec, fit.coding).values
            W = scipy.linalg.solve_triangular(L, Z.T, lower=True)
            lev = np.einsum("ij,ij->j", W, W)
            per_fit[t] = max(per_fit[t], float(lev.max()))
            acc += lev
        worst = max(worst, float(acc.max()) / len(fits))
    return sigma**2 * (1.0 + worst), per_fit, domain


# --------------------------------------------------------------------------
# Experiment
# --------------------------------------------------------------------------

def experiment_data(config: ExperimentConfig) -> Dataset:
    if config.data is not None:
        return config.data
    gen = GENERATORS[config.case]
    return gen(config.N, config.spec, [config.seed, DATA])


def _run_rep(data: Dataset, config: ExperimentConfig, t: int, mu=None):
    """Repetition ``t``; ``mu`` is the noise-free full-data response, if precomputed."""
    model = config.model
    noise_seed = stream_seed(config.seed, t, NOISE)
    sel_seed = stream_seed(config.seed, t, SELECT)
    if mu is None:
        y = gen_response(data, replace(model, seed=noise_seed))
    else:
        # same draw as gen_response, without recomputing the mean every time
        y = mu + model.sigma * np.random.default_rng(noise_seed).standard_normal(data.N)
    out = []
    for method in config.methods:
        sub = select(method, data, SelectionConfig(config.n, sel_seed, config.tie_rule))
        fit = fit_ols(dummy_code(sub.rows, data.spec), y[sub.indices])
        sq = math.nan if fit.singular else float(np.sum((fit.beta_hat - model.beta) ** 2))
        rec = RepRecord(method, t, not fit.singular, sq, math.nan, f_of(sub, data.spec),
                        sel_seed, noise_seed)
        out.append((rec, fit))
    return out


def run_experiment(config: ExperimentConfig, data: Dataset | None = None) -> MetricsReport:
    """Simulate ``config.reps`` response draws and score each selection method.

    MSE and WSPE average over nonsingular repetitions only; a method with
    none gets NaN metrics and a ``no_nonsingular_fits`` flag.
    """
    data = experiment_data(config) if data is None else data
    mu = config.model.mean(data.levels, data.spec)
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            per_rep = list(pool.map(lambda t: _run_rep(data, config, t, mu), range(config.reps)))
    else:
        per_rep = [_run_rep(data, config, t, mu) for t in range(config.reps)]

    records: list[RepRecord] = []
    methods: dict[str, MethodMetrics] = {}
    for k, method in enumerate(config.methods):
        pairs = [rep[k] for rep in per_rep]
        good = [(rec, fit) for rec, fit in pairs if fit.beta_hat is not None]
        count = len(good)
        metrics = MethodMetrics(
            reps=config.reps,
            nonsingular_count=count,
            nonsingular_proportion=count / config.reps,
            mse=math.nan,
            mse_median=math.nan,
            wspe_empirical=None,
            wspe_analytic=None,
            domain=None,
        )
        if count == 0:
            metrics.flags.append("no_nonsingular_fits")
            if config.wspe_mode in ("empirical", "both"):
                metrics.wspe_empirical = math.nan
            if config.wspe_mode in ("analytic", "both"):
                metrics.wspe_analytic = math.nan
        else:
            sq = np.array([rec.sq_error for rec, _ in good])
            metrics.mse = float(sq.mean())
            metrics.mse_median = float(np.median(sq))
            fits = [fit for _, fit in good]
            if config.wspe_mode in ("analytic", "both"):
                value, per_fit, domain = wspe_analytic(
                    fits, config.model.sigma, data.spec, data.levels, config.domain_cap)
                metrics.wspe_analytic, metrics.domain = value, domain
                for (rec, _), lev in zip(good, per_fit):
                    rec.max_leverage = float(lev)
            if config.wspe_mode in ("empirical", "both"):
                value, domain = wspe_empirical(
                    [fit.beta_hat for fit in fits],
                    replace(config.model, seed=config.seed),
                    data.spec,
                    rep_ids=[rec.rep for rec, _ in good],
                    candidates=data.levels,
                    cap=config.domain_cap,
                )
                metrics.wspe_empirical, metrics.domain = value, domain
            if metrics.domain == "partial":
                metrics.flags.append("partial_domain")
        methods[method] = metrics
        records.extend(rec for rec, _ in pairs)

    records.sort(key=lambda r: (config.methods.index(r.method), r.rep))
    return MetricsReport(config.resolved(), methods, records)
