"""Categorical datasets: level encoding, CSV round trips and synthetic generators.

Levels are stored as 0-based integer codes in a column-major ``(N, p)``
array, so that scanning one covariate over all rows is a contiguous read.
Level ``u`` in the usual 1-based notation is code ``u - 1`` here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


@dataclass(frozen=True)
class LevelSpec:
    """Number of levels of every covariate."""

    q: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        if len(q) < 1:
            raise DataError("at least one covariate is required")
        if min(q) < 2:
            raise DataError(f"every covariate needs at least 2 levels, got q={list(q)}")
        object.__setattr__(self, "q", q)

    @property
    def p(self) -> int:
        return len(self.q)

    @cached_property
    def Q(self) -> int:
        """Number of ANOVA parameters, intercept included."""
        return 1 + sum(v - 1 for v in self.q)

    @property
    def sum_q(self) -> int:
        return sum(self.q)

    @property
    def n_combinations(self) -> int:
        return int(np.prod(self.q, dtype=object))

    @cached_property
    def array(self) -> np.ndarray:
        a = np.asarray(self.q, dtype=np.int64)
        a.flags.writeable = False
        return a


def increasing_levels(p: int) -> LevelSpec:
    """Covariate ``j`` (1-based) gets ``j + 1`` levels."""
    return LevelSpec(tuple(range(2, p + 2)))


@dataclass(frozen=True)
class Dataset:
    levels: np.ndarray
    spec: LevelSpec
    labels: tuple[tuple[str, ...], ...] = None
    response: np.ndarray | None = None
    names: tuple[str, ...] = None
    response_name: str = "y"

    def __post_init__(self):
        levels = np.asarray(self.levels)
        if levels.ndim != 2 or levels.shape[1] != self.spec.p:
            raise DataError(
                f"levels must have shape (N, {self.spec.p}), got {levels.shape}"
            )
        if levels.size and (levels.min() < 0 or np.any(levels.max(axis=0) >= self.spec.array)):
            raise DataError("level code out of range")
        levels = np.asfortranarray(levels, dtype=_code_dtype(self.spec))
        levels.flags.writeable = False
        object.__setattr__(self, "levels", levels)

        labels = self.labels
        if labels is None:
            labels = tuple(tuple(str(u + 1) for u in range(q)) for q in self.spec.q)
        labels = tuple(tuple(str(v) for v in lab) for lab in labels)
        for j, lab in enumerate(labels):
            if len(lab) != self.spec.q[j] or len(set(lab)) != len(lab):
                raise DataError(f"covariate {j} needs {self.spec.q[j]} distinct labels")
        object.__setattr__(self, "labels", labels)

        names = self.names
        if names is None:
            names = tuple(f"x{j + 1}" for j in range(self.spec.p))
        object.__setattr__(self, "names", tuple(names))

        if self.response is not None:
            y = np.asarray(self.response, dtype=float)
            if y.shape != (levels.shape[0],):
                raise DataError(f"response has length {y.size}, expected {levels.shape[0]}")
            y.flags.writeable = False
            object.__setattr__(self, "response", y)

    @property
    def N(self) -> int:
        return self.levels.shape[0]

    @property
    def p(self) -> int:
        return self.spec.p

    def with_response(self, y) -> Dataset:
        return replace(self, response=np.asarray(y, dtype=float))

    def decode(self, rows=None) -> list[list[str]]:
        """Map level codes back to their original labels."""
        codes = self.levels if rows is None else np.asarray(rows)
        return [[self.labels[j][c] for j, c in enumerate(row)] for row in codes.tolist()]

    def take(self, indices) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        y = None if self.response is None else self.response[idx]
        return replace(self, levels=self.levels[idx], response=y)


def _code_dtype(spec: LevelSpec):
    return np.int16 if max(spec.q) <= np.iinfo(np.int16).max else np.int32


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def ingest_csv(path, categorical: Sequence[str] | None = None,
               response: str | None = None) -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    Categorical columns are coded in order of first appearance. If
    ``categorical`` is omitted every column except ``response`` is used.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        header = [h.strip() for h in header]
        if response is not None and response not in header:
            raise DataError(f"{path}: response column {response!r} not found")
        if categorical is None:
            categorical = [h for h in header if h != response]
        categorical = list(categorical)
        missing = [c for c in categorical if c not in header]
        if missing:
            raise DataError(f"{path}: unknown column(s) {missing}")
        if not categorical:
            raise DataError(f"{path}: no categorical columns")
        if response in categorical:
            raise DataError(f"column {response!r} cannot be both categorical and response")

        cat_pos = [header.index(c) for c in categorical]
        resp_pos = header.index(response) if response is not None else None
        maps: list[dict[str, int]] = [{} for _ in categorical]
        codes: list[list[int]] = []
        ys: list[float] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{line_no}: ragged row with {len(row)} fields, expected {len(header)}"
                )
            coded = []
            for m, pos in zip(maps, cat_pos):
                value = row[pos]
                if value == "":
                    raise DataError(f"{path}:{line_no}: empty categorical cell in {header[pos]!r}")
                coded.append(m.setdefault(value, len(m)))
            codes.append(coded)
            if resp_pos is not None:
                try:
                    ys.append(float(row[resp_pos]))
                except ValueError:
                    raise DataError(
                        f"{path}:{line_no}: non-numeric response {row[resp_pos]!r}"
                    ) from None

    if not codes:
        raise DataError(f"{path}: no data rows")
    for name, m in zip(categorical, maps):
        if len(m) < 2:
            raise DataError(f"degenerate covariate {name!r}: {len(m)} distinct value(s)")
    spec = LevelSpec(tuple(len(m) for m in maps))
    labels = tuple(tuple(m) for m in maps)
    return Dataset(
        levels=np.array(codes, dtype=np.int64).reshape(len(codes), spec.p),
        spec=spec,
        labels=labels,
        response=np.array(ys) if resp_pos is not None else None,
        names=tuple(categorical),
        response_name=response or "y",
    )


def write_csv(data: Dataset, path, indices=None) -> None:
    """Write (a subset of) a dataset in the same dialect ``ingest_csv`` reads."""
    idx = np.arange(data.N) if indices is None else np.asarray(indices, dtype=np.int64)
    header = list(data.names)
    if data.response is not None:
        header.append(data.response_name)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        decoded = data.decode(data.levels[idx])
        for i, row in zip(idx.tolist(), decoded):
            if data.response is not None:
                row.append(repr(float(data.response[i])))
            w.writerow(row)


# --------------------------------------------------------------------------
# Synthetic covariates
# --------------------------------------------------------------------------

def _check_N(N):
    if int(N) < 1:
        raise DataError(f"N must be positive, got {N}")
    return int(N)


def gen_case1(N: int, spec: LevelSpec, seed: int) -> Dataset:
    """Independent covariates, each uniform over its levels."""
    N = _check_N(N)
    rng = np.random.default_rng(seed)
    levels = np.empty((N, spec.p), dtype=np.int64, order="F")
    for j, q in enumerate(spec.q):
        levels[:, j] = rng.integers(0, q, size=N)
    return Dataset(levels, spec)


def case2_probabilities(q: int) -> np.ndarray:
    w = np.arange(1, q + 1, dtype=float)
    return w / w.sum()


def gen_case2(N: int, spec: LevelSpec, seed: int) -> Dataset:
    """Independent covariates; level code ``u - 1`` has probability proportional to ``u``."""
    N = _check_N(N)
    rng = np.random.default_rng(seed)
    levels = np.empty((N, spec.p), dtype=np.int64, order="F")
    for j, q in enumerate(spec.q):
        levels[:, j] = rng.choice(q, size=N, p=case2_probabilities(q))
    return Dataset(levels, spec)


def discretize(values, q: int, lo: float = -3.0, hi: float = 3.0) -> np.ndarray:
    """Code values by which of ``q`` equal intervals of ``[lo, hi]`` they fall in.

    Intervals are half-open ``[a, b)`` except the last, which is closed.
    Values below ``lo`` map to code 0 and values above ``hi`` to ``q - 1``.
    """
    values = np.asarray(values, dtype=float)
    width = (hi - lo) / q
    codes = np.floor((values - lo) / width)
    return np.clip(codes, 0, q - 1).astype(np.int64)


def correlated_normals(N: int, p: int, seed: int, rho: float = 0.5) -> np.ndarray:
    """Draw ``N`` rows of a p-variate normal with unit variances and common correlation ``rho``.

    Uses numpy's PCG64 bit generator with ziggurat normals, coloured by the
    Cholesky factor of the equicorrelation matrix.
    """
    sigma = np.full((p, p), rho)
    np.fill_diagonal(sigma, 1.0)
    chol = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(seed)
    return rng.standard_normal((N, p)) @ chol.T


def gen_case3(N: int, spec: LevelSpec, seed: int, rho: float = 0.5) -> Dataset:
    """Correlated normal covariates discretized on ``[-3, 3]``."""
    N = _check_N(N)
    x = correlated_normals(N, spec.p, seed, rho)
    levels = np.empty((N, spec.p), dtype=np.int64, order="F")
    for j, q in enumerate(spec.q):
        levels[:, j] = discretize(x[:, j], q)
    return Dataset(levels, spec)


def gen_toy(N: int = 1000, spec: LevelSpec = LevelSpec((5, 5)), seed: int = 0) -> Dataset:
    """Independent standard normals, each cut into equal intervals over its observed range."""
    N = _check_N(N)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((N, spec.p))
    levels = np.empty((N, spec.p), dtype=np.int64, order="F")
    for j, q in enumerate(spec.q):
        levels[:, j] = discretize(x[:, j], q, x[:, j].min(), x[:, j].max())
    return Dataset(levels, spec)


GENERATORS = {1: gen_case1, 2: gen_case2, 3: gen_case3}


# --------------------------------------------------------------------------
# Responses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseModel:
    """Coefficients ordered (intercept, covariate-1 dummies, ..., covariate-p dummies)."""

    beta: np.ndarray
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).ravel()
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def ones(cls, spec: LevelSpec, sigma: float = 1.0, seed: int = 0) -> ResponseModel:
        return cls(np.ones(spec.Q), sigma, seed)

    def effects(self, spec: LevelSpec) -> list[np.ndarray]:
        """Per-covariate effect of each level code, with the reference level at 0."""
        if self.beta.size != spec.Q:
            raise DataError(f"beta has length {self.beta.size}, expected Q={spec.Q}")
        out, pos = [], 1
        for q in spec.q:
            out.append(np.concatenate([[0.0], self.beta[pos:pos + q - 1]]))
            pos += q - 1
        return out

    def mean(self, levels, spec: LevelSpec) -> np.ndarray:
        """Noise-free response ``z . beta`` for every row of ``levels``."""
        levels = np.asarray(levels)
        mu = np.full(levels.shape[0], self.beta[0] if self.beta.size else 0.0)
        for j, eff in enumerate(self.effects(spec)):
            mu += eff[levels[:, j]]
        return mu


def gen_response(data: Dataset, model: ResponseModel) -> np.ndarray:
    """``y = z . beta + eps`` with ``eps ~ N(0, sigma^2)`` drawn from ``model.seed``."""
    mu = model.mean(data.levels, data.spec)
    if model.sigma == 0:
        return mu
    rng = np.random.default_rng(model.seed)
    return mu + model.sigma * rng.standard_normal(data.N)
