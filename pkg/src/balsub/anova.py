"""ANOVA model matrices, subsample OLS and information-matrix diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal, NamedTuple

import numpy as np
import scipy.linalg

from .criterion import balance_stats, f_direct, is_orthogonal_array
from .dataset import DataError, LevelSpec

Coding = Literal["dummy", "orthonormal"]

SINGULAR_RTOL = 1e-10
DOMAIN_CAP = 10**6


@dataclass(frozen=True)
class CodedMatrix:
    values: np.ndarray
    coding: Coding
    column_map: tuple

    @property
    def shape(self):
        return self.values.shape


def _check_rows(rows, spec: LevelSpec) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if rows.shape[1] != spec.p:
        raise DataError(f"rows have {rows.shape[1]} columns, spec has {spec.p}")
    if rows.size and (rows.min() < 0 or np.any(rows.max(axis=0) >= spec.array)):
        raise DataError("level code out of range")
    return rows


def _column_map(spec: LevelSpec) -> tuple:
    cols = ["intercept"]
    for j, q in enumerate(spec.q):
        cols.extend((j, k) for k in range(1, q))
    return tuple(cols)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def dummy_block(q: int) -> np.ndarray:
    """``q x (q-1)`` indicator block; level 0 is the reference."""
    return _frozen(np.eye(q)[:, 1:].copy())


@lru_cache(maxsize=None)
def contrast_block(q: int) -> np.ndarray:
    """``q x (q-1)`` Helmert contrasts scaled so that ``H.T @ H = q I``."""
    return _frozen(np.sqrt(q) * scipy.linalg.helmert(q).T)


def _code(rows, spec: LevelSpec, block, coding: Coding) -> CodedMatrix:
    rows = _check_rows(rows, spec)
    out = np.empty((rows.shape[0], spec.Q))
    out[:, 0] = 1.0
    pos = 1
    for j, q in enumerate(spec.q):
        out[:, pos:pos + q - 1] = block(q)[rows[:, j]]
        pos += q - 1
    return CodedMatrix(out, coding, _column_map(spec))


def dummy_code(rows, spec: LevelSpec) -> CodedMatrix:
    return _code(rows, spec, dummy_block, "dummy")


def orthonormal_code(rows, spec: LevelSpec) -> CodedMatrix:
    return _code(rows, spec, contrast_block, "orthonormal")


def code(rows, spec: LevelSpec, coding: Coding = "dummy") -> CodedMatrix:
    if coding == "dummy":
        return dummy_code(rows, spec)
    if coding == "orthonormal":
        return orthonormal_code(rows, spec)
    raise ValueError(f"unknown coding {coding!r}")


@dataclass(frozen=True)
class OlsFit:
    beta_hat: np.ndarray | None
    info_matrix: np.ndarray
    min_singular_value: float
    singular: bool
    coding: Coding = "dummy"


def fit_ols(Z: CodedMatrix, y) -> OlsFit:
    """Least squares on a coded subsample.

    A design whose smallest singular value is below ``1e-10`` times its
    largest is flagged singular and gets no estimate.
    """
    X = Z.values
    y = np.asarray(y, dtype=float).ravel()
    if y.size != X.shape[0]:
        raise ValueError(f"y has length {y.size}, Z has {X.shape[0]} rows")
    n, Q = X.shape
    U, sv, Vt = np.linalg.svd(X, full_matrices=False)
    smin = float(sv[-1]) if n >= Q else 0.0
    singular = n < Q or smin < SINGULAR_RTOL * float(sv[0])
    return OlsFit(
        beta_hat=None if singular else Vt.T @ ((U.T @ y) / sv),
        info_matrix=X.T @ X,
        min_singular_value=smin,
        singular=bool(singular),
        coding=Z.coding,
    )


def info_fit(Z: CodedMatrix) -> OlsFit:
    """Information-matrix-only fit, for diagnostics without a response."""
    return fit_ols(Z, np.zeros(Z.shape[0]))


def log_d_criterion(Z: CodedMatrix) -> float:
    sign, logdet = np.linalg.slogdet(Z.values.T @ Z.values)
    return float(logdet) if sign > 0 else -np.inf


def d_criterion(Z: CodedMatrix) -> float:
    """``det(Z^T Z)``; at most ``n^Q`` under orthonormal coding."""
    logdet = log_d_criterion(Z)
    if __debug__ and Z.coding == "orthonormal":
        n, Q = Z.shape
        assert logdet <= Q * np.log(n) + 1e-6, "determinant exceeds n^Q"
    return float(np.exp(logdet))


# --------------------------------------------------------------------------
# Leverage over the level-combination domain
# --------------------------------------------------------------------------

def iter_domain(spec: LevelSpec, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """All level combinations, in lexicographic order, ``chunk`` rows at a time."""
    total = spec.n_combinations
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        yield np.stack(np.unravel_index(flat, spec.q), axis=1)


def domain_rows(spec: LevelSpec) -> np.ndarray:
    return np.concatenate(list(iter_domain(spec)))


class Leverage(NamedTuple):
    value: float
    domain: Literal["full", "partial"]


def evaluation_domain(spec: LevelSpec, candidates=None, cap: int = DOMAIN_CAP):
    """Chunks of the rows over which worst cases are taken, and the domain label.

    The full set of level combinations is used when it has at most ``cap``
    elements; otherwise the distinct rows of ``candidates``.
    """
    if spec.n_combinations <= cap:
        return iter_domain(spec), "full"
    if candidates is None:
        raise ValueError(
            f"{spec.n_combinations} level combinations exceed the cap of {cap}; "
            "pass candidate rows for a partial-domain evaluation"
        )
    rows = np.unique(np.asarray(candidates), axis=0)
    return (rows[i:i + (1 << 16)] for i in range(0, rows.shape[0], 1 << 16)), "partial"


def leverages(fit: OlsFit, rows, spec: LevelSpec) -> np.ndarray:
    """``z^T M^-1 z`` for every row, in the fit's coding."""
    if fit.singular:
        raise ValueError("leverage is undefined for a singular fit")
    factor = scipy.linalg.cho_factor(fit.info_matrix, lower=True)
    Z = code(rows, spec, fit.coding).values
    W = scipy.linalg.solve_triangular(factor[0], Z.T, lower=True)
    return np.einsum("ij,ij->j", W, W)


def max_leverage(fit: OlsFit, spec: LevelSpec, candidates=None,
                 cap: int = DOMAIN_CAP) -> Leverage:
    """Worst-case ``z^T M^-1 z`` over all level combinations; at least ``Q / n``."""
    chunks, domain = evaluation_domain(spec, candidates, cap)
    best = max(float(leverages(fit, rows, spec).max()) for rows in chunks)
    return Leverage(best, domain)


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------

def diagnostics(rows, spec: LevelSpec, candidates=None, cap: int = DOMAIN_CAP) -> dict:
    """Balance and information summary of a subsample, JSON-ready."""
    rows = _check_rows(rows, spec)
    n, Q = rows.shape[0], spec.Q
    stats = balance_stats(rows, spec)
    f = f_direct(stats, spec)
    dummy = info_fit(dummy_code(rows, spec))
    ortho = orthonormal_code(rows, spec)
    logdet = log_d_criterion(ortho)
    out = {
        "n": n,
        "Q": Q,
        "f": f,
        "oa": is_orthogonal_array(rows, spec),
        "singular": dummy.singular,
        "min_singular_value": dummy.min_singular_value,
        "det_orthonormal": float(np.exp(logdet)),
        "det_bound": float(n) ** Q,
        "det_ratio": float(np.exp(logdet - Q * np.log(n))),
        "max_leverage": None,
        "leverage_bound": Q / n,
        "leverage_ratio": None,
        "domain": None,
    }
    if not dummy.singular:
        lev = max_leverage(info_fit(ortho), spec, candidates, cap)
        out.update(max_leverage=lev.value, leverage_ratio=lev.value * n / Q, domain=lev.domain)
    return out


def eigen_lower_bound(rows, spec: LevelSpec) -> dict:
    """Smallest eigenvalue of the dummy information matrix against ``n nu (1 - f)``.

    ``nu`` is the smallest eigenvalue of ``P^T P`` where ``P`` maps
    orthonormal-contrast codes to dummy codes over the full factorial,
    which must therefore be small enough to enumerate.
    """
    rows = _check_rows(rows, spec)
    full = domain_rows(spec)
    C = orthonormal_code(full, spec).values
    P = C.T @ dummy_code(full, spec).values / full.shape[0]
    nu = float(np.linalg.eigvalsh(P.T @ P)[0])
    Zs = dummy_code(rows, spec).values
    lam = float(np.linalg.eigvalsh(Zs.T @ Zs)[0])
    f = f_direct(balance_stats(rows, spec), spec)
    return {"lambda_min": lam, "nu": nu, "f": f, "bound": rows.shape[0] * nu * (1.0 - f)}
