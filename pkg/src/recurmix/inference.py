"""Estimators built on recurrence intervals.

Covers the occupancy estimator ``pi_hat``, the two variance bounds on it,
covariance diagnostics of the interval deviations, Weibull and exponential
fits of interval statistics, and replicate variance curves.

Throughout, an interval list is represented either by a sequence of
:class:`~recurmix.recurrence.RecurrenceInterval`, by a
:class:`~recurmix.recurrence.RecurrenceSummary`, or by a ``(lengths, counts)``
pair of integer arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ._format import dumps_csv
from .errors import (DegenerateDataError, DomainError, InsufficientReplicatesError,
                     TruncationError)
from .recurrence import RecurrenceInterval, RecurrenceSummary

SHAPE_BRACKET = (0.05, 50.0)


def _check_pi(pi_A):
    if not (0.0 < pi_A < 1.0):
        raise DomainError(f"pi_A must lie in (0, 1), got {pi_A}")


def interval_arrays(intervals) -> tuple[np.ndarray, np.ndarray]:
    """Normalise an interval list to ``(lengths, counts)`` int64 arrays."""
    if isinstance(intervals, RecurrenceSummary):
        return intervals.lengths, intervals.counts
    if isinstance(intervals, tuple) and len(intervals) == 2 and not isinstance(intervals[0], RecurrenceInterval):
        L, P = (np.asarray(a, dtype=np.int64) for a in intervals)
    else:
        L = np.array([iv.length_L for iv in intervals], dtype=np.int64)
        P = np.array([iv.count_P for iv in intervals], dtype=np.int64)
    if L.shape != P.shape or L.ndim != 1:
        raise DomainError("lengths and counts must be 1-D arrays of equal length")
    return L, P


# -- occupancy estimator ----------------------------------------------------

@dataclass(frozen=True)
class ProbabilityEstimate:
    pi_hat: float
    n: int
    count_in_A: int


def pi_hat(count_in_A: int, n: int) -> ProbabilityEstimate:
    """Fraction of the first ``n`` observed states that lie in A."""
    if n <= 0:
        raise DomainError("n must be positive")
    if not 0 <= count_in_A <= n:
        raise DomainError(f"count {count_in_A} outside [0, {n}]")
    return ProbabilityEstimate(count_in_A / n, int(n), int(count_in_A))


def weighted_pi_identity_check(intervals, pi_A: float) -> float:
    """Evaluate ``pi_A * sum(R_j L_j) / sum(L_j)`` and check it equals ``sum(P)/sum(L)``.

    Raises
    ------
    DomainError
        For an empty interval list.
    ArithmeticError
        If the two sides differ by more than 8 ulps.
    """
    _check_pi(pi_A)
    L, P = interval_arrays(intervals)
    if L.size == 0:
        raise DomainError("empty interval list")
    Lf = L.astype(float)
    R = P / (Lf * pi_A)
    weighted = pi_A * math.fsum(R * Lf) / math.fsum(Lf)
    direct = math.fsum(P.astype(float)) / math.fsum(Lf)
    if abs(weighted - direct) > 8 * np.spacing(max(abs(direct), 1e-300)):
        raise ArithmeticError(f"identity violated: {weighted!r} != {direct!r}")
    return weighted


# -- variance bounds ----------------------------------------------------------

@dataclass(frozen=True)
class VarianceBoundReport:
    """Empirical variance of ``pi_hat`` across groups next to both bounds.

    ``M_used`` is the pooled mean interval length standing in for the
    unknown expected recurrence length.
    """

    k: int
    empirical_var: float
    bound_general: float
    bound_iid: float
    c_used: float
    M_used: float
    n_groups: int

    @property
    def holds_general(self) -> bool:
        return self.empirical_var <= self.bound_general

    def to_dict(self) -> dict:
        return {"k": self.k, "empirical_var": self.empirical_var,
                "bound_general": self.bound_general, "bound_iid": self.bound_iid,
                "c_used": self.c_used, "M_used": self.M_used, "n_groups": self.n_groups}


def group_intervals(replicates, k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Take the first ``k`` complete intervals of each independent replicate.

    Raises
    ------
    TruncationError
        If a replicate has fewer than ``k`` intervals.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    groups = []
    short = []
    for i, rep in enumerate(replicates):
        L, P = interval_arrays(rep)
        if L.size < k:
            short.append((i, int(L.size)))
            continue
        groups.append((L[:k], P[:k]))
    if short:
        raise TruncationError(f"replicates with fewer than k={k} intervals (index, count): {short}")
    return groups


def variance_bounds(groups, pi_A: float, c: float = 0.0) -> VarianceBoundReport:
    """Compare the spread of ``pi_hat`` over replicate groups with its bounds.

    Parameters
    ----------
    groups : sequence
        Each entry is one replicate's interval list holding exactly ``k``
        complete intervals (see :func:`group_intervals`).
    pi_A : float
        Exact probability of A.
    c : float, default 0
        Covariance-decay constant of the correlated-interval bound.

    Returns
    -------
    VarianceBoundReport
        Variances use ``ddof=1`` across groups (or across pooled intervals
        for ``bound_iid``).
    """
    _check_pi(pi_A)
    if c < 0:
        raise DomainError("c must be >= 0")
    arrays = [interval_arrays(g) for g in groups]
    if len(arrays) < 2:
        raise InsufficientReplicatesError("variance bounds need at least 2 groups")
    ks = {L.size for L, _ in arrays}
    if len(ks) != 1 or 0 in ks:
        raise DomainError(f"all groups must hold the same positive number of intervals, got sizes {sorted(ks)}")
    k = ks.pop()
    L = np.stack([a[0] for a in arrays]).astype(float)
    P = np.stack([a[1] for a in arrays]).astype(float)
    M = L.mean()
    S = L.sum(axis=1)
    dev = P / pi_A - L                      # (R_j - 1) L_j
    inv_sq = np.mean((k * M / S) ** 2)
    pi2 = pi_A * pi_A
    bound_general = pi2 * inv_sq * np.var(dev.sum(axis=1) / (k * M), ddof=1)
    bound_iid = pi2 * (1.0 + c) / k * inv_sq * np.var(dev.ravel() / M, ddof=1)
    empirical = np.var(P.sum(axis=1) / S, ddof=1)
    return VarianceBoundReport(int(k), float(empirical), float(bound_general), float(bound_iid),
                               float(c), float(M), len(arrays))


# -- covariance diagnostics ---------------------------------------------------

MIN_CONFIDENT_INTERVALS = 30


def _corr(x, y):
    sx, sy = np.std(x), np.std(y)
    if x.size < 2 or sx == 0 or sy == 0:
        return None
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


@dataclass(frozen=True)
class CovarianceDiagnostics:
    """Correlations of interval deviations; ``None`` marks an undefined value."""

    cor_L_vs_dev: float | None
    cor_invL2_vs_dev2: float | None
    lagged_cov: dict = field(default_factory=dict)
    n_intervals: int = 0
    low_confidence: bool = False

    def to_dict(self) -> dict:
        return {"cor_L_vs_dev": self.cor_L_vs_dev, "cor_invL2_vs_dev2": self.cor_invL2_vs_dev2,
                "lagged_cov": {str(k): v for k, v in self.lagged_cov.items()},
                "n_intervals": self.n_intervals, "low_confidence": self.low_confidence}


def covariance_diagnostics(intervals, pi_A: float, max_lag: int = 5) -> CovarianceDiagnostics:
    """Correlation diagnostics behind the variance-bound assumptions.

    ``lagged_cov[h]`` is the lag-``h`` autocovariance of ``(R_j - 1) L_j``
    divided by its lag-0 variance. Fewer than 30 intervals sets
    ``low_confidence``.
    """
    _check_pi(pi_A)
    L, P = interval_arrays(intervals)
    Lf = L.astype(float)
    dev = P - pi_A * Lf
    y = P / pi_A - Lf
    lagged = {}
    var0 = np.mean((y - y.mean()) ** 2) if y.size else 0.0
    for h in range(1, max_lag + 1):
        if var0 == 0 or y.size <= h:
            lagged[h] = None
            continue
        yc = y - y.mean()
        lagged[h] = float(np.mean(yc[:-h] * yc[h:]) / var0)
    return CovarianceDiagnostics(
        _corr(Lf, dev), _corr(Lf ** -2 if Lf.size else Lf, dev ** 2), lagged,
        int(L.size), bool(L.size < MIN_CONFIDENT_INTERVALS))


# -- distribution fits --------------------------------------------------------

def _positive_samples(samples, minimum):
    t = np.asarray(samples, dtype=float).ravel()
    if t.size < minimum:
        raise DomainError(f"need at least {minimum} samples, got {t.size}")
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("samples must be finite and strictly positive")
    return t


@dataclass(frozen=True)
class WeibullFit:
    """Maximum-likelihood Weibull fit with density ``(k/lam)(t/lam)^(k-1) exp(-(t/lam)^k)``."""

    shape_k: float
    scale_lambda: float
    log_likelihood: float
    n_samples: int
    residual: float = 0.0

    @property
    def mean(self) -> float:
        return self.scale_lambda * math.gamma(1.0 + 1.0 / self.shape_k)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        return self.scale_lambda * (-np.log1p(-q)) ** (1.0 / self.shape_k)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.scale_lambda * rng.weibull(self.shape_k, size)

    def to_dict(self) -> dict:
        return {"family": "weibull", "params": {"shape": self.shape_k, "scale": self.scale_lambda},
                "n": self.n_samples, "loglik": self.log_likelihood}


def _weibull_profile(k, u, logt_mean_shifted):
    # u = ln t - max(ln t) <= 0, so exp(k u) never overflows
    w = np.exp(k * u)
    return float(np.dot(w, u) / w.sum() - logt_mean_shifted - 1.0 / k)


def fit_weibull(samples) -> WeibullFit:
    """Weibull MLE through the one-dimensional profile equation in the shape.

    Solves ``1/k = sum(t^k ln t)/sum(t^k) - mean(ln t)`` for ``k`` in
    ``[0.05, 50]`` by Brent's method, then ``lam = (mean(t^k))^(1/k)``.

    Raises
    ------
    DomainError
        Fewer than 10 samples, a non-positive sample, or no root in the
        shape bracket.
    DegenerateDataError
        All samples identical.
    """
    t = _positive_samples(samples, 10)
    logt = np.log(t)
    if np.ptp(logt) == 0:
        raise DegenerateDataError("all samples are identical; the shape is unbounded")
    top = logt.max()
    u = logt - top
    ubar = u.mean()
    lo, hi = SHAPE_BRACKET
    glo, ghi = _weibull_profile(lo, u, ubar), _weibull_profile(hi, u, ubar)
    if glo > 0 or ghi < 0:
        raise DomainError(f"shape MLE lies outside [{lo}, {hi}]")
    k = optimize.brentq(_weibull_profile, lo, hi, args=(u, ubar), xtol=1e-14, rtol=4 * np.finfo(float).eps,
                        maxiter=500)
    w = np.exp(k * u)
    log_lam = top + math.log(w.mean()) / k
    lam = math.exp(log_lam)
    n = t.size
    z = np.exp(k * (logt - log_lam))
    loglik = n * math.log(k) - n * k * log_lam + (k - 1) * logt.sum() - z.sum()
    return WeibullFit(float(k), lam, float(loglik), int(n), abs(_weibull_profile(k, u, ubar)))


@dataclass(frozen=True)
class ExponentialFit:
    rate: float
    n_samples: int
    log_likelihood: float = float("nan")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def ppf(self, q):
        return -np.log1p(-np.asarray(q, dtype=float)) / self.rate

    def to_dict(self) -> dict:
        return {"family": "exponential", "params": {"rate": self.rate},
                "n": self.n_samples, "loglik": self.log_likelihood}


def fit_exponential(samples) -> ExponentialFit:
    """Exponential MLE, ``rate = 1 / mean``."""
    t = _positive_samples(samples, 2)
    rate = 1.0 / t.mean()
    return ExponentialFit(rate, int(t.size), float(t.size * math.log(rate) - rate * t.sum()))


def quantile_pairs(samples, fit) -> np.ndarray:
    """Sorted samples against fitted quantiles at plotting positions ``(i-0.5)/n``."""
    t = np.sort(np.asarray(samples, dtype=float).ravel())
    q = (np.arange(1, t.size + 1) - 0.5) / t.size
    return np.column_stack([t, fit.ppf(q)])


# -- replicate variance curve -------------------------------------------------

@dataclass(frozen=True)
class VarianceCurve:
    """Cross-replicate spread of ``pi_hat / pi_A`` at ``n = k * M_hat``."""

    k: np.ndarray
    n: np.ndarray
    sd: np.ndarray
    envelope: np.ndarray
    replicates: int

    def below_envelope(self) -> np.ndarray:
        return self.sd <= self.envelope

    def loglog_slope(self) -> float:
        """Least-squares slope of ``log sd`` against ``log k`` (positive sd only)."""
        ok = self.sd > 0
        if ok.sum() < 2:
            raise DegenerateDataError("need at least two positive sd values")
        return float(np.polyfit(np.log(self.k[ok]), np.log(self.sd[ok]), 1)[0])

    def to_csv(self) -> str:
        return dumps_csv(("k", "sd", "envelope"), zip(self.k, self.sd, self.envelope))


def variance_curve(traces, M_hat: float, k_max: int, pi_A: float) -> VarianceCurve:
    """Standard deviation of ``pi_hat/pi_A`` across replicates for ``k = 1..k_max``.

    Parameters
    ----------
    traces : sequence of bool arrays or 2-D bool array
        A-membership of each replicate's observed states.
    M_hat : float
        Recurrence length used to set the truncation ``n_k = round(k * M_hat)``.
    k_max : int
    pi_A : float
        Exact probability of A.

    Raises
    ------
    InsufficientReplicatesError
        Fewer than two replicates.
    TruncationError
        A replicate shorter than ``n_{k_max}``.
    """
    _check_pi(pi_A)
    if not M_hat > 0:
        raise DomainError("M_hat must be positive")
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    traces = [np.asarray(tr, dtype=bool).ravel() for tr in traces]
    if len(traces) < 2:
        raise InsufficientReplicatesError("the standard deviation needs at least 2 replicates")
    k = np.arange(1, k_max + 1)
    n_k = np.maximum(1, np.rint(k * M_hat).astype(np.int64))
    need = int(n_k[-1])
    short = [(i, need - tr.size) for i, tr in enumerate(traces) if tr.size < need]
    if short:
        raise TruncationError(f"replicates shorter than {need} observations (index, shortfall): {short}")
    ratios = np.empty((len(traces), k_max))
    for i, tr in enumerate(traces):
        csum = np.cumsum(tr[:need], dtype=np.int64)
        ratios[i] = csum[n_k - 1] / n_k / pi_A
    sd = ratios.std(axis=0, ddof=1)
    return VarianceCurve(k, n_k, sd, 2.0 / np.sqrt(k), len(traces))

