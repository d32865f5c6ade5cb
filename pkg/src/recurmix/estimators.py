"""scikit-learn style wrappers around the recurrence pipeline.

These let interval analysis sit in ordinary estimator code: parameters are
set in ``__init__`` and exposed by ``get_params``, learned quantities carry a
trailing underscore, and inputs pass through ``check_array``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .inference import fit_weibull
from .recurrence import detect
from .tuning import SweepConfig, optimal_sigma, refine_minimum, sweep


class RecurrenceAnalyzer(TransformerMixin, BaseEstimator):
    """Fold a trajectory into recurrence intervals.

    Parameters
    ----------
    subsets : SubsetPair, optional
        When given, ``X`` is a trajectory of shape ``(n, d)`` and membership
        is evaluated here. Otherwise ``X`` must be an ``(n, 2)`` array of
        ``in_A``, ``in_B`` flags.
    pi_A, pi_B : float, optional
        Exact subset probabilities; enable ``R`` and ``H_hat_``.
    start_counts_as_entry : bool, default True

    Attributes
    ----------
    summary_ : RecurrenceSummary
    M_hat_, H_hat_ : float
    n_intervals_ : int
    """

    def __init__(self, subsets=None, pi_A=None, pi_B=None, start_counts_as_entry=True):
        self.subsets = subsets
        self.pi_A = pi_A
        self.pi_B = pi_B
        self.start_counts_as_entry = start_counts_as_entry

    def _membership(self, X):
        if self.subsets is not None:
            X = check_array(X, dtype=float, ensure_2d=True)
            return self.subsets.membership(X)
        X = check_array(X, dtype=None, ensure_2d=True)
        if X.shape[1] != 2:
            raise ValueError(f"membership input needs 2 columns (in_A, in_B), got {X.shape[1]}")
        return X[:, 0].astype(bool), X[:, 1].astype(bool)

    def _probabilities(self):
        pA, pB = self.pi_A, self.pi_B
        if self.subsets is not None:
            pA = self.subsets.pi_A if pA is None else pA
            pB = self.subsets.pi_B if pB is None else pB
        return pA, pB

    def fit(self, X, y=None):
        in_A, in_B = self._membership(X)
        det = detect(in_A, in_B, self.start_counts_as_entry)
        self.summary_ = det.summary(*self._probabilities())
        self.M_hat_ = self.summary_.M_hat
        self.H_hat_ = self.summary_.H_hat
        self.n_intervals_ = self.summary_.n_intervals
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def transform(self, X):
        """Interval table ``[L, P, R]`` of ``X`` (``R`` is nan without ``pi_A``)."""
        check_is_fitted(self, "summary_")
        in_A, in_B = self._membership(X)
        det = detect(in_A, in_B, self.start_counts_as_entry)
        L = det.lengths.astype(float)
        P = det.counts.astype(float)
        pA, _ = self._probabilities()
        R = P / (L * pA) if pA is not None else np.full_like(L, np.nan)
        return np.column_stack([L, P, R])


class WeibullIntervalModel(DensityMixin, BaseEstimator):
    """Weibull model of interval lengths fitted by maximum likelihood.

    Attributes
    ----------
    shape_, scale_ : float
    fit_ : WeibullFit
    """

    def fit(self, X, y=None):
        X = check_array(np.asarray(X).reshape(-1, 1), dtype=float)
        self.fit_ = fit_weibull(X.ravel())
        self.shape_ = self.fit_.shape_k
        self.scale_ = self.fit_.scale_lambda
        return self

    def score_samples(self, X):
        """Log density at each sample."""
        check_is_fitted(self, "fit_")
        t = check_array(np.asarray(X).reshape(-1, 1), dtype=float).ravel()
        k, lam = self.shape_, self.scale_
        with np.errstate(divide="ignore"):
            out = np.log(k / lam) + (k - 1) * np.log(t / lam) - (t / lam) ** k
        return np.where(t > 0, out, -np.inf)

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, random_state=None):
        check_is_fitted(self, "fit_")
        rs = check_random_state(random_state)
        return self.scale_ * rs.weibull(self.shape_, n_samples)


class StepLengthTuner(BaseEstimator):
    """Pick the proposal step length that minimises the recurrence length.

    Parameters mirror :class:`~recurmix.tuning.SweepConfig`; ``fit`` takes
    no data because the chains are generated internally.

    Attributes
    ----------
    rows_ : list of SweepRow
    best_sigma_ : float
        Smallest step length within one SE of the minimum.
    refined_sigma_ : float
        Vertex of a parabola through the minimum and its neighbours.
    """

    def __init__(self, target=None, subsets=None, sigma_grid=(1.0,), n_iter=100_000,
                 replicates=4, seed=0, phi_variance=1.0, jobs=1):
        self.target = target
        self.subsets = subsets
        self.sigma_grid = sigma_grid
        self.n_iter = n_iter
        self.replicates = replicates
        self.seed = seed
        self.phi_variance = phi_variance
        self.jobs = jobs

    def fit(self, X=None, y=None):
        cfg = SweepConfig(self.target, self.subsets, tuple(self.sigma_grid), self.n_iter,
                          self.replicates, self.seed, phi_variance=self.phi_variance)
        self.rows_ = sweep(cfg, self.jobs)
        self.best_sigma_, self.best_row_ = optimal_sigma(self.rows_)
        self.refined_sigma_ = refine_minimum(self.rows_)
        return self

    def predict(self, X=None):
        """The tuned step length."""
        check_is_fitted(self, "best_sigma_")
        return self.best_sigma_
