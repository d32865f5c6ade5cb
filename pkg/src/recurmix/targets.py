"""Target densities, half-space subsets and closed-form recurrence oracles.

All target classes are frozen dataclasses and safe to share between
concurrently running chains.

``phi_variance`` controls the variance of the Gaussian kernel used inside
:class:`MultiNormal` and :class:`TwoMode`. The default of 1 gives textbook
standard-normal building blocks; 0.5 gives the ``exp(-x**2)`` kernel needed to
reproduce the published multi-normal and two-mode tables (see README).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy.special import ndtr

from . import _kernels as K
from .errors import (
    DimensionMismatchError,
    DomainError,
    NotComputableError,
    UnsupportedError,
)

ALL = "all"
BELOW = "below"
ABOVE = "above"

_LOG_2PI = math.log(2.0 * math.pi)


class TargetDensity:
    """Base class for the closed-form target families.

    Subclasses set ``kind``, ``dimension`` and the compiled-kernel code, and
    may provide an exact sampler through :meth:`sample`.
    """

    kind: ClassVar[str] = ""
    code: ClassVar[int] = -1

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    @property
    def params(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def log_norm(self) -> float:
        """Log normalising constant added to the compiled kernel value."""
        raise NotImplementedError

    @property
    def has_direct_sampler(self) -> bool:
        return type(self).sample is not TargetDensity.sample

    def log_density(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"{self.kind} expects points of dimension {self.dimension}, got {x.shape[0]}"
            )
        return float(K.log_density_unnorm(self.code, self.params, x)) + self.log_norm

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` exact i.i.d. points, shape ``(size, dimension)``."""
        raise UnsupportedError(f"{self.kind} has no direct sampler")

    def to_dict(self) -> dict:
        raise NotImplementedError


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class MultiNormal(TargetDensity):
    """Product of ``d`` Gaussians, the first scaled by ``sigma1``."""

    d: int
    sigma1: float = 1.0
    phi_variance: float = 1.0

    kind: ClassVar[str] = "multi_normal"
    code: ClassVar[int] = K.MULTI_NORMAL

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        _check_positive("sigma1", self.sigma1)
        _check_positive("phi_variance", self.phi_variance)

    @property
    def dimension(self):
        return int(self.d)

    @cached_property
    def params(self):
        return np.array([self.sigma1, self.phi_variance], dtype=float)

    @cached_property
    def component_sd(self) -> np.ndarray:
        sd = np.full(self.dimension, math.sqrt(self.phi_variance))
        sd[0] *= self.sigma1
        return sd

    @cached_property
    def log_norm(self):
        return float(-0.5 * self.dimension * _LOG_2PI - np.log(self.component_sd).sum())

    def sample(self, rng, size):
        return rng.standard_normal((size, self.dimension)) * self.component_sd

    def to_dict(self):
        return {"kind": self.kind, "d": self.dimension, "sigma1": self.sigma1,
                "phi_variance": self.phi_variance}


@dataclass(frozen=True)
class TwoMode(TargetDensity):
    """Equal mixture of two Gaussians centred at 0 and ``a`` (one dimension)."""

    a: float
    phi_variance: float = 1.0

    kind: ClassVar[str] = "two_mode"
    code: ClassVar[int] = K.TWO_MODE

    def __post_init__(self):
        _check_positive("a", self.a)
        _check_positive("phi_variance", self.phi_variance)

    @property
    def dimension(self):
        return 1

    @cached_property
    def params(self):
        return np.array([self.a, self.phi_variance], dtype=float)

    @cached_property
    def log_norm(self):
        return -0.5 * math.log(2.0 * math.pi * self.phi_variance) - math.log(2.0)

    def sample(self, rng, size):
        sd = math.sqrt(self.phi_variance)
        centre = np.where(rng.random(size) < 0.5, 0.0, self.a)
        return (centre + sd * rng.standard_normal(size)).reshape(size, 1)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "phi_variance": self.phi_variance}


@dataclass(frozen=True)
class ScaleProblem(TargetDensity):
    """Two-dimensional target whose fast direction flips across a boundary.

    With ``region="ordered"`` the density is ``phi(x1) phi(x2/s)/s`` where
    ``x1 > x2`` and ``phi(x1/s) phi(x2)/s`` elsewhere. ``region="cross"``
    uses ``|x1| > |x2|`` as the switching condition instead, which puts mass
    on both half-axes; it needs the extra normaliser ``(4/pi) atan(1/s)``.
    """

    sigma1: float
    region: str = "ordered"

    kind: ClassVar[str] = "scale_problem"
    code: ClassVar[int] = K.SCALE_PROBLEM

    def __post_init__(self):
        _check_positive("sigma1", self.sigma1)
        if self.region not in ("ordered", "cross"):
            raise DomainError(f"region must be 'ordered' or 'cross', got {self.region!r}")

    @property
    def dimension(self):
        return 2

    @cached_property
    def params(self):
        return np.array([self.sigma1, 1.0 if self.region == "cross" else 0.0])

    @cached_property
    def normaliser(self) -> float:
        if self.region == "ordered":
            return 1.0
        return 4.0 / math.pi * math.atan(1.0 / self.sigma1)

    @cached_property
    def log_norm(self):
        return -_LOG_2PI - math.log(self.sigma1) - math.log(self.normaliser)

    def _in_first_region(self, x1, x2):
        if self.region == "cross":
            return np.abs(x1) > np.abs(x2)
        return x1 > x2

    def sample(self, rng, size):
        # Pick a branch with prob 1/2, draw from its Gaussian, keep the draw
        # only if it lands in that branch's region. Both regions carry the same
        # mass under their own Gaussian, so accepted draws are exact.
        out = np.empty((size, 2))
        filled = 0
        while filled < size:
            m = 2 * (size - filled) + 16
            u = rng.standard_normal(m)
            v = rng.standard_normal(m)
            first = rng.random(m) < 0.5
            x1 = np.where(first, u, self.sigma1 * u)
            x2 = np.where(first, self.sigma1 * v, v)
            keep = self._in_first_region(x1, x2) == first
            take = np.flatnonzero(keep)[: size - filled]
            out[filled:filled + take.size, 0] = x1[take]
            out[filled:filled + take.size, 1] = x2[take]
            filled += take.size
        return out

    def marginal_pdf(self, t):
        """Density of either coordinate (the target is symmetric under swap)."""
        s = self.sigma1
        t = np.asarray(t, dtype=float)
        phi_t = np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        phi_ts = np.exp(-0.5 * (t / s) ** 2) / (math.sqrt(2 * math.pi) * s)
        if self.region == "ordered":
            return phi_t * ndtr(t / s) + phi_ts * (1.0 - ndtr(t))
        at = np.abs(t)
        val = phi_t * (2.0 * ndtr(at / s) - 1.0) + phi_ts * 2.0 * (1.0 - ndtr(at))
        return val / self.normaliser

    def to_dict(self):
        return {"kind": self.kind, "sigma1": self.sigma1, "region": self.region}


@dataclass(frozen=True)
class Cauchy(TargetDensity):
    """One-dimensional Cauchy target."""

    location: float = 0.0
    scale: float = 1.0

    kind: ClassVar[str] = "cauchy"
    code: ClassVar[int] = K.CAUCHY

    def __post_init__(self):
        if not np.isfinite(self.location):
            raise DomainError("location must be finite")
        _check_positive("scale", self.scale)

    @property
    def dimension(self):
        return 1

    @cached_property
    def params(self):
        return np.array([self.location, self.scale], dtype=float)

    @cached_property
    def log_norm(self):
        return -math.log(math.pi * self.scale)

    def sample(self, rng, size):
        return (self.location + self.scale * rng.standard_cauchy(size)).reshape(size, 1)

    def to_dict(self):
        return {"kind": self.kind, "location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class Cycle:
    """Uniform target on ``2n + 1`` states arranged in a ring.

    States are labelled ``1..2n+1``; odd labels form A and even labels form B,
    so A and B partition the state set and every B state has two A
    neighbours.
    """

    n: int

    kind: ClassVar[str] = "cycle"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"cycle needs n >= 1, got {self.n!r}")

    @property
    def n_states(self) -> int:
        return 2 * int(self.n) + 1

    @property
    def stationary(self) -> np.ndarray:
        return np.full(self.n_states, 1.0 / self.n_states)

    @property
    def pi_A(self) -> float:
        return (self.n + 1) / self.n_states

    @property
    def pi_B(self) -> float:
        return self.n / self.n_states

    def in_A(self, state: int) -> bool:
        return state % 2 == 1

    def in_B(self, state: int) -> bool:
        return state % 2 == 0

    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic matrix over states 1..2n+1 (index = label - 1)."""
        m = self.n_states
        P = np.zeros((m, m))
        for i in range(m):
            P[i, (i - 1) % m] += 0.5
            P[i, (i + 1) % m] += 0.5
        return P

    def to_dict(self):
        return {"kind": self.kind, "n": int(self.n)}


TARGET_KINDS = {cls.kind: cls for cls in (MultiNormal, TwoMode, ScaleProblem, Cauchy, Cycle)}


def make_target(kind: str, **params):
    """Build a target from its ``kind`` tag and keyword parameters."""
    try:
        cls = TARGET_KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown target kind {kind!r}; expected one of {sorted(TARGET_KINDS)}")
    return cls(**params)


# ---------------------------------------------------------------------------
# subsets


@dataclass(frozen=True)
class HalfSpace:
    """Strict half-space ``{x : x[c] < t}`` or ``{x : x[c] > t}``.

    With ``component == "all"`` every coordinate must satisfy the inequality,
    which gives the all-component box.
    """

    component: int | str
    direction: str
    threshold: float

    def __post_init__(self):
        if self.direction not in (BELOW, ABOVE):
            raise DomainError(f"direction must be 'below' or 'above', got {self.direction!r}")
        if not np.isfinite(self.threshold):
            raise DomainError("threshold must be finite")
        if self.component != ALL and (int(self.component) != self.component or self.component < 0):
            raise DomainError(f"component must be a non-negative index or 'all', got {self.component!r}")

    @property
    def encoded(self) -> tuple[float, float, float]:
        comp = -1 if self.component == ALL else int(self.component)
        return float(comp), (-1.0 if self.direction == BELOW else 1.0), float(self.threshold)

    def _check_dim(self, d):
        if self.component != ALL and self.component >= d:
            raise DimensionMismatchError(
                f"subset uses component {self.component} but points have dimension {d}"
            )

    def __call__(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_dim(x.shape[0])
        return bool(self.contains(x[None, :])[0])

    def contains(self, X) -> np.ndarray:
        """Vectorised membership for the rows of ``X``."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        self._check_dim(X.shape[1])
        cols = X if self.component == ALL else X[:, [int(self.component)]]
        if self.direction == BELOW:
            return np.all(cols < self.threshold, axis=1)
        return np.all(cols > self.threshold, axis=1)

    def describe(self) -> dict:
        return {"component": self.component, "direction": self.direction,
                "threshold": self.threshold}


def subset_halfspace(component, direction, threshold) -> HalfSpace:
    """Build one half of a :class:`SubsetPair`."""
    return HalfSpace(component, direction, float(threshold))


def _disjoint(A: HalfSpace, B: HalfSpace) -> bool:
    if A.direction == B.direction:
        return False
    if A.component != ALL and B.component != ALL and A.component != B.component:
        return False
    lo, hi = (A, B) if A.direction == BELOW else (B, A)
    return lo.threshold <= hi.threshold


@dataclass(frozen=True)
class SubsetPair:
    """Two disjoint subsets A and B with optional exact probabilities."""

    A: HalfSpace
    B: HalfSpace
    pi_A: float | None = None
    pi_B: float | None = None
    descriptor: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not _disjoint(self.A, self.B):
            raise DomainError(f"subsets are not disjoint: {self.A} vs {self.B}")
        for name in ("pi_A", "pi_B"):
            p = getattr(self, name)
            if p is not None and not (0.0 < p < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {p}")
        if not self.descriptor:
            object.__setattr__(self, "descriptor", {"A": self.A.describe(), "B": self.B.describe()})

    @property
    def encoded(self) -> np.ndarray:
        return np.array(self.A.encoded + self.B.encoded, dtype=float)

    def membership(self, X) -> tuple[np.ndarray, np.ndarray]:
        return self.A.contains(X), self.B.contains(X)

    @property
    def independence_M(self) -> float | None:
        if self.pi_A is None or self.pi_B is None:
            return None
        return independence_expected_M(self.pi_A, self.pi_B)


def subset_pair(component, a, b, target: TargetDensity | None = None) -> SubsetPair:
    """``A = {x_c < a}``, ``B = {x_c > b}``; exact probabilities filled when available."""
    A = subset_halfspace(component, BELOW, a)
    B = subset_halfspace(component, ABOVE, b)
    pa = pb = None
    if target is not None:
        try:
            pa = subset_probability(target, A)
            pb = subset_probability(target, B)
        except NotComputableError:
            pa = pb = None
        if pa is not None and not (0.0 < pa < 1.0 and 0.0 < pb < 1.0):
            # a subset with numerically zero mass: keep the pair, drop the oracle
            pa = pb = None
    return SubsetPair(A, B, pa, pb)


# ---------------------------------------------------------------------------
# exact subset probabilities


def adaptive_simpson(f, a, b, rtol=1e-6, atol=1e-15, max_depth=60):
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``."""
    if b <= a:
        return 0.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(fa, fm, fb, a, b)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, max_depth)]
    while stack:
        lo, hi, flo, fmid, fhi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        err = left + right - est
        tol = max(atol, rtol * abs(left + right))
        if depth <= 0 or abs(err) <= 15.0 * tol:
            total += left + right + err / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, depth - 1))
            stack.append((mid, hi, fmid, frm, fhi, right, depth - 1))
    return total


def _quad_below(pdf, t, scale, breaks=()):
    span = 12.0 * scale
    pts = sorted({-span, span, *[p for p in breaks if -span < p < span]})
    upper = min(t, span)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if lo >= upper:
            break
        # rtol applies per panel; tightened so the sum stays within 1e-6
        total += adaptive_simpson(pdf, lo, min(hi, upper), rtol=1e-9)
    return total


def subset_probability(target: TargetDensity, subset: HalfSpace) -> float:
    """Exact probability of a half-space under a closed-form target.

    Gaussian marginals use the normal CDF, the Cauchy uses its arctan form and
    the scale problem integrates its marginal density by adaptive Simpson on a
    domain truncated at 12 scale units.

    Raises
    ------
    NotComputableError
        For combinations without a closed form (callers fall back to Monte
        Carlo).
    """
    d = getattr(target, "dimension", None)
    if d is not None:
        subset._check_dim(d)
    t = subset.threshold
    below = subset.direction == BELOW

    if isinstance(target, MultiNormal):
        sds = target.component_sd if subset.component == ALL else [target.component_sd[int(subset.component)]]
        probs = [float(ndtr(t / s)) if below else float(ndtr(-t / s)) for s in sds]
        return float(np.prod(probs))

    if isinstance(target, TwoMode):
        s = math.sqrt(target.phi_variance)
        lo = 0.5 * ndtr(t / s) + 0.5 * ndtr((t - target.a) / s)
        return float(lo if below else 1.0 - lo)

    if isinstance(target, Cauchy):
        lo = 0.5 + math.atan((t - target.location) / target.scale) / math.pi
        return float(lo if below else 1.0 - lo)

    if isinstance(target, ScaleProblem):
        if subset.component == ALL:
            raise NotComputableError("all-component boxes are not supported for the scale problem")
        s = target.sigma1
        breaks = (0.0, -s, s, -6 * s, 6 * s, -1.0, 1.0)
        lo = _quad_below(target.marginal_pdf, t, max(1.0, s), breaks)
        return float(lo if below else 1.0 - lo)

    raise NotComputableError(f"no exact subset probability for {type(target).__name__}")


# ---------------------------------------------------------------------------
# closed-form recurrence oracles


def independence_expected_M(pi_A: float, pi_B: float) -> float:
    """Expected recurrence-interval length when every state is drawn from the target.

    Equals ``1/pi_A + 1/pi_B``.
    """
    for name, p in (("pi_A", pi_A), ("pi_B", pi_B)):
        if not (0.0 < p < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {p}")
    return 1.0 / pi_A + 1.0 / pi_B


def cycle_closed_form(n: int) -> tuple[float, float]:
    """Published closed form ``(M, H)`` for the ``2n + 1`` state cycle.

    ``M = (4n+5)/(2n+1)`` and ``H = n(n+1)(4n+5)/(2n+1)^3``. These agree with
    the simulated chain at ``n = 1`` only; the renewal rate of the chain as
    specified gives ``M = (2n+1)/n`` (see :func:`cycle_renewal_form`).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"cycle needs n >= 1, got {n!r}")
    n = int(n)
    M = (4 * n + 5) / (2 * n + 1)
    H = n * (n + 1) * (4 * n + 5) / (2 * n + 1) ** 3
    return M, H


def cycle_renewal_form(n: int) -> tuple[float, float]:
    """``(M, H)`` for the cycle from the renewal rate of B -> A steps.

    Every B state has only A neighbours, so each B visit is followed by an
    interval start; intervals therefore start at rate ``pi(B) = n/(2n+1)``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"cycle needs n >= 1, got {n!r}")
    n = int(n)
    M = (2 * n + 1) / n
    return M, (n + 1) / (2 * n + 1)
