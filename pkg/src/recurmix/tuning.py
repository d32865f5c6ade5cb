"""Step-length sweeps that locate the recurrence-minimising proposal scale.

For a fixed pair of subsets, minimising the expected recurrence length
``M`` is equivalent to minimising ``H``, so the sweep ranks grid points by
``M_hat`` and needs no subset probabilities. Replicate ``r`` at grid point
``g`` draws from the random stream keyed ``(g, r)``, which makes the output
independent of scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._format import dumps_csv
from .errors import DomainError, NoRecurrenceError
from .recurrence import RecurrenceDetector
from .sampler import ChainConfig, ProposalConfig, independence_chain, map_ordered, run_chain
from .targets import SubsetPair, TargetDensity

POINTS_PER_DECADE = 15
MIN_CHAIN_LENGTH = 10_000
SAMPLERS = ("rw", "independence")


def log_grid(center: float, half_width: int = 5, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Geometric grid ``center * 10**(j/per_decade)`` for ``|j| <= half_width``."""
    if not center > 0:
        raise DomainError("grid center must be positive")
    j = np.arange(-half_width, half_width + 1)
    return center * 10.0 ** (j / per_decade)


def log_range(lo: float, hi: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Geometric grid from ``lo`` to at least ``hi`` with the given density."""
    if not 0 < lo < hi:
        raise DomainError("need 0 < lo < hi")
    n = int(math.ceil(per_decade * math.log10(hi / lo) - 1e-9))
    return lo * 10.0 ** (np.arange(n + 1) / per_decade)


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs.

    Parameters
    ----------
    target, subsets
        Target density and the A/B pair.
    sigma_grid : sequence of float
        Strictly increasing positive step lengths.
    n_iter : int
        Chain length per replicate (at least 10^4), burn-in included.
    replicates : int, default 4
    seed : int, default 0
        Root seed; replicate ``r`` of grid point ``g`` uses stream ``(g, r)``.
    burn_in : int, optional
        Defaults to 10% of ``n_iter``.
    sampler : {"rw", "independence"}
        ``"independence"`` ignores the grid value and gives the i.i.d. baseline.
    scales : sequence of float, optional
        Per-component proposal stretch.
    phi_variance : float, default 1
        Variance of the proposal kernel (see :class:`ProposalConfig`).
    """

    target: TargetDensity
    subsets: SubsetPair
    sigma_grid: tuple[float, ...]
    n_iter: int = 100_000
    replicates: int = 4
    seed: int = 0
    burn_in: int | None = None
    sampler: str = "rw"
    scales: tuple[float, ...] | None = None
    phi_variance: float = 1.0

    def __post_init__(self):
        grid = tuple(float(s) for s in np.atleast_1d(np.asarray(self.sigma_grid, dtype=float)))
        object.__setattr__(self, "sigma_grid", grid)
        if not grid:
            raise DomainError("sigma_grid is empty")
        if any(not (math.isfinite(s) and s > 0) for s in grid):
            raise DomainError("sigma_grid values must be positive and finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("sigma_grid must be strictly increasing")
        if self.n_iter < MIN_CHAIN_LENGTH:
            raise DomainError(f"n_iter must be at least {MIN_CHAIN_LENGTH}")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.sampler not in SAMPLERS:
            raise DomainError(f"sampler must be one of {SAMPLERS}")
        ChainConfig(self.n_iter, self.burn_in, self.seed)

    def chain(self, g: int, r: int) -> ChainConfig:
        return ChainConfig(self.n_iter, self.burn_in, self.seed, "target", (g, r))


@dataclass(frozen=True)
class ReplicateResult:
    acceptance_rate: float
    S1: float
    n_observed: int
    m: int
    n_intervals: int

    @property
    def M_hat(self) -> float:
        return self.n_observed / self.m if self.n_intervals > 0 else math.nan


@dataclass(frozen=True)
class SweepRow:
    """Replicate-averaged statistics at one step length.

    ``M_hat`` and ``H_hat`` are ``nan`` (and ``available`` is false) unless
    every replicate completed at least one interval.
    """

    sigma2: float
    acceptance_rate: float
    acceptance_se: float
    S1: float
    M_hat: float
    M_se: float
    H_hat: float
    m_completed: int
    replicates: int
    replicate_results: tuple = field(default=(), repr=False, compare=False)

    @property
    def available(self) -> bool:
        return math.isfinite(self.M_hat)

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "acceptance_rate": self.acceptance_rate,
                "acceptance_se": self.acceptance_se, "S1": self.S1, "M_hat": self.M_hat,
                "M_se": self.M_se, "H_hat": self.H_hat, "m_completed": self.m_completed,
                "replicates": self.replicates, "available": self.available}


SWEEP_COLUMNS = ("sigma2", "acceptance_rate", "acceptance_se", "S1", "M_hat", "M_se",
                 "H_hat", "m_completed", "replicates")


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not np.all(np.isfinite(v)):
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def run_replicate(config: SweepConfig, g: int, r: int) -> ReplicateResult:
    """One chain at grid point ``g``, replicate ``r``."""
    det = RecurrenceDetector()
    chain = config.chain(g, r)
    if config.sampler == "independence":
        stats = independence_chain(chain, config.target, config.subsets, [det])
    else:
        proposal = ProposalConfig(config.sigma_grid[g], config.scales, config.phi_variance)
        stats = run_chain(chain, config.target, proposal, config.subsets, [det])
    k = det.lengths.size
    return ReplicateResult(stats.acceptance_rate, stats.mean_jump_S1, det.n,
                           k + 1 if k else 0, k)


def make_row(sigma2: float, results, subsets: SubsetPair | None = None) -> SweepRow:
    acc, acc_se = _mean_se([r.acceptance_rate for r in results])
    S1, _ = _mean_se([r.S1 for r in results])
    M, M_se = _mean_se([r.M_hat for r in results])
    H = math.nan
    indep = subsets.independence_M if subsets is not None else None
    if indep is not None and math.isfinite(M):
        H = M / indep
    m_done = sum(r.n_intervals for r in results)
    return SweepRow(float(sigma2), acc, acc_se, S1, M, M_se, H, int(m_done), len(results), tuple(results))


def sweep(config: SweepConfig, jobs: int = 1) -> list[SweepRow]:
    """Evaluate every grid point; rows come back ordered by ``sigma2``."""
    tasks = [(g, r) for g in range(len(config.sigma_grid)) for r in range(config.replicates)]
    results = map_ordered(lambda gr: run_replicate(config, *gr), tasks, jobs)
    R = config.replicates
    return [make_row(s, results[g * R:(g + 1) * R], config.subsets)
            for g, s in enumerate(config.sigma_grid)]


def optimal_sigma(rows) -> tuple[float, SweepRow]:
    """Row with the smallest ``M_hat``; rows within one SE of it go to the smallest ``sigma2``.

    Raises
    ------
    NoRecurrenceError
        If no row has an available ``M_hat``.
    """
    ok = [r for r in rows if r.available]
    if not ok:
        raise NoRecurrenceError(0, "no grid point completed a recurrence interval")
    best = min(ok, key=lambda r: r.M_hat)
    tol = best.M_se if math.isfinite(best.M_se) else 0.0
    tied = [r for r in ok if r.M_hat <= best.M_hat + tol]
    chosen = min(tied, key=lambda r: r.sigma2)
    return chosen.sigma2, chosen


def refine_minimum(rows) -> float:
    """Step length at the vertex of a parabola in ``log sigma2`` through the argmin and its neighbours.

    Falls back to the argmin itself when it sits on the grid edge or the
    three points are not convex.
    """
    ok = [r for r in rows if r.available]
    if not ok:
        raise NoRecurrenceError(0, "no grid point completed a recurrence interval")
    i = min(range(len(ok)), key=lambda j: ok[j].M_hat)
    if i == 0 or i == len(ok) - 1:
        return ok[i].sigma2
    x = np.log([ok[i - 1].sigma2, ok[i].sigma2, ok[i + 1].sigma2])
    y = np.array([ok[i - 1].M_hat, ok[i].M_hat, ok[i + 1].M_hat])
    a, b, _ = np.polyfit(x, y, 2)
    if a <= 0:
        return ok[i].sigma2
    vertex = float(np.clip(-b / (2 * a), x[0], x[2]))
    return math.exp(vertex)


def bracketing_sweep(config: SweepConfig, lo: float, hi: float, coarse_per_decade: int = 3,
                     per_decade: int = POINTS_PER_DECADE, jobs: int = 1):
    """Coarse pass over ``[lo, hi]`` followed by a fine grid around its minimum.

    Returns
    -------
    (fine_rows, coarse_rows)
        The fine grid spans one coarse step either side of the coarse argmin.
    """
    coarse = sweep(replace(config, sigma_grid=tuple(log_range(lo, hi, coarse_per_decade))), jobs)
    _, best = optimal_sigma(coarse)
    half = int(math.ceil(per_decade / coarse_per_decade))
    fine = sweep(replace(config, sigma_grid=tuple(log_grid(best.sigma2, half, per_decade))), jobs)
    return fine, coarse


@dataclass(frozen=True)
class AcceptanceProfile:
    sigma2: np.ndarray
    acceptance: np.ndarray
    M_hat: np.ndarray
    decreasing: bool

    def to_csv(self) -> str:
        return dumps_csv(("sigma2", "acceptance_rate", "M_hat"), zip(self.sigma2, self.acceptance, self.M_hat))


def acceptance_profile(rows, noise_se: float = 3.0) -> AcceptanceProfile:
    """Pair each step length with its acceptance rate and check the rate falls with ``sigma2``.

    An increase between neighbours counts as noise when it is within
    ``noise_se`` combined standard errors.
    """
    rows = sorted(rows, key=lambda r: r.sigma2)
    if not rows:
        raise DomainError("no rows")
    s = np.array([r.sigma2 for r in rows])
    a = np.array([r.acceptance_rate for r in rows])
    se = np.array([r.acceptance_se if math.isfinite(r.acceptance_se) else 0.0 for r in rows])
    M = np.array([r.M_hat for r in rows])
    rise = np.diff(a)
    slack = noise_se * np.hypot(se[:-1], se[1:])
    return AcceptanceProfile(s, a, M, bool(np.all(rise <= slack)))


def sweep_csv(rows) -> str:
    return dumps_csv(SWEEP_COLUMNS, ((getattr(r, c) for c in SWEEP_COLUMNS) for r in rows))
