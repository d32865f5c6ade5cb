"""Markov chain generators feeding streaming observers.

Three chains share one observer contract:

* :func:`run_chain`: symmetric Gaussian random-walk Metropolis-Hastings,
* :func:`independence_chain`: i.i.d. draws from the target (acceptance 1),
* :func:`cycle_chain`: the uniform walk on a ring of ``2n + 1`` states.

Observers never see the trajectory itself, only per-step membership and jump
events, delivered in blocks of :data:`CHUNK` steps. Nothing proportional to
``n_iter`` is stored by the driver.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from . import rng as rng_mod
from .errors import DomainError, InvalidStateError, ObserverError, UnsupportedError
from .targets import Cycle, SubsetPair, TargetDensity

CHUNK = 1 << 16


@dataclass(frozen=True)
class ProposalConfig:
    """Isotropic Gaussian step ``sigma2``, optionally stretched per component.

    The step for component ``j`` has standard deviation
    ``sigma2 * sqrt(phi_variance) * scales[j]``. ``phi_variance`` is the
    variance of the kernel ``phi`` in ``q(y, x) = phi((y - x)/sigma2)/sigma2``;
    0.5 gives the ``exp(-u**2)`` kernel.
    """

    sigma2: float
    scales: tuple[float, ...] | None = None
    phi_variance: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DomainError(f"sigma2 must be positive, got {self.sigma2!r}")
        if not (np.isfinite(self.phi_variance) and self.phi_variance > 0):
            raise DomainError(f"phi_variance must be positive, got {self.phi_variance!r}")
        if self.scales is not None:
            object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
            if any(not (np.isfinite(s) and s > 0) for s in self.scales):
                raise DomainError("all per-component scales must be positive")

    def step_sd(self, d: int) -> np.ndarray:
        base = float(self.sigma2) * math.sqrt(self.phi_variance)
        if self.scales is None:
            return np.full(d, base)
        if len(self.scales) != d:
            raise DomainError(f"{len(self.scales)} scales given for dimension {d}")
        return base * np.asarray(self.scales)


@dataclass(frozen=True)
class ChainConfig:
    """Run length, burn-in, seed and starting point of one chain.

    ``burn_in=None`` discards the first 10% of ``n_iter``. ``initial_state``
    is ``"target"`` (exact draw when the target has a sampler, else the
    origin), ``"origin"``, or an explicit point. ``stream_key`` selects an
    independent sub-stream of ``seed`` for replicate chains.
    """

    n_iter: int
    burn_in: int | None = None
    seed: int = 0
    initial_state: str | Sequence[float] = "target"
    stream_key: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.n_iter) != self.n_iter or self.n_iter < 0:
            raise DomainError(f"n_iter must be a non-negative integer, got {self.n_iter!r}")
        burn = self.n_iter // 10 if self.burn_in is None else self.burn_in
        if int(burn) != burn or burn < 0 or burn > self.n_iter:
            raise DomainError(f"burn_in must lie in [0, n_iter], got {burn!r}")
        object.__setattr__(self, "burn_in", int(burn))
        object.__setattr__(self, "n_iter", int(self.n_iter))
        object.__setattr__(self, "seed", rng_mod.check_seed(self.seed))
        object.__setattr__(self, "stream_key", tuple(int(k) for k in self.stream_key))

    @property
    def n_observed(self) -> int:
        return self.n_iter - self.burn_in

    def generator(self) -> np.random.Generator:
        return rng_mod.stream(self.seed, *self.stream_key)

    def replicate(self, *key: int) -> "ChainConfig":
        """Same settings on the independent sub-stream ``key``."""
        return ChainConfig(self.n_iter, self.burn_in, self.seed, self.initial_state, tuple(key))


class ChainObservation(NamedTuple):
    index: int
    in_A: bool
    in_B: bool
    accepted: bool
    jump_norm: float


@dataclass
class ObservationBatch:
    """A contiguous block of observations starting at ``first_index``."""

    first_index: int
    in_A: np.ndarray
    in_B: np.ndarray
    accepted: np.ndarray
    jump_norm: np.ndarray

    def __len__(self):
        return self.in_A.shape[0]

    def __iter__(self):
        for t in range(len(self)):
            yield ChainObservation(
                self.first_index + t,
                bool(self.in_A[t]),
                bool(self.in_B[t]),
                bool(self.accepted[t]),
                float(self.jump_norm[t]),
            )


class ChainObserver:
    """Base observer. Override :meth:`observe` or, for speed, :meth:`observe_batch`."""

    def observe(self, obs: ChainObservation) -> None:
        raise NotImplementedError

    def observe_batch(self, batch: ObservationBatch) -> None:
        for obs in batch:
            self.observe(obs)


class _CallableObserver(ChainObserver):
    def __init__(self, fn):
        self.fn = fn

    def observe(self, obs):
        self.fn(obs)

    def __repr__(self):
        return f"<callable observer {self.fn!r}>"


class MembershipCounter(ChainObserver):
    """Counts visits to A and B."""

    def __init__(self):
        self.n = 0
        self.count_A = 0
        self.count_B = 0

    def observe(self, obs):
        self.n += 1
        self.count_A += obs.in_A
        self.count_B += obs.in_B

    def observe_batch(self, batch):
        self.n += len(batch)
        self.count_A += int(np.count_nonzero(batch.in_A))
        self.count_B += int(np.count_nonzero(batch.in_B))


class MembershipRecorder(ChainObserver):
    """Keeps the A-membership trace (one byte per step)."""

    def __init__(self):
        self._parts: list[np.ndarray] = []

    def observe(self, obs):
        self._parts.append(np.array([obs.in_A]))

    def observe_batch(self, batch):
        self._parts.append(batch.in_A.copy())

    @property
    def in_A(self) -> np.ndarray:
        if not self._parts:
            return np.zeros(0, dtype=bool)
        return np.concatenate(self._parts)


class EventRecorder(ChainObserver):
    """Stores every observation; for tests and short diagnostic runs."""

    def __init__(self):
        self.events: list[ChainObservation] = []

    def observe(self, obs):
        self.events.append(obs)


@dataclass(frozen=True)
class ChainStats:
    """Aggregates over the observed (post burn-in) steps."""

    acceptance_rate: float
    mean_jump_S1: float
    iterations_observed: int
    n_accepted: int
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def empty(self) -> bool:
        return self.iterations_observed == 0

    def to_dict(self) -> dict:
        return {
            "acceptance_rate": self.acceptance_rate,
            "S1": self.mean_jump_S1,
            "iterations_observed": self.iterations_observed,
            "n_accepted": self.n_accepted,
        }


def _as_observers(observers) -> list[ChainObserver]:
    out = []
    for ob in observers or ():
        if isinstance(ob, ChainObserver) or hasattr(ob, "observe_batch"):
            out.append(ob)
        elif callable(ob):
            out.append(_CallableObserver(ob))
        else:
            raise TypeError(f"{ob!r} is not an observer")
    return out


class _Collector:
    """Dispatches blocks to observers and accumulates :class:`ChainStats`."""

    def __init__(self, observers):
        self.observers = _as_observers(observers)
        self.next_index = 0
        self.n_accepted = 0
        self.jump_sum = 0.0

    def push(self, in_a, in_b, accepted, jump):
        batch = ObservationBatch(self.next_index, in_a, in_b, accepted, jump)
        for ob in self.observers:
            try:
                ob.observe_batch(batch)
            except Exception as exc:
                raise ObserverError(
                    f"observer {ob!r} failed on block starting at index {self.next_index}: {exc}"
                ) from exc
        self.next_index += len(batch)
        self.n_accepted += int(np.count_nonzero(accepted))
        self.jump_sum += float(jump.sum())

    def stats(self, metadata) -> ChainStats:
        n = self.next_index
        if n == 0:
            return ChainStats(math.nan, math.nan, 0, 0, metadata)
        return ChainStats(self.n_accepted / n, self.jump_sum / n, n, self.n_accepted, metadata)


def _initial_point(chain: ChainConfig, target: TargetDensity, gen) -> np.ndarray:
    init = chain.initial_state
    if isinstance(init, str):
        if init == "target" and target.has_direct_sampler:
            return target.sample(gen, 1)[0].astype(float)
        if init in ("target", "origin"):
            return np.zeros(target.dimension)
        raise DomainError(f"unknown initial_state {init!r}")
    x = np.asarray(init, dtype=float).reshape(-1)
    if x.shape[0] != target.dimension:
        raise DomainError(f"initial state has dimension {x.shape[0]}, target has {target.dimension}")
    return x


def _metadata(chain, x0):
    return {
        "rng": rng_mod.describe(chain.seed, *chain.stream_key),
        "initial_state": [float(v) for v in np.atleast_1d(x0)],
        "burn_in": chain.burn_in,
        "n_iter": chain.n_iter,
    }


def _blocks(n_iter, burn_in):
    """Yield ``(size, observed)`` blocks covering burn-in then observation."""
    for total, observed in ((burn_in, False), (n_iter - burn_in, True)):
        done = 0
        while done < total:
            m = min(CHUNK, total - done)
            yield m, observed
            done += m


def rw_step(state, target: TargetDensity, proposal: ProposalConfig, rng: np.random.Generator):
    """One random-walk Metropolis-Hastings transition.

    Proposes ``y = x + sigma2 * z`` with standard Gaussian ``z`` and accepts
    with probability ``min(1, pi(y)/pi(x))`` evaluated in log space.

    Returns
    -------
    (new_state, accepted)
    """
    x = np.asarray(state, dtype=float).reshape(-1)
    lp = target.log_density(x)
    if not np.isfinite(lp):
        raise InvalidStateError(f"log density at {x} is {lp}; start the chain inside the support")
    y = x + proposal.step_sd(x.shape[0]) * rng.standard_normal(x.shape[0])
    diff = target.log_density(y) - lp
    if diff >= 0.0 or math.log1p(-rng.random()) < diff:
        return y, True
    return x, False


def run_chain(chain: ChainConfig, target: TargetDensity, proposal: ProposalConfig,
              subsets: SubsetPair, observers: Iterable = ()) -> ChainStats:
    """Run random-walk Metropolis-Hastings and stream observations.

    The first ``chain.burn_in`` steps are unobserved; every later step yields
    exactly one observation, with indices starting at 0. A fixed seed and
    configuration reproduce the event stream bit for bit.
    """
    if target.code < 0:
        raise UnsupportedError(f"{type(target).__name__} has no compiled kernel")
    gen = chain.generator()
    x = _initial_point(chain, target, gen)
    params = target.params
    lp = float(K.log_density_unnorm(target.code, params, x))
    if not np.isfinite(lp):
        raise InvalidStateError(f"log density at initial state {x} is {lp}")
    meta = _metadata(chain, x)
    d = target.dimension
    scales = proposal.step_sd(d)
    sub = subsets.encoded
    for half in (subsets.A, subsets.B):
        half._check_dim(d)
    collector = _Collector(observers)

    buf_a = np.empty(CHUNK, dtype=np.bool_)
    buf_b = np.empty(CHUNK, dtype=np.bool_)
    buf_acc = np.empty(CHUNK, dtype=np.bool_)
    buf_jump = np.empty(CHUNK)
    for m, observed in _blocks(chain.n_iter, chain.burn_in):
        z = gen.standard_normal((m, d))
        logu = np.log1p(-gen.random(m))
        in_a, in_b, acc, jump = buf_a[:m], buf_b[:m], buf_acc[:m], buf_jump[:m]
        lp = K.rw_chunk(target.code, params, x, lp, z, logu, scales, sub, in_a, in_b, acc, jump)
        if observed:
            collector.push(in_a, in_b, acc, jump)
    meta["final_state"] = [float(v) for v in x]
    return collector.stats(meta)


def independence_chain(chain: ChainConfig, target: TargetDensity, subsets: SubsetPair,
                       observers: Iterable = ()) -> ChainStats:
    """Chain whose every state is an exact draw from the target."""
    if not target.has_direct_sampler:
        raise UnsupportedError(f"{type(target).__name__} has no direct sampler")
    gen = chain.generator()
    prev = target.sample(gen, 1)[0]
    meta = _metadata(chain, prev)
    collector = _Collector(observers)
    for m, observed in _blocks(chain.n_iter, chain.burn_in):
        X = target.sample(gen, m)
        steps = np.diff(np.vstack([prev[None, :], X]), axis=0)
        prev = X[-1]
        if observed:
            in_a, in_b = subsets.membership(X)
            collector.push(in_a, in_b, np.ones(m, dtype=bool), np.sqrt((steps ** 2).sum(axis=1)))
    return collector.stats(meta)


def cycle_chain(ring: Cycle, chain: ChainConfig, observers: Iterable = ()) -> ChainStats:
    """Metropolis walk on the ``2n + 1`` state ring with uniform target.

    Each step moves to a neighbour with probability 1/2 each, wrapping
    between the first and last states; the uniform target means every
    proposal is accepted and every move has length 1.
    """
    gen = chain.generator()
    N = ring.n_states
    init = chain.initial_state
    if isinstance(init, str):
        if init == "target":
            state = int(gen.integers(1, N + 1))
        elif init == "origin":
            state = 1
        else:
            raise DomainError(f"unknown initial_state {init!r}")
    else:
        state = int(np.asarray(init).reshape(-1)[0])
        if not 1 <= state <= N:
            raise DomainError(f"cycle state must lie in 1..{N}, got {state}")
    meta = _metadata(chain, state)
    collector = _Collector(observers)
    buf_a = np.empty(CHUNK, dtype=np.bool_)
    buf_b = np.empty(CHUNK, dtype=np.bool_)
    for m, observed in _blocks(chain.n_iter, chain.burn_in):
        steps = gen.integers(0, 2, m, dtype=np.int64) * 2 - 1
        in_a, in_b = buf_a[:m], buf_b[:m]
        state = K.cycle_chunk(state, N, steps, in_a, in_b)
        if observed:
            collector.push(in_a, in_b, np.ones(m, dtype=bool), np.ones(m))
    return collector.stats(meta)


def map_ordered(func: Callable, items: Sequence, jobs: int = 1) -> list:
    """Apply ``func`` to ``items`` with up to ``jobs`` threads; results keep input order.

    The compiled kernels release the GIL, so threads run chains in parallel.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
        return list(pool.map(func, items))
