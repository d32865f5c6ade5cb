"""Streaming detection of A -> B -> A recurrence intervals.

An interval opens when the chain enters A after having visited B, must
contain at least one B state, and closes just before the next such A entry.
The detector is a three-phase state machine that keeps O(1) state per chain;
only the completed interval records are retained.

First-interval convention: with ``start_counts_as_entry=True`` (default) a
chain that is in A at observed index 0 opens its first interval there.
Otherwise, and in strict mode always, a B visit must precede the first A
entry.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from ._format import dumps_csv
from .errors import DomainError, NoRecurrenceError, SequencingError
from .sampler import ChainObservation, ChainObserver, ObservationBatch
from .targets import independence_expected_M


class Phase(IntEnum):
    AWAIT_FIRST_A = K.AWAIT_FIRST_A
    IN_INTERVAL_AWAIT_B = K.AWAIT_B
    IN_INTERVAL_AWAIT_A = K.AWAIT_A


@dataclass(frozen=True)
class RecurrenceInterval:
    """One interval ``I_k``: indices ``start_index..end_index`` inclusive."""

    start_index: int
    end_index: int
    length_L: int
    count_P: int
    ratio_R: float | None = None


@dataclass(frozen=True)
class DetectorState:
    phase: Phase = Phase.AWAIT_FIRST_A
    start: int = -1
    count_A: int = 0
    seen_B: bool = False
    last_index: int = -1
    start_counts_as_entry: bool = True


def detector_update(state: DetectorState, index: int, in_A: bool, in_B: bool):
    """Advance the detector by one observation.

    Returns
    -------
    (DetectorState, RecurrenceInterval or None)
        The new state and the interval closed by this observation, if any.
    """
    if index <= state.last_index:
        raise SequencingError(f"index {index} does not follow {state.last_index}")
    if in_A and in_B:
        raise DomainError(f"observation {index} is in both A and B")
    phase, start, count, seen_b = state.phase, state.start, state.count_A, state.seen_B
    emitted = None
    if phase == Phase.AWAIT_FIRST_A:
        if in_A and (seen_b or (state.start_counts_as_entry and index == 0)):
            phase, start, count = Phase.IN_INTERVAL_AWAIT_B, index, 1
        elif in_B:
            seen_b = True
    elif phase == Phase.IN_INTERVAL_AWAIT_B:
        if in_A:
            count += 1
        elif in_B:
            phase = Phase.IN_INTERVAL_AWAIT_A
    elif in_A:
        emitted = RecurrenceInterval(start, index - 1, index - start, count)
        phase, start, count = Phase.IN_INTERVAL_AWAIT_B, index, 1
    new = DetectorState(phase, start, count, seen_b, index, state.start_counts_as_entry)
    return new, emitted


@dataclass(frozen=True)
class RecurrenceSummary:
    """Interval statistics of one run.

    ``m`` counts A entries that opened an interval, i.e. completed intervals
    plus the open one, and ``M_hat = n / m``.
    """

    n: int
    m: int
    M_hat: float
    H_hat: float | None
    starts: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    pi_A: float | None = None
    pi_B: float | None = None

    @property
    def n_intervals(self) -> int:
        return int(self.lengths.shape[0])

    @property
    def ratios(self) -> np.ndarray | None:
        if self.pi_A is None:
            return None
        return self.counts / (self.lengths * self.pi_A)

    @property
    def mean_length(self) -> float:
        return float(self.lengths.mean())

    @property
    def length_se(self) -> float:
        """Standard error of the mean interval length."""
        k = self.n_intervals
        if k < 2:
            return float("nan")
        return float(self.lengths.std(ddof=1) / np.sqrt(k))

    @property
    def intervals(self) -> list[RecurrenceInterval]:
        R = self.ratios
        return [
            RecurrenceInterval(int(s), int(s + L - 1), int(L), int(P), None if R is None else float(R[i]))
            for i, (s, L, P) in enumerate(zip(self.starts, self.lengths, self.counts))
        ]

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "M_hat": self.M_hat, "H_hat": self.H_hat,
                "n_intervals": self.n_intervals, "pi_A": self.pi_A, "pi_B": self.pi_B}


def _summarize_arrays(starts, lengths, counts, n, pi_A=None, pi_B=None) -> RecurrenceSummary:
    starts = np.asarray(starts, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    for name, p in (("pi_A", pi_A), ("pi_B", pi_B)):
        if p is not None and not (0.0 < p < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {p}")
    if lengths.size == 0:
        raise NoRecurrenceError(n)
    last_end = int(starts[-1] + lengths[-1] - 1)
    if n < last_end + 1:
        raise DomainError(f"n={n} is shorter than the last interval end {last_end}")
    m = lengths.size + 1
    M_hat = n / m
    H_hat = None
    if pi_A is not None and pi_B is not None:
        H_hat = M_hat / independence_expected_M(pi_A, pi_B)
    return RecurrenceSummary(int(n), int(m), float(M_hat), H_hat, starts, lengths, counts, pi_A, pi_B)


def summarize(intervals: Sequence[RecurrenceInterval], n: int, pi_A=None, pi_B=None) -> RecurrenceSummary:
    """Compute ``m``, ``M_hat = n/m`` and, given both probabilities, ``H_hat``.

    Raises
    ------
    NoRecurrenceError
        If no interval completed.
    """
    starts = [iv.start_index for iv in intervals]
    lengths = [iv.length_L for iv in intervals]
    counts = [iv.count_P for iv in intervals]
    return _summarize_arrays(starts, lengths, counts, n, pi_A, pi_B)


class RecurrenceDetector(ChainObserver):
    """Chain observer that folds membership events into intervals."""

    def __init__(self, start_counts_as_entry: bool = True):
        self.start_counts_as_entry = start_counts_as_entry
        self._st = np.array([K.AWAIT_FIRST_A, 0, -1, 0, 0, 0 if start_counts_as_entry else 1],
                            dtype=np.int64)
        self._last = -1
        self._starts: list[np.ndarray] = []
        self._lengths: list[np.ndarray] = []
        self._counts: list[np.ndarray] = []
        self.n = 0

    @property
    def state(self) -> DetectorState:
        st = self._st
        return DetectorState(Phase(int(st[0])), int(st[2]), int(st[3]), bool(st[1]),
                             self._last, self.start_counts_as_entry)

    def _append(self, s, L, P):
        if len(s):
            self._starts.append(np.asarray(s, dtype=np.int64))
            self._lengths.append(np.asarray(L, dtype=np.int64))
            self._counts.append(np.asarray(P, dtype=np.int64))

    def observe(self, obs: ChainObservation):
        new, iv = detector_update(self.state, obs.index, obs.in_A, obs.in_B)
        self._st[:4] = [int(new.phase), int(new.seen_B), new.start, new.count_A]
        self._st[4] = obs.index + 1
        self._last = obs.index
        self.n = obs.index + 1
        if iv is not None:
            self._append([iv.start_index], [iv.length_L], [iv.count_P])

    def observe_batch(self, batch: ObservationBatch):
        m = len(batch)
        if m == 0:
            return
        if batch.first_index <= self._last:
            raise SequencingError(f"block starts at {batch.first_index}, after index {self._last}")
        if np.any(batch.in_A & batch.in_B):
            raise DomainError("an observation is in both A and B")
        s = np.empty(m, dtype=np.int64)
        L = np.empty(m, dtype=np.int64)
        P = np.empty(m, dtype=np.int64)
        k = K.detect_chunk(batch.in_A, batch.in_B, batch.first_index, self._st, s, L, P)
        self._append(s[:k], L[:k], P[:k])
        self._last = batch.first_index + m - 1
        self.n = self._last + 1

    def feed(self, in_A, in_B, first_index=None):
        """Process raw membership arrays (convenience for recorded traces)."""
        in_A = np.ascontiguousarray(in_A, dtype=np.bool_)
        in_B = np.ascontiguousarray(in_B, dtype=np.bool_)
        first = self._last + 1 if first_index is None else first_index
        zeros = np.zeros(in_A.shape[0])
        self.observe_batch(ObservationBatch(first, in_A, in_B, zeros.astype(bool), zeros))
        return self

    def _cat(self, parts):
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    @property
    def lengths(self) -> np.ndarray:
        return self._cat(self._lengths)

    @property
    def counts(self) -> np.ndarray:
        return self._cat(self._counts)

    @property
    def starts(self) -> np.ndarray:
        return self._cat(self._starts)

    @property
    def intervals(self) -> list[RecurrenceInterval]:
        return [RecurrenceInterval(int(s), int(s + L - 1), int(L), int(P))
                for s, L, P in zip(self.starts, self.lengths, self.counts)]

    def summary(self, pi_A=None, pi_B=None, n=None) -> RecurrenceSummary:
        return _summarize_arrays(self.starts, self.lengths, self.counts,
                                 self.n if n is None else n, pi_A, pi_B)


def detect(in_A, in_B, start_counts_as_entry=True) -> RecurrenceDetector:
    """Run a fresh detector over recorded membership arrays."""
    return RecurrenceDetector(start_counts_as_entry).feed(in_A, in_B, 0)


INTERVAL_COLUMNS = ("chain_id", "k", "start_index", "end_index", "L", "P", "R")


def interval_rows(summaries: Iterable[tuple[int, RecurrenceSummary]]) -> list[tuple]:
    """One row per interval in :data:`INTERVAL_COLUMNS` order; ``R`` is None without ``pi_A``."""
    rows = []
    for chain_id, s in summaries:
        R = s.ratios
        for k in range(s.n_intervals):
            start = int(s.starts[k])
            L = int(s.lengths[k])
            rows.append((chain_id, k + 1, start, start + L - 1, L, int(s.counts[k]),
                         None if R is None else float(R[k])))
    return rows


def intervals_csv(summaries: Iterable[tuple[int, RecurrenceSummary]]) -> str:
    """Serialise tagged interval lists; ``R`` is empty when ``pi_A`` is unknown."""
    return dumps_csv(INTERVAL_COLUMNS, interval_rows(summaries))


def read_intervals_csv(path) -> dict[int, list[RecurrenceInterval]]:
    """Parse an intervals CSV back into per-chain interval lists."""
    out: dict[int, list[RecurrenceInterval]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(INTERVAL_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"intervals CSV lacks columns {sorted(missing)}")
        for row in reader:
            R = float(row["R"]) if row["R"] else None
            iv = RecurrenceInterval(int(row["start_index"]), int(row["end_index"]),
                                    int(row["L"]), int(row["P"]), R)
            out.setdefault(int(row["chain_id"]), []).append(iv)
    return out
