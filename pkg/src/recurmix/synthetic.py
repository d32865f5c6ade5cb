"""Synthetic interval generators with known structure.

The path-graph walk below has its A set at one end and its B set at the
other, so every A -> B -> A interval begins with the walk at state 0 and the
strong Markov property makes successive intervals exactly i.i.d.
"""
import numpy as np
from numba import njit

from .errors import DomainError


@njit(cache=True, nogil=True)
def _path_intervals(u, K, n_intervals, out_L, out_P):
    # lazy reflecting walk on {0..K}; uniform stationary law
    pos = 0
    j = 0
    for i in range(n_intervals):
        L = 0
        P = 0
        seen_b = False
        while True:
            if pos == 0:
                if seen_b:
                    break
                P += 1
            L += 1
            r = u[j]
            j += 1
            if j == u.shape[0]:
                # out of uniforms: drop the partial interval; the next call
                # restarts at an A entry, which keeps the draws i.i.d.
                return i, j
            if r < 0.25:
                if pos > 0:
                    pos -= 1
            elif r < 0.5:
                if pos < K:
                    pos += 1
            if pos == K:
                seen_b = True
        out_L[i] = L
        out_P[i] = P
    return n_intervals, j


class PathWalk:
    """Lazy reflecting random walk on ``{0, ..., K}`` with ``A = {0}``, ``B = {K}``.

    Parameters
    ----------
    K : int
        Right end of the path, at least 1.

    Notes
    -----
    The walk holds with probability 1/2 and otherwise steps left or right.
    Its stationary law is uniform, so ``pi_A = pi_B = 1/(K+1)``.
    """

    def __init__(self, K: int = 4):
        if K < 1:
            raise DomainError("K must be >= 1")
        self.K = int(K)

    @property
    def pi_A(self) -> float:
        return 1.0 / (self.K + 1)

    def intervals(self, rng: np.random.Generator, n_intervals: int):
        """Draw ``n_intervals`` i.i.d. ``(L, P)`` pairs."""
        L = np.empty(n_intervals, dtype=np.int64)
        P = np.empty(n_intervals, dtype=np.int64)
        done = 0
        block = max(1 << 16, 8 * n_intervals * (self.K + 1) ** 2)
        while done < n_intervals:
            u = rng.random(block)
            got, _ = _path_intervals(u, self.K, n_intervals - done, L[done:], P[done:])
            done += got
        return L, P


def sum_of_exponentials(rng: np.random.Generator, n: int, terms: int = 2) -> np.ndarray:
    """Sums of ``terms`` i.i.d. unit exponentials (gamma with integer shape)."""
    return rng.standard_exponential((n, terms)).sum(axis=1)
