"""Compiled inner loops.

Everything here works on plain arrays so the chain can run for 10^7+ steps
without Python overhead. Target families are dispatched on an integer code;
the public wrappers live in :mod:`recurmix.targets` and :mod:`recurmix.sampler`.
"""
import math

import numba as nb
import numpy as np

MULTI_NORMAL = 0
TWO_MODE = 1
SCALE_PROBLEM = 2
CAUCHY = 3

# detector phases
AWAIT_FIRST_A = 0
AWAIT_B = 1
AWAIT_A = 2

_jit = nb.njit(cache=True, nogil=True)


@_jit
def log_density_unnorm(code, params, x):
    """Log target density up to an additive constant (constants cancel in MH)."""
    if code == MULTI_NORMAL:
        sigma1 = params[0]
        var = params[1]
        s = (x[0] / sigma1) ** 2
        for i in range(1, x.shape[0]):
            s += x[i] * x[i]
        return -0.5 * s / var
    if code == TWO_MODE:
        a = params[0]
        var = params[1]
        u = -0.5 * x[0] * x[0] / var
        v = -0.5 * (x[0] - a) * (x[0] - a) / var
        hi = max(u, v)
        return hi + math.log(math.exp(u - hi) + math.exp(v - hi))
    if code == SCALE_PROBLEM:
        sigma1 = params[0]
        cross = params[1] > 0.5
        x1 = x[0]
        x2 = x[1]
        if cross:
            first = abs(x1) > abs(x2)
        else:
            first = x1 > x2
        if first:
            return -0.5 * (x1 * x1 + (x2 / sigma1) ** 2)
        return -0.5 * ((x1 / sigma1) ** 2 + x2 * x2)
    if code == CAUCHY:
        z = (x[0] - params[0]) / params[1]
        return -math.log1p(z * z)
    return -np.inf


@_jit
def member(x, comp, direction, threshold):
    """Strict half-space membership; comp < 0 means every component."""
    if comp >= 0:
        if direction < 0:
            return x[comp] < threshold
        return x[comp] > threshold
    for i in range(x.shape[0]):
        if direction < 0:
            if not x[i] < threshold:
                return False
        elif not x[i] > threshold:
            return False
    return True


@_jit
def rw_chunk(code, params, x, lp, z, logu, scales, sub,
             in_a, in_b, accepted, jump):
    """Advance a random-walk Metropolis chain ``z.shape[0]`` steps in place.

    ``sub`` packs the two half-spaces as
    ``[compA, dirA, thrA, compB, dirB, thrB]``. Returns the log density of the
    final state; ``x`` holds the final state on return.
    """
    n, d = z.shape
    y = np.empty(d)
    ca = int(sub[0])
    cb = int(sub[3])
    for i in range(n):
        for j in range(d):
            y[j] = x[j] + scales[j] * z[i, j]
        lq = log_density_unnorm(code, params, y)
        diff = lq - lp
        if diff >= 0.0 or logu[i] < diff:
            s = 0.0
            for j in range(d):
                s += (y[j] - x[j]) ** 2
                x[j] = y[j]
            lp = lq
            accepted[i] = True
            jump[i] = math.sqrt(s)
        else:
            accepted[i] = False
            jump[i] = 0.0
        in_a[i] = member(x, ca, sub[1], sub[2])
        in_b[i] = member(x, cb, sub[4], sub[5])
    return lp


@_jit
def cycle_chunk(state, n_states, steps, in_a, in_b):
    """Walk on a cycle of ``n_states`` states labelled 1..n_states.

    ``steps`` holds +1/-1 moves; odd labels are A, even labels are B.
    Returns the final label.
    """
    for i in range(steps.shape[0]):
        state += steps[i]
        if state < 1:
            state = n_states
        elif state > n_states:
            state = 1
        odd = state % 2 == 1
        in_a[i] = odd
        in_b[i] = not odd
    return state


@_jit
def detect_chunk(in_a, in_b, first_index, st, out_start, out_len, out_count):
    """Fold a block of membership flags into recurrence intervals.

    ``st`` is the int64 detector state
    ``[phase, seen_b, start, count_a, next_index, strict]`` and is updated in
    place. Completed intervals are written to the ``out_*`` buffers, whose
    length must be at least ``len(in_a)``. Returns the number emitted.
    """
    phase = st[0]
    seen_b = st[1]
    start = st[2]
    count = st[3]
    strict = st[5]
    n_out = 0
    for t in range(in_a.shape[0]):
        idx = first_index + t
        a = in_a[t]
        b = in_b[t]
        if phase == AWAIT_FIRST_A:
            if a and (seen_b == 1 or (strict == 0 and idx == 0)):
                phase = AWAIT_B
                start = idx
                count = 1
            elif b:
                seen_b = 1
        elif phase == AWAIT_B:
            if a:
                count += 1
            elif b:
                phase = AWAIT_A
        else:
            if a:
                out_start[n_out] = start
                out_len[n_out] = idx - start
                out_count[n_out] = count
                n_out += 1
                start = idx
                count = 1
                phase = AWAIT_B
    st[0] = phase
    st[1] = seen_b
    st[2] = start
    st[3] = count
    st[4] = first_index + in_a.shape[0]
    return n_out
