"""Compiled two-vector transport-delay simulation.

Gates are visited in topological order and each output waveform is derived
from the merged input transition lists, which for an acyclic netlist with pure
transport delays gives exactly the event sequence an event-queue simulator
produces.  A waveform is stored as its sorted transition times only: every
transition flips the net, so values follow from the initial level.
"""

import warnings

import numba as nb
import numpy as np

# Old system TBB; numba falls back to another threading layer on its own.
warnings.filterwarnings("ignore", message="The TBB threading layer", category=nb.NumbaWarning)

K_AND2, K_NAND2, K_OR2, K_NOR2, K_XOR2, K_INV, K_BUF, K_LS = range(8)

CHUNK = 256
# Events closer than this are simultaneous; absorbs rounding in scaled delay sums.
TIE_EPS = 1e-9


@nb.njit(cache=True, inline="always")
def _eval(kind, x, y):
    if kind == K_AND2:
        return x & y
    if kind == K_NAND2:
        return 1 - (x & y)
    if kind == K_OR2:
        return x | y
    if kind == K_NOR2:
        return 1 - (x | y)
    if kind == K_XOR2:
        return x ^ y
    if kind == K_INV:
        return 1 - x
    return x


@nb.njit(cache=True)
def _sim_pair(kind, in0, in1, out, delay, energy_w, po_nets, n, t_clk, pa, pb, ca, cb,
              init, start, length, times, toggles, po_last):
    """Simulate one input transition; returns (ok, sampled, settled, violating mask, energy)."""
    n_g = kind.shape[0]
    cap = times.shape[0]
    init[0] = 0
    init[1] = 1
    for i in range(n):
        init[2 + i] = (pa >> i) & 1
        init[2 + n + i] = (pb >> i) & 1
    for g in range(n_g):
        y = init[in1[g]] if in1[g] >= 0 else 0
        init[out[g]] = _eval(kind[g], init[in0[g]], y)

    top = 0
    start[0] = 0
    length[0] = 0
    start[1] = 0
    length[1] = 0
    for i in range(2 * n):
        net = 2 + i
        if i < n:
            bit = (ca >> i) & 1
        else:
            bit = (cb >> (i - n)) & 1
        start[net] = top
        if bit != init[net]:
            times[top] = 0.0
            top += 1
            length[net] = 1
        else:
            length[net] = 0

    energy = 0.0
    for g in range(n_g):
        o = out[g]
        i0 = in0[g]
        i1 = in1[g]
        v0 = init[i0]
        p = start[i0]
        pe = p + length[i0]
        if i1 >= 0:
            v1 = init[i1]
            q = start[i1]
            qe = q + length[i1]
        else:
            v1 = 0
            q = 0
            qe = 0
        cur = init[o]
        start[o] = top
        cnt = 0
        d = delay[g]
        k = kind[g]
        while p < pe or q < qe:
            if q >= qe or (p < pe and times[p] < times[q] - TIE_EPS):
                t = times[p]
                v0 ^= 1
                p += 1
            elif p >= pe or times[q] < times[p] - TIE_EPS:
                t = times[q]
                v1 ^= 1
                q += 1
            else:
                t = times[p]
                v0 ^= 1
                v1 ^= 1
                p += 1
                q += 1
            nv = _eval(k, v0, v1)
            if nv != cur:
                if top >= cap:
                    return False, 0, 0, 0, 0.0
                times[top] = t + d
                top += 1
                cnt += 1
                cur = nv
        length[o] = cnt
        toggles[g] = cnt
        energy += cnt * energy_w[g]

    sampled = 0
    settled = 0
    violating = 0
    for i in range(po_nets.shape[0]):
        net = po_nets[i]
        ln = length[net]
        final = init[net] ^ (ln & 1)
        settled |= final << i
        if ln > 0:
            last = times[start[net] + ln - 1]
            po_last[i] = last
            if last > t_clk + TIE_EPS:
                violating |= 1 << i
                sampled |= init[net] << i
                continue
        else:
            po_last[i] = -1.0
        sampled |= final << i
    return True, sampled, settled, violating, energy


@nb.njit(cache=True, parallel=True)
def run_batch(kind, in0, in1, out, delay, energy_w, po_nets, n, n_nets, t_clk,
              prev_a, prev_b, cur_a, cur_b, cap):
    m = cur_a.shape[0]
    sampled = np.zeros(m, np.int64)
    settled = np.zeros(m, np.int64)
    violating = np.zeros(m, np.int64)
    energy = np.zeros(m, np.float64)
    status = np.zeros(m, np.int8)
    n_chunks = (m + CHUNK - 1) // CHUNK
    for c in nb.prange(n_chunks):
        init = np.zeros(n_nets, np.int64)
        start = np.zeros(n_nets, np.int64)
        length = np.zeros(n_nets, np.int64)
        times = np.empty(cap, np.float64)
        toggles = np.zeros(kind.shape[0], np.int64)
        po_last = np.zeros(po_nets.shape[0], np.float64)
        hi = min(m, (c + 1) * CHUNK)
        for j in range(c * CHUNK, hi):
            ok, s, st, v, e = _sim_pair(kind, in0, in1, out, delay, energy_w, po_nets, n, t_clk,
                                        prev_a[j], prev_b[j], cur_a[j], cur_b[j],
                                        init, start, length, times, toggles, po_last)
            if ok:
                sampled[j] = s
                settled[j] = st
                violating[j] = v
                energy[j] = e
            else:
                status[j] = 1
    return sampled, settled, violating, energy, status


@nb.njit(cache=True)
def run_one(kind, in0, in1, out, delay, energy_w, po_nets, n, n_nets, t_clk, pa, pb, ca, cb, cap):
    init = np.zeros(n_nets, np.int64)
    start = np.zeros(n_nets, np.int64)
    length = np.zeros(n_nets, np.int64)
    times = np.empty(cap, np.float64)
    toggles = np.zeros(kind.shape[0], np.int64)
    po_last = np.zeros(po_nets.shape[0], np.float64)
    ok, s, st, v, e = _sim_pair(kind, in0, in1, out, delay, energy_w, po_nets, n, t_clk,
                                pa, pb, ca, cb, init, start, length, times, toggles, po_last)
    return ok, s, st, v, e, toggles, po_last
