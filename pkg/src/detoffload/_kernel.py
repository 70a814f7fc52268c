"""Compiled slot loop shared by ``engine.simulate`` and population fitness.

Set ``NUMBA_DISABLE_JIT=1`` to run the same code as plain Python.
"""

import math

import numpy as np
from numba import njit

PENDING, UP, QUEUED, PROC, DOWN, DONE, FAILED = 0, 1, 2, 3, 4, 5, 6

# trace event codes
EV_GRANT, EV_HOP, EV_ARRIVE, EV_START, EV_DONE, EV_FAIL = 0, 1, 2, 3, 4, 5

EPS = 1e-12
BIT_TOL = 1e-9


@njit(cache=True)
def _emit(buf, n, slot_idx, code, task, link, first, count, value):
    k = n[0]
    if k < buf.shape[0]:
        buf[k, 0] = slot_idx
        buf[k, 1] = code
        buf[k, 2] = task
        buf[k, 3] = link
        buf[k, 4] = first
        buf[k, 5] = count
        buf[k, 6] = value
    n[0] = k + 1


@njit(cache=True)
def _slot_of(t, slot):
    # first slot boundary at or after t
    return int(math.ceil(t / slot - 1e-9))


@njit(cache=True)
def run_slots(gen, work, size, rsize, due, origin, target, order,
              path_tab, nhops_tab, link_pool, link_row,
              cum1, cum2, backhaul_rate, power, slot, n_slots, cap, check, trace,
              status, t_arrive, t_pstart, t_pend, t_done, busy, viol, trace_buf, trace_n):
    """Advance the continuum slot by slot.

    Per slot: expire overdue tasks, admit newly generated ones, run
    non-preemptive EDF processing at every unit over [t0, t1), then grant
    contiguous resource blocks in priority order and drain bits.
    ``status`` ends 1 for tasks finished by their due time, else 0.
    viol counts [double-booked resources, link-rate overruns, bit mismatches].
    """
    I = gen.shape[0]
    U = power.shape[0]
    K1 = cum1.shape[2] - 1
    K2 = cum2.shape[2] - 1
    cap1 = K1 if cap <= 0 else min(cap, K1)
    cap2 = K2 if cap <= 0 else min(cap, K2)
    L = link_pool.shape[0]

    phase = np.zeros(I, np.int64)
    hop = np.zeros(I, np.int64)
    nh = np.empty(I, np.int64)
    elig = np.zeros(I, np.int64)
    remaining = np.zeros(I)
    delivered = np.zeros(I)
    queued_n = np.zeros(U, np.int64)
    busy_until = np.zeros(U)
    occ1 = np.full(max(K1, 1), -1, np.int64)
    occ2 = np.full(max(K2, 1), -1, np.int64)
    link_grant = np.zeros(L)
    link_used = np.zeros(L, np.int64)

    for i in range(I):
        nh[i] = nhops_tab[origin[i], target[i]]
        status[i] = 0
        t_arrive[i] = np.nan
        t_pstart[i] = np.nan
        t_pend[i] = np.nan
        t_done[i] = np.nan
    busy[:, :] = 0
    viol[:] = 0
    trace_n[0] = 0
    finished = 0

    for s in range(n_slots):
        if finished == I:
            break
        t0 = s * slot
        t1 = t0 + slot

        # deadlines passed: release everything the task holds
        for i in range(I):
            ph = phase[i]
            if (ph == UP or ph == QUEUED or ph == DOWN) and due[i] <= t0 + EPS:
                if ph == QUEUED:
                    queued_n[target[i]] -= 1
                phase[i] = FAILED
                t_done[i] = due[i]
                finished += 1
                if trace:
                    _emit(trace_buf, trace_n, s, EV_FAIL, i, -1, -1, 0, due[i])

        # arrivals
        for i in range(I):
            if phase[i] == PENDING and gen[i] < t1:
                if nh[i] == 0:
                    phase[i] = QUEUED
                    t_arrive[i] = gen[i]
                    queued_n[target[i]] += 1
                    if trace:
                        _emit(trace_buf, trace_n, s, EV_ARRIVE, i, -1, -1, 0, gen[i])
                else:
                    phase[i] = UP
                    hop[i] = 0
                    remaining[i] = size[i]
                    delivered[i] = 0.0
                    elig[i] = _slot_of(gen[i], slot)

        # processing, continuous time inside the slot window
        for u in range(U):
            while queued_n[u] > 0:
                amin = np.inf
                for i in range(I):
                    if phase[i] == QUEUED and target[i] == u and t_arrive[i] < amin:
                        amin = t_arrive[i]
                st = max(busy_until[u], amin)
                if st >= t1 - EPS:
                    break
                best = -1
                for i in range(I):
                    if phase[i] == QUEUED and target[i] == u and t_arrive[i] <= st + EPS:
                        if best < 0 or due[i] < due[best]:
                            best = i
                queued_n[u] -= 1
                if due[best] <= st + EPS:
                    phase[best] = FAILED
                    t_done[best] = due[best]
                    finished += 1
                    if trace:
                        _emit(trace_buf, trace_n, s, EV_FAIL, best, -1, -1, 0, due[best])
                    continue
                end = st + work[best] / power[u]
                t_pstart[best] = st
                if trace:
                    _emit(trace_buf, trace_n, s, EV_START, best, -1, u, 0, st)
                if end > due[best] + EPS:
                    busy_until[u] = due[best]
                    phase[best] = FAILED
                    t_done[best] = due[best]
                    finished += 1
                    if trace:
                        _emit(trace_buf, trace_n, s, EV_FAIL, best, -1, u, 0, due[best])
                    continue
                busy_until[u] = end
                t_pend[best] = end
                if nh[best] == 0:
                    phase[best] = DONE
                    status[best] = 1
                    t_done[best] = end
                    finished += 1
                    if trace:
                        _emit(trace_buf, trace_n, s, EV_DONE, best, -1, u, 0, end)
                else:
                    phase[best] = DOWN
                    hop[best] = 0
                    remaining[best] = rsize[best]
                    delivered[best] = 0.0
                    elig[best] = _slot_of(end, slot)

        # communication: priority-ordered greedy grants
        used1 = 0
        used2 = 0
        for r in range(I):
            i = order[r]
            ph = phase[i]
            if (ph != UP and ph != DOWN) or elig[i] > s:
                continue
            h = hop[i]
            if ph == UP:
                lk = path_tab[origin[i], target[i], h]
                hop_bits = size[i]
            else:
                lk = path_tab[origin[i], target[i], nh[i] - 1 - h]
                hop_bits = rsize[i]
            pool = link_pool[lk]
            first = -1
            n = 0
            if pool == 2:
                rate = backhaul_rate
            elif pool == 0:
                n = min(cap1, K1 - used1)
                if n <= 0:
                    continue
                row = link_row[lk]
                rate = cum1[row, s, used1 + n] - cum1[row, s, used1]
                first = used1
                used1 += n
                if check:
                    for k in range(first, first + n):
                        if occ1[k] == s:
                            viol[0] += 1
                        occ1[k] = s
            else:
                n = min(cap2, K2 - used2)
                if n <= 0:
                    continue
                row = link_row[lk]
                rate = cum2[row, s, used2 + n] - cum2[row, s, used2]
                first = used2
                used2 += n
                if check:
                    for k in range(first, first + n):
                        if occ2[k] == s:
                            viol[0] += 1
                        occ2[k] = s
            if check and pool != 2:
                if link_used[lk] != s + 1:
                    link_used[lk] = s + 1
                    link_grant[lk] = 0.0
                link_grant[lk] += rate
            bits = rate * slot
            if trace:
                _emit(trace_buf, trace_n, s, EV_GRANT, i, lk, first, n, bits)
            take = min(bits, remaining[i])
            delivered[i] += take
            remaining[i] -= bits
            if remaining[i] <= BIT_TOL * hop_bits:
                if check and abs(delivered[i] - hop_bits) > 1e-6 * hop_bits:
                    viol[2] += 1
                delivered[i] = 0.0
                hop[i] += 1
                if trace:
                    _emit(trace_buf, trace_n, s, EV_HOP, i, lk, -1, 0, t1)
                if hop[i] == nh[i]:
                    if ph == UP:
                        phase[i] = QUEUED
                        t_arrive[i] = t1
                        queued_n[target[i]] += 1
                        if trace:
                            _emit(trace_buf, trace_n, s, EV_ARRIVE, i, lk, -1, 0, t1)
                    else:
                        finished += 1
                        if t1 <= due[i] + EPS:
                            phase[i] = DONE
                            status[i] = 1
                            t_done[i] = t1
                            if trace:
                                _emit(trace_buf, trace_n, s, EV_DONE, i, lk, -1, 0, t1)
                        else:
                            phase[i] = FAILED
                            t_done[i] = due[i]
                            if trace:
                                _emit(trace_buf, trace_n, s, EV_FAIL, i, lk, -1, 0, due[i])
                else:
                    elig[i] = s + 1
                    remaining[i] = hop_bits

        busy[s, 0] = used1
        busy[s, 1] = used2
        if check:
            for lk in range(L):
                if link_used[lk] == s + 1:
                    if link_pool[lk] == 0:
                        avail = cum1[link_row[lk], s, K1]
                    else:
                        avail = cum2[link_row[lk], s, K2]
                    if link_grant[lk] > avail * (1 + 1e-12) + 1e-9:
                        viol[1] += 1

    for i in range(I):
        if phase[i] != DONE and phase[i] != FAILED:
            phase[i] = FAILED
            t_done[i] = due[i]


@njit(cache=True)
def evaluate_population(targets, orders, gen, work, size, rsize, due, origin,
                        path_tab, nhops_tab, link_pool, link_row,
                        cum1, cum2, backhaul_rate, power, cmax, slot, n_slots, cap, miss_cost,
                        misses, total_time, cap_viol):
    """Simulate every (targets[p], orders[p]) and reduce to objective inputs.

    total_time[p] sums realised execution times, charging ``miss_cost``
    seconds for each task not finished by its due time.
    """
    P, I = targets.shape
    U = power.shape[0]
    status = np.zeros(I, np.int64)
    t_arrive = np.empty(I)
    t_pstart = np.empty(I)
    t_pend = np.empty(I)
    t_done = np.empty(I)
    busy = np.zeros((n_slots, 2), np.int64)
    viol = np.zeros(3, np.int64)
    trace_buf = np.zeros((1, 7))
    trace_n = np.zeros(1, np.int64)
    load = np.zeros(U)
    for p in range(P):
        run_slots(gen, work, size, rsize, due, origin, targets[p], orders[p],
                  path_tab, nhops_tab, link_pool, link_row,
                  cum1, cum2, backhaul_rate, power, slot, n_slots, cap, False, False,
                  status, t_arrive, t_pstart, t_pend, t_done, busy, viol, trace_buf, trace_n)
        m = 0
        tot = 0.0
        for i in range(I):
            if status[i] == 1:
                tot += t_done[i] - gen[i]
            else:
                m += 1
                tot += miss_cost
        misses[p] = m
        total_time[p] = tot
        load[:] = 0.0
        for i in range(I):
            load[targets[p, i]] += work[i]
        c = 0
        for u in range(U):
            if load[u] > cmax[u] * (1 + 1e-12):
                c += 1
        cap_viol[p] = c
