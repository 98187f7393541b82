"""Hot loops, compiled with numba.

Kernels operate directly on the flat arrays of tree.GrowthTree and on a
4-word xoshiro256** state; the generator here and rng.Xoshiro256StarStar
must stay bit-identical (test_rng compares raw streams), and the tree
mutation policy must match tree.GrowthTree exactly (test_walk bit-compares
a kernel run against the pure-python engine).

Capacity protocol: kernels never allocate.  Each step begins with a
worst-case capacity check and the kernel returns a status code with all
state written back BEFORE consuming any randomness for that step, so the
caller can grow arrays and re-enter without perturbing the stream.

Status codes: 0 done; 1 need vertex capacity; 2 need child-pool capacity;
3 need endpoint capacity; 4 growth log full; 5 vertex target reached;
6 tracked-window capacity exhausted.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NEED_VERTEX = 1
NEED_POOL = 2
NEED_ENDPOINTS = 3
GROWTH_LOG_FULL = 4
SIZE_CAP = 5
NEED_TRACK = 6

ETA_HIST_BUCKETS = 40
ETA_HIST_GAPS = 64

_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U19 = np.uint64(19)
_U45 = np.uint64(45)
_U57 = np.uint64(57)
_INV53 = 2.0 ** -53


def rng_state_from_seed(seed: int) -> np.ndarray:
    from .rng import Xoshiro256StarStar
    return np.array(Xoshiro256StarStar(seed).s, dtype=np.uint64)


@njit(inline="always")
def _next_u64(rs):
    s0 = rs[0]
    s1 = rs[1]
    s2 = rs[2]
    s3 = rs[3]
    x = s1 * _U5
    result = ((x << _U7) | (x >> _U57)) * _U9
    t = s1 << _U17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = (s3 << _U45) | (s3 >> _U19)
    rs[0] = s0
    rs[1] = s1
    rs[2] = s2
    rs[3] = s3
    return result


@njit(inline="always")
def _u01(rs):
    return np.float64(_next_u64(rs) >> _U11) * _INV53


@njit(cache=True, nogil=True)
def raw_stream(rs, out):
    for i in range(out.shape[0]):
        out[i] = _next_u64(rs)


@njit(cache=True, nogil=True)
def uniform_stream(rs, out):
    for i in range(out.shape[0]):
        out[i] = _u01(rs)


@njit(inline="always")
def _add_leaf(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt, pool,
              endp, tstate, track_endp, attach, birth_time):
    # caller has verified capacity; mirrors GrowthTree.add_leaf
    if chcnt[attach] == chcap[attach]:
        need = 2 * chcap[attach]
        if need == 0:
            need = 2
        newoff = tstate[1]
        off = choff[attach]
        for i in range(chcnt[attach]):
            pool[newoff + i] = pool[off + i]
        choff[attach] = newoff
        chcap[attach] = need
        tstate[1] = newoff + need
    v = tstate[0]
    parent_a[v] = attach
    depth_a[v] = depth_a[attach] + 1
    birth_a[v] = birth_time
    deg_a[v] = 1
    choff[v] = 0
    chcap[v] = 0
    chcnt[v] = 0
    pool[choff[attach] + chcnt[attach]] = v
    chcnt[attach] += 1
    deg_a[attach] += 1
    tstate[0] = v + 1
    if track_endp:
        e = tstate[2]
        endp[e] = attach
        endp[e + 1] = v
        tstate[2] = e + 2
    return v


@njit(inline="always")
def _neighbor(parent_a, deg_a, choff, pool, rs, x):
    d = deg_a[x]
    j = np.int64(_u01(rs) * np.float64(d))
    if x == 0:
        if j < 2:
            return x
        return pool[choff[0] + (j - 2)]
    if j == 0:
        return parent_a[x]
    return pool[choff[x] + (j - 1)]


# wstate layout for walk kernels:
#   0 n (steps done)   1 x              2 root_visits   3 L accumulator
#   4 z_prev           5 flag_prev      6 last eta step 7 eta event count
#   8 growth count     9 red visit count
#   10 eta hist bucket (= floor(log2(count)))   11 next bucket threshold
@njit(cache=True, nogil=True)
def walk_segment(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt, pool,
                 endp, tstate, track_endp, rs, wstate,
                 law_kind, gamma, scale, shift, p_table, w_table,
                 n_end, max_vertices, red_threshold,
                 g_tau, g_attach, g_z, g_cursor, eta_hist):
    vcap = parent_a.shape[0]
    pcap = pool.shape[0]
    ecap = endp.shape[0]
    gcap = g_tau.shape[0]
    n = wstate[0]
    x = wstate[1]
    status = OK
    while n < n_end:
        nv = tstate[0]
        if max_vertices > 0 and nv >= max_vertices:
            status = SIZE_CAP
            break
        if law_kind == 1 or law_kind == 3:
            z_bound = w_table[n]
        else:
            z_bound = np.int64(1)
        if nv + z_bound > vcap:
            status = NEED_VERTEX
            break
        if tstate[1] + 4 * (deg_a[x] + z_bound) + 8 > pcap:
            status = NEED_POOL
            break
        if track_endp and tstate[2] + 2 * z_bound > ecap:
            status = NEED_ENDPOINTS
            break
        if g_cursor[0] >= gcap:
            status = GROWTH_LOG_FULL
            break
        n += 1
        if law_kind >= 2:
            p = p_table[n - 1]
        else:
            p = scale * np.float64(n + shift) ** (-gamma)
        flag_cur = np.int64(0)
        if deg_a[x] >= 2:
            flag_cur = np.int64(1)
        u = _u01(rs)
        z = np.int64(0)
        if u < p:
            z = z_bound
            for _ in range(z):
                _add_leaf(parent_a, depth_a, birth_a, deg_a, choff, chcap,
                          chcnt, pool, endp, tstate, track_endp, x, n)
            gi = g_cursor[0]
            g_tau[gi] = n
            g_attach[gi] = x
            g_z[gi] = z
            g_cursor[0] = gi + 1
            wstate[8] += 1
        wstate[3] += z * wstate[4] * wstate[5]
        wstate[4] = z
        wstate[5] = flag_cur
        x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
        if x == 0:
            wstate[2] += 1
        if x >= red_threshold:
            wstate[9] += 1
        if deg_a[x] >= 2:
            gap = n - wstate[6]
            wstate[6] = n
            cnt = wstate[7] + 1
            wstate[7] = cnt
            if cnt >= wstate[11] and wstate[10] < ETA_HIST_BUCKETS - 1:
                wstate[10] += 1
                wstate[11] = wstate[11] * 2
            if gap >= ETA_HIST_GAPS:
                gap = ETA_HIST_GAPS - 1
            eta_hist[wstate[10] * ETA_HIST_GAPS + gap] += 1
    wstate[0] = n
    wstate[1] = x
    return status


# tracked-window instrumentation: same walk, plus per-vertex subtree orders
# for vertices born at or after the id threshold v0.
#   D[k]           subtree order of vertex v0+k
#   born[k]        its birth step
#   reach[k, d]    first step with order >= d (-1 until reached), d <= dmax
#   visits[k, d]   steps spent inside its subtree while its order is
#                  min(D, dmax) == d
@njit(cache=True, nogil=True)
def window_segment(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt,
                   pool, endp, tstate, track_endp, rs, wstate,
                   law_kind, gamma, scale, shift, p_table, w_table,
                   n_end, v0,
                   g_tau, g_attach, g_z, g_cursor, eta_hist,
                   D, born, reach, visits):
    vcap = parent_a.shape[0]
    pcap = pool.shape[0]
    ecap = endp.shape[0]
    gcap = g_tau.shape[0]
    tcap = D.shape[0]
    dmax = reach.shape[1] - 1
    n = wstate[0]
    x = wstate[1]
    status = OK
    while n < n_end:
        nv = tstate[0]
        if law_kind == 1 or law_kind == 3:
            z_bound = w_table[n]
        else:
            z_bound = np.int64(1)
        if nv + z_bound > vcap:
            status = NEED_VERTEX
            break
        if tstate[1] + 4 * (deg_a[x] + z_bound) + 8 > pcap:
            status = NEED_POOL
            break
        if track_endp and tstate[2] + 2 * z_bound > ecap:
            status = NEED_ENDPOINTS
            break
        if g_cursor[0] >= gcap:
            status = GROWTH_LOG_FULL
            break
        if nv - v0 + z_bound > tcap:
            status = NEED_TRACK
            break
        n += 1
        if law_kind >= 2:
            p = p_table[n - 1]
        else:
            p = scale * np.float64(n + shift) ** (-gamma)
        flag_cur = np.int64(0)
        if deg_a[x] >= 2:
            flag_cur = np.int64(1)
        u = _u01(rs)
        z = np.int64(0)
        if u < p:
            z = z_bound
            for _ in range(z):
                leaf = _add_leaf(parent_a, depth_a, birth_a, deg_a, choff,
                                 chcap, chcnt, pool, endp, tstate, track_endp,
                                 x, n)
                k = leaf - v0
                D[k] = 1
                born[k] = n
                reach[k, 1] = n
            w = x
            while w >= v0:
                k = w - v0
                old = D[k]
                D[k] = old + z
                hi = old + z
                if hi > dmax:
                    hi = dmax
                for dd in range(old + 1, hi + 1):
                    if reach[k, dd] < 0:
                        reach[k, dd] = n
                w = parent_a[w]
            gi = g_cursor[0]
            g_tau[gi] = n
            g_attach[gi] = x
            g_z[gi] = z
            g_cursor[0] = gi + 1
            wstate[8] += 1
        wstate[3] += z * wstate[4] * wstate[5]
        wstate[4] = z
        wstate[5] = flag_cur
        x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
        if x == 0:
            wstate[2] += 1
        if x >= v0:
            wstate[9] += 1
        w = x
        while w >= v0:
            k = w - v0
            dcur = D[k]
            if dcur > dmax:
                dcur = dmax
            visits[k, dcur] += 1
            w = parent_a[w]
        if deg_a[x] >= 2:
            gap = n - wstate[6]
            wstate[6] = n
            cnt = wstate[7] + 1
            wstate[7] = cnt
            if cnt >= wstate[11] and wstate[10] < ETA_HIST_BUCKETS - 1:
                wstate[10] += 1
                wstate[11] = wstate[11] * 2
            if gap >= ETA_HIST_GAPS:
                gap = ETA_HIST_GAPS - 1
            eta_hist[wstate[10] * ETA_HIST_GAPS + gap] += 1
    wstate[0] = n
    wstate[1] = x
    return status


# tstate layout for the attachment generators:
#   0 n_vertices   1 pool_used   2 endp_used   3 pending attach (-1 none)
@njit(cache=True, nogil=True)
def ba_segment(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt, pool,
               endp, tstate, rs, n_target):
    vcap = parent_a.shape[0]
    pcap = pool.shape[0]
    ecap = endp.shape[0]
    while tstate[0] < n_target:
        if tstate[0] + 1 > vcap:
            return NEED_VERTEX
        if tstate[2] + 2 > ecap:
            return NEED_ENDPOINTS
        if tstate[3] >= 0:
            target = tstate[3]
        else:
            j = np.int64(_u01(rs) * np.float64(tstate[2]))
            target = endp[j]
            tstate[3] = target
        if tstate[1] + 4 * (deg_a[target] + 1) + 8 > pcap:
            return NEED_POOL
        _add_leaf(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt,
                  pool, endp, tstate, True, target, tstate[0])
        tstate[3] = -1
    return OK


# rstate: 0 n (steps done), 1 running max degree
@njit(cache=True, nogil=True)
def rpat_segment(parent_a, depth_a, birth_a, deg_a, choff, chcap, chcnt, pool,
                 endp, tstate, rs, rstate,
                 law_kind, gamma, scale, shift, p_table, w_table,
                 n_end, g_tau, g_attach, g_z, g_cursor):
    vcap = parent_a.shape[0]
    pcap = pool.shape[0]
    ecap = endp.shape[0]
    gcap = g_tau.shape[0]
    n = rstate[0]
    while n < n_end:
        nv = tstate[0]
        if law_kind == 1 or law_kind == 3:
            z_bound = w_table[n]
        else:
            z_bound = np.int64(1)
        if nv + z_bound > vcap:
            rstate[0] = n
            return NEED_VERTEX
        if tstate[1] + 4 * (rstate[1] + z_bound) + 8 > pcap:
            rstate[0] = n
            return NEED_POOL
        if tstate[2] + 2 * z_bound > ecap:
            rstate[0] = n
            return NEED_ENDPOINTS
        if g_cursor[0] >= gcap:
            rstate[0] = n
            return GROWTH_LOG_FULL
        n += 1
        if law_kind >= 2:
            p = p_table[n - 1]
        else:
            p = scale * np.float64(n + shift) ** (-gamma)
        u = _u01(rs)
        if u < p:
            z = z_bound
            j = np.int64(_u01(rs) * np.float64(tstate[2]))
            target = endp[j]
            for _ in range(z):
                _add_leaf(parent_a, depth_a, birth_a, deg_a, choff, chcap,
                          chcnt, pool, endp, tstate, True, target, n)
            if deg_a[target] > rstate[1]:
                rstate[1] = deg_a[target]
            gi = g_cursor[0]
            g_tau[gi] = n
            g_attach[gi] = target
            g_z[gi] = z
            g_cursor[0] = gi + 1
    rstate[0] = n
    return OK


@njit(cache=True, nogil=True)
def farthest(parent_a, choff, chcnt, pool, n, source, dist, queue, out):
    """BFS over tree edges; out = (vertex attaining max distance, max dist)."""
    for i in range(n):
        dist[i] = -1
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    best_v = source
    best_d = np.int64(0)
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v]
        if dv > best_d:
            best_d = dv
            best_v = v
        p = parent_a[v]
        if p >= 0 and dist[p] < 0:
            dist[p] = dv + 1
            queue[tail] = p
            tail += 1
        off = choff[v]
        for i in range(chcnt[v]):
            c = pool[off + i]
            if dist[c] < 0:
                dist[c] = dv + 1
                queue[tail] = c
                tail += 1
    out[0] = best_v
    out[1] = best_d


@njit(cache=True, nogil=True)
def ssrw_occupancy(parent_a, deg_a, choff, pool, rs, x0, steps, counts):
    """Fixed-tree walk; counts[x] accumulates visits at times 1..steps."""
    x = x0
    for _ in range(steps):
        x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
        counts[x] += 1
    return x


@njit(cache=True, nogil=True)
def hit_time_samples(parent_a, deg_a, choff, pool, rs, x0, y, reps, out):
    for r in range(reps):
        x = x0
        t = np.int64(0)
        while x != y:
            x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
            t += 1
        out[r] = t


@njit(cache=True, nogil=True)
def return_time_samples(parent_a, deg_a, choff, pool, rs, v, reps, out):
    for r in range(reps):
        x = _neighbor(parent_a, deg_a, choff, pool, rs, v)
        t = np.int64(1)
        while x != v:
            x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
            t += 1
        out[r] = t


@njit(cache=True, nogil=True)
def poisson_binomial_tail(p, kmax, replicas, rs):
    """Count replicas with at most kmax successes among Bernoulli(p_i)."""
    hits = 0
    for _ in range(replicas):
        c = np.int64(0)
        ok = True
        for i in range(p.shape[0]):
            if _u01(rs) < p[i]:
                c += 1
                if c > kmax:
                    ok = False
                    break
        if ok:
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def rightbias_replicas(parent_a, deg_a, choff, pool, rs, x0, p_tau,
                       stop_prob, replicas,
                       cond_counts, uncond_counts, eta_counts, meta):
    """Race an optimal strong stationary time against the first growth.

    Per replica: walk from x0; before each step, a growth coin with
    probability p_tau decides whether this step is the first growth time
    tau, in which case the pre-move position X_{tau-1} is recorded.  The
    stopping rule fires at time t with probability stop_prob[t, x]
    (0 beyond the table, where the residual mass is negligible).
    meta[0] counts replicas with eta < tau.
    """
    t_cap = stop_prob.shape[0] - 1
    for _ in range(replicas):
        x = x0
        t = np.int64(0)
        eta_seen = False
        x_eta = np.int64(-1)
        if _u01(rs) < stop_prob[0, x]:
            eta_seen = True
            x_eta = x
        while True:
            u = _u01(rs)
            if u < p_tau:
                uncond_counts[x] += 1
                if eta_seen:
                    cond_counts[x] += 1
                    eta_counts[x_eta] += 1
                    meta[0] += 1
                break
            x = _neighbor(parent_a, deg_a, choff, pool, rs, x)
            t += 1
            if not eta_seen and t <= t_cap:
                if _u01(rs) < stop_prob[t, x]:
                    eta_seen = True
                    x_eta = x


@njit(cache=True, nogil=True)
def coupling_q(indptr, indices, data, pi, x0,
               law_kind, gamma, scale, shift, p_table, n0,
               s_tol, tail_tol, m_cap, out):
    """q = sum_m P(growth gap = m) * s_x0(m-1), truncated.

    indptr/indices/data is the CSR of P transposed, so dist <- PT dist
    advances the row P^m(x0, .).  The gap starts from tree-size base n0:
    P(gap > m) = prod_{j=1..m} (1 - p(n0+j)).  Truncates once s < s_tol
    or the gap tail < tail_tol; the discarded mass is at most tail * s,
    reported in out[1].  out = [q, remainder, M, s_M, tail_M, hit_cap].
    """
    n = pi.shape[0]
    dist = np.zeros(n)
    nxt = np.empty(n)
    dist[x0] = 1.0
    s = 0.0
    for y in range(n):
        v = 1.0 - dist[y] / pi[y]
        if v > s:
            s = v
    tail = 1.0
    q = 0.0
    m = 0
    hit_cap = 0.0
    while True:
        m += 1
        nn = n0 + m
        if law_kind >= 2:
            p = p_table[nn - 1]
        else:
            p = scale * np.float64(nn + shift) ** (-gamma)
        pmf = tail * p
        q += pmf * s
        tail *= 1.0 - p
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * dist[indices[k]]
            nxt[i] = acc
        for i in range(n):
            dist[i] = nxt[i]
        s = 0.0
        for y in range(n):
            v = 1.0 - dist[y] / pi[y]
            if v > s:
                s = v
        if s < s_tol or tail < tail_tol:
            break
        if m >= m_cap:
            hit_cap = 1.0
            break
    out[0] = q
    out[1] = tail * s
    out[2] = m
    out[3] = s
    out[4] = tail
    out[5] = hit_cap
