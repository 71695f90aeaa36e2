"""Inner loops: transport flows, weighted cliques, alignment annealing, pairwise norms.

Every kernel exists twice: a loop version (``*_loop``) that numba compiles, and a
fallback used when numba is disabled.  Fallbacks are vectorized where the
algorithm allows it; the inherently sequential ones (greedy transport,
augmenting paths, branch and bound) run the same loop in plain python.
The dispatched names at the bottom are what the rest of the package imports.
"""
import numpy as np

from ._accel import REDUCE_FLAGS, USE_NUMBA, compile_loop, pick

FLOW_TOL = 1e-14


# ---------------------------------------------------------------- line transport

def line_transport_loop(x, mu, y, nu, t):
    """Max mass movable from (x, mu) to (y, nu) along pairs with |x - y| <= t.

    x and y sorted ascending.  Greedy leftmost filling is optimal because the
    admissible targets of each source form an interval whose endpoints are
    nondecreasing in the source position.
    """
    m = y.shape[0]
    rem = nu.copy()
    j0 = 0
    total = 0.0
    for i in range(x.shape[0]):
        xi = x[i]
        while j0 < m and (rem[j0] == 0.0 or xi - y[j0] > t):
            j0 += 1
        a = mu[i]
        j = j0
        while a > 0.0 and j < m:
            if y[j] - xi > t:
                break
            if rem[j] > 0.0:
                s = a if a < rem[j] else rem[j]
                rem[j] -= s
                a -= s
                total += s
            if rem[j] == 0.0:
                j += 1
    return total


# ---------------------------------------------------------------- bipartite max flow

def bipartite_maxflow_loop(allowed, a, b):
    """Edmonds-Karp on the bipartite network source->rows->cols->sink.

    Row capacities ``a``, column capacities ``b``, uncapacitated arcs where
    ``allowed`` is true.  Returns (value, plan).
    """
    n, m = allowed.shape
    plan = np.zeros((n, m))
    ra = a.copy()
    rb = b.copy()
    for i in range(n):
        for j in range(m):
            if allowed[i, j] and ra[i] > FLOW_TOL and rb[j] > FLOW_TOL:
                s = ra[i] if ra[i] < rb[j] else rb[j]
                plan[i, j] += s
                ra[i] -= s
                rb[j] -= s
    prev_col = np.empty(n, dtype=np.int64)  # how each row was reached (-1: from source)
    prev_row = np.empty(m, dtype=np.int64)  # row from which each column was reached
    queue = np.empty(n, dtype=np.int64)
    while True:
        prev_col[:] = -2
        prev_row[:] = -1
        head = 0
        tail = 0
        for i in range(n):
            if ra[i] > FLOW_TOL:
                prev_col[i] = -1
                queue[tail] = i
                tail += 1
        target = -1
        while head < tail and target < 0:
            i = queue[head]
            head += 1
            for j in range(m):
                if allowed[i, j] and prev_row[j] < 0:
                    prev_row[j] = i
                    if rb[j] > FLOW_TOL:
                        target = j
                        break
                    for i2 in range(n):
                        if prev_col[i2] == -2 and plan[i2, j] > FLOW_TOL:
                            prev_col[i2] = j
                            queue[tail] = i2
                            tail += 1
        if target < 0:
            break
        # bottleneck along the path
        bott = rb[target]
        j = target
        while True:
            i = prev_row[j]
            pj = prev_col[i]
            if pj == -1:
                if ra[i] < bott:
                    bott = ra[i]
                break
            if plan[i, pj] < bott:
                bott = plan[i, pj]
            j = pj
        j = target
        rb[target] -= bott
        while True:
            i = prev_row[j]
            plan[i, j] += bott
            pj = prev_col[i]
            if pj == -1:
                ra[i] -= bott
                break
            plan[i, pj] -= bott
            j = pj
    return plan.sum(), plan


# ---------------------------------------------------------------- weighted clique

def max_weight_clique_loop(adj, w):
    """Exact maximum-weight clique by branch and bound (at most 62 vertices).

    Returns (weight, membership mask as int64 bitset).
    """
    n = w.shape[0]
    one = np.int64(1)
    nbr = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i != j and adj[i, j]:
                nbr[i] |= one << j
    full = np.int64(0)
    for i in range(n):
        if w[i] > 0.0:
            full |= one << i
    size = 2 * n + 4
    s_w = np.zeros(size)
    s_r = np.zeros(size, dtype=np.int64)
    s_p = np.zeros(size, dtype=np.int64)
    top = 1
    s_p[0] = full
    best = 0.0
    best_mask = np.int64(0)
    while top > 0:
        top -= 1
        rw = s_w[top]
        r = s_r[top]
        p = s_p[top]
        if rw > best:
            best = rw
            best_mask = r
        if p == 0:
            continue
        pw = 0.0
        v = -1
        vw = -1.0
        for i in range(n):
            if (p >> i) & one:
                pw += w[i]
                if w[i] > vw:
                    vw = w[i]
                    v = i
        if rw + pw <= best + 1e-15:
            continue
        bit = one << v
        s_w[top] = rw
        s_r[top] = r
        s_p[top] = p & ~bit
        top += 1
        s_w[top] = rw + w[v]
        s_r[top] = r | bit
        s_p[top] = p & nbr[v]
        top += 1
    return best, best_mask


# ---------------------------------------------------------------- greedy drop for big couplings

def greedy_keep_loop(dx, dy, xa, ya, w, t):
    """Greedy vertex cover of the conflict graph {|dx - dy| > t} over coupling atoms."""
    n = w.shape[0]
    cnt = np.zeros(n, dtype=np.int64)
    cw = np.zeros(n)
    for a in range(n):
        for b in range(a + 1, n):
            if abs(dx[xa[a], xa[b]] - dy[ya[a], ya[b]]) > t:
                cnt[a] += 1
                cnt[b] += 1
                cw[a] += w[b]
                cw[b] += w[a]
    keep = np.ones(n, dtype=np.bool_)
    while True:
        best = -1
        score = -1.0
        for a in range(n):
            if keep[a] and cnt[a] > 0:
                s = cw[a] / w[a]
                if s > score:
                    score = s
                    best = a
        if best < 0:
            break
        keep[best] = False
        for b in range(n):
            if keep[b] and cnt[b] > 0:
                if abs(dx[xa[best], xa[b]] - dy[ya[best], ya[b]]) > t:
                    cnt[b] -= 1
                    cw[b] -= w[best]
    return keep


def greedy_keep_numpy(dx, dy, xa, ya, w, t):
    conflict = np.abs(dx[np.ix_(xa, xa)] - dy[np.ix_(ya, ya)]) > t
    np.fill_diagonal(conflict, False)
    cnt = conflict.sum(axis=1).astype(np.int64)
    cw = conflict.astype(float) @ w
    keep = np.ones(w.shape[0], dtype=bool)
    while True:
        live = keep & (cnt > 0)
        if not live.any():
            break
        score = np.where(live, cw / w, -1.0)
        best = int(np.argmax(score))
        keep[best] = False
        row = conflict[best] & keep
        cnt[row] -= 1
        cw[row] -= w[best]
    return keep


# ---------------------------------------------------------------- alignment annealing

def _alignment_value(dxa, dys, perm, drop, q):
    ndrop = 0
    for a in range(q):
        if drop[a]:
            ndrop += 1
    worst = ndrop / q
    for a in range(q):
        if drop[a]:
            continue
        pa = perm[a]
        for b in range(a + 1, q):
            if drop[b]:
                continue
            v = abs(dxa[a, b] - dys[pa, perm[b]])
            if v > worst:
                worst = v
    return worst


if USE_NUMBA:
    _alignment_value = compile_loop(_alignment_value)


def anneal_alignment_loop(dxa, dys, perm0, drop0, kinds, ia, ib, acc, temps):
    """Metropolis search over (interval bijection, dropped intervals).

    ``dxa[a, b]`` is the X-distance between the points carried by intervals a, b;
    ``dys[u, v]`` the Y-distance between slots u, v.  Random draws are supplied by
    the caller so that every backend follows the same trajectory.
    """
    q = perm0.shape[0]
    perm = perm0.copy()
    drop = drop0.copy()
    cur = _alignment_value(dxa, dys, perm, drop, q)
    best = cur
    best_perm = perm.copy()
    best_drop = drop.copy()
    for it in range(kinds.shape[0]):
        a = ia[it]
        b = ib[it]
        if kinds[it] < 0.5:
            if a == b:
                continue
            tmp = perm[a]
            perm[a] = perm[b]
            perm[b] = tmp
        else:
            drop[a] = not drop[a]
        new = _alignment_value(dxa, dys, perm, drop, q)
        delta = new - cur
        if delta <= 0.0 or acc[it] < np.exp(-delta / temps[it]):
            cur = new
            if cur < best:
                best = cur
                best_perm[:] = perm
                best_drop[:] = drop
        else:
            if kinds[it] < 0.5:
                tmp = perm[a]
                perm[a] = perm[b]
                perm[b] = tmp
            else:
                drop[a] = not drop[a]
    return best, best_perm, best_drop


def anneal_alignment_numpy(dxa, dys, perm0, drop0, kinds, ia, ib, acc, temps):
    q = perm0.shape[0]
    iu = np.triu_indices(q, 1)
    dxa_u = dxa[iu]

    def value(perm, drop):
        keep = ~drop
        dist = np.abs(dxa_u - dys[perm[iu[0]], perm[iu[1]]])
        dist = dist[keep[iu[0]] & keep[iu[1]]]
        worst = drop.sum() / q
        if dist.size:
            worst = max(worst, float(dist.max()))
        return worst

    perm = perm0.copy()
    drop = drop0.copy()
    cur = value(perm, drop)
    best, best_perm, best_drop = cur, perm.copy(), drop.copy()
    for it in range(kinds.shape[0]):
        a, b = ia[it], ib[it]
        swap = kinds[it] < 0.5
        if swap:
            if a == b:
                continue
            perm[a], perm[b] = perm[b], perm[a]
        else:
            drop[a] = not drop[a]
        new = value(perm, drop)
        delta = new - cur
        if delta <= 0.0 or acc[it] < np.exp(-delta / temps[it]):
            cur = new
            if cur < best:
                best, best_perm, best_drop = cur, perm.copy(), drop.copy()
        elif swap:
            perm[a], perm[b] = perm[b], perm[a]
        else:
            drop[a] = not drop[a]
    return best, best_perm, best_drop


# ---------------------------------------------------------------- metric checks

def triangle_violation_loop(d, tol):
    """First (i, j) in row-major order with d[i,j] > min_k d[i,k] + d[k,j] + tol.

    ``d`` must be symmetric; the inner loop reads rows i and j so it stays
    contiguous, and the plain min reduction lets the compiler vectorize it.
    """
    n = d.shape[0]
    for i in range(n):
        ri = d[i]
        for j in range(i + 1, n):
            rj = d[j]
            best = np.inf
            for k in range(n):
                s = ri[k] + rj[k]
                best = min(best, s)
            if d[i, j] - best > tol:
                kb = 0
                for k in range(n):
                    if ri[k] + rj[k] < ri[kb] + rj[kb]:
                        kb = k
                return i, j, kb, d[i, j] - (ri[kb] + rj[kb])
    return -1, -1, -1, 0.0


def triangle_violation_numpy(d, tol):
    n = d.shape[0]
    best = np.full((n, n), np.inf)
    arg = np.zeros((n, n), dtype=np.int64)
    for k in range(n):
        s = d[:, k, None] + d[None, k, :]
        better = s < best
        best[better] = s[better]
        arg[better] = k
    excess = np.triu(d - best, 1)
    bad = np.argwhere(excess > tol)
    if bad.size == 0:
        return -1, -1, -1, 0.0
    i, j = bad[0]
    return int(i), int(j), int(arg[i, j]), float(excess[i, j])


def triplet_violation_loop(vals):
    """Worst F(a) - F(b) - F(c) over grid triangle triplets |b - c| <= a <= b + c."""
    k = vals.shape[0]
    worst = -np.inf
    wa, wb, wc = -1, -1, -1
    for b in range(k):
        for c in range(b, k):
            hi = b + c
            if hi > k - 1:
                hi = k - 1
            for a in range(c - b, hi + 1):
                v = vals[a] - vals[b] - vals[c]
                if v > worst:
                    worst = v
                    wa, wb, wc = a, b, c
    return worst, wa, wb, wc


def triplet_violation_numpy(vals):
    k = vals.shape[0]
    worst, best_idx = -np.inf, (-1, -1, -1)
    pad = np.concatenate([vals, np.full(k, -np.inf)])
    for b in range(k):
        width = 2 * b + 1
        cs = np.arange(b, k)
        # window [c - b, c + b] truncated to the grid
        win = np.lib.stride_tricks.sliding_window_view(pad, width)[cs - b]
        wmax = win.max(axis=1)
        arg = win.argmax(axis=1) + cs - b
        v = wmax - vals[b] - vals[cs]
        i = int(np.argmax(v))
        if v[i] > worst:
            worst = float(v[i])
            best_idx = (int(arg[i]), b, int(cs[i]))
    return (worst,) + best_idx


# ---------------------------------------------------------------- pairwise norms

def pair_norms_loop(p):
    """Return (||x_i - x_j||, ||x_i + x_j||) for all pairs of rows."""
    k, dim = p.shape
    dm = np.zeros((k, k))
    dp = np.zeros((k, k))
    for i in range(k):
        s = 0.0
        for c in range(dim):
            s += 4.0 * p[i, c] * p[i, c]
        dp[i, i] = np.sqrt(s)
        for j in range(i + 1, k):
            sm = 0.0
            sp = 0.0
            for c in range(dim):
                u = p[i, c] - p[j, c]
                v = p[i, c] + p[j, c]
                sm += u * u
                sp += v * v
            dm[i, j] = dm[j, i] = np.sqrt(sm)
            dp[i, j] = dp[j, i] = np.sqrt(sp)
    return dm, dp


def pair_norms_numpy(p):
    sq = np.einsum("ij,ij->i", p, p)
    g = p @ p.T
    base = sq[:, None] + sq[None, :]
    dm = np.sqrt(np.maximum(base - 2.0 * g, 0.0))
    dp = np.sqrt(np.maximum(base + 2.0 * g, 0.0))
    np.fill_diagonal(dm, 0.0)
    dm = 0.5 * (dm + dm.T)
    dp = 0.5 * (dp + dp.T)
    return dm, dp


line_transport = pick(line_transport_loop, line_transport_loop)
bipartite_maxflow = pick(bipartite_maxflow_loop, bipartite_maxflow_loop)
max_weight_clique = pick(max_weight_clique_loop, max_weight_clique_loop)
greedy_keep = pick(greedy_keep_loop, greedy_keep_numpy)
anneal_alignment = pick(anneal_alignment_loop, anneal_alignment_numpy)
triangle_violation = pick(triangle_violation_loop, triangle_violation_numpy, REDUCE_FLAGS)
triplet_violation = pick(triplet_violation_loop, triplet_violation_numpy)
pair_norms = pick(pair_norms_loop, pair_norms_numpy)

# (loop, fallback) pairs, used by the benchmark to time both paths side by side
KERNELS = {
    "line_transport": (line_transport_loop, line_transport_loop),
    "bipartite_maxflow": (bipartite_maxflow_loop, bipartite_maxflow_loop),
    "max_weight_clique": (max_weight_clique_loop, max_weight_clique_loop),
    "greedy_keep": (greedy_keep_loop, greedy_keep_numpy),
    "anneal_alignment": (anneal_alignment_loop, anneal_alignment_numpy),
    "triangle_violation": (triangle_violation_loop, triangle_violation_numpy),
    "triplet_violation": (triplet_violation_loop, triplet_violation_numpy),
    "pair_norms": (pair_norms_loop, pair_norms_numpy),
}
