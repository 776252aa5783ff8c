"""Compiled inner loops for the graph checks.

Graphs arrive in CSR form: ``indptr``, ``indices`` (sorted neighbor lists) and
``rev`` where ``indices[rev[k]]`` is the source of edge ``k``. Local opposition
is ``triv[v]`` (trivial relation) or a dense uint8 block of ``deg(v)**2``
entries starting at ``opp_ptr[v]`` in ``opp_data``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def is_opp(triv, opp_ptr, opp_data, deg, v, i, j):
    if i == j:
        return False
    if triv[v]:
        return True
    return opp_data[opp_ptr[v] + i * deg + j] != 0


@njit(cache=True)
def all_distances(indptr, indices, n):
    """All-pairs BFS distances; -1 for unreachable. int16 keeps it compact."""
    dist = np.full((n, n), -1, dtype=np.int16)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            du = row[u]
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if row[w] < 0:
                    row[w] = du + 1
                    queue[tail] = w
                    tail += 1
    return dist


@njit(cache=True)
def girth(indptr, indices, n):
    """Length of a shortest circuit, or -1 if the graph is a forest."""
    best = 1 << 30
    dist = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        parent[:] = -1
        dist[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue[tail] = w
                    tail += 1
                elif parent[u] != w:
                    c = dist[u] + dist[w] + 1
                    if c < best:
                        best = c
    return -1 if best == (1 << 30) else best


@njit(cache=True)
def straight_walk(indptr, indices, rev, triv, opp_ptr, opp_data, n, gon, want_roots):
    """Enumerate straight paths of length up to gon+1 from every source.

    Checks (VP2) and (VP3), collects the opposition matrix from roots and tests
    root uniqueness (one root per end neighbor) and the end-opposition law.

    Returns (op, counts, witness) where counts = [vp2_bad, vp3_bad, unique_bad,
    endlaw_bad, n_short, n_roots, n_long] and witness is a (4, 2*gon+4) array
    of example paths for the four failure kinds (-1 padded).
    """
    E = indptr[n]
    op = np.zeros((n, n), dtype=np.bool_)
    counts = np.zeros(7, dtype=np.int64)
    W = 2 * gon + 4
    witness = np.full((4, W), -1, dtype=np.int64)
    cnt = np.zeros(n, dtype=np.int64)
    slen = np.zeros(n, dtype=np.int64)
    spath = np.zeros((n, gon), dtype=np.int64)
    first_idx = np.zeros(n, dtype=np.int64)
    last_idx = np.zeros(n, dtype=np.int64)
    root_cnt = np.zeros(E, dtype=np.int64)
    root_first = np.zeros(E, dtype=np.int64)
    ends = np.zeros(n, dtype=np.bool_)
    pv = np.zeros(gon + 2, dtype=np.int64)
    inpos = np.zeros(gon + 2, dtype=np.int64)
    nxt = np.zeros(gon + 2, dtype=np.int64)
    short = gon - 1
    first_here = 0
    for s in range(n):
        cnt[:] = 0
        slen[:] = -1
        # phase 1: straight paths of length <= gon-1
        cnt[s] = 1
        slen[s] = 0
        spath[s, 0] = s
        counts[4] += 1
        d = 0
        pv[0] = s
        nxt[0] = indptr[s]
        while d >= 0:
            v = pv[d]
            if d == short or nxt[d] >= indptr[v + 1]:
                d -= 1
                continue
            k = nxt[d]
            nxt[d] += 1
            j = k - indptr[v]
            if d >= 1:
                degv = indptr[v + 1] - indptr[v]
                if j == inpos[d] or not is_opp(triv, opp_ptr, opp_data, degv, v, inpos[d], j):
                    continue
            w = indices[k]
            d += 1
            pv[d] = w
            inpos[d] = rev[k] - indptr[w]
            nxt[d] = indptr[w]
            if d == 1:
                first_here = j
            counts[4] += 1
            cnt[w] += 1
            if cnt[w] == 1:
                slen[w] = d
                for t in range(d + 1):
                    spath[w, t] = pv[t]
                first_idx[w] = first_here
                last_idx[w] = inpos[d]
            else:
                counts[0] += 1
                if witness[0, 0] < 0:
                    for t in range(slen[w] + 1):
                        witness[0, t] = spath[w, t]
                    for t in range(d + 1):
                        witness[0, gon + 2 + t] = pv[t]
        # phase 2: roots (length gon) and (gon+1)-paths
        for u in range(n):
            ends[u] = False
        d = 0
        nxt[0] = indptr[s]
        while d >= 0:
            v = pv[d]
            if d == gon + 1 or nxt[d] >= indptr[v + 1]:
                d -= 1
                continue
            k = nxt[d]
            nxt[d] += 1
            j = k - indptr[v]
            degv = indptr[v + 1] - indptr[v]
            if d >= 1:
                if j == inpos[d] or not is_opp(triv, opp_ptr, opp_data, degv, v, inpos[d], j):
                    continue
            w = indices[k]
            d += 1
            pv[d] = w
            inpos[d] = rev[k] - indptr[w]
            nxt[d] = indptr[w]
            if d == 1:
                first_here = j
            if d == gon:
                counts[5] += 1
                op[s, w] = True
                if want_roots:
                    e = indptr[w] + inpos[d]
                    root_cnt[e] += 1
                    root_first[e] = first_here
                    ends[w] = True
            elif d == gon + 1:
                counts[6] += 1
                ok = False
                if cnt[w] == 1 and slen[w] == gon - 1:
                    degw = indptr[w + 1] - indptr[w]
                    degs = indptr[s + 1] - indptr[s]
                    if is_opp(triv, opp_ptr, opp_data, degw, w, inpos[d], last_idx[w]):
                        if is_opp(triv, opp_ptr, opp_data, degs, s, first_idx[w], first_here):
                            ok = True
                if not ok:
                    counts[1] += 1
                    if witness[1, 0] < 0:
                        for t in range(d + 1):
                            witness[1, t] = pv[t]
                d -= 1
        if want_roots:
            degs = indptr[s + 1] - indptr[s]
            for y in range(n):
                if not ends[y]:
                    continue
                a = indptr[y]
                b = indptr[y + 1]
                degy = b - a
                good = True
                for e in range(a, b):
                    if root_cnt[e] != 1:
                        good = False
                if not good:
                    counts[2] += 1
                    if witness[2, 0] < 0:
                        witness[2, 0] = s
                        witness[2, 1] = y
                else:
                    for i in range(degy):
                        for jj in range(i + 1, degy):
                            l = is_opp(triv, opp_ptr, opp_data, degy, y, i, jj)
                            r = is_opp(triv, opp_ptr, opp_data, degs, s, root_first[a + i], root_first[a + jj])
                            if l != r:
                                counts[3] += 1
                                if witness[3, 0] < 0:
                                    witness[3, 0] = s
                                    witness[3, 1] = y
                                    witness[3, 2] = indices[a + i]
                                    witness[3, 3] = indices[a + jj]
                for e in range(a, b):
                    root_cnt[e] = 0
    return op, counts, witness


@njit(cache=True)
def plump_check(indptr, triv, opp_ptr, opp_data, n, k):
    """First vertex whose relation is not k-plump (k <= 3), or -1."""
    for v in range(n):
        deg = indptr[v + 1] - indptr[v]
        if triv[v]:
            if deg < k + 1:
                return v
            continue
        # subsets of size 1..k, as index triples with repetition allowed
        for a in range(deg):
            for b in range(a, deg if k >= 2 else a + 1):
                for c in range(b, deg if k >= 3 else b + 1):
                    found = False
                    for z in range(deg):
                        if (
                            is_opp(triv, opp_ptr, opp_data, deg, v, z, a)
                            and is_opp(triv, opp_ptr, opp_data, deg, v, z, b)
                            and is_opp(triv, opp_ptr, opp_data, deg, v, z, c)
                        ):
                            found = True
                            break
                    if not found:
                        return v
    return -1


@njit(cache=True)
def find_weeds(indptr, indices, triv, opp_ptr, opp_data, is_point, dist, n):
    """All non-straight 4-paths (a, x, b, y, c) of points a, b, c with dist(a, c) = 4."""
    cap = 1024
    out = np.empty((cap, 5), dtype=np.int64)
    m = 0
    for b in range(n):
        if not is_point[b]:
            continue
        degb = indptr[b + 1] - indptr[b]
        for i in range(degb):
            x = indices[indptr[b] + i]
            degx = indptr[x + 1] - indptr[x]
            ib = -1
            for t in range(degx):
                if indices[indptr[x] + t] == b:
                    ib = t
            for j in range(degb):
                if j == i:
                    continue
                y = indices[indptr[b] + j]
                degy = indptr[y + 1] - indptr[y]
                jb = -1
                for t in range(degy):
                    if indices[indptr[y] + t] == b:
                        jb = t
                mid = is_opp(triv, opp_ptr, opp_data, degb, b, i, j)
                for ia in range(degx):
                    if ia == ib:
                        continue
                    a = indices[indptr[x] + ia]
                    sa = is_opp(triv, opp_ptr, opp_data, degx, x, ia, ib)
                    for ic in range(degy):
                        if ic == jb:
                            continue
                        c = indices[indptr[y] + ic]
                        if dist[a, c] != 4:
                            continue
                        sc = is_opp(triv, opp_ptr, opp_data, degy, y, jb, ic)
                        if mid and sa and sc:
                            continue
                        if m == cap:
                            cap *= 2
                            grown = np.empty((cap, 5), dtype=np.int64)
                            grown[:m] = out[:m]
                            out = grown
                        out[m, 0] = a
                        out[m, 1] = x
                        out[m, 2] = b
                        out[m, 3] = y
                        out[m, 4] = c
                        m += 1
    return out[:m].copy()


@njit(cache=True)
def straight_in_hexagon(indptr, indices, triv, opp_ptr, opp_data, is_point, dist, n):
    """A straight 2-path (x, a, y) at a point lying on a 6-circuit, or (-1, -1, -1)."""
    for a in range(n):
        if not is_point[a]:
            continue
        dega = indptr[a + 1] - indptr[a]
        for i in range(dega):
            x = indices[indptr[a] + i]
            for j in range(i + 1, dega):
                if not is_opp(triv, opp_ptr, opp_data, dega, a, i, j):
                    continue
                y = indices[indptr[a] + j]
                for kb in range(indptr[x], indptr[x + 1]):
                    b = indices[kb]
                    if b == a:
                        continue
                    for kc in range(indptr[y], indptr[y + 1]):
                        c = indices[kc]
                        if c != a and c != b and dist[b, c] == 2:
                            return np.array([x, a, y])
    return np.array([-1, -1, -1])


@njit(cache=True)
def four_circuit(indptr, indices, n):
    """Two vertices with two common neighbors, or (-1, -1)."""
    seen = np.full(n, -1, dtype=np.int64)
    for u in range(n):
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            for t in range(indptr[w], indptr[w + 1]):
                v = indices[t]
                if v == u:
                    continue
                if seen[v] == u:
                    return np.array([u, v])
                seen[v] = u
    return np.array([-1, -1])


@njit(cache=True)
def common_opposite_failure(op_bits, dist, n):
    """A pair (u, v) at even distance whose op-sets are disjoint, or (-1, -1)."""
    words = op_bits.shape[1]
    for u in range(n):
        for v in range(u, n):
            d = dist[u, v]
            if d < 0 or d % 2 != 0:
                continue
            hit = False
            for w in range(words):
                if op_bits[u, w] & op_bits[v, w]:
                    hit = True
                    break
            if not hit:
                return np.array([u, v])
    return np.array([-1, -1])


@njit(cache=True)
def check_automorphism(indptr, indices, triv, opp_ptr, opp_data, perm, n):
    """First vertex where perm breaks adjacency or local opposition, or -1."""
    for v in range(n):
        w = perm[v]
        a = indptr[v]
        deg = indptr[v + 1] - a
        if indptr[w + 1] - indptr[w] != deg:
            return v
        img = np.empty(deg, dtype=np.int64)
        for i in range(deg):
            target = perm[indices[a + i]]
            lo = indptr[w]
            hi = indptr[w + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if indices[mid] < target:
                    lo = mid + 1
                else:
                    hi = mid
            if lo == indptr[w + 1] or indices[lo] != target:
                return v
            img[i] = lo - indptr[w]
        if triv[v] and triv[w]:
            continue
        for i in range(deg):
            for j in range(deg):
                if is_opp(triv, opp_ptr, opp_data, deg, v, i, j) != is_opp(
                    triv, opp_ptr, opp_data, deg, w, img[i], img[j]
                ):
                    return v
    return -1


@njit(cache=True)
def _mix(x):
    # splitmix64 finalizer
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def refine_hash(indptr, indices, triv, opp_ptr, opp_data, col, n):
    """One colour-refinement round that also sees local opposition.

    Neighbour i of v contributes its colour together with the multiset of
    colours opposite it at v; multisets are hashed as sums of mixed values,
    so the result is invariant under isomorphism."""
    out = np.empty(n, dtype=np.uint64)
    for v in range(n):
        a = indptr[v]
        deg = indptr[v + 1] - a
        acc = np.uint64(0)
        for i in range(deg):
            inner = np.uint64(0)
            for j in range(deg):
                if is_opp(triv, opp_ptr, opp_data, deg, v, i, j):
                    inner += _mix(col[indices[a + j]] + np.uint64(0x9E3779B97F4A7C15))
            acc += _mix(_mix(col[indices[a + i]]) ^ inner)
        out[v] = _mix(col[v] * np.uint64(0x100000001B3) ^ acc)
    return out
