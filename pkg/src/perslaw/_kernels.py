"""Compiled inner loops: clique expansion, enumerating-ball radii, column reduction.

Every distance used for a filtration value goes through :func:`pair_dist` so
that values compared across kernels are bit-identical.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

RIPS = 0
CECH = 1


@njit(cache=True, inline="always")
def pair_dist(P, i, j):
    s = 0.0
    for k in range(P.shape[1]):
        t = P[i, k] - P[j, k]
        s += t * t
    return math.sqrt(s)


@njit(cache=True, inline="always")
def round12(x):
    return np.rint(x * 1e12) / 1e12


@njit(cache=True)
def edge_values(P, I, J, kind):
    out = np.empty(I.shape[0])
    for e in range(I.shape[0]):
        d = pair_dist(P, I[e], J[e])
        out[e] = d if kind == RIPS else round12(0.5 * d)
    return out


@njit(cache=True)
def triangle_meb_radius(P, a, b, c):
    """Radius of the smallest ball enclosing three points (any ambient dimension)."""
    ab = pair_dist(P, a, b)
    ac = pair_dist(P, a, c)
    bc = pair_dist(P, b, c)
    # longest side first
    l0, l1, l2 = ab, ac, bc
    if l1 > l0:
        l0, l1 = l1, l0
    if l2 > l0:
        l0, l2 = l2, l0
    if l0 * l0 >= l1 * l1 + l2 * l2:
        return 0.5 * l0
    # acute: circumradius R = abc / (4 area), area from the Gram determinant
    dim = P.shape[1]
    uu = 0.0
    vv = 0.0
    uv = 0.0
    for k in range(dim):
        u = P[b, k] - P[a, k]
        v = P[c, k] - P[a, k]
        uu += u * u
        vv += v * v
        uv += u * v
    gram = uu * vv - uv * uv
    if gram <= 0.0:
        return 0.5 * l0
    return ab * ac * bc / (2.0 * math.sqrt(gram))


@njit(cache=True)
def triangle_value(P, a, b, c, kind):
    if kind == RIPS:
        v = pair_dist(P, a, b)
        t = pair_dist(P, a, c)
        if t > v:
            v = t
        t = pair_dist(P, b, c)
        if t > v:
            v = t
        return v
    # canonical vertex order keeps the floating-point result order-independent
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    v = round12(triangle_meb_radius(P, a, b, c))
    # never below the edges, whatever the rounding in the acute branch did
    for e in (round12(0.5 * pair_dist(P, a, b)), round12(0.5 * pair_dist(P, a, c)),
              round12(0.5 * pair_dist(P, b, c))):
        if e > v:
            v = e
    return v


@njit(cache=True)
def _has_neighbor(ptr, idx, u, v):
    lo = ptr[u]
    hi = ptr[u + 1]
    while lo < hi:
        mid = (lo + hi) >> 1
        w = idx[mid]
        if w < v:
            lo = mid + 1
        elif w > v:
            hi = mid
        else:
            return True
    return False


@njit(cache=True)
def expand_count(S, ptr, idx):
    """Number of (k+1)-cliques extending each k-clique row of S by a larger vertex."""
    m, k = S.shape
    counts = np.zeros(m, np.int64)
    for r in range(m):
        first = S[r, 0]
        last = S[r, k - 1]
        c = 0
        for p in range(ptr[first], ptr[first + 1]):
            v = idx[p]
            if v <= last:
                continue
            ok = True
            for t in range(1, k):
                if not _has_neighbor(ptr, idx, S[r, t], v):
                    ok = False
                    break
            if ok:
                c += 1
        counts[r] = c
    return counts


@njit(cache=True)
def expand_fill(S, ptr, idx, counts):
    m, k = S.shape
    total = 0
    for r in range(m):
        total += counts[r]
    out = np.empty((total, k + 1), np.int64)
    pos = 0
    for r in range(m):
        if counts[r] == 0:
            continue
        first = S[r, 0]
        last = S[r, k - 1]
        for p in range(ptr[first], ptr[first + 1]):
            v = idx[p]
            if v <= last:
                continue
            ok = True
            for t in range(1, k):
                if not _has_neighbor(ptr, idx, S[r, t], v):
                    ok = False
                    break
            if ok:
                for t in range(k):
                    out[pos, t] = S[r, t]
                out[pos, k] = v
                pos += 1
    return out


@njit(cache=True)
def triangle_values(P, T, kind):
    out = np.empty(T.shape[0])
    for r in range(T.shape[0]):
        out[r] = triangle_value(P, T[r, 0], T[r, 1], T[r, 2], kind)
    return out


@njit(cache=True)
def rips_values(P, S):
    m, k = S.shape
    out = np.empty(m)
    for r in range(m):
        v = 0.0
        for a in range(k):
            for b in range(a + 1, k):
                t = pair_dist(P, S[r, a], S[r, b])
                if t > v:
                    v = t
        out[r] = v
    return out


@njit(cache=True)
def estimate_cliques(deg, k):
    """Upper bound on the number of k-vertex cliques from the degree sequence."""
    total = 0.0
    for d in deg:
        c = 1.0
        for t in range(k - 1):
            c *= (d - t) / (t + 1.0)
        if d >= k - 1:
            total += c
    return total / k


# ---------------------------------------------------------------------------
# column reduction over the two-element field


@njit(cache=True)
def _symdiff_into(a, na, b, out):
    """Sorted symmetric difference of ``a[:na]`` and ``b`` written to ``out``; returns its length."""
    i = 0
    j = 0
    n = 0
    nb = b.shape[0]
    while i < na and j < nb:
        x = a[i]
        y = b[j]
        if x < y:
            out[n] = x
            n += 1
            i += 1
        elif y < x:
            out[n] = y
            n += 1
            j += 1
        else:
            i += 1
            j += 1
    while i < na:
        out[n] = a[i]
        n += 1
        i += 1
    while j < nb:
        out[n] = b[j]
        n += 1
        j += 1
    return n


@njit(cache=True)
def _precedes(val_t, key_t, val_s, key_s):
    return val_s < val_t or (val_s == val_t and key_s < key_t)


@njit(cache=True)
def _tri_key(a, b, c, n):
    # sort three distinct vertices, then base-n encode
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    return (a * n + b) * n + c


@njit(cache=True)
def _cone_precedes(P, kind, a, b, c, v, val, key, n):
    """Whether the triangles v*ab, v*ac, v*bc all come before the triangle abc."""
    if v == a or v == b or v == c:
        return False
    if kind == RIPS:
        if pair_dist(P, v, a) > val or pair_dist(P, v, b) > val or pair_dist(P, v, c) > val:
            return False
    if not _precedes(val, key, triangle_value(P, v, a, b, kind), _tri_key(v, a, b, n)):
        return False
    if not _precedes(val, key, triangle_value(P, v, a, c, kind), _tri_key(v, a, c, n)):
        return False
    return _precedes(val, key, triangle_value(P, v, b, c, kind), _tri_key(v, b, c, n))


@njit(cache=True)
def _certified_positive(P, kind, tri, val, key, n, hint, nbr_ptr, nbr_idx, nbr_dist):
    """True when some vertex v cones off the triangle with three earlier triangles.

    Then the boundary of the triangle equals the sum of the boundaries of the
    three other facets of the tetrahedron, all of which precede it, so its
    column reduces to zero. ``hint`` is tried first, then the neighbours of
    the first vertex in order of distance.
    """
    a = tri[0]
    b = tri[1]
    c = tri[2]
    if hint >= 0 and _cone_precedes(P, kind, a, b, c, hint, val, key, n):
        return True
    reach = val if kind == RIPS else 2.0 * val
    for p in range(nbr_ptr[a], nbr_ptr[a + 1]):
        if nbr_dist[p] > reach:
            break
        if _cone_precedes(P, kind, a, b, c, nbr_idx[p], val, key, n):
            return True
    return False


@njit(cache=True)
def _cone_cycle(P, kind, edges, rows, nrows, val, key, n, nbr_ptr, nbr_idx, nbr_dist):
    """Whether the edge cycle ``rows[:nrows]`` is the boundary of a cone over earlier triangles.

    A cycle z satisfies z = boundary(v * z) for any vertex v; if every
    triangle v*e with e in z precedes the current triangle then z bounds
    before it and the column reduces to zero.
    """
    x0 = edges[rows[nrows - 1], 0]
    reach = val if kind == RIPS else 2.0 * val
    for p in range(nbr_ptr[x0], nbr_ptr[x0 + 1]):
        if nbr_dist[p] > reach:
            break
        v = nbr_idx[p]
        ok = True
        for i in range(nrows):
            x = edges[rows[i], 0]
            y = edges[rows[i], 1]
            if v == x or v == y:
                ok = False
                break
            if kind == RIPS and (pair_dist(P, v, x) > val or pair_dist(P, v, y) > val):
                ok = False
                break
            if not _precedes(val, key, triangle_value(P, v, x, y, kind), _tri_key(v, x, y, n)):
                ok = False
                break
        if ok:
            return True
    return False


@njit(cache=True)
def reduce_columns(facets, n_rows, cleared, certify, P, kind, verts, vals, edges, nbr_ptr, nbr_idx, nbr_dist):
    """Standard persistence reduction of the columns ``facets`` (rows are facet ranks).

    Columns flagged in ``cleared`` are skipped (twist). When ``certify`` is set
    the columns must be triangles with vertex rows ``verts`` and values
    ``vals`` (``edges`` holds the vertices of each row); triangles whose
    boundary, or a partially reduced column, is a cone over earlier triangles
    are recognised as positive and dropped early.

    Returns ``(low_of_col, n_additions)``; ``low_of_col[j]`` is the pivot row of
    the reduced column j or -1 when it reduced to zero / was skipped.
    """
    m = facets.shape[0]
    k = facets.shape[1]
    n_pts = P.shape[0]
    # reduced columns are stored by their pivot row: at most one per row
    owner = np.full(n_rows, -1, np.int64)
    low_of_col = np.full(m, -1, np.int32)
    cap = 16 + 4 * min(m, n_rows)
    store = np.empty(cap, np.int64)
    start = np.zeros(n_rows, np.int64)
    length = np.zeros(n_rows, np.int64)
    used = 0
    additions = 0
    col = np.empty(k, np.int64)
    work = np.empty(64, np.int64)
    spare = np.empty(64, np.int64)
    for j in range(m):
        if cleared[j]:
            continue
        for t in range(k):
            col[t] = facets[j, t]
        col.sort()
        low = col[k - 1]
        key = 0
        if owner[low] != -1 and certify:
            # the apex of the triangle owning our pivot is the likeliest cone vertex
            o = owner[low]
            hint = -1
            for t in range(3):
                w = verts[o, t]
                if w != verts[j, 0] and w != verts[j, 1] and w != verts[j, 2]:
                    hint = w
            key = (verts[j, 0] * n_pts + verts[j, 1]) * n_pts + verts[j, 2]
            if _certified_positive(P, kind, verts[j], vals[j], key, n_pts, hint, nbr_ptr, nbr_idx, nbr_dist):
                continue
        for t in range(k):
            work[t] = col[t]
        nw = k
        steps = 0
        while nw > 0:
            piv = work[nw - 1]
            if owner[piv] == -1:
                break
            if certify and steps > 0 and (steps & (steps - 1)) == 0:
                if _cone_cycle(P, kind, edges, work, nw, vals[j], key, n_pts, nbr_ptr, nbr_idx, nbr_dist):
                    nw = 0
                    break
            steps += 1
            need = nw + length[piv]
            if need > work.shape[0]:
                grown = np.empty(2 * need, np.int64)
                grown[:nw] = work[:nw]
                work = grown
                spare = np.empty(2 * need, np.int64)
            nw = _symdiff_into(work, nw, store[start[piv]:start[piv] + length[piv]], spare)
            work, spare = spare, work
            additions += 1
        if nw == 0:
            continue
        low = work[nw - 1]
        owner[low] = j
        low_of_col[j] = low
        if used + nw > cap:
            while used + nw > cap:
                cap *= 2
            bigger = np.empty(cap, np.int64)
            bigger[:used] = store[:used]
            store = bigger
        store[used:used + nw] = work[:nw]
        start[low] = used
        length[low] = nw
        used += nw
    return low_of_col, additions


@njit(cache=True)
def union_find_pairs(I, J, n_vertices):
    """Elder-rule merges along edges given in filtration order.

    Returns, per edge, the vertex whose component dies there (-1 if the edge
    closes a cycle). Components are represented by their oldest vertex, which
    is the smallest index because all vertices enter at time 0 in index order.
    """
    parent = np.arange(n_vertices)
    dies = np.full(I.shape[0], -1, np.int64)
    for e in range(I.shape[0]):
        a = I[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = J[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if a < b:
            parent[b] = a
            dies[e] = b
        else:
            parent[a] = b
            dies[e] = a
    return dies


# ---------------------------------------------------------------------------
# Rips triangles grouped by their longest edge


@njit(cache=True)
def _edge_triangles(e, I, J, ptr, idx, erank, out, facets, pos, write):
    a = I[e]
    b = J[e]
    p = ptr[a]
    pe = ptr[a + 1]
    q = ptr[b]
    qe = ptr[b + 1]
    while p < pe and q < qe:
        u = idx[p]
        w = idx[q]
        if u < w:
            p += 1
        elif w < u:
            q += 1
        else:
            if erank[p] < e and erank[q] < e:
                if write:
                    if u < a:
                        out[pos, 0] = u
                        out[pos, 1] = a
                        out[pos, 2] = b
                    elif u < b:
                        out[pos, 0] = a
                        out[pos, 1] = u
                        out[pos, 2] = b
                    else:
                        out[pos, 0] = a
                        out[pos, 1] = b
                        out[pos, 2] = u
                    facets[pos, 0] = erank[p]
                    facets[pos, 1] = erank[q]
                    facets[pos, 2] = e
                pos += 1
            p += 1
            q += 1
    return pos


@njit(cache=True)
def rips_triangles(I, J, ptr, idx, erank):
    """Triangles in filtration order, enumerated edge by edge.

    ``I, J`` are the edges in filtration order and ``erank[p]`` is the rank of
    the edge to ``idx[p]`` in the index-sorted adjacency. A triangle is listed
    under its last edge; for increasing third vertex the triangles of one edge
    come out in lexicographic order. Returns vertices, facet ranks and the
    edge each triangle was listed under.
    """
    m = I.shape[0]
    total = 0
    dummy = np.empty((0, 3), np.int32)
    for e in range(m):
        total = _edge_triangles(e, I, J, ptr, idx, erank, dummy, dummy, total, False)
    T = np.empty((total, 3), np.int32)
    Fc = np.empty((total, 3), np.int32)
    src = np.empty(total, np.int32)
    pos = 0
    for e in range(m):
        new = _edge_triangles(e, I, J, ptr, idx, erank, T, Fc, pos, True)
        src[pos:new] = e
        pos = new
    return T, Fc, src


@njit(cache=True)
def tie_runs(values, src):
    """Start/end of maximal equal-value runs that span more than one listing edge."""
    starts = []
    ends = []
    m = values.shape[0]
    s = 0
    while s < m:
        e = s + 1
        mixed = False
        while e < m and values[e] == values[s]:
            if src[e] != src[s]:
                mixed = True
            e += 1
        if mixed:
            starts.append(s)
            ends.append(e)
        s = e
    out = np.empty((len(starts), 2), np.int64)
    for i in range(len(starts)):
        out[i, 0] = starts[i]
        out[i, 1] = ends[i]
    return out
