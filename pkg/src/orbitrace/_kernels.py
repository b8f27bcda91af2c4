"""Compiled inner loops for the exhaustive triple search."""

import numpy as np
from numba import njit


@njit(cache=True)
def is_bfs_minimal(perms, n):
    # perms is in breadth-first normal form from sheet 0; reject if another start gives a smaller code
    lab = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    for s in range(1, n):
        for k in range(n):
            lab[k] = -1
        lab[s] = 0
        order[0] = s
        cnt = 1
        pos = 0
        done = False
        for i in range(n):
            o = order[i]
            for x in range(3):
                j = perms[x, o]
                if lab[j] == -1:
                    lab[j] = cnt
                    order[cnt] = j
                    cnt += 1
                v = lab[j]
                c = perms[pos % 3, pos // 3]
                if v < c:
                    return False
                if v > c:
                    done = True
                    break
                pos += 1
            if done:
                break
    return True


@njit(cache=True)
def enumerate_transitive(n, treelike):
    """All transitive involution triples on n sheets, one per isomorphism class.

    Rows are tables of shape (3, n) in minimal breadth-first normal form.
    With ``treelike`` only triples whose Schreier graph is a tree are produced.
    """
    N3 = 3 * n
    perms = -np.ones((3, n), np.int64)
    val = np.full(N3, -3, np.int64)
    nxtb = np.zeros(N3, np.int64)
    cap = 1024
    out = np.empty((cap, 3, n), np.int8)
    count = 0
    slot = 0
    nxt = 1
    while slot >= 0:
        if slot == N3:
            if nxt == n and is_bfs_minimal(perms, n):
                if count == cap:
                    new = np.empty((2 * cap, 3, n), np.int8)
                    new[:cap] = out
                    out = new
                    cap *= 2
                for x in range(3):
                    for k in range(n):
                        out[count, x, k] = perms[x, k]
                count += 1
            slot -= 1
            continue
        i = slot // 3
        x = slot % 3
        if val[slot] == -3:
            nxtb[slot] = nxt
            if i >= nxt:
                slot -= 1
                continue
            if perms[x, i] != -1:
                val[slot] = -2
                slot += 1
                continue
            start = i
        else:
            if val[slot] == -2:
                val[slot] = -3
                slot -= 1
                continue
            v = val[slot]
            perms[x, i] = -1
            if v != i:
                perms[x, v] = -1
            nxt = nxtb[slot]
            start = v + 1
        found = -1
        for v in range(start, nxt + 1):
            if v == i:
                found = v
                break
            if v > i and v < nxt and (not treelike) and perms[x, v] == -1:
                found = v
                break
            if v == nxt and nxt < n:
                found = v
                break
        if found == -1:
            val[slot] = -3
            slot -= 1
            continue
        perms[x, i] = found
        perms[x, found] = i
        if found == nxt:
            nxt += 1
        val[slot] = found
        slot += 1
    return out[:count]


@njit(cache=True)
def word_fixed_counts(trips, wflat, woff):
    """Fixed-point counts of each word (letters 0,1,2) for every triple."""
    N = trips.shape[0]
    n = trips.shape[2]
    W = len(woff) - 1
    out = np.zeros((N, W), np.int16)
    p = np.empty(n, np.int64)
    for t in range(N):
        for w in range(W):
            for k in range(n):
                p[k] = k
            for q in range(woff[w], woff[w + 1]):
                x = wflat[q]
                for k in range(n):
                    p[k] = trips[t, x, p[k]]
            c = 0
            for k in range(n):
                if p[k] == k:
                    c += 1
            out[t, w] = c
    return out


@njit(cache=True)
def _lorentz(x, y):
    return x[0] * y[0] + x[1] * y[1] - x[2] * y[2]


@njit(cache=True)
def coxeter_dfs(gens, normals, y0, base, prune_radius, keep_radius, gperms,
                axial, lmax, rho_max, max_nodes, capacity, max_depth, store_words):
    """Visit each element of a reflection group once, depth first.

    The tree is the canonical-parent tree of reduced words: the parent of
    ``g`` is ``g s`` for the smallest right descent ``s`` of ``g``, where ``s``
    is a descent when the wall ``g L_s`` separates ``g T`` from ``T``
    (tested at the interior point ``y0``).  Subtrees whose image of ``base``
    leaves ``prune_radius`` are cut.

    With ``axial`` false, elements with displacement of ``base`` at most
    ``keep_radius`` are reported; otherwise hyperbolic elements (translations
    and glides) with length at most ``lmax`` whose axis passes within
    ``rho_max`` of ``y0`` (``base`` must then equal ``y0``).

    Returns (count, visited, status, matrices, perms, words, depths);
    status 0 ok, 1 output capacity exceeded, 2 node cap exceeded, 3 depth cap.
    """
    n = gperms.shape[1]
    mats = np.zeros((capacity, 3, 3))
    perms = np.zeros((capacity, n), np.int16)
    wcap = capacity if store_words else 1
    words = np.zeros((wcap, max_depth), np.int8)
    depths = np.zeros(capacity, np.int32)
    stack_m = np.zeros((max_depth + 1, 3, 3))
    stack_p = np.zeros((max_depth + 1, n), np.int16)
    stack_next = np.zeros(max_depth + 1, np.int64)
    word = np.zeros(max_depth + 1, np.int8)
    for i in range(3):
        stack_m[0, i, i] = 1.0
    for k in range(n):
        stack_p[0, k] = k
    count = 0
    visited = 0
    status = 0
    depth = 0
    stack_next[0] = 0
    gn = np.zeros(3)
    gb = np.zeros(3)
    # report the root
    emit = True
    while depth >= 0:
        if emit:
            emit = False
            visited += 1
            if visited > max_nodes:
                status = 2
                break
            g = stack_m[depth]
            for i in range(3):
                gb[i] = g[i, 0] * base[0] + g[i, 1] * base[1] + g[i, 2] * base[2]
            ch = -_lorentz(base, gb)
            if ch < 1.0:
                ch = 1.0
            disp = np.arccosh(ch)
            keep = False
            if not axial:
                keep = disp <= keep_radius
            else:
                det = (g[0, 0] * (g[1, 1] * g[2, 2] - g[1, 2] * g[2, 1])
                       - g[0, 1] * (g[1, 0] * g[2, 2] - g[1, 2] * g[2, 0])
                       + g[0, 2] * (g[1, 0] * g[2, 1] - g[1, 1] * g[2, 0]))
                tr = g[0, 0] + g[1, 1] + g[2, 2]
                ell = -1.0
                if det > 0 and tr > 3.0 + 1e-9:
                    ell = np.arccosh((tr - 1.0) / 2.0)
                    if ell <= lmax:
                        c_rho = np.sinh(disp / 2) / np.sinh(ell / 2)
                        keep = c_rho <= np.cosh(rho_max)
                elif det < 0 and tr > 1.0 + 1e-9:
                    ell = np.arccosh((tr + 1.0) / 2.0)
                    if ell <= lmax:
                        c2 = (np.cosh(disp) + 1.0) / (np.cosh(ell) + 1.0)
                        keep = c2 <= np.cosh(rho_max) ** 2
            if keep:
                if count >= capacity:
                    status = 1
                    break
                mats[count] = g
                perms[count] = stack_p[depth]
                depths[count] = depth
                if store_words:
                    for q in range(depth):
                        words[count, q] = word[q + 1]
                count += 1
            if disp > prune_radius:
                depth -= 1
                continue
        if depth < 0:
            break
        s = stack_next[depth]
        if s >= 3:
            depth -= 1
            continue
        stack_next[depth] = s + 1
        g = stack_m[depth]
        # s must not be a descent of g
        for i in range(3):
            gn[i] = g[i, 0] * normals[s, 0] + g[i, 1] * normals[s, 1] + g[i, 2] * normals[s, 2]
        if _lorentz(y0, gn) > 0:
            continue
        if depth + 1 > max_depth:
            status = 3
            break
        c = stack_m[depth + 1]
        for i in range(3):
            for j in range(3):
                c[i, j] = (g[i, 0] * gens[s, 0, j] + g[i, 1] * gens[s, 1, j]
                           + g[i, 2] * gens[s, 2, j])
        # canonical parent: s is the smallest descent of c
        ok = True
        for t in range(s):
            for i in range(3):
                gn[i] = c[i, 0] * normals[t, 0] + c[i, 1] * normals[t, 1] + c[i, 2] * normals[t, 2]
            if _lorentz(y0, gn) > 0:
                ok = False
                break
        if not ok:
            continue
        for k in range(n):
            stack_p[depth + 1, k] = stack_p[depth, gperms[s, k]]
        word[depth + 1] = s
        depth += 1
        stack_next[depth] = 0
        emit = True
    return count, visited, status, mats[:count], perms[:count], words[:count if store_words else 0], depths[:count]
