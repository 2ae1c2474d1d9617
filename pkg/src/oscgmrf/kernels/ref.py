"""Reference implementations of the sparse numerical kernels.

Pure numpy/python versions of the performance-critical routines: fill-reducing
ordering, elimination-tree symbolic analysis, up-looking simplicial Cholesky
factorization and triangular solves.  ``oscgmrf.kernels`` re-exports these
either as-is (fallback backend) or jit-compiled (numba backend); see
``oscgmrf.kernels.jitted`` for the compiled variants.

All functions operate on plain int64/float64 arrays (CSC layout) so that the
same code object can be compiled by numba without modification.  Matrices are
assumed canonical: sorted indices, no duplicates.
"""

import numpy as np


def etree(n, indptr, indices):
    """Elimination tree of a symmetric matrix given its full CSC pattern.

    Entries with row > column are ignored, so passing the full symmetric
    pattern is fine.  Returns ``parent`` with -1 marking roots.
    """
    parent = np.full(n, -1, np.int64)
    ancestor = np.full(n, -1, np.int64)
    for k in range(n):
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


def col_counts(n, indptr, indices, parent):
    """Nonzero count of each column of the Cholesky factor L (diagonal included).

    Walks the row subtrees of the elimination tree; cost is proportional to
    the number of nonzeros of L.
    """
    counts = np.ones(n, np.int64)
    mark = np.full(n, -1, np.int64)
    for k in range(n):
        mark[k] = k
        for p in range(indptr[k], indptr[k + 1]):
            i = indices[p]
            if i >= k:
                continue
            while i != -1 and mark[i] != k:
                counts[i] += 1
                mark[i] = k
                i = parent[i]
    return counts


def chol_numeric(n, Cp, Ci, Cx, parent, Lp, Li, Lx):
    """Up-looking numeric Cholesky C = L L^T for a permuted CSC matrix.

    ``Lp`` must hold the column pointers from the symbolic phase; ``Li`` and
    ``Lx`` are overwritten.  Only the upper triangle of C is read.  Returns 0
    on success, or k+1 if the leading minor of order k+1 is not positive
    definite (the factor is left partially written in that case).
    """
    c = Lp[:n].copy()
    x = np.zeros(n, np.float64)
    s = np.empty(n, np.int64)
    w = np.full(n, -1, np.int64)
    for k in range(n):
        # pattern of row k of L via reachability in the elimination tree
        top = n
        w[k] = k
        d = 0.0
        for p in range(Cp[k], Cp[k + 1]):
            i = Ci[p]
            if i > k:
                continue
            if i == k:
                d = Cx[p]
                continue
            x[i] = Cx[p]
            ln = 0
            while i != -1 and w[i] != k:
                s[ln] = i
                ln += 1
                w[i] = k
                i = parent[i]
            while ln > 0:
                top -= 1
                ln -= 1
                s[top] = s[ln]
        # sparse triangular solve L(0:k,0:k) y = C(0:k,k) along that pattern
        for pp in range(top, n):
            i = s[pp]
            lki = x[i] / Lx[Lp[i]]
            x[i] = 0.0
            for p in range(Lp[i] + 1, c[i]):
                x[Li[p]] -= Lx[p] * lki
            d -= lki * lki
            q = c[i]
            Li[q] = k
            Lx[q] = lki
            c[i] = q + 1
        if d <= 0.0:
            return k + 1
        q = c[k]
        Li[q] = k
        Lx[q] = np.sqrt(d)
        c[k] = q + 1
    return 0


def lsolve_multi(Lp, Li, Lx, B):
    """Solve L X = B in place for a CSC lower-triangular L; B is (n, m)."""
    n = Lp.shape[0] - 1
    for j in range(n):
        p0 = Lp[j]
        B[j] /= Lx[p0]
        for p in range(p0 + 1, Lp[j + 1]):
            B[Li[p]] -= Lx[p] * B[j]


def ltsolve_multi(Lp, Li, Lx, B):
    """Solve L^T X = B in place for a CSC lower-triangular L; B is (n, m)."""
    n = Lp.shape[0] - 1
    for j in range(n - 1, -1, -1):
        p0 = Lp[j]
        for p in range(p0 + 1, Lp[j + 1]):
            B[j] -= Lx[p] * B[Li[p]]
        B[j] /= Lx[p0]


def min_degree_order(n, indptr, indices):
    """Minimum-degree fill-reducing ordering of a symmetric CSC pattern.

    Quotient-graph formulation with element absorption and exact external
    degrees; ties break on the smallest vertex index, the pivot search is a
    plain linear scan.  Simplicity over asymptotics: the O(n^2) scan is
    irrelevant next to factorization cost at the mesh sizes this package
    targets.  Returns ``perm`` mapping new index -> old index.
    """
    # initial adjacency lists (off-diagonal entries only)
    deg = np.zeros(n, np.int64)
    for j in range(n):
        for p in range(indptr[j], indptr[j + 1]):
            if indices[p] != j:
                deg[j] += 1
    nz = 0
    for j in range(n):
        nz += deg[j]

    cap = 2 * nz + 8 * n + 64
    iw = np.empty(cap, np.int64)
    pe = np.zeros(n, np.int64)      # list start
    ne = np.zeros(n, np.int64)      # live var: number of element refs (front)
    nv = np.zeros(n, np.int64)      # live var: number of var refs; element: clique size
    state = np.zeros(n, np.int64)   # 0 live variable, 1 element, 2 absorbed element
    pos = 0
    for j in range(n):
        pe[j] = pos
        for p in range(indptr[j], indptr[j + 1]):
            i = indices[p]
            if i != j:
                iw[pos] = i
                pos += 1
        nv[j] = pos - pe[j]
    tail = pos

    degree = deg.copy()
    lp_mark = np.zeros(n, np.int64)
    dg_mark = np.zeros(n, np.int64)
    lp_tag = 0
    dg_tag = 0
    perm = np.empty(n, np.int64)
    members = np.empty(n, np.int64)
    scratch = np.empty(n, np.int64)

    for step in range(n):
        # pivot: live variable of minimum degree, smallest index wins ties
        piv = -1
        dmin = np.int64(2 * n + 2)
        for i in range(n):
            if state[i] == 0 and degree[i] < dmin:
                dmin = degree[i]
                piv = i
        perm[step] = piv

        # gather the new element's variables: union of the pivot's element
        # cliques and its direct variable neighbours
        lp_tag += 1
        lp_mark[piv] = lp_tag
        nm = 0
        base = pe[piv]
        for q in range(base, base + ne[piv]):
            e = iw[q]
            if state[e] != 1:
                continue
            eb = pe[e]
            for r in range(eb, eb + nv[e]):
                v = iw[r]
                if state[v] == 0 and lp_mark[v] != lp_tag:
                    lp_mark[v] = lp_tag
                    members[nm] = v
                    nm += 1
            state[e] = 2  # absorbed into the new element
        for q in range(base + ne[piv], base + ne[piv] + nv[piv]):
            v = iw[q]
            if state[v] == 0 and lp_mark[v] != lp_tag:
                lp_mark[v] = lp_tag
                members[nm] = v
                nm += 1

        # make room for the new element's clique at the tail
        if tail + nm > iw.shape[0]:
            newcap = iw.shape[0] * 2
            if newcap < tail + nm + n:
                newcap = tail + nm + n
            iw2 = np.empty(newcap, np.int64)
            pos2 = 0
            for i2 in range(n):
                if state[i2] == 0:
                    ln2 = ne[i2] + nv[i2]
                elif state[i2] == 1:
                    ln2 = nv[i2]
                else:
                    continue
                b2 = pe[i2]
                pe[i2] = pos2
                for q2 in range(ln2):
                    iw2[pos2 + q2] = iw[b2 + q2]
                pos2 += ln2
            iw = iw2
            tail = pos2

        state[piv] = 1
        pe[piv] = tail
        nv[piv] = nm
        ne[piv] = 0
        for q in range(nm):
            iw[tail + q] = members[q]
        tail += nm
        degree[piv] = 0
        if nm == 0:
            continue

        # update each member: rebuild its adjacency list and recompute its
        # exact external degree
        for mi in range(nm):
            i = members[mi]
            b = pe[i]
            lni = ne[i] + nv[i]
            for q in range(lni):
                scratch[q] = iw[b + q]
            w = b
            # element refs: keep live ones, then append the new element
            for q in range(ne[i]):
                e = scratch[q]
                if state[e] == 1:
                    iw[w] = e
                    w += 1
            iw[w] = piv
            w += 1
            new_ne = w - b
            # variable refs: drop eliminated vertices, the pivot and anything
            # now reachable through the new element
            for q in range(ne[i], lni):
                v = scratch[q]
                if state[v] == 0 and lp_mark[v] != lp_tag:
                    iw[w] = v
                    w += 1
            ne[i] = new_ne
            nv[i] = w - b - new_ne

            # exact external degree: distinct live vertices adjacent through
            # element cliques and remaining variable edges, excluding i
            dg_tag += 1
            dg_mark[i] = dg_tag
            d = np.int64(0)
            for q in range(b, b + ne[i]):
                e = iw[q]
                eb = pe[e]
                for r in range(eb, eb + nv[e]):
                    v = iw[r]
                    if state[v] == 0 and dg_mark[v] != dg_tag:
                        dg_mark[v] = dg_tag
                        d += 1
            for q in range(b + ne[i], b + ne[i] + nv[i]):
                v = iw[q]
                if dg_mark[v] != dg_tag:
                    dg_mark[v] = dg_tag
                    d += 1
            degree[i] = d

    return perm
