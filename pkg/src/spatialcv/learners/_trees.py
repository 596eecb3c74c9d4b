"""Compiled tree growers shared by the forest and boosting learners.

Both growers keep, for every feature, the node's rows in ascending feature
order (``seg[f, start:end]``) and stably partition those segments on a split,
so the rows are sorted once per fit instead of once per node.

Trees are stored flat: ``feature[i] < 0`` marks a leaf whose output is
``value[i]``; internal nodes send ``x[feature] <= threshold`` to ``left``.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TREE = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _randint(state, m):
    return int(((_next_u64(state) >> _S11) * _INV53) * m)


@njit(cache=True)
def tree_state(seed, tree):
    """splitmix64 stream for tree number ``tree`` of a fit seeded with ``seed``."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed) ^ (np.uint64(tree + 1) * _TREE)
    _next_u64(state)
    return state


@njit(cache=True)
def presort(X):
    n, p = X.shape
    order = np.empty((p, n), dtype=np.int32)
    for f in range(p):
        order[f] = np.argsort(X[:, f], kind="mergesort").astype(np.int32)
    return order


@njit(cache=True)
def reciprocals(n):
    inv = np.zeros(n + 1)
    for k in range(1, n + 1):
        inv[k] = 1.0 / k
    return inv


@njit(cache=True)
def _partition(seg, s, e, goleft, buf):
    """Stable in-place partition of every ``seg[f, s:e]`` by ``goleft``."""
    p = seg.shape[0]
    for f in range(p):
        sf = seg[f]
        a = s
        b = 0
        for t in range(s, e):
            r = sf[t]
            gl = goleft[r]
            sf[a] = r
            buf[b] = r
            a += gl
            b += 1 - gl
        for t in range(b):
            sf[a + t] = buf[t]


@njit(cache=True, inline="always")
def _midpoint(v, vn):
    thr = 0.5 * (v + vn)
    if thr >= vn:  # adjacent doubles
        thr = v
    return thr


# -- classification trees (random forest) -------------------------------------

@njit(cache=True, inline="always")
def gini_sum(w, w0, w1, inv):
    """Weighted Gini impurity ``w * (1 - sum p_c^2)`` of a node with class weights w0, w1."""
    return w - float(w0 * w0 + w1 * w1) * inv[w]


@njit(cache=True)
def grow_gini_tree(Xt, y, order, counts, mtry, state, inv, feat, thr, left, right, value):
    """Grow one unpruned Gini tree on rows with ``counts > 0``.

    ``counts`` are bootstrap multiplicities and act as case weights. At every
    node the features are visited in random order until ``mtry`` non-constant
    ones have been scored. Ties in impurity go to the lower feature index and
    then the lower threshold. ``Xt`` is the transposed design matrix and
    ``inv[k] == 1 / k``. Returns the node count.
    """
    p, n = Xt.shape
    m = 0
    for r in range(n):
        if counts[r] > 0:
            m += 1
    seg = np.empty((p, m), dtype=np.int32)
    for f in range(p):
        k = 0
        for t in range(n):
            r = order[f, t]
            if counts[r] > 0:
                seg[f, k] = r
                k += 1
    buf = np.empty(m, dtype=np.int32)
    goleft = np.zeros(n, dtype=np.int64)
    perm = np.empty(p, dtype=np.int64)
    cy = np.empty(n, dtype=np.int64)
    for r in range(n):
        cy[r] = counts[r] * y[r]
    st_s = np.empty(2 * m + 1, dtype=np.int64)
    st_e = np.empty(2 * m + 1, dtype=np.int64)
    st_node = np.empty(2 * m + 1, dtype=np.int64)
    top = 0
    st_s[0] = 0
    st_e[0] = m
    st_node[0] = 0
    n_nodes = 1
    while top >= 0:
        s = st_s[top]
        e = st_e[top]
        node = st_node[top]
        top -= 1
        wt = 0
        w1 = 0
        for t in range(s, e):
            r = seg[0, t]
            wt += counts[r]
            w1 += cy[r]
        w0 = wt - w1
        feat[node] = -1
        if w1 > w0:
            value[node] = 1.0
        elif w1 < w0:
            value[node] = 0.0
        else:
            value[node] = 0.5
        if w0 == 0 or w1 == 0 or e - s < 2:
            continue
        best = np.inf
        best_f = -1
        best_thr = 0.0
        for i in range(p):
            perm[i] = i
        visited = 0
        for i in range(p):
            j = i + _randint(state, p - i)
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
            f = perm[i]
            xf = Xt[f]
            sf = seg[f]
            if xf[sf[s]] == xf[sf[e - 1]]:
                continue
            nl = 0
            l1 = 0
            vn = xf[sf[s]]
            fbest = np.inf
            ft = -1
            for t in range(s, e - 1):
                r = sf[t]
                nl += counts[r]
                l1 += cy[r]
                v = vn
                vn = xf[sf[t + 1]]
                l0 = nl - l1
                score = gini_sum(nl, l0, l1, inv) + gini_sum(wt - nl, w0 - l0, w1 - l1, inv)
                # branch-free running minimum; the first (lowest) threshold wins ties
                better = (vn > v) & (score < fbest)
                fbest = score if better else fbest
                ft = t if better else ft
            if ft >= 0 and (fbest < best or (fbest == best and f < best_f)):
                best = fbest
                best_f = f
                best_thr = _midpoint(xf[sf[ft]], xf[sf[ft + 1]])
            visited += 1
            if visited >= mtry:
                break
        if best_f < 0:
            continue
        n_left = 0
        for t in range(s, e):
            r = seg[best_f, t]
            gl = Xt[best_f, r] <= best_thr
            goleft[r] = gl
            n_left += gl
        _partition(seg, s, e, goleft, buf)
        feat[node] = best_f
        thr[node] = best_thr
        value[node] = 0.0
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        top += 1
        st_s[top] = s + n_left
        st_e[top] = e
        st_node[top] = rc
        top += 1
        st_s[top] = s
        st_e[top] = s + n_left
        st_node[top] = lc
    return n_nodes


@njit(cache=True, inline="always")
def _route(feat, thr, left, right, root, x):
    node = root
    while feat[node] >= 0:
        if x[feat[node]] <= thr[node]:
            node = left[node] + root
        else:
            node = right[node] + root
    return node


@njit(cache=True)
def _bootstrap(n, state, bootstrap):
    counts = np.zeros(n, dtype=np.int64)
    if bootstrap:
        for _ in range(n):
            counts[_randint(state, n)] += 1
    else:
        counts[:] = 1
    return counts


@njit(cache=True)
def forest_fit(X, y, mtry, n_trees, seed, bootstrap):
    """Grow ``n_trees`` trees; returns flat node arrays and per-tree offsets."""
    n = X.shape[0]
    order = presort(X)
    Xt = np.ascontiguousarray(X.T)
    inv = reciprocals(n)
    cap = max(64, n_trees * 16)
    feat = np.empty(cap, dtype=np.int32)
    thr = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int32)
    right = np.empty(cap, dtype=np.int32)
    value = np.empty(cap, dtype=np.float64)
    offsets = np.empty(n_trees + 1, dtype=np.int64)
    t_feat = np.empty(2 * n + 1, dtype=np.int32)
    t_thr = np.empty(2 * n + 1, dtype=np.float64)
    t_left = np.empty(2 * n + 1, dtype=np.int32)
    t_right = np.empty(2 * n + 1, dtype=np.int32)
    t_value = np.empty(2 * n + 1, dtype=np.float64)
    used = 0
    for t in range(n_trees):
        state = tree_state(seed, t)
        counts = _bootstrap(n, state, bootstrap)
        k = grow_gini_tree(Xt, y, order, counts, mtry, state, inv, t_feat, t_thr, t_left, t_right, t_value)
        if used + k > cap:
            new_cap = max(2 * cap, used + k)
            feat = _grow_i32(feat, new_cap)
            left = _grow_i32(left, new_cap)
            right = _grow_i32(right, new_cap)
            thr = _grow_f64(thr, new_cap)
            value = _grow_f64(value, new_cap)
            cap = new_cap
        offsets[t] = used
        feat[used:used + k] = t_feat[:k]
        thr[used:used + k] = t_thr[:k]
        left[used:used + k] = t_left[:k]
        right[used:used + k] = t_right[:k]
        value[used:used + k] = t_value[:k]
        used += k
    offsets[n_trees] = used
    return feat[:used].copy(), thr[:used].copy(), left[:used].copy(), right[:used].copy(), \
        value[:used].copy(), offsets


@njit(cache=True)
def _grow_i32(a, cap):
    out = np.empty(cap, dtype=np.int32)
    out[:a.size] = a
    return out


@njit(cache=True)
def _grow_f64(a, cap):
    out = np.empty(cap, dtype=np.float64)
    out[:a.size] = a
    return out


@njit(cache=True)
def forest_predict(feat, thr, left, right, value, offsets, X):
    n_trees = offsets.size - 1
    out = np.zeros(X.shape[0])
    for i in range(X.shape[0]):
        acc = 0.0
        for t in range(n_trees):
            acc += value[_route(feat, thr, left, right, offsets[t], X[i])]
        out[i] = acc / n_trees
    return out


@njit(cache=True)
def forest_vote_path(X, y, Xtest, mtry, seed, checkpoints):
    """Vote fractions on ``Xtest`` after each tree count in ``checkpoints``.

    ``checkpoints`` must be ascending. Tree ``t`` is the same tree that
    :func:`forest_fit` grows for the same seed, so row ``c`` equals the
    prediction of a forest with ``checkpoints[c]`` trees.
    """
    n = X.shape[0]
    order = presort(X)
    Xt = np.ascontiguousarray(X.T)
    inv = reciprocals(n)
    n_max = checkpoints[checkpoints.size - 1]
    out = np.empty((checkpoints.size, Xtest.shape[0]))
    votes = np.zeros(Xtest.shape[0])
    t_feat = np.empty(2 * n + 1, dtype=np.int32)
    t_thr = np.empty(2 * n + 1, dtype=np.float64)
    t_left = np.empty(2 * n + 1, dtype=np.int32)
    t_right = np.empty(2 * n + 1, dtype=np.int32)
    t_value = np.empty(2 * n + 1, dtype=np.float64)
    c = 0
    for t in range(n_max):
        state = tree_state(seed, t)
        counts = _bootstrap(n, state, True)
        grow_gini_tree(Xt, y, order, counts, mtry, state, inv, t_feat, t_thr, t_left, t_right, t_value)
        for i in range(Xtest.shape[0]):
            votes[i] += t_value[_route(t_feat, t_thr, t_left, t_right, 0, Xtest[i])]
        while c < checkpoints.size and checkpoints[c] == t + 1:
            out[c] = votes / (t + 1)
            c += 1
    return out


# -- regression trees on gradients (boosting) --------------------------------

@njit(cache=True)
def _grow_ls_tree(Xt, order, seg, g, h, max_depth, min_node, inv, goleft, buf, stack,
                  feat, thr, left, right, value, leaf_of):
    """Least-squares regression tree on ``g`` with Newton leaf values ``sum g / sum h``.

    ``leaf_of[r]`` receives the leaf node of training row ``r``.
    """
    p, n = order.shape
    for f in range(p):
        for t in range(n):
            seg[f, t] = order[f, t]
    st_s = stack[0]
    st_e = stack[1]
    st_node = stack[2]
    st_depth = stack[3]
    top = 0
    st_s[0] = 0
    st_e[0] = n
    st_node[0] = 0
    st_depth[0] = 0
    n_nodes = 1
    while top >= 0:
        s = st_s[top]
        e = st_e[top]
        node = st_node[top]
        depth = st_depth[top]
        top -= 1
        m = e - s
        sg = 0.0
        sh = 0.0
        sgg = 0.0
        for t in range(s, e):
            r = seg[0, t]
            sg += g[r]
            sh += h[r]
            sgg += g[r] * g[r]
        best_f = -1
        best_thr = 0.0
        n_left = 0
        if depth < max_depth and m >= 2 * min_node:
            base = sg * sg / m
            best = 1e-12 * sgg + 1e-300
            for f in range(p):
                xf = Xt[f]
                sf = seg[f]
                if xf[sf[s]] == xf[sf[e - 1]]:
                    continue
                sl = 0.0
                for t in range(s, s + min_node - 1):
                    sl += g[sf[t]]
                vn = xf[sf[s + min_node - 1]]
                fbest = best
                ft = -1
                for t in range(s + min_node - 1, e - min_node):
                    sl += g[sf[t]]
                    v = vn
                    vn = xf[sf[t + 1]]
                    nl = t - s + 1
                    sr = sg - sl
                    gain = sl * sl * inv[nl] + sr * sr * inv[m - nl] - base
                    # branch-free running maximum; the first (lowest) threshold wins ties
                    better = (vn > v) & (gain > fbest)
                    fbest = gain if better else fbest
                    ft = t if better else ft
                if ft >= 0:
                    best = fbest
                    best_f = f
                    best_thr = _midpoint(xf[sf[ft]], xf[sf[ft + 1]])
                    n_left = ft - s + 1
        if best_f < 0:
            feat[node] = -1
            thr[node] = 0.0
            left[node] = -1
            right[node] = -1
            value[node] = sg / sh if sh > 1e-150 else 0.0
            for t in range(s, e):
                leaf_of[seg[0, t]] = node
            continue
        for t in range(s, e):
            r = seg[best_f, t]
            goleft[r] = Xt[best_f, r] <= best_thr
        feat[node] = best_f
        thr[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        if depth + 1 >= max_depth or (n_left < 2 * min_node and m - n_left < 2 * min_node):
            # both children are leaves: no need to partition the sorted segments;
            # sums run in the same row order a partitioned seg[0] would give
            sgl = 0.0
            shl = 0.0
            sgr = 0.0
            shr = 0.0
            for t in range(s, e):
                r = seg[0, t]
                if goleft[r]:
                    sgl += g[r]
                    shl += h[r]
                    leaf_of[r] = lc
                else:
                    sgr += g[r]
                    shr += h[r]
                    leaf_of[r] = rc
            for c in (lc, rc):
                feat[c] = -1
                thr[c] = 0.0
                left[c] = -1
                right[c] = -1
            value[lc] = sgl / shl if shl > 1e-150 else 0.0
            value[rc] = sgr / shr if shr > 1e-150 else 0.0
            continue
        _partition(seg, s, e, goleft, buf)
        top += 1
        st_s[top] = s + n_left
        st_e[top] = e
        st_node[top] = rc
        st_depth[top] = depth + 1
        top += 1
        st_s[top] = s
        st_e[top] = s + n_left
        st_node[top] = lc
        st_depth[top] = depth + 1
    return n_nodes


@njit(cache=True, inline="always")
def _sigmoid(f):
    if f >= 0:
        return 1.0 / (1.0 + np.exp(-f))
    z = np.exp(f)
    return z / (1.0 + z)


@njit(cache=True)
def _deviance(y, F):
    d = 0.0
    for i in range(y.size):
        f = F[i]
        # -2 log-likelihood, written to stay finite for large |f|
        if f > 0:
            d += 2.0 * (np.log1p(np.exp(-f)) + (1 - y[i]) * f)
        else:
            d += 2.0 * (np.log1p(np.exp(f)) - y[i] * f)
    return d


@njit(cache=True)
def boost_fit(X, y, n_tree, shrinkage, max_depth, min_node, Xeval, store, track_deviance):
    """Stage-wise boosting on binomial deviance.

    Returns ``(F0, F_eval, feat, thr, left, right, value, offsets, deviance)``.
    Tree arrays are empty unless ``store``; ``deviance[m]`` is the training
    deviance after ``m`` stages when ``track_deviance``.
    """
    n, p = X.shape
    order = presort(X)
    Xt = np.ascontiguousarray(X.T)
    inv = reciprocals(n)
    seg = np.empty((p, n), dtype=np.int32)
    buf = np.empty(n, dtype=np.int32)
    goleft = np.zeros(n, dtype=np.int64)
    leaf_of = np.empty(n, dtype=np.int64)
    stack = np.empty((4, 2 * n + 1), dtype=np.int64)
    g = np.empty(n)
    h = np.empty(n)
    pbar = 0.0
    for i in range(n):
        pbar += y[i]
    pbar /= n
    F0 = np.log(pbar / (1.0 - pbar))
    F = np.full(n, F0)
    Fe = np.full(Xeval.shape[0], F0)
    t_feat = np.empty(2 * n + 1, dtype=np.int32)
    t_thr = np.empty(2 * n + 1, dtype=np.float64)
    t_left = np.empty(2 * n + 1, dtype=np.int32)
    t_right = np.empty(2 * n + 1, dtype=np.int32)
    t_value = np.empty(2 * n + 1, dtype=np.float64)
    cap = max(64, n_tree * 8) if store else 1
    feat = np.empty(cap, dtype=np.int32)
    thr = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int32)
    right = np.empty(cap, dtype=np.int32)
    value = np.empty(cap, dtype=np.float64)
    offsets = np.zeros(n_tree + 1 if store else 1, dtype=np.int64)
    dev = np.empty(n_tree + 1 if track_deviance else 0)
    if track_deviance:
        dev[0] = _deviance(y, F)
    used = 0
    for m in range(n_tree):
        for i in range(n):
            pr = _sigmoid(F[i])
            g[i] = y[i] - pr
            h[i] = pr * (1.0 - pr)
        k = _grow_ls_tree(Xt, order, seg, g, h, max_depth, min_node, inv, goleft, buf, stack,
                          t_feat, t_thr, t_left, t_right, t_value, leaf_of)
        for i in range(n):
            F[i] += shrinkage * t_value[leaf_of[i]]
        for i in range(Xeval.shape[0]):
            Fe[i] += shrinkage * t_value[_route(t_feat, t_thr, t_left, t_right, 0, Xeval[i])]
        if store:
            if used + k > cap:
                new_cap = max(2 * cap, used + k)
                feat = _grow_i32(feat, new_cap)
                left = _grow_i32(left, new_cap)
                right = _grow_i32(right, new_cap)
                thr = _grow_f64(thr, new_cap)
                value = _grow_f64(value, new_cap)
                cap = new_cap
            offsets[m] = used
            feat[used:used + k] = t_feat[:k]
            thr[used:used + k] = t_thr[:k]
            left[used:used + k] = t_left[:k]
            right[used:used + k] = t_right[:k]
            value[used:used + k] = t_value[:k]
            used += k
        if track_deviance:
            dev[m + 1] = _deviance(y, F)
    if store:
        offsets[n_tree] = used
    return F0, Fe, feat[:used].copy(), thr[:used].copy(), left[:used].copy(), right[:used].copy(), \
        value[:used].copy(), offsets, dev


@njit(cache=True)
def boost_predict(F0, shrinkage, feat, thr, left, right, value, offsets, X):
    n_tree = offsets.size - 1
    out = np.full(X.shape[0], F0)
    for i in range(X.shape[0]):
        acc = F0
        for t in range(n_tree):
            acc += shrinkage * value[_route(feat, thr, left, right, offsets[t], X[i])]
        out[i] = acc
    return out
