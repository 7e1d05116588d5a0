"""Numba regression forest backend (default when numba imports).

Explicit-stack CART growth with variance-reduction splits at integer
midpoints; one @njit kernel per public entry point. Node creation order, the
LCG feature shuffle and every floating-point accumulation match the numpy
backend exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .forest_common import LCG_INC, LCG_MASK, LCG_MUL, MAX_NODES_FACTOR


@njit(cache=True)
def _build_tree(X, y, boot, seed, min_leaf, k_feats, feat, thr, left, right, value):
    n_b = boot.shape[0]
    d = X.shape[1]
    idx = boot.copy()
    stack = np.empty((MAX_NODES_FACTOR * n_b + 1, 3), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_b
    sp = 1
    next_node = 1
    state = seed
    xv = np.empty(n_b, dtype=np.float64)
    tmp_left = np.empty(n_b, dtype=np.int64)
    tmp_right = np.empty(n_b, dtype=np.int64)
    perm = np.empty(d, dtype=np.int64)
    while sp > 0:
        sp -= 1
        nid = stack[sp, 0]
        lo = stack[sp, 1]
        hi = stack[sp, 2]
        nn = hi - lo
        total = 0.0
        for i in range(lo, hi):
            total += y[idx[i]]
        mean = total / nn
        ymin = y[idx[lo]]
        ymax = ymin
        for i in range(lo + 1, hi):
            v = y[idx[i]]
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        best_feat = -1
        best_thr = 0.0
        if nn >= 2 * min_leaf and ymin != ymax:
            for i in range(d):
                perm[i] = i
            for i in range(d - 1):
                state = (LCG_MUL * state + LCG_INC) & LCG_MASK
                j = i + state % (d - i)
                t = perm[i]
                perm[i] = perm[j]
                perm[j] = t
            best_score = -np.inf
            scanned = 0
            for fpos in range(d):
                if scanned >= k_feats and best_feat >= 0:
                    break
                f = perm[fpos]
                for i in range(nn):
                    xv[i] = X[idx[lo + i], f]
                order = np.argsort(xv[:nn], kind="mergesort")
                scanned += 1
                if xv[order[0]] == xv[order[nn - 1]]:
                    continue
                run = 0.0
                for p in range(1, nn):
                    run += y[idx[lo + order[p - 1]]]
                    xa = xv[order[p - 1]]
                    xb = xv[order[p]]
                    if xa == xb:
                        continue
                    if p < min_leaf or nn - p < min_leaf:
                        continue
                    score = run * run / p + (total - run) * (total - run) / (nn - p)
                    if score > best_score:
                        best_score = score
                        best_feat = f
                        best_thr = 0.5 * (xa + xb)
        if best_feat < 0:
            feat[nid] = -1
            thr[nid] = 0.0
            left[nid] = -1
            right[nid] = -1
            value[nid] = mean
            continue
        nl = 0
        nr = 0
        for i in range(lo, hi):
            row = idx[i]
            if X[row, best_feat] <= best_thr:
                tmp_left[nl] = row
                nl += 1
            else:
                tmp_right[nr] = row
                nr += 1
        for i in range(nl):
            idx[lo + i] = tmp_left[i]
        for i in range(nr):
            idx[lo + nl + i] = tmp_right[i]
        lid = next_node
        rid = next_node + 1
        next_node += 2
        feat[nid] = best_feat
        thr[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        value[nid] = mean
        stack[sp, 0] = rid
        stack[sp, 1] = lo + nl
        stack[sp, 2] = hi
        sp += 1
        stack[sp, 0] = lid
        stack[sp, 1] = lo
        stack[sp, 2] = lo + nl
        sp += 1
    return next_node


@njit(cache=True, parallel=True)
def _build_forest(X, y, boot, seeds, min_leaf, k_feats, feat, thr, left, right, value, counts):
    n_trees = boot.shape[0]
    for t in prange(n_trees):
        counts[t] = _build_tree(
            X, y, boot[t], seeds[t], min_leaf, k_feats, feat[t], thr[t], left[t], right[t], value[t]
        )


def build_forest(X, y, boot, seeds, min_leaf, k_feats):
    n_trees, n_b = boot.shape
    max_nodes = MAX_NODES_FACTOR * n_b
    feat = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    thr = np.zeros((n_trees, max_nodes), dtype=np.float64)
    left = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    right = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    value = np.zeros((n_trees, max_nodes), dtype=np.float64)
    counts = np.zeros(n_trees, dtype=np.int64)
    _build_forest(
        X,
        y,
        np.ascontiguousarray(boot),
        np.ascontiguousarray(seeds),
        min_leaf,
        k_feats,
        feat,
        thr,
        left,
        right,
        value,
        counts,
    )
    return feat, thr, left, right, value, counts


@njit(cache=True)
def _predict_forest(feat, thr, left, right, value, Xq, preds):
    n_trees = feat.shape[0]
    B = Xq.shape[0]
    for t in range(n_trees):
        for b in range(B):
            node = 0
            while feat[t, node] >= 0:
                if Xq[b, feat[t, node]] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            preds[t, b] = value[t, node]


@njit(cache=True)
def _reduce_mean_sd(preds):
    n_trees, B = preds.shape
    mean = np.empty(B, dtype=np.float64)
    sd = np.empty(B, dtype=np.float64)
    for b in range(B):
        s = 0.0
        for t in range(n_trees):
            s += preds[t, b]
        m = s / n_trees
        ss = 0.0
        for t in range(n_trees):
            dd = preds[t, b] - m
            ss += dd * dd
        mean[b] = m
        sd[b] = np.sqrt(ss / n_trees)
    return mean, sd


def predict_forest(feat, thr, left, right, value, counts, Xq):
    preds = np.empty((feat.shape[0], Xq.shape[0]), dtype=np.float64)
    _predict_forest(feat, thr, left, right, value, np.ascontiguousarray(Xq), preds)
    return _reduce_mean_sd(preds)
