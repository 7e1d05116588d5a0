"""Pure-numpy regression forest backend.

Same split rule, node ordering and RNG stream as the numba backend; per-node
work is vectorized (stable argsort + cumulative sums) instead of compiled.
Cumulative sums keep the exact left-to-right accumulation order of the numba
loops so both backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .forest_common import LCG_INC, LCG_MASK, LCG_MUL, MAX_NODES_FACTOR


def _feature_permutation(d: int, state: int):
    perm = np.arange(d)
    for i in range(d - 1):
        state = (LCG_MUL * state + LCG_INC) & LCG_MASK
        j = i + state % (d - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm, state


def _build_tree(X, y, boot, seed, min_leaf, k_feats, feat, thr, left, right, value):
    n_b = boot.shape[0]
    d = X.shape[1]
    idx = boot.copy()
    stack = [(0, 0, n_b)]
    next_node = 1
    state = int(seed)
    while stack:
        nid, lo, hi = stack.pop()
        nn = hi - lo
        node_idx = idx[lo:hi]
        ysub = y[node_idx]
        total = float(np.cumsum(ysub)[-1])
        mean = total / nn
        best_feat = -1
        best_thr = 0.0
        if nn >= 2 * min_leaf and ysub.min() != ysub.max():
            perm, state = _feature_permutation(d, state)
            best_score = -np.inf
            scanned = 0
            for fpos in range(d):
                if scanned >= k_feats and best_feat >= 0:
                    break
                f = int(perm[fpos])
                xv = X[node_idx, f]
                order = np.argsort(xv, kind="mergesort")
                scanned += 1
                xs = xv[order]
                if xs[0] == xs[-1]:
                    continue
                ys = ysub[order]
                run = np.cumsum(ys)[:-1]
                sizes_l = np.arange(1, nn)
                sizes_r = nn - sizes_l
                valid = (xs[:-1] != xs[1:]) & (sizes_l >= min_leaf) & (sizes_r >= min_leaf)
                if not valid.any():
                    continue
                score = run * run / sizes_l + (total - run) * (total - run) / sizes_r
                score[~valid] = -np.inf
                p = int(np.argmax(score))
                if score[p] > best_score:
                    best_score = float(score[p])
                    best_feat = f
                    best_thr = 0.5 * (xs[p] + xs[p + 1])
        if best_feat < 0:
            feat[nid] = -1
            thr[nid] = 0.0
            left[nid] = -1
            right[nid] = -1
            value[nid] = mean
            continue
        go_left = X[node_idx, best_feat] <= best_thr
        left_rows = node_idx[go_left]
        right_rows = node_idx[~go_left]
        nl = left_rows.shape[0]
        idx[lo : lo + nl] = left_rows
        idx[lo + nl : hi] = right_rows
        lid = next_node
        rid = next_node + 1
        next_node += 2
        feat[nid] = best_feat
        thr[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        value[nid] = mean
        stack.append((rid, lo + nl, hi))
        stack.append((lid, lo, lo + nl))
    return next_node


def build_forest(X, y, boot, seeds, min_leaf, k_feats):
    n_trees, n_b = boot.shape
    max_nodes = MAX_NODES_FACTOR * n_b
    feat = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    thr = np.zeros((n_trees, max_nodes), dtype=np.float64)
    left = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    right = np.full((n_trees, max_nodes), -1, dtype=np.int64)
    value = np.zeros((n_trees, max_nodes), dtype=np.float64)
    counts = np.zeros(n_trees, dtype=np.int64)
    for t in range(n_trees):
        counts[t] = _build_tree(
            X, y, boot[t], int(seeds[t]), min_leaf, k_feats, feat[t], thr[t], left[t], right[t], value[t]
        )
    return feat, thr, left, right, value, counts


def predict_forest(feat, thr, left, right, value, counts, Xq):
    n_trees = feat.shape[0]
    B = Xq.shape[0]
    preds = np.empty((n_trees, B), dtype=np.float64)
    for t in range(n_trees):
        node = np.zeros(B, dtype=np.int64)
        while True:
            f = feat[t, node]
            inner = f >= 0
            if not inner.any():
                break
            rows = np.nonzero(inner)[0]
            cur = node[rows]
            go_left = Xq[rows, f[rows]] <= thr[t, cur]
            node[rows] = np.where(go_left, left[t, cur], right[t, cur])
        preds[t] = value[t, node]
    # cumulative sums mirror the numba backend's sequential reductions
    mean = np.cumsum(preds, axis=0)[-1] / n_trees
    dev = preds - mean
    sd = np.sqrt(np.cumsum(dev * dev, axis=0)[-1] / n_trees)
    return mean, sd
