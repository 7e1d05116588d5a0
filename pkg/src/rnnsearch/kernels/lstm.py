"""Stacked-LSTM forward and truncated-BPTT kernels, vectorized numpy.

Conventions shared by every caller:

* sequences are time-major ``(T, n, features)``,
* gate preactivations are one fused matrix ``(n, 4H)`` laid out ``[i f g o]``,
* ``sigmoid(x) = 0.5 + 0.5 * tanh(0.5 * x)`` everywhere, so the whole gate
  block needs a single SIMD tanh sweep and never overflows,
* parameters pack into one flat vector: per layer ``Wx (F,4H)``, ``Wh (H,4H)``,
  ``b (4H,)``, then the dense head ``Wy (H_last, O)``, ``by (O,)``.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DimensionMismatch


def param_shapes(layer_sizes, n_features: int, n_outputs: int) -> list:
    shapes = []
    fan = n_features
    for h in layer_sizes:
        shapes += [(fan, 4 * h), (h, 4 * h), (4 * h,)]
        fan = h
    shapes += [(fan, n_outputs), (n_outputs,)]
    return shapes


def param_count(layer_sizes, n_features: int, n_outputs: int) -> int:
    return sum(int(np.prod(s)) for s in param_shapes(layer_sizes, n_features, n_outputs))


def param_views(flat: np.ndarray, layer_sizes, n_features: int, n_outputs: int):
    """Split a flat parameter vector into per-layer views.

    Returns ``(layers, wy, by)`` where layers is a list of ``(wx, wh, b)``.
    """
    shapes = param_shapes(layer_sizes, n_features, n_outputs)
    if flat.shape != (sum(int(np.prod(s)) for s in shapes),):
        raise DimensionMismatch(
            f"flat parameter vector has {flat.shape}, expected ({sum(int(np.prod(s)) for s in shapes)},)"
        )
    views = []
    pos = 0
    for s in shapes:
        size = int(np.prod(s))
        views.append(flat[pos : pos + size].reshape(s))
        pos += size
    layers = [tuple(views[3 * i : 3 * i + 3]) for i in range(len(layer_sizes))]
    return layers, views[-2], views[-1]


def _gate_scale(h: int, dtype) -> np.ndarray:
    s = np.full(4 * h, 0.5, dtype=dtype)
    s[2 * h : 3 * h] = 1.0
    return s


def apply_activation(pre: np.ndarray, act: str) -> np.ndarray:
    if act == "tanh":
        return np.tanh(pre)
    if act == "sigmoid":
        return 0.5 + 0.5 * np.tanh(0.5 * pre)
    if act == "linear":
        return pre
    raise ValueError(f"unknown activation {act!r}")


def activation_grad(pred: np.ndarray, act: str) -> np.ndarray:
    """d act / d pre expressed through the activation output."""
    if act == "tanh":
        return 1.0 - pred * pred
    if act == "sigmoid":
        return pred * (1.0 - pred)
    if act == "linear":
        return np.ones_like(pred)
    raise ValueError(f"unknown activation {act!r}")


def lstm_layer_forward(wx, wh, b, x_seq):
    """Run one LSTM layer over a time-major batch; returns hidden states (T,n,H)."""
    T, n, _ = x_seq.shape
    H = wh.shape[0]
    dt = x_seq.dtype
    xp = x_seq.reshape(T * n, -1) @ wx
    xp += b
    xp = xp.reshape(T, n, 4 * H)
    scale = _gate_scale(H, dt)
    h = np.zeros((n, H), dtype=dt)
    c = np.zeros((n, H), dtype=dt)
    out = np.empty((T, n, H), dtype=dt)
    for t in range(T):
        z = xp[t] + h @ wh
        z *= scale
        np.tanh(z, out=z)
        i = 0.5 + 0.5 * z[:, :H]
        f = 0.5 + 0.5 * z[:, H : 2 * H]
        g = z[:, 2 * H : 3 * H]
        o = 0.5 + 0.5 * z[:, 3 * H :]
        c *= f
        c += i * g
        tc = np.tanh(c)
        h = o * tc
        out[t] = h
    return out


def lstm_layer_forward_train(wx, wh, b, x_seq):
    """Forward pass that keeps the per-step activations BPTT needs.

    Returns (h_seq, i_seq, f_seq, g_seq, o_seq, c_seq, tc_seq), all (T,n,H);
    c_seq holds the post-update cell state.
    """
    T, n, _ = x_seq.shape
    H = wh.shape[0]
    dt = x_seq.dtype
    xp = x_seq.reshape(T * n, -1) @ wx
    xp += b
    xp = xp.reshape(T, n, 4 * H)
    scale = _gate_scale(H, dt)
    h = np.zeros((n, H), dtype=dt)
    c = np.zeros((n, H), dtype=dt)
    h_seq = np.empty((T, n, H), dtype=dt)
    i_seq = np.empty((T, n, H), dtype=dt)
    f_seq = np.empty((T, n, H), dtype=dt)
    g_seq = np.empty((T, n, H), dtype=dt)
    o_seq = np.empty((T, n, H), dtype=dt)
    c_seq = np.empty((T, n, H), dtype=dt)
    tc_seq = np.empty((T, n, H), dtype=dt)
    for t in range(T):
        z = xp[t] + h @ wh
        z *= scale
        np.tanh(z, out=z)
        i = 0.5 + 0.5 * z[:, :H]
        f = 0.5 + 0.5 * z[:, H : 2 * H]
        g = z[:, 2 * H : 3 * H]
        o = 0.5 + 0.5 * z[:, 3 * H :]
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        h_seq[t] = h
        i_seq[t] = i
        f_seq[t] = f
        g_seq[t] = g
        o_seq[t] = o
        c_seq[t] = c
        tc_seq[t] = tc
    return h_seq, i_seq, f_seq, g_seq, o_seq, c_seq, tc_seq


def lstm_layer_backward(wx, wh, x_seq, h_seq, i_seq, f_seq, g_seq, o_seq, c_seq, tc_seq, dh_out_seq):
    """Backprop one layer through time.

    ``dh_out_seq`` is the loss gradient w.r.t. this layer's hidden output at
    every step. Returns (dwx, dwh, db, dx_seq). The recurrent chain is the
    only sequential part; the parameter gradients collapse into three big
    GEMMs over the stacked steps.
    """
    T, n, F = x_seq.shape
    H = wh.shape[0]
    dt = x_seq.dtype
    dz_seq = np.empty((T, n, 4 * H), dtype=dt)
    dh_next = np.zeros((n, H), dtype=dt)
    dc_next = np.zeros((n, H), dtype=dt)
    for t in range(T - 1, -1, -1):
        i = i_seq[t]
        f = f_seq[t]
        g = g_seq[t]
        o = o_seq[t]
        tc = tc_seq[t]
        dh = dh_out_seq[t] + dh_next
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dz = dz_seq[t]
        dz[:, :H] = (dc * g) * i * (1.0 - i)
        if t > 0:
            dz[:, H : 2 * H] = (dc * c_seq[t - 1]) * f * (1.0 - f)
        else:
            dz[:, H : 2 * H] = 0.0
        dz[:, 2 * H : 3 * H] = (dc * i) * (1.0 - g * g)
        dz[:, 3 * H :] = do * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dz @ wh.T
    dz2 = dz_seq.reshape(T * n, 4 * H)
    dwx = x_seq.reshape(T * n, F).T @ dz2
    h_prev = np.empty_like(h_seq)
    h_prev[0] = 0.0
    h_prev[1:] = h_seq[:-1]
    dwh = h_prev.reshape(T * n, H).T @ dz2
    db = dz2.sum(axis=0)
    dx_seq = (dz2 @ wx.T).reshape(T, n, F)
    return dwx, dwh, db, dx_seq


def predict_batch(flat, layer_sizes, n_features, n_outputs, x_seq, act):
    """Network predictions for a time-major window batch: (n, n_outputs)."""
    layers, wy, by = param_views(flat, layer_sizes, n_features, n_outputs)
    inp = x_seq
    for wx, wh, b in layers:
        inp = lstm_layer_forward(wx, wh, b, inp)
    pre = inp[-1] @ wy + by
    return apply_activation(pre, act)


def prescale_vector(layer_sizes, n_features, n_outputs, dtype=np.float32):
    """Flat per-parameter factors that fold the sigmoid halving into the weights.

    With gate columns of Wx, Wh and b pre-multiplied by 0.5 (1.0 for the
    candidate gate), the fused forward can take tanh of the raw preactivation
    and finish each gate with one add. Head parameters stay unscaled.
    """
    parts = []
    fan = n_features
    for h in layer_sizes:
        col = np.full(4 * h, 0.5, dtype=dtype)
        col[2 * h : 3 * h] = 1.0
        parts.append(np.tile(col, fan))
        parts.append(np.tile(col, h))
        parts.append(col.copy())
        fan = h
    parts.append(np.ones(fan * n_outputs, dtype=dtype))
    parts.append(np.ones(n_outputs, dtype=dtype))
    return np.concatenate(parts)


def _forward_last_prescaled(flat_scaled, layer_sizes, n_features, n_outputs, x_seq):
    """Hidden state after the last step, minimal-allocation fused path.

    Expects weights already run through :func:`prescale_vector`. With
    w = tanh(z) the cell update reads
    c <- 0.5 * ((1 + w_f) * c + (1 + w_i) * w_g), h <- 0.5 * (1 + w_o) * tanh(c),
    which is the standard sigmoid-gated cell, just with the halving hoisted.
    Weights are copied once per layer into fresh (aligned) buffers; every
    per-step op reuses a preallocated buffer because memory traffic, not
    flops, bounds this loop.
    """
    T, n, _ = x_seq.shape
    layers, _, _ = param_views(flat_scaled, layer_sizes, n_features, n_outputs)
    inp = x_seq
    n_layers = len(layers)
    dt = x_seq.dtype
    for li, (wx, wh, b) in enumerate(layers):
        H = wh.shape[0]
        wx_c = wx.copy()
        wh_c = wh.copy()
        b_c = b.copy()
        fan_in = wx.shape[0]
        z = np.empty((n, 4 * H), dtype=dt)
        zx = np.empty((n, 4 * H), dtype=dt)
        c = np.zeros((n, H), dtype=dt)
        tc = np.empty((n, H), dtype=dt)
        h = np.zeros((n, H), dtype=dt)
        out = np.empty((T, n, H), dtype=dt) if li < n_layers - 1 else None
        for t in range(T):
            np.matmul(h, wh_c, out=z)
            z += b_c
            if fan_in == 1:
                np.multiply(inp[t], wx_c[0], out=zx)
            else:
                np.matmul(inp[t], wx_c, out=zx)
            z += zx
            np.tanh(z, out=z)
            zi = z[:, :H]
            zf = z[:, H : 2 * H]
            zg = z[:, 2 * H : 3 * H]
            zo = z[:, 3 * H :]
            zf += 1.0
            c *= zf
            zi += 1.0
            zi *= zg
            c += zi
            c *= 0.5
            np.tanh(c, out=tc)
            zo += 1.0
            np.multiply(tc, zo, out=h)
            h *= 0.5
            if out is not None:
                out[t] = h
        inp = out
        last_h = h
    return last_h


def _score_threads() -> int:
    import os

    raw = os.environ.get("RNNSEARCH_SCORE_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return min(4, os.cpu_count() or 1)


def score_mae_samples(params_q, layer_sizes, n_features, n_outputs, x_seq, targets, act):
    """Mean absolute error per parameter draw.

    ``params_q`` is (Q, P); the forward math runs in whatever dtype the inputs
    carry (float32 for scoring), the reduction always in float64. Draws are
    independent, so they run on a small thread pool (numpy releases the GIL
    in BLAS and ufunc inner loops) with BLAS pinned to one thread; for these
    GEMM shapes BLAS threading loses to draw-level parallelism. Each result
    lands at its own index, so the output is identical for any worker count.
    """
    from threadpoolctl import threadpool_limits

    Q = params_q.shape[0]
    scale = prescale_vector(layer_sizes, n_features, n_outputs, dtype=params_q.dtype)
    maes = np.empty(Q, dtype=np.float64)

    def chunk(lo: int, hi: int):
        for q in range(lo, hi):
            row = params_q[q] * scale
            h_last = _forward_last_prescaled(row, layer_sizes, n_features, n_outputs, x_seq)
            _, wy, by = param_views(row, layer_sizes, n_features, n_outputs)
            preds = apply_activation(h_last @ wy + by, act)
            maes[q] = float(np.mean(np.abs(preds - targets), dtype=np.float64))

    workers = min(_score_threads(), Q)
    with threadpool_limits(limits=1, user_api="blas"):
        if workers <= 1:
            chunk(0, Q)
        else:
            from concurrent.futures import ThreadPoolExecutor

            bounds = np.linspace(0, Q, workers + 1).astype(int)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda i: chunk(bounds[i], bounds[i + 1]), range(workers)))
    return maes
