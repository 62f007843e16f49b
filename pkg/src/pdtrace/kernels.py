"""Hot numeric kernels with numba and numpy implementations.

Each public function dispatches on :func:`pdtrace._backend.backend`. The loop
kernels (LSTM unrolling, line rasterisation) are written once; the numpy path
runs the undecorated Python body with batched numpy ops per timestep. The
convolution and pooling kernels have separate vectorised numpy versions
because a Python loop over pixels would be unusable.

Array conventions
-----------------
* sequences: ``(T, B, F)`` C-contiguous, time-major
* images: ``(N, C, H, W)``
* LSTM gate blocks are packed ``[input, forget, candidate, output]``
"""

import numpy as np

from ._backend import backend, njit

# reassociation and approximate transcendentals only; NaN/Inf semantics are kept
# so non-finite values still surface to the trainer's guards
_FASTMATH = {"nsz", "arcp", "contract", "afn", "reassoc"}

# --------------------------------------------------------------------------
# LSTM, standard four-gate cell
# --------------------------------------------------------------------------


def _lstm_standard_forward(x, mask, Wx, Wh, b):
    T, B, _ = x.shape
    H = Wh.shape[0]
    gates = np.zeros((T, B, 4 * H), dtype=x.dtype)
    h = np.zeros((T + 1, B, H), dtype=x.dtype)
    c = np.zeros((T + 1, B, H), dtype=x.dtype)
    for t in range(T):
        z = np.dot(x[t], Wx) + np.dot(h[t], Wh) + b
        ig = 0.5 + 0.5 * np.tanh(0.5 * z[:, :H])
        fg = 0.5 + 0.5 * np.tanh(0.5 * z[:, H:2 * H])
        gg = np.tanh(z[:, 2 * H:3 * H])
        og = 0.5 + 0.5 * np.tanh(0.5 * z[:, 3 * H:])
        c_new = fg * c[t] + ig * gg
        h_new = og * np.tanh(c_new)
        m = mask[t].reshape(B, 1)
        c[t + 1] = m * c_new + (1.0 - m) * c[t]
        h[t + 1] = m * h_new + (1.0 - m) * h[t]
        # masked steps leave the gate cache at zero, as the numba path does
        gates[t, :, :H] = m * ig
        gates[t, :, H:2 * H] = m * fg
        gates[t, :, 2 * H:3 * H] = m * gg
        gates[t, :, 3 * H:] = m * og
    return h, c, gates


def _lstm_standard_backward(dh_last, x, mask, Wx, Wh, h, c, gates):
    T, B, F = x.shape
    H = Wh.shape[0]
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * H, dtype=x.dtype)
    dx = np.zeros_like(x)
    dh = dh_last.copy()
    dc = np.zeros((B, H), dtype=x.dtype)
    dz = np.zeros((B, 4 * H), dtype=x.dtype)
    WxT = np.ascontiguousarray(Wx.T)
    WhT = np.ascontiguousarray(Wh.T)
    for t in range(T - 1, -1, -1):
        m = mask[t].reshape(B, 1)
        ig = gates[t, :, :H]
        fg = gates[t, :, H:2 * H]
        gg = gates[t, :, 2 * H:3 * H]
        og = gates[t, :, 3 * H:]
        # c[t + 1] equals the freshly computed cell state wherever m == 1
        tc = np.tanh(c[t + 1])
        dh_cell = m * dh
        dc_cell = m * dc + dh_cell * og * (1.0 - tc * tc)
        dz[:, :H] = dc_cell * gg * ig * (1.0 - ig)
        dz[:, H:2 * H] = dc_cell * c[t] * fg * (1.0 - fg)
        dz[:, 2 * H:3 * H] = dc_cell * ig * (1.0 - gg * gg)
        dz[:, 3 * H:] = dh_cell * tc * og * (1.0 - og)
        xt = np.ascontiguousarray(x[t].T)
        ht = np.ascontiguousarray(h[t].T)
        dWx += np.dot(xt, dz)
        dWh += np.dot(ht, dz)
        db += dz.sum(axis=0)
        dx[t] = np.dot(dz, WxT)
        dh = np.dot(dz, WhT) + (1.0 - m) * dh
        dc = dc_cell * fg + (1.0 - m) * dc
    return dx, dWx, dWh, db


@njit(fastmath=_FASTMATH)
def _lstm_standard_forward_nb(x, mask, Wx, Wh, b):
    T, B, F = x.shape
    H = Wh.shape[0]
    G = 4 * H
    gates = np.zeros((T, B, G), dtype=x.dtype)
    h = np.zeros((T + 1, B, H), dtype=x.dtype)
    c = np.zeros((T + 1, B, H), dtype=x.dtype)
    z = np.empty(G, dtype=np.float64)
    for t in range(T):
        for n in range(B):
            if mask[t, n] == 0:
                for j in range(H):
                    h[t + 1, n, j] = h[t, n, j]
                    c[t + 1, n, j] = c[t, n, j]
                continue
            for k in range(G):
                z[k] = b[k]
            for f in range(F):
                xv = x[t, n, f]
                for k in range(G):
                    z[k] += xv * Wx[f, k]
            for j in range(H):
                hv = h[t, n, j]
                for k in range(G):
                    z[k] += hv * Wh[j, k]
            for j in range(H):
                ig = 0.5 + 0.5 * np.tanh(0.5 * z[j])
                fg = 0.5 + 0.5 * np.tanh(0.5 * z[H + j])
                gg = np.tanh(z[2 * H + j])
                og = 0.5 + 0.5 * np.tanh(0.5 * z[3 * H + j])
                cn = fg * c[t, n, j] + ig * gg
                c[t + 1, n, j] = cn
                h[t + 1, n, j] = og * np.tanh(cn)
                gates[t, n, j] = ig
                gates[t, n, H + j] = fg
                gates[t, n, 2 * H + j] = gg
                gates[t, n, 3 * H + j] = og
    return h, c, gates


@njit(fastmath=_FASTMATH)
def _lstm_standard_backward_nb(dh_last, x, mask, Wx, Wh, h, c, gates):
    T, B, F = x.shape
    H = Wh.shape[0]
    G = 4 * H
    dWx = np.zeros(Wx.shape, dtype=np.float64)
    dWh = np.zeros(Wh.shape, dtype=np.float64)
    db = np.zeros(G, dtype=np.float64)
    dx = np.zeros(x.shape, dtype=x.dtype)
    dh = np.empty((B, H), dtype=np.float64)
    dc = np.zeros((B, H), dtype=np.float64)
    for n in range(B):
        for j in range(H):
            dh[n, j] = dh_last[n, j]
    dz = np.empty(G, dtype=np.float64)
    for t in range(T - 1, -1, -1):
        for n in range(B):
            if mask[t, n] == 0:
                continue
            for j in range(H):
                ig = gates[t, n, j]
                fg = gates[t, n, H + j]
                gg = gates[t, n, 2 * H + j]
                og = gates[t, n, 3 * H + j]
                tc = np.tanh(c[t + 1, n, j])
                dcc = dc[n, j] + dh[n, j] * og * (1.0 - tc * tc)
                dz[j] = dcc * gg * ig * (1.0 - ig)
                dz[H + j] = dcc * c[t, n, j] * fg * (1.0 - fg)
                dz[2 * H + j] = dcc * ig * (1.0 - gg * gg)
                dz[3 * H + j] = dh[n, j] * tc * og * (1.0 - og)
                dc[n, j] = dcc * fg
            for k in range(G):
                db[k] += dz[k]
            for f in range(F):
                xv = x[t, n, f]
                acc = 0.0
                for k in range(G):
                    dWx[f, k] += xv * dz[k]
                    acc += dz[k] * Wx[f, k]
                dx[t, n, f] = acc
            for j in range(H):
                hv = h[t, n, j]
                acc = 0.0
                for k in range(G):
                    dWh[j, k] += hv * dz[k]
                    acc += dz[k] * Wh[j, k]
                dh[n, j] = acc
    return dx, dWx.astype(Wx.dtype), dWh.astype(Wh.dtype), db.astype(Wx.dtype)


# --------------------------------------------------------------------------
# LSTM, literal gate equations (gates driven by the input state only)
# --------------------------------------------------------------------------


def _lstm_literal_forward(x, mask, Wix, Wih, Wgi, Wfi, Woi):
    T, B, _ = x.shape
    H = Wih.shape[0]
    acts = np.zeros((T, B, 4 * H), dtype=x.dtype)
    h = np.zeros((T + 1, B, H), dtype=x.dtype)
    mem = np.zeros((T + 1, B, H), dtype=x.dtype)
    for t in range(T):
        it = 0.5 + 0.5 * np.tanh(0.5 * (np.dot(x[t], Wix) + np.dot(h[t], Wih)))
        gt = 0.5 + 0.5 * np.tanh(0.5 * np.dot(it, Wgi))
        ft = 0.5 + 0.5 * np.tanh(0.5 * np.dot(it, Wfi))
        ot = 0.5 + 0.5 * np.tanh(0.5 * np.dot(it, Woi))
        m_new = gt * it + ft * mem[t]
        h_new = ot * m_new
        m = mask[t].reshape(B, 1)
        mem[t + 1] = m * m_new + (1.0 - m) * mem[t]
        h[t + 1] = m * h_new + (1.0 - m) * h[t]
        acts[t, :, :H] = it
        acts[t, :, H:2 * H] = gt
        acts[t, :, 2 * H:3 * H] = ft
        acts[t, :, 3 * H:] = ot
    return h, mem, acts


def _lstm_literal_backward(dh_last, x, mask, Wix, Wih, Wgi, Wfi, Woi, h, mem, acts):
    T, B, F = x.shape
    H = Wih.shape[0]
    dWix = np.zeros_like(Wix)
    dWih = np.zeros_like(Wih)
    dWgi = np.zeros_like(Wgi)
    dWfi = np.zeros_like(Wfi)
    dWoi = np.zeros_like(Woi)
    dx = np.zeros_like(x)
    dh = dh_last.copy()
    dm = np.zeros((B, H), dtype=x.dtype)
    WixT = np.ascontiguousarray(Wix.T)
    WihT = np.ascontiguousarray(Wih.T)
    WgiT = np.ascontiguousarray(Wgi.T)
    WfiT = np.ascontiguousarray(Wfi.T)
    WoiT = np.ascontiguousarray(Woi.T)
    for t in range(T - 1, -1, -1):
        m = mask[t].reshape(B, 1)
        it = np.ascontiguousarray(acts[t, :, :H])
        gt = acts[t, :, H:2 * H]
        ft = acts[t, :, 2 * H:3 * H]
        ot = acts[t, :, 3 * H:]
        dh_cell = m * dh
        dm_cell = m * dm + dh_cell * ot
        dzo = np.ascontiguousarray(dh_cell * mem[t + 1] * ot * (1.0 - ot))
        dzg = np.ascontiguousarray(dm_cell * it * gt * (1.0 - gt))
        dzf = np.ascontiguousarray(dm_cell * mem[t] * ft * (1.0 - ft))
        itT = np.ascontiguousarray(it.T)
        dWgi += np.dot(itT, dzg)
        dWfi += np.dot(itT, dzf)
        dWoi += np.dot(itT, dzo)
        di = dm_cell * gt + np.dot(dzg, WgiT) + np.dot(dzf, WfiT) + np.dot(dzo, WoiT)
        dzi = di * it * (1.0 - it)
        dWix += np.dot(np.ascontiguousarray(x[t].T), dzi)
        dWih += np.dot(np.ascontiguousarray(h[t].T), dzi)
        dx[t] = np.dot(dzi, WixT)
        dh = np.dot(dzi, WihT) + (1.0 - m) * dh
        dm = dm_cell * ft + (1.0 - m) * dm
    return dx, dWix, dWih, dWgi, dWfi, dWoi


# --------------------------------------------------------------------------
# rasterisation
# --------------------------------------------------------------------------


def _draw_strokes(canvas, rows, cols, down, value):
    """Bresenham segments between consecutive pen-down points; isolated
    pen-down points are lit on their own."""
    n = rows.shape[0]
    for k in range(n):
        if not down[k]:
            continue
        r0 = rows[k]
        c0 = cols[k]
        canvas[r0, c0] = value
        if k + 1 < n and down[k + 1]:
            r1 = rows[k + 1]
            c1 = cols[k + 1]
            dr = abs(r1 - r0)
            dc = -abs(c1 - c0)
            sr = 1 if r0 < r1 else -1
            sc = 1 if c0 < c1 else -1
            err = dr + dc
            r = r0
            cc = c0
            while True:
                canvas[r, cc] = value
                if r == r1 and cc == c1:
                    break
                e2 = 2 * err
                if e2 >= dc:
                    err += dc
                    r += sr
                if e2 <= dr:
                    err += dr
                    cc += sc
    return canvas


# --------------------------------------------------------------------------
# convolution helpers (im2col / col2im) and 2x2 max pooling
# --------------------------------------------------------------------------


@njit
def _im2col_nb(x, kh, kw, pad):
    N, C, H, W = x.shape
    oh = H + 2 * pad - kh + 1
    ow = W + 2 * pad - kw + 1
    cols = np.zeros((N * oh * ow, C * kh * kw), dtype=x.dtype)
    for n in range(N):
        for i in range(oh):
            for j in range(ow):
                row = (n * oh + i) * ow + j
                col = 0
                for ch in range(C):
                    for u in range(kh):
                        r = i + u - pad
                        for v in range(kw):
                            s = j + v - pad
                            if 0 <= r < H and 0 <= s < W:
                                cols[row, col] = x[n, ch, r, s]
                            col += 1
    return cols


@njit
def _col2im_nb(cols, N, C, H, W, kh, kw, pad):
    oh = H + 2 * pad - kh + 1
    ow = W + 2 * pad - kw + 1
    dx = np.zeros((N, C, H, W), dtype=cols.dtype)
    for n in range(N):
        for i in range(oh):
            for j in range(ow):
                row = (n * oh + i) * ow + j
                col = 0
                for ch in range(C):
                    for u in range(kh):
                        r = i + u - pad
                        for v in range(kw):
                            s = j + v - pad
                            if 0 <= r < H and 0 <= s < W:
                                dx[n, ch, r, s] += cols[row, col]
                            col += 1
    return dx


def _im2col_np(x, kh, kw, pad):
    N, C, H, W = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    # (N, C, oh, ow, kh, kw) -> (N, oh, ow, C, kh, kw)
    oh, ow = win.shape[2], win.shape[3]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(N * oh * ow, C * kh * kw)


def _col2im_np(cols, N, C, H, W, kh, kw, pad):
    oh = H + 2 * pad - kh + 1
    ow = W + 2 * pad - kw + 1
    blocks = cols.reshape(N, oh, ow, C, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dxp = np.zeros((N, C, H + 2 * pad, W + 2 * pad), dtype=cols.dtype)
    for u in range(kh):
        for v in range(kw):
            dxp[:, :, u:u + oh, v:v + ow] += blocks[:, :, u, v]
    return dxp[:, :, pad:pad + H, pad:pad + W]


@njit
def _maxpool_fwd_nb(x):
    N, C, H, W = x.shape
    oh = H // 2
    ow = W // 2
    out = np.empty((N, C, oh, ow), dtype=x.dtype)
    arg = np.empty((N, C, oh, ow), dtype=np.int8)
    for n in range(N):
        for ch in range(C):
            for i in range(oh):
                for j in range(ow):
                    best = x[n, ch, 2 * i, 2 * j]
                    k = 0
                    for q in range(1, 4):
                        v = x[n, ch, 2 * i + q // 2, 2 * j + q % 2]
                        if v > best:
                            best = v
                            k = q
                    out[n, ch, i, j] = best
                    arg[n, ch, i, j] = k
    return out, arg


@njit
def _maxpool_bwd_nb(dout, arg, H, W):
    N, C, oh, ow = dout.shape
    dx = np.zeros((N, C, H, W), dtype=dout.dtype)
    for n in range(N):
        for ch in range(C):
            for i in range(oh):
                for j in range(ow):
                    q = arg[n, ch, i, j]
                    dx[n, ch, 2 * i + q // 2, 2 * j + q % 2] = dout[n, ch, i, j]
    return dx


def _maxpool_fwd_np(x):
    N, C, H, W = x.shape
    oh, ow = H // 2, W // 2
    blocks = x[:, :, :2 * oh, :2 * ow].reshape(N, C, oh, 2, ow, 2)
    blocks = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(N, C, oh, ow, 4)
    arg = blocks.argmax(axis=-1).astype(np.int8)
    out = np.take_along_axis(blocks, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return out, arg


def _maxpool_bwd_np(dout, arg, H, W):
    N, C, oh, ow = dout.shape
    onehot = arg[..., None] == np.arange(4, dtype=np.int8)
    blocks = np.where(onehot, dout[..., None], 0.0).astype(dout.dtype)
    blocks = blocks.reshape(N, C, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = np.zeros((N, C, H, W), dtype=dout.dtype)
    dx[:, :, :2 * oh, :2 * ow] = blocks.reshape(N, C, 2 * oh, 2 * ow)
    return dx


_lstm_literal_forward_nb = njit(_lstm_literal_forward)
_lstm_literal_backward_nb = njit(_lstm_literal_backward)
_draw_strokes_nb = njit(_draw_strokes)


def _pick(nb, py):
    return nb if backend() == "numba" else py


# --------------------------------------------------------------------------
# public dispatchers
# --------------------------------------------------------------------------


def lstm_standard_forward(x, mask, Wx, Wh, b):
    """Unroll the four-gate cell. Returns ``(h, c, gates)`` with ``h`` and
    ``c`` of shape ``(T + 1, B, H)`` (index 0 is the zero initial state)."""
    return _pick(_lstm_standard_forward_nb, _lstm_standard_forward)(x, mask, Wx, Wh, b)


def lstm_standard_backward(dh_last, x, mask, Wx, Wh, h, c, gates):
    """BPTT from a gradient on the final hidden state only.
    Returns ``(dx, dWx, dWh, db)``."""
    return _pick(_lstm_standard_backward_nb, _lstm_standard_backward)(
        dh_last, x, mask, Wx, Wh, h, c, gates
    )


def lstm_literal_forward(x, mask, Wix, Wih, Wgi, Wfi, Woi):
    return _pick(_lstm_literal_forward_nb, _lstm_literal_forward)(x, mask, Wix, Wih, Wgi, Wfi, Woi)


def lstm_literal_backward(dh_last, x, mask, Wix, Wih, Wgi, Wfi, Woi, h, mem, acts):
    return _pick(_lstm_literal_backward_nb, _lstm_literal_backward)(
        dh_last, x, mask, Wix, Wih, Wgi, Wfi, Woi, h, mem, acts
    )


def draw_strokes(canvas, rows, cols, down, value=255):
    """Rasterise pen-down segments in place on a ``uint8`` canvas."""
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    down = np.ascontiguousarray(down, dtype=np.bool_)
    return _pick(_draw_strokes_nb, _draw_strokes)(canvas, rows, cols, down, np.uint8(value))


def im2col(x, kh, kw, pad):
    return _pick(_im2col_nb, _im2col_np)(np.ascontiguousarray(x), kh, kw, pad)


def col2im(cols, x_shape, kh, kw, pad):
    N, C, H, W = x_shape
    return _pick(_col2im_nb, _col2im_np)(np.ascontiguousarray(cols), N, C, H, W, kh, kw, pad)


def maxpool2x2_forward(x):
    """Returns ``(out, argmax)``; ``argmax`` indexes the 2x2 window row-major."""
    return _pick(_maxpool_fwd_nb, _maxpool_fwd_np)(np.ascontiguousarray(x))


def maxpool2x2_backward(dout, argmax, H, W):
    return _pick(_maxpool_bwd_nb, _maxpool_bwd_np)(np.ascontiguousarray(dout), argmax, H, W)
