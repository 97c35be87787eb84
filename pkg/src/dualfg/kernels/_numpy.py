"""Pure-numpy versions of the per-pixel kernels (no JIT)."""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage


def min_filter(img, radius):
    if radius <= 0:
        return img.copy()
    win = 2 * radius + 1
    padded = np.pad(img, ((0, 0), (radius, radius)), constant_values=np.inf)
    tmp = sliding_window_view(padded, win, axis=1).min(axis=-1)
    padded = np.pad(tmp, ((radius, radius), (0, 0)), constant_values=np.inf)
    return sliding_window_view(padded, win, axis=0).min(axis=-1)


def _offsets(se):
    sh, sw = se.shape
    cy, cx = sh // 2, sw // 2
    return [(dy - cy, dx - cx) for dy, dx in zip(*np.nonzero(se))]


def _shifted(padded, dy, dx, ry, rx, h, w):
    return padded[ry + dy:ry + dy + h, rx + dx:rx + dx + w]


def erode(mask, se):
    h, w = mask.shape
    ry, rx = se.shape[0] // 2, se.shape[1] // 2
    padded = np.pad(mask, ((ry, ry), (rx, rx)), constant_values=False)
    out = np.ones((h, w), dtype=bool)
    for dy, dx in _offsets(se):
        out &= _shifted(padded, dy, dx, ry, rx, h, w)
    return out


def dilate(mask, se):
    h, w = mask.shape
    ry, rx = se.shape[0] // 2, se.shape[1] // 2
    padded = np.pad(mask, ((ry, ry), (rx, rx)), constant_values=False)
    out = np.zeros((h, w), dtype=bool)
    for dy, dx in _offsets(se):
        out |= _shifted(padded, dy, dx, ry, rx, h, w)
    return out


_EIGHT = np.ones((3, 3), dtype=bool)


def label8(mask):
    labels, count = ndimage.label(mask, structure=_EIGHT)
    if count == 0:
        return labels.astype(np.int32), 0
    # force raster order of first pixel regardless of scipy's numbering
    flat = labels.ravel()
    _, first = np.unique(flat, return_index=True)
    present = flat[np.sort(first)]
    present = present[present > 0]
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[present] = np.arange(1, present.size + 1, dtype=np.int32)
    return remap[labels], int(present.size)


def mog_update(w, mu, var, x, alpha, lam, t_bg, var0, var_floor):
    h, wd, k = w.shape
    n = h * wd
    W = w.reshape(n, k)
    M = mu.reshape(n, k)
    V = var.reshape(n, k)
    xv = x.reshape(n)
    rows = np.arange(n)

    # cumulative weights, summed left to right as the scalar path does
    acc = np.zeros(n)
    b = np.full(n, k, dtype=np.int64)
    for j in range(k):
        acc = acc + W[:, j]
        hit = (acc > t_bg) & (b == k)
        b[hit] = j + 1

    ok = (W > 0.0) & (np.abs(xv[:, None] - M) <= lam * np.sqrt(V))
    has = ok.any(axis=1)
    match = np.where(has, ok.argmax(axis=1), -1)
    fg = ~has | (match >= b)

    mi = rows[has]
    mk = match[has]
    W[mi] = (1.0 - alpha) * W[mi]
    W[mi, mk] = W[mi, mk] + alpha
    rho = alpha / W[mi, mk]
    m = (1.0 - rho) * M[mi, mk] + rho * xv[mi]
    d = xv[mi] - m
    s2 = (1.0 - rho) * V[mi, mk] + rho * (d * d)
    M[mi, mk] = m
    V[mi, mk] = np.where(s2 > var_floor, s2, var_floor)

    ui = rows[~has]
    W[ui, k - 1] = alpha
    M[ui, k - 1] = xv[ui]
    V[ui, k - 1] = var0

    total = W[:, 0].copy()
    for j in range(1, k):
        total = total + W[:, j]
    W /= total[:, None]

    fit = W / np.sqrt(V)
    order = np.argsort(-fit, axis=1, kind="stable")
    W[:] = np.take_along_axis(W, order, axis=1)
    M[:] = np.take_along_axis(M, order, axis=1)
    V[:] = np.take_along_axis(V, order, axis=1)
    return fg.reshape(h, wd)
