"""Numba-compiled per-pixel kernels.

Each kernel mirrors the function of the same name in ``_numpy``; both are
expected to agree bitwise on masks and labels, and to 1e-12 on floats.
fastmath stays off so the float paths follow IEEE order exactly.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def min_filter(img, radius):
    h, w = img.shape
    tmp = np.empty_like(img)
    out = np.empty_like(img)
    for y in range(h):
        for x in range(w):
            x0 = max(x - radius, 0)
            x1 = min(x + radius, w - 1)
            m = img[y, x0]
            for xx in range(x0 + 1, x1 + 1):
                if img[y, xx] < m:
                    m = img[y, xx]
            tmp[y, x] = m
    for y in range(h):
        y0 = max(y - radius, 0)
        y1 = min(y + radius, h - 1)
        for x in range(w):
            m = tmp[y0, x]
            for yy in range(y0 + 1, y1 + 1):
                if tmp[yy, x] < m:
                    m = tmp[yy, x]
            out[y, x] = m
    return out


@njit(cache=True)
def _padded(mask, ry, rx):
    h, w = mask.shape
    out = np.zeros((h + 2 * ry, w + 2 * rx), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            out[y + ry, x + rx] = mask[y, x]
    return out


@njit(cache=True)
def erode(mask, se):
    # one sweep per structuring-element offset; outside pixels read as 0
    h, w = mask.shape
    sh, sw = se.shape
    padded = _padded(mask, sh // 2, sw // 2)
    acc = np.ones((h, w), dtype=np.uint8)
    for dy in range(sh):
        for dx in range(sw):
            if se[dy, dx]:
                for y in range(h):
                    for x in range(w):
                        acc[y, x] &= padded[y + dy, x + dx]
    return acc.astype(np.bool_)


@njit(cache=True)
def dilate(mask, se):
    h, w = mask.shape
    sh, sw = se.shape
    padded = _padded(mask, sh // 2, sw // 2)
    acc = np.zeros((h, w), dtype=np.uint8)
    for dy in range(sh):
        for dx in range(sw):
            if se[dy, dx]:
                for y in range(h):
                    for x in range(w):
                        acc[y, x] |= padded[y + dy, x + dx]
    return acc.astype(np.bool_)


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def label8(mask):
    """8-connected labels 1..n numbered in raster order of first pixel."""
    h, w = mask.shape
    n = h * w
    parent = np.arange(n, dtype=np.int64)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            i = y * w + x
            # already-visited neighbours: W, NW, N, NE
            for dy, dx in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
                yy = y + dy
                xx = x + dx
                if yy < 0 or xx < 0 or xx >= w:
                    continue
                if mask[yy, xx]:
                    a = _find(parent, i)
                    b = _find(parent, yy * w + xx)
                    if a != b:
                        if a < b:
                            parent[b] = a
                        else:
                            parent[a] = b
    labels = np.zeros((h, w), dtype=np.int32)
    remap = np.zeros(n, dtype=np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            r = _find(parent, y * w + x)
            if remap[r] == 0:
                count += 1
                remap[r] = count
            labels[y, x] = remap[r]
    return labels, count


@njit(cache=True)
def mog_update(w, mu, var, x, alpha, lam, t_bg, var0, var_floor):
    """Classify ``x`` against the mixtures, then update them in place.

    ``w``, ``mu``, ``var`` are (H, W, K), kept sorted by w/sigma descending.
    Returns the foreground mask computed from the pre-update state.
    """
    h, wd, k = w.shape
    fg = np.zeros((h, wd), dtype=np.bool_)
    fit = np.empty(k)
    for y in range(h):
        for xx in range(wd):
            v = x[y, xx]
            # background set: first b components whose weights exceed t_bg
            acc = 0.0
            b = k
            for j in range(k):
                acc += w[y, xx, j]
                if acc > t_bg:
                    b = j + 1
                    break
            match = -1
            for j in range(k):
                if w[y, xx, j] > 0.0 and abs(v - mu[y, xx, j]) <= lam * np.sqrt(var[y, xx, j]):
                    match = j
                    break
            fg[y, xx] = match < 0 or match >= b

            if match >= 0:
                for j in range(k):
                    w[y, xx, j] = (1.0 - alpha) * w[y, xx, j]
                w[y, xx, match] = w[y, xx, match] + alpha
                rho = alpha / w[y, xx, match]
                m = (1.0 - rho) * mu[y, xx, match] + rho * v
                d = v - m
                s2 = (1.0 - rho) * var[y, xx, match] + rho * (d * d)
                mu[y, xx, match] = m
                var[y, xx, match] = s2 if s2 > var_floor else var_floor
            else:
                w[y, xx, k - 1] = alpha
                mu[y, xx, k - 1] = v
                var[y, xx, k - 1] = var0

            total = 0.0
            for j in range(k):
                total += w[y, xx, j]
            for j in range(k):
                w[y, xx, j] = w[y, xx, j] / total

            for j in range(k):
                fit[j] = w[y, xx, j] / np.sqrt(var[y, xx, j])
            # stable insertion sort, descending fitness
            for j in range(1, k):
                fj = fit[j]
                wj = w[y, xx, j]
                mj = mu[y, xx, j]
                vj = var[y, xx, j]
                i = j - 1
                while i >= 0 and fit[i] < fj:
                    fit[i + 1] = fit[i]
                    w[y, xx, i + 1] = w[y, xx, i]
                    mu[y, xx, i + 1] = mu[y, xx, i]
                    var[y, xx, i + 1] = var[y, xx, i]
                    i -= 1
                fit[i + 1] = fj
                w[y, xx, i + 1] = wj
                mu[y, xx, i + 1] = mj
                var[y, xx, i + 1] = vj
    return fg
