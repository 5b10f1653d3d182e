"""Compiled elementwise kernels for the data-dependent inner loops.

Everything here is plain scalar arithmetic jitted with numba so the solver
can stay vectorized numpy outside while the per-pixel case analysis
(pooling, bisection, segment scans) runs at machine speed.  All kernels are
single-threaded and deterministic.
"""

import numpy as np
from numba import njit

BIG = 1e30


@njit(cache=False)
def pav_nonincreasing(y):
    """Batched pool-adjacent-violators for nonincreasing rows.

    y: (B, k) array; returns the rowwise euclidean projection onto
    {x_1 >= x_2 >= ... >= x_k}.  Pooled blocks take exact arithmetic means;
    the sweep is left-to-right and deterministic.
    """
    B, k = y.shape
    out = np.empty_like(y)
    means = np.empty(k)
    cnts = np.empty(k, dtype=np.int64)
    for r in range(B):
        nb = 0
        for j in range(k):
            m = y[r, j]
            c = 1.0
            while nb > 0 and means[nb - 1] < m:
                m = (means[nb - 1] * cnts[nb - 1] + m * c) / (cnts[nb - 1] + c)
                c += cnts[nb - 1]
                nb -= 1
            means[nb] = m
            cnts[nb] = int(c)
            nb += 1
        pos = 0
        for b in range(nb):
            for _ in range(cnts[b]):
                out[r, pos] = means[b]
                pos += 1
    return out


@njit(cache=False)
def _parabola_foot(x0, y0, a):
    """Project (x0, y0) onto {y >= a x^2}, a > 0.

    Interior points are returned unchanged.  Boundary feet solve the cubic
    2 a^2 x^3 + (1 - 2 a y0) x - x0 = 0 by safeguarded bisection (the point
    being outside the epigraph makes the positive-side root unique).
    """
    if y0 >= a * x0 * x0:
        return x0, y0
    if x0 == 0.0:
        return 0.0, 0.0
    s = 1.0 if x0 > 0.0 else -1.0
    xa = abs(x0)
    c1 = 1.0 - 2.0 * a * y0
    ta = 2.0 * a * a
    hi = xa if xa > 1.0 else 1.0
    g = ta * hi * hi * hi + c1 * hi - xa
    it = 0
    while g < 0.0 and it < 200:
        hi *= 2.0
        g = ta * hi * hi * hi + c1 * hi - xa
        it += 1
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ta * mid * mid * mid + c1 * mid - xa >= 0.0:
            hi = mid
        else:
            lo = mid
    x = s * 0.5 * (lo + hi)
    return x, a * x * x


@njit(cache=False)
def parabola_project(x0, y0, a):
    """Vectorized projection onto {y >= a_i x^2} (arrays of equal length)."""
    n = x0.size
    xo = np.empty(n)
    yo = np.empty(n)
    for i in range(n):
        xo[i], yo[i] = _parabola_foot(x0[i], y0[i], a[i])
    return xo, yo


@njit(cache=False)
def _parabola_foot_fast(x0, y0, a):
    """Same foot as _parabola_foot via bracketed Newton (agrees to 1e-12).

    Newton steps on the cubic with the bisection bracket as safeguard; used
    on the solver's hot path where the fixed 60-step bisection would
    dominate the iteration cost.
    """
    if y0 >= a * x0 * x0:
        return x0, y0
    if x0 == 0.0:
        return 0.0, 0.0
    s = 1.0 if x0 > 0.0 else -1.0
    xa = abs(x0)
    c1 = 1.0 - 2.0 * a * y0
    ta = 2.0 * a * a
    hi = xa if xa > 1.0 else 1.0
    g = ta * hi * hi * hi + c1 * hi - xa
    it = 0
    while g < 0.0 and it < 200:
        hi *= 2.0
        g = ta * hi * hi * hi + c1 * hi - xa
        it += 1
    lo = 0.0
    x = hi if hi < xa else xa
    for _ in range(60):
        g = ta * x * x * x + c1 * x - xa
        if g >= 0.0:
            hi = x
        else:
            lo = x
        dg = 3.0 * ta * x * x + c1
        step_ok = dg > 0.0
        if step_ok:
            xn = x - g / dg
            step_ok = lo < xn < hi
        if not step_ok:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * (1.0 + abs(x)):
            # one extra guarded Newton step squares the residual error
            g = ta * xn * xn * xn + c1 * xn - xa
            dg = 3.0 * ta * xn * xn + c1
            if dg > 0.0:
                xp = xn - g / dg
                if lo < xp < hi:
                    xn = xp
            x = xn
            break
        x = xn
    x = s * x
    return x, a * x * x


@njit(cache=False)
def _quad_conj_epi_foot(t0, w0, a, b, c, glo, ghi):
    """Project onto the epigraph of the conjugate of a*g^2+b*g+c on [glo, ghi].

    The conjugate is affine with slope glo left of t = 2a*glo+b, affine with
    slope ghi right of t = 2a*ghi+b, and the parabola (t-b)^2/(4a) - c in
    between; the boundary is C^1 so the three normal regions are disjoint.
    """
    gm = (t0 - b) / (2.0 * a)
    if gm < glo:
        gm = glo
    elif gm > ghi:
        gm = ghi
    val = t0 * gm - (a * gm * gm + b * gm + c)
    if w0 >= val:
        return t0, w0
    tlo = 2.0 * a * glo + b
    thi = 2.0 * a * ghi + b
    rlo = a * glo * glo + b * glo + c
    viol = glo * t0 - rlo - w0
    if viol > 0.0:
        den = 1.0 + glo * glo
        ft = t0 - viol * glo / den
        if ft <= tlo:
            return ft, w0 + viol / den
    rhi = a * ghi * ghi + b * ghi + c
    viol = ghi * t0 - rhi - w0
    if viol > 0.0:
        den = 1.0 + ghi * ghi
        ft = t0 - viol * ghi / den
        if ft >= thi:
            return ft, w0 + viol / den
    x, y = _parabola_foot_fast(t0 - b, w0 + c, 1.0 / (4.0 * a))
    return x + b, y - c


@njit(cache=False)
def quad_conj_epi_project(t0, w0, a, b, c, glo, ghi):
    n = t0.size
    to = np.empty(n)
    wo = np.empty(n)
    for i in range(n):
        to[i], wo[i] = _quad_conj_epi_foot(t0[i], w0[i], a[i], b[i], c[i], glo[i], ghi[i])
    return to, wo


@njit(cache=False)
def _polyline_conj_epi_foot(t0, w0, G, R, m):
    """Project onto {(t,w): w >= max_j (G_j t - R_j)} for j < m.

    Slopes G are strictly ascending so the kinks (chord slopes of the
    underlying polyline) are ascending too; each affine segment is scanned
    with its foot clamped to the segment's kink range, which also covers the
    vertex cases exactly.
    """
    val = G[0] * t0 - R[0]
    for j in range(1, m):
        v = G[j] * t0 - R[j]
        if v > val:
            val = v
    if w0 >= val:
        return t0, w0
    best_d = BIG * BIG
    bt = t0
    bw = w0
    for j in range(m):
        if j == 0:
            lo = -BIG
        else:
            lo = (R[j] - R[j - 1]) / (G[j] - G[j - 1])
        if j == m - 1:
            hi = BIG
        else:
            hi = (R[j + 1] - R[j]) / (G[j + 1] - G[j])
        g = G[j]
        ft = (t0 + g * (w0 + R[j])) / (1.0 + g * g)
        if ft < lo:
            ft = lo
        elif ft > hi:
            ft = hi
        fw = g * ft - R[j]
        d = (ft - t0) * (ft - t0) + (fw - w0) * (fw - w0)
        if d < best_d:
            best_d = d
            bt = ft
            bw = fw
    return bt, bw


@njit(cache=False)
def polyline_conj_epi_project(t0, w0, G, R, cnt):
    """Vectorized over rows: G, R are (B, M) padded, cnt gives valid counts."""
    n = t0.size
    to = np.empty(n)
    wo = np.empty(n)
    for i in range(n):
        to[i], wo[i] = _polyline_conj_epi_foot(t0[i], w0[i], G[i], R[i], cnt[i])
    return to, wo


@njit(cache=False)
def lower_hull_batch(xs, ys, cnt):
    """Batched monotone-chain lower hull of rows of (x, y) samples.

    xs rows must be strictly ascending within their valid prefix.  Interior
    collinear vertices are dropped (cross product <= 0 pops), so chord
    slopes of the output are strictly increasing.  Returns padded hull
    vertex arrays (padding repeats the last vertex) and per-row counts.
    """
    B, M = xs.shape
    hx = np.empty((B, M))
    hy = np.empty((B, M))
    hn = np.empty(B, dtype=np.int64)
    for r in range(B):
        m = cnt[r]
        nb = 0
        for j in range(m):
            px = xs[r, j]
            py = ys[r, j]
            while nb >= 2:
                x0 = hx[r, nb - 2]
                y0 = hy[r, nb - 2]
                x1 = hx[r, nb - 1]
                y1 = hy[r, nb - 1]
                cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
                if cross <= 0.0:
                    nb -= 1
                else:
                    break
            hx[r, nb] = px
            hy[r, nb] = py
            nb += 1
        hn[r] = nb
        for j in range(nb, M):
            hx[r, j] = hx[r, nb - 1]
            hy[r, j] = hy[r, nb - 1]
    return hx, hy, hn


@njit(cache=False)
def polyline_prox_batch(x, tau, G, R, cnt):
    """Batched prox of convex polylines: argmin_g (g-x)^2/(2 tau) + PL(g).

    G rows hold vertex positions (ascending), R the values.  The minimizer
    is either a vertex (when (x - g_j)/tau lies in the subdifferential) or
    an interior segment point x - tau*slope clamped into the segment.
    """
    n = x.size
    out = np.empty(n)
    for i in range(n):
        m = cnt[i]
        if m == 1:
            out[i] = G[i, 0]
            continue
        best = G[i, 0]
        bestv = BIG * BIG
        for j in range(m - 1):
            sl = (R[i, j + 1] - R[i, j]) / (G[i, j + 1] - G[i, j])
            g = x[i] - tau[i] * sl
            if g < G[i, j]:
                g = G[i, j]
            elif g > G[i, j + 1]:
                g = G[i, j + 1]
            val = R[i, j] + sl * (g - G[i, j]) + (g - x[i]) * (g - x[i]) / (2.0 * tau[i])
            if val < bestv:
                bestv = val
                best = g
        out[i] = best
    return out
