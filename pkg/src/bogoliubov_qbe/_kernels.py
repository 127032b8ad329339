"""Compiled inner loops: monotone cubic interpolation and the collision sums.

Occupation numbers are interpolated through g(r) = r f(r), which stays finite at
r = 0 for equilibria (f ~ 1/r there).  The interpolation nodes are the grid
nodes with the origin prepended.  Summation order inside each row is fixed, so
results are bit-reproducible.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _edge_slope(h0, h1, d0, d1):
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(m) != np.sign(d0):
        m = 0.0
    elif np.sign(d0) != np.sign(d1) and abs(m) > abs(3.0 * d0):
        m = 3.0 * d0
    return m


@njit(cache=True)
def pchip_slopes(x, y):
    """Fritsch-Butland node slopes, same convention as scipy's PchipInterpolator."""
    n = x.shape[0]
    m = np.zeros(n)
    if n == 2:
        d = (y[1] - y[0]) / (x[1] - x[0])
        m[0] = d
        m[1] = d
        return m
    for k in range(1, n - 1):
        h0 = x[k] - x[k - 1]
        h1 = x[k + 1] - x[k]
        d0 = (y[k] - y[k - 1]) / h0
        d1 = (y[k + 1] - y[k]) / h1
        if d0 * d1 > 0.0:
            w1 = 2.0 * h1 + h0
            w2 = h1 + 2.0 * h0
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1)
    m[0] = _edge_slope(x[1] - x[0], x[2] - x[1], (y[1] - y[0]) / (x[1] - x[0]), (y[2] - y[1]) / (x[2] - x[1]))
    m[n - 1] = _edge_slope(
        x[n - 1] - x[n - 2],
        x[n - 2] - x[n - 3],
        (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]),
        (y[n - 2] - y[n - 3]) / (x[n - 2] - x[n - 3]),
    )
    return m


@njit(cache=True, inline="always")
def _locate(x, xq, h):
    # h > 0 flags a uniform node set x[k] = k*h
    n = x.shape[0]
    if h > 0.0:
        k = int(xq / h)
    else:
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if x[mid] <= xq:
                lo = mid
            else:
                hi = mid
        k = lo
    if k < 0:
        k = 0
    if k > n - 2:
        k = n - 2
    return k


@njit(cache=True, inline="always")
def hermite(x, y, m, xq, h):
    """Evaluate the cubic Hermite interpolant at one point (clamped to the node range)."""
    if xq <= x[0]:
        return y[0]
    if xq >= x[x.shape[0] - 1]:
        return y[x.shape[0] - 1]
    k = _locate(x, xq, h)
    dx = x[k + 1] - x[k]
    t = (xq - x[k]) / dx
    t2 = t * t
    t3 = t2 * t
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * y[k] + (t3 - 2.0 * t2 + t) * dx * m[k]
            + (-2.0 * t3 + 3.0 * t2) * y[k + 1] + (t3 - t2) * dx * m[k + 1])


@njit(cache=True, inline="always")
def occupation(x, g, m, r, h):
    """f(r) from the interpolant of g = r f; nonnegative, zero beyond the last node."""
    if r > x[x.shape[0] - 1]:
        return 0.0
    v = hermite(x, g, m, r, h)
    if v <= 0.0:
        return 0.0
    return v / r


@njit(cache=True)
def occupation_many(x, g, m, pts, h):
    out = np.empty(pts.shape[0])
    for j in range(pts.shape[0]):
        out[j] = occupation(x, g, m, pts[j], h)
    return out


@njit(cache=True)
def gain_loss(rho, f, x, g, m, h, s_star, a_w, r2, u_star, b_w, cut, kappa0, r_max):
    """Gain, loss frequency and the truncated part of the loss frequency at every node.

    Decay channel: midpoint nodes r = rho_i (q + 1/2)/nq on [0, rho_i].
    Absorb channel: midpoint nodes r2 on [0, r_max]; products u* > r_max carry f = 0.
    """
    n = rho.shape[0]
    nq = r2.shape[0]
    gain = np.zeros(n)
    nu = np.zeros(n)
    nu_tail = np.zeros(n)
    f_r2 = np.empty(nq)
    for q in range(nq):
        f_r2[q] = occupation(x, g, m, r2[q], h)
    dr2 = r_max / nq
    for i in range(n):
        fi = f[i]
        dr = rho[i] / nq
        g1 = 0.0
        l1 = 0.0
        for q in range(nq):
            r = rho[i] * (q + 0.5) / nq
            fr = occupation(x, g, m, r, h)
            fs = occupation(x, g, m, s_star[i, q], h)
            w = a_w[i, q]
            g1 += w * fr * fs
            l1 += w * (fr + fs + 1.0)
        g2 = 0.0
        l2 = 0.0
        lt = 0.0
        for q in range(nq):
            w = b_w[i, q]
            if q < cut[i]:
                fu = occupation(x, g, m, u_star[i, q], h)
                g2 += w * fu * (fi + f_r2[q] + 1.0)
            else:
                lt += w * f_r2[q]
            l2 += w * f_r2[q]
        c1 = 2.0 * math.pi * kappa0 * dr
        c2 = 4.0 * math.pi * kappa0 * dr2
        gain[i] = c1 * g1 + c2 * g2
        nu[i] = c1 * l1 + c2 * l2
        nu_tail[i] = c2 * lt
    return gain, nu, nu_tail
