"""Compiled inner loops of the separability certifier.

Both loops run thousands of times per state on tiny matrices, where
interpreter overhead would dominate the arithmetic.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def nnls_gram(gram, rhs, start, tol, max_iter, robust):
    m = rhs.shape[0]
    w = start.copy()
    passive = w > 0
    scale = 1.0
    for i in range(m):
        if abs(rhs[i]) > scale:
            scale = abs(rhs[i])
    tol = tol * scale
    enter = False
    for i in range(m):
        if passive[i]:
            enter = True
            break
    for _ in range(max_iter):
        if not enter:
            grad = rhs - gram @ w
            j = -1
            best = tol
            for i in range(m):
                if not passive[i] and grad[i] > best:
                    best = grad[i]
                    j = i
            if j < 0:
                break
            passive[j] = True
        enter = False
        for _ in range(m):
            idx = np.flatnonzero(passive)
            k = idx.shape[0]
            sub = np.empty((k, k))
            r = np.empty(k)
            for a in range(k):
                r[a] = rhs[idx[a]]
                for b in range(k):
                    sub[a, b] = gram[idx[a], idx[b]]
            if robust:
                z = np.linalg.lstsq(sub, r, 1e-14)[0]
            else:
                z = np.linalg.solve(sub, r)
            ok = True
            for a in range(k):
                if z[a] <= 0:
                    ok = False
                    break
            if ok:
                w[:] = 0.0
                for a in range(k):
                    w[idx[a]] = z[a]
                break
            alpha = np.inf
            blk = -1
            for a in range(k):
                if z[a] <= 0:
                    wa = w[idx[a]]
                    ratio = wa / (wa - z[a])
                    if ratio < alpha:
                        alpha = ratio
                        blk = idx[a]
            for a in range(k):
                w[idx[a]] += alpha * (z[a] - w[idx[a]])
            w[blk] = 0.0
            for a in range(k):
                if w[idx[a]] <= 0:
                    w[idx[a]] = 0.0
                    passive[idx[a]] = False
            passive[blk] = False
            if not passive.any():
                break
    return w


@njit(cache=True)
def coherent_value(op, sqrt_binom, theta, phi):
    n = op.shape[0] - 1
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    v = np.empty(n + 1, dtype=np.complex128)
    for a in range(n + 1):
        v[a] = sqrt_binom[a] * c ** (n - a) * s**a * np.exp(1j * a * phi)
    acc = 0.0
    for a in range(n + 1):
        row = 0.0 + 0.0j
        for b in range(n + 1):
            row += op[a, b] * v[b]
        acc += (np.conj(v[a]) * row).real
    return acc


@njit(cache=True)
def newton_ascent(op, sqrt_binom, theta, phi, steps, sign):
    """Damped Newton ascent of sign * <z|op|z> in (theta, phi) with finite differences."""
    h = 1e-4
    cur = sign * coherent_value(op, sqrt_binom, theta, phi)
    for _ in range(steps):
        fp0 = sign * coherent_value(op, sqrt_binom, theta + h, phi)
        fm0 = sign * coherent_value(op, sqrt_binom, theta - h, phi)
        f0p = sign * coherent_value(op, sqrt_binom, theta, phi + h)
        f0m = sign * coherent_value(op, sqrt_binom, theta, phi - h)
        fpp = sign * coherent_value(op, sqrt_binom, theta + h, phi + h)
        fpm = sign * coherent_value(op, sqrt_binom, theta + h, phi - h)
        fmp = sign * coherent_value(op, sqrt_binom, theta - h, phi + h)
        fmm = sign * coherent_value(op, sqrt_binom, theta - h, phi - h)
        g0 = (fp0 - fm0) / (2 * h)
        g1 = (f0p - f0m) / (2 * h)
        a = (fp0 - 2 * cur + fm0) / (h * h)
        d = (f0p - 2 * cur + f0m) / (h * h)
        b = (fpp - fpm - fmp + fmm) / (4 * h * h)
        # eigenvalues of [[a, b], [b, d]]
        mean = 0.5 * (a + d)
        rad = np.sqrt(0.25 * (a - d) ** 2 + b * b)
        lmax = mean + rad
        lmin = mean - rad
        # thresholds relative to the curvature scale: late Gilbert residuals are tiny operators
        scale = max(abs(lmin), abs(lmax), 1e-300)
        if lmax > -1e-6 * scale:
            shift = lmax + max(1e-3 * scale, abs(lmin))
            a -= shift
            d -= shift
        det = a * d - b * b
        s0 = -(d * g0 - b * g1) / det
        s1 = -(-b * g0 + a * g1) / det
        norm = np.sqrt(s0 * s0 + s1 * s1)
        if norm > 0.2:
            s0 *= 0.2 / norm
            s1 *= 0.2 / norm
        improved = False
        for _ in range(8):
            val = sign * coherent_value(op, sqrt_binom, theta + s0, phi + s1)
            if val >= cur:
                theta += s0
                phi += s1
                cur = val
                improved = True
                break
            s0 *= 0.5
            s1 *= 0.5
        if not improved or np.sqrt(s0 * s0 + s1 * s1) < 1e-10:
            break
    return theta, phi, sign * cur
