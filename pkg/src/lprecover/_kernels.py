"""Compiled inner loops for the smoothed l^p decoders.

Both kernels run the whole continuation schedule ``eps <- decay * eps`` and
record one history row per stage. Status codes: 0 ok, 1 non-finite objective.
"""
import numpy as np
from numba import njit

# trial steps below this are treated as a stalled line search
_TINY_STEP = 1e-300


@njit(cache=True, nogil=True)
def _smooth(y, e2, h, p, g):
    """f_eps(y) and its gradient (written to g)."""
    f = 0.0
    for i in range(y.shape[0]):
        w = y[i] * y[i] + e2
        wp = w**h
        f += wp
        g[i] = p * y[i] * wp / w
    return f


@njit(cache=True, nogil=True)
def _project_dir(Q, g, out):
    """out = (I - Q Q^T) g, the component of g in the null space of A."""
    out[:] = g - Q @ (Q.T @ g)


@njit(cache=True, nogil=True)
def _pnorm(y, p):
    s = 0.0
    for i in range(y.shape[0]):
        s += abs(y[i]) ** p
    return s ** (1.0 / p)


@njit(cache=True, nogil=True)
def lp_path(Q, c, A, b, y, p, eps, decay, eps_min, max_outer, max_inner, grad_tol,
            step, shrink, armijo, hist):
    """Projected gradient over {Ay = b} along the smoothing schedule.

    ``Q`` has orthonormal columns spanning range(A^T) and ``c = Q^T y`` holds
    for every feasible y, so projection is ``y - Q (Q^T y - c)``.
    The inner stop test scales ``grad_tol (1 + f)`` by the curvature bound
    ``p eps^(p-2)`` of f_eps, i.e. it bounds the length of a 1/L gradient step.
    """
    N = y.shape[0]
    g = np.empty(N)
    d = np.empty(N)
    yn = np.empty(N)
    gn = np.empty(N)
    dn = np.empty(N)
    h = p / 2.0
    outer = 0
    inner_total = 0
    all_conv = True
    status = 0
    while eps >= eps_min and outer < max_outer:
        e2 = eps * eps
        f = _smooth(y, e2, h, p, g)
        _project_dir(Q, g, d)
        scale = max(1.0, p * eps ** (p - 2.0))
        conv = False
        for _ in range(max_inner):
            gn2 = 0.0
            for i in range(N):
                gn2 += d[i] * d[i]
            if np.sqrt(gn2) <= grad_tol * (1.0 + f) * scale:
                conv = True
                break
            t = step
            while True:
                for i in range(N):
                    yn[i] = y[i] - t * d[i]
                fn = _smooth(yn, e2, h, p, gn)
                if fn <= f - armijo * t * gn2 or t < _TINY_STEP:
                    break
                # minimizer of the quadratic through f, f'(0) = -gn2 and fn
                denom = 2.0 * (fn - f + t * gn2)
                tq = gn2 * t * t / denom if denom > 0 else shrink * t
                t = min(shrink * t, max(0.1 * t, tq))
            inner_total += 1
            if not np.isfinite(fn):
                status = 1
                break
            _project_dir(Q, gn, dn)
            ss = 0.0
            sr = 0.0
            for i in range(N):
                s = yn[i] - y[i]
                ss += s * s
                sr += s * (dn[i] - d[i])
            step = ss / sr if sr > 0 else 2.0 * t
            step = min(max(step, 1e-30), 1e30)
            y[:] = yn
            d[:] = dn
            f = fn
        if status != 0:
            break
        if not conv:
            all_conv = False
        # undo drift off the affine set
        y -= Q @ (Q.T @ y - c)
        r = A @ y - b
        hist[outer, 0] = eps
        hist[outer, 1] = _pnorm(y, p)
        hist[outer, 2] = np.sqrt(np.dot(r, r))
        outer += 1
        eps *= decay
    return outer, inner_total, all_conv, eps, status


@njit(cache=True, nogil=True)
def penalty_path(A, b, y, p, mu, lip_penalty, eps, decay, eps_min, max_outer, max_inner,
                 grad_tol, step, shrink, armijo, hist):
    """Gradient descent on f_eps(y) + |Ay - b|^2 / (2 mu) along the schedule.

    ``lip_penalty`` is |A|_2^2 / mu, the curvature of the penalty term, which
    enters the stop-test scale next to ``p eps^(p-2)``.
    """
    N = y.shape[0]
    g = np.empty(N)
    yn = np.empty(N)
    gn = np.empty(N)
    h = p / 2.0
    inv_mu = 1.0 / mu
    outer = 0
    inner_total = 0
    all_conv = True
    status = 0
    while eps >= eps_min and outer < max_outer:
        e2 = eps * eps
        r = A @ y - b
        f = _smooth(y, e2, h, p, g) + 0.5 * inv_mu * np.dot(r, r)
        g += inv_mu * (A.T @ r)
        scale = max(1.0, p * eps ** (p - 2.0) + lip_penalty)
        conv = False
        for _ in range(max_inner):
            gn2 = np.dot(g, g)
            if np.sqrt(gn2) <= grad_tol * (1.0 + f) * scale:
                conv = True
                break
            t = step
            while True:
                for i in range(N):
                    yn[i] = y[i] - t * g[i]
                rn = A @ yn - b
                fn = _smooth(yn, e2, h, p, gn) + 0.5 * inv_mu * np.dot(rn, rn)
                if fn <= f - armijo * t * gn2 or t < _TINY_STEP:
                    break
                denom = 2.0 * (fn - f + t * gn2)
                tq = gn2 * t * t / denom if denom > 0 else shrink * t
                t = min(shrink * t, max(0.1 * t, tq))
            inner_total += 1
            if not np.isfinite(fn):
                status = 1
                break
            gn += inv_mu * (A.T @ rn)
            ss = 0.0
            sr = 0.0
            for i in range(N):
                s = yn[i] - y[i]
                ss += s * s
                sr += s * (gn[i] - g[i])
            step = ss / sr if sr > 0 else 2.0 * t
            step = min(max(step, 1e-30), 1e30)
            y[:] = yn
            g[:] = gn
            f = fn
        if status != 0:
            break
        if not conv:
            all_conv = False
        r = A @ y - b
        hist[outer, 0] = eps
        hist[outer, 1] = _pnorm(y, p)
        hist[outer, 2] = np.sqrt(np.dot(r, r))
        outer += 1
        eps *= decay
    return outer, inner_total, all_conv, eps, status
