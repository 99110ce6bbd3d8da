"""Quasinorms, best S-term approximation errors and reconstruction SNR."""
import numpy as np

__all__ = ["SNR_CAP_DB", "quasinorm", "best_s_term_error", "top_support", "snr_db"]

#: Reported by :func:`snr_db` when the reconstruction is exact to ~1e-15.
SNR_CAP_DB = 300.0


def _check_p(p):
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if p > 2:
        raise ValueError(f"p must lie in (0, 2], got {p}")


def quasinorm(x, p):
    """Return ``(sum |x_i|**p) ** (1/p)``; a norm for p >= 1, a quasinorm below."""
    _check_p(p)
    a = np.abs(np.asarray(x, dtype=np.float64)).ravel()
    if p == 2:
        return float(np.sqrt(np.dot(a, a)))
    if p == 1:
        return float(a.sum())
    return float(np.sum(a**p) ** (1.0 / p))


def top_support(x, S):
    """Indices of the S largest-magnitude entries, ties going to the lower index."""
    a = np.abs(np.asarray(x, dtype=np.float64)).ravel()
    order = np.argsort(-a, kind="stable")
    return np.sort(order[:S])


def best_s_term_error(x, S, p):
    """Best S-term approximation error sigma_S(x) in the l^p (quasi)norm.

    Keeping the S largest magnitudes is optimal for every entrywise p > 0,
    so this is the exact minimum over all S-sparse vectors.
    """
    _check_p(p)
    x = np.asarray(x, dtype=np.float64).ravel()
    S = int(S)
    if not 0 <= S <= x.size:
        raise ValueError(f"need 0 <= S <= N, got S={S}, N={x.size}")
    tail = x.copy()
    tail[top_support(x, S)] = 0.0
    return quasinorm(tail, p)


def snr_db(x, xhat):
    """Reconstruction SNR ``20 log10(||x||_2 / ||x - xhat||_2)`` in dB.

    Returns :data:`SNR_CAP_DB` when the error is below ``1e-15 * ||x||_2``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    xhat = np.asarray(xhat, dtype=np.float64).ravel()
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("snr_db is undefined for x = 0")
    err = np.linalg.norm(x - xhat)
    if err < 1e-15 * nx:
        return SNR_CAP_DB
    return float(20.0 * np.log10(nx / err))
