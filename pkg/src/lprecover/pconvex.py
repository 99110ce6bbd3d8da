"""Geometry of p-convex bodies at small dimension.

Gauges of the unit p-ball, greedy sign balancing in l^2, and sampled
estimates of how well ``A(B_p^N)`` fills the Euclidean ball.
"""
import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from .certify import constant_cp
from .decode import AffineProjector, SolveOptions, decode_lp
from .ensembles import as_array, gen_uniform_sphere
from .errors import NumericalError
from .metrics import quasinorm

__all__ = [
    "SignAssignment",
    "LqEmpirical",
    "gauge_bp",
    "check_p_subadditivity",
    "balance_signs",
    "min_l1_preimage",
    "lq_empirical",
    "d1_gap_check",
]


@dataclass(frozen=True)
class SignAssignment:
    signs: np.ndarray
    achieved_norm: float


@dataclass
class LqEmpirical:
    alpha_hat: float
    directions: int
    seed: int
    per_direction: list = field(default_factory=list)

    def write_csv(self, path):
        """One row per direction: index, |u|_2 (should be 1) and preimage quasinorm."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "u_norm_check", "preimage_quasinorm"])
            for row in self.per_direction:
                w.writerow([row[0], repr(row[1]), repr(row[2])])


def gauge_bp(x, p):
    """Gauge (Minkowski functional) of the unit p-ball, i.e. the p-quasinorm."""
    return quasinorm(x, p)


def check_p_subadditivity(x, y, p):
    """Whether ``|x + y|_p^p <= |x|_p^p + |y|_p^p`` holds up to 1e-10."""
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    lhs = np.sum(np.abs(x + y) ** p)
    return bool(lhs <= np.sum(np.abs(x) ** p) + np.sum(np.abs(y) ** p) + 1e-10)


def balance_signs(points):
    """Greedy signs with ``|sum_i s_i x_i|_2^2 <= sum_i |x_i|_2^2``.

    The first sign is +1; each later sign is the one giving the shorter
    partial sum (+1 on ties). Since ``|s + x|^2 + |s - x|^2 = 2|s|^2 + 2|x|^2``,
    the shorter choice adds at most ``|x|^2`` to the squared norm.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if X.shape[0] == 0 or X.size == 0:
        raise ValueError("balance_signs needs at least one point")
    signs = np.ones(X.shape[0])
    partial = X[0].copy()
    for k in range(1, X.shape[0]):
        plus = partial + X[k]
        minus = partial - X[k]
        if np.dot(minus, minus) < np.dot(plus, plus):
            signs[k] = -1.0
            partial = minus
        else:
            partial = plus
    total = signs @ X
    return SignAssignment(signs=signs, achieved_norm=float(np.linalg.norm(total)))


def min_l1_preimage(A, u):
    """Exact min |y|_1 subject to A y = u, as a linear program (y = y+ - y-)."""
    A = as_array(A)
    M, N = A.shape
    res = linprog(np.ones(2 * N), A_eq=np.hstack([A, -A]), b_eq=np.asarray(u, dtype=np.float64),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericalError(f"l1 preimage LP failed: {res.message}")
    return res.x[:N] - res.x[N:]


def _directions(M, count, seed):
    return gen_uniform_sphere(M, count, seed).entries.T


def _reraise(i, exc):
    msg = f"direction {i}: {exc}"
    try:
        new = type(exc)(msg)
    except TypeError:
        new = NumericalError(msg)
    raise new from exc


def lq_empirical(A, p, directions, seed, solver_opts=None):
    """Sampled LQ_p radius ``alpha_hat = 1 / max_u |decode_lp(A, u)|_p``.

    Directions are the columns of a uniform-on-sphere matrix drawn with
    ``seed``, so runs are reproducible and independent of A.
    """
    directions = int(directions)
    if directions < 1:
        raise ValueError(f"directions must be positive, got {directions}")
    opts = SolveOptions(p=p) if solver_opts is None else solver_opts
    if opts.p != p:
        opts = replace(opts, p=p)
    proj = AffineProjector(A)
    U = _directions(proj.A.shape[0], directions, seed)
    rows = []
    for i, u in enumerate(U):
        try:
            rep = decode_lp(proj.A, u, opts, projector=proj)
        except Exception as exc:
            _reraise(i, exc)
        rows.append((i, float(np.linalg.norm(u)), rep.objective_p))
    worst = max(r[2] for r in rows)
    return LqEmpirical(alpha_hat=1.0 / worst, directions=directions, seed=seed, per_direction=rows)


def d1_gap_check(A, p, directions, seed, solver_opts=None, tol=1e-3):
    """Sampled consistency check of ``d1(A B_p) <= C(p) d1(A B_1)^(2/p - 1)``.

    ``A`` is first divided by its largest column norm so that A(B_1) lies in
    the unit Euclidean ball. The l^1 preimages come from an exact LP; the
    l^p preimages (p < 1) from :func:`decode_lp`.

    Returns
    -------
    dict
        ``d1_conv_hat``, ``d1_p_hat``, ``bound`` and ``violated``.
    """
    A = as_array(A)
    A = A / np.max(np.linalg.norm(A, axis=0))
    directions = int(directions)
    if directions < 1:
        raise ValueError(f"directions must be positive, got {directions}")
    U = _directions(A.shape[0], directions, seed)
    d1_conv = 0.0
    for i, u in enumerate(U):
        try:
            d1_conv = max(d1_conv, quasinorm(min_l1_preimage(A, u), 1.0))
        except Exception as exc:
            _reraise(i, exc)
    if p == 1:
        d1_p = d1_conv
    else:
        d1_p = 1.0 / lq_empirical(A, p, directions, seed, solver_opts).alpha_hat
    bound = constant_cp(p) * d1_conv ** (2.0 / p - 1.0)
    return {
        "d1_conv_hat": d1_conv,
        "d1_p_hat": d1_p,
        "bound": bound,
        "violated": bool(d1_p > bound * (1.0 + tol)),
    }
