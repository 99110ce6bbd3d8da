"""l^0, l^p and noisy l^p decoders.

The l^p decoders follow a smoothing continuation: for a decreasing sequence
``eps_n = decay * eps_{n-1}`` they minimize

    f_eps(y) = sum_i (y_i^2 + eps^2)^(p/2)

over the feasible set, warm-starting each stage from the previous one. For
large eps the problem is nearly quadratic; as eps -> 0, f_eps -> |y|_p^p.
"""
import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import _kernels
from ._rng import check_seed
from .ensembles import as_array
from .errors import DivergenceError, SingularProjectionError, TooLargeForExhaustiveError
from .metrics import quasinorm

__all__ = [
    "SolveOptions",
    "SolveReport",
    "AffineProjector",
    "project_affine",
    "decode_l0_oracle",
    "decode_lp",
    "decode_lp_eps",
    "decode_irls",
]

#: Condition-number ceiling for A A^T.
COND_LIMIT = 1e12
_BISECT_STEPS = 40
_MU_SPAN = 1e8


@dataclass(frozen=True)
class SolveOptions:
    """Decoder settings.

    ``eps0=None`` starts the schedule at ``max|y0|`` (or 1 when y0 = 0).
    ``seed`` is carried for provenance; the decoders are deterministic.
    ``polish`` snaps the final iterate to a basic solution (see :func:`decode_lp`).
    """

    p: float = 1.0
    eps0: Optional[float] = None
    eps_decay: float = 0.99
    eps_min: float = 1e-9
    max_outer: int = 3000
    max_inner: int = 200
    grad_tol: float = 1e-8
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")
        if self.eps0 is not None and not self.eps0 > 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        for name in ("eps_decay", "backtrack", "armijo"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("eps_min", "grad_tol", "step_init"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        for name in ("max_outer", "max_inner"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        object.__setattr__(self, "seed", check_seed(self.seed))

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class SolveReport:
    solution: np.ndarray
    objective_p: float
    residual_l2: float
    outer_iters: int
    inner_iters_total: int
    eps_final: float
    converged: bool
    history: list = field(default_factory=list)
    p: float = 1.0
    method: str = "lp"
    mu: Optional[float] = None
    polished: bool = False

    def to_dict(self, include_history=False):
        d = asdict(self)
        d["solution"] = [float(v) for v in self.solution]
        if include_history:
            d["history"] = [list(map(float, row)) for row in self.history]
        else:
            d.pop("history")
        return d

    def to_json(self, include_history=False):
        return json.dumps(self.to_dict(include_history))

    def write_history_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "objective", "residual"])
            for row in self.history:
                w.writerow([repr(float(v)) for v in row])


class AffineProjector:
    """Euclidean projection onto {y : A y = b}, factorized once per matrix.

    With ``A^T = Q R`` (thin QR), ``R^T R = A A^T`` and the projection is
    ``z - Q (Q^T z - R^{-T} b)``, which avoids forming ``(A A^T)^{-1}``.
    """

    def __init__(self, A):
        A = np.ascontiguousarray(as_array(A))
        M, N = A.shape
        if M > N:
            raise SingularProjectionError(f"A A^T is singular: M={M} exceeds N={N}")
        Q, R = np.linalg.qr(A.T)
        sv = np.linalg.svd(R, compute_uv=False)
        cond = math.inf if sv[-1] == 0 else (sv[0] / sv[-1]) ** 2
        if not cond <= COND_LIMIT:
            raise SingularProjectionError(
                f"A A^T is numerically singular (condition estimate {cond:.3g} > {COND_LIMIT:g})"
            )
        self.A = A
        self.Q = np.ascontiguousarray(Q)
        self.R = R

    def offset(self, b):
        """``c = R^{-T} b``, so that feasible y satisfy ``Q^T y = c``."""
        b = np.asarray(b, dtype=np.float64).ravel()
        if b.shape[0] != self.A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, expected {self.A.shape[0]}")
        return np.linalg.solve(self.R.T, b)

    def project(self, z, b):
        z = np.asarray(z, dtype=np.float64).ravel()
        return z - self.Q @ (self.Q.T @ z - self.offset(b))


def project_affine(z, A, b):
    """Nearest point to ``z`` on {y : A y = b}: ``z - A^T (A A^T)^{-1} (A z - b)``.

    Raises SingularProjectionError when cond(A A^T) exceeds 1e12.
    """
    return AffineProjector(A).project(z, b)


def decode_l0_oracle(A, b, S_max, res_tol, max_N=25, max_S=4, return_info=False):
    """Sparsest least-squares fit by enumerating supports of size 0..S_max.

    Within the smallest size reaching ``residual <= res_tol`` the least
    residual wins; ties go to the lexicographically smallest support. If no
    support qualifies, the overall least-residual candidate is returned and
    ``info["feasible"]`` is False.

    Returns
    -------
    x : ndarray
        or ``(x, info)`` when ``return_info`` is set, where ``info`` has keys
        ``support``, ``residual`` and ``feasible``.
    """
    A = as_array(A)
    b = np.asarray(b, dtype=np.float64).ravel()
    M, N = A.shape
    S_max = int(S_max)
    if S_max < 0:
        raise ValueError(f"S_max must be nonnegative, got {S_max}")
    if N > max_N or S_max > max_S:
        raise TooLargeForExhaustiveError(
            f"l0 enumeration limited to N <= {max_N} and S_max <= {max_S}, got N={N}, S_max={S_max}"
        )
    tie = 1e-12 * (1.0 + np.linalg.norm(b))
    best = (np.linalg.norm(b), (), np.zeros(N))
    overall = best
    if best[0] > res_tol:
        for size in range(1, min(S_max, N) + 1):
            level = None
            for T in itertools.combinations(range(N), size):
                cols = A[:, T]
                coef = np.linalg.lstsq(cols, b, rcond=None)[0]
                r = float(np.linalg.norm(cols @ coef - b))
                if level is None or r < level[0] - tie:
                    x = np.zeros(N)
                    x[list(T)] = coef
                    level = (r, T, x)
            if level[0] < overall[0] - tie:
                overall = level
            if level[0] <= res_tol:
                best = level
                break
        else:
            best = None
    feasible = best is not None
    r, T, x = best if feasible else overall
    if return_info:
        return x, {"support": list(T), "residual": r, "feasible": feasible}
    return x


def _options(opts, overrides):
    if opts is None:
        opts = SolveOptions(**overrides)
    elif overrides:
        opts = replace(opts, **overrides)
    return opts


def _history(hist, n):
    return [tuple(row) for row in hist[:n].tolist()]


def _polish(y, A, b, p):
    """Basic solution on the M largest entries of y, if it lowers |y|_p.

    For p <= 1 every local minimizer of |y|_p over {Ay = b} is a basic
    solution (support of at most M independent columns). Once the smoothing
    path has found one, its support lies inside the top-M entries and the
    square solve returns it exactly, without the residual entries of size
    ~grad_tol that the smoothed iterate still carries.
    """
    M, N = A.shape
    if M >= N:
        return y, False
    T = np.sort(np.argsort(-np.abs(y), kind="stable")[:M])
    B = A[:, T]
    if np.linalg.cond(B) > COND_LIMIT:
        return y, False
    z = np.zeros(N)
    z[T] = np.linalg.solve(B, b)
    feasible = np.linalg.norm(A @ z - b) <= 1e-10 * (1.0 + np.linalg.norm(b))
    if feasible and np.all(np.isfinite(z)) and quasinorm(z, p) <= quasinorm(y, p):
        return z, True
    return y, False


def _finish(y, A, b, opts, outer, inner, conv, eps, hist, method, mu=None, polish=False):
    if not np.all(np.isfinite(y)):
        raise DivergenceError("decoder iterate became non-finite")
    polished = False
    if polish and opts.polish:
        y, polished = _polish(y, A, b, opts.p)
    return SolveReport(
        solution=y,
        objective_p=quasinorm(y, opts.p),
        residual_l2=float(np.linalg.norm(A @ y - b)),
        outer_iters=int(outer),
        inner_iters_total=int(inner),
        eps_final=float(eps),
        converged=bool(conv),
        history=_history(hist, outer),
        p=opts.p,
        method=method,
        mu=mu,
        polished=polished,
    )


def _zero_report(N, opts, method, residual=0.0):
    return SolveReport(np.zeros(N), 0.0, float(residual), 0, 0, 0.0, True, [], opts.p, method)


def decode_lp(A, b, opts=None, projector=None, **overrides):
    """Minimize |y|_p subject to A y = b by smoothed projected gradient.

    Each stage minimizes f_eps over {Ay = b}, starting from the minimum-l2
    feasible point, with Barzilai-Borwein trial steps and Armijo backtracking.
    A stage ends when the projected gradient g satisfies

        |g| <= grad_tol * (1 + f_eps) * max(1, p * eps^(p-2)),

    i.e. a gradient step of length 1/L, with L the curvature bound of f_eps,
    would move y by at most ``grad_tol * (1 + f_eps)``. With ``opts.polish``
    the result is then snapped to the basic solution on its M largest
    entries whenever that is feasible and does not increase |y|_p.

    Parameters
    ----------
    A : MeasurementMatrix or array_like
        Full row rank M x N matrix.
    b : array_like
        Observations, length M.
    opts : SolveOptions, optional
        Keyword ``overrides`` (e.g. ``p=0.5``) are applied on top.
    projector : AffineProjector, optional
        Reuse a factorization of A across many right-hand sides.
    """
    opts = _options(opts, overrides)
    proj = projector if projector is not None else AffineProjector(A)
    A = proj.A
    b = np.asarray(b, dtype=np.float64).ravel()
    c = proj.offset(b)
    y = proj.Q @ c
    if not np.any(y):
        return _zero_report(A.shape[1], opts, "lp")
    eps = opts.eps0 if opts.eps0 is not None else float(np.max(np.abs(y)))
    hist = np.zeros((opts.max_outer, 3))
    outer, inner, conv, eps, status = _kernels.lp_path(
        proj.Q, c, A, b, y, opts.p, eps, opts.eps_decay, opts.eps_min, opts.max_outer,
        opts.max_inner, opts.grad_tol, opts.step_init, opts.backtrack, opts.armijo, hist)
    if status:
        raise DivergenceError(f"smoothed objective became non-finite at eps={eps:.3g}")
    conv = conv and eps < opts.eps_min
    return _finish(y, A, b, opts, outer, inner, conv, eps / opts.eps_decay, hist, "lp", polish=True)


def _penalty_solve(A, b, y0, mu, lip, opts):
    y = y0.copy()
    eps = opts.eps0 if opts.eps0 is not None else max(float(np.max(np.abs(y0))), 1e-300)
    hist = np.zeros((opts.max_outer, 3))
    outer, inner, conv, eps, status = _kernels.penalty_path(
        A, b, y, opts.p, mu, lip, eps, opts.eps_decay, opts.eps_min, opts.max_outer,
        opts.max_inner, opts.grad_tol, opts.step_init, opts.backtrack, opts.armijo, hist)
    if status:
        raise DivergenceError(f"penalized objective became non-finite at mu={mu:.3g}")
    conv = conv and eps < opts.eps_min
    return _finish(y, A, b, opts, outer, inner, conv, eps / opts.eps_decay, hist, "lp_eps", mu)


def decode_lp_eps(A, b, eps_noise, opts=None, **overrides):
    """Approximate min |y|_p subject to |A y - b|_2 <= eps_noise.

    Solves ``f_eps(y) + |Ay - b|^2 / (2 mu)`` along the smoothing schedule and
    bisects log(mu) (at most 40 steps) until the residual lands in
    ``[0.9, 1.0] * eps_noise``. If that window is never reached the
    least-residual solution seen is returned. ``eps_noise = 0`` is exactly
    :func:`decode_lp`; ``|b|_2 <= eps_noise`` returns the zero vector.
    """
    opts = _options(opts, overrides)
    if not eps_noise >= 0:
        raise ValueError(f"eps_noise must be nonnegative, got {eps_noise}")
    if eps_noise == 0:
        return decode_lp(A, b, opts)
    proj = AffineProjector(A)
    A = proj.A
    b = np.asarray(b, dtype=np.float64).ravel()
    nb = float(np.linalg.norm(b))
    if nb <= eps_noise:
        return _zero_report(A.shape[1], opts, "lp_eps", residual=nb)
    y0 = proj.project(np.zeros(A.shape[1]), b)
    sigma2 = float(np.linalg.norm(A, 2) ** 2)
    lo, hi = math.log(eps_noise / _MU_SPAN), math.log(eps_noise * _MU_SPAN)
    best = None
    for _ in range(_BISECT_STEPS):
        mu = math.exp(0.5 * (lo + hi))
        rep = _penalty_solve(A, b, y0, mu, sigma2 / mu, opts)
        if best is None or rep.residual_l2 < best.residual_l2:
            best = rep
        if 0.9 * eps_noise <= rep.residual_l2 <= eps_noise:
            return rep
        if rep.residual_l2 > eps_noise:
            hi = math.log(mu)
        else:
            lo = math.log(mu)
    return best


def decode_irls(A, b, opts=None, **overrides):
    """Iteratively reweighted least squares on the same smoothing schedule.

    With ``D = diag((y_i^2 + eps^2)^(1 - p/2))`` each update is
    ``y <- D A^T (A D A^T)^{-1} b``, the minimizer of ``sum y_i^2 / D_ii`` over
    {Ay = b}. It is evaluated through a QR factorization of ``(A D^{1/2})^T``
    so the tiny weights at small eps do not square the conditioning. A stage
    ends when ``|y_new - y| <= grad_tol * (1 + |y|)`` or after ``max_inner``
    updates.
    """
    opts = _options(opts, overrides)
    proj = AffineProjector(A)
    A = proj.A
    b = np.asarray(b, dtype=np.float64).ravel()
    y = proj.project(np.zeros(A.shape[1]), b)
    if not np.any(y):
        return _zero_report(A.shape[1], opts, "irls")
    eps = opts.eps0 if opts.eps0 is not None else float(np.max(np.abs(y)))
    hist = []
    inner = 0
    conv = True
    outer = 0
    while eps >= opts.eps_min and outer < opts.max_outer:
        stage_ok = False
        for _ in range(opts.max_inner):
            root = (y * y + eps * eps) ** (0.5 - opts.p / 4)  # D^{1/2}
            Q, R = np.linalg.qr((A * root).T)
            y_new = root * (Q @ np.linalg.solve(R.T, b))
            inner += 1
            if not np.all(np.isfinite(y_new)):
                raise DivergenceError(f"IRLS update became non-finite at eps={eps:.3g}")
            step = np.linalg.norm(y_new - y)
            y = y_new
            if step <= opts.grad_tol * (1.0 + np.linalg.norm(y)):
                stage_ok = True
                break
        conv = conv and stage_ok
        hist.append((eps, quasinorm(y, opts.p), float(np.linalg.norm(A @ y - b))))
        outer += 1
        eps *= opts.eps_decay
    conv = conv and eps < opts.eps_min
    hist = np.array(hist) if hist else np.zeros((0, 3))
    return _finish(y, A, b, opts, outer, inner, conv, eps / opts.eps_decay, hist, "irls",
                   polish=True)
