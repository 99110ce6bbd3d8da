"""Closed-form recovery constants and sufficient conditions for l^p decoding.

Notation: ``delta_kS`` and ``delta_k1S`` are the restricted isometry constants
of orders kS and (k+1)S. Property P(k, S, p) is

    delta_kS + k**(2/p - 1) * delta_k1S < k**(2/p - 1) - 1.

When it holds, the l^p decoders obey
``|Delta(b) - x|_2**p <= C1 eps**p + C2 sigma_S(x)_p**p / S**(1 - p/2)``.

Formulas are written in the same algebraic arrangement as their published
form so that regression values can be checked term by term.
"""
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ConditionNotSatisfiedError, ProfileTooShortError

__all__ = [
    "LOG_BASE",
    "Certificate",
    "IoConstants",
    "check_condition_P",
    "threshold_f",
    "threshold_g",
    "constant_c1",
    "constant_c2",
    "instance_optimality_constant",
    "sparsity_transfer",
    "constant_cpq",
    "constant_cp",
    "log_constant_cpq",
    "log_constant_cp",
    "lq_alpha",
    "io_constants",
    "certify_recovery",
]

#: Logarithm used in ``log(N/M)`` and in the ``log 2`` factor of C(p).
#: ``"natural"`` (default) or ``"base2"``; recorded in experiment metadata.
LOG_BASE = "natural"


def _log(x, base):
    if base == "natural":
        return math.log(x)
    if base == "base2":
        return math.log2(x)
    raise ValueError(f"log base must be 'natural' or 'base2', got {base!r}")


def _check_p(p, allow_one=True):
    if not (0 < p < 1 or (allow_one and p == 1)):
        raise ValueError(f"p must lie in (0, 1{']' if allow_one else ')'}, got {p}")


def _check_k(k):
    if not k > 1:
        raise ValueError(f"k must exceed 1, got {k}")


def _check_deltas(*deltas):
    for d in deltas:
        if not d >= 0:
            raise ValueError(f"restricted isometry constants are nonnegative, got {d}")


@dataclass(frozen=True)
class Certificate:
    p: float
    S: int
    k: float
    delta_kS: float
    delta_k1S: float
    satisfied: bool
    C1: Optional[float] = None
    C2: Optional[float] = None

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        d = self.to_dict()
        keys = ("p", "S", "k", "satisfied", "C1", "C2", "delta_kS", "delta_k1S")
        return json.dumps({key: d[key] for key in keys})


@dataclass(frozen=True)
class IoConstants:
    gamma_p: float
    C3: float
    C_case_i: float
    C_case_iii: float

    def to_dict(self):
        return asdict(self)


def check_condition_P(delta_kS, delta_k1S, k, p):
    """True iff delta_kS + k^(2/p-1) delta_k1S < k^(2/p-1) - 1 (strict)."""
    _check_deltas(delta_kS, delta_k1S)
    _check_k(k)
    _check_p(p)
    kk = k ** (2.0 / p - 1.0)
    return bool(delta_kS + kk * delta_k1S < kk - 1.0)


def threshold_f(m, p):
    """Largest delta_mS admitted by P(m - 1, S, p) when both constants equal delta."""
    if not m >= 2:
        raise ValueError(f"m must be at least 2, got {m}")
    _check_p(p)
    t = (m - 1.0) ** (2.0 / p - 1.0)
    return (t - 1.0) / (t + 1.0)


def threshold_g(m, p):
    """The competing threshold 4(sqrt2-1)(m/2)^(1/p-1/2) / (4(sqrt2-1)(m/2)^(1/p-1/2) + 2)."""
    if not m >= 2:
        raise ValueError(f"m must be at least 2, got {m}")
    _check_p(p)
    c = 4.0 * (math.sqrt(2.0) - 1.0) * (m / 2.0) ** (1.0 / p - 0.5)
    return c / (c + 2.0)


def _denominator(p, k, delta_kS, delta_k1S):
    if not check_condition_P(delta_kS, delta_k1S, k, p) or delta_k1S >= 1:
        raise ConditionNotSatisfiedError(
            f"condition P not satisfied for p={p}, k={k}, "
            f"delta_kS={delta_kS}, delta_k1S={delta_k1S}"
        )
    den = (1.0 - delta_k1S) ** (p / 2) - (1.0 + delta_kS) ** (p / 2) * k ** (p / 2 - 1)
    if not den > 0:
        # only reachable through rounding right at the boundary
        raise ConditionNotSatisfiedError(f"nonpositive denominator {den} at the boundary of P")
    return den


def constant_c1(p, k, delta_kS, delta_k1S):
    """Noise constant C1 of the (eps, sigma_S) error bound.

    Raises ConditionNotSatisfiedError when P(k, S, p) fails.
    """
    den = _denominator(p, k, delta_kS, delta_k1S)
    return 2.0**p * (1.0 + k ** (p / 2 - 1) * (2.0 / p - 1.0) ** (-p / 2)) / den


def constant_c2(p, k, delta_kS, delta_k1S):
    """Compressibility constant C2 of the (eps, sigma_S) error bound."""
    _denominator(p, k, delta_kS, delta_k1S)
    lead = 2.0 * (p / (2.0 - p)) ** (p / 2) / k ** (1.0 - p / 2)
    num = ((2.0 / p - 1.0) ** (p / 2) + k ** (p / 2 - 1)) * (1.0 + delta_kS) ** (p / 2)
    den = (1.0 - delta_k1S) ** (p / 2) - (1.0 + delta_kS) ** (p / 2) / k ** (1.0 - p / 2)
    return lead * (1.0 + num / den)


def instance_optimality_constant(p, k, delta_kS, delta_k1S):
    """C_{2,p} = C2**(1/p): the (2, p) instance optimality constant of order S."""
    return constant_c2(p, k, delta_kS, delta_k1S) ** (1.0 / p)


def sparsity_transfer(S1, k, p):
    """Sparsity level S_p = floor((k+1) / (k^(p/(2-p)) + 1) * S1) reached by l^p decoding.

    A guard of 1e-9 absorbs rounding when the exact value is an integer.
    """
    S1 = int(S1)
    if S1 < 1:
        raise ValueError(f"S1 must be a positive integer, got {S1}")
    _check_k(k)
    _check_p(p)
    kS = k * S1
    if abs(kS - round(kS)) > 1e-9:
        raise ValueError(f"k * S1 must be an integer, got k={k}, S1={S1}")
    value = (k + 1.0) / (k ** (p / (2.0 - p)) + 1.0) * S1
    return int(math.floor(value + 1e-9))


def log_constant_cpq(p, q, log_base=LOG_BASE):
    """Natural log of :func:`constant_cpq`, finite for all admissible (p, q)."""
    _check_p(p, allow_one=False)
    if not 1 < q <= 2:
        raise ValueError(f"q must lie in (1, 2], got {q}")
    a = 2.0 ** (1.0 - p) + 2.0 ** (-p * (1.0 - 1.0 / q)) * (1.0 - p) / (p * (1.0 - 1.0 / q))
    b = 1.0 / ((1.0 - p) * _log(2.0, log_base))
    e1 = (1.0 - p / q) / (p**2 * (1.0 - 1.0 / q))
    e2 = (1.0 / p - 1.0) / (p * (1.0 - 1.0 / q))
    return e1 * math.log(a) + e2 * math.log(b)


def constant_cpq(p, q, log_base=LOG_BASE):
    """Constant C_{p,q} of the p-convex body distance bound (0 < p < 1, 1 < q <= 2).

    Evaluated in double precision in its direct form; overflows to ``inf``
    once p drops below roughly 0.09 (use :func:`log_constant_cpq` there).
    """
    log_constant_cpq(p, q, log_base)  # validation
    a = 2.0 ** (1.0 - p) + 2.0 ** (-p * (1.0 - 1.0 / q)) * (1.0 - p) / (p * (1.0 - 1.0 / q))
    b = 1.0 / ((1.0 - p) * _log(2.0, log_base))
    e1 = (1.0 - p / q) / (p**2 * (1.0 - 1.0 / q))
    e2 = (1.0 / p - 1.0) / (p * (1.0 - 1.0 / q))
    return _safe_pow(a, e1) * _safe_pow(b, e2)


def log_constant_cp(p, log_base=LOG_BASE):
    """Natural log of :func:`constant_cp`."""
    _check_p(p)
    if p == 1:
        return 0.0
    a = 2.0 ** (1.0 - p) + (1.0 - p) * 2.0 ** (1.0 - p / 2) / p
    b = 1.0 / ((1.0 - p) * _log(2.0, log_base))
    return (2.0 - p) / p**2 * math.log(a) + (2.0 - 2.0 * p) / p**2 * math.log(b)


def constant_cp(p, log_base=LOG_BASE):
    """C(p), the q = 2 case of C_{p,q}; defined as exactly 1 at p = 1.

    The formula is a 0**0 form at p = 1, hence the explicit value there.
    Overflows to ``inf`` for p below roughly 0.09.
    """
    _check_p(p)
    if p == 1:
        return 1.0
    a = 2.0 ** (1.0 - p) + (1.0 - p) * 2.0 ** (1.0 - p / 2) / p
    b = 1.0 / ((1.0 - p) * _log(2.0, log_base))
    return _safe_pow(a, (2.0 - p) / p**2) * _safe_pow(b, (2.0 - 2.0 * p) / p**2)


def _safe_pow(base, exponent):
    try:
        return math.pow(float(base), float(exponent))
    except OverflowError:
        return math.inf


def lq_alpha(M, N, mu, p, log_base=LOG_BASE):
    """LQ_p radius alpha = (1/C(p)) (mu^2 log(N/M) / M)^(1/p - 1/2).

    At p = 1 this is mu * sqrt(log(N/M) / M).
    """
    M, N = int(M), int(N)
    if M < 1 or N <= M:
        raise ValueError(f"need N > M >= 1 so that log(N/M) > 0, got M={M}, N={N}")
    if not 0 < mu < 1 / math.sqrt(2):
        raise ValueError(f"mu must lie in (0, 1/sqrt(2)), got {mu}")
    _check_p(p)
    t = mu**2 * _log(N / M, log_base) / M
    return t ** (1.0 / p - 0.5) / constant_cp(p, log_base)


def io_constants(p, delta, mu, C2p, log_base=LOG_BASE):
    """Constants of the (2,2)-in-probability error bounds.

    ``C2p`` is the (2, p) instance optimality constant of the decoder.
    """
    _check_p(p)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if not C2p > 0:
        raise ValueError(f"C2p must be positive, got {C2p}")
    gamma = mu ** (2.0 / p - 1.0) / constant_cp(p, log_base)
    C3 = 1.0 / gamma + (gamma * (1.0 - delta) + 1.0) / ((1.0 - delta**2) * gamma)
    spread = 2.0 ** (1.0 / p - 1.0)
    return IoConstants(
        gamma_p=gamma,
        C3=C3,
        C_case_i=C3 + spread * C2p * (1.0 / gamma + 1.0),
        C_case_iii=1.0 + C3 + spread * C2p / gamma,
    )


def _profile_map(delta_profile):
    table = {}
    for item in delta_profile:
        if hasattr(item, "delta_lower"):
            size, delta = item.S, item.delta_lower
        else:
            size, delta = item
        table[int(size)] = float(delta)
    return table


def certify_recovery(delta_profile, S, p, k=None):
    """Search k = n/S (n > S) for which P(k, S, p) holds under a delta profile.

    Parameters
    ----------
    delta_profile : iterable
        ``(size, delta)`` pairs or :class:`~lprecover.rip.RipEstimate` objects.
    S : int
        Sparsity level to certify.
    p : float
        Exponent in (0, 1].
    k : float, optional
        Evaluate only this k (``k * S`` must be an integer) instead of searching.

    Returns
    -------
    Certificate
        The first (smallest) k that satisfies the condition, with C1 and C2.
        If none does, ``satisfied`` is False and the reported k is the
        candidate that came closest.
    """
    S = int(S)
    if S < 1:
        raise ValueError(f"S must be positive, got {S}")
    _check_p(p)
    table = _profile_map(delta_profile)
    if k is not None:
        n = k * S
        if abs(n - round(n)) > 1e-9 or round(n) <= S:
            raise ValueError(f"k*S must be an integer above S, got k={k}, S={S}")
        candidates = [int(round(n))]
    else:
        top = max(table, default=0)
        candidates = list(range(S + 1, top - S + 1))
    candidates = [n for n in candidates if n in table and n + S in table]
    if not candidates:
        raise ProfileTooShortError(
            f"profile (sizes up to {max(table, default=0)}) has no pair (kS, (k+1)S) with k > 1 "
            f"for S={S}; it must reach at least size {2 * S + 1}"
        )
    best = None
    for n in candidates:
        kk = n / S
        d_k, d_k1 = table[n], table[n + S]
        if check_condition_P(d_k, d_k1, kk, p) and d_k1 < 1:
            return Certificate(p=p, S=S, k=kk, delta_kS=d_k, delta_k1S=d_k1, satisfied=True,
                               C1=constant_c1(p, kk, d_k, d_k1),
                               C2=constant_c2(p, kk, d_k, d_k1))
        power = kk ** (2.0 / p - 1.0)
        margin = (power - 1.0) - (d_k + power * d_k1)
        if best is None or margin > best[0]:
            best = (margin, kk, d_k, d_k1)
    _, kk, d_k, d_k1 = best
    return Certificate(p=p, S=S, k=kk, delta_kS=d_k, delta_k1S=d_k1, satisfied=False)
