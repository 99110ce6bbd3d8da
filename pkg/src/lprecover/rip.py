"""Restricted isometry constants.

``delta_S`` is the smallest delta with
``(1 - delta)|c|^2 <= |Ac|^2 <= (1 + delta)|c|^2`` for all S-sparse ``c``.
For a fixed support T that deviation is read off the extreme eigenvalues of
the Gram matrix ``A_T^T A_T``; the constant is the worst case over supports.
Sampling supports gives a lower bound, enumerating all of them the exact value.
"""
import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import check_seed, stream
from .ensembles import as_array
from .errors import TooLargeForExhaustiveError

__all__ = [
    "EXHAUSTIVE_CAP",
    "RipEstimate",
    "support_deviation",
    "rip_delta_exact",
    "rip_delta_mc",
    "rip_profile",
]

EXHAUSTIVE_CAP = 2_000_000
_KEY_SUPPORTS = 20
# bound on K*S*S floats held per batch of Gram matrices
_BATCH_FLOATS = 4_000_000


@dataclass(frozen=True)
class RipEstimate:
    S: int
    delta_lower: float
    trials: int
    method: str
    seed: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict())


def _check_S(A, S):
    S = int(S)
    M, N = A.shape
    if not 1 <= S <= min(M, N):
        raise ValueError(f"sparsity level S={S} must satisfy 1 <= S <= min(M, N) = {min(M, N)}")
    return S


def _batch_deviation(gram, supports):
    """Worst deviation over the rows of ``supports`` (K x S index array)."""
    worst = 0.0
    K, S = supports.shape
    step = max(1, _BATCH_FLOATS // (S * S))
    for lo in range(0, K, step):
        idx = supports[lo:lo + step]
        sub = gram[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(sub)
        dev = np.maximum(ev[:, -1] - 1.0, 1.0 - ev[:, 0])
        worst = max(worst, float(dev.max()))
    return worst


def support_deviation(A, support):
    """``max(lambda_max - 1, 1 - lambda_min)`` of the Gram matrix of ``A[:, support]``."""
    A = as_array(A)
    cols = A[:, np.asarray(support, dtype=np.intp)]
    ev = np.linalg.eigvalsh(cols.T @ cols)
    return float(max(ev[-1] - 1.0, 1.0 - ev[0]))


def rip_delta_exact(A, S, cap=EXHAUSTIVE_CAP):
    """Exact delta_S by enumerating all C(N, S) supports.

    Raises
    ------
    TooLargeForExhaustiveError
        If C(N, S) exceeds ``cap``; use :func:`rip_delta_mc` instead.
    """
    A = as_array(A)
    S = _check_S(A, S)
    N = A.shape[1]
    count = math.comb(N, S)
    if count > cap:
        raise TooLargeForExhaustiveError(
            f"C({N}, {S}) = {count} supports exceeds the exhaustive cap of {cap}; "
            "use rip_delta_mc for a Monte-Carlo lower bound"
        )
    gram = A.T @ A
    worst = 0.0
    step = max(1, _BATCH_FLOATS // (S * S))
    combos = itertools.combinations(range(N), S)
    while True:
        chunk = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, step)),
                            dtype=np.intp)
        if chunk.size == 0:
            break
        worst = max(worst, _batch_deviation(gram, chunk.reshape(-1, S)))
    return worst


def rip_delta_mc(A, S, trials, seed):
    """Monte-Carlo lower bound on delta_S from ``trials`` uniformly random supports.

    Supports are drawn from the stream keyed by ``(seed, S)`` before any
    eigenvalue work, so the estimate does not depend on evaluation order.
    """
    A = as_array(A)
    S = _check_S(A, S)
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    seed = check_seed(seed)
    N = A.shape[1]
    rng = stream(seed, _KEY_SUPPORTS, S)
    supports = np.argsort(rng.random((trials, N)), axis=1)[:, :S]
    delta = _batch_deviation(A.T @ A, supports)
    return RipEstimate(S=S, delta_lower=delta, trials=trials, method="monte_carlo", seed=seed)


def rip_profile(A, S_max, trials, seed):
    """MC estimates for S = 1..S_max, made nondecreasing by a running maximum.

    The true delta_S is nondecreasing in S, so raising an estimate to the
    running maximum only tightens the lower bound.
    """
    A = as_array(A)
    S_max = _check_S(A, S_max)
    out = []
    running = 0.0
    for S in range(1, S_max + 1):
        est = rip_delta_mc(A, S, trials, seed)
        running = max(running, est.delta_lower)
        out.append(RipEstimate(S=S, delta_lower=running, trials=est.trials,
                               method=est.method, seed=est.seed))
    return out
