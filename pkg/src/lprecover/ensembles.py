"""Random measurement matrices and test signals.

All generators are pure functions of their arguments and a uint64 seed.
Matrices can be stored in the little-endian ``.lprm`` binary format::

    b"LPRM" | uint32 version=1 | uint32 M | uint32 N | uint8 ensemble | uint64 seed
    | M*N float64, row-major

or exported as plain CSV.
"""
import struct
from dataclasses import dataclass, field

import numpy as np

from ._rng import check_seed, stream

__all__ = [
    "ENSEMBLES",
    "MeasurementMatrix",
    "gen_gaussian",
    "gen_uniform_sphere",
    "gen_sparse_signal",
    "gen_powerlaw_signal",
    "gen_mixed_signal",
    "place_mixed",
    "as_array",
    "write_lprm",
    "read_lprm",
    "write_matrix_csv",
    "read_matrix_csv",
]

ENSEMBLES = ("gaussian", "uniform_sphere", "external")
_ENSEMBLE_CODE = {name: code for code, name in enumerate(ENSEMBLES)}

_MAGIC = b"LPRM"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIBQ")

# stream keys, one per generator so equal seeds never share draws
_KEY_GAUSSIAN = 0
_KEY_SPHERE = 1
_KEY_SPARSE = 10
_KEY_MIXED = 11


@dataclass(frozen=True)
class MeasurementMatrix:
    """A dense real M x N matrix plus the provenance needed to regenerate it."""

    entries: np.ndarray
    ensemble: str = "external"
    seed: int = 0
    _hash: int = field(default=0, repr=False, compare=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64, order="C", copy=True)
        if entries.ndim != 2 or min(entries.shape) < 1:
            raise ValueError(f"entries must be a non-empty 2-D array, got shape {entries.shape}")
        if self.ensemble not in _ENSEMBLE_CODE:
            raise ValueError(f"unknown ensemble {self.ensemble!r}; expected one of {ENSEMBLES}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "seed", check_seed(self.seed))

    @property
    def M(self):
        return self.entries.shape[0]

    @property
    def N(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __matmul__(self, other):
        return self.entries @ other


def as_array(A):
    """Return the float64 matrix behind ``A`` (a MeasurementMatrix or array-like)."""
    if isinstance(A, MeasurementMatrix):
        return A.entries
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    return A


def _check_dims(M, N):
    M, N = int(M), int(N)
    if M < 1 or N < 1:
        raise ValueError(f"matrix dimensions must be positive, got M={M}, N={N}")
    return M, N


def gen_gaussian(M, N, seed):
    """I.i.d. N(0, 1/M) entries, i.e. standard deviation 1/sqrt(M).

    With this scaling every column has expected squared norm 1.
    """
    M, N = _check_dims(M, N)
    rng = stream(seed, _KEY_GAUSSIAN, M, N)
    entries = rng.standard_normal((M, N)) / np.sqrt(M)
    return MeasurementMatrix(entries, "gaussian", seed)


def gen_uniform_sphere(M, N, seed):
    """Columns drawn independently and uniformly from the unit sphere in R^M."""
    M, N = _check_dims(M, N)
    rng = stream(seed, _KEY_SPHERE, M, N)
    entries = rng.standard_normal((M, N))
    norms = np.linalg.norm(entries, axis=0)
    # a zero Gaussian column has probability zero; guard anyway
    norms[norms == 0] = 1.0
    entries /= norms
    return MeasurementMatrix(entries, "uniform_sphere", seed)


def gen_sparse_signal(N, S, seed):
    """S-sparse vector with a uniformly random support and standard normal values."""
    N, S = int(N), int(S)
    if not 1 <= S <= N:
        raise ValueError(f"need 1 <= S <= N, got S={S}, N={N}")
    rng = stream(seed, _KEY_SPARSE, N, S)
    support = np.sort(rng.choice(N, size=S, replace=False))
    values = rng.standard_normal(S)
    # exact zeros have probability zero but would break the exactly-S contract
    values[values == 0.0] = 1.0
    x = np.zeros(N)
    x[support] = values
    return x


def gen_powerlaw_signal(N, q):
    """Nonincreasing positive signal x(j) = c * j**(-1/q), scaled to unit l2 norm."""
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if not 0 < q <= 1:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    x = np.arange(1, N + 1, dtype=np.float64) ** (-1.0 / q)
    return x / np.linalg.norm(x)


def place_mixed(N, support, head, tail, lam):
    """Put ``head`` on ``support`` and ``lam * tail`` on its complement.

    ``head`` and ``tail`` are used as given (in index order), which lets a
    caller keep coefficient values fixed while moving the support around.
    """
    support = np.sort(np.asarray(support, dtype=np.intp))
    complement = np.setdiff1d(np.arange(N), support, assume_unique=True)
    head = np.asarray(head, dtype=np.float64)
    tail = np.asarray(tail, dtype=np.float64)
    if head.shape != (support.size,) or tail.shape != (complement.size,):
        raise ValueError("head/tail lengths must match the support and its complement")
    x = np.zeros(N)
    x[support] = head
    x[complement] = lam * tail
    return x


def gen_mixed_signal(N, S, lam, seed):
    """Return ``(x, T)`` with ``x = x_T + lam * z_{T^c}``.

    ``x_T`` and ``z_{T^c}`` are Gaussian vectors normalized to unit l2 norm on
    a random size-S support ``T`` and on its complement. The best S-term l2
    error of ``x`` equals ``lam`` only when ``lam * max|z| <= min|x_T|``;
    measure it with :func:`lprecover.metrics.best_s_term_error` rather than
    assuming it.
    """
    N, S = int(N), int(S)
    if not 1 <= S < N:
        raise ValueError(f"need 1 <= S < N, got S={S}, N={N}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    rng = stream(seed, _KEY_MIXED, N, S)
    support = np.sort(rng.choice(N, size=S, replace=False))
    head = rng.standard_normal(S)
    tail = rng.standard_normal(N - S)
    head /= np.linalg.norm(head)
    tail /= np.linalg.norm(tail)
    return place_mixed(N, support, head, tail, lam), support


def write_lprm(path, A):
    if not isinstance(A, MeasurementMatrix):
        A = MeasurementMatrix(A)
    header = _HEADER.pack(_MAGIC, _VERSION, A.M, A.N, _ENSEMBLE_CODE[A.ensemble], A.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(A.entries.astype("<f8").tobytes(order="C"))


def read_lprm(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, M, N, code, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if code >= len(ENSEMBLES):
        raise ValueError(f"{path}: unknown ensemble code {code}")
    expected = _HEADER.size + 8 * M * N
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    entries = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(M, N)
    return MeasurementMatrix(entries, ENSEMBLES[code], seed)


def write_matrix_csv(path, A):
    np.savetxt(path, as_array(A), delimiter=",", fmt="%.17g")


def read_matrix_csv(path):
    entries = np.loadtxt(path, delimiter=",", ndmin=2)
    return MeasurementMatrix(entries, "external", 0)
