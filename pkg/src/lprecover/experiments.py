"""Experiment harness: condition curves, phase diagrams, robustness sweeps, SNR grids.

Every random draw is keyed by the experiment seed plus the indices of the
cell it belongs to, so outputs do not depend on execution order or on the
number of worker threads. Results are written as CSV with a JSON sidecar
holding the full configuration.
"""
import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._rng import check_seed, derive_seed, stream
from .certify import LOG_BASE, certify_recovery, threshold_f, threshold_g
from .decode import AffineProjector, SolveOptions, decode_lp
from .ensembles import (gen_gaussian, gen_powerlaw_signal, gen_sparse_signal, gen_uniform_sphere,
                        place_mixed)
from .errors import NumericalError, ProfileTooShortError
from .metrics import snr_db
from .rip import rip_profile

__all__ = [
    "PRESETS",
    "PhaseGrid",
    "SweepTable",
    "ConditionCurves",
    "SnrGrid",
    "run_condition_curves",
    "run_theoretical_phase",
    "phase_matrix",
    "run_phase_diagram",
    "run_robustness_sweep",
    "run_snr_grid",
    "linear_fit",
    "write_result",
]

log = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 1e-3

# stream keys
_KEY_PHASE_A = 40
_KEY_PHASE_X = 41
_KEY_SWEEP_A = 30
_KEY_SWEEP_COEF = 31
_KEY_SWEEP_TRIAL = 32
_KEY_SNR_A = 50


def _grid(start, step, stop):
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


PRESETS = {
    "desk": {
        "fig1": {"p_list": [0.1, 0.5, 0.9], "m_grid": _grid(2, 0.1, 16)},
        "fig2": {"M": 50, "N": 150, "S_range": list(range(2, 26, 2)),
                 "p_range": [0.25, 0.5, 0.75, 1.0], "trials": 10, "rip_trials": 200},
        "fig3": {"M": 50, "N": 100, "S": 10, "lambda_axis": _grid(0, 0.1, 1),
                 "p_list": [0.5, 1.0], "trials": 10},
        "fig4": {"M": 50, "N": 100, "q_list": [0.4, 0.7, 0.9],
                 "p_list": _grid(0.3, 0.1, 1.0), "num_matrices": 10},
    },
    "paper": {
        "fig1": {"p_list": [0.1, 0.5, 0.9], "m_grid": _grid(2, 0.1, 16)},
        "fig2": {"M": 100, "N": 300, "S_range": list(range(1, 50)),
                 "p_range": _grid(0.1, 0.1, 1.0), "trials": 50, "rip_trials": 1000},
        "fig3": {"M": 100, "N": 300, "S": 40, "lambda_axis": _grid(0, 0.1, 1),
                 "p_list": _grid(0.1, 0.1, 1.0), "trials": 10},
        "fig4": {"M": 100, "N": 200, "q_list": _grid(0.3, 0.1, 0.9),
                 "p_list": _grid(0.1, 0.1, 1.0), "num_matrices": 50},
    },
}


def _pmap(fn, tasks, threads):
    """Ordered map, optionally on a thread pool (kernels release the GIL)."""
    threads = 1 if threads is None else int(threads)
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _stamp(kind, seed, solver_opts=None, **config):
    out = {"experiment": kind, "seed": seed, "log_base": LOG_BASE, "version": __version__}
    if solver_opts is not None:
        out["solver_options"] = asdict(solver_opts)
    out.update(config)
    return out


@dataclass
class ConditionCurves:
    rows: list
    config: dict = field(default_factory=dict)
    name = "fig1_conditions"
    header = ("p", "m", "f", "g")


@dataclass
class PhaseGrid:
    S_axis: list
    p_axis: list
    cells: np.ndarray
    trials_per_cell: int
    success_threshold: float
    seed: int
    kind: str = "empirical"
    config: dict = field(default_factory=dict)
    header = ("S", "p", "value")

    @property
    def name(self):
        return f"fig2_{self.kind}"

    @property
    def rows(self):
        out = []
        for i, S in enumerate(self.S_axis):
            for j, p in enumerate(self.p_axis):
                v = self.cells[i, j]
                out.append((S, p, bool(v) if self.kind == "theoretical" else float(v)))
        return out

    def rate(self, S, p):
        return self.cells[self.S_axis.index(S), self.p_axis.index(p)]


@dataclass
class SweepTable:
    lambda_axis: list
    p_axis: list
    mode: str
    mean_error: np.ndarray
    trials: int
    seed: int
    config: dict = field(default_factory=dict)
    name = "fig3_sweep"
    header = ("mode", "lambda", "p", "mean_error")

    @property
    def rows(self):
        return [(self.mode, lam, p, float(self.mean_error[i, j]))
                for i, lam in enumerate(self.lambda_axis) for j, p in enumerate(self.p_axis)]


@dataclass
class SnrGrid:
    q_axis: list
    p_axis: list
    mean_snr_db: np.ndarray
    num_matrices: int
    seed: int
    config: dict = field(default_factory=dict)
    name = "fig4_snr"
    header = ("q", "p", "mean_snr_db")

    @property
    def rows(self):
        return [(q, p, float(self.mean_snr_db[i, j]))
                for i, q in enumerate(self.q_axis) for j, p in enumerate(self.p_axis)]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_result(result, out_dir, name=None):
    """Write ``<name>.csv`` and the ``<name>.json`` config sidecar; return both paths."""
    name = name or result.name
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, name + ".csv")
    json_path = os.path.join(out_dir, name + ".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.header)
        for row in result.rows:
            w.writerow([_fmt(v) for v in row])
    with open(json_path, "w") as fh:
        json.dump(result.config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def run_condition_curves(p_list, m_grid):
    """Rows ``(p, m, f(m, p), g(m, p))`` comparing the two sufficient conditions."""
    rows = [(p, m, threshold_f(m, p), threshold_g(m, p)) for p in p_list for m in m_grid]
    return ConditionCurves(rows, _stamp("fig1", None, p_list=list(p_list), m_grid=list(m_grid)))


def run_theoretical_phase(A, S_range, p_range, trials, seed):
    """Which (S, p) cells the measured delta profile certifies.

    One Monte-Carlo profile up to order min(M, N) is shared by all cells.
    Cells whose S is too large for the profile are False.
    """
    seed = check_seed(seed)
    M, N = A.shape
    profile = rip_profile(A, min(M, N), trials, seed)
    cells = np.zeros((len(S_range), len(p_range)), dtype=bool)
    for i, S in enumerate(S_range):
        for j, p in enumerate(p_range):
            try:
                cells[i, j] = certify_recovery(profile, S, p).satisfied
            except ProfileTooShortError:
                cells[i, j] = False
    config = _stamp("fig2_theoretical", seed, M=M, N=N, ensemble=getattr(A, "ensemble", "external"),
                    S_range=list(S_range), p_range=list(p_range), rip_trials=trials,
                    delta_profile=[e.delta_lower for e in profile])
    return PhaseGrid(list(S_range), list(p_range), cells, trials, None, seed, "theoretical", config)


def phase_matrix(M, N, seed):
    """The Gaussian matrix used by :func:`run_phase_diagram` for this seed."""
    return gen_gaussian(M, N, derive_seed(seed, _KEY_PHASE_A))


def run_phase_diagram(M, N, S_range, p_range, trials, success_threshold=SUCCESS_THRESHOLD, seed=0,
                      solver_opts=None, threads=1):
    """Empirical recovery rate of decode_lp over a (S, p) grid.

    A single Gaussian matrix serves the whole grid. Signals are keyed by
    ``(seed, S, trial)`` so every p sees the same instances.
    """
    seed = check_seed(seed)
    if int(trials) < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if any(S < 1 for S in S_range):
        raise ValueError("S_range entries must be positive")
    base = solver_opts or SolveOptions()
    A = phase_matrix(M, N, seed)
    proj = AffineProjector(A)

    def one(task):
        S, p, t = task
        x = gen_sparse_signal(N, S, derive_seed(seed, _KEY_PHASE_X, S, t))
        try:
            rep = decode_lp(A, A @ x, base, projector=proj, p=p)
        except NumericalError as exc:
            log.warning("S=%d p=%g trial=%d: solver failure: %s", S, p, t, exc)
            return False
        return np.linalg.norm(rep.solution - x) <= success_threshold * np.linalg.norm(x)

    tasks = [(S, p, t) for S in S_range for p in p_range for t in range(trials)]
    ok = np.array(_pmap(one, tasks, threads), dtype=float)
    cells = ok.reshape(len(S_range), len(p_range), trials).mean(axis=2)
    config = _stamp("fig2_empirical", seed, base, M=M, N=N, ensemble="gaussian",
                    S_range=list(S_range), p_range=list(p_range), trials=int(trials),
                    success_threshold=success_threshold)
    return PhaseGrid(list(S_range), list(p_range), cells, int(trials), success_threshold, seed,
                     "empirical", config)


def run_robustness_sweep(M, N, S, mode, lambda_axis, p_list, trials, seed, solver_opts=None,
                         threads=1):
    """Mean l2 reconstruction error of decode_lp as compressibility or noise grows.

    One uniform-sphere matrix serves all trials. Unit-norm head and tail
    coefficients are drawn once; each trial draws a new support T (and, in
    noise mode, a unit noise vector e) and keeps them for every lambda.

    ``mode="compressible"``: ``x = x_T + lam z_{T^c}``, error ``|Delta_p(Ax) - x|``.
    ``mode="noise"``: ``b = A x_T + lam e``, error ``|Delta_p(b) - x_T|``.
    """
    if mode not in ("compressible", "noise"):
        raise ValueError(f"mode must be 'compressible' or 'noise', got {mode!r}")
    seed = check_seed(seed)
    if not 1 <= S < N:
        raise ValueError(f"need 1 <= S < N, got S={S}, N={N}")
    if len(lambda_axis) == 0 or lambda_axis[0] != 0 or min(lambda_axis) < 0:
        raise ValueError("lambda_axis must start at 0 and be nonnegative")
    base = solver_opts or SolveOptions()
    A = gen_uniform_sphere(M, N, derive_seed(seed, _KEY_SWEEP_A))
    proj = AffineProjector(A)
    rng = stream(seed, _KEY_SWEEP_COEF, N, S)
    head = rng.standard_normal(S)
    head /= np.linalg.norm(head)
    tail = rng.standard_normal(N - S)
    tail /= np.linalg.norm(tail)
    setups = []
    for t in range(trials):
        r = stream(seed, _KEY_SWEEP_TRIAL, t)
        support = np.sort(r.choice(N, size=S, replace=False))
        e = r.standard_normal(M)
        setups.append((support, e / np.linalg.norm(e)))

    def one(task):
        li, p, t = task
        lam = lambda_axis[li]
        support, e = setups[t]
        if mode == "compressible":
            x = place_mixed(N, support, head, tail, lam)
            b = A @ x
        else:
            x = place_mixed(N, support, head, tail, 0.0)
            b = A @ x + lam * e
        rep = decode_lp(A, b, base, projector=proj, p=p)
        return np.linalg.norm(rep.solution - x)

    tasks = [(li, p, t) for li in range(len(lambda_axis)) for p in p_list for t in range(trials)]
    err = np.array(_pmap(one, tasks, threads)).reshape(len(lambda_axis), len(p_list), trials)
    config = _stamp("fig3", seed, base, M=M, N=N, S=S, mode=mode, ensemble="uniform_sphere",
                    lambda_axis=list(lambda_axis), p_list=list(p_list), trials=int(trials),
                    coefficients="fixed across trials",
                    support_and_noise="redrawn per trial")
    return SweepTable(list(lambda_axis), list(p_list), mode, err.mean(axis=2), int(trials), seed,
                      config)


def run_snr_grid(M, N, q_list, p_list, num_matrices, seed, solver_opts=None, threads=1):
    """Mean reconstruction SNR (dB) of power-law signals over uniform-sphere matrices.

    Matrix j is keyed by ``(seed, j)`` and reused for every (q, p).
    """
    seed = check_seed(seed)
    if any(not 0 < q < 1 for q in q_list):
        raise ValueError("q values must lie in (0, 1)")
    base = solver_opts or SolveOptions()
    mats = [gen_uniform_sphere(M, N, derive_seed(seed, _KEY_SNR_A, j)) for j in range(num_matrices)]
    projs = [AffineProjector(A) for A in mats]
    signals = [gen_powerlaw_signal(N, q) for q in q_list]

    def one(task):
        qi, p, j = task
        x = signals[qi]
        rep = decode_lp(mats[j], mats[j] @ x, base, projector=projs[j], p=p)
        return snr_db(x, rep.solution)

    tasks = [(qi, p, j) for qi in range(len(q_list)) for p in p_list for j in range(num_matrices)]
    snr = np.array(_pmap(one, tasks, threads)).reshape(len(q_list), len(p_list), num_matrices)
    config = _stamp("fig4", seed, base, M=M, N=N, ensemble="uniform_sphere", q_list=list(q_list),
                    p_list=list(p_list), num_matrices=int(num_matrices))
    return SnrGrid(list(q_list), list(p_list), snr.mean(axis=2), int(num_matrices), seed, config)


def linear_fit(x, y):
    """Least-squares line through (x, y): returns ``(slope, intercept, r_squared)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
