"""Shared ADMM scaffolding: parameter bundle, iteration driver, history.

The three problems (denoising, segmentation, optical flow) plug into the
same driver through a small duck-typed state protocol:

    state.iterate()            run one full update sweep (weights first,
                               then r, z, u, v, w in the documented order)
    state.primal_residual()    RMS of u - v over all scalar entries
    state.energy()             current model energy (finite unless diverged)
    state.mean_lambda()        mean fidelity weight, in [0, 1]
    state.solution()           object handed back to the caller

The driver itself is single-threaded over iterations; any parallelism
lives inside the per-pixel updates and is bitwise deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import AdaptiveParams


@dataclass
class SolverParams:
    """Knobs shared by every ADMM instance.

    mu and eta are the Huber thresholds of the data and regularizer
    terms, theta the scalar augmentation weight.  Iteration control:
    the driver stops at max_iters or when the primal residual drops to
    tol_primal at a checkpoint (every check_every iterations).
    gs_sweeps bounds the inner Gauss-Seidel passes of each v-update.
    """

    mu: float
    eta: float
    theta: float
    adaptive: AdaptiveParams
    max_iters: int = 300
    tol_primal: float = 1e-6
    check_every: int = 1
    gs_sweeps: int = 20

    def __post_init__(self):
        if self.mu <= 0 or self.eta <= 0:
            raise ValueError("Huber thresholds mu and eta must be positive")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.tol_primal <= 0:
            raise ValueError("tol_primal must be positive")
        if self.check_every < 1:
            raise ValueError("check_every must be a positive integer")
        if self.gs_sweeps < 1:
            raise ValueError("gs_sweeps must be a positive integer")


@dataclass
class IterationRecord:
    iter: int
    energy: float
    primal_residual: float
    mean_lambda: float


class DivergenceError(RuntimeError):
    """Raised when the tracked energy stops being finite."""

    def __init__(self, iteration: int):
        super().__init__("divergence detected at iteration %d" % iteration)
        self.iteration = iteration


def rms(a: np.ndarray) -> float:
    """Root mean square over all entries of an array."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.sqrt(np.mean(a * a)))


def run_admm(state, params: SolverParams, start_iter: int = 0, on_check=None):
    """Drive a problem state to convergence or the iteration cap.

    Returns (solution, history).  history holds one IterationRecord per
    checkpoint (every check_every-th iteration, 1-based, offset by
    start_iter so chained runs keep a global counter).  Early stop only
    happens at a checkpoint with primal_residual <= tol_primal; a
    non-finite energy at a checkpoint raises DivergenceError.  on_check,
    if given, is called as on_check(state, record) at every checkpoint.
    """
    history: list[IterationRecord] = []
    for k in range(1, params.max_iters + 1):
        state.iterate()
        if k % params.check_every != 0:
            continue
        it = start_iter + k
        energy = state.energy()
        if not math.isfinite(energy):
            raise DivergenceError(it)
        residual = state.primal_residual()
        record = IterationRecord(it, energy, residual, state.mean_lambda())
        history.append(record)
        if on_check is not None:
            on_check(state, record)
        if residual <= params.tol_primal:
            break
    return state.solution(), history


def history_to_csv(history) -> str:
    """Render a history as CSV (header + one row per record).

    Floats use repr so the file round-trips exactly; the format never
    depends on locale.
    """
    lines = ["iter,energy,primal_residual,mean_lambda"]
    for rec in history:
        lines.append(
            "%d,%r,%r,%r" % (rec.iter, rec.energy, rec.primal_residual, rec.mean_lambda)
        )
    return "\n".join(lines) + "\n"


def _neighbor_sum(v: np.ndarray) -> np.ndarray:
    """Sum of in-bounds 4-neighbors, missing neighbors contributing 0.

    Pairwise summation (horizontal pair plus vertical pair) so that for
    a constant field the result rounds identically to count * value,
    which keeps constants exact fixed points of the screened solver.
    """
    left = np.zeros_like(v)
    left[:, 1:] = v[:, :-1]
    right = np.zeros_like(v)
    right[:, :-1] = v[:, 1:]
    up = np.zeros_like(v)
    up[1:, :] = v[:-1, :]
    down = np.zeros_like(v)
    down[:-1, :] = v[1:, :]
    return (left + right) + (up + down)


def _neighbor_count(shape) -> np.ndarray:
    h, w = shape
    c = np.full((h, w), 4.0)
    c[0, :] -= 1.0
    c[-1, :] -= 1.0
    c[:, 0] -= 1.0
    c[:, -1] -= 1.0
    return c


def screened_solve(rhs: np.ndarray, xi: np.ndarray, v0: np.ndarray, sweeps: int) -> np.ndarray:
    """Gauss-Seidel sweeps for (1 - xi * laplacian) v = rhs.

    Five-point Laplacian with replicate (Neumann) boundary, so boundary
    pixels simply see fewer neighbors.  Red-black ordering: each half
    sweep updates one checkerboard color from the other, which makes the
    result independent of traversal order and trivially parallel.

    The update is written as v = rhs + xi*(T - c*rhs)/(1 + xi*c) with T
    the neighbor sum and c the neighbor count: algebraically identical
    to (rhs + xi*T)/(1 + xi*c) but exact (bitwise) at xi = 0 and on
    constant fixed points.
    """
    v = np.array(v0, dtype=np.float64, copy=True)
    h, w = v.shape
    c = _neighbor_count((h, w))
    parity = (np.add.outer(np.arange(h), np.arange(w)) % 2) == 0
    masks = (parity, ~parity)
    cr = c * rhs
    denom = 1.0 + xi * c
    for _ in range(sweeps):
        for mask in masks:
            t = _neighbor_sum(v)
            vnew = rhs + xi * (t - cr) / denom
            v[mask] = vnew[mask]
    return v
