"""Convex-relaxed multi-label segmentation with adaptive weights.

Each label i carries a relaxed membership u_i in [0, 1], a region
intensity c_i, and its own split/dual/auxiliary fields.  One iteration
sweeps the labels in ascending order; for label i:

    d_i          |r_i| + (f - c_i - r_i)^2 / (2 mu)       (previous c, r)
    nu, lambda   from the residual d_i * u_i
    c_i          sum(lambda_i (f - r_i) u_i) / sum(lambda_i u_i)
    r_i          shrink(f - c_i | mu)
    z_i          vector shrink of grad v_i
    u_i          max(0, v_i - w_i - (lambda_i/theta) d_i
                        - (tau_excl/theta) sum_{j != i} u_j)

then all v_i solve their screened systems and the stack is projected
onto sum_i v_i = 1, and finally w_i += u_i - v_i.  The cross-label sum
in the u-step uses the latest available u_j by default (labels already
updated this iteration contribute their new values); jacobi_labels
freezes the sum at the iteration start instead.

The final labeling is the pixelwise argmax of the memberships.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptive import weight_fields
from .grid import convolve_gaussian, divergence, gradient, scalar_grid
from .prox import huber_vec, project_stack_sum_to_one, shrink, shrink_vec
from .solver import SolverParams, rms, run_admm, screened_solve
from .synth import Splitmix64

DEGENERATE_REGION_WEIGHT = 1e-12


@dataclass
class SegmentParams:
    solver: SolverParams
    n_labels: int
    tau_excl: float = 0.5
    seed: int = 0
    jacobi_labels: bool = False

    def __post_init__(self):
        if self.n_labels < 2:
            raise ValueError("n_labels must be at least 2")
        if self.tau_excl < 0:
            raise ValueError("tau_excl must be nonnegative")


class LabelState:
    """Per-label fields, stacked label-major: u, v, w, r (n,H,W),
    z (n,H,W,2), lam (n,H,W), c (n,).  Degenerate region updates are
    logged as (iteration, label) pairs."""

    def __init__(self, f, u, v, w, r, z, lam, c):
        self.f = f
        self.u = u
        self.v = v
        self.w = w
        self.r = r
        self.z = z
        self.lam = lam
        self.c = c
        self.iteration = 0
        self.degenerate_events: list[tuple[int, int]] = []

    @property
    def n_labels(self) -> int:
        return self.u.shape[0]


def _indicator_state(f: np.ndarray, assignment: np.ndarray, n_labels: int, c) -> LabelState:
    u = np.zeros((n_labels,) + f.shape, dtype=np.float64)
    for i in range(n_labels):
        u[i] = assignment == i
    return LabelState(
        f=f,
        u=u,
        v=u.copy(),
        w=np.zeros_like(u),
        r=np.zeros_like(u),
        z=np.zeros((n_labels,) + f.shape + (2,), dtype=np.float64),
        lam=np.ones_like(u),
        c=np.asarray(c, dtype=np.float64),
    )


def init_labels(f: np.ndarray, n_labels: int, seed: int) -> LabelState:
    """Uniformly random label per pixel; memberships start as indicators.

    c_i is the mean of f over label i's pixels, falling back to the
    global mean for labels that drew no pixels.
    """
    if n_labels < 2:
        raise ValueError("n_labels must be at least 2")
    f = scalar_grid(f)
    h, w = f.shape
    assignment = Splitmix64(seed).integers(h * w, n_labels).reshape(h, w)
    c = np.empty(n_labels, dtype=np.float64)
    global_mean = float(f.mean())
    for i in range(n_labels):
        mask = assignment == i
        c[i] = float(f[mask].mean()) if mask.any() else global_mean
    return _indicator_state(f, assignment, n_labels, c)


def _lloyd_1d(values: np.ndarray, centers: np.ndarray, iters: int = 50) -> np.ndarray:
    """Plain 1-D k-means refinement; a center whose cluster empties is
    reseeded at the value farthest from all surviving centers."""
    centers = centers.astype(np.float64).copy()
    for _ in range(iters):
        dist = np.abs(values[None, :] - centers[:, None])
        nearest = np.argmin(dist, axis=0)
        moved = 0.0
        for i in range(len(centers)):
            member = values[nearest == i]
            if member.size:
                new = member.mean()
            else:
                new = values[np.argmax(np.min(dist, axis=0))]
            moved = max(moved, abs(new - centers[i]))
            centers[i] = new
        if moved < 1e-12:
            break
    return np.sort(centers)


def warm_start_labels(f: np.ndarray, n_labels: int, presmooth_sigma: float = 1.0) -> LabelState:
    """Deterministic intensity warm start: c_i from 1-D k-means on a
    low-pass copy of f (seeded at evenly spaced quantiles), each pixel
    assigned to the c_i nearest its raw value.

    The relaxed iteration cannot separate region intensities that start
    collapsed: under a per-pixel random layout the first c step averages
    intensity-blind memberships, every c_i lands on the global mean and
    the labels stay interchangeable from then on.  Plain quantile
    seeding has the same failure when one gray level holds most of the
    mass, hence the k-means refinement.  The centers come from a
    slightly blurred image so heavy per-region noise cannot drag them
    off their modes, but the assignment uses the raw values: assigning
    on the blurred image would hand every region boundary a thin ring
    of intermediate-level labels, which the solver then has to undo.
    """
    if n_labels < 2:
        raise ValueError("n_labels must be at least 2")
    f = scalar_grid(f)
    fs = convolve_gaussian(f, presmooth_sigma) if presmooth_sigma > 0 else f
    seeds = np.quantile(fs, (np.arange(n_labels) + 0.5) / n_labels)
    c = _lloyd_1d(fs.ravel(), seeds)
    assignment = np.argmin(np.abs(f[None] - c[:, None, None]), axis=0)
    return _indicator_state(f, assignment, n_labels, c)


def misfit(state: LabelState, i: int, mu: float) -> np.ndarray:
    """d_i = |r_i| + (f - c_i - r_i)^2 / (2 mu) at the current fields."""
    return np.abs(state.r[i]) + (state.f - state.c[i] - state.r[i]) ** 2 / (2.0 * mu)


def update_c(state: LabelState, f: np.ndarray, i: int) -> float:
    """Weighted region intensity; keeps the previous value when the
    region weight sum degenerates (empty region)."""
    weights = state.lam[i] * state.u[i]
    den = float(np.sum(weights))
    if den <= DEGENERATE_REGION_WEIGHT:
        state.degenerate_events.append((state.iteration, i))
        return float(state.c[i])
    return float(np.sum(weights * (f - state.r[i]))) / den


def update_r(state: LabelState, f: np.ndarray, i: int, mu: float) -> np.ndarray:
    """r_i = shrink(f - c_i | mu); independent of the membership."""
    return shrink(f - state.c[i], mu)


def update_u(state: LabelState, i: int, params: SegmentParams, u_coupling=None) -> np.ndarray:
    """Membership step: gradient of the linear data and exclusivity
    terms against the augmentation, clipped at zero."""
    sp = params.solver
    if u_coupling is None:
        u_coupling = state.u
    others = np.sum(u_coupling[np.arange(state.n_labels) != i], axis=0)
    d = misfit(state, i, sp.mu)
    u_tilde = (
        state.v[i]
        - state.w[i]
        - (state.lam[i] / sp.theta) * d
        - (params.tau_excl / sp.theta) * others
    )
    return np.maximum(0.0, u_tilde)


def update_v_all(state: LabelState, params: SegmentParams) -> LabelState:
    """Screened solve per label, then projection onto sum_i v_i = 1.

    The solves only read label i's own fields, so solving all labels
    before the joint projection matches solving and projecting in one
    pass over the stack.
    """
    sp = params.solver
    v_new = np.empty_like(state.v)
    for i in range(state.n_labels):
        xi = (1.0 - state.lam[i]) / (sp.eta * sp.theta)
        rhs = state.u[i] + state.w[i] - xi * divergence(state.z[i])
        v_new[i] = screened_solve(rhs, xi, state.v[i], sp.gs_sweeps)
    state.v = project_stack_sum_to_one(v_new)
    return state


def extract_labels(state: LabelState) -> np.ndarray:
    """Pixelwise argmax membership; ties go to the smallest label."""
    return np.argmax(state.u, axis=0).astype(np.int64)


class SegmentState:
    """Driver adapter wrapping a LabelState and its parameters."""

    def __init__(self, f: np.ndarray, params: SegmentParams, state: LabelState | None = None):
        self.f = scalar_grid(f)
        self.params = params
        self.s = state if state is not None else warm_start_labels(self.f, params.n_labels)

    def iterate(self):
        p = self.params
        sp = p.solver
        s = self.s
        s.iteration += 1
        u_ref = s.u.copy() if p.jacobi_labels else s.u
        for i in range(p.n_labels):
            rho = misfit(s, i, sp.mu) * s.u[i]
            s.lam[i], _ = weight_fields(rho, sp.adaptive)
            s.c[i] = update_c(s, self.f, i)
            s.r[i] = update_r(s, self.f, i, sp.mu)
            s.z[i] = shrink_vec(gradient(s.v[i]), sp.eta)
            s.u[i] = update_u(s, i, p, u_ref)
        update_v_all(s, p)
        s.w = s.w + (s.u - s.v)

    def primal_residual(self) -> float:
        return rms(self.s.u - self.s.v)

    def energy(self) -> float:
        p = self.params
        sp = p.solver
        s = self.s
        total = 0.0
        for i in range(p.n_labels):
            d = misfit(s, i, sp.mu)
            total += float(np.sum(s.lam[i] * d * s.u[i]))
            total += float(np.sum((1.0 - s.lam[i]) * huber_vec(gradient(s.v[i]), sp.eta)))
        overlap = (np.sum(s.u, axis=0) ** 2 - np.sum(s.u**2, axis=0)) / 2.0
        return total + p.tau_excl * float(np.sum(overlap))

    def mean_lambda(self) -> float:
        return float(np.mean(self.s.lam))

    def solution(self):
        return self

    def pairwise_overlap(self) -> float:
        """Mean over pixels of sum_{i != j} u_i u_j (both orders)."""
        s = self.s
        overlap = np.sum(s.u, axis=0) ** 2 - np.sum(s.u**2, axis=0)
        return float(np.mean(overlap))


def run_segment(f: np.ndarray, params: SegmentParams, state: LabelState | None = None, on_check=None):
    """Segment f (normalized to [0,1]); returns (labels, LabelState, history)."""
    wrapper = SegmentState(f, params, state=state)
    _, history = run_admm(wrapper, params.solver, on_check=on_check)
    return extract_labels(wrapper.s), wrapper.s, history
