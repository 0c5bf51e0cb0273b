"""Optical flow with the adaptive Huber-Huber model and warp annealing.

The brightness constraint f2(x - (1-tau)u) = f1(x + tau u) is linearized
around a prior field u0: both frames are warped toward each other by the
mix tau, giving a per-pixel linear constraint A . u ~ ft with

    A  = (1 - tau) grad f2w + tau grad f1w     (central differences)
    ft = (f2w - f1w) + A . u0

(the prior is folded into ft so the updates read ft - A . u directly).
tau starts at tau0 (0.5 keeps the energy symmetric in the two frames)
and grows by dtau per inner iteration, clamped to exactly 1 after
ceil((1 - tau0)/dtau) steps; A and ft stay fixed between outer warps.

Inner iterations follow the shared pattern: weights from the explicit
residual, r by scalar shrink, u by a per-pixel 2x2 rank-one solve of
(mu theta I + lambda A A^T) u = mu theta (v - w) + lambda (ft - r) A,
then per component the gradient auxiliary, screened v-solve, and dual
ascent.  The regularizer is per-partial-derivative by default
(anisotropic_reg), or isotropic per component when disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adaptive import weight_fields
from .grid import central_gradient, divergence, gradient, scalar_grid, warp_bilinear
from .prox import huber, huber_vec, shrink, shrink_vec
from .solver import SolverParams, rms, run_admm, screened_solve


@dataclass
class FlowParams:
    solver: SolverParams
    tau0: float = 0.5
    dtau: float = 0.005
    n_warps: int = 10
    pyramid_levels: int = 1
    anisotropic_reg: bool = True
    appendix_gradient: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tau0 <= 1.0:
            raise ValueError("tau0 must lie in [0, 1]")
        if self.dtau < 0:
            raise ValueError("dtau must be nonnegative")
        if self.n_warps < 1:
            raise ValueError("n_warps must be a positive integer")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be a positive integer")


def tau_schedule(tau0: float, dtau: float, k: int) -> float:
    """Warp mix after k inner iterations: min(1, tau0 + k dtau).

    Clamped by step count so the value is exactly 1.0 once
    k >= ceil((1 - tau0)/dtau); dtau = 0 keeps tau0 forever.
    """
    if dtau <= 0.0:
        return tau0
    if k >= math.ceil((1.0 - tau0) / dtau):
        return 1.0
    return min(1.0, tau0 + k * dtau)


def linearize(f1: np.ndarray, f2: np.ndarray, u0: np.ndarray, tau: float):
    """Symmetric warp linearization; returns (A, ft) with ft unfolded.

    f1 is warped by +tau u0 and f2 by -(1-tau) u0; ft is their
    difference and A the tau-mixed central gradient of the warps.
    """
    return _linearize(f1, f2, u0, tau, appendix_gradient=False)


def _linearize(f1, f2, u0, tau, appendix_gradient):
    f1 = scalar_grid(f1)
    f2 = scalar_grid(f2)
    if f1.shape != f2.shape:
        raise ValueError("frames must share a shape")
    f1w = warp_bilinear(f1, u0, scale=tau)
    f2w = warp_bilinear(f2, u0, scale=-(1.0 - tau))
    ft = f2w - f1w
    g1 = central_gradient(f1w)
    g2 = central_gradient(f2w)
    # The mixed-gradient form is the one consistent with the symmetric
    # warp at tau = 0.5; the unmixed variant is kept for comparison.
    if appendix_gradient:
        a = g1 + tau * g2
    else:
        a = (1.0 - tau) * g2 + tau * g1
    return a, ft


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


class FlowState:
    """Velocity ADMM fields plus the frozen linearization (A, ft)."""

    def __init__(self, f1: np.ndarray, f2: np.ndarray, params: FlowParams):
        self.f1 = scalar_grid(f1)
        self.f2 = scalar_grid(f2)
        if self.f1.shape != self.f2.shape:
            raise ValueError("frames must share a shape")
        self.params = params
        shape = self.f1.shape
        self.u = np.zeros(shape + (2,), dtype=np.float64)
        self.v = np.zeros(shape + (2,), dtype=np.float64)
        self.w = np.zeros(shape + (2,), dtype=np.float64)
        self.r = np.zeros(shape, dtype=np.float64)
        self.z1 = np.zeros(shape + (2,), dtype=np.float64)
        self.z2 = np.zeros(shape + (2,), dtype=np.float64)
        self.lam = np.ones(shape, dtype=np.float64)
        self.tau_count = 0
        self.tau = tau_schedule(params.tau0, params.dtau, 0)
        self.A = np.zeros(shape + (2,), dtype=np.float64)
        self.ft = np.zeros(shape, dtype=np.float64)

    def relinearize(self):
        """Re-expand the data term around the current field at the
        current tau; the prior is folded into ft."""
        u0 = self.u.copy()
        a, ft = _linearize(self.f1, self.f2, u0, self.tau, self.params.appendix_gradient)
        self.A = a
        self.ft = ft + _dot(a, u0)

    def iterate(self):
        p = self.params
        sp = p.solver
        au = _dot(self.A, self.u)
        rho = np.abs(self.r) + (self.ft - au - self.r) ** 2 / (2.0 * sp.mu)
        self.lam, _ = weight_fields(rho, sp.adaptive)
        self.r = shrink(self.ft - au, sp.mu)
        self.u = update_u(self, sp)
        update_v_w(self, sp)
        self.tau_count += 1
        self.tau = tau_schedule(p.tau0, p.dtau, self.tau_count)

    def primal_residual(self) -> float:
        return rms(self.u - self.v)

    def energy(self) -> float:
        sp = self.params.solver
        data = self.lam * huber(self.ft - _dot(self.A, self.u), sp.mu)
        if self.params.anisotropic_reg:
            reg = huber(gradient(self.v[..., 0]), sp.eta).sum(axis=-1)
            reg = reg + huber(gradient(self.v[..., 1]), sp.eta).sum(axis=-1)
        else:
            reg = huber_vec(gradient(self.v[..., 0]), sp.eta)
            reg = reg + huber_vec(gradient(self.v[..., 1]), sp.eta)
        return float(np.sum(data) + np.sum((1.0 - self.lam) * reg))

    def mean_lambda(self) -> float:
        return float(np.mean(self.lam))

    def solution(self) -> np.ndarray:
        return self.u


def update_r(state: FlowState, mu: float) -> np.ndarray:
    """r = shrink(ft - A . u | mu)."""
    return shrink(state.ft - _dot(state.A, state.u), mu)


def update_u(state: FlowState, params: SolverParams) -> np.ndarray:
    """Per-pixel rank-one solve of (mu theta I + lambda A A^T) u = b,
    b = mu theta (v - w) + lambda (ft - r) A.

    Written so that lambda = 0 or A = 0 returns v - w bitwise; the
    general case matches a direct 2x2 inversion to machine precision.
    """
    mu_theta = params.mu * params.theta
    base = state.v - state.w
    coeff = state.lam * (state.ft - state.r)
    b = mu_theta * base + coeff[..., None] * state.A
    ab = _dot(state.A, b)
    asq = _dot(state.A, state.A)
    scale = state.lam * ab / (mu_theta * (mu_theta + state.lam * asq))
    return base + ((coeff / mu_theta) - scale)[..., None] * state.A


def update_v_w(state: FlowState, params: SolverParams) -> FlowState:
    """Per velocity component: gradient auxiliary, screened v-solve,
    dual ascent.  The auxiliary shrink is per partial derivative under
    anisotropic_reg, else isotropic on the component's gradient."""
    xi = (1.0 - state.lam) / (params.eta * params.theta)
    zs = []
    for comp in (0, 1):
        g = gradient(state.v[..., comp])
        if state.params.anisotropic_reg:
            zs.append(shrink(g, params.eta))
        else:
            zs.append(shrink_vec(g, params.eta))
    state.z1, state.z2 = zs
    for comp, z in ((0, state.z1), (1, state.z2)):
        rhs = state.u[..., comp] + state.w[..., comp] - xi * divergence(z)
        state.v[..., comp] = screened_solve(rhs, xi, state.v[..., comp], params.gs_sweeps)
    state.w = state.w + (state.u - state.v)
    return state


def _downsample(f: np.ndarray) -> np.ndarray:
    """2x2 block mean; odd trailing rows/columns are dropped."""
    h2, w2 = f.shape[0] // 2, f.shape[1] // 2
    c = f[: 2 * h2, : 2 * w2]
    return (c[0::2, 0::2] + c[0::2, 1::2] + c[1::2, 0::2] + c[1::2, 1::2]) / 4.0


def _upsample_flow(u: np.ndarray, shape) -> np.ndarray:
    """Nearest-neighbor 2x upsampling with doubled magnitudes, padded or
    cropped to the target shape."""
    up = np.repeat(np.repeat(u, 2, axis=0), 2, axis=1) * 2.0
    h, w = shape
    up = up[:h, :w]
    pad_h, pad_w = h - up.shape[0], w - up.shape[1]
    if pad_h or pad_w:
        up = np.pad(up, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
    return up


def _run_warps(f1, f2, params: FlowParams, u_init, start_iter: int, on_check):
    state = FlowState(f1, f2, params)
    if u_init is not None:
        state.u = u_init.astype(np.float64, copy=True)
        state.v = state.u.copy()
    history = []
    it = start_iter
    for _ in range(params.n_warps):
        state.relinearize()
        _, h = run_admm(state, params.solver, start_iter=it, on_check=on_check)
        history.extend(h)
        it += params.solver.max_iters
    return state, history, it


def run_flow(f1: np.ndarray, f2: np.ndarray, params: FlowParams, on_check=None):
    """Estimate the flow from f1 to f2; returns (u, history).

    Outer loop: n_warps re-linearizations, each followed by a full inner
    ADMM run; with pyramid_levels > 1, a coarse-to-fine sweep over 2x
    downscaled frames seeds each finer level.  Iteration numbers in the
    history advance by the per-warp budget even when a warp stops early.
    """
    f1 = scalar_grid(f1)
    f2 = scalar_grid(f2)
    if f1.shape != f2.shape:
        raise ValueError("frames must share a shape")
    pyramid = [(f1, f2)]
    for _ in range(params.pyramid_levels - 1):
        a, b = pyramid[-1]
        if min(a.shape) < 16:
            break
        pyramid.append((_downsample(a), _downsample(b)))
    u_init = None
    history = []
    it = 0
    for level_f1, level_f2 in reversed(pyramid):
        if u_init is not None:
            u_init = _upsample_flow(u_init, level_f1.shape)
        state, h, it = _run_warps(level_f1, level_f2, params, u_init, it, on_check)
        history.extend(h)
        u_init = state.u
    return state.u, history
