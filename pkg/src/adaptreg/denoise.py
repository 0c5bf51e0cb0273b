"""Adaptive Huber-Huber denoising.

Model: per pixel, lambda * phi_mu(f - u) + (1 - lambda) * phi_eta(|grad u|),
with lambda driven by the data residual.  ADMM splits u = v, soft-shrinks
the auxiliaries r (data) and z (gradient), and alternates:

    nu, lambda   from the explicit residual |r| + (f - u - r)^2 / (2 mu)
                 evaluated at the previous r (taken literally from the
                 update sequence rather than recomputing r first)
    r            shrink(f - u | mu)
    z            vector shrink of grad v
    u            pointwise solve of (lambda + mu theta) u
                     = mu theta (v - w) + lambda (f - r)
    v            screened system (1 - xi Laplacian) v = u + w - xi div z,
                 xi = (1 - lambda)/(eta theta), Gauss-Seidel sweeps
    w            w + u - v

Initialization u = v = f, everything else zero.  A constant image is a
fixed point: the first checkpoint sees a zero primal residual.
"""

from __future__ import annotations

import numpy as np

from .adaptive import weight_fields
from .grid import divergence, gradient, scalar_grid
from .prox import huber, huber_vec, shrink, shrink_vec
from .solver import SolverParams, rms, run_admm, screened_solve


class DenoiseState:
    """Fields of the denoising ADMM: f, u, v, w, r, z, lam."""

    def __init__(self, f: np.ndarray, params: SolverParams):
        self.f = scalar_grid(f)
        self.params = params
        self.u = self.f.copy()
        self.v = self.f.copy()
        self.w = np.zeros_like(self.f)
        self.r = np.zeros_like(self.f)
        self.z = np.zeros(self.f.shape + (2,), dtype=np.float64)
        self.lam = np.ones_like(self.f)

    def iterate(self):
        p = self.params
        rho = np.abs(self.r) + (self.f - self.u - self.r) ** 2 / (2.0 * p.mu)
        self.lam, _ = weight_fields(rho, p.adaptive)
        self.r = shrink(self.f - self.u, p.mu)
        self.z = shrink_vec(gradient(self.v), p.eta)
        self.u = update_u(self, p)
        self.v = update_v(self, p)
        self.w = self.w + (self.u - self.v)

    def primal_residual(self) -> float:
        return rms(self.u - self.v)

    def energy(self) -> float:
        p = self.params
        data = self.lam * huber(self.f - self.u, p.mu)
        reg = (1.0 - self.lam) * huber_vec(gradient(self.v), p.eta)
        return float(np.sum(data) + np.sum(reg))

    def mean_lambda(self) -> float:
        return float(np.mean(self.lam))

    def solution(self) -> np.ndarray:
        return self.u


def denoise_residual(state: DenoiseState) -> np.ndarray:
    """Envelope data residual huber(f - u, mu), pointwise."""
    return huber(state.f - state.u, state.params.mu)


def update_r(state: DenoiseState, mu: float) -> np.ndarray:
    """r = shrink(f - u | mu)."""
    return shrink(state.f - state.u, mu)


def update_u(state: DenoiseState, params: SolverParams) -> np.ndarray:
    """Pointwise solve of (lambda + mu theta) u = mu theta (v - w) + lambda (f - r).

    Written incrementally, u = (v - w) + lambda ((f - r) - (v - w)) / (lambda
    + mu theta), which returns v - w bitwise where lambda = 0 and f where the
    two targets coincide.
    """
    base = state.v - state.w
    gap = (state.f - state.r) - base
    return base + state.lam * gap / (state.lam + params.mu * params.theta)


def update_v(state: DenoiseState, params: SolverParams) -> np.ndarray:
    """Screened solve of (1 - xi Laplacian) v = u + w - xi div z."""
    xi = (1.0 - state.lam) / (params.eta * params.theta)
    rhs = state.u + state.w - xi * divergence(state.z)
    return screened_solve(rhs, xi, state.v, params.gs_sweeps)


def run_denoise(f: np.ndarray, params: SolverParams, on_check=None):
    """Denoise f (normalized to [0,1]); returns (u, history)."""
    state = DenoiseState(f, params)
    return run_admm(state, params, on_check=on_check)
