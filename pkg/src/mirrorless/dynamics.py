"""Lindblad dynamics: superoperator construction, evolution, steady states.

The master equation is
    drho/dt = -i [H, rho] - (Gamma/2) sum_k (s_k+ s_k- rho + rho s_k+ s_k-
                                             - 2 s_k- rho s_k+),
with the three decay channels of :class:`mirrorless.levels.CollapseChannels`.
Density matrices are vectorized row-major, vec(rho)[i*d + j] = rho[i, j], so
vec(A rho B) = (A kron B^T) vec(rho).

Dimensions here are small (d <= 12, superoperators <= 144x144), so everything
is dense; steady states come from a bordered least-squares solve with an
appended trace row, and time evolution from the adaptive RK kernel in
``_kernels`` (numba-accelerated when available).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._kernels import integrate_sampled
from .levels import (CollapseChannels, LevelScheme, build_collapse,
                     pump_hamiltonian)


class DegenerateSteadyStateError(RuntimeError):
    """Raised when the Liouvillian null space is multi-dimensional."""

    def __init__(self, dimension: int):
        super().__init__(
            f"Liouvillian null space has dimension {dimension}; the steady "
            f"state is not unique (undriven or dark manifold). Use "
            f"steady_state(..., mode='project', rho0=...) instead.")
        self.dimension = dimension


@dataclass(frozen=True)
class Liouvillian:
    """Dense superoperator generating the Lindblad dynamics."""

    matrix: np.ndarray  # (d*d, d*d) complex
    dim: int
    gamma: float = 1.0

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(self.dim, self.dim)


@dataclass(frozen=True)
class SaturationPoint:
    """Steady-state populations at one value of the saturation parameter."""

    S: float
    omega_p: float
    populations: np.ndarray


@dataclass(frozen=True)
class InversionScan:
    """Result of a pump-only inversion scan over saturation parameters."""

    delta_p: float
    points: List[SaturationPoint]
    s_star: Optional[float]  # threshold where rho(m_e=0) crosses rho(|m_g|=1)


def saturation_parameter(omega_p: float, delta_p: float, gamma: float = 1.0) -> float:
    """S = omega_p^2 / (gamma^2/4 + delta_p^2)."""
    return omega_p ** 2 / (gamma ** 2 / 4.0 + delta_p ** 2)


def omega_from_saturation(S: float, delta_p: float, gamma: float = 1.0) -> float:
    """Inverse of :func:`saturation_parameter` at fixed detuning."""
    if S < 0:
        raise ValueError("saturation parameter must be nonnegative")
    return np.sqrt(S * (gamma ** 2 / 4.0 + delta_p ** 2))


def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1)


def unvectorize(vec: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(vec, dtype=complex).reshape(d, d)


def build_liouvillian(H: np.ndarray, channels: CollapseChannels,
                      gamma: float = 1.0) -> Liouvillian:
    """Assemble the dense generator L with drho/dt = L[rho]."""
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if H.shape != (d, d):
        raise ValueError("Hamiltonian must be square")
    eye = np.eye(d, dtype=complex)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for s in channels.sigmas:
        if s.shape != (d, d):
            raise ValueError("collapse operator dimension mismatch")
        sp_sm = s.conj().T @ s
        L += gamma * (np.kron(s, s.conj())
                      - 0.5 * np.kron(sp_sm, eye)
                      - 0.5 * np.kron(eye, sp_sm.T))
    return Liouvillian(matrix=L, dim=d, gamma=gamma)


def density_matrix_defects(rho: np.ndarray) -> Tuple[float, float, float]:
    """(hermiticity defect, trace defect, most negative eigenvalue)."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho) - 1.0))
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return herm, tr, float(w[0])


def equal_ground_state(scheme: LevelScheme) -> np.ndarray:
    """Population distributed equally over the ground sublevels (default rho0)."""
    rho = np.zeros((scheme.dim, scheme.dim), dtype=complex)
    g = scheme.ground_indices
    for i in g:
        rho[i, i] = 1.0 / len(g)
    return rho


@dataclass(frozen=True)
class Evolution:
    """Sampled trajectory rho(t)."""

    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)

    def final(self) -> np.ndarray:
        return self.states[-1]


def evolve(L: Liouvillian, rho0: np.ndarray, t_final: float, tol: float = 1e-8,
           t_eval: Optional[Sequence[float]] = None, hermitize: bool = True,
           n_samples: int = 201) -> Evolution:
    """Propagate rho0 under L up to t_final with adaptive stepping.

    Local error per step is controlled at ``tol`` (relative) with an absolute
    floor three decades lower.  The per-step invariant repair is limited to
    re-Hermitization; trace drift is left observable as a diagnostic.
    """
    d = L.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (d, d):
        raise ValueError("initial state dimension mismatch")
    if t_eval is None:
        t_grid = np.linspace(0.0, t_final, n_samples)
    else:
        t_grid = np.asarray(t_eval, dtype=float)
        if t_grid[0] != 0.0:
            raise ValueError("t_eval must start at 0 (rho0 is the t = 0 state)")
    try:
        ys = integrate_sampled(L.matrix, vectorize(rho0), t_grid,
                               rtol=tol, atol=tol * 1e-3,
                               hermitize_dim=d if hermitize else 0)
    except RuntimeError as exc:
        raise RuntimeError(f"time evolution failed: {exc}") from exc
    return Evolution(times=t_grid, states=ys.reshape(len(t_grid), d, d))


def null_space_dimension(L: Liouvillian, rel_tol: float = 1e-10) -> int:
    s = np.linalg.svd(L.matrix, compute_uv=False)
    scale = s[0] if s[0] > 0 else 1.0
    return int(np.sum(s <= rel_tol * scale))


def steady_state(L: Liouvillian, mode: str = "unique",
                 rho0: Optional[np.ndarray] = None,
                 null_rel_tol: float = 1e-10,
                 residual_tol: float = 1e-8) -> np.ndarray:
    """Solve L[rho] = 0 with Tr rho = 1.

    mode='unique' (default) requires a one-dimensional null space and raises
    :class:`DegenerateSteadyStateError` (carrying the measured dimension)
    otherwise.  mode='project' returns the infinite-time limit reached from
    ``rho0`` by spectral projection onto the kernel.
    """
    d = L.dim
    nullity = max(1, null_space_dimension(L, null_rel_tol))
    if nullity > 1:
        if mode != "project":
            raise DegenerateSteadyStateError(nullity)
        if rho0 is None:
            raise ValueError("mode='project' requires an initial state rho0")
        vals, vecs = np.linalg.eig(L.matrix)
        scale = float(np.max(np.abs(vals))) or 1.0
        zero = np.abs(vals) <= 100 * null_rel_tol * scale
        left = np.linalg.inv(vecs)
        coeff = left[zero] @ vectorize(rho0)
        rho = unvectorize(vecs[:, zero] @ coeff, d)
    else:
        bordered = np.vstack([L.matrix, vectorize(np.eye(d))[None, :]])
        rhs = np.zeros(d * d + 1, dtype=complex)
        rhs[-1] = 1.0
        sol, *_ = np.linalg.lstsq(bordered, rhs, rcond=None)
        rho = unvectorize(sol, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    residual = float(np.max(np.abs(L.apply(rho))))
    if residual > residual_tol:
        raise RuntimeError(
            f"steady-state residual {residual:.3e} exceeds {residual_tol:.1e}")
    return rho


def pump_only_steady_state(scheme: LevelScheme, omega_p: float, delta_p: float,
                           gamma: float = 1.0) -> Tuple[np.ndarray, Liouvillian]:
    """Steady state of the pump-only system, with its Liouvillian."""
    H = pump_hamiltonian(scheme, omega_p, delta_p)
    L = build_liouvillian(H, build_collapse(scheme), gamma)
    return steady_state(L), L


def inversion_scan(scheme: LevelScheme, delta_p: float, s_grid: Sequence[float],
                   gamma: float = 1.0,
                   bisect_rel_tol: float = 1e-3) -> InversionScan:
    """Steady-state populations over a saturation-parameter grid.

    Also locates the threshold S* where the population of (excited, m=0)
    crosses that of (ground, |m|=1), by bisection between the bracketing grid
    points to ``bisect_rel_tol`` relative accuracy.
    """
    e0 = scheme.index("excited", 0.0)
    g_side = [scheme.index("ground", m) for m in (-1.0, 1.0)
              if ("ground", m) in scheme.index_map]

    def gap(S: float) -> Tuple[float, np.ndarray]:
        omega = omega_from_saturation(S, delta_p, gamma)
        rho, _ = pump_only_steady_state(scheme, omega, delta_p, gamma)
        pops = np.real(np.diag(rho))
        return float(pops[e0] - max(pops[i] for i in g_side)), pops

    points: List[SaturationPoint] = []
    gaps: List[float] = []
    for S in s_grid:
        g, pops = gap(float(S))
        gaps.append(g)
        points.append(SaturationPoint(
            S=float(S), omega_p=omega_from_saturation(S, delta_p, gamma),
            populations=pops))

    s_star = None
    for i in range(len(gaps) - 1):
        if gaps[i] < 0.0 <= gaps[i + 1]:
            lo, hi = float(s_grid[i]), float(s_grid[i + 1])
            while (hi - lo) > bisect_rel_tol * hi:
                mid = 0.5 * (lo + hi)
                if gap(mid)[0] < 0.0:
                    lo = mid
                else:
                    hi = mid
            s_star = 0.5 * (lo + hi)
            break
    return InversionScan(delta_p=delta_p, points=points, s_star=s_star)
