"""Gaussian states of the closed composite system and their exact
symplectic propagation.

Phase-space ordering is positions first, then momenta: r = (x_1..x_N,
p_1..p_N), and the canonical form J = [[0, I], [-I, 0]] is built in one
place so every module agrees.  With hbar = 1 the vacuum symplectic
eigenvalue is 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InstabilityError, StepTooLarge, UncertaintyViolation
from .lattice import (
    DEFAULT_STABILITY_TOL,
    NetworkConfig,
    QuadraticForm,
    chain_normal_modes,
)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Canonical form J for n modes in positions-then-momenta ordering."""
    J = np.zeros((2 * n_modes, 2 * n_modes))
    J[:n_modes, n_modes:] = np.eye(n_modes)
    J[n_modes:, :n_modes] = -np.eye(n_modes)
    return J


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of a Gaussian state.

    ``cov`` uses the symmetrized convention sigma_ab =
    <{r_a, r_b}>/2 - <r_a><r_b>.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size % 2 != 0:
            raise ValueError("mean length 2N and cov shape (2N, 2N) required")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2


@dataclass(frozen=True)
class SymplecticMap:
    """Linear phase-space propagator over a fixed time."""

    S: np.ndarray
    t: float


def uncertainty_defect(cov: np.ndarray) -> float:
    """Smallest eigenvalue of cov + (i/2) J; >= 0 for physical states."""
    n = cov.shape[0] // 2
    test = cov.astype(complex) + 0.5j * symplectic_form(n)
    return float(np.linalg.eigvalsh(test)[0].real)


def squeezed_vacuum_local(omega: float, r: float) -> np.ndarray:
    """Covariance of a position-squeezed vacuum of a local oscillator.

    r = 0 gives the bare vacuum diag(1/(2 omega), omega/2); positive r
    squeezes the position quadrature by e^(-2r).
    """
    if omega <= 0:
        raise ValueError(f"oscillator frequency must be positive, got {omega}")
    return np.diag([np.exp(-2.0 * r) / (2.0 * omega), omega * np.exp(2.0 * r) / 2.0])


def chain_ground_state(cfg: NetworkConfig) -> np.ndarray:
    """Covariance of the chain vacuum (T = 0) in the site basis, 2M x 2M.

    sigma_xx = O diag(1/(2 Omega_j)) O^T and sigma_pp = O diag(Omega_j/2)
    O^T with O the chain normal-mode matrix; no x-p correlations.
    """
    omegas, O = chain_normal_modes(cfg)
    sxx = (O / omegas[None, :]) @ O.T / 2.0
    spp = (O * omegas[None, :]) @ O.T / 2.0
    M = cfg.M
    cov = np.zeros((2 * M, 2 * M))
    cov[:M, :M] = sxx
    cov[M:, M:] = spp
    return cov


def initial_composite_state(probe_means, probe_covs, cfg: NetworkConfig) -> GaussianState:
    """Product state: two local probe states and the chain vacuum.

    ``probe_means`` is ((x1, p1), (x2, p2)); ``probe_covs`` two 2x2
    covariances in local (x, p) ordering.  The chain starts with zero mean.
    """
    covs = [np.asarray(c, dtype=float) for c in probe_covs]
    for i, c in enumerate(covs):
        if c.shape != (2, 2):
            raise ValueError("probe covariances must be 2x2")
        nu = float(np.sqrt(max(np.linalg.det(c), 0.0)))
        if nu < 0.5 - 1e-12:
            raise UncertaintyViolation(
                f"probe {i + 1} covariance has symplectic eigenvalue {nu:.12f} < 1/2"
            )
    N = cfg.M + 2
    mean = np.zeros(2 * N)
    (x1, p1), (x2, p2) = probe_means
    mean[0], mean[1] = x1, x2
    mean[N], mean[N + 1] = p1, p2
    cov = np.zeros((2 * N, 2 * N))
    for i, c in enumerate(covs):
        cov[i, i] = c[0, 0]
        cov[N + i, N + i] = c[1, 1]
        cov[i, N + i] = cov[N + i, i] = c[0, 1]
    chain_cov = chain_ground_state(cfg)
    M = cfg.M
    cov[2:N, 2:N] = chain_cov[:M, :M]
    cov[N + 2 :, N + 2 :] = chain_cov[M:, M:]
    cov[2:N, N + 2 :] = chain_cov[:M, M:]
    cov[N + 2 :, 2:N] = chain_cov[M:, :M]
    return GaussianState(mean, cov)


def _mode_trig(nu: np.ndarray, t: float):
    """cos(nu t), sin(nu t)/nu, nu sin(nu t); the middle one has the
    analytic t limit at nu = 0."""
    cos_ = np.cos(nu * t)
    sinc_ = t * np.sinc(nu * t / np.pi)
    nusin = nu * np.sin(nu * t)
    return cos_, sinc_, nusin


def propagator(
    qf: QuadraticForm, t: float, stability_tol: float = DEFAULT_STABILITY_TOL, check: bool = True
) -> SymplecticMap:
    """Exact phase-space propagator of H = p^T p / 2 + x^T V x / 2.

    Diagonalizes V once and rotates the per-mode solution back to the
    site basis; the result satisfies S J S^T = J to round-off.
    """
    evals, O = np.linalg.eigh(qf.V)
    if check and evals[0] <= stability_tol:
        raise InstabilityError(evals[0], stability_tol)
    nu = np.sqrt(np.clip(evals, 0.0, None))
    cos_, sinc_, nusin = _mode_trig(nu, t)
    N = qf.dim
    S = np.empty((2 * N, 2 * N))
    C = (O * cos_[None, :]) @ O.T
    S[:N, :N] = C
    S[N:, N:] = C
    S[:N, N:] = (O * sinc_[None, :]) @ O.T
    S[N:, :N] = -(O * nusin[None, :]) @ O.T
    return SymplecticMap(S, float(t))


def symplectic_defect(smap: SymplecticMap) -> float:
    """max |S J S^T - J|, the symplecticity residual."""
    n = smap.S.shape[0] // 2
    J = symplectic_form(n)
    return float(np.max(np.abs(smap.S @ J @ smap.S.T - J)))


def evolve(state: GaussianState, smap: SymplecticMap) -> GaussianState:
    """Push a Gaussian state through a symplectic map."""
    if smap.S.shape[0] != state.mean.size:
        raise ValueError("state and map dimensions differ")
    return GaussianState(smap.S @ state.mean, smap.S @ state.cov @ smap.S.T)


def reduce(state: GaussianState, modes) -> GaussianState:
    """Marginal state on a subset of modes (indices into 0..N-1)."""
    idx = list(modes)
    n = state.n_modes
    sel = np.array(idx + [n + i for i in idx])
    return GaussianState(state.mean[sel], state.cov[np.ix_(sel, sel)])


def mean_energy(state: GaussianState, qf: QuadraticForm) -> float:
    """<H> = kinetic + potential, from both moments."""
    n = state.n_modes
    mx, mp = state.mean[:n], state.mean[n:]
    sxx = state.cov[:n, :n]
    spp = state.cov[n:, n:]
    return float(
        0.5 * (mp @ mp + mx @ qf.V @ mx) + 0.5 * (np.trace(spp) + np.sum(qf.V * sxx))
    )


def rk4_reference(
    state: GaussianState, qf: QuadraticForm, horizon: float, dt: float
) -> GaussianState:
    """Classical 4th-order integration of the moment equations.

    Independent cross-check for the exact propagator: the mean follows
    dr/dt = F r and the covariance the Lyapunov equation dsigma/dt =
    F sigma + sigma F^T with F = [[0, I], [-V, 0]].  Test use only.
    """
    N = qf.dim
    nu_max = float(np.sqrt(max(np.linalg.eigvalsh(qf.V)[-1], 0.0)))
    if nu_max > 0 and dt > (2.0 * np.pi / nu_max) / 20.0:
        raise StepTooLarge(
            f"dt={dt} too coarse for fastest mode (need <= "
            f"{(2.0 * np.pi / nu_max) / 20.0:.4g})"
        )
    F = np.zeros((2 * N, 2 * N))
    F[:N, N:] = np.eye(N)
    F[N:, :N] = -qf.V

    def rhs(m, s):
        return F @ m, F @ s + s @ F.T

    m = state.mean.copy()
    s = state.cov.copy()
    n_steps = int(round(horizon / dt))
    for _ in range(n_steps):
        k1m, k1s = rhs(m, s)
        k2m, k2s = rhs(m + 0.5 * dt * k1m, s + 0.5 * dt * k1s)
        k3m, k3s = rhs(m + 0.5 * dt * k2m, s + 0.5 * dt * k2s)
        k4m, k4s = rhs(m + dt * k3m, s + dt * k3s)
        m = m + (dt / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m)
        s = s + (dt / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s)
    return GaussianState(m, s)
