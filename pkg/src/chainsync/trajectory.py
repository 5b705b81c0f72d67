"""Exact trajectory evaluation in the normal-mode picture.

Stepping the full 2N x 2N covariance through a symplectic map costs
O(N^3) per output sample, which is wasteful when only the two probe modes
are observed.  This engine diagonalizes the potential once, rotates the
initial moments into normal coordinates, and then evaluates probe means
and probe-block covariances at arbitrary times directly, each sample
costing O(N) for means and O(N^2) for covariances.  Results are identical
(to round-off) to repeated application of ``dynamics.propagator`` maps;
the equivalence is covered by tests.
"""

from __future__ import annotations

import numpy as np

from .dynamics import GaussianState, _mode_trig
from .errors import InstabilityError
from .lattice import DEFAULT_STABILITY_TOL, QuadraticForm

_TIME_CHUNK = 1024


class NormalModeTrajectory:
    """Closed-system trajectory of a Gaussian state under a stable
    quadratic form."""

    def __init__(
        self,
        qf: QuadraticForm,
        state: GaussianState,
        stability_tol: float = DEFAULT_STABILITY_TOL,
        check: bool = True,
    ):
        if state.n_modes != qf.dim:
            raise ValueError("state and potential dimensions differ")
        evals, O = np.linalg.eigh(qf.V)
        if check and evals[0] <= stability_tol:
            raise InstabilityError(evals[0], stability_tol)
        self.qf = qf
        self.nu = np.sqrt(np.clip(evals, 0.0, None))
        self.O = O
        N = qf.dim
        self._y0 = O.T @ state.mean[:N]
        self._pi0 = O.T @ state.mean[N:]
        sxx = state.cov[:N, :N]
        sxp = state.cov[:N, N:]
        spp = state.cov[N:, N:]
        self._Syy = O.T @ sxx @ O
        self._Syp = O.T @ sxp @ O
        self._Spp = O.T @ spp @ O

    @property
    def n_modes(self) -> int:
        return self.nu.size

    def mean_series(self, times, modes=(0, 1)):
        """Means of selected modes: arrays (X, P), each (len(times), k)."""
        times = np.asarray(times, dtype=float)
        rows = self.O[list(modes), :]
        X = np.empty((times.size, rows.shape[0]))
        P = np.empty_like(X)
        for lo in range(0, times.size, _TIME_CHUNK):
            hi = min(lo + _TIME_CHUNK, times.size)
            tb = times[lo:hi, None]
            cos_ = np.cos(self.nu[None, :] * tb)
            sinc_ = tb * np.sinc(self.nu[None, :] * tb / np.pi)
            nusin = self.nu[None, :] * np.sin(self.nu[None, :] * tb)
            X[lo:hi] = (cos_ * self._y0 + sinc_ * self._pi0) @ rows.T
            P[lo:hi] = (-nusin * self._y0 + cos_ * self._pi0) @ rows.T
        return X, P

    def covariance_series(self, times, modes=(0, 1)):
        """Covariance of selected modes at each time: (len(times), 2k, 2k)
        in (x..., p...) ordering."""
        times = np.asarray(times, dtype=float)
        rows = self.O[list(modes), :]
        k = rows.shape[0]
        N = self.n_modes
        Sigma0 = np.block([[self._Syy, self._Syp], [self._Syp.T, self._Spp]])
        out = np.empty((times.size, 2 * k, 2 * k))
        for lo in range(0, times.size, _TIME_CHUNK):
            hi = min(lo + _TIME_CHUNK, times.size)
            tb = times[lo:hi, None]
            cos_ = np.cos(self.nu[None, :] * tb)
            sinc_ = tb * np.sinc(self.nu[None, :] * tb / np.pi)
            nusin = self.nu[None, :] * np.sin(self.nu[None, :] * tb)
            B = np.empty((hi - lo, 2 * k, 2 * N))
            B[:, :k, :N] = cos_[:, None, :] * rows[None, :, :]
            B[:, :k, N:] = sinc_[:, None, :] * rows[None, :, :]
            B[:, k:, :N] = -nusin[:, None, :] * rows[None, :, :]
            B[:, k:, N:] = cos_[:, None, :] * rows[None, :, :]
            flat = B.reshape(-1, 2 * N)
            M1 = (flat @ Sigma0).reshape(hi - lo, 2 * k, 2 * N)
            blk = np.einsum("tia,tja->tij", M1, B)
            out[lo:hi] = 0.5 * (blk + np.swapaxes(blk, 1, 2))
        return out

    def state_at(self, t: float) -> GaussianState:
        """Full composite Gaussian state at time t (O(N^3); use sparingly)."""
        c, d, e_ = _mode_trig(self.nu, float(t))
        e = -e_
        y = c * self._y0 + d * self._pi0
        pi = e * self._y0 + c * self._pi0
        Syy, Syp, Spp = self._Syy, self._Syp, self._Spp

        def scaled(A, left, right):
            return left[:, None] * A * right[None, :]

        Syy_t = (
            scaled(Syy, c, c) + scaled(Syp, c, d) + scaled(Syp.T, d, c) + scaled(Spp, d, d)
        )
        Syp_t = (
            scaled(Syy, c, e) + scaled(Syp, c, c) + scaled(Syp.T, d, e) + scaled(Spp, d, c)
        )
        Spp_t = (
            scaled(Syy, e, e) + scaled(Syp, e, c) + scaled(Syp.T, c, e) + scaled(Spp, c, c)
        )
        O = self.O
        N = self.n_modes
        mean = np.concatenate([O @ y, O @ pi])
        cov = np.empty((2 * N, 2 * N))
        cov[:N, :N] = O @ Syy_t @ O.T
        cov[:N, N:] = O @ Syp_t @ O.T
        cov[N:, :N] = cov[:N, N:].T
        cov[N:, N:] = O @ Spp_t @ O.T
        return GaussianState(mean, cov)
