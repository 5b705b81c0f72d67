"""Synchronization and quantum-correlation measures.

Synchronization is quantified by a windowed Pearson correlation of two
sampled signals (+1 locked in phase, -1 in antiphase), optionally with a
relative delay.  Quantum correlations of the probe pair come from the
symplectic spectrum of Gaussian covariance matrices: von Neumann entropy,
mutual information, and logarithmic negativity via partial transposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import symplectic_form
from .errors import DegenerateWindow, NoCrossings, NonPhysical

MIN_WINDOW_SAMPLES = 8
_VAR_FLOOR = 1e-30


def pearson(f, g, times=None, window=None) -> float:
    """Pearson correlation of two signals over a window.

    With ``times`` and ``window = (t0, t1)`` the arrays are sliced to the
    window first; otherwise they are used whole.  Raises DegenerateWindow
    when either signal is (numerically) constant.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError("signals must share the sample grid")
    if window is not None:
        if times is None:
            raise ValueError("window selection needs the time grid")
        t0, t1 = window
        mask = (np.asarray(times) >= t0) & (np.asarray(times) <= t1)
        f, g = f[mask], g[mask]
    if f.size < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window holds {f.size} samples, need >= {MIN_WINDOW_SAMPLES}")
    df = f - f.mean()
    dg = g - g.mean()
    vf = float(df @ df) / f.size
    vg = float(dg @ dg) / g.size
    if vf < _VAR_FLOOR or vg < _VAR_FLOOR:
        raise DegenerateWindow("constant signal in window")
    return float(df @ dg / math.sqrt((df @ df) * (dg @ dg)))


@dataclass(frozen=True)
class SyncSeries:
    """Windowed synchronization indicator over a trajectory pair.

    ``values[i]`` is the Pearson correlation over [times[i], times[i] +
    window], NaN where a window was degenerate (see ``defined``).
    """

    times: np.ndarray
    values: np.ndarray
    window: float
    stride: float
    delay: float = 0.0

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    def in_band(self, t0: float, t1: float) -> np.ndarray:
        """Values of windows starting inside [t0, t1]."""
        mask = (self.times >= t0) & (self.times <= t1)
        return self.values[mask]


def sync_series(times, f, g, window, stride, delay: float = 0.0) -> SyncSeries:
    """Sliding-window Pearson correlation of f(t) against g(t + delay).

    The delay must be a multiple of the sample step; windows that would
    run past the data are dropped, and degenerate windows are stored as
    NaN rather than aborting the series.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if not (times.size == f.size == g.size):
        raise ValueError("times, f, g must have equal length")
    dt = float(times[1] - times[0])
    d = int(round(delay / dt))
    if abs(delay - d * dt) > 1e-9 * max(dt, abs(delay)):
        raise ValueError(f"delay {delay} is not a multiple of the sample step {dt}")
    w = int(round(window / dt))
    if w + 1 < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window {window} holds fewer than {MIN_WINDOW_SAMPLES} samples")
    step = max(1, int(round(stride / dt)))
    starts, values = [], []
    i = 0
    while i + w < times.size:
        j = i + d
        if j >= 0 and j + w < g.size:
            try:
                c = pearson(f[i : i + w + 1], g[j : j + w + 1])
            except DegenerateWindow:
                c = math.nan
            starts.append(times[i])
            values.append(c)
        i += step
    return SyncSeries(np.array(starts), np.array(values), window, stride, delay)


def scan_delayed_sync(times, f, g, window, stride, delays, band=None):
    """Grid scan over delays, maximizing |C|; ties break toward zero delay.

    Returns ``(best_delay, best_abs_c, best_series)``.  With ``band =
    (t0, t1)`` only windows starting inside the band are scored.
    """
    best = None
    for delay in sorted(np.asarray(delays, dtype=float), key=lambda d: (abs(d), d)):
        series = sync_series(times, f, g, window, stride, delay)
        vals = series.in_band(*band) if band is not None else series.values
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            continue
        score = float(np.max(np.abs(vals)))
        if best is None or score > best[1]:
            best = (delay, score, series)
    if best is None:
        raise ValueError("no scorable windows in the delay scan")
    return best


def dominant_frequency(times, f, window=None) -> float:
    """Oscillation frequency from the mean zero-crossing spacing.

    Crossing times are linearly interpolated; the frequency is pi over the
    mean half-period.  The window should span at least a few periods.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    if window is not None:
        t0, t1 = window
        mask = (times >= t0) & (times <= t1)
        times, f = times[mask], f[mask]
    s = np.sign(f)
    flips = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if flips.size < 2:
        raise NoCrossings("signal does not change sign often enough in the window")
    tc = times[flips] - f[flips] * (times[flips + 1] - times[flips]) / (
        f[flips + 1] - f[flips]
    )
    return float(np.pi / np.mean(np.diff(tc)))


def symplectic_spectrum(cov, validate: bool = True) -> np.ndarray:
    """Symplectic eigenvalues of a covariance matrix, ascending.

    Physical states have every eigenvalue >= 1/2; ``validate`` enforces
    this with a 1e-6 slack.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(symplectic_form(n) @ cov)
    nus = np.sort(np.abs(ev))[::2]
    if validate and np.any(nus < 0.5 - 1e-6):
        raise NonPhysical(
            f"symplectic eigenvalue {nus.min():.9f} below the vacuum floor 1/2"
        )
    return nus


def vn_entropy(cov) -> float:
    """Von Neumann entropy of a Gaussian state from its covariance."""
    nus = symplectic_spectrum(cov)
    plus = nus + 0.5
    minus = np.clip(nus - 0.5, 0.0, None)
    safe = np.where(minus > 0, minus, 1.0)  # (nu - 1/2) ln(nu - 1/2) -> 0 at nu = 1/2
    return float(np.sum(plus * np.log(plus) - minus * np.log(safe)))


def _marginal(cov, mode: int) -> np.ndarray:
    n = cov.shape[0] // 2
    idx = np.array([mode, n + mode])
    return cov[np.ix_(idx, idx)]


def mutual_information(cov) -> float:
    """Mutual information S_1 + S_2 - S_12 of a two-mode covariance."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (4, 4):
        raise ValueError("mutual information expects a two-mode (4x4) covariance")
    return vn_entropy(_marginal(cov, 0)) + vn_entropy(_marginal(cov, 1)) - vn_entropy(cov)


def log_negativity(cov) -> float:
    """Logarithmic negativity of a two-mode covariance.

    Partial transposition flips the sign of the second momentum; the
    entanglement is E = max(0, -ln 2 nu_min) with nu_min the smallest
    symplectic eigenvalue of the transformed covariance (vacuum at 1/2).
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (4, 4):
        raise ValueError("log negativity expects a two-mode (4x4) covariance")
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    nus = symplectic_spectrum(P @ cov @ P, validate=False)
    return float(max(0.0, -math.log(2.0 * nus[0])))


@dataclass(frozen=True)
class CorrelationReport:
    """Time series of the probe pair's quantum correlations."""

    times: np.ndarray
    E: np.ndarray
    MI: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S12: np.ndarray


def correlation_report(times, covs) -> CorrelationReport:
    """Entanglement, mutual information, and entropies along a trajectory
    of two-mode covariances (shape (T, 4, 4))."""
    times = np.asarray(times, dtype=float)
    covs = np.asarray(covs, dtype=float)
    T = times.size
    E = np.empty(T)
    S1 = np.empty(T)
    S2 = np.empty(T)
    S12 = np.empty(T)
    for i in range(T):
        c = covs[i]
        E[i] = log_negativity(c)
        S1[i] = vn_entropy(_marginal(c, 0))
        S2[i] = vn_entropy(_marginal(c, 1))
        S12[i] = vn_entropy(c)
    return CorrelationReport(times, E, S1 + S2 - S12, S1, S2, S12)
