"""
Observables extracted from trajectories: inter-loop energy exchange, the
hyperbolic interference pattern, Bloch recovery, band transfer under strong
gradients and ballistic spreading statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import Trajectory, WalkState, fidelity
from .spectral import band_populations

__all__ = [
    "SeriesReport",
    "loop_energy_series",
    "zitter_period",
    "hyperbola_model",
    "hyperbola_match",
    "fidelity_series",
    "bloch_recovery",
    "lz_transfer_series",
    "variance_series",
    "corner_decay_check",
    "tunneling_displacement",
]

# offsets in the cosine model: (pi/4)(m - m0) - n^2 / (2m)
HYPERBOLA_M0 = {"u": 3, "v": 1}


@dataclass(frozen=True)
class SeriesReport:
    name: str
    m_values: NDArray[np.int64]
    values: NDArray[np.float64]
    extracted_scalar: Optional[float] = None
    scalar_name: Optional[str] = None

    def __post_init__(self):
        m = np.asarray(self.m_values, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if m.shape != vals.shape or m.ndim != 1:
            raise ValueError("m_values and values must be 1-D arrays of equal length")
        if m.size > 1 and np.any(np.diff(m) <= 0):
            raise ValueError("m_values must be strictly ascending")
        object.__setattr__(self, "m_values", m)
        object.__setattr__(self, "values", vals)

    def with_scalar(self, value: float, name: str) -> "SeriesReport":
        return SeriesReport(self.name, self.m_values, self.values, float(value), name)


def _single_site(traj: Trajectory) -> Optional[int]:
    """Start position if the first recorded state occupies exactly one site."""
    occupied = np.flatnonzero(traj.intensity_total[0])
    if occupied.size != 1:
        return None
    return int(traj.n_min + occupied[0])


def loop_energy_series(traj: Trajectory) -> Tuple[SeriesReport, SeriesReport]:
    """Energy in the upper and lower loop, E_u(m) and E_v(m)."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    eu = traj.intensity_u.sum(axis=1)
    ev = traj.intensity_v.sum(axis=1)
    return SeriesReport("energy-u", traj.m, eu), SeriesReport("energy-v", traj.m, ev)


def zitter_period(series: SeriesReport, pad: int = 8192) -> float:
    """Period (in steps) of the strongest oscillation in ``series``.

    The series is linearly detrended and zero-padded; the spectral peak is
    refined by a parabola through the three highest bins.  Periods longer than
    the record are ignored.
    """
    y = series.values
    m = series.m_values.astype(np.float64)
    if y.size < 16:
        raise ValueError(f"need at least 16 samples, got {y.size}")
    if np.ptp(y) == 0.0:
        raise ValueError("constant series has no oscillation")
    spacing = np.diff(m)
    if np.any(spacing != spacing[0]):
        raise ValueError("series must be uniformly sampled")
    dm = spacing[0]
    resid = y - np.polyval(np.polyfit(m, y, 1), m)
    if not np.any(np.abs(resid) > 1e-14 * max(1.0, np.abs(y).max())):
        raise ValueError("series is linear; no oscillation")
    amp = np.abs(np.fft.rfft(resid, pad))
    freq = np.fft.rfftfreq(pad, d=dm)
    lowest = 1.0 / (y.size * dm)
    amp[freq < lowest] = 0.0
    k = int(np.argmax(amp))
    if 0 < k < amp.size - 1:
        a, b, c = amp[k - 1], amp[k], amp[k + 1]
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0.0 else 0.0
    else:
        shift = 0.0
    f = (k + shift) * (freq[1] - freq[0])
    return float(1.0 / f)


def hyperbola_model(n: ArrayLike, m: ArrayLike, component: str) -> NDArray[np.float64]:
    """cos[(pi/4)(m - m0) - n^2/(2m)] with m0 = 3 for u and 1 for v.

    Valid inside the ballistic cone ``|n| < m``.
    """
    if component not in HYPERBOLA_M0:
        raise ValueError(f"component must be 'u' or 'v', got {component!r}")
    n = np.asarray(n, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 1) or np.any(np.abs(n) >= m):
        raise ValueError("hyperbola model needs m >= 1 and |n| < m")
    m0 = HYPERBOLA_M0[component]
    return np.cos(0.25 * np.pi * (m - m0) - n**2 / (2.0 * m))


def hyperbola_match(
    traj: Trajectory,
    component: str = "v",
    m_range: Tuple[int, int] = (20, 70),
    cone_fraction: float = 0.5,
) -> float:
    """Pearson correlation of |field|^2 with the squared hyperbola model.

    Sites are restricted to ``|n - n0| <= cone_fraction * m`` for recorded
    steps in ``m_range`` (inclusive).  For a single-site start, sites of the
    empty sublattice are left out: they carry no field by construction.
    """
    if not 0.0 < cone_fraction <= 0.7:
        raise ValueError(f"cone_fraction must lie in (0, 0.7], got {cone_fraction}")
    grid = traj.intensity(component)
    n0 = _single_site(traj)
    rel = traj.positions - (0 if n0 is None else n0)
    xs, ys = [], []
    for k, m in enumerate(traj.m):
        if not m_range[0] <= m <= m_range[1] or m < 1:
            continue
        keep = (np.abs(rel) <= cone_fraction * m) & (np.abs(rel) < m)
        if n0 is not None:
            keep &= (rel - m) % 2 == 0
        xs.append(grid[k, keep])
        ys.append(hyperbola_model(rel[keep], m, component) ** 2)
    if not xs or sum(x.size for x in xs) < 2:
        raise ValueError("no sites in the requested cone region")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    return float(np.corrcoef(x, y)[0, 1])


def fidelity_series(traj: Trajectory) -> SeriesReport:
    """Overlap |<state_0|state_m>|^2 with the first recorded state."""
    first = traj[0]
    vals = [fidelity(first, s) for s in traj]
    return SeriesReport("fidelity", traj.m, vals)


def bloch_recovery(traj: Trajectory, p: int) -> Tuple[int, float]:
    """Step in [1, 2p] where the state comes closest to the initial one.

    Returns ``(peak_step, peak_fidelity)``; steps are counted from the first
    recorded state.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    rel = traj.m - traj.m[0]
    wanted = np.arange(1, 2 * p + 1)
    if not np.all(np.isin(wanted, rel)):
        raise ValueError(f"trajectory must record every step up to m = {2 * p}")
    first = traj[0]
    best_m, best_f = 0, -1.0
    for m in wanted:
        k = int(np.searchsorted(rel, m))
        f = fidelity(first, traj[k])
        if f > best_f:
            best_m, best_f = int(m), f
    return best_m, best_f


def _gauge_chirp(traj: Trajectory) -> NDArray[np.complex128]:
    # A linear gradient split (a_u, a_v) is equivalent to the even split up to
    # the static phase exp(i (a_v - a_u) n^2 / 4) on both components.
    if not traj.phase.is_linear:
        raise ValueError("band transfer needs a linear phase profile")
    a_u, a_v = traj.phase.gradients
    n = traj.positions.astype(np.float64)
    return np.exp(-0.25j * (a_v - a_u) * n**2)


def lz_transfer_series(traj: Trajectory, alpha: float) -> SeriesReport:
    """Population of the initially empty band versus step.

    States are taken to the even-split gauge (no quadratic chirp), then to the
    frame co-moving with the momentum drift ``alpha/2`` per step, and projected
    with ``kappa_offset = m * alpha / 2``.  The extracted scalar is the maximum
    transfer over the series.
    """
    if traj.lean:
        raise TypeError("band transfer needs amplitudes, not a lean trajectory")
    if traj.phase.is_linear and not math.isclose(traj.phase.alpha, alpha, rel_tol=1e-12, abs_tol=1e-15):
        raise ValueError(f"alpha {alpha} does not match the trajectory gradient {traj.phase.alpha}")
    chirp = _gauge_chirp(traj)
    n = traj.positions.astype(np.float64)
    out = []
    dominant = None
    for k, m in enumerate(traj.m):
        steps = int(m - traj.m[0])
        drift = 0.5 * alpha * steps
        frame = chirp * np.exp(-1j * drift * n)
        state = WalkState(int(m), traj.n_min, traj.u[k] * frame, traj.v[k] * frame)
        pp, pm = band_populations(state, kappa_offset=drift)
        if dominant is None:
            if max(pp, pm) < 0.95:
                raise ValueError(f"initial state is not band-resolved (P+ = {pp:.3f}, P- = {pm:.3f})")
            dominant = "plus" if pp >= pm else "minus"
        out.append(pm if dominant == "plus" else pp)
    vals = np.array(out)
    return SeriesReport("lz-transfer", traj.m, vals, float(vals.max()), "max_transfer")


def variance_series(traj: Trajectory) -> SeriesReport:
    """Spatial variance of the total intensity; scalar is the slope of sigma(m) over the last half."""
    intensity = traj.intensity_total
    n = traj.positions.astype(np.float64)
    total = intensity.sum(axis=1)
    mean = (intensity @ n) / total
    var = (intensity @ n**2) / total - mean**2
    var = np.maximum(var, 0.0)
    report = SeriesReport("variance", traj.m, var)
    half = len(traj) // 2
    m = traj.m[half:].astype(np.float64)
    if m.size >= 2:
        slope = np.polyfit(m, np.sqrt(var[half:]), 1)[0]
        report = report.with_scalar(slope, "sigma_slope")
    return report


def corner_decay_check(traj: Trajectory) -> float:
    """max over m of | |v at n0+m|^2 * 2^m - 1 | for a lower-loop single-site start."""
    n0 = _single_site(traj)
    if n0 is None or traj.intensity_u[0].any():
        raise ValueError("corner decay needs a lower-loop single-site start")
    worst = 0.0
    for k, m in enumerate(traj.m):
        steps = int(m - traj.m[0])
        j = n0 + steps - traj.n_min
        if j >= traj.intensity_v.shape[1]:
            raise ValueError(f"corner site n0 + {steps} lies outside the window")
        scaled = math.ldexp(float(traj.intensity_v[k, j]), steps) / float(traj.intensity_v[0, n0 - traj.n_min])
        worst = max(worst, abs(scaled - 1.0))
    return worst


def tunneling_displacement(traj: Trajectory, p: float, m: Optional[int] = None) -> float:
    """Mean distance from the start of the intensity found outside the Bloch region.

    Under a gradient 2 pi / p a band state sweeps the zone in 2p steps and its
    position excursion is bounded by bandwidth / drift = (pi/2) / (pi/p) = p/2.
    Intensity at ``|n - n0| > p/2`` after ``m`` steps (default 2p) has tunneled;
    the return value is its intensity-weighted mean ``|n - n0|``.
    """
    n0 = _single_site(traj)
    if n0 is None:
        raise ValueError("tunneling displacement needs a single-site start")
    m = int(round(2 * p)) if m is None else int(m)
    rel_m = traj.m - traj.m[0]
    hits = np.flatnonzero(rel_m == m)
    if hits.size == 0:
        raise ValueError(f"step {m} not recorded")
    row = traj.intensity_total[hits[0]]
    dist = np.abs(traj.positions - n0).astype(np.float64)
    outer = dist > 0.5 * p
    weight = row[outer].sum()
    if weight == 0.0:
        raise ValueError("no intensity outside the Bloch region")
    return float((dist[outer] * row[outer]).sum() / weight)
