"""
Momentum-space picture of the walk without a phase gradient.

A plane wave ``(U, V) exp(i kappa n)`` advances by the 2x2 matrix

    M(kappa) = (1/sqrt 2) [[e^{i kappa},    i e^{i kappa}],
                           [i e^{-i kappa}, e^{-i kappa}]]

whose eigenvalues ``exp(+/- i beta(kappa))`` give the two quasi-energy bands
``cos beta = cos(kappa) / sqrt 2``.

Transforms use ``F(kappa) = sum_n f_n exp(-i kappa n)`` with the true site
index ``n`` (not the array offset), sampled on an FFT grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import SQRT1_2, PhaseProfile, Spinor, Trajectory, WalkState

__all__ = [
    "MomentumOperator",
    "BandStructure",
    "dispersion",
    "band_gap_at",
    "step_operator",
    "band_eigenvectors",
    "band_structure",
    "spectrum",
    "momentum_evolve",
    "momentum_centroid",
    "centroid_series",
    "band_populations",
]


def _reduce(kappa):
    # into [-pi, pi)
    return (np.asarray(kappa, dtype=np.float64) + np.pi) % (2.0 * np.pi) - np.pi


def dispersion(kappa: ArrayLike) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Quasi-energies (beta_plus, beta_minus) = +/- arccos(cos(kappa)/sqrt 2)."""
    beta = np.arccos(np.cos(np.asarray(kappa, dtype=np.float64)) * SQRT1_2)
    return beta, -beta


def band_gap_at(kappa: ArrayLike) -> NDArray[np.float64]:
    """Circular distance between exp(i beta_plus) and exp(i beta_minus)."""
    bp, bm = dispersion(kappa)
    d = np.mod(bp - bm, 2.0 * np.pi)
    return np.minimum(d, 2.0 * np.pi - d)


def _matrices(kappa) -> NDArray[np.complex128]:
    k = np.asarray(kappa, dtype=np.float64)
    e = np.exp(1j * k)
    out = np.empty(k.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = e
    out[..., 0, 1] = 1j * e
    out[..., 1, 0] = 1j / e
    out[..., 1, 1] = 1.0 / e
    return out * SQRT1_2


def _eigvecs(kappa) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    # (M00 - lam) x0 + M01 x1 = 0  =>  x = (M01, lam - M00); M01 never vanishes
    k = np.asarray(kappa, dtype=np.float64)
    mat = _matrices(k)
    bp, _ = dispersion(k)
    out = []
    for beta in (bp, -bp):
        lam = np.exp(1j * beta)
        x = np.stack([mat[..., 0, 1], lam - mat[..., 0, 0]], axis=-1)
        x /= np.linalg.norm(x, axis=-1, keepdims=True)
        x /= (x[..., 0] / np.abs(x[..., 0]))[..., None]
        x[..., 0] = x[..., 0].real
        out.append(x)
    return out[0], out[1]


@dataclass(frozen=True)
class MomentumOperator:
    kappa: float
    matrix: NDArray[np.complex128]

    @property
    def eigenphases(self) -> NDArray[np.float64]:
        return np.sort(np.angle(np.linalg.eigvals(self.matrix)))[::-1]


def step_operator(kappa: float) -> MomentumOperator:
    k = float(kappa)
    return MomentumOperator(k, _matrices(k))


def band_eigenvectors(kappa: float) -> Tuple[Spinor, Spinor]:
    """Unit eigenvectors of M(kappa) for beta_plus and beta_minus.

    Phase convention: the upper component is real and positive.
    """
    plus, minus = _eigvecs(float(kappa))
    return Spinor(*plus), Spinor(*minus)


@dataclass(frozen=True)
class BandStructure:
    kappa_grid: NDArray[np.float64]
    beta_plus: NDArray[np.float64]
    beta_minus: NDArray[np.float64]
    eigvec_plus: NDArray[np.complex128]   # (K, 2): (U, V) per kappa
    eigvec_minus: NDArray[np.complex128]

    @property
    def gap(self) -> NDArray[np.float64]:
        return band_gap_at(self.kappa_grid)


def band_structure(kappa_grid: ArrayLike) -> BandStructure:
    k = np.asarray(kappa_grid, dtype=np.float64)
    bp, bm = dispersion(k)
    ep, em = _eigvecs(k)
    return BandStructure(k, bp, bm, ep, em)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def spectrum(state: WalkState, size: int | None = None):
    """Sampled transforms of both components.

    Returns ``(kappa, U_hat, V_hat)`` on ``size`` equally spaced samples
    (default: next power of two >= 4x the window), ``kappa`` in [-pi, pi).
    Parseval: ``sum |U_hat|^2 / size == sum |u_n|^2``.
    """
    n = state.u.size
    size = _next_pow2(4 * n) if size is None else int(size)
    if size < n:
        raise ValueError(f"transform size {size} smaller than window {n}")
    kappa = _reduce(2.0 * np.pi * np.fft.fftfreq(size))
    shift = np.exp(-1j * kappa * state.n_min)
    return kappa, np.fft.fft(state.u, size) * shift, np.fft.fft(state.v, size) * shift


def momentum_evolve(state: WalkState, steps: int, phase: PhaseProfile | None = None) -> WalkState:
    """Evolve by ``steps`` steps with M(kappa)^steps per momentum sample.

    Gradient-free walks only.  The field is placed in a power-of-two periodic
    box wide enough that nothing wraps, then cut back to the original window.
    """
    if phase is not None and not phase.is_zero:
        raise ValueError("momentum_evolve handles the gradient-free walk only")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    n = state.u.size
    size = _next_pow2(n + 2 * steps)
    base = state.n_min - steps
    u = np.zeros(size, dtype=np.complex128)
    v = np.zeros(size, dtype=np.complex128)
    u[steps:steps + n] = state.u
    v[steps:steps + n] = state.v
    kappa = 2.0 * np.pi * np.fft.fftfreq(size)
    shift = np.exp(-1j * kappa * base)
    uh = np.fft.fft(u) * shift
    vh = np.fft.fft(v) * shift
    prop = np.linalg.matrix_power(_matrices(kappa), steps)
    uh, vh = prop[:, 0, 0] * uh + prop[:, 0, 1] * vh, prop[:, 1, 0] * uh + prop[:, 1, 1] * vh
    u = np.fft.ifft(uh / shift)
    v = np.fft.ifft(vh / shift)
    inside = slice(steps, steps + n)
    outside = np.ones(size, dtype=bool)
    outside[inside] = False
    leaked = float(np.sum(np.abs(u[outside]) ** 2 + np.abs(v[outside]) ** 2))
    if leaked > 1e-20:
        raise ValueError(f"field leaves the window during {steps} steps (norm outside {leaked:.2e})")
    return WalkState(state.m + steps, state.n_min, u[inside], v[inside])


def momentum_centroid(state: WalkState) -> float:
    """Intensity-weighted circular mean of kappa on the folded zone [-pi/2, pi/2).

    Folding identifies kappa with kappa + pi (a single-site start fills only one
    sublattice, which makes its spectrum pi-periodic).
    """
    kappa, uh, vh = spectrum(state)
    weight = np.abs(uh) ** 2 + np.abs(vh) ** 2
    if not np.any(weight):
        raise ValueError("momentum centroid of a zero state")
    z = np.sum(weight * np.exp(2j * kappa))
    c = 0.5 * math.atan2(z.imag, z.real)
    return c - math.pi if c >= math.pi / 2 else c


def centroid_series(traj: Trajectory) -> NDArray[np.float64]:
    """Centroids along a trajectory, unwrapped across samples (period pi)."""
    raw = np.array([momentum_centroid(s) for s in traj])
    return np.unwrap(raw, period=np.pi)


def band_populations(state: WalkState, kappa_offset: float = 0.0) -> Tuple[float, float]:
    """Weights (P_plus, P_minus) of the field in the two bands.

    The amplitude pair sampled at ``kappa`` is projected on the eigenvectors of
    ``M(kappa + kappa_offset)``; pass the accumulated drift when the state is
    held in a co-moving momentum frame.
    """
    kappa, uh, vh = spectrum(state)
    total = float(np.sum(np.abs(uh) ** 2 + np.abs(vh) ** 2))
    if total == 0.0:
        raise ValueError("band populations of a zero state")
    ep, em = _eigvecs(kappa + kappa_offset)
    cp = np.conj(ep[:, 0]) * uh + np.conj(ep[:, 1]) * vh
    cm = np.conj(em[:, 0]) * uh + np.conj(em[:, 1]) * vh
    pp = float(np.sum(np.abs(cp) ** 2)) / total
    pm = float(np.sum(np.abs(cm) ** 2)) / total
    return pp, pm
