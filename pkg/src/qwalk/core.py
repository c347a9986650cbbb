"""
Lattice field model and exact one-step evolution of the two-loop quantum walk.

The walker lives on an integer line and carries a two-level internal state:
``u`` is the upper-loop amplitude, ``v`` the lower-loop amplitude.  One step
applies the coin to the internal state, moves ``u`` one site to the left and
``v`` one site to the right, then multiplies each component by a
position-dependent phase:

    u[n] <- (c11 u[n+1] + c12 v[n+1]) exp(i phi_u(n))
    v[n] <- (c21 u[n-1] + c22 v[n-1]) exp(i phi_v(n))

With the balanced coupler coin and ``phi_v(n) = n * alpha`` this is the
fiber-loop walk with a linear phase gradient.

Windows are fixed and finite; amplitude that would leave the window raises
:class:`BoundaryError` instead of being clipped or wrapped around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from ._backend import kernels

__all__ = [
    "BoundaryError",
    "Spinor",
    "CoinOp",
    "PhaseProfile",
    "WalkState",
    "Trajectory",
    "make_initial",
    "make_packet",
    "step",
    "evolve",
    "fidelity",
]

SQRT1_2 = math.sqrt(0.5)  # correctly rounded 1/sqrt 2
# relative envelope below which a packet's tail is stored as an exact zero
PACKET_CUTOFF = 1e-12


class BoundaryError(RuntimeError):
    """Nonzero amplitude would be shifted across the edge of the position window."""


@dataclass(frozen=True)
class Spinor:
    """Internal two-level state: ``up`` (upper loop) and ``down`` (lower loop)."""

    up: complex
    down: complex

    def __post_init__(self):
        object.__setattr__(self, "up", complex(self.up))
        object.__setattr__(self, "down", complex(self.down))
        if not (np.isfinite(self.up) and np.isfinite(self.down)):
            raise ValueError("spinor amplitudes must be finite")

    @property
    def norm(self) -> float:
        return math.sqrt(abs(self.up) ** 2 + abs(self.down) ** 2)

    def normalized(self) -> "Spinor":
        nrm = self.norm
        if nrm == 0.0:
            raise ValueError("zero spinor cannot be normalized")
        return Spinor(self.up / nrm, self.down / nrm)

    @classmethod
    def named(cls, name: str) -> "Spinor":
        """``"up"``, ``"down"`` or ``"plus"`` (equal real superposition)."""
        table = {
            "up": (1.0, 0.0),
            "down": (0.0, 1.0),
            "plus": (SQRT1_2, SQRT1_2),
        }
        try:
            return cls(*table[name])
        except KeyError:
            raise ValueError(f"unknown spinor name {name!r}; expected one of {sorted(table)}") from None


@dataclass(frozen=True)
class CoinOp:
    """2x2 unitary acting on the internal state once per step."""

    matrix: NDArray[np.complex128]

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.shape != (2, 2):
            raise ValueError(f"coin must be 2x2, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("coin entries must be finite")
        err = np.abs(mat.conj().T @ mat - np.eye(2)).max()
        if err > 1e-12:
            raise ValueError(f"coin is not unitary (max |C^H C - I| = {err:.3e})")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def balanced(cls) -> "CoinOp":
        """The 50/50 coupler: (1/sqrt 2) [[1, i], [i, 1]]."""
        return cls(np.array([[SQRT1_2, 1j * SQRT1_2], [1j * SQRT1_2, SQRT1_2]]))

    @classmethod
    def from_entries(cls, c11, c12, c21, c22) -> "CoinOp":
        return cls(np.array([[c11, c12], [c21, c22]], dtype=np.complex128))

    def __eq__(self, other):
        if not isinstance(other, CoinOp):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())


def _as_share(share) -> Union[Fraction, float]:
    # binary fractions such as 0.5 stay exact; anything else is kept as a float
    frac = Fraction(share)
    return frac if frac.denominator <= 2**20 else float(share)


@dataclass(frozen=True)
class PhaseProfile:
    """Per-site phase shifts applied after each step.

    Use the constructors rather than the raw fields:

    * :meth:`rational` -- gradient ``alpha = 2 pi q / p``; phases are reduced
      exactly modulo 2 pi, so the profile is exactly ``p``-periodic in ``n``.
    * :meth:`linear` -- gradient ``alpha`` in radians per site.
    * :meth:`tabulated` -- explicit ``phi_u``, ``phi_v`` arrays starting at ``n_min``.

    For the linear modes ``u_share`` is the fraction of the gradient put on the
    upper component; the rest goes on the lower one.  ``u_share = 0`` is the
    fiber setup (phase modulator in the lower loop).
    """

    mode: str
    q: int = 0
    p: int = 1
    alpha_value: float = 0.0
    u_share: Union[Fraction, float] = Fraction(0)
    n_min: int = 0
    phi_u: Optional[NDArray[np.float64]] = field(default=None, compare=False)
    phi_v: Optional[NDArray[np.float64]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode == "linear-rational":
            if self.p < 1:
                raise ValueError(f"p must be a positive integer, got {self.p}")
            if math.gcd(self.q, self.p) != 1:
                raise ValueError(f"q/p = {self.q}/{self.p} is not gcd-reduced")
        elif self.mode == "linear-float":
            if not math.isfinite(self.alpha_value):
                raise ValueError("alpha must be finite")
        elif self.mode == "tabulated":
            phi_u = np.array(self.phi_u, dtype=np.float64)
            phi_v = np.array(self.phi_v, dtype=np.float64)
            if phi_u.ndim != 1 or phi_u.shape != phi_v.shape:
                raise ValueError("phi_u and phi_v must be 1-D arrays of equal length")
            if not (np.all(np.isfinite(phi_u)) and np.all(np.isfinite(phi_v))):
                raise ValueError("tabulated phases must be finite")
            phi_u.flags.writeable = False
            phi_v.flags.writeable = False
            object.__setattr__(self, "phi_u", phi_u)
            object.__setattr__(self, "phi_v", phi_v)
        else:
            raise ValueError(f"unknown phase mode {self.mode!r}")
        if self.mode != "tabulated":
            share = _as_share(self.u_share)
            if not 0 <= share <= 1:
                raise ValueError(f"u_share must lie in [0, 1], got {share}")
            object.__setattr__(self, "u_share", share)

    @classmethod
    def none(cls) -> "PhaseProfile":
        return cls("linear-rational", q=0, p=1)

    @classmethod
    def rational(cls, q: int, p: int, u_share=Fraction(0)) -> "PhaseProfile":
        return cls("linear-rational", q=int(q), p=int(p), u_share=u_share)

    @classmethod
    def linear(cls, alpha: float, u_share=Fraction(0)) -> "PhaseProfile":
        return cls("linear-float", alpha_value=float(alpha), u_share=u_share)

    @classmethod
    def tabulated(cls, n_min: int, phi_u: Sequence[float], phi_v: Sequence[float]) -> "PhaseProfile":
        return cls("tabulated", n_min=int(n_min), phi_u=phi_u, phi_v=phi_v)

    @property
    def is_linear(self) -> bool:
        return self.mode != "tabulated"

    @property
    def alpha(self) -> float:
        """Total gradient (radians per site) summed over both components."""
        if self.mode == "linear-rational":
            return 2.0 * math.pi * self.q / self.p
        if self.mode == "linear-float":
            return self.alpha_value
        raise ValueError("tabulated profiles have no single gradient")

    @property
    def gradients(self) -> Tuple[float, float]:
        """(alpha_u, alpha_v): per-component gradients in radians per site."""
        share = float(self.u_share)
        return self.alpha * share, self.alpha * (1.0 - share)

    @property
    def is_zero(self) -> bool:
        if self.mode == "linear-rational":
            return self.q == 0
        if self.mode == "linear-float":
            return self.alpha_value == 0.0
        return not (np.any(self.phi_u) or np.any(self.phi_v))

    def angles(self, n: NDArray[np.int64]) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Phase angles (phi_u(n), phi_v(n)) in radians for integer positions ``n``."""
        n = np.asarray(n, dtype=np.int64)
        if self.mode == "tabulated":
            idx = n - self.n_min
            if idx.size and (idx.min() < 0 or idx.max() >= self.phi_u.size):
                raise ValueError(
                    f"tabulated phases cover [{self.n_min}, {self.n_min + self.phi_u.size - 1}], "
                    f"window needs [{n.min()}, {n.max()}]"
                )
            return self.phi_u[idx].copy(), self.phi_v[idx].copy()
        if self.mode == "linear-float":
            share = float(self.u_share)
            return n * (self.alpha_value * share), n * (self.alpha_value * (1.0 - share))
        share = self.u_share
        if isinstance(share, float):
            a = self.alpha
            return n * (a * share), n * (a * (1.0 - share))
        return _rational_angles(n, Fraction(self.q, self.p) * share), _rational_angles(
            n, Fraction(self.q, self.p) * (1 - share)
        )

    def factors(self, n: NDArray[np.int64]) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """Unimodular multipliers exp(i phi_u(n)), exp(i phi_v(n))."""
        phi_u, phi_v = self.angles(n)
        return _unimodular(phi_u), _unimodular(phi_v)


def _rational_angles(n, turns_per_site: Fraction) -> NDArray[np.float64]:
    # angle = 2 pi * frac(n * a/b), reduced with integer arithmetic
    a, b = turns_per_site.numerator, turns_per_site.denominator
    if a == 0:
        return np.zeros(n.shape)
    residues = np.array([(int(k) * a) % b for k in n.ravel()], dtype=np.float64).reshape(n.shape)
    return 2.0 * math.pi * residues / b


def _unimodular(phi):
    # libm rather than numpy's SIMD cos/sin: the factors must not depend on the CPU
    flat = phi.ravel()
    out = np.empty(flat.shape, dtype=np.complex128)
    out.real = [math.cos(x) for x in flat]
    out.imag = [math.sin(x) for x in flat]
    return out.reshape(phi.shape)


def _frozen(a) -> NDArray[np.complex128]:
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WalkState:
    """Field ``{u_n, v_n}`` on the window ``[n_min, n_max]`` after ``m`` steps.

    Arrays are read-only; states can be shared between threads freely.
    """

    m: int
    n_min: int
    u: NDArray[np.complex128]
    v: NDArray[np.complex128]

    def __post_init__(self):
        u, v = _frozen(self.u), _frozen(self.v)
        if u.ndim != 1 or u.shape != v.shape or u.size == 0:
            raise ValueError("u and v must be non-empty 1-D arrays of equal length")
        if self.m < 0:
            raise ValueError("step index m must be non-negative")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n_max(self) -> int:
        return self.n_min + self.u.size - 1

    @property
    def window(self) -> Tuple[int, int]:
        return self.n_min, self.n_max

    @property
    def positions(self) -> NDArray[np.int64]:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def intensity_u(self) -> NDArray[np.float64]:
        return self.u.real**2 + self.u.imag**2

    @property
    def intensity_v(self) -> NDArray[np.float64]:
        return self.v.real**2 + self.v.imag**2

    @property
    def norm2(self) -> float:
        return float(np.sum(self.intensity_u) + np.sum(self.intensity_v))

    def amplitude(self, n: int) -> Spinor:
        if not self.n_min <= n <= self.n_max:
            raise IndexError(f"position {n} outside window {self.window}")
        j = n - self.n_min
        return Spinor(self.u[j], self.v[j])

    def padded(self, left: int, right: Optional[int] = None) -> "WalkState":
        """Same field on a window widened by zero cells."""
        right = left if right is None else right
        if left < 0 or right < 0:
            raise ValueError("padding must be non-negative")
        pad = (left, right)
        return WalkState(self.m, self.n_min - left, np.pad(self.u, pad), np.pad(self.v, pad))

    def __eq__(self, other):
        if not isinstance(other, WalkState):
            return NotImplemented
        return (
            self.m == other.m
            and self.n_min == other.n_min
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded states of one run, rows ordered by step index.

    In lean mode only the intensity grids are kept (``u``/``v`` are ``None``).
    Row ``k`` holds the state after ``m[k]`` steps.
    """

    m: NDArray[np.int64]
    n_min: int
    u: Optional[NDArray[np.complex128]]
    v: Optional[NDArray[np.complex128]]
    coin: CoinOp
    phase: PhaseProfile
    intensity_u: NDArray[np.float64] = field(default=None)
    intensity_v: NDArray[np.float64] = field(default=None)

    def __post_init__(self):
        if self.u is not None:
            object.__setattr__(self, "intensity_u", self.u.real**2 + self.u.imag**2)
            object.__setattr__(self, "intensity_v", self.v.real**2 + self.v.imag**2)
        for name in ("m", "u", "v", "intensity_u", "intensity_v"):
            arr = getattr(self, name)
            if arr is not None:
                arr.flags.writeable = False

    @property
    def lean(self) -> bool:
        return self.u is None

    @property
    def n_max(self) -> int:
        return self.n_min + self.intensity_u.shape[1] - 1

    @property
    def positions(self) -> NDArray[np.int64]:
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def intensity_total(self) -> NDArray[np.float64]:
        return self.intensity_u + self.intensity_v

    def intensity(self, which: str) -> NDArray[np.float64]:
        if which == "u":
            return self.intensity_u
        if which == "v":
            return self.intensity_v
        if which == "total":
            return self.intensity_total
        raise ValueError(f"which must be 'u', 'v' or 'total', got {which!r}")

    def __len__(self):
        return self.m.size

    def __getitem__(self, k: int) -> WalkState:
        if self.lean:
            raise TypeError("lean trajectory keeps intensities only")
        return WalkState(int(self.m[k]), self.n_min, self.u[k], self.v[k])

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def states(self):
        return list(self)


def make_initial(n0: int, s: Spinor, window: Tuple[int, int]) -> WalkState:
    """Single-site start: spinor ``s`` at ``n0``, normalized, zero elsewhere."""
    n_min, n_max = window
    if n_max < n_min:
        raise ValueError(f"empty window {window}")
    if not n_min <= n0 <= n_max:
        raise ValueError(f"start position {n0} outside window {window}")
    s = s.normalized()
    u = np.zeros(n_max - n_min + 1, dtype=np.complex128)
    v = np.zeros_like(u)
    u[n0 - n_min] = s.up
    v[n0 - n_min] = s.down
    return WalkState(0, n_min, u, v)


def packet_radius(width: float) -> int:
    """Half-width beyond which a Gaussian packet envelope drops below the storage cutoff."""
    return int(math.ceil(2.0 * width * math.sqrt(-math.log(PACKET_CUTOFF))))


def make_packet(
    n0: int,
    width: float,
    kappa0: float,
    band: str,
    window: Optional[Tuple[int, int]] = None,
) -> WalkState:
    """Gaussian packet carried by one band at quasi-momentum ``kappa0``.

    Amplitudes are ``exp(-(n-n0)^2 / (4 width^2)) exp(i kappa0 n) (U, V)`` with
    ``(U, V)`` the band eigenvector at ``kappa0``.  Sites where the envelope is
    below ``PACKET_CUTOFF`` hold exact zeros, so the packet has finite support.
    Without a window, the smallest window holding that support is used.
    """
    from .spectral import band_eigenvectors

    if not width >= 1.0:
        raise ValueError(f"packet width must be >= 1, got {width}")
    if band not in ("plus", "minus"):
        raise ValueError(f"band must be 'plus' or 'minus', got {band!r}")
    radius = packet_radius(width)
    if window is None:
        window = (n0 - radius, n0 + radius)
    n_min, n_max = window
    if not n_min <= n0 <= n_max:
        raise ValueError(f"packet center {n0} outside window {window}")
    margin = min(n0 - n_min, n_max - n0)
    edge_env = math.exp(-(margin**2) / (4.0 * width**2))
    if edge_env >= PACKET_CUTOFF:
        raise ValueError(
            f"window {window} truncates the packet: edge envelope {edge_env:.2e} "
            f">= {PACKET_CUTOFF:.0e} (need {radius} sites each side of n0, have {margin})"
        )
    plus, minus = band_eigenvectors(kappa0)
    spin = plus if band == "plus" else minus
    n = np.arange(n_min, n_max + 1)
    env = np.exp(-((n - n0) ** 2) / (4.0 * width**2))
    env[env < PACKET_CUTOFF] = 0.0
    carrier = env * np.exp(1j * kappa0 * n)
    u = carrier * spin.up
    v = carrier * spin.down
    nrm = math.sqrt(float(np.sum(np.abs(u) ** 2) + np.sum(np.abs(v) ** 2)))
    return WalkState(0, n_min, u / nrm, v / nrm)


def _run(state: WalkState, steps: int, coin: CoinOp, phase: PhaseProfile, record_every: int):
    rows = steps // record_every + 1
    size = state.u.size
    U = np.empty((rows, size), dtype=np.complex128)
    V = np.empty((rows, size), dtype=np.complex128)
    eu, ev = phase.factors(state.positions)
    status = kernels.evolve_kernel(state.u, state.v, coin.matrix, eu, ev, steps, record_every, U, V)
    if status >= 0:
        raise BoundaryError(
            f"step {state.m + status} -> {state.m + status + 1} would move nonzero amplitude "
            f"outside window {state.window}"
        )
    m = state.m + record_every * np.arange(rows, dtype=np.int64)
    return m, U, V


def step(state: WalkState, coin: Optional[CoinOp] = None, phase: Optional[PhaseProfile] = None) -> WalkState:
    """Apply one step of the walk; the window stays fixed."""
    coin = CoinOp.balanced() if coin is None else coin
    phase = PhaseProfile.none() if phase is None else phase
    m, U, V = _run(state, 1, coin, phase, 1)
    return WalkState(int(m[1]), state.n_min, U[1], V[1])


def evolve(
    state: WalkState,
    steps: int,
    coin: Optional[CoinOp] = None,
    phase: Optional[PhaseProfile] = None,
    *,
    record_every: int = 1,
    lean: bool = False,
    grow: bool = False,
) -> Trajectory:
    """Run ``steps`` steps and record every ``record_every``-th state (always m=0).

    ``grow=True`` first pads the window by ``steps`` zero cells on each side so
    the run can never hit the boundary.  ``lean=True`` keeps intensities only.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    coin = CoinOp.balanced() if coin is None else coin
    phase = PhaseProfile.none() if phase is None else phase
    if grow and steps:
        state = state.padded(steps)
    m, U, V = _run(state, steps, coin, phase, record_every)
    if lean:
        return Trajectory(
            m, state.n_min, None, None, coin, phase,
            intensity_u=U.real**2 + U.imag**2, intensity_v=V.real**2 + V.imag**2,
        )
    return Trajectory(m, state.n_min, U, V, coin, phase)


def fidelity(a: WalkState, b: WalkState) -> float:
    """Squared overlap |<a|b>|^2 of two states on the same window."""
    if a.window != b.window:
        raise ValueError(f"window mismatch: {a.window} vs {b.window}")
    overlap = np.vdot(a.u, b.u) + np.vdot(a.v, b.v)
    return float(overlap.real**2 + overlap.imag**2)
