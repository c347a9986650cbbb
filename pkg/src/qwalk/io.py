"""
Run configuration, grid CSV, PGM heatmaps and JSON reports.

Every writer is deterministic: same inputs give the same bytes, with no
timestamps and no locale-dependent formatting.

Config grammar (JSON object; unknown keys are rejected)::

    {
      "steps": 70,                          # required, int >= 0
      "record_every": 1,                    # optional, int >= 1
      "initial": {
        "position": 0,                      # required, int
        "spinor": "down",                   # "up" | "down" | "plus" | [re_up, im_up, re_down, im_down]
        "packet": {"width": 10, "kappa": 0.0, "band": "plus"}   # optional
      },
      "phase": {                            # optional, default: no gradient
        "mode": "linear-rational", "q": 1, "p": 32,           # or
        "mode": "linear-float", "alpha": 0.19,                 # or
        "mode": "tabulated", "n_min": -70, "phi_u": [...], "phi_v": [...]
        "u_share": 0.0                      # linear modes only; fraction of gradient on u
      },
      "coin": [[[re, im], [re, im]], [[re, im], [re, im]]],   # optional
      "outputs": {                          # optional
        "grids": ["u", "v", "total"],
        "heatmaps": ["u", "v", "total"],
        "series": ["loop-energy", "variance", "fidelity", "corner-decay"]
      }
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .analysis import SeriesReport
from .core import CoinOp, PhaseProfile, Spinor, Trajectory

__all__ = [
    "ConfigError",
    "PacketSpec",
    "RunConfig",
    "parse_config",
    "format_value",
    "write_grid",
    "read_grid",
    "write_heatmap",
    "heatmap_pixels",
    "write_report",
]

GRID_KINDS = ("u", "v", "total")
SERIES_KINDS = ("loop-energy", "variance", "fidelity", "corner-decay")
LOG_DECADES = 6


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


@dataclass(frozen=True)
class PacketSpec:
    width: float
    kappa: float
    band: str


@dataclass(frozen=True)
class RunConfig:
    steps: int
    position: int = 0
    spinor: Spinor = field(default_factory=lambda: Spinor.named("down"))
    packet: Optional[PacketSpec] = None
    phase: PhaseProfile = field(default_factory=PhaseProfile.none)
    coin: CoinOp = field(default_factory=CoinOp.balanced)
    grids: Tuple[str, ...] = ("u", "v")
    heatmaps: Tuple[str, ...] = ("u", "v")
    series: Tuple[str, ...] = ()
    record_every: int = 1


def _no_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown key")


def _int(obj, key, path, default=None, minimum=None):
    where = f"{path}.{key}" if path else key
    if key not in obj:
        if default is None:
            raise ConfigError(f"{where}: required")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{where}: expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {val}")
    return val


def _real(obj, key, path, default=None):
    where = f"{path}.{key}" if path else key
    if key not in obj:
        if default is None:
            raise ConfigError(f"{where}: required")
        return default
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{where}: expected a finite number, got {val!r}")
    return float(val)


def _spinor(val, where):
    if isinstance(val, str):
        try:
            return Spinor.named(val)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if (
        isinstance(val, list)
        and len(val) == 4
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)
    ):
        s = Spinor(complex(val[0], val[1]), complex(val[2], val[3]))
        if s.norm == 0.0:
            raise ConfigError(f"{where}: spinor must be non-null")
        return s
    raise ConfigError(f"{where}: expected a spinor name or four reals")


def _phase(obj):
    path = "phase"
    if not isinstance(obj, dict) or "mode" not in obj:
        raise ConfigError("phase.mode: required")
    mode = obj["mode"]
    try:
        if mode == "linear-rational":
            _check_keys(obj, {"mode", "q", "p", "u_share"}, path)
            return PhaseProfile.rational(
                _int(obj, "q", path), _int(obj, "p", path, minimum=1), _real(obj, "u_share", path, 0.0)
            )
        if mode == "linear-float":
            _check_keys(obj, {"mode", "alpha", "u_share"}, path)
            return PhaseProfile.linear(_real(obj, "alpha", path), _real(obj, "u_share", path, 0.0))
        if mode == "tabulated":
            _check_keys(obj, {"mode", "n_min", "phi_u", "phi_v"}, path)
            for key in ("phi_u", "phi_v"):
                if not isinstance(obj.get(key), list):
                    raise ConfigError(f"phase.{key}: expected a list of numbers")
            return PhaseProfile.tabulated(_int(obj, "n_min", path), obj["phi_u"], obj["phi_v"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"phase: {exc}") from None
    raise ConfigError(f"phase.mode: unknown mode {mode!r}")


def _coin(val):
    try:
        arr = np.array(val, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError("coin: expected [[[re, im], [re, im]], [[re, im], [re, im]]]") from None
    if arr.shape != (2, 2, 2):
        raise ConfigError("coin: expected [[[re, im], [re, im]], [[re, im], [re, im]]]")
    try:
        return CoinOp(arr[..., 0] + 1j * arr[..., 1])
    except ValueError as exc:
        raise ConfigError(f"coin: {exc}") from None


def _names(obj, key, allowed):
    val = obj.get(key, [])
    if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
        raise ConfigError(f"outputs.{key}: expected a list of names")
    for name in val:
        if name not in allowed:
            raise ConfigError(f"outputs.{key}: unknown entry {name!r}")
    return tuple(val)


def parse_config(text: bytes) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not UTF-8: {exc}") from None
    try:
        root = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_keys(root, {"steps", "record_every", "initial", "phase", "coin", "outputs"}, "")
    steps = _int(root, "steps", "", minimum=0)
    record_every = _int(root, "record_every", "", default=1, minimum=1)

    if "initial" not in root:
        raise ConfigError("initial: required")
    init = root["initial"]
    _check_keys(init, {"position", "spinor", "packet"}, "initial")
    position = _int(init, "position", "initial")
    spinor = _spinor(init.get("spinor", "down"), "initial.spinor")
    packet = None
    if "packet" in init:
        pk = init["packet"]
        _check_keys(pk, {"width", "kappa", "band"}, "initial.packet")
        width = _real(pk, "width", "initial.packet")
        if width < 1.0:
            raise ConfigError(f"initial.packet.width: must be >= 1, got {width}")
        band = pk.get("band", "plus")
        if band not in ("plus", "minus"):
            raise ConfigError(f"initial.packet.band: expected 'plus' or 'minus', got {band!r}")
        packet = PacketSpec(width, _real(pk, "kappa", "initial.packet", 0.0), band)

    phase = _phase(root["phase"]) if "phase" in root else PhaseProfile.none()
    coin = _coin(root["coin"]) if "coin" in root else CoinOp.balanced()

    grids, heatmaps, series = ("u", "v"), ("u", "v"), ()
    if "outputs" in root:
        outs = root["outputs"]
        _check_keys(outs, {"grids", "heatmaps", "series"}, "outputs")
        grids = _names(outs, "grids", GRID_KINDS)
        heatmaps = _names(outs, "heatmaps", GRID_KINDS)
        series = _names(outs, "series", SERIES_KINDS)

    return RunConfig(
        steps=steps, position=position, spinor=spinor, packet=packet, phase=phase,
        coin=coin, grids=grids, heatmaps=heatmaps, series=series, record_every=record_every,
    )


def format_value(x: float) -> str:
    """Shortest round-trip decimal; integral values lose the trailing '.0'."""
    text = repr(float(x))
    if text.endswith(".0"):
        text = text[:-2]
    return "0" if text == "-0" else text


def write_grid(traj: Trajectory, which: str, dest) -> Path:
    """CSV of intensities: header ``m,<n_min>,...,<n_max>``, one row per recorded step."""
    grid = traj.intensity(which)
    if grid.shape[0] == 0:
        raise ValueError("empty trajectory")
    lines = [",".join(["m"] + [str(n) for n in traj.positions])]
    for m, row in zip(traj.m, grid):
        lines.append(",".join([str(int(m))] + [format_value(x) for x in row]))
    dest = Path(dest)
    dest.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    return dest


def read_grid(src) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_grid`: ``(m, positions, grid)``."""
    rows = Path(src).read_text(encoding="utf-8").splitlines()
    header = rows[0].split(",")
    if header[0] != "m":
        raise ValueError("grid header must start with 'm'")
    positions = np.array([int(x) for x in header[1:]], dtype=np.int64)
    m, values = [], []
    for line in rows[1:]:
        cells = line.split(",")
        m.append(int(cells[0]))
        values.append([float(x) for x in cells[1:]])
    return np.array(m, dtype=np.int64), positions, np.array(values, dtype=np.float64)


def heatmap_pixels(grid: np.ndarray) -> np.ndarray:
    """Map intensities to gray levels on a 6-decade log scale relative to the grid maximum."""
    grid = np.asarray(grid, dtype=np.float64)
    peak = float(grid.max()) if grid.size else 0.0
    out = np.zeros(grid.shape, dtype=np.uint8)
    if peak <= 0.0:
        return out
    flat = out.ravel()
    for j, val in enumerate(grid.ravel()):
        if val <= 0.0:
            continue
        # math.log10 keeps the mapping independent of numpy's SIMD dispatch
        level = 255.0 * (math.log10(val / peak) + LOG_DECADES) / LOG_DECADES
        flat[j] = min(255, max(0, math.floor(level + 0.5)))
    return out


def write_heatmap(traj: Trajectory, which: str, dest) -> Path:
    """Binary PGM (P5): one column per position, one row per recorded step."""
    pixels = heatmap_pixels(traj.intensity(which))
    height, width = pixels.shape
    dest = Path(dest)
    dest.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes())
    return dest


def _report_dict(r: SeriesReport) -> dict:
    return {
        "name": r.name,
        "m": [int(m) for m in r.m_values],
        "values": [float(v) for v in r.values],
        "scalar_name": r.scalar_name,
        "extracted_scalar": None if r.extracted_scalar is None else float(r.extracted_scalar),
    }


def write_report(reports: Sequence[SeriesReport], dest, extra: Optional[dict] = None) -> Path:
    """JSON file ``{"reports": [...]}`` (plus optional summary scalars); key order is fixed."""
    doc = {"reports": [_report_dict(r) for r in reports]}
    if extra:
        doc["summary"] = {k: extra[k] for k in sorted(extra)}
    dest = Path(dest)
    dest.write_bytes((json.dumps(doc, indent=2, allow_nan=False) + "\n").encode("utf-8"))
    return dest
