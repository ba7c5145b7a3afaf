"""Periodic lattice windows and fields stored as mantissa * exp(exponent)."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = ["TorusGrid", "ScalarField", "write_field_csv", "write_field_binary",
           "read_field_binary"]

_MAGIC = b"BWF1"
# magic, d (uint32), M (uint32), t (float64), E (float64); little endian
_HEADER = struct.Struct("<4sIIdd")


@dataclass(frozen=True)
class TorusGrid:
    """Window {-M/2, ..., M/2-1}^d of Z^d with periodic wrap.

    Arrays on the grid use the centered layout: index ``i`` along an axis
    is the site ``x = i - M//2``.
    """

    d: int
    M: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.M < 8 or self.M & (self.M - 1):
            raise ValueError(f"points per dimension must be a power of two >= 8, got {self.M}")

    @property
    def shape(self):
        return (self.M,) * self.d

    @property
    def origin(self):
        return (self.M // 2,) * self.d

    def coords(self) -> np.ndarray:
        return np.arange(self.M) - self.M // 2

    def dual_nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.M)

    def radius(self) -> np.ndarray:
        """Euclidean |x| for every window site (centered layout)."""
        x = self.coords().astype(float)
        if self.d == 1:
            return np.abs(x)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.hypot(X, Y)

    def index(self, x):
        """Array index of lattice point(s) ``x``; raises outside the window."""
        x = np.asarray(x, dtype=np.int64)
        idx = x + self.M // 2
        if np.any(idx < 0) or np.any(idx >= self.M):
            raise IndexError("lattice point outside the window")
        return idx

    def check_sizing(self, R: int, front_radius: float | None = None):
        """Aliasing guard: M >= 2R+2 and M >= 8 * (intended front radius)."""
        problems = []
        if self.M < 2 * R + 2:
            problems.append(f"M={self.M} < 2R+2={2 * R + 2}")
        if front_radius is not None and self.M < 8 * front_radius:
            problems.append(f"M={self.M} < 8 x front radius {front_radius:.4g}")
        return problems


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Field on a torus window, true value = mantissa * exp(exponent).

    The mantissa maximum is kept at 1 after each operation so that e^{nu t}
    growth lives in the exponent.  ``diagnostics`` carries guard-band
    numbers (aliasing mass, quadrature gaps) from the producer.
    """

    grid: TorusGrid
    mantissa: np.ndarray
    exponent: float
    t: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.asarray(self.mantissa, dtype=float)
        if m.shape != self.grid.shape:
            raise ValueError(f"mantissa shape {m.shape} does not match grid {self.grid.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", float(self.exponent))

    @classmethod
    def from_values(cls, grid, values, t, exponent=0.0, diagnostics=None):
        """Normalize ``values * exp(exponent)`` so that max |mantissa| = 1."""
        values = np.asarray(values, dtype=float)
        peak = float(np.max(np.abs(values)))
        if peak > 0.0 and np.isfinite(peak):
            values = values / peak
            exponent = exponent + math.log(peak)
        return cls(grid, values, exponent, t, dict(diagnostics or {}))

    def renormalized(self) -> "ScalarField":
        return ScalarField.from_values(self.grid, self.mantissa, self.t, self.exponent,
                                       self.diagnostics)

    def values(self) -> np.ndarray:
        """True values; raises OverflowError when not representable."""
        if self.exponent > 709.0:
            raise OverflowError(f"exponent {self.exponent:.4g} overflows float64")
        return self.mantissa * math.exp(self.exponent)

    def log_values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.mantissa) + self.exponent

    def at(self, x) -> float:
        """True value at lattice point ``x`` (int for d=1, pair for d=2)."""
        idx = tuple(np.atleast_1d(self.grid.index(x)))
        return float(self.mantissa[idx]) * math.exp(self.exponent)

    def log_at(self, x) -> float:
        idx = tuple(np.atleast_1d(self.grid.index(x)))
        return math.log(self.mantissa[idx]) + self.exponent

    def total(self) -> float:
        return math.fsum(self.mantissa.ravel()) * math.exp(self.exponent)

    def shifted(self, delta: float, t=None) -> "ScalarField":
        """Multiply by exp(delta) without touching the mantissa."""
        return ScalarField(self.grid, self.mantissa, self.exponent + delta,
                           self.t if t is None else t, dict(self.diagnostics))

    def scaled(self, factor: float) -> "ScalarField":
        """Multiply by ``factor`` in the mantissa (exact for powers of two)."""
        return ScalarField(self.grid, self.mantissa * factor, self.exponent, self.t,
                           dict(self.diagnostics))

    def __mul__(self, other: "ScalarField") -> "ScalarField":
        self._check_grid(other)
        return ScalarField.from_values(self.grid, self.mantissa * other.mantissa, self.t,
                                       self.exponent + other.exponent)

    def square(self) -> "ScalarField":
        return self * self

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check_grid(other)
        hi, lo = (self, other) if self.exponent >= other.exponent else (other, self)
        rel = math.exp(lo.exponent - hi.exponent)
        return ScalarField.from_values(self.grid, hi.mantissa + lo.mantissa * rel, self.t,
                                       hi.exponent)

    def ratio(self, other: "ScalarField"):
        """Log of self/other pointwise (avoids forming either value)."""
        self._check_grid(other)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (np.log(self.mantissa) - np.log(other.mantissa)
                    + (self.exponent - other.exponent))

    def _check_grid(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


def write_field_csv(f: ScalarField, path, header: str | None = None) -> None:
    """CSV with x coordinates, mantissa, exponent and the true value if finite."""
    representable = f.exponent <= 709.0
    scale = math.exp(f.exponent) if representable else None
    x = f.grid.coords()
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        cols = ["x"] if f.grid.d == 1 else ["x1", "x2"]
        fh.write(",".join(cols + ["mantissa", "exponent", "value"]) + "\n")
        e = repr(float(f.exponent))
        it = np.ndindex(*f.grid.shape)
        for idx in it:
            m = float(f.mantissa[idx])
            v = repr(m * scale) if representable else ""
            xs = ",".join(str(int(x[i])) for i in idx)
            fh.write(f"{xs},{m!r},{e},{v}\n")


def write_field_binary(f: ScalarField, path) -> None:
    """Little-endian dump: header (magic, d, M, t, E) then row-major mantissas."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, f.grid.d, f.grid.M, f.t, f.exponent))
        fh.write(np.ascontiguousarray(f.mantissa, dtype="<f8").tobytes())


def read_field_binary(path) -> ScalarField:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, d, M, t, E = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a field dump")
    grid = TorusGrid(d, M)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(grid.shape)
    return ScalarField(grid, data.astype(float), E, t)
