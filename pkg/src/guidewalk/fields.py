"""Dense real-valued fields over a 2-D grid or a flat index set.

All numeric state in the package travels as a `Field`: latents, noise
predictions, spatial masks and mean images. Fields are immutable, stored as
float64, and required to stay finite; operations validate shapes instead of
broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn

from .errors import ShapeMismatchError

GRID = "grid"
FLAT = "flat"


@dataclass(frozen=True)
class Shape:
    """Field geometry: an (h, w) grid or a flat vector of length d."""

    kind: str
    dims: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in (GRID, FLAT):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        dims = tuple(int(n) for n in self.dims)
        expected = 2 if self.kind == GRID else 1
        if len(dims) != expected:
            raise ValueError(f"{self.kind} shape needs {expected} dims, got {dims}")
        if any(n < 1 for n in dims):
            raise ValueError(f"dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def grid(cls, h: int, w: int) -> "Shape":
        return cls(GRID, (h, w))

    @classmethod
    def flat(cls, d: int) -> "Shape":
        return cls(FLAT, (d,))

    @property
    def volume(self) -> int:
        return int(np.prod(self.dims))

    @property
    def is_grid(self) -> bool:
        return self.kind == GRID


@dataclass(frozen=True, eq=False)
class Field:
    """An immutable float64 array tied to a `Shape`.

    Values are stored row-major as a flat vector regardless of shape kind;
    `grid_values` exposes the (h, w) view for grid fields.
    """

    shape: Shape
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.shape.volume:
            raise ShapeMismatchError(
                f"value count {vals.size} != shape volume {self.shape.volume}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, shape: Shape) -> "Field":
        return cls(shape, np.zeros(shape.volume))

    @classmethod
    def full(cls, shape: Shape, value: float) -> "Field":
        return cls(shape, np.full(shape.volume, float(value)))

    @classmethod
    def from_grid(cls, values) -> "Field":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={arr.ndim}")
        return cls(Shape.grid(*arr.shape), arr.reshape(-1))

    @property
    def grid_values(self) -> np.ndarray:
        if not self.shape.is_grid:
            raise ShapeMismatchError("flat field has no grid view")
        return self.values.reshape(self.shape.dims)

    def allclose(self, other: "Field", atol: float = 0.0, rtol: float = 1e-12) -> bool:
        return self.shape == other.shape and np.allclose(
            self.values, other.values, atol=atol, rtol=rtol
        )


def require_same_shape(*fields: Field) -> Shape:
    shapes = {f.shape for f in fields}
    if len(shapes) != 1:
        raise ShapeMismatchError(f"shapes differ: {sorted(s.dims for s in shapes)}")
    return fields[0].shape


def axpy(a: float, x: Field, y: Field) -> Field:
    """Elementwise a*x + y."""
    shape = require_same_shape(x, y)
    return Field(shape, float(a) * x.values + y.values)


def dct2(f: Field) -> np.ndarray:
    """Orthonormal 2-D DCT-II coefficients of a grid field (Parseval-exact)."""
    return dctn(f.grid_values, norm="ortho")


def band_energy(f: Field, band: str, cutoff: int) -> float:
    """Energy of the DCT coefficients inside one frequency band.

    The low band holds indices with max(i, j) < cutoff, the high band the
    rest; with orthonormal scaling low + high equals the field's total
    energy exactly.
    """
    if band not in ("low", "high"):
        raise ValueError(f"band must be 'low' or 'high', got {band!r}")
    if not f.shape.is_grid:
        raise ShapeMismatchError("band_energy requires a grid field")
    h, w = f.shape.dims
    if not 1 <= cutoff < min(h, w):
        raise ValueError(f"cutoff must be in [1, {min(h, w) - 1}], got {cutoff}")
    coeffs = dct2(f)
    i, j = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    low = np.maximum(i, j) < cutoff
    if band == "low":
        return float((coeffs[low] ** 2).sum())
    return float((coeffs[~low] ** 2).sum())


def band_limited(values: np.ndarray, cutoff: int, band: str) -> np.ndarray:
    """Project a 2-D array onto one DCT band (supported there exactly)."""
    from scipy.fft import idctn

    h, w = values.shape
    coeffs = dctn(values, norm="ortho")
    i, j = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    low = np.maximum(i, j) < cutoff
    keep = low if band == "low" else ~low
    coeffs = np.where(keep, coeffs, 0.0)
    return idctn(coeffs, norm="ortho")
