"""Node-centred rectangular grid, zero-flux Laplacian and trapezoidal quadrature.

Fields are numpy arrays indexed ``f[i, j]`` with node ``(i, j)`` located at
``(i*dx, j*dy)``; boundary nodes are part of the field. Any leading axes are
carried through, so a ``(4, nx, ny)`` stack of compartments is handled in a
single call.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Rectangle ``[0, Lx] x [0, Ly]`` sampled with ``nx x ny`` nodes."""

    nx: int = 64
    ny: int = 64
    Lx: float = 10.0
    Ly: float = 10.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 3:
                raise ValueError(f"{name} must be an integer >= 3, got {n!r}")
        for name in ("Lx", "Ly"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return self.Lx / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.Ly / (self.ny - 1)

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates as two ``(nx, ny)`` arrays."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoidal weights, shape ``(nx, ny)``, summing to the area."""
        wx = np.full(self.nx, self.dx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.dy)
        wy[[0, -1]] *= 0.5
        w = np.outer(wx, wy)
        w.setflags(write=False)
        return w


def _check_shape(f: np.ndarray, g: GridSpec) -> None:
    if f.ndim < 2 or f.shape[-2:] != g.shape:
        raise ValueError(f"field of shape {f.shape} does not conform to grid {g.shape}")


def laplacian_neumann(f, g: GridSpec) -> np.ndarray:
    """Five-point Laplacian with zero normal flux on every edge.

    Interior nodes use the standard second-order stencil. On the boundary the
    missing neighbour is replaced by a ghost node mirroring the first
    interior node, so at ``i = 0`` the x part reads ``2 (f[1] - f[0]) / dx^2``.
    """
    f = np.asarray(f, dtype=float)
    _check_shape(f, g)

    # ghost layer: mirror of the first interior row/column
    padded = np.empty(f.shape[:-2] + (g.nx + 2, g.ny + 2))
    padded[..., 1:-1, 1:-1] = f
    padded[..., 0, 1:-1] = f[..., 1, :]
    padded[..., -1, 1:-1] = f[..., -2, :]
    padded[..., :, 0] = padded[..., :, 2]
    padded[..., :, -1] = padded[..., :, -3]

    centre = padded[..., 1:-1, 1:-1]
    lap_x = padded[..., :-2, 1:-1] + padded[..., 2:, 1:-1]
    lap_x -= 2.0 * centre
    lap_x /= g.dx**2
    lap_y = padded[..., 1:-1, :-2] + padded[..., 1:-1, 2:]
    lap_y -= 2.0 * centre
    lap_y /= g.dy**2
    lap_x += lap_y
    return lap_x


def integrate_field(f, g: GridSpec):
    """Trapezoidal integral over the rectangle; leading axes are kept."""
    f = np.asarray(f, dtype=float)
    _check_shape(f, g)
    return np.sum(f * g.weights, axis=(-2, -1))


def inner_product(f, h, g: GridSpec) -> float:
    """Trapezoidal L2 inner product of two fields."""
    return float(integrate_field(np.asarray(f) * np.asarray(h), g))
