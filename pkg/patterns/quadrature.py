from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from .geometry import Region


@dataclass(slots=True, frozen=True)
class QuadratureGrid:
    """Tensor midpoint rule restricted to a region.

    ``nodes`` are the cell midpoints that fall inside the region and
    ``cell_volume`` the common cell volume, so ``∫_B u ≈ cell_volume * Σ u(nodes)``.
    """

    nodes: np.ndarray
    cell_volume: float

    def integrate(self, values: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(values))

    def __len__(self) -> int:
        return self.nodes.shape[0]


def nodes_per_axis_for(dim: int, requested: int | None = None, max_nodes: int | None = None) -> int:
    requested = requested or getattr(settings, "PALM_QUADRATURE_NODES_PER_AXIS", 64)
    max_nodes = max_nodes or getattr(settings, "PALM_QUADRATURE_MAX_NODES", 4096)
    cap = int(math.floor(max_nodes ** (1.0 / dim) + 1e-9))
    return max(1, min(requested, cap))


def quadrature_grid(region: Region, nodes_per_axis: int | None = None, max_nodes: int | None = None) -> QuadratureGrid:
    box = region.bounding_box()
    n = nodes_per_axis_for(region.dim, nodes_per_axis, max_nodes)
    lo = box.lower.as_array()
    step = box.widths / n
    axes = [lo[i] + step[i] * (np.arange(n) + 0.5) for i in range(region.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.dim)
    nodes = mesh[region.contains(mesh)]
    return QuadratureGrid(nodes=nodes, cell_volume=float(np.prod(step)))
