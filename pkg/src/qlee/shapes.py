"""Built-in obstacle masks: a symmetric airfoil and random blob unions."""

from __future__ import annotations

import numpy as np

from .diffops import GridSpec


def _blocky(fine: np.ndarray, block: int) -> np.ndarray:
    """Snap a mask to ``block x block`` tiles (majority vote) so it decomposes into few cells."""
    nx, ny = fine.shape
    tiles = fine.reshape(nx // block, block, ny // block, block).mean(axis=(1, 3)) >= 0.5
    return np.repeat(np.repeat(tiles, block, axis=0), block, axis=1)


def airfoil_mask(grid: GridSpec, chord: float = 0.125, thickness: float = 0.15, leading_edge=(0.52, 0.5),
                 block: int | None = None) -> np.ndarray:
    """Symmetric four-digit-series airfoil, ``[x, y]`` indexed.

    ``chord`` and ``leading_edge`` are fractions of the domain size;
    ``thickness`` is the maximum thickness relative to the chord.
    """
    nx, ny = grid.shape
    if block is None:
        block = max(1, min(nx, ny) // 128)
    if nx % block or ny % block:
        raise ValueError("block must divide the grid")
    c = chord * nx
    x0, yc = leading_edge[0] * nx, leading_edge[1] * ny
    xs = (np.arange(nx)[:, None] + 0.5 - x0) / c
    ys = (np.arange(ny)[None, :] + 0.5 - yc) / c
    inside = (xs >= 0) & (xs <= 1)
    xc = np.clip(xs, 0, 1)
    half = 5 * thickness * (0.2969 * np.sqrt(xc) - 0.1260 * xc - 0.3516 * xc**2 + 0.2843 * xc**3 - 0.1015 * xc**4)
    fine = inside & (np.abs(ys) <= half)
    return _blocky(fine, block)


def blob_mask(grid: GridSpec, seed: int = 0, count: int = 5, margin: float = 0.2) -> np.ndarray:
    """Union of random ellipses and rectangles kept away from the domain edge."""
    rng = np.random.default_rng(seed)
    nx, ny = grid.shape
    X, Y = np.meshgrid(np.arange(nx) + 0.5, np.arange(ny) + 0.5, indexing="ij")
    out = np.zeros((nx, ny), dtype=bool)
    for k in range(count):
        cx = rng.uniform(margin + 0.1, 1 - margin - 0.1) * nx
        cy = rng.uniform(margin + 0.1, 1 - margin - 0.1) * ny
        rx = rng.uniform(0.04, 0.12) * nx
        ry = rng.uniform(0.04, 0.12) * ny
        if k % 2:
            out |= (np.abs(X - cx) <= rx) & (np.abs(Y - cy) <= ry)
        else:
            out |= ((X - cx) / rx) ** 2 + ((Y - cy) / ry) ** 2 <= 1
    return out


BUILTIN = {"airfoil": airfoil_mask, "blobs": blob_mask}


def builtin_mask(name: str, grid: GridSpec, **kwargs) -> np.ndarray:
    try:
        fn = BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown built-in obstacle {name!r}; choose from {sorted(BUILTIN)}") from None
    return fn(grid, **kwargs)
