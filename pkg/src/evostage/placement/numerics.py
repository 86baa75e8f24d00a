"""Wirelength and bin-density terms of the placement objective.

Positions are (n, 2) arrays of cell centres.
"""

from __future__ import annotations

import numpy as np

from .instance import MicroPlacementInstance


def hpwl(instance: MicroPlacementInstance, pos: np.ndarray) -> float:
    """Sum over nets of x-span plus y-span."""
    p = pos[instance.pin_cell]
    starts = instance.net_start
    span = np.maximum.reduceat(p, starts, axis=0) - np.minimum.reduceat(p, starts, axis=0)
    return float(span.sum())


def smooth_wl(instance: MicroPlacementInstance, pos: np.ndarray, gamma: float) -> tuple[float, np.ndarray]:
    """Log-sum-exp wirelength and its gradient.

    Per net and axis: gamma*log(sum exp(x/gamma)) + gamma*log(sum exp(-x/gamma)),
    evaluated with the per-net max/min shifted out for stability.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    p = pos[instance.pin_cell]
    starts, pin_net = instance.net_start, instance.pin_net
    hi = np.maximum.reduceat(p, starts, axis=0)
    lo = np.minimum.reduceat(p, starts, axis=0)
    e_hi = np.exp((p - hi[pin_net]) / gamma)
    e_lo = np.exp((lo[pin_net] - p) / gamma)
    s_hi = np.add.reduceat(e_hi, starts, axis=0)
    s_lo = np.add.reduceat(e_lo, starts, axis=0)
    value = np.sum(hi + gamma * np.log(s_hi)) + np.sum(-lo + gamma * np.log(s_lo))
    pin_grad = e_hi / s_hi[pin_net] - e_lo / s_lo[pin_net]
    n = instance.num_cells
    grad = np.column_stack([
        np.bincount(instance.pin_cell, weights=pin_grad[:, 0], minlength=n),
        np.bincount(instance.pin_cell, weights=pin_grad[:, 1], minlength=n),
    ])
    return float(value), grad


def _axis_overlap(centre, size, edges):
    """Overlap lengths of [c - s/2, c + s/2] with each bin, and their derivative in c."""
    a = (centre - size / 2)[:, None]
    b = (centre + size / 2)[:, None]
    left, right = edges[None, :-1], edges[None, 1:]
    overlap = np.minimum(b, right) - np.maximum(a, left)
    inside = overlap > 0
    overlap = np.where(inside, overlap, 0.0)
    deriv = inside * ((b < right).astype(float) - (a > left).astype(float))
    return overlap, deriv


def density_footprint(instance: MicroPlacementInstance) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Footprint sizes and area scale used for bin usage.

    Cells narrower than sqrt(2) bins are stretched to that size with their
    density scaled down, so total area is preserved and every cell straddles
    a bin edge (otherwise a cell inside one bin has zero density gradient).
    """
    bw, bh = instance.bin_size
    fw = np.maximum(instance.widths, np.sqrt(2.0) * bw)
    fh = np.maximum(instance.heights, np.sqrt(2.0) * bh)
    scale = instance.widths * instance.heights / (fw * fh)
    return fw, fh, scale


def _overlaps(instance, pos):
    fw, fh, scale = density_footprint(instance)
    xs = np.linspace(0.0, instance.layout[0], instance.bins + 1)
    ys = np.linspace(0.0, instance.layout[1], instance.bins + 1)
    ox, dox = _axis_overlap(pos[:, 0], fw, xs)
    oy, doy = _axis_overlap(pos[:, 1], fh, ys)
    return ox * scale[:, None], dox * scale[:, None], oy, doy


def bin_usage(instance: MicroPlacementInstance, pos: np.ndarray) -> np.ndarray:
    ox, _, oy, _ = _overlaps(instance, pos)
    return ox.T @ oy


def density_overflow(instance: MicroPlacementInstance, pos: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Return (overflow, quadratic excess penalty, penalty gradient).

    Bin usage is the area-proportional overlap of each cell footprint with
    each bin; excess is usage above target_density times bin capacity.
    """
    ox, dox, oy, doy = _overlaps(instance, pos)
    usage = ox.T @ oy
    bw, bh = instance.bin_size
    excess = np.maximum(0.0, usage - instance.target_density * bw * bh)
    overflow = float(excess.sum() / instance.total_area)
    penalty = float(np.sum(excess * excess))
    g = 2.0 * excess
    grad = np.column_stack([
        np.sum(dox * (oy @ g.T), axis=1),
        np.sum(doy * (ox @ g), axis=1),
    ])
    return overflow, penalty, grad
