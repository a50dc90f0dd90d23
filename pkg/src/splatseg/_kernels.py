"""Numba kernels for tile-based alpha compositing.

Per-pixel results are independent of tile size and thread count: the set of
splats contributing to a pixel is decided by the analytic footprint cut
``d^T conic d <= sigma_cut^2`` (never by tile membership), splats are
traversed in one global front-to-back order, and tiles write disjoint
pixels. No fastmath, so float arithmetic is reproducible.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB version")

from numba import njit, prange  # noqa: E402


@njit(cache=True)
def count_tile_hits(tx0, tx1, ty0, ty1, n_tx, counts):
    for s in range(tx0.shape[0]):
        for ty in range(ty0[s], ty1[s] + 1):
            base = ty * n_tx
            for tx in range(tx0[s], tx1[s] + 1):
                counts[base + tx] += 1


@njit(cache=True)
def fill_tile_lists(tx0, tx1, ty0, ty1, n_tx, cursors, items):
    # Splats are visited in sorted (front-to-back) order, so each tile's
    # item list comes out already depth-sorted.
    for s in range(tx0.shape[0]):
        for ty in range(ty0[s], ty1[s] + 1):
            base = ty * n_tx
            for tx in range(tx0[s], tx1[s] + 1):
                t = base + tx
                items[cursors[t]] = s
                cursors[t] += 1


@njit(cache=True, parallel=True)
def composite_tiles(
    means,
    conics,
    depths,
    opacities,
    colors,
    tile_offsets,
    tile_items,
    height,
    width,
    tile_size,
    alpha_cutoff,
    transmittance_stop,
    sigma_cut_sq,
    first_hit,
    want_color,
    out_color,
    out_alpha,
    out_depth,
    out_weight,
    out_best,
):
    n_tx = (width + tile_size - 1) // tile_size
    n_ty = (height + tile_size - 1) // tile_size
    for t in prange(n_tx * n_ty):
        ty = t // n_tx
        tx = t - ty * n_tx
        start = tile_offsets[t]
        end = tile_offsets[t + 1]
        y_hi = min(height, (ty + 1) * tile_size)
        x_hi = min(width, (tx + 1) * tile_size)
        for py in range(ty * tile_size, y_hi):
            for px in range(tx * tile_size, x_hi):
                pcx = px + 0.5
                pcy = py + 0.5
                trans = 1.0
                cr = 0.0
                cg = 0.0
                cb = 0.0
                dsum = 0.0
                wsum = 0.0
                best_w = 0.0
                best = -1
                for k in range(start, end):
                    s = tile_items[k]
                    dx = pcx - means[s, 0]
                    dy = pcy - means[s, 1]
                    # conic stores (a, b, c) of the quadratic a dx^2 + 2 b dx dy + c dy^2
                    m = (
                        conics[s, 0] * dx * dx
                        + 2.0 * conics[s, 1] * dx * dy
                        + conics[s, 2] * dy * dy
                    )
                    if m > sigma_cut_sq or m < 0.0:
                        continue
                    alpha = opacities[s] * math.exp(-0.5 * m)
                    if alpha > 0.99:
                        alpha = 0.99
                    if alpha < alpha_cutoff:
                        continue
                    w = alpha * trans
                    if first_hit:
                        if best < 0:
                            best = s
                            best_w = w
                    elif w > best_w:
                        best_w = w
                        best = s
                    if want_color:
                        cr += w * colors[s, 0]
                        cg += w * colors[s, 1]
                        cb += w * colors[s, 2]
                        dsum += w * depths[s]
                    wsum += w
                    trans *= 1.0 - alpha
                    if trans < transmittance_stop:
                        break
                out_alpha[py, px] = 1.0 - trans
                out_weight[py, px] = wsum
                out_best[py, px] = best
                if want_color:
                    out_color[py, px, 0] = cr
                    out_color[py, px, 1] = cg
                    out_color[py, px, 2] = cb
                    out_depth[py, px] = dsum / wsum if wsum > 0.0 else 0.0


@njit(cache=True, parallel=True)
def composite_label_tiles(
    means,
    conics,
    opacities,
    labels,
    tile_offsets,
    tile_items,
    height,
    width,
    tile_size,
    alpha_cutoff,
    transmittance_stop,
    sigma_cut_sq,
    weight_floor,
    out_mask,
):
    n_tx = (width + tile_size - 1) // tile_size
    n_ty = (height + tile_size - 1) // tile_size
    for t in prange(n_tx * n_ty):
        ty = t // n_tx
        tx = t - ty * n_tx
        start = tile_offsets[t]
        end = tile_offsets[t + 1]
        y_hi = min(height, (ty + 1) * tile_size)
        x_hi = min(width, (tx + 1) * tile_size)
        if end == start:
            for py in range(ty * tile_size, y_hi):
                for px in range(tx * tile_size, x_hi):
                    out_mask[py, px] = 0
            continue
        # Distinct labels of this tile, ascending; per-pixel accumulation
        # then runs over a small dense bucket array.
        tile_labels = np.empty(end - start, dtype=np.int64)
        for k in range(start, end):
            tile_labels[k - start] = labels[tile_items[k]]
        tile_labels = np.sort(tile_labels)
        n_unique = 0
        for k in range(tile_labels.shape[0]):
            if k == 0 or tile_labels[k] != tile_labels[k - 1]:
                tile_labels[n_unique] = tile_labels[k]
                n_unique += 1
        buckets = np.empty(n_unique, dtype=np.float64)
        for py in range(ty * tile_size, y_hi):
            for px in range(tx * tile_size, x_hi):
                pcx = px + 0.5
                pcy = py + 0.5
                for b in range(n_unique):
                    buckets[b] = 0.0
                trans = 1.0
                wsum = 0.0
                for k in range(start, end):
                    s = tile_items[k]
                    dx = pcx - means[s, 0]
                    dy = pcy - means[s, 1]
                    m = (
                        conics[s, 0] * dx * dx
                        + 2.0 * conics[s, 1] * dx * dy
                        + conics[s, 2] * dy * dy
                    )
                    if m > sigma_cut_sq or m < 0.0:
                        continue
                    alpha = opacities[s] * math.exp(-0.5 * m)
                    if alpha > 0.99:
                        alpha = 0.99
                    if alpha < alpha_cutoff:
                        continue
                    w = alpha * trans
                    lab = labels[s]
                    lo = 0
                    hi = n_unique - 1
                    while lo < hi:  # binary search, labels are unique+sorted
                        mid = (lo + hi) // 2
                        if tile_labels[mid] < lab:
                            lo = mid + 1
                        else:
                            hi = mid
                    buckets[lo] += w
                    wsum += w
                    trans *= 1.0 - alpha
                    if trans < transmittance_stop:
                        break
                best_b = -1
                best_w = 0.0
                for b in range(n_unique):  # ascending scan: ties go to the smaller ID
                    if buckets[b] > best_w:
                        best_w = buckets[b]
                        best_b = b
                value = 0
                if best_b >= 0:
                    lab = tile_labels[best_b]
                    if lab != 0 and best_w > weight_floor * wsum:
                        value = lab
                out_mask[py, px] = np.uint16(value)
