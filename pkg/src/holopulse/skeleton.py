"""Vessel-mask thinning and junction-free segment labeling.

Thinning is iterative two-subiteration Zhang-Suen with 8-connectivity.
Each subiteration decides deletions in parallel on the frozen image, with
one guard: a connected component is never deleted entirely (the plain
parallel rule erases isolated 2x2 squares); when every pixel of a
component is marked, its first pixel in row-major order is kept. Junctions
are skeleton pixels with three or more skeleton neighbors; removing them
splits the skeleton into simple-path segments which are labeled by
8-connected component in row-major first-pixel order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=np.uint8)


@dataclass
class LabeledSegments:
    """Junction-free skeleton segments, integer-labeled.

    ``labels`` is an int32 (H, W) array; 0 is background and every label
    in 1..count is present. Within a segment every pixel has at most two
    neighbors of the same label.
    """

    labels: np.ndarray
    count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("segment labels must be 2-D")

    def segment_mask(self, label: int) -> np.ndarray:
        return self.labels == label

    def pixel_counts(self) -> np.ndarray:
        """Pixel count per label, index 0 unused."""
        return np.bincount(self.labels.ravel(), minlength=self.count + 1)


def _neighbors(padded: np.ndarray):
    """The 8 neighbor planes of every pixel, clockwise from north."""
    n = padded[:-2, 1:-1]
    ne = padded[:-2, 2:]
    e = padded[1:-1, 2:]
    se = padded[2:, 2:]
    s = padded[2:, 1:-1]
    sw = padded[2:, :-2]
    w = padded[1:-1, :-2]
    nw = padded[:-2, :-2]
    return n, ne, e, se, s, sw, w, nw


def neighbor_count(mask: np.ndarray) -> np.ndarray:
    """Number of foreground 8-neighbors at each pixel."""
    padded = np.pad(np.asarray(mask, dtype=np.uint8), 1)
    return sum(_neighbors(padded)).astype(np.int32)


def _deletable(img: np.ndarray, first_pass: bool) -> np.ndarray:
    padded = np.pad(img, 1)
    n, ne, e, se, s, sw, w, nw = _neighbors(padded)
    ring = (n, ne, e, se, s, sw, w, nw)
    b = sum(p.astype(np.int32) for p in ring)
    a = np.zeros(img.shape, dtype=np.int32)
    for i in range(8):
        cur, nxt = ring[i], ring[(i + 1) % 8]
        a += ((cur == 0) & (nxt == 1)).astype(np.int32)
    cond = (img == 1) & (b >= 2) & (b <= 6) & (a == 1)
    if first_pass:
        cond &= (n * e * s == 0) & (e * s * w == 0)
    else:
        cond &= (n * e * w == 0) & (n * s * w == 0)
    return cond


def _guard_components(img: np.ndarray, delete: np.ndarray) -> np.ndarray:
    """Unmark the first pixel of any component the deletion set would erase."""
    if not delete.any():
        return delete
    labels, n = ndimage.label(img, structure=_EIGHT)
    if n == 0:
        return delete
    survivors = np.bincount(labels[(img == 1) & ~delete].ravel(), minlength=n + 1)
    for lbl in np.nonzero(survivors[1:] == 0)[0] + 1:
        ys, xs = np.nonzero(labels == lbl)
        delete[ys[0], xs[0]] = False
    return delete


def skeletonize(mask: np.ndarray) -> np.ndarray:
    """Thin a binary mask to a one-pixel-wide 8-connected skeleton.

    Returns a boolean array, a subset of the input. No input component is
    lost: each one retains at least one skeleton pixel.
    """
    img = np.asarray(mask).astype(np.uint8)
    if img.ndim != 2:
        raise ValueError("mask must be 2-D")
    img = (img != 0).astype(np.uint8)
    while True:
        changed = False
        for first_pass in (True, False):
            delete = _guard_components(img, _deletable(img, first_pass))
            if delete.any():
                img[delete] = 0
                changed = True
        if not changed:
            return img.astype(bool)


def find_junctions(skeleton: np.ndarray) -> np.ndarray:
    """Skeleton pixels with >= 3 skeleton neighbors in the 8-neighborhood."""
    skel = np.asarray(skeleton, dtype=bool)
    return skel & (neighbor_count(skel) >= 3)


_RING = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def _ring_profile(skel: np.ndarray, y: int, x: int) -> tuple[int, int]:
    """(degree, connected components) of one pixel's 8-ring skeleton neighbors."""
    h, w = skel.shape
    present = []
    for i, (dy, dx) in enumerate(_RING):
        ny, nx = y + dy, x + dx
        if 0 <= ny < h and 0 <= nx < w and skel[ny, nx]:
            present.append(i)
    comps = 0
    seen = set()
    for i in present:
        if i in seen:
            continue
        comps += 1
        stack = [i]
        seen.add(i)
        while stack:
            jy, jx = _RING[stack.pop()]
            for k in present:
                if k not in seen and abs(jy - _RING[k][0]) <= 1 and abs(jx - _RING[k][1]) <= 1:
                    seen.add(k)
                    stack.append(k)
    return len(present), comps


def _simplify(skel: np.ndarray) -> np.ndarray:
    """Drop redundant thick-corner pixels left by thinning.

    A pixel with >= 3 neighbors whose ring neighbors form one connected
    cluster carries no branch: its neighbors stay connected without it.
    Removing such pixels (sequentially, in raster order, to a fixpoint)
    reduces staircase corners to simple paths without cutting anything.
    """
    skel = skel.copy()
    while True:
        removed = False
        candidates = np.argwhere(skel & (neighbor_count(skel) >= 3))
        for y, x in candidates:
            degree, comps = _ring_profile(skel, y, x)
            if degree >= 3 and comps == 1:
                skel[y, x] = False
                removed = True
        if not removed:
            return skel


def label_segments(skeleton: np.ndarray) -> LabeledSegments:
    """Remove junctions and label the remaining simple-path segments.

    Redundant thick-corner pixels are simplified away first, then junction
    pixels become background, then pixels left without any neighbor are
    dropped. Remaining pixels are labeled by 8-connected component, 1..N in
    row-major order of each component's first pixel. Every labeled pixel
    ends up with at most two neighbors of its own label.
    """
    skel = _simplify(np.asarray(skeleton, dtype=bool))
    remaining = skel & ~find_junctions(skel)
    remaining &= neighbor_count(remaining) > 0
    raw, n = ndimage.label(remaining, structure=_EIGHT)
    return LabeledSegments(labels=_relabel_row_major(raw, n), count=n)


def _relabel_row_major(raw: np.ndarray, n: int) -> np.ndarray:
    """Renumber labels 1..n by the row-major position of each first pixel."""
    if n == 0:
        return raw.astype(np.int32)
    flat = raw.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.nonzero(flat)[0]
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    mapping = np.zeros(n + 1, dtype=np.int32)
    mapping[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return mapping[raw]


def prune_short_segments(segs: LabeledSegments, min_len: int) -> LabeledSegments:
    """Drop segments of fewer than ``min_len`` pixels, re-compacting labels."""
    if min_len < 1:
        raise ValueError(f"min_len must be >= 1, got {min_len}")
    if segs.count == 0 or min_len == 1:
        return LabeledSegments(labels=segs.labels.copy(), count=segs.count)
    counts = segs.pixel_counts()
    keep = counts >= min_len
    keep[0] = False
    mapping = np.zeros(segs.count + 1, dtype=np.int32)
    mapping[keep] = np.arange(1, int(keep.sum()) + 1, dtype=np.int32)
    return LabeledSegments(labels=mapping[segs.labels], count=int(keep.sum()))
