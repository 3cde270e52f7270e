"""Mask boundary vectorization under a byte budget.

Pipeline: marching squares on each class's binary mask (sub-pixel vertices
at sample-edge midpoints, inside kept on the left of travel), chamfer
repair of isolated 90-degree corners, Douglas-Peucker simplification with
the tolerance doubled from 0.5 px until the canonical encoding fits the
budget, and a scanline rasterizer to report honest per-class IoU against
the source mask.

Canonical encoding, per ring: class byte (bit7 = hole), vertex count varint
(closure excluded), first vertex as two big-endian i32 in 1/16 px units,
then zig-zag varint deltas; rings concatenated, deflate-compressed.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetError, DomainError, IntegrityError
from ..varint import read_svarint, read_uvarint, write_svarint, write_uvarint
from .segment import CLASS_BACKGROUND, CLASS_UNLABELED, SegMask

MIN_BUDGET_BYTES = 256
START_TOLERANCE_PX = 0.5
MAX_TOLERANCE_PX = 64.0
_PX_SCALE = 16  # fixed-point: 1/16 px

# Marching-squares case table. Corner bits: TL=1, TR=2, BR=4, BL=8. Segment
# endpoints are cell-edge midpoints T/R/B/L in doubled coordinates relative
# to the cell's top-left sample. Saddles (5, 10) treat diagonal foreground
# as disconnected, a fixed convention.
_T = (1, 0)
_R = (2, 1)
_B = (1, 2)
_L = (0, 1)
_CASES = {
    1: [(_L, _T)],
    2: [(_T, _R)],
    3: [(_L, _R)],
    4: [(_R, _B)],
    5: [(_L, _T), (_R, _B)],
    6: [(_T, _B)],
    7: [(_L, _B)],
    8: [(_B, _L)],
    9: [(_B, _T)],
    10: [(_T, _R), (_B, _L)],
    11: [(_B, _R)],
    12: [(_R, _L)],
    13: [(_R, _T)],
    14: [(_T, _L)],
}


def marching_squares(binary: np.ndarray) -> list:
    """Closed contours of a boolean mask, inside on the left of travel.

    Returns a list of (N, 2) float arrays of (x, y) pixel coordinates with
    the first vertex repeated at the end. Vertices sit on half-integer
    coordinates; pixel (r, c) is the sample point (x=c, y=r).
    """
    binary = np.asarray(binary, dtype=bool)
    padded = np.pad(binary, 1, constant_values=False)
    tl = padded[:-1, :-1]
    tr = padded[:-1, 1:]
    br = padded[1:, 1:]
    bl = padded[1:, :-1]
    case = (
        tl.astype(np.uint8)
        | (tr.astype(np.uint8) << 1)
        | (br.astype(np.uint8) << 2)
        | (bl.astype(np.uint8) << 3)
    )
    # Segment soup in doubled integer coordinates (halves become exact ints).
    starts_x, starts_y, ends_x, ends_y = [], [], [], []
    for value, segs in _CASES.items():
        rows, cols = np.nonzero(case == value)
        if rows.size == 0:
            continue
        x2 = cols * 2
        y2 = rows * 2
        for (sx, sy), (ex, ey) in segs:
            starts_x.append(x2 + sx)
            starts_y.append(y2 + sy)
            ends_x.append(x2 + ex)
            ends_y.append(y2 + ey)
    if not starts_x:
        return []
    sx = np.concatenate(starts_x)
    sy = np.concatenate(starts_y)
    ex = np.concatenate(ends_x)
    ey = np.concatenate(ends_y)
    # Each crossing midpoint starts exactly one directed segment.
    succ = {}
    for i in range(sx.size):
        succ[(int(sx[i]), int(sy[i]))] = (int(ex[i]), int(ey[i]))
    rings = []
    for start in sorted(succ.keys()):
        if start not in succ:
            continue
        chain = [start]
        cur = succ.pop(start)
        while cur != start:
            chain.append(cur)
            cur = succ.pop(cur)
        chain.append(start)
        # Back to pixel units, minus the padding offset.
        ring = np.array(chain, dtype=float) / 2.0 - 1.0
        rings.append(ring)
    return rings


def repair_corners(ring: np.ndarray) -> np.ndarray:
    """Collapse isolated diagonal chamfers to sharp grid corners.

    Marching squares cuts every 90-degree corner with a half-pixel diagonal.
    Where such a diagonal sits between two axis-aligned edges, replace its
    two vertices with the grid corner on the right of travel (the cut
    material side). Pixel-center rasterization is unchanged by this; it
    exists so simplification of rectilinear shapes lands on true corners.
    """
    pts = ring[:-1]
    n = len(pts)
    if n < 4:
        return ring
    d = np.roll(pts, -1, axis=0) - pts  # edge i: pts[i] -> pts[i+1]
    is_diag = (np.abs(d[:, 0]) == 0.5) & (np.abs(d[:, 1]) == 0.5)
    horiz = (d[:, 1] == 0) & (d[:, 0] != 0)
    vert = (d[:, 0] == 0) & (d[:, 1] != 0)
    out = []
    skip = False
    for i in range(n):
        if skip:
            skip = False
            continue
        j = (i + 1) % n
        prev = (i - 1) % n
        if is_diag[i] and (
            (horiz[prev] and vert[j]) or (vert[prev] and horiz[j])
        ):
            # Sharp corner = intersection of the two adjacent edge lines.
            u, v = pts[i], pts[j]
            corner = (
                np.array([v[0], u[1]]) if horiz[prev] else np.array([u[0], v[1]])
            )
            out.append(corner)
            skip = True
        else:
            out.append(pts[i])
    if skip:
        # Last edge repaired: its endpoint is vertex 0, already emitted first.
        del out[0]
    out.append(out[0])
    return np.asarray(out)


def simplify_ring(ring: np.ndarray, tol: float) -> np.ndarray | None:
    """Douglas-Peucker on a closed ring; None when it degenerates (< 3 pts).

    The ring is split at vertex 0 and its farthest vertex; each open chain
    is simplified with the standard stack algorithm.
    """
    pts = ring[:-1]
    n = len(pts)
    if n < 3:
        return None
    far = int(np.argmax(np.sum((pts - pts[0]) ** 2, axis=1)))
    if far == 0:
        return None
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[far] = True
    _dp_mark(pts, 0, far, tol, keep)
    _dp_mark_wrap(pts, far, n, tol, keep)
    kept = pts[keep]
    kept = _drop_collinear(kept)
    if len(kept) < 3:
        return None
    return np.vstack([kept, kept[:1]])


def _drop_collinear(pts: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Remove vertices exactly on the chord of their neighbors.

    The split anchors DP starts from are kept unconditionally, so a ring can
    come out with anchor points sitting on straight edges; this strips them
    without touching the tolerance guarantee.
    """
    out = list(pts)
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            a = out[(i - 1) % len(out)]
            b = out[i]
            c = out[(i + 1) % len(out)]
            if _perp_dist(np.array([b]), a, c)[0] <= eps:
                del out[i]
                changed = True
                break
    return np.asarray(out)


def _perp_dist(pts, a, b):
    """Perpendicular distances from pts to the segment a-b."""
    ab = b - a
    denom = np.hypot(*ab)
    if denom < 1e-12:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    return np.abs((pts[:, 0] - a[0]) * ab[1] - (pts[:, 1] - a[1]) * ab[0]) / denom


def _dp_mark(pts, i0, i1, tol, keep):
    stack = [(i0, i1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        seg = pts[a + 1 : b]
        dist = _perp_dist(seg, pts[a], pts[b])
        k = int(np.argmax(dist))
        if dist[k] > tol:
            mid = a + 1 + k
            keep[mid] = True
            stack.append((a, mid))
            stack.append((mid, b))


def _dp_mark_wrap(pts, far, n, tol, keep):
    """Simplify the chain from `far` back around to vertex 0."""
    idx = list(range(far, n)) + [0]
    sub = pts[idx]
    sub_keep = np.zeros(len(sub), dtype=bool)
    sub_keep[0] = sub_keep[-1] = True
    _dp_mark(sub, 0, len(sub) - 1, tol, sub_keep)
    for local, orig in enumerate(idx[:-1]):
        if sub_keep[local]:
            keep[orig] = True


def signed_area(ring: np.ndarray) -> float:
    x = ring[:-1, 0]
    y = ring[:-1, 1]
    return 0.5 * float(
        np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    )


# Outer rings (inside on the left, y-down coordinates) have negative
# shoelace area; holes come out positive.
def is_hole(ring: np.ndarray) -> bool:
    return signed_area(ring) > 0


@dataclass(frozen=True)
class ClassPolygons:
    class_id: int
    outers: list  # list of closed (N, 2) rings
    holes: list  # list of closed (N, 2) rings


@dataclass(frozen=True)
class VectorizeResult:
    polygons: list  # list[ClassPolygons], mask pixel space
    tolerance_px: float
    encoded: bytes
    encoded_bytes: int
    iou_per_class: dict

    def pixel_polygon_list(self, scale: float = 1.0):
        """Flatten to (class_id, outer, holes) tuples for georegistration.

        Holes are attached to the outer ring that contains their first
        vertex. `scale` rescales mask coordinates to full-resolution pixels.
        """
        out = []
        for cp in self.polygons:
            hole_pool = list(cp.holes)
            for outer in cp.outers:
                mine = []
                rest = []
                for h in hole_pool:
                    if _point_in_ring(h[0], outer):
                        mine.append(h * scale)
                    else:
                        rest.append(h)
                hole_pool = rest
                out.append((cp.class_id, outer * scale, mine))
        return out


def _point_in_ring(pt, ring) -> bool:
    x, y = pt
    xs = ring[:-1, 0]
    ys = ring[:-1, 1]
    x2 = np.roll(xs, -1)
    y2 = np.roll(ys, -1)
    crosses = (ys <= y) != (y2 <= y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xs + (y - ys) * (x2 - xs) / (y2 - ys)
    return bool(np.sum(crosses & (xc < x)) % 2)


def extract_class_rings(mask: SegMask, tol: float) -> dict:
    """class_id -> list of simplified closed rings (holes included)."""
    out = {}
    for class_id in mask.present_classes():
        rings = marching_squares(mask.classes == class_id)
        simplified = []
        for ring in rings:
            ring = repair_corners(ring)
            s = simplify_ring(ring, tol)
            if s is not None:
                simplified.append(s)
        if simplified:
            out[class_id] = simplified
    return out


def encode_pixel_rings(class_rings: dict) -> bytes:
    raw = bytearray()
    for class_id in sorted(class_rings):
        for ring in class_rings[class_id]:
            pts = ring[:-1]
            flag = 0x80 if is_hole(ring) else 0
            raw.append(flag | (class_id & 0x7F))
            write_uvarint(raw, len(pts))
            fp = np.round(pts * _PX_SCALE).astype(np.int64)
            raw += struct.pack(">ii", int(fp[0, 0]), int(fp[0, 1]))
            deltas = np.diff(fp, axis=0)
            for dx, dy in deltas:
                write_svarint(raw, int(dx))
                write_svarint(raw, int(dy))
    return zlib.compress(bytes(raw), 9)


def decode_pixel_rings(encoded: bytes) -> dict:
    raw = zlib.decompress(encoded)
    pos = 0
    out: dict = {}
    while pos < len(raw):
        flag = raw[pos]
        pos += 1
        class_id = flag & 0x7F
        count, pos = read_uvarint(raw, pos)
        if count < 3:
            raise IntegrityError("ring with fewer than 3 vertices")
        x, y = struct.unpack_from(">ii", raw, pos)
        pos += 8
        xs, ys = [x], [y]
        for _ in range(count - 1):
            dx, pos = read_svarint(raw, pos)
            dy, pos = read_svarint(raw, pos)
            xs.append(xs[-1] + dx)
            ys.append(ys[-1] + dy)
        ring = np.stack([xs, ys], axis=1).astype(float) / _PX_SCALE
        ring = np.vstack([ring, ring[:1]])
        out.setdefault(class_id, []).append(ring)
    return out


def rasterize_class_rings(rings: list, height: int, width: int) -> np.ndarray:
    """Even-odd scanline fill over integer pixel centers.

    A center is inside when an odd number of edge crossings lie at or left
    of it on its row; all rings of a class (outers and holes) participate
    together so holes subtract naturally. The inclusive comparison pairs
    exactly with a strictly-greater crossing count (row totals are even), so
    any implementation counting crossings to the right agrees on every
    pixel, including centers lying exactly on an edge.
    """
    row_crossings: list = [[] for _ in range(height)]
    for ring in rings:
        pts = np.asarray(ring, dtype=float)
        x1 = pts[:-1, 0]
        y1 = pts[:-1, 1]
        x2 = pts[1:, 0]
        y2 = pts[1:, 1]
        nz = y1 != y2
        for xa, ya, xb, yb in zip(x1[nz], y1[nz], x2[nz], y2[nz]):
            ylo, yhi = (ya, yb) if ya < yb else (yb, ya)
            r0 = max(0, int(np.ceil(ylo)))
            r1 = min(height - 1, int(np.floor(yhi)))
            if yhi == np.floor(yhi):
                r1 = min(r1, int(yhi) - 1)  # half-open span [ylo, yhi)
            if r1 < r0:
                continue
            rr = np.arange(r0, r1 + 1)
            xc = xa + (rr - ya) * (xb - xa) / (yb - ya)
            for r, x in zip(rr, xc):
                row_crossings[r].append(x)
    mask = np.zeros((height, width), dtype=bool)
    centers = np.arange(width, dtype=float)
    for r in range(height):
        if not row_crossings[r]:
            continue
        xs = np.sort(np.array(row_crossings[r]))
        left_counts = np.searchsorted(xs, centers, side="right")
        mask[r] = (left_counts % 2) == 1
    return mask


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum()) / union


def vectorize_at_tolerance(mask: SegMask, tol: float) -> VectorizeResult:
    """Single-tolerance vectorization with encoding and IoU report."""
    class_rings = extract_class_rings(mask, tol)
    encoded = encode_pixel_rings(class_rings)
    polygons = []
    iou = {}
    for class_id, rings in sorted(class_rings.items()):
        outers = [r for r in rings if not is_hole(r)]
        holes = [r for r in rings if is_hole(r)]
        polygons.append(ClassPolygons(class_id=class_id, outers=outers, holes=holes))
        recon = rasterize_class_rings(rings, mask.height, mask.width)
        iou[class_id] = mask_iou(recon, mask.classes == class_id)
    return VectorizeResult(
        polygons=polygons,
        tolerance_px=tol,
        encoded=encoded,
        encoded_bytes=len(encoded),
        iou_per_class=iou,
    )


def vectorize(mask: SegMask, budget_bytes: int) -> VectorizeResult:
    """Vectorize a mask, escalating simplification until the budget fits.

    Tolerance starts at 0.5 px and doubles; if the encoding still exceeds
    the budget at 64 px, raises BudgetError carrying the best effort.
    """
    if budget_bytes < MIN_BUDGET_BYTES:
        raise DomainError(f"budget {budget_bytes} below minimum {MIN_BUDGET_BYTES}")
    if np.all((mask.classes == CLASS_BACKGROUND) | (mask.classes == CLASS_UNLABELED)):
        return VectorizeResult(
            polygons=[], tolerance_px=START_TOLERANCE_PX, encoded=zlib.compress(b"", 9),
            encoded_bytes=len(zlib.compress(b"", 9)), iou_per_class={},
        )
    tol = START_TOLERANCE_PX
    result = None
    while True:
        result = vectorize_at_tolerance(mask, tol)
        if result.encoded_bytes <= budget_bytes:
            return result
        if tol >= MAX_TOLERANCE_PX:
            raise BudgetError(
                f"encoding is {result.encoded_bytes} B at max tolerance "
                f"{MAX_TOLERANCE_PX} px; budget {budget_bytes} B unreachable",
                best_effort=result,
            )
        tol = min(tol * 2, MAX_TOLERANCE_PX)
