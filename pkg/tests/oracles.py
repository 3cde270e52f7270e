"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own code paths: plain-math geodesy,
scipy rotations, per-pixel crossing-number rasterization, and brute-force
counting. Keep them simple and obviously correct rather than fast.
"""

import math

import numpy as np
from scipy.spatial.transform import Rotation

WGS_A = 6378137.0
WGS_F = 1 / 298.257223563
WGS_E2 = WGS_F * (2 - WGS_F)


def oracle_ecef(lat_deg, lon_deg, alt_m):
    lat, lon = math.radians(lat_deg), math.radians(lon_deg)
    n = WGS_A / math.sqrt(1 - WGS_E2 * math.sin(lat) ** 2)
    return np.array(
        [
            (n + alt_m) * math.cos(lat) * math.cos(lon),
            (n + alt_m) * math.cos(lat) * math.sin(lon),
            (n * (1 - WGS_E2) + alt_m) * math.sin(lat),
        ]
    )


def oracle_enu(point_lla, origin_lla):
    """Full ECEF -> ENU chain written straight from the textbook formulas."""
    d = oracle_ecef(*point_lla) - oracle_ecef(*origin_lla)
    lat, lon = math.radians(origin_lla[0]), math.radians(origin_lla[1])
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    rot = np.array(
        [
            [-so, co, 0.0],
            [-sl * co, -sl * so, cl],
            [cl * co, cl * so, sl],
        ]
    )
    return rot @ d


def oracle_slerp(q0_wxyz, q1_wxyz, u):
    """Axis-angle slerp: rotate q0 by u of the relative rotation toward q1."""
    r0 = Rotation.from_quat(np.roll(q0_wxyz, -1))
    r1 = Rotation.from_quat(np.roll(q1_wxyz, -1))
    if np.dot(q0_wxyz, q1_wxyz) < 0:
        r1 = Rotation.from_quat(-np.roll(q1_wxyz, -1))
    rel = r1 * r0.inv()
    rotvec = rel.as_rotvec()
    out = Rotation.from_rotvec(rotvec * u) * r0
    xyzw = out.as_quat()
    return np.roll(xyzw, 1)


def quat_angle(q_a_wxyz, q_b_wxyz):
    """Sign-agnostic angle between two unit quaternions, radians.

    Uses the atan2 form of the relative rotation, which keeps precision for
    very small angles where acos of the dot product saturates.
    """
    w1, x1, y1, z1 = q_a_wxyz
    w2, x2, y2, z2 = q_b_wxyz
    # conj(a) * b
    rw = w1 * w2 + x1 * x2 + y1 * y2 + z1 * z2
    rx = w1 * x2 - x1 * w2 - y1 * z2 + z1 * y2
    ry = w1 * y2 + x1 * z2 - y1 * w2 - z1 * x2
    rz = w1 * z2 - x1 * y2 + y1 * x2 - z1 * w2
    return 2 * math.atan2(math.hypot(rx, ry, rz), abs(rw))


def rasterize_rings_oracle(rings, height, width):
    """Even-odd point-in-polygon test per integer pixel center.

    Counts edge crossings strictly to the RIGHT of each center, row by row,
    which pairs with the package rasterizer (strictly-left counting) on any
    polygon whose edges avoid passing exactly through pixel centers.
    """
    mask = np.zeros((height, width), dtype=bool)
    centers = np.arange(width, dtype=float)
    row_edges = [[] for _ in range(height)]
    for ring in rings:
        pts = np.asarray(ring, dtype=float)
        for i in range(len(pts) - 1):
            x1, y1 = pts[i]
            x2, y2 = pts[i + 1]
            if y1 == y2:
                continue
            ylo, yhi = (y1, y2) if y1 < y2 else (y2, y1)
            r0 = max(0, int(math.ceil(ylo)))
            r1 = min(height - 1, int(math.floor(yhi)))
            if yhi == math.floor(yhi):
                r1 = min(r1, int(yhi) - 1)  # half-open [ylo, yhi)
            for r in range(r0, r1 + 1):
                if not (min(y1, y2) <= r < max(y1, y2)):
                    continue
                xc = x1 + (r - y1) * (x2 - x1) / (y2 - y1)
                row_edges[r].append(xc)
    for r in range(height):
        if not row_edges[r]:
            continue
        xs = np.array(row_edges[r])
        right_counts = (xs[None, :] > centers[:, None]).sum(axis=1)
        mask[r] = (right_counts % 2) == 1
    return mask


def iou_oracle(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def masked_metrics_oracle(pred, labels, unlabeled=255):
    """Brute-force per-pixel counting of precision/recall/IoU per class."""
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    support = labels != unlabeled
    out = {}
    for cls in np.unique(labels[support]):
        cls = int(cls)
        tp = fp = fn = 0
        for r in range(labels.shape[0]):
            for c in range(labels.shape[1]):
                if not support[r, c]:
                    continue
                p = pred[r, c] == cls
                t = labels[r, c] == cls
                tp += p and t
                fp += p and not t
                fn += (not p) and t
        out[cls] = {
            "tp": tp,
            "fp": fp,
            "fn": fn,
            "precision": tp / (tp + fp) if tp + fp else None,
            "recall": tp / (tp + fn) if tp + fn else None,
            "iou": tp / (tp + fp + fn) if tp + fp + fn else None,
        }
    return out
