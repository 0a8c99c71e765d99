"""Planar geometry primitives: polylines, projections, offsets, raycasts."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angle(a):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    w = np.mod(a + np.pi, TWO_PI) - np.pi
    # np.mod maps exact multiples of 2*pi to -pi; fold them back to +pi.
    return np.where(w == -np.pi, np.pi, w) if isinstance(w, np.ndarray) else (np.pi if w == -np.pi else w)


class Polyline:
    """Piecewise-linear curve with arc-length parameterization.

    Lateral sign convention: positive offsets are to the LEFT of the travel
    direction (normal = rotate tangent +90 degrees).
    """

    def __init__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError("polyline needs at least two 2D points")
        self.points = pts
        seg = pts[1:] - pts[:-1]
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(self.seg_len <= 1e-9):
            keep = np.concatenate(([True], self.seg_len > 1e-9))
            self.points = pts = pts[keep]
            seg = pts[1:] - pts[:-1]
            self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.tangent = seg / self.seg_len[:, None]
        self.normal = np.stack([-self.tangent[:, 1], self.tangent[:, 0]], axis=1)
        self.cum_s = np.concatenate(([0.0], np.cumsum(self.seg_len)))

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    @property
    def n_segments(self) -> int:
        return len(self.seg_len)

    def point_at(self, s: float) -> np.ndarray:
        s = float(np.clip(s, 0.0, self.length))
        i = min(int(np.searchsorted(self.cum_s, s, side="right")) - 1, self.n_segments - 1)
        i = max(i, 0)
        return self.points[i] + (s - self.cum_s[i]) * self.tangent[i]

    def heading_at(self, s: float) -> float:
        s = float(np.clip(s, 0.0, self.length))
        i = min(int(np.searchsorted(self.cum_s, s, side="right")) - 1, self.n_segments - 1)
        i = max(i, 0)
        return float(np.arctan2(self.tangent[i, 1], self.tangent[i, 0]))

    def project(self, p, hint: int | None = None, window: int = 40) -> tuple[float, float, int]:
        """Project a point onto the polyline.

        Returns (arc_length, signed_lateral, segment_index). With `hint`, only
        segments within `window` of the hinted index are searched, which keeps
        the projection local to the current route position (self-crossing
        routes would otherwise snap to the wrong branch).
        """
        p = np.asarray(p, dtype=np.float64)
        if hint is None:
            lo, hi = 0, self.n_segments
        else:
            lo = max(0, hint - window)
            hi = min(self.n_segments, hint + window + 1)
        pts = self.points[lo:hi]
        tan = self.tangent[lo:hi]
        seg_len = self.seg_len[lo:hi]
        rel = p[None, :] - pts
        t = np.clip(rel[:, 0] * tan[:, 0] + rel[:, 1] * tan[:, 1], 0.0, seg_len)
        foot = pts + t[:, None] * tan
        d2 = np.sum((p[None, :] - foot) ** 2, axis=1)
        k = int(np.argmin(d2))
        idx = lo + k
        lateral = float(np.dot(p - foot[k], self.normal[idx]))
        s = float(self.cum_s[idx] + t[k])
        return s, lateral, idx

    def distance_to(self, p, hint: int | None = None, window: int = 40) -> float:
        s, lateral, _ = self.project(p, hint=hint, window=window)
        foot = self.point_at(s)
        return float(np.hypot(*(np.asarray(p, dtype=np.float64) - foot)))

    def offset(self, d: float) -> "Polyline":
        """Parallel curve at signed lateral distance d (positive = left).

        Vertex normals are averaged between adjacent segments; adequate for
        the gentle curvatures used by the road generator (|d| < min radius).
        """
        n_pts = np.zeros_like(self.points)
        n_pts[0] = self.normal[0]
        n_pts[-1] = self.normal[-1]
        if len(self.points) > 2:
            avg = self.normal[:-1] + self.normal[1:]
            norm = np.hypot(avg[:, 0], avg[:, 1])
            norm[norm < 1e-9] = 1.0
            n_pts[1:-1] = avg / norm[:, None]
        return Polyline(self.points + d * n_pts)

    def resample(self, spacing: float) -> np.ndarray:
        """Points at arc lengths 0, spacing, 2*spacing, ... (end excluded if off-grid)."""
        n = int(np.floor(self.length / spacing)) + 1
        return np.array([self.point_at(k * spacing) for k in range(n)])


def densify_segments(pieces: list[np.ndarray]) -> np.ndarray:
    """Concatenate dense point arrays, dropping duplicated junction points."""
    out = [pieces[0]]
    for arr in pieces[1:]:
        out.append(arr[1:])
    return np.concatenate(out, axis=0)


def straight_points(start, heading, length, step=1.0):
    n = max(int(np.ceil(length / step)), 1)
    s = np.linspace(0.0, length, n + 1)
    d = np.array([np.cos(heading), np.sin(heading)])
    return np.asarray(start)[None, :] + s[:, None] * d[None, :]


def arc_points(start, heading, radius, sweep, step=1.0):
    """Circular arc from `start` with initial `heading`; sweep > 0 turns left."""
    n = max(int(np.ceil(abs(sweep) * radius / step)), 2)
    phi = np.linspace(0.0, sweep, n + 1)
    side = 1.0 if sweep >= 0 else -1.0
    center = np.asarray(start) + radius * np.array(
        [np.cos(heading + side * np.pi / 2), np.sin(heading + side * np.pi / 2)]
    )
    ang0 = heading - side * np.pi / 2
    ang = ang0 + phi
    return center[None, :] + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def rect_corners(cx: float, cy: float, heading: float, length: float, width: float) -> np.ndarray:
    """Corners of an oriented rectangle, counter-clockwise, shape (4, 2)."""
    c, s = np.cos(heading), np.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def rects_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex quads given as (4, 2) corner arrays."""
    for quad in (a, b):
        edges = np.roll(quad, -1, axis=0) - quad
        axes = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
        pa = a @ axes.T
        pb = b @ axes.T
        if np.any(pa.max(axis=0) < pb.min(axis=0)) or np.any(pb.max(axis=0) < pa.min(axis=0)):
            return False
    return True


def raycast(origin, angles, segments, seg_class, max_range: float):
    """Cast rays against line segments.

    origin: (2,); angles: (R,) absolute ray angles; segments: (M, 4) rows of
    (x1, y1, x2, y2); seg_class: (M,) integer class per segment.

    Returns (dist, cls): per-ray hit distance clipped to max_range (max_range
    when nothing is hit) and the class of the nearest hit (0 for no hit).
    """
    angles = np.asarray(angles, dtype=np.float64)
    R = len(angles)
    dist = np.full(R, max_range)
    cls = np.zeros(R, dtype=np.int64)
    if segments is None or len(segments) == 0:
        return dist, cls
    segments = np.asarray(segments, dtype=np.float64)
    o = np.asarray(origin, dtype=np.float64)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (R,2)
    p1 = segments[:, 0:2]
    e = segments[:, 2:4] - p1  # (M,2)
    diff = p1[None, :, :] - o[None, None, :]  # (1,M,2)

    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]  # (R,M)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (diff[..., 0] * e[None, :, 1] - diff[..., 1] * e[None, :, 0]) / denom
        u = (diff[..., 0] * d[:, None, 1] - diff[..., 1] * d[:, None, 0]) / denom
    valid = (np.abs(denom) > 1e-12) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    j = np.argmin(t, axis=1)
    tmin = t[np.arange(R), j]
    hit = tmin <= max_range
    dist[hit] = tmin[hit]
    cls[hit] = np.asarray(seg_class)[j[hit]]
    return dist, cls


def rect_segments(corners: np.ndarray) -> np.ndarray:
    """Edges of a quad as raycast segments, shape (4, 4)."""
    nxt = np.roll(corners, -1, axis=0)
    return np.concatenate([corners, nxt], axis=1)


def polyline_segments(points: np.ndarray) -> np.ndarray:
    """Consecutive point pairs as raycast segments, shape (N-1, 4)."""
    return np.concatenate([points[:-1], points[1:]], axis=1)
