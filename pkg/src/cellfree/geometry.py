"""Point-process sampling and circle-intersection kernels.

Every load integral in :mod:`cellfree.load` is built from areas of
intersection of two or three disks that share a common boundary point
(the access point).  The kernels here are vectorised over numpy arrays so
they can sit inside quadrature and QMC integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class DegenerateConfiguration(ValueError):
    """Raised when a configuration has coincident centres and no defined angle."""


class InvalidConfiguration(ValueError):
    """Raised when requested radii cannot be realised by any user position."""


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class DiskRegion:
    radius: float
    center: Point2D = field(default_factory=lambda: Point2D(0.0, 0.0))

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return np.pi * self.radius**2

    def contains(self, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        c = np.array([self.center.x, self.center.y])
        return np.hypot(*(np.asarray(pts) - c).T) <= self.radius * (1 + tol)


@dataclass
class NetworkRealization:
    """One drop of APs and users.

    ``aps`` and ``users`` are ``(n, 2)`` arrays of coordinates in meters.
    ``model`` records how the drop was generated, e.g.
    ``{"kind": "bpp", "M": 32, "K": 20}`` or
    ``{"kind": "ppp", "lambda_r": 1e-4, "lambda_u": 1e-4}``.
    """

    aps: np.ndarray
    users: np.ndarray
    region: DiskRegion
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        self.aps = np.asarray(self.aps, dtype=float).reshape(-1, 2)
        self.users = np.asarray(self.users, dtype=float).reshape(-1, 2)

    def distances(self) -> np.ndarray:
        """AP-to-user distance matrix of shape ``(n_aps, n_users)``."""
        diff = self.aps[:, None, :] - self.users[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def _disk_points(count, region, rng):
    radius = region.radius * np.sqrt(rng.random(count))
    theta = TWO_PI * rng.random(count)
    pts = np.empty((count, 2))
    pts[:, 0] = region.center.x + radius * np.cos(theta)
    pts[:, 1] = region.center.y + radius * np.sin(theta)
    return pts


def sample_bpp(count: int, region: DiskRegion, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. uniform points on a disk (inverse-transform radius)."""
    if count < 0:
        raise ValueError("count must be non-negative")
    return _disk_points(int(count), region, rng)


def sample_ppp(density: float, region: DiskRegion, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson point process restricted to a disk."""
    if density < 0:
        raise ValueError("density must be non-negative")
    count = rng.poisson(density * region.area) if density > 0 else 0
    return _disk_points(count, region, rng)


# ---------------------------------------------------------------------------
# two-circle kernels
# ---------------------------------------------------------------------------

def _segment(radius2, half_angle):
    # circular segment cut by a chord subtending 2*half_angle at the centre
    return radius2 * (half_angle - 0.5 * np.sin(2.0 * half_angle))


def half_angle_u(r1, r2, v):
    """Angle at the far vertex of the triangle with sides ``r1``, ``r2`` and included angle ``v``.

    With the first centre at the origin, a point at distance ``r1`` and a
    second centre at distance ``r2`` separated by ``v``, this is the angle
    at the second centre between the directions to the origin and to the
    point: ``arccos((r2 - r1 cos v) / sqrt(r1^2 + r2^2 - 2 r1 r2 cos v))``.

    Raises
    ------
    DegenerateConfiguration
        If the point and the second centre coincide (zero denominator).
    """
    r1, r2, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r1, r2, v)))
    den = np.sqrt(np.maximum(r1**2 + r2**2 - 2.0 * r1 * r2 * np.cos(v), 0.0))
    if np.any(den == 0):
        raise DegenerateConfiguration("coincident centre and boundary point")
    out = np.arccos(np.clip((r2 - r1 * np.cos(v)) / den, -1.0, 1.0))
    return out if out.ndim else float(out)


def aoi2(r_o, d_x, v_x):
    """Area of intersection of two disks sharing a boundary point.

    The first disk is centred at the origin with radius ``r_o``; the
    shared point (the AP) lies at distance ``r_o`` from the origin and the
    second centre lies at distance ``d_x`` with angle ``v_x`` between the
    two directions.  The second radius is the AP-to-second-centre distance
    ``sqrt(r_o^2 + d_x^2 - 2 r_o d_x cos v_x)``.

    ``v_x`` may be anywhere in ``[0, 2 pi)``; it is folded onto ``[0, pi]``.
    A vanishing second radius gives zero area.
    """
    r_o, d_x, v_x = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r_o, d_x, v_x)))
    v = np.mod(v_x, TWO_PI)
    v = np.minimum(v, TWO_PI - v)
    rx2 = np.maximum(r_o**2 + d_x**2 - 2.0 * r_o * d_x * np.cos(v), 0.0)
    rx = np.sqrt(rx2)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_u = np.where(rx > 0, (d_x - r_o * np.cos(v)) / np.where(rx > 0, rx, 1.0), 1.0)
    u = np.arccos(np.clip(cos_u, -1.0, 1.0))
    area = _segment(r_o**2, v) + _segment(rx2, u)
    area = np.where(rx > 0, area, 0.0)
    area = np.clip(area, 0.0, np.pi * np.minimum(r_o, rx) ** 2)
    return area if area.ndim else float(area)


def lens_area(r1, r2, d):
    """Area of intersection of two disks with radii ``r1``, ``r2`` and centre distance ``d``."""
    r1, r2, d = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r1, r2, d)))
    small = np.minimum(r1, r2)
    out = np.zeros(np.broadcast(r1, r2, d).shape)
    contained = d <= np.abs(r1 - r2)
    partial = ~contained & (d < r1 + r2)
    out = np.where(contained, np.pi * small**2, out)
    if np.any(partial):
        dd = np.where(partial, d, 1.0)
        a1 = np.arccos(np.clip((dd**2 + r1**2 - r2**2) / (2 * dd * np.where(r1 > 0, r1, 1.0)), -1, 1))
        a2 = np.arccos(np.clip((dd**2 + r2**2 - r1**2) / (2 * dd * np.where(r2 > 0, r2, 1.0)), -1, 1))
        lens = _segment(r1**2, a1) + _segment(r2**2, a2)
        out = np.where(partial, lens, out)
    return out if out.ndim else float(out)


def pair_angle_uxy(r_o, d_x, d_y, v_x, v_y):
    """Piecewise combination of the two half-angles seen from users ``x`` and ``y``.

    ``u_x + u_y`` when ``x`` and ``y`` lie in opposite half-planes of the
    line through the origin and the AP, ``|u_x - u_y|`` otherwise.

    Notes
    -----
    This angle is kept for reference only.  Feeding it to
    ``aoi2(r_x, r_y, .)`` does not give the overlap of the disks around
    ``x`` and ``y`` except in special configurations, so the load
    integrals use :func:`pair_overlap` instead.
    """
    u_x = half_angle_u(r_o, d_x, v_x)
    u_y = half_angle_u(r_o, d_y, v_y)
    vx = np.mod(v_x, TWO_PI)
    vy = np.mod(v_y, TWO_PI)
    opposite = ((vx < np.pi) & (vy > np.pi)) | ((vx > np.pi) & (vy < np.pi))
    out = np.where(opposite, u_x + u_y, np.abs(u_x - u_y))
    return out if np.ndim(out) else float(out)


def pair_overlap(r_o, d_x, d_y, v_x, v_y):
    """Overlap of the disks centred at users ``x`` and ``y`` that pass through the AP.

    Coordinates: origin at the typical user, AP at ``(r_o, 0)``, users at
    polar positions ``(d_x, v_x)`` and ``(d_y, v_y)``.
    """
    ap, x, y = _frame(r_o, d_x, d_y, v_x, v_y)
    rx = np.hypot(*(x - ap))
    ry = np.hypot(*(y - ap))
    return lens_area(rx, ry, np.hypot(*(x - y)))


def _frame(r_o, d_x, d_y, v_x, v_y):
    r_o, d_x, d_y, v_x, v_y = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (r_o, d_x, d_y, v_x, v_y))
    )
    ap = np.stack([r_o, np.zeros_like(r_o)])
    x = np.stack([d_x * np.cos(v_x), d_x * np.sin(v_x)])
    y = np.stack([d_y * np.cos(v_y), d_y * np.sin(v_y)])
    return ap, x, y


# ---------------------------------------------------------------------------
# intersection of several disks
# ---------------------------------------------------------------------------

def _arc_inside(ci, ri, cj, rj, first):
    """Arc of circle i lying inside disk j, as (start angle, length).

    ``first`` says whether i precedes j; it decides which of two identical
    circles carries the shared boundary.
    """
    dx = cj[0] - ci[0]
    dy = cj[1] - ci[1]
    d = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    with np.errstate(invalid="ignore", divide="ignore"):
        kappa = (ri**2 + d**2 - rj**2) / (2.0 * ri * d)
    inside = (ri < rj) | ((ri == rj) & first)
    kappa = np.where(d > 0, kappa, np.where(inside, -np.inf, np.inf))
    half = np.arccos(np.clip(kappa, -1.0, 1.0))
    length = 2.0 * half
    length = np.where(kappa <= -1.0, TWO_PI, np.where(kappa >= 1.0, 0.0, length))
    return phi - half, length


def _intersect_arcs(a1, l1, a2, l2):
    """Intersect two arcs on the same circle; returns up to two (start, length) pieces."""
    s = np.mod(a2 - a1, TWO_PI)
    end1 = np.minimum(np.minimum(s + l2, TWO_PI), l1)
    len1 = np.where(s < l1, np.maximum(end1 - s, 0.0), 0.0)
    len2 = np.clip(np.minimum(s + l2 - TWO_PI, l1), 0.0, None)
    # a full circle paired with a full circle
    both_full = (l1 >= TWO_PI) & (l2 >= TWO_PI)
    len1 = np.where(both_full, TWO_PI, len1)
    len2 = np.where(both_full, 0.0, len2)
    return (a1 + s, len1), (a1, len2)


def _green(c, r, start, length):
    # (1/2) closed-curve integral of x dy - y dx along an arc
    t1 = start
    t2 = start + length
    return 0.5 * (r**2 * length
                  + c[0] * r * (np.sin(t2) - np.sin(t1))
                  - c[1] * r * (np.cos(t2) - np.cos(t1)))


def disks_intersection_area(centers, radii):
    """Area common to two or three disks, vectorised over trailing axes.

    ``centers`` is a sequence of ``(2, ...)`` arrays and ``radii`` a
    sequence of matching arrays.  The boundary of the (convex) common
    region is the union, over each circle, of the arcs lying inside every
    other disk; Green's theorem over those arcs gives the area directly,
    so no case analysis of lens / circular triangle / point is needed.
    """
    n = len(centers)
    if n not in (2, 3):
        raise ValueError("two or three disks supported")
    centers = [np.asarray(c, dtype=float) for c in centers]
    radii = [np.asarray(r, dtype=float) for r in radii]
    total = 0.0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        a, ln = _arc_inside(centers[i], radii[i], centers[others[0]], radii[others[0]], i < others[0])
        if n == 2:
            total = total + _green(centers[i], radii[i], a, ln)
            continue
        b, lb = _arc_inside(centers[i], radii[i], centers[others[1]], radii[others[1]], i < others[1])
        (s1, l1), (s2, l2) = _intersect_arcs(a, ln, b, lb)
        total = total + _green(centers[i], radii[i], s1, l1) + _green(centers[i], radii[i], s2, l2)
    empty = np.zeros(np.shape(total), bool)
    for r in radii:
        empty = empty | (r <= 0)
    area = np.where(empty, 0.0, np.maximum(np.nan_to_num(total), 0.0))
    return area if np.ndim(area) else float(area)


def aoi3(r_o, r_x, r_y, v_x, v_y):
    """Common area of three disks that pass through one AP.

    Frame: typical user at the origin (disk radius ``r_o``), AP at
    ``(r_o, 0)``.  Users ``x`` and ``y`` sit at polar angles ``v_x``,
    ``v_y`` and their disks have radii ``r_x``, ``r_y`` (their distances
    to the AP), which fixes their distances from the origin.
    """
    d_x = _distance_from_radius(r_o, r_x, v_x)
    d_y = _distance_from_radius(r_o, r_y, v_y)
    return aoi3_polar(r_o, d_x, d_y, v_x, v_y)


def _distance_from_radius(r_o, r_i, v_i):
    # the non-negative root d of d^2 - 2 r_o d cos v + r_o^2 - r_i^2 = 0
    # (larger root; the smaller one is a mirror configuration)
    c = np.cos(v_i)
    disc = r_i**2 - r_o**2 * np.sin(v_i) ** 2
    if np.any(disc < -1e-12 * np.maximum(r_o, r_i) ** 2):
        raise InvalidConfiguration("disk radius shorter than the AP's distance to the user's ray")
    return np.maximum(r_o * c + np.sqrt(np.maximum(disc, 0.0)), 0.0)


def aoi3_polar(r_o, d_x, d_y, v_x, v_y):
    """:func:`aoi3` parameterised by the users' distances from the origin."""
    ap, x, y = _frame(r_o, d_x, d_y, v_x, v_y)
    o = np.zeros_like(ap)
    rx = np.hypot(*(x - ap))
    ry = np.hypot(*(y - ap))
    return disks_intersection_area([o, x, y], [ap[0], rx, ry])


def circular_triangle_area(c1, c2, c3, r_o, r_x, r_y):
    """Chord-length formula for a circular triangle with minor-arc sides.

    ``c1``, ``c2``, ``c3`` are the chords on the circles of radius
    ``r_o``, ``r_y`` and ``r_x`` respectively.  A lens is the special
    case ``c2 = 0, c1 = c3`` and a point is ``c1 = c2 = c3 = 0``.
    Valid only when every arc is at most a semicircle.
    """
    heron = (c1 + c2 + c3) * (c2 + c3 - c1) * (c1 + c3 - c2) * (c1 + c2 - c3)
    tri = 0.25 * np.sqrt(np.maximum(heron, 0.0))

    def seg(r, c):
        return r**2 * np.arcsin(np.clip(c / (2 * r), -1, 1)) - 0.25 * c * np.sqrt(np.maximum(4 * r**2 - c**2, 0.0))

    return tri + seg(r_o, c1) + seg(r_y, c2) + seg(r_x, c3)
