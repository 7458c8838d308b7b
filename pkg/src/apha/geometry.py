"""Hyperbolic geometry of the unit disk.

Distances, disks and areas for the metric with density 2/(1-|z|^2), the
Poisson kernel and harmonic measure, geodesic rays, and the arc /
Carleson-square combinatorics that every dyadic diagnostic builds on.

Conventions:
  * arcs carry normalized length ``m`` with m(full circle) = 1, matching
    the boundary measure |dz|/2pi; angles in radians appear only on the
    boundary-point layer;
  * for an arc I centered at xi, the associated interior point is
    z_I = (1 - m(I)) xi, and the Carleson square over I is
    {z : z/|z| in I, 1 - m(I) < |z| < 1} with side length m(I).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ._quadrature import ToleranceNotMet, adaptive_simpson

__all__ = [
    "BOUNDARY_CLEARANCE", "RADIAL_CLIP", "TWO_PI",
    "DiskPoint", "BoundaryPoint", "Arc", "CarlesonSquare", "EuclideanDisk",
    "AreaResult", "hyperbolic_distance", "hyperbolic_disk_euclidean",
    "hyperbolic_area", "hyperbolic_ball_area", "poisson_kernel",
    "harmonic_measure", "geodesic_point", "dyadic_descendants",
    "wrap_angle", "angle_distance",
]

TWO_PI = 2.0 * math.pi

# points at |z| > 1 - BOUNDARY_CLEARANCE are rejected by DiskPoint
BOUNDARY_CLEARANCE = 1e-12
# area quadratures clip the singular density at |z| = 1 - RADIAL_CLIP
RADIAL_CLIP = 1e-9


def wrap_angle(theta: float) -> float:
    """Reduce an angle to [0, 2pi)."""
    t = math.fmod(theta, TWO_PI)
    return t + TWO_PI if t < 0.0 else t


def angle_distance(a: float, b: float) -> float:
    """Circular distance between two angles, in [0, pi]."""
    d = abs(math.fmod(a - b, TWO_PI))
    return min(d, TWO_PI - d)


def _as_complex(z) -> complex:
    if isinstance(z, DiskPoint):
        return z.z
    if isinstance(z, BoundaryPoint):
        return z.xi
    return complex(z)


@dataclass(frozen=True)
class DiskPoint:
    """A point of the open unit disk, kept strictly away from the boundary."""

    re: float
    im: float

    def __post_init__(self):
        if math.hypot(self.re, self.im) > 1.0 - BOUNDARY_CLEARANCE:
            raise ValueError(
                f"point {self.re}+{self.im}j too close to the unit circle "
                f"(|z| must be <= 1 - {BOUNDARY_CLEARANCE:g})")

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    def __complex__(self) -> complex:
        return self.z

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)


@dataclass(frozen=True)
class BoundaryPoint:
    """A point xi = exp(i theta) of the unit circle."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @classmethod
    def from_complex(cls, xi: complex) -> "BoundaryPoint":
        return cls(math.atan2(xi.imag, xi.real))

    @property
    def xi(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    def __complex__(self) -> complex:
        return self.xi


@dataclass(frozen=True)
class Arc:
    """Arc of the unit circle: center angle plus normalized length in (0, 1]."""

    center_theta: float
    length: float

    def __post_init__(self):
        if not 0.0 < self.length <= 1.0:
            raise ValueError(f"arc length {self.length} outside (0, 1]")
        object.__setattr__(self, "center_theta", wrap_angle(self.center_theta))

    @classmethod
    def full_circle(cls) -> "Arc":
        return cls(0.0, 1.0)

    @property
    def half_angle(self) -> float:
        return math.pi * self.length

    def endpoints(self) -> tuple[float, float]:
        """Angular endpoints (lo, hi) with hi - lo = 2 pi m(I)."""
        return (self.center_theta - self.half_angle,
                self.center_theta + self.half_angle)

    def contains_angle(self, theta: float) -> bool:
        return angle_distance(theta, self.center_theta) <= self.half_angle + 1e-15

    def contains(self, point) -> bool:
        if isinstance(point, BoundaryPoint):
            return self.contains_angle(point.theta)
        return self.contains_angle(math.atan2(point.imag, point.real))

    def children(self) -> tuple["Arc", "Arc"]:
        """The two dyadic halves, ordered counterclockwise from the low end."""
        quarter = 0.5 * self.half_angle
        h = 0.5 * self.length
        return (Arc(self.center_theta - quarter, h),
                Arc(self.center_theta + quarter, h))

    def z_point(self) -> DiskPoint:
        """The interior point z_I = (1 - m(I)) xi associated with the arc."""
        r = 1.0 - self.length
        return DiskPoint(r * math.cos(self.center_theta),
                         r * math.sin(self.center_theta))


@dataclass(frozen=True)
class CarlesonSquare:
    """Carleson box over an arc: {z : z/|z| in I, 1 - m(I) < |z| < 1}."""

    base: Arc

    @property
    def ell(self) -> float:
        return self.base.length

    def z_center(self) -> DiskPoint:
        return self.base.z_point()

    def contains(self, w: complex) -> bool:
        r = abs(w)
        if not 1.0 - self.base.length < r < 1.0:
            return False
        return self.base.contains_angle(math.atan2(w.imag, w.real))

    def children(self) -> tuple["CarlesonSquare", "CarlesonSquare"]:
        lo, hi = self.base.children()
        return CarlesonSquare(lo), CarlesonSquare(hi)


@dataclass(frozen=True)
class EuclideanDisk:
    """Euclidean disk, used as the concrete shape of hyperbolic disks."""

    center: complex
    radius: float


@dataclass(frozen=True)
class AreaResult:
    """Area estimate together with its quadrature error estimate."""

    value: float
    error: float


def hyperbolic_distance(z, w) -> float:
    """Distance for the metric 2|dz|/(1-|z|^2).

    Uses the pseudo-hyperbolic closed form d = log((1+t)/(1-t)) with
    t = |z-w| / |1 - conj(z) w|, evaluated through the stable identity
    1 - t^2 = (1-|z|^2)(1-|w|^2)/|1 - conj(z) w|^2.
    """
    zc, wc = _as_complex(z), _as_complex(w)
    den2 = abs(1.0 - zc.conjugate() * wc) ** 2
    s = (1.0 - abs(zc) ** 2) * (1.0 - abs(wc) ** 2) / den2
    s = min(max(s, 0.0), 1.0)
    t = math.sqrt(1.0 - s)
    if s == 0.0:
        raise ValueError("points too close to the boundary for a finite distance")
    return 2.0 * math.log1p(t) - math.log(s)


def hyperbolic_distance_from_origin(r: float) -> float:
    """d_h(0, r) = log((1+r)/(1-r)) for 0 <= r < 1."""
    return math.log1p(r) - math.log1p(-r)


def pseudo_radius(R: float) -> float:
    """Euclidean radius tanh(R/2) of the hyperbolic ball B_h(0, R)."""
    return math.tanh(0.5 * R)


def hyperbolic_disk_euclidean(z, R: float) -> EuclideanDisk:
    """Euclidean center and radius of the hyperbolic disk B_h(z, R)."""
    if R <= 0.0:
        raise ValueError("hyperbolic radius must be positive")
    zc = _as_complex(z)
    t = pseudo_radius(R)
    s2 = abs(zc) ** 2
    den = 1.0 - t * t * s2
    return EuclideanDisk(zc * (1.0 - t * t) / den, t * (1.0 - s2) / den)


def hyperbolic_ball_area(R: float) -> float:
    """Closed-form A_h(B_h(z, R)) = 4 pi sinh^2(R/2), independent of center."""
    return 4.0 * math.pi * math.sinh(0.5 * R) ** 2


def poisson_kernel(z, xi) -> float:
    """Poisson kernel (1-|z|^2)/|xi - z|^2 against normalized arc measure."""
    zc = _as_complex(z)
    xic = _as_complex(xi)
    return (1.0 - abs(zc) ** 2) / abs(xic - zc) ** 2


def poisson_kernel_array(z: complex, thetas: np.ndarray) -> np.ndarray:
    xi = np.exp(1j * np.asarray(thetas))
    return (1.0 - abs(z) ** 2) / np.abs(xi - z) ** 2


def _poisson_primitive(u: float, s: float) -> float:
    """Continuous antiderivative G of the Poisson kernel of s >= 0 on the line.

    G' (u) = (1/2pi) (1-s^2)/(1 - 2 s cos u + s^2) and G(u + 2pi) = G(u) + 1.
    """
    k = math.floor((u + math.pi) / TWO_PI)
    v = u - TWO_PI * k
    return k + math.atan2((1.0 + s) * math.sin(0.5 * v),
                          (1.0 - s) * math.cos(0.5 * v)) / math.pi


def harmonic_measure(z, arcs: Iterable[Arc] | Arc) -> float:
    """Harmonic measure omega(z, union of arcs) via the closed-form primitive.

    The arcs must be pairwise disjoint (shared endpoints are tolerated).
    """
    if isinstance(arcs, Arc):
        arcs = [arcs]
    arcs = list(arcs)
    if not arcs:
        return 0.0
    _check_disjoint(arcs)
    zc = _as_complex(z)
    s = abs(zc)
    phi = math.atan2(zc.imag, zc.real)
    total = 0.0
    for arc in arcs:
        lo, hi = arc.endpoints()
        total += (_poisson_primitive(hi - phi, s)
                  - _poisson_primitive(lo - phi, s))
    return total


def _check_disjoint(arcs: Sequence[Arc]) -> None:
    if sum(a.length for a in arcs) > 1.0 + 1e-12:
        raise ValueError("arcs overlap: total length exceeds the circle")
    spans = sorted((wrap_angle(a.endpoints()[0]), 2.0 * a.half_angle) for a in arcs)
    for (lo1, len1), (lo2, _len2) in zip(spans, spans[1:]):
        if lo1 + len1 > lo2 + 1e-12:
            raise ValueError("arcs overlap")
    if len(spans) > 1:
        lo_last, len_last = spans[-1]
        if lo_last + len_last - TWO_PI > spans[0][0] + 1e-12:
            raise ValueError("arcs overlap (wraparound)")


def geodesic_point(z, xi, t: float) -> DiskPoint:
    """Point at hyperbolic arclength t along the geodesic ray [z, xi)."""
    if t < 0.0:
        raise ValueError("arclength must be nonnegative")
    zc = _as_complex(z)
    xic = _as_complex(xi)
    # transport z to the origin, walk the radial geodesic, transport back
    xi0 = (xic - zc) / (1.0 - zc.conjugate() * xic)
    xi0 /= abs(xi0)
    rho = math.tanh(0.5 * t)
    w = (rho * xi0 + zc) / (1.0 + zc.conjugate() * rho * xi0)
    return DiskPoint(w.real, w.imag)


def geodesic_point_with_gap(z: complex, xi: complex, t: float) -> tuple[complex, float]:
    """As :func:`geodesic_point` but also return 1-|w|^2 in stable form."""
    xi0 = (xi - z) / (1.0 - z.conjugate() * xi)
    xi0 /= abs(xi0)
    rho = math.tanh(0.5 * t)
    num = rho * xi0 + z
    den = 1.0 + z.conjugate() * rho * xi0
    w = num / den
    sech2 = 1.0 / math.cosh(0.5 * t) ** 2     # = 1 - rho^2, no cancellation
    gap = (1.0 - abs(z) ** 2) * sech2 / abs(den) ** 2
    return w, gap


def dyadic_descendants(arc: Arc, depth: int) -> list[Arc]:
    """The 2**depth equal dyadic subarcs tiling ``arc`` exactly."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = 1 << depth
    h = arc.length / n
    lo, _ = arc.endpoints()
    return [Arc(lo + (k + 0.5) * h * TWO_PI, h) for k in range(n)]


# ---------------------------------------------------------------------------
# hyperbolic area of predicate-defined regions
# ---------------------------------------------------------------------------

def _s_of_r(r: float) -> float:
    return hyperbolic_distance_from_origin(r)


def _radial_measure(membership, thetas: np.ndarray, s_lo: np.ndarray,
                    s_hi: np.ndarray, scan_n: int = 96,
                    bisect_iter: int = 42) -> np.ndarray:
    """Hyperbolic radial measure of {s : tanh(s/2) e^{i theta} in region}.

    For each angle, scans a uniform grid in the hyperbolic radial variable
    s, locates membership transitions, refines each by bisection, and sums
    cosh(s_out) - cosh(s_in) over the inside-intervals (the closed-form
    primitive of the radial density 4 r/(1-r^2)^2 is 2/(1-r^2) = cosh s + 1).

    ``membership`` maps a flat complex array to booleans.
    """
    thetas = np.asarray(thetas, dtype=float)
    T = thetas.size
    s_lo = np.broadcast_to(np.asarray(s_lo, dtype=float), (T,))
    s_hi = np.broadcast_to(np.asarray(s_hi, dtype=float), (T,))
    out = np.zeros(T)
    width = s_hi - s_lo
    live = width > 0.0
    if not np.any(live):
        return out
    tl = thetas[live]; sl = s_lo[live]; sh = s_hi[live]
    grid = sl[:, None] + (sh - sl)[:, None] * np.linspace(0.0, 1.0, scan_n)[None, :]
    pts = np.tanh(0.5 * grid) * np.exp(1j * tl)[:, None]
    inside = np.asarray(membership(pts.ravel()), dtype=bool).reshape(grid.shape)

    measure = np.zeros(tl.size)
    # closed intervals fully resolved by the scan endpoints
    flips = inside[:, 1:] != inside[:, :-1]
    # refine every flip by vectorized bisection (same iteration across rows)
    rows, cols = np.nonzero(flips)
    lo = grid[rows, cols].copy()
    hi = grid[rows, cols + 1].copy()
    lo_in = inside[rows, cols].copy()
    if rows.size:
        th = tl[rows]
        for _ in range(bisect_iter):
            mid = 0.5 * (lo + hi)
            mid_in = np.asarray(membership(np.tanh(0.5 * mid) * np.exp(1j * th)),
                                dtype=bool)
            go_hi = mid_in == lo_in
            lo = np.where(go_hi, mid, lo)
            hi = np.where(go_hi, hi, mid)
        crossing = 0.5 * (lo + hi)
    else:
        crossing = np.zeros(0)

    # assemble signed contributions: each inside-interval [a, b] adds
    # cosh(b) - cosh(a); walk transitions per row in order
    cosh_cross = np.cosh(crossing)
    sign = np.where(lo_in, 1.0, -1.0)   # leaving inside => +cosh, entering => -cosh
    np.add.at(measure, rows, sign * cosh_cross)
    # boundary terms of the scan window
    first_in = inside[:, 0]
    last_in = inside[:, -1]
    measure += np.where(last_in, np.cosh(sh), 0.0)
    measure -= np.where(first_in, np.cosh(sl), 0.0)
    out[live] = measure
    return out


def _disk_sections(window: EuclideanDisk):
    """Angular domain and radial section bounds of a Euclidean-disk window."""
    c = complex(window.center)
    rho = float(window.radius)
    ac = abs(c)
    phi = math.atan2(c.imag, c.real)
    r_clip = 1.0 - RADIAL_CLIP

    if ac <= 1e-15:
        def bounds(thetas):
            T = np.asarray(thetas).size
            r_hi = np.full(T, min(rho, r_clip))
            return np.zeros(T), 2.0 * np.arctanh(r_hi)
        return 0.0, TWO_PI, bounds

    if ac <= rho:
        def bounds(thetas):
            d = np.asarray(thetas) - phi
            disc = np.maximum(rho * rho - (ac * np.sin(d)) ** 2, 0.0)
            r_hi = np.minimum(ac * np.cos(d) + np.sqrt(disc), r_clip)
            r_hi = np.maximum(r_hi, 0.0)
            return np.zeros(r_hi.size), 2.0 * np.arctanh(r_hi)
        return 0.0, TWO_PI, bounds

    beta = math.asin(min(rho / ac, 1.0))
    def bounds(thetas):
        d = np.asarray(thetas) - phi
        disc = np.maximum(rho * rho - (ac * np.sin(d)) ** 2, 0.0)
        root = np.sqrt(disc)
        r_lo = np.clip(ac * np.cos(d) - root, 0.0, r_clip)
        r_hi = np.clip(ac * np.cos(d) + root, 0.0, r_clip)
        r_hi = np.maximum(r_hi, r_lo)
        return 2.0 * np.arctanh(r_lo), 2.0 * np.arctanh(r_hi)
    return phi - beta, phi + beta, bounds


def hyperbolic_area(region: Callable[[np.ndarray], np.ndarray] | None,
                    window, rel_tol: float = 1e-6, scan_n: int = 96,
                    max_evals: int = 40_000) -> AreaResult:
    """Hyperbolic area of {z in window : region(z)}.

    ``region`` is a membership predicate over flat complex arrays (``None``
    means the whole window); ``window`` is a :class:`CarlesonSquare` or a
    :class:`EuclideanDisk` kept inside the unit disk (the singular density
    is clipped at |z| = 1 - RADIAL_CLIP).  The estimate integrates exact
    radial primitives of the density over membership intervals found by a
    scan-and-bisect pass, then integrates over the angle adaptively.

    Raises :class:`ToleranceNotMet` if the refinement budget is exhausted;
    the best estimate rides on the exception.
    """
    if isinstance(window, CarlesonSquare):
        lo_t, hi_t = window.base.endpoints()
        s_in = _s_of_r(max(1.0 - window.base.length, 0.0))
        s_out = _s_of_r(1.0 - RADIAL_CLIP)
        def bounds(thetas):
            T = np.asarray(thetas).size
            return np.full(T, s_in), np.full(T, s_out)
        theta_lo, theta_hi = lo_t, hi_t
    elif isinstance(window, EuclideanDisk):
        theta_lo, theta_hi, bounds = _disk_sections(window)
    else:
        raise TypeError("window must be a CarlesonSquare or EuclideanDisk")

    if region is None:
        membership = lambda pts: np.ones(pts.shape, dtype=bool)
    else:
        membership = region

    def M(thetas: np.ndarray) -> np.ndarray:
        s_lo, s_hi = bounds(thetas)
        return _radial_measure(membership, thetas, s_lo, s_hi, scan_n=scan_n)

    value, err = adaptive_simpson(M, theta_lo, theta_hi, rel_tol=rel_tol,
                                  max_evals=max_evals,
                                  abs_floor=1e-300)
    # measure was computed against d theta; normalized arc measure absorbs 2 pi
    return AreaResult(value, err)
