"""Pointwise distortion and lag profiles along geodesic rays.

The Moebius distortion mu(z) = 1 - (1-|z|^2)|F'(z)|/(1-|F(z)|^2) measures
deviation from an automorphism.  Along a geodesic ray [z, xi) the lag
L(t) = t - d_h(F(z), F(gamma(t))) and the radial lag
L_rad(t) = t - (d_h(0, F(gamma(t))) - d_h(0, F(z))) are nondecreasing;
their limits classify the ray as good / almost isometric.  All distances
are evaluated through cancellation-free gap arithmetic so the profiles
stay monotone to ~1e-12 even at t ~ 20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import blaschke as bl
from .geometry import (Arc, BoundaryPoint, DiskPoint, angle_distance,
                       geodesic_point_with_gap, harmonic_measure, wrap_angle)

__all__ = [
    "RayClassification", "RayProfile", "mobius_distortion", "ray_profile",
    "ray_classification", "arc_min_derivative", "low_derivative_harmonic_measure",
]

# convergence flag: the last two samples of each lag must agree this well
CONVERGENCE_TOL = 1e-4
MONOTONE_SLACK = 1e-9


class RayClassification(str, Enum):
    GOOD = "good"
    ALMOST_ISOMETRIC = "almost_isometric"
    NEITHER = "neither"


def mobius_distortion(F: bl.BlaschkeProduct, z):
    """mu(z) in [0, 1]; 0 only for automorphisms, 1 at critical points."""
    scalar = not isinstance(z, np.ndarray)
    arr = np.asarray([complex(z)] if scalar else z, dtype=complex)
    gap_z = 1.0 - np.abs(arr) ** 2
    gap_F = np.atleast_1d(bl.one_minus_abs2(F, arr, gap_z=gap_z))
    mu = 1.0 - gap_z * np.abs(bl.derivative(F, arr)) / gap_F
    mu = np.maximum(mu, 0.0)           # Schwarz guarantees mu >= 0
    return float(mu[0]) if scalar else mu


def _dh_from_gaps(gap1: float, gap2: float, cross2: float) -> float:
    """d_h given 1-|z1|^2, 1-|z2|^2 and |1 - conj(z1) z2|^2, all stable."""
    s = gap1 * gap2 / cross2
    s = min(max(s, 1e-300), 1.0)
    t = math.sqrt(max(1.0 - s, 0.0))
    return 2.0 * math.log1p(t) - math.log(s)


def _dh_origin_from_gap(gap: float) -> float:
    """d_h(0, w) from 1-|w|^2."""
    r = math.sqrt(max(1.0 - gap, 0.0))
    return 2.0 * math.log1p(r) - math.log(max(gap, 1e-300))


@dataclass(frozen=True)
class RayProfile:
    """Sampled lag functions along the geodesic ray [z, xi)."""

    z: DiskPoint
    xi: BoundaryPoint
    t: np.ndarray
    lag: np.ndarray
    radial_lag: np.ndarray
    lag_limit: float
    radial_lag_limit: float
    k_factor: float
    converged: bool
    # signed residuals of the two boundary identities relating the limits
    # to log|F'(xi)| and to 2 log k; finite bands, recorded not asserted
    derivative_identity_defect: float
    k_identity_defect: float

    def __post_init__(self):
        if np.any(np.diff(self.lag) < -MONOTONE_SLACK):
            raise ValueError("lag profile is not nondecreasing")
        if np.any(np.diff(self.radial_lag) < -MONOTONE_SLACK):
            raise ValueError("radial lag profile is not nondecreasing")
        if np.any(self.radial_lag < self.lag - MONOTONE_SLACK):
            raise ValueError("radial lag must dominate the lag")


def ray_profile(F: bl.BlaschkeProduct, z, xi, t_max: float = 20.0,
                n_samples: int = 64) -> RayProfile:
    """Sample the lag and radial-lag functions along [z, xi).

    The suprema are the values at ``t_max`` (both lags are nondecreasing);
    ``converged`` is set when the final two samples of each differ by less
    than 1e-4.  ``k_factor`` is the smallest k >= 1 with F(xi) in the
    k-fold enlargement of the arc attached to F(z) (k = 1 when F(z) = 0).
    """
    if t_max <= 0.0 or n_samples < 2:
        raise ValueError("need t_max > 0 and at least two samples")
    zc = complex(z)
    xip = xi if isinstance(xi, BoundaryPoint) else BoundaryPoint.from_complex(complex(xi))
    xic = complex(xip)

    Fz = bl.evaluate(F, zc)
    gap_Fz = bl.one_minus_abs2(F, zc)
    dh0_Fz = _dh_origin_from_gap(gap_Fz)

    ts = np.linspace(0.0, t_max, n_samples)
    lag = np.empty(n_samples)
    rad = np.empty(n_samples)
    for i, t in enumerate(ts):
        w, gap_w = geodesic_point_with_gap(zc, xic, float(t))
        Fw = bl.evaluate(F, w)
        gap_Fw = bl.one_minus_abs2(F, w, gap_z=gap_w)
        cross2 = abs(1.0 - Fz.conjugate() * Fw) ** 2
        lag[i] = t - _dh_from_gaps(gap_Fz, gap_Fw, cross2)
        rad[i] = t - (_dh_origin_from_gap(gap_Fw) - dh0_Fz)
    # clip the tiny negative noise at t = 0
    lag[0] = max(lag[0], 0.0)
    rad[0] = max(rad[0], 0.0)

    converged = (abs(lag[-1] - lag[-2]) < CONVERGENCE_TOL
                 and abs(rad[-1] - rad[-2]) < CONVERGENCE_TOL)
    lag_limit = float(np.max(lag))
    rad_limit = float(np.max(rad))

    # k-factor from the boundary image
    F_xi = bl.evaluate(F, xic)
    absFz = abs(Fz)
    if absFz < 1e-13:
        k = 1.0
    else:
        dtheta = angle_distance(math.atan2(F_xi.imag, F_xi.real),
                                math.atan2(Fz.imag, Fz.real))
        k = max(1.0, dtheta / (math.pi * (1.0 - absFz)))

    log_dF = math.log(bl.boundary_derivative_modulus(F, xip))
    defect1 = (log_dF - bl.log_ratio(F, zc)) - rad_limit
    defect2 = rad_limit - lag_limit - 2.0 * math.log(k)

    return RayProfile(
        z=DiskPoint.from_complex(zc), xi=xip, t=ts, lag=lag, radial_lag=rad,
        lag_limit=lag_limit, radial_lag_limit=rad_limit, k_factor=k,
        converged=converged, derivative_identity_defect=defect1,
        k_identity_defect=defect2)


def ray_classification(profile: RayProfile, C: float) -> RayClassification:
    """good if L_rad(xi) <= C, else almost_isometric if L(xi) <= C."""
    if not profile.converged:
        raise ValueError("profile has not converged; increase t_max or n_samples")
    good = profile.radial_lag_limit <= C
    almost = profile.lag_limit <= C
    if good and not almost:
        raise AssertionError("good ray must be almost isometric")
    if good:
        return RayClassification.GOOD
    if almost:
        return RayClassification.ALMOST_ISOMETRIC
    return RayClassification.NEITHER


def arc_min_derivative(F: bl.BlaschkeProduct, I: Arc, n_samples: int = 64) -> float:
    """min over sampled xi in I of |F'(xi)| (1-|z_I|)/(1-|F(z_I)|).

    The empirical constant of the one-point small-derivative property on
    the arc: values O(1) mean some boundary point of I has derivative no
    larger than the normalized ratio attached to z_I.
    """
    if n_samples < 16:
        raise ValueError("need at least 16 samples")
    lo, hi = I.endpoints()
    thetas = np.linspace(lo, hi, n_samples)
    dmod = bl.boundary_derivative_modulus(F, thetas)
    zI = I.z_point()
    ratio = math.exp(bl.log_ratio(F, complex(zI)))
    return float(np.min(dmod) / ratio)


def low_derivative_harmonic_measure(F: bl.BlaschkeProduct, z, C: float,
                                    n_scan: int = 4096,
                                    angle_tol: float = 1e-8) -> float:
    """Harmonic measure from z of {xi : |F'(xi)| < C (1-|F(z)|)/(1-|z|)}.

    The sublevel set is assembled as a finite union of arcs from a
    sign-change scan of the smooth function |F'(e^{i t})| - threshold,
    with each crossing refined by bisection to ``angle_tol`` radians.
    """
    if C <= 0.0:
        raise ValueError("C must be positive")
    zc = complex(z)
    threshold = C * math.exp(bl.log_ratio(F, zc))

    thetas = np.linspace(0.0, 2.0 * math.pi, n_scan, endpoint=False)
    g = bl.boundary_derivative_modulus(F, thetas) - threshold
    below = g < 0.0
    if np.all(below):
        return 1.0
    if not np.any(below):
        return 0.0

    flips = np.nonzero(below != np.roll(below, -1))[0]
    h = 2.0 * math.pi / n_scan
    crossings = []
    for i in flips:
        lo = thetas[i]
        hi = thetas[i] + h
        flo = g[i]
        while hi - lo > angle_tol:
            mid = 0.5 * (lo + hi)
            fm = bl.boundary_derivative_modulus(F, float(mid)) - threshold
            if (fm < 0.0) == (flo < 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
        crossings.append(0.5 * (lo + hi))

    crossings.sort()
    arcs = []
    for j, start in enumerate(crossings):
        end = crossings[(j + 1) % len(crossings)]
        span = wrap_angle(end - start)
        if span == 0.0:
            continue
        mid = start + 0.5 * span
        if bl.boundary_derivative_modulus(F, float(mid)) < threshold:
            arcs.append(Arc(mid, span / (2.0 * math.pi)))
    return min(max(harmonic_measure(zc, arcs), 0.0), 1.0)
