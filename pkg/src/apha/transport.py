"""Hyperbolic area transport under finite Blaschke products.

Image areas of hyperbolic disks (as sets and counted with multiplicity),
the empirical area-preservation constant over a (z, R) grid, and the
containment radius of the image around F(z).

The set-area integrand is handled in coordinates recentered at F(z):
hyperbolic area is Moebius invariant, so A_h(F(B)) equals the area of the
pulled-back region around the origin, where radial sections have exact
primitives.  Membership queries batch their polynomial root solves
through stacked companion matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import blaschke as bl
from ._quadrature import ToleranceNotMet, adaptive_simpson, gauss_panels
from .geometry import (AreaResult, EuclideanDisk, hyperbolic_area,
                       hyperbolic_ball_area, hyperbolic_disk_euclidean,
                       pseudo_radius)

__all__ = [
    "AphaScanResult", "area_with_multiplicity", "image_area", "apha_scan",
    "containment_radius",
]


def area_with_multiplicity(F: bl.BlaschkeProduct, z, R: float,
                           rel_tol: float = 1e-6) -> float:
    """Integral of the pullback area density 4|F'|^2/(1-|F|^2)^2 over B_h(z, R).

    Counts the image with multiplicity; for the identity this is exactly
    the area of the disk.  Raises ToleranceNotMet if refinement stalls.
    """
    if R <= 0.0:
        raise ValueError("R must be positive")
    zc = complex(z)
    disk = hyperbolic_disk_euclidean(zc, R)
    c, rho = complex(disk.center), disk.radius
    ac, phi = abs(c), math.atan2(c.imag, c.real)

    # radial Gauss nodes in the hyperbolic arclength variable s
    n_rad_panels = max(4, int(math.ceil(R)) + 2)

    def section(thetas):
        d = thetas - phi
        disc = np.maximum(rho * rho - (ac * np.sin(d)) ** 2, 0.0)
        root = np.sqrt(disc)
        r_hi = np.clip(ac * np.cos(d) + root, 0.0, 1.0 - 1e-12)
        r_lo = np.clip(ac * np.cos(d) - root, 0.0, r_hi)
        return 2.0 * np.arctanh(r_lo), 2.0 * np.arctanh(r_hi)

    def M(thetas: np.ndarray, order: int = 10) -> np.ndarray:
        s_lo, s_hi = section(np.asarray(thetas, dtype=float))
        x, wts = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(0.0, 1.0, n_rad_panels + 1)
        half = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        u = (mids[:, None] + half[:, None] * x[None, :]).ravel()  # (P*order,)
        wu = (half[:, None] * wts[None, :]).ravel()
        S = s_lo[:, None] + (s_hi - s_lo)[:, None] * u[None, :]
        W = (s_hi - s_lo)[:, None] * wu[None, :]
        r = np.tanh(0.5 * S)
        gap = 1.0 / np.cosh(0.5 * S) ** 2          # 1 - r^2, stable
        pts = (r * np.exp(1j * np.asarray(thetas, dtype=float))[:, None]).ravel()
        gapF = bl.one_minus_abs2(F, pts, gap_z=gap.ravel()).reshape(S.shape)
        dF = np.abs(bl.derivative(F, pts)).reshape(S.shape)
        # dA = r dr dtheta, dr = (1 - r^2)/2 ds
        dens = 4.0 * dF ** 2 / gapF ** 2 * r * gap * 0.5
        return np.sum(dens * W, axis=1)

    if ac <= rho:
        lo_t, hi_t = 0.0, 2.0 * math.pi
    else:
        beta = math.asin(min(rho / ac, 1.0))
        lo_t, hi_t = phi - beta, phi + beta

    # refine the radial rule until the theta integral stabilizes
    estimates = []
    for order in (10, 14, 18):
        value, _err = adaptive_simpson(lambda th: M(th, order), lo_t, hi_t,
                                       rel_tol=rel_tol * 0.5, max_evals=40_000)
        estimates.append(value)
        if len(estimates) > 1 and abs(estimates[-1] - estimates[-2]) <= rel_tol * abs(value):
            return value
        n_rad_panels += 3
    raise ToleranceNotMet("radial rule did not stabilize", estimates[-1],
                          abs(estimates[-1] - estimates[-2]))


def _membership_factory(F: bl.BlaschkeProduct, zc: complex, R: float):
    """Vectorized test: does sigma(v) have an F-preimage within B_h(zc, R)?

    sigma recenters the origin at q = F(zc); pseudo-hyperbolic distances
    avoid transcendental calls inside the hot loop.
    """
    q = bl.evaluate(F, zc)
    t_R = pseudo_radius(R)

    def membership(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex).ravel()
        w = (v + q) / (1.0 + q.conjugate() * v)
        roots = bl.preimages_batch(F, w)                  # (N, d)
        pd = np.abs(roots - zc) / np.abs(1.0 - np.conjugate(zc) * roots)
        return np.any(pd <= t_R, axis=1)

    return membership


def image_area(F: bl.BlaschkeProduct, z, R: float, rel_tol: float = 0.01,
               scan_n: int = 96) -> AreaResult:
    """Hyperbolic area of the image set F(B_h(z, R)), without multiplicity.

    Membership of a target point is decided by solving for its preimages;
    the region is integrated in recentered coordinates inside the Schwarz
    bound B_h(F(z), R).  The result carries the quadrature error estimate.
    """
    if R <= 0.0:
        raise ValueError("R must be positive")
    zc = complex(z)
    membership = _membership_factory(F, zc, R)
    window = EuclideanDisk(0.0 + 0.0j, pseudo_radius(R) * (1.0 + 1e-9))
    return hyperbolic_area(membership, window, rel_tol=rel_tol, scan_n=scan_n,
                           max_evals=6_000)


@dataclass(frozen=True)
class AphaScanResult:
    """Area ratios over a (z, R) grid and the empirical preservation constant."""

    grid: tuple                      # ((z, R), ...) in scan order
    ratios: tuple                    # matching A_h(F(B))/A_h(B)
    c_hat: float                     # min ratio: empirical APHA constant
    flags: tuple                     # per-cell quadrature error estimates


def apha_scan(F: bl.BlaschkeProduct, z_grid: Sequence, R_list: Sequence[float],
              rel_tol: float = 0.01, allow_small_R: bool = False) -> AphaScanResult:
    """Scan the image-to-disk area ratio over all (z, R) cells.

    R <= 1 cells are rejected unless ``allow_small_R`` (the area-preservation
    constant is only meaningful for R > 1; small radii are exploratory).
    """
    cells = []
    ratios = []
    flags = []
    for R in R_list:
        R = float(R)
        if R <= 1.0 and not allow_small_R:
            raise ValueError(f"R = {R} <= 1 (pass allow_small_R=True to explore)")
        for z in z_grid:
            zc = complex(z)
            img = image_area(F, zc, R, rel_tol=rel_tol)
            ball = hyperbolic_ball_area(R)
            cells.append((zc, R))
            ratios.append(img.value / ball)
            flags.append(img.error / ball)
    return AphaScanResult(grid=tuple(cells), ratios=tuple(ratios),
                          c_hat=min(ratios), flags=tuple(flags))


def containment_radius(F: bl.BlaschkeProduct, z, R: float, tol: float = 1e-3,
                       n_angles: int = 64, n_rings: int = 4) -> float:
    """Largest r (to ``tol``) with B_h(F(z), r) covered by F(B_h(z, R)).

    Sampled containment: every probe point on ``n_rings`` concentric
    hyperbolic circles (plus the center) must have a preimage inside
    B_h(z, R).  The deficit R - r estimates the containment constant.
    """
    if R <= 0.0:
        raise ValueError("R must be positive")
    zc = complex(z)
    membership = _membership_factory(F, zc, R)
    angles = np.exp(2j * math.pi * np.arange(n_angles) / n_angles)

    def covered(r: float) -> bool:
        if r <= 0.0:
            return True
        radii = np.tanh(0.5 * r * np.linspace(1.0 / n_rings, 1.0, n_rings))
        pts = (radii[:, None] * angles[None, :]).ravel()
        pts = np.concatenate([pts, [0.0 + 0.0j]])
        return bool(np.all(membership(pts)))

    lo, hi = 0.0, R
    if covered(R):
        return R
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if covered(mid):
            lo = mid
        else:
            hi = mid
    return lo
