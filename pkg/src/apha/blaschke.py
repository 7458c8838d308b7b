"""Finite Blaschke products and disk automorphisms.

A degree-d product is stored by its zero list (with multiplicity) and a
unimodular rotation:

    F(z) = e^{i theta} prod_k b_{a_k}(z),
    b_a(z) = (|a|/a) (a - z)/(1 - conj(a) z),   b_0(z) = z.

Evaluation and differentiation go factor by factor (well conditioned on
and near the circle); preimages and critical points go through the
rational representation F = P/Q and batched companion-matrix eigenvalues,
followed by a Newton polish on the rational equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .geometry import BOUNDARY_CLEARANCE, BoundaryPoint, DiskPoint, wrap_angle

__all__ = [
    "BlaschkeProduct", "MoebiusAutomorphism", "RootFindingError",
    "evaluate", "derivative", "boundary_derivative_modulus",
    "critical_points", "preimages", "preimages_batch",
    "post_compose_mobius", "compose", "one_minus_abs2", "log_ratio",
    "identity_product",
]

# roots closer than this are merged and counted with multiplicity
MERGE_TOL = 1e-8


class RootFindingError(RuntimeError):
    """Root solver failed to converge; carries residual diagnostics."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def _as_scalar(z) -> complex:
    if isinstance(z, (DiskPoint, BoundaryPoint)):
        return complex(z)
    return complex(z)


@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product given by zeros (with multiplicity) and rotation."""

    zeros: tuple
    rotation_theta: float = 0.0

    MAX_DEGREE = 64

    def __post_init__(self):
        zs = tuple(complex(a) for a in self.zeros)
        if not zs:
            raise ValueError("a Blaschke product needs at least one zero (degree >= 1)")
        if len(zs) > self.MAX_DEGREE:
            raise ValueError(f"degree {len(zs)} exceeds the supported cap {self.MAX_DEGREE}")
        for a in zs:
            if abs(a) > 1.0 - BOUNDARY_CLEARANCE:
                raise ValueError(f"zero {a} is not strictly inside the unit disk")
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "rotation_theta", wrap_angle(float(self.rotation_theta)))

    @property
    def degree(self) -> int:
        return len(self.zeros)

    @property
    def rotation(self) -> complex:
        return complex(math.cos(self.rotation_theta), math.sin(self.rotation_theta))

    @cached_property
    def numerator(self) -> np.ndarray:
        """Coefficients (low to high) of P with F = P/Q."""
        c = np.array([self.rotation], dtype=complex)
        for a in self.zeros:
            if a == 0:
                c = npoly.polymul(c, [0.0, 1.0])
            else:
                u = abs(a) / a
                c = npoly.polymul(c, [u * a, -u])
        return c

    @cached_property
    def denominator(self) -> np.ndarray:
        c = np.array([1.0 + 0.0j])
        for a in self.zeros:
            if a != 0:
                c = npoly.polymul(c, [1.0, -a.conjugate()])
        return c

    def spec_dict(self) -> dict:
        """JSON-friendly form used by the CLI configuration layer."""
        return {"rotation_theta": self.rotation_theta,
                "zeros": [[a.real, a.imag] for a in self.zeros]}

    @classmethod
    def from_spec_dict(cls, d: dict) -> "BlaschkeProduct":
        return cls(tuple(complex(re, im) for re, im in d["zeros"]),
                   float(d.get("rotation_theta", 0.0)))

    def __call__(self, z):
        return evaluate(self, z)


def identity_product() -> BlaschkeProduct:
    """The identity map as a degree-1 product (single zero at the origin)."""
    return BlaschkeProduct((0.0,), 0.0)


@dataclass(frozen=True)
class MoebiusAutomorphism:
    """Disk automorphism tau(z) = e^{i phi} (z - a)/(1 - conj(a) z)."""

    a: complex
    phi: float = 0.0

    def __post_init__(self):
        a = complex(self.a)
        if abs(a) > 1.0 - BOUNDARY_CLEARANCE:
            raise ValueError("automorphism parameter must lie inside the disk")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))

    def __call__(self, w):
        w = w if isinstance(w, np.ndarray) else _as_scalar(w)
        rot = complex(math.cos(self.phi), math.sin(self.phi))
        return rot * (w - self.a) / (1.0 - self.a.conjugate() * w)

    def inverse(self) -> "MoebiusAutomorphism":
        rot = complex(math.cos(self.phi), math.sin(self.phi))
        return MoebiusAutomorphism(-self.a * rot, -self.phi)

    def as_blaschke(self) -> BlaschkeProduct:
        if self.a == 0:
            return BlaschkeProduct((0.0,), self.phi)
        theta = self.phi + math.pi + math.atan2(self.a.imag, self.a.real)
        return BlaschkeProduct((self.a,), theta)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _factor_values(F: BlaschkeProduct, z: np.ndarray) -> np.ndarray:
    """Stack of the d factor values b_{a_k}(z), shape (d,) + z.shape."""
    vals = np.empty((F.degree,) + z.shape, dtype=complex)
    for k, a in enumerate(F.zeros):
        if a == 0:
            vals[k] = z
        else:
            vals[k] = (abs(a) / a) * (a - z) / (1.0 - a.conjugate() * z)
    return vals


def evaluate(F: BlaschkeProduct, z):
    """F(z) for a scalar, DiskPoint/BoundaryPoint, or complex ndarray."""
    scalar = not isinstance(z, np.ndarray)
    arr = np.asarray([_as_scalar(z)] if scalar else z, dtype=complex)
    vals = _factor_values(F, arr)
    out = F.rotation * vals.prod(axis=0)
    return complex(out[0]) if scalar else out


def derivative(F: BlaschkeProduct, z):
    """F'(z) by the product rule over factors (stable at the zeros of F)."""
    scalar = not isinstance(z, np.ndarray)
    arr = np.asarray([_as_scalar(z)] if scalar else z, dtype=complex)
    d = F.degree
    vals = _factor_values(F, arr)
    dervs = np.empty_like(vals)
    for k, a in enumerate(F.zeros):
        if a == 0:
            dervs[k] = 1.0
        else:
            dervs[k] = (abs(a) / a) * (abs(a) ** 2 - 1.0) / (1.0 - a.conjugate() * arr) ** 2
    # prefix[k] = prod_{j<k} b_j, suffix[k] = prod_{j>k} b_j
    prefix = np.ones_like(vals)
    suffix = np.ones_like(vals)
    if d > 1:
        np.cumprod(vals[:-1], axis=0, out=prefix[1:])
        np.cumprod(vals[::-1][:-1], axis=0, out=suffix[::-1][1:][::-1])
    out = F.rotation * np.sum(dervs * prefix * suffix, axis=0)
    return complex(out[0]) if scalar else out


def boundary_derivative_modulus(F: BlaschkeProduct, xi):
    """|F'(xi)| on the circle: sum of Poisson kernels at the zeros.

    For finite products the angular derivative is the finite positive value
    sum_k (1 - |a_k|^2)/|xi - a_k|^2; the radial limit of |F'| agrees with
    it (checked by the test suite through Richardson extrapolation).
    """
    if isinstance(xi, BoundaryPoint):
        pts = np.asarray([complex(xi)])
        scalar = True
    elif isinstance(xi, np.ndarray):
        pts = np.exp(1j * xi) if np.isrealobj(xi) else np.asarray(xi, dtype=complex)
        scalar = False
    elif isinstance(xi, (int, float)):
        pts = np.asarray([complex(math.cos(xi), math.sin(xi))])
        scalar = True
    else:
        pts = np.asarray([complex(xi)])
        scalar = True
    total = np.zeros(pts.shape)
    for a in F.zeros:
        total += (1.0 - abs(a) ** 2) / np.abs(pts - a) ** 2
    return float(total[0]) if scalar else total


def one_minus_abs2(F: BlaschkeProduct, z, gap_z=None):
    """1 - |F(z)|^2, stable arbitrarily close to the boundary.

    ``gap_z`` may supply 1 - |z|^2 in a cancellation-free form (for points
    generated along geodesics or radial grids); otherwise it is computed
    directly.  Uses 1 - prod x_k = -expm1(sum log1p(x_k - 1)) with the
    single-factor identity 1 - |b_a(z)|^2 = (1-|a|^2)(1-|z|^2)/|1-conj(a)z|^2.
    """
    scalar = not isinstance(z, np.ndarray)
    arr = np.asarray([_as_scalar(z)] if scalar else z, dtype=complex)
    s = np.asarray(gap_z, dtype=float) if gap_z is not None else 1.0 - np.abs(arr) ** 2
    acc = np.zeros(arr.shape)
    with np.errstate(divide="ignore"):
        for a in F.zeros:
            if a == 0:
                y = s
            else:
                y = (1.0 - abs(a) ** 2) * s / np.abs(1.0 - a.conjugate() * arr) ** 2
            acc += np.log1p(-np.minimum(y, 1.0))
    out = -np.expm1(acc)
    return float(out[0]) if scalar else out


def log_ratio(F: BlaschkeProduct, z, gap_z=None):
    """log((1 - |F(z)|)/(1 - |z|)), the tangential expansion exponent at z."""
    scalar = not isinstance(z, np.ndarray)
    arr = np.asarray([_as_scalar(z)] if scalar else z, dtype=complex)
    s = np.asarray(gap_z, dtype=float) if gap_z is not None else 1.0 - np.abs(arr) ** 2
    sF = one_minus_abs2(F, arr, gap_z=s)
    sF = np.atleast_1d(sF)
    # 1 - |w| = (1 - |w|^2)/(1 + |w|)
    absF = np.sqrt(np.maximum(1.0 - sF, 0.0))
    absz = np.sqrt(np.maximum(1.0 - s, 0.0))
    out = np.log(sF / (1.0 + absF)) - np.log(s / (1.0 + absz))
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# roots: preimages and critical points
# ---------------------------------------------------------------------------

def _roots_stacked(coeffs: np.ndarray) -> np.ndarray:
    """Roots of a stack of polynomials, coeffs shape (N, d+1) low-to-high.

    All leading coefficients must be nonzero (guaranteed for the resultant
    polynomials P - w Q with |w| <= 1).  Returns shape (N, d).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    N, d1 = coeffs.shape
    d = d1 - 1
    if d == 0:
        return np.empty((N, 0), dtype=complex)
    monic = coeffs[:, :-1] / coeffs[:, -1:]
    comp = np.zeros((N, d, d), dtype=complex)
    idx = np.arange(d - 1)
    comp[:, idx + 1, idx] = 1.0
    comp[:, :, d - 1] = -monic
    return np.linalg.eigvals(comp)


def _resultant_coeffs(F: BlaschkeProduct, w: np.ndarray) -> np.ndarray:
    """Coefficient stack of P - w Q for a batch of targets w."""
    p = F.numerator
    q = F.denominator
    d = F.degree
    P = np.zeros(d + 1, dtype=complex); P[: p.size] = p
    Q = np.zeros(d + 1, dtype=complex); Q[: q.size] = q
    return P[None, :] - np.asarray(w, dtype=complex)[:, None] * Q[None, :]


def preimages_batch(F: BlaschkeProduct, w: np.ndarray) -> np.ndarray:
    """All d solutions of F(z) = w_i for each target, unpolished, shape (N, d)."""
    w = np.asarray(w, dtype=complex).ravel()
    return _roots_stacked(_resultant_coeffs(F, w))


def _newton_polish(F: BlaschkeProduct, roots: np.ndarray, w: complex,
                   steps: int = 3) -> np.ndarray:
    z = roots.copy()
    for _ in range(steps):
        g = evaluate(F, z) - w
        dg = derivative(F, z)
        safe = np.abs(dg) > 1e-30
        z = np.where(safe, z - g / np.where(safe, dg, 1.0), z)
    return z

def _merge_multiplicities(points: np.ndarray, tol: float = MERGE_TOL) -> list[complex]:
    """Cluster near-coincident roots; repeated entries encode multiplicity."""
    out: list[list[complex]] = []
    for p in points:
        for cluster in out:
            c = sum(cluster) / len(cluster)
            if abs(p - c) <= tol:
                cluster.append(p)
                break
        else:
            out.append([p])
    merged: list[complex] = []
    for cluster in out:
        c = sum(cluster) / len(cluster)
        merged.extend([complex(c)] * len(cluster))
    return merged


def preimages(F: BlaschkeProduct, w, residual_tol: float = 1e-9) -> list[complex]:
    """The d solutions of F(z) = w (|w| <= 1), Newton-polished and merged.

    Interior targets give interior solutions, unimodular targets give
    unimodular solutions; a residual above ``residual_tol`` after polishing
    raises :class:`RootFindingError`.
    """
    wc = _as_scalar(w)
    if abs(wc) > 1.0 + 1e-12:
        raise ValueError("target must lie in the closed unit disk")
    raw = preimages_batch(F, np.array([wc]))[0]
    polished = _newton_polish(F, raw, wc)
    resid = np.abs(evaluate(F, polished) - wc)
    # at multiple roots Newton may dither; accept the better of raw/polished
    raw_resid = np.abs(evaluate(F, raw) - wc)
    take_raw = raw_resid < resid
    polished = np.where(take_raw, raw, polished)
    resid = np.minimum(resid, raw_resid)
    if np.any(resid > residual_tol * max(1.0, float(np.max(np.abs(polished))))):
        bad = float(np.max(resid))
        if bad > 1e-6:
            raise RootFindingError(
                f"preimage solve failed for target {wc}", residuals=resid)
    return _merge_multiplicities(polished)


def critical_points(F: BlaschkeProduct) -> list[complex]:
    """The d-1 critical points inside the disk, with multiplicity.

    Roots of the numerator of F' = (P'Q - PQ')/Q^2 that lie in the unit
    disk; the reflected partners outside are discarded.
    """
    p, q = F.numerator, F.denominator
    n = npoly.polysub(npoly.polymul(npoly.polyder(p), q),
                      npoly.polymul(p, npoly.polyder(q)))
    scale = float(np.max(np.abs(n))) if n.size else 0.0
    if scale == 0.0:
        return []
    while n.size > 1 and abs(n[-1]) < 1e-13 * scale:
        n = n[:-1]
    if n.size <= 1:
        return []
    roots = _roots_stacked(n[None, :])[0]
    # Newton polish on the polynomial numerator of F'
    dn = npoly.polyder(n)
    for _ in range(3):
        vals = npoly.polyval(roots, n)
        dvals = npoly.polyval(roots, dn)
        safe = np.abs(dvals) > 1e-30
        roots = np.where(safe, roots - vals / np.where(safe, dvals, 1.0), roots)
    inside = roots[np.abs(roots) < 1.0]
    expected = F.degree - 1
    if inside.size != expected:
        # retry with a slightly tolerant boundary in case of grazing roots
        inside = roots[np.abs(roots) < 1.0 + 1e-12]
        if inside.size != expected:
            raise RootFindingError(
                f"expected {expected} interior critical points, found {inside.size}",
                residuals=np.abs(npoly.polyval(roots, n)))
    return _merge_multiplicities(inside)


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

_PROBES = (0.0 + 0.0j, 0.31 + 0.17j, -0.22 + 0.41j, 0.55 - 0.29j, -0.47 - 0.13j)


def _fit_rotation(zero_list: Sequence[complex], target, match_tol: float = 1e-9
                  ) -> BlaschkeProduct:
    """Build the product with the given zeros whose evaluation matches target.

    ``target`` maps a probe point to the desired value; the rotation is the
    unimodular mismatch at the best-conditioned probe.
    """
    base = BlaschkeProduct(tuple(zero_list), 0.0)
    probe = max(_PROBES, key=lambda s: min(abs(s - a) for a in base.zeros))
    ratio = target(probe) / evaluate(base, probe)
    if abs(abs(ratio) - 1.0) > 1e-6:
        raise RootFindingError(
            f"rotation fit is not unimodular (|ratio| = {abs(ratio)})")
    G = BlaschkeProduct(base.zeros, math.atan2(ratio.imag, ratio.real))
    check = max(_PROBES[1:], key=lambda s: min(abs(s - a) for a in G.zeros))
    err = abs(evaluate(G, check) - target(check))
    if err > match_tol * 10:
        raise RootFindingError(f"composition mismatch {err:g} at probe {check}")
    return G


def post_compose_mobius(tau: MoebiusAutomorphism, F: BlaschkeProduct) -> BlaschkeProduct:
    """The product tau(F(z)): zeros are the preimages of tau^{-1}(0) under F."""
    zeros = preimages(F, tau.a)
    return _fit_rotation(zeros, lambda s: tau(evaluate(F, s)))


def compose(F: BlaschkeProduct, G: BlaschkeProduct,
            degree_cap: int = BlaschkeProduct.MAX_DEGREE) -> BlaschkeProduct:
    """The product F(G(z)) of degree deg F * deg G."""
    if F.degree * G.degree > degree_cap:
        raise ValueError(
            f"composition degree {F.degree * G.degree} exceeds cap {degree_cap}")
    zeros: list[complex] = []
    for a in F.zeros:
        zeros.extend(preimages(G, a))
    return _fit_rotation(zeros, lambda s: evaluate(F, evaluate(G, s)))
