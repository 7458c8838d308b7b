"""Shared 1-D quadrature engines used by the area and Carleson integrators.

Both engines evaluate the integrand in batches (one vectorized call per
refinement round) so that callers whose integrand requires expensive
per-point work (polynomial root solving, product evaluation over many
factors) pay LAPACK/numpy costs instead of Python-loop costs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["QuadratureError", "ToleranceNotMet", "adaptive_simpson", "gauss_panels"]


class QuadratureError(RuntimeError):
    """Base class for quadrature failures."""


class ToleranceNotMet(QuadratureError):
    """Refinement budget exhausted before the requested tolerance.

    Carries the best available estimate and its error bound so callers can
    decide whether to accept a degraded result.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-6,
                     abs_floor: float = 0.0, init_panels: int = 8,
                     max_evals: int = 120_000):
    """Adaptive Simpson integration with level-synchronous batching.

    ``f`` maps an ndarray of abscissae to an ndarray of values.  All new
    midpoints of one refinement round are evaluated in a single call, so
    expensive integrands amortize their per-call overhead.  Accepted
    subintervals contribute the Richardson-corrected Simpson value.

    Returns ``(value, error_estimate)``; raises :class:`ToleranceNotMet`
    when the evaluation budget runs out first.
    """
    if not b > a:
        return 0.0, 0.0
    n = 2 * max(1, init_panels)
    xs = np.linspace(a, b, n + 1)
    fx = np.asarray(f(xs), dtype=float)
    evals = n + 1

    ia = xs[0:-2:2].copy(); im = xs[1::2].copy(); ib = xs[2::2].copy()
    fa = fx[0:-2:2].copy(); fm = fx[1::2].copy(); fb = fx[2::2].copy()
    whole = (ib - ia) / 6.0 * (fa + 4.0 * fm + fb)

    accepted = 0.0
    err_accepted = 0.0
    span = b - a
    while ia.size:
        total_est = accepted + float(np.sum(whole))
        tol_abs = max(rel_tol * abs(total_est), abs_floor)
        lm = 0.5 * (ia + im)
        rm = 0.5 * (im + ib)
        news = np.concatenate([lm, rm])
        fnews = np.asarray(f(news), dtype=float)
        evals += news.size
        flm = fnews[: lm.size]
        frm = fnews[lm.size:]
        left = (im - ia) / 3.0 * (fa + 4.0 * flm + fm) * 0.5
        right = (ib - im) / 3.0 * (fm + 4.0 * frm + fb) * 0.5
        delta = left + right - whole
        share = tol_abs * (ib - ia) / span
        done = np.abs(delta) <= 15.0 * share
        accepted += float(np.sum((left + right + delta / 15.0)[done]))
        err_accepted += float(np.sum(np.abs(delta[done]) / 15.0))
        keep = ~done
        if not np.any(keep):
            return accepted, err_accepted
        if evals > max_evals:
            rem = float(np.sum((left + right)[keep]))
            rem_err = float(np.sum(np.abs(delta[keep])))
            raise ToleranceNotMet(
                "adaptive Simpson budget of %d evaluations exhausted" % max_evals,
                accepted + rem, err_accepted + rem_err)
        ia = np.concatenate([ia[keep], im[keep]])
        ib_new = np.concatenate([im[keep], ib[keep]])
        im = np.concatenate([lm[keep], rm[keep]])
        ib = ib_new
        fa = np.concatenate([fa[keep], fm[keep]])
        fb_new = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        fb = fb_new
        whole = np.concatenate([left[keep], right[keep]])
    return accepted, err_accepted


def gauss_panels(a: float, b: float, n_panels: int, order: int = 8):
    """Composite Gauss-Legendre nodes/weights on ``n_panels`` equal panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
