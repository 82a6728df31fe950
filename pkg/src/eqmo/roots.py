"""Real-root isolation for low-degree polynomials on a bounded interval.

Roots of the derivative (found recursively) split [lo, hi] into monotone
pieces; each piece with a sign change is refined by bisection with safeguarded
Newton steps. Critical points where the polynomial itself (nearly) vanishes
are kept as even-multiplicity touch roots. Degrees here are tiny (<= 7), so
robustness is worth more than speed and no eigenvalue machinery is used.
"""
from __future__ import annotations

from .model import Polynomial

_MAX_ITER = 120


def _magnitude(poly: Polynomial, x: float) -> float:
    """Sum |c_i| |x|^i, a conservative evaluation scale at x."""
    ax = abs(x)
    total = 0.0
    p = 1.0
    for c in poly.coeffs:
        total += abs(c) * p
        p *= ax
    return max(total, 1e-300)


def _refine(poly: Polynomial, deriv: Polynomial, a: float, b: float,
            fa: float, fb: float, tol: float) -> float:
    """Root in [a, b] with sign(fa) != sign(fb): Newton inside a shrinking
    bisection bracket."""
    x = 0.5 * (a + b)
    for _ in range(_MAX_ITER):
        fx = poly(x)
        if fx == 0.0 or (b - a) <= tol * max(1.0, abs(x)):
            return x
        if (fx < 0.0) == (fa < 0.0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        d = deriv(x)
        if d != 0.0:
            xn = x - fx / d
            if a < xn < b:
                x = xn
                continue
        x = 0.5 * (a + b)
    return x


def real_roots(poly: Polynomial, lo: float, hi: float, tol: float = 1e-12) -> list[float]:
    """Sorted real roots of ``poly`` in [lo, hi]; even-multiplicity roots
    appear once. The zero polynomial returns no roots."""
    if hi < lo:
        return []
    if poly.degree <= 0:
        return []
    if poly.degree == 1:
        c0, c1 = poly.coeffs
        x = -c0 / c1
        return [x] if lo <= x <= hi else []

    deriv = poly.derivative()
    cuts = [lo] + [c for c in real_roots(deriv, lo, hi, tol) if lo < c < hi] + [hi]
    fvals = [poly(c) for c in cuts]
    touch_tol = 1e-10

    cands: list[float] = []
    for i, (c, fc) in enumerate(zip(cuts, fvals)):
        interior = 0 < i < len(cuts) - 1
        if fc == 0.0 or (interior and abs(fc) <= touch_tol * _magnitude(poly, c)):
            cands.append(c)
    for (a, b), (fa, fb) in zip(zip(cuts[:-1], cuts[1:]), zip(fvals[:-1], fvals[1:])):
        if fa == 0.0 or fb == 0.0:
            continue  # monotone piece anchored at an exact root: no interior root
        if (fa < 0.0) != (fb < 0.0):
            cands.append(_refine(poly, deriv, a, b, fa, fb, tol))

    cands.sort()
    roots: list[float] = []
    for x in cands:
        if not roots or abs(x - roots[-1]) > tol * max(1.0, abs(x)):
            roots.append(x)
    return roots
