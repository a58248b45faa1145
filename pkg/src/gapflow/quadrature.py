"""Singular-integral engine.

Three entry points, all built on the same adaptive scheme (fixed-node
Gauss-Legendre panels, bisection refinement, error = difference between
refinement levels):

* `integrate_endpoint_singular` -- inverse-square-root (or logarithmic)
  endpoint behaviour, removed by the substitution x = a + s^2 at each
  flagged end,
* `integrate_principal_value` -- an interior simple pole x0, regularised by
  analytic subtraction of f(x0) w(x0) / (x - x0),
* `integrate_path` -- complex polyline integrals of analytic integrands.

Integrands are vectorized: they receive a numpy array of abscissae and must
return an array of values (complex allowed everywhere).
"""

from dataclasses import dataclass

import numpy as np

_GL_CACHE = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


class QuadratureError(RuntimeError):
    """Non-convergence; carries the best estimate and its error bound."""

    def __init__(self, message, estimate, error_bound):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ErrorBudget:
    """Mutable accumulator for quadrature error bounds."""

    def __init__(self):
        self.total = 0.0

    def add(self, bound):
        self.total += float(bound)


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 60
    base_nodes: int = 32

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.base_nodes < 2:
            raise ValueError("base_nodes must be >= 2")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class Polyline:
    """An ordered chain of straight segments in the complex plane."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError("polyline needs at least two vertices")
        if any(verts[i + 1] == verts[i] for i in range(len(verts) - 1)):
            raise ValueError("consecutive polyline vertices must differ")

    @property
    def segments(self):
        v = self.vertices
        return tuple((v[i], v[i + 1]) for i in range(len(v) - 1))

    def distance_to(self, w):
        """Minimal distance of the chain to a complex point."""
        w = complex(w)
        best = np.inf
        for za, zb in self.segments:
            d = zb - za
            t = ((w - za) * np.conj(d)).real / abs(d) ** 2
            t = min(1.0, max(0.0, t))
            best = min(best, abs(w - (za + t * d)))
        return best


def _panel(f, a, b, n):
    x, w = _gl(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def _adaptive(f, a, b, tol, spec):
    """Globally adaptive bisection; returns (value, bound, converged)."""
    n = spec.base_nodes
    floor = spec.abs_tol

    def recurse(lo, hi, coarse, budget, depth):
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, n)
        right = _panel(f, mid, hi, n)
        fine = left + right
        err = abs(coarse - fine)
        if err <= max(budget, floor):
            return fine, err, True
        if depth >= spec.max_subdivisions:
            return fine, err, False
        vl, el, okl = recurse(lo, mid, left, 0.5 * budget, depth + 1)
        vr, er, okr = recurse(mid, hi, right, 0.5 * budget, depth + 1)
        return vl + vr, el + er, okl and okr

    return recurse(a, b, _panel(f, a, b, n), tol, 0)


def _integrate_adaptive(f, a, b, spec, budget=None, what="integral"):
    if b == a:
        return 0.0 + 0.0j
    scale = abs(_panel(f, a, b, spec.base_nodes))
    val = bound = None
    for _ in range(2):
        tol = max(spec.abs_tol, spec.rel_tol * scale)
        val, bound, ok = _adaptive(f, a, b, tol, spec)
        if not ok:
            raise QuadratureError(
                f"{what} did not converge on [{a}, {b}] "
                f"(estimate {val}, bound {bound})",
                val,
                bound,
            )
        if abs(val) > 0.25 * scale or abs(val) <= 10.0 * spec.abs_tol:
            break
        scale = abs(val)  # heavy cancellation: tighten and redo once
    if budget is not None:
        budget.add(bound)
    return val


def integrate_endpoint_singular(
    f, a, b, singular_left=False, singular_right=False, spec=DEFAULT_SPEC, budget=None
):
    """∫_a^b f(x) dx with integrable (x-a)^(-1/2) / (b-x)^(-1/2) or
    logarithmic behaviour at the flagged endpoints.

    Flagged ends are removed by x = a + s^2 (mirrored on the right), after
    which the panels refine on a smooth integrand.
    """
    a, b = float(a), float(b)
    if not b > a:
        raise ValueError("need b > a")
    pieces = []
    if singular_left and singular_right:
        m = 0.5 * (a + b)
        pieces.append(("left", a, m))
        pieces.append(("right", m, b))
    elif singular_left:
        pieces.append(("left", a, b))
    elif singular_right:
        pieces.append(("right", a, b))
    else:
        pieces.append(("plain", a, b))

    # if deep refinement rounds a substituted abscissa exactly onto the
    # endpoint, nudge it one ulp inside: keeps integrable blow-ups finite
    # without biasing wider panels
    total = 0.0 + 0.0j
    for kind, lo, hi in pieces:
        if kind == "left":
            smax = np.sqrt(hi - lo)
            nudge = np.finfo(float).eps * max(abs(lo), 1.0)

            def g(s, lo=lo, nudge=nudge):
                x = lo + s * s
                return f(np.where(x == lo, lo + nudge, x)) * 2.0 * s

            total += _integrate_adaptive(g, 0.0, smax, spec, budget)
        elif kind == "right":
            smax = np.sqrt(hi - lo)
            nudge = np.finfo(float).eps * max(abs(hi), 1.0)

            def g(s, hi=hi, nudge=nudge):
                x = hi - s * s
                return f(np.where(x == hi, hi - nudge, x)) * 2.0 * s

            total += _integrate_adaptive(g, 0.0, smax, spec, budget)
        else:
            total += _integrate_adaptive(f, lo, hi, spec, budget)
    return total


def integrate_principal_value(
    f_regular,
    pole,
    weight,
    a,
    b,
    spec=DEFAULT_SPEC,
    singular_left=True,
    singular_right=True,
    budget=None,
):
    """PV ∫_a^b f_regular(x) weight(x) / (x - pole) dx.

    The product h = f_regular * weight must be smooth near the pole (the
    weight may still be endpoint-singular; flag the ends accordingly).  The
    constant part h(pole)/(x-pole) is removed analytically, its principal
    value over [a, b] being h(pole) log((b-pole)/(pole-a)).
    """
    a, b, pole = float(a), float(b), float(pole)
    if min(pole - a, b - pole) < 1e-10:
        raise ValueError("pole degenerately close to an endpoint")

    def h(x):
        return f_regular(x) * weight(x)

    c = complex(np.asarray(h(np.array([pole])))[0])
    dx = 1e-6 * (b - a)
    hp = np.asarray(h(np.array([pole + dx, pole - dx])))
    slope = (hp[0] - hp[1]) / (2.0 * dx)
    cut = 32.0 * np.sqrt(np.finfo(float).eps) * (b - a)

    def regularised(x):
        d = x - pole
        near = np.abs(d) < cut
        safe = np.where(near, 1.0, d)
        out = (h(x) - c) / safe
        return np.where(near, slope, out)

    pv_const = c * np.log((b - pole) / (pole - a))
    rest = integrate_endpoint_singular(
        regularised, a, b, singular_left, singular_right, spec, budget
    )
    return rest + pv_const


def integrate_path(
    f, path, spec=DEFAULT_SPEC, singular_start=False, singular_end=False, budget=None
):
    """∫ f(z) dz along a polyline, f analytic in a neighbourhood of the path.

    singular_start / singular_end apply the s^2 substitution at the first /
    last vertex (used when a path endpoint sits on a branch point where f
    has inverse-square-root behaviour).
    """
    if not isinstance(path, Polyline):
        path = Polyline(tuple(path))
    segs = path.segments
    total = 0.0 + 0.0j
    for k, (za, zb) in enumerate(segs):
        d = zb - za
        sing_a = singular_start and k == 0
        sing_b = singular_end and k == len(segs) - 1
        g = lambda t, za=za, d=d: f(za + t * d) * d
        total += integrate_endpoint_singular(
            g, 0.0, 1.0, singular_left=sing_a, singular_right=sing_b,
            spec=spec, budget=budget,
        )
    return total
