"""Period constants, normalized holomorphic differentials, and normalized
Abelian differentials of the third kind on a band surface.

a-cycle integrals are evaluated as twice the gap integral on the upper
sheet: the cycle crosses the gap once per sheet, and the integrand's sheet
flip cancels against the orientation reversal.  When a real pole sits inside
a gap, the corresponding normalization integral is the principal value (the
two symmetric sheet passes cancel the semicircle contributions).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .quadrature import (
    DEFAULT_SPEC,
    _integrate_adaptive,
    integrate_endpoint_singular,
    integrate_principal_value,
)
from .surface import SurfacePoint, sqrt_P, star

_EDGE_GUARD = 1e-10


@dataclass(frozen=True)
class PeriodData:
    """Gap-moment matrix C and the coefficients of the normalized basis.

    C[j, k] = 2 * integral over gap k of lambda^j / R^(1/2); coeffs = C^{-1},
    so row j of coeffs holds the monomial coefficients of the j-th normalized
    holomorphic differential (a-periods delta_jk).
    """

    surface: object
    C: np.ndarray
    coeffs: np.ndarray

    @property
    def genus(self):
        return self.C.shape[0]


def _gap_moment(surface, gap, power, spec, pole=None, pole_value=None, plemelj=False):
    """∫ over the gap of lambda^power * q(lambda) / R^(1/2) dlambda.

    With `pole` set, q(lambda) = pole_value / (lambda - pole); when the pole
    projection lies inside the gap the integral is the symmetric principal
    value, plus (with `plemelj`) the half-residue term i pi * q(x) that turns
    it into the limit from the upper half plane.

    The endpoint halves integrate in the exact edge-distance variable
    (lambda = edge -+ s^2 with the branch root assembled from the distance),
    which sidesteps the abscissa-rounding noise at the gap edges.
    """
    lo, hi = gap

    def weight(lam):
        return lam**power / surface.sqrt_branch(lam)

    zp = complex(pole) if pole is not None else None
    if zp is not None and zp.imag == 0.0 and lo < zp.real < hi:
        val = pole_value * integrate_principal_value(
            lambda lam: np.ones_like(lam), zp.real, weight, lo, hi, spec
        )
        if plemelj:
            val += 1j * np.pi * pole_value * complex(weight(np.array([zp.real]))[0])
        return val

    mid = 0.5 * (lo + hi)

    def half(edge, sign, width):
        def g(s):
            d = s * s
            lam = edge + sign * d
            num = lam**power if power else 1.0
            if zp is not None:
                num = num * pole_value / ((edge - zp) + sign * d)
            return 2.0 * s * num / surface.sqrt_branch_near(edge, sign * d)

        return _integrate_adaptive(g, 0.0, np.sqrt(width), spec, what="gap moment")

    return half(lo, +1.0, mid - lo) + half(hi, -1.0, hi - mid)


def compute_periods(surface, spec=DEFAULT_SPEC):
    """Period matrix of the gap moments and its inverse.

    Genus 0 yields empty matrices.  A badly separated band configuration
    makes the moment matrix numerically singular and is rejected.
    """
    g = surface.genus
    if g == 0:
        empty = np.zeros((0, 0))
        return PeriodData(surface, empty, empty.copy())
    C = np.empty((g, g))
    for k, gap in enumerate(surface.gaps()):
        for j in range(g):
            val = _gap_moment(surface, gap, j, spec)
            C[j, k] = 2.0 * val.real
    if np.linalg.cond(C) > 1e12:
        raise ValueError(
            "period matrix is numerically singular; genus or band separation "
            "outside the supported range"
        )
    return PeriodData(surface, C, np.linalg.inv(C))


@dataclass(frozen=True)
class ThirdKindKernel:
    """Normalized third-kind differential with simple poles at p and q.

    q defaults to the sheet-exchanged point p*, giving the self-paired kernel
    whose density reduces to [R^(1/2)(p)/(lambda - z_p) + poly(lambda)] /
    R^(1/2)(lambda).  `poly` holds the degree g-1 normalization polynomial
    (ascending coefficients; empty for genus 0).
    """

    surface: object
    pole: SurfacePoint
    pole2: SurfacePoint
    poly: np.ndarray
    pole_value: complex
    pole2_value: complex

    def density(self, lam, sheet=1, side="above"):
        """Kernel density on the chosen sheet/boundary side (vectorized)."""
        lam = np.asarray(lam, dtype=complex)
        R = self.surface.sqrt_branch(lam, sheet=sheet, side=side)
        zp, zq = self.pole.z, self.pole2.z
        if zp == zq:
            num = self.pole_value / (lam - zp) - self.pole2_value / (lam - zq)
            num = 0.5 * num
        else:
            num = 0.5 * (R + self.pole_value) / (lam - zp) - 0.5 * (
                R + self.pole2_value
            ) / (lam - zq)
        if len(self.poly):
            num = num + npoly.polyval(lam, self.poly)
        out = num / R
        return out if out.shape else complex(out)

    def density_near(self, anchor, delta, sheet=1):
        """Density at lam = anchor + delta with exact band-edge distances.

        Upper-half-plane limits; used by band quadrature inside the edge
        margins where rounding anchor + delta would quantize the edge
        distance."""
        delta = np.asarray(delta, dtype=float)
        R = self.surface.sqrt_branch_near(anchor, delta, sheet=sheet)
        zp, zq = self.pole.z, self.pole2.z
        if zp == zq:
            num = 0.5 * (self.pole_value - self.pole2_value) / (
                (anchor - zp) + delta
            )
        else:
            num = 0.5 * (R + self.pole_value) / ((anchor - zp) + delta) - 0.5 * (
                R + self.pole2_value
            ) / ((anchor - zq) + delta)
        if len(self.poly):
            num = num + npoly.polyval(anchor + delta.astype(complex), self.poly)
        return num / R


def third_kind_kernel(surface, p, q=None, spec=DEFAULT_SPEC, periods=None,
                      boundary="symmetric"):
    """Construct the normalized third-kind kernel for poles p and q = p*.

    Solves the g x g system that makes every a-period vanish.  When a real
    pole projection falls inside a gap, boundary="symmetric" (default)
    normalizes with the principal value (the intrinsic choice for real
    Blaschke poles, where the two sheet passes cancel the semicircles),
    while boundary="above" adds the Plemelj half-residue so the kernel is
    the limit of the complex-pole kernel from the upper half plane (the
    reading a boundary evaluation of an analytic-in-z formula needs).
    """
    if boundary not in ("symmetric", "above"):
        raise ValueError("boundary must be 'symmetric' or 'above'")
    p = p if isinstance(p, SurfacePoint) else SurfacePoint(complex(p))
    q = star(p) if q is None else q
    for pt in (p, q):
        if any(abs(pt.z - e) < _EDGE_GUARD for e in surface.edges):
            raise ValueError("pole too close to a band edge")
    g = surface.genus
    Rp = sqrt_P(surface, p)
    Rq = sqrt_P(surface, q)
    plemelj = boundary == "above"
    if g == 0:
        poly = np.zeros(0)
    else:
        if periods is None:
            periods = compute_periods(surface, spec)
        A = 0.5 * periods.C.T  # A[l, m] = gap-l integral of lambda^m / R
        r = np.empty(g, dtype=complex)
        for ell, gap in enumerate(surface.gaps()):
            acc = _gap_moment(
                surface, gap, 0, spec, pole=p.z, pole_value=0.5 * Rp,
                plemelj=plemelj,
            )
            acc -= _gap_moment(
                surface, gap, 0, spec, pole=q.z, pole_value=0.5 * Rq,
                plemelj=plemelj,
            )
            r[ell] = -acc
        poly = np.linalg.solve(A.astype(complex), r)
        if np.all(np.abs(poly.imag) < 1e-14 * (1.0 + np.abs(poly.real))):
            poly = poly.real
    return ThirdKindKernel(surface, p, q, poly, Rp, Rq)


def omega_density(kernel, point):
    """Kernel density at a surface point (limits from above by default)."""
    point = point if isinstance(point, SurfacePoint) else SurfacePoint(complex(point))
    if point.z in (kernel.pole.z, kernel.pole2.z):
        raise ValueError("density evaluated at a pole")
    if any(abs(point.z - e) < _EDGE_GUARD for e in kernel.surface.edges):
        raise ValueError("density evaluated at a band edge")
    side = point.boundary_side if point.boundary_side != "none" else "above"
    return kernel.density(point.z, sheet=point.sheet, side=side)


def a_period(kernel, ell, spec=DEFAULT_SPEC):
    """Re-quadrature of the a-period of the kernel over gap ell.

    Only the sheet-odd part of the density survives the a-cycle, giving
    twice the upper-sheet gap integral of

        [ c_p/(lambda - z_p) + c_q/(lambda - z_q) + poly ] / R^(1/2)

    with c_p = R^(1/2)(p)/2 and c_q = -R^(1/2)(q)/2.  Real poles inside the
    gap are handled as principal values.  Vanishes for a normalized kernel;
    used as an independent residual check.
    """
    lo, hi = kernel.surface.gaps()[ell]
    pairs = [
        (kernel.pole.z, 0.5 * kernel.pole_value),
        (kernel.pole2.z, -0.5 * kernel.pole2_value),
    ]
    inside = {}
    outside = []
    for z, c in pairs:
        if z.imag == 0.0 and lo < z.real < hi:
            inside[z.real] = inside.get(z.real, 0.0) + c
        else:
            outside.append((z, c))

    def weight(lam):
        return 1.0 / kernel.surface.sqrt_branch(lam)

    def smooth_part(lam):
        num = npoly.polyval(lam.astype(complex), kernel.poly) if len(kernel.poly) else 0.0
        for z, c in outside:
            num = num + c / (lam - z)
        return num * weight(lam)

    total = integrate_endpoint_singular(smooth_part, lo, hi, True, True, spec)
    for x0, coeff in inside.items():
        total += coeff * integrate_principal_value(
            lambda lam: np.ones_like(lam), x0, weight, lo, hi, spec
        )
    return 2.0 * total


def delta_b_period(surface, rho_val, j, spec=DEFAULT_SPEC, kernel=None):
    """Gap phase of the self-paired kernel: half the j-th b-period.

    Computed as the accumulated imaginary part of the kernel density along
    the lifted real axis, i.e. the sum of the band integrals of Im(density)
    over the bands left of gap j.  j = 0 and j = g+1 (the two unbounded gap
    regions) return 0 by convention.
    """
    g = surface.genus
    if not 0 <= j <= g + 1:
        raise ValueError("gap index out of range")
    if j in (0, g + 1):
        return 0.0
    rho_val = float(rho_val)
    if surface.bands().contains(rho_val, tol=_EDGE_GUARD):
        raise ValueError("pole must lie off the bands")
    if kernel is None:
        kernel = third_kind_kernel(surface, SurfacePoint(rho_val), spec=spec)
    total = 0.0
    bands = surface.bands().intervals
    for m in range(j):
        lo, hi = bands[m]
        val = integrate_endpoint_singular(
            lambda lam: kernel.density(lam, sheet=1, side="above").imag,
            lo,
            hi,
            True,
            True,
            spec,
        )
        total += val.real
    return total
