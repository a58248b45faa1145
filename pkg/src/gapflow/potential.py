"""Blaschke factors and the Green's function of the upper sheet.

B(p, rho) = exp( integral from E_0 to p of the normalized third-kind kernel
with poles at rho and rho* ), along a fixed polyline that leaves E_0
vertically, runs horizontally off the cut, and drops onto the target
projection.  The template keeps the integral single-valued: only the cut
side and the gap phases (half b-periods) distinguish branches, and both are
fixed by always approaching the real axis from the chosen half plane.
"""

from dataclasses import dataclass

import numpy as np

from .abelian import delta_b_period, third_kind_kernel
from .quadrature import DEFAULT_SPEC, Polyline, integrate_path
from .surface import SurfacePoint, sqrt_P

_POLE_CLEARANCE = 1e-8


@dataclass(frozen=True)
class BlaschkeEvaluator:
    """Immutable bundle: surface, real pole, cached kernel, path height."""

    surface: object
    pole: SurfacePoint
    kernel: object
    height: float
    spec: object


def default_path_height(surface):
    """Quarter of the narrowest gap/band, capped by a quarter of the span."""
    widths = [hi - lo for lo, hi in surface.bands().intervals]
    widths += [hi - lo for lo, hi in surface.gaps()]
    return min(min(widths) / 4.0, surface.span() / 4.0)


def blaschke_evaluator(surface, pole, spec=DEFAULT_SPEC, height=None):
    """Prepare a Blaschke factor B(., rho) for a real pole rho off the bands."""
    p = pole if isinstance(pole, SurfacePoint) else SurfacePoint(complex(pole))
    if p.z.imag != 0.0:
        raise ValueError("Blaschke pole must have a real projection")
    if surface.bands().contains(p.z.real, tol=_POLE_CLEARANCE):
        raise ValueError("Blaschke pole must lie off the spectrum")
    kernel = third_kind_kernel(surface, p, spec=spec)
    h = default_path_height(surface) if height is None else float(height)
    return BlaschkeEvaluator(surface, p, kernel, h, spec)


def _template_path(surface, zt, height):
    """E_0 -> vertical -> horizontal above/below the cut -> target."""
    e0 = surface.edges[0]
    sgn = 1.0 if zt.imag >= 0.0 else -1.0
    lift = 1j * sgn * height
    verts = [complex(e0), e0 + lift, complex(zt.real, sgn * height), zt]
    pruned = [verts[0]]
    for v in verts[1:]:
        if v != pruned[-1]:
            pruned.append(v)
    return Polyline(tuple(pruned)) if len(pruned) >= 2 else None


def _build_path(surface, zt, height, pole_points):
    for h in (height, 2.0 * height):
        path = _template_path(surface, zt, h)
        if path is None:
            return None
        clearance = min(
            (path.distance_to(z) for z in pole_points if z != zt), default=np.inf
        )
        if clearance > _POLE_CLEARANCE:
            return path
    raise ValueError(
        "integration path passes within clearance of a kernel pole even "
        "after doubling the path height"
    )


def _log_via_path(surface, kernel, zt, height, spec, budget=None):
    poles = [kernel.pole.z, kernel.pole2.z]
    if abs(zt - kernel.pole.z) <= _POLE_CLEARANCE or abs(zt - kernel.pole2.z) <= _POLE_CLEARANCE:
        raise ValueError("evaluation point coincides with a kernel pole")
    edges = surface.edges
    end_singular = False
    if zt.imag == 0.0:
        hits = [e for e in edges if abs(zt.real - e) < 1e-12]
        if hits:
            if hits[0] != edges[0]:
                raise ValueError("evaluation at a branch point other than E_0")
            end_singular = True
    path = _build_path(surface, zt, height, poles)
    if path is None:
        return 0.0 + 0.0j
    f = lambda z: kernel.density(z, sheet=1)
    return integrate_path(
        f, path, spec, singular_start=True, singular_end=end_singular, budget=budget
    )


def log_blaschke(evaluator, p, budget=None):
    """log B(p, rho) along the path template (principal branch of the path)."""
    p = p if isinstance(p, SurfacePoint) else SurfacePoint(complex(p))
    val = _log_via_path(
        evaluator.surface,
        evaluator.kernel,
        p.z,
        evaluator.height,
        evaluator.spec,
        budget,
    )
    if p.z.imag == 0.0 and p.boundary_side == "below":
        val = np.conj(val)
    if p.sheet == -1:
        val = -val
    return val


def blaschke(evaluator, p, budget=None):
    """Blaschke factor value; unimodular on the bands, 1 at E_0."""
    return np.exp(log_blaschke(evaluator, p, budget))


def blaschke_gap_phase(evaluator, j):
    """Constant argument of B on the j-th closed gap (0 on the unbounded ones)."""
    return delta_b_period(
        evaluator.surface,
        evaluator.pole.z.real,
        j,
        evaluator.spec,
        kernel=evaluator.kernel,
    )


def green(surface, z, z0, spec=DEFAULT_SPEC, height=None, budget=None):
    """Potential-theoretic Green's function of the upper sheet.

    For a real pole this is -log|B(z, z0)|.  A complex pole uses the
    two-pole kernel with the second pole at the conjugate projection on the
    other sheet, which keeps the density real on the unbounded gap and the
    real part of the path integral single-valued.
    """
    z = complex(z)
    z0 = complex(z0)
    if z == z0:
        raise ValueError("Green's function pole coincides with the argument")
    if abs(z0.imag) < 1e-12:
        kernel = third_kind_kernel(surface, SurfacePoint(complex(z0.real)), spec=spec)
    else:
        kernel = third_kind_kernel(
            surface,
            SurfacePoint(z0),
            q=SurfacePoint(np.conj(z0), -1),
            spec=spec,
        )
    h = default_path_height(surface) if height is None else float(height)
    val = _log_via_path(surface, kernel, z, h, spec, budget)
    return float(-val.real)
