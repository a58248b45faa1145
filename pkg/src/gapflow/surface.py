"""Band sets, hyperelliptic band surfaces, and the fixed square-root branch.

A surface is described by its ordered real branch points (band edges)
E_0 < E_1 < ... < E_{2g+1}; the two-sheeted square root

    R^{1/2}(z) = -prod_j sqrt(z - E_j)

uses the principal root (cut along the negative reals) in every factor, so
the product is analytic exactly off the bands.  Points carry a sheet tag and,
for real projections inside a band, a boundary side selecting the limit from
the upper or lower half plane.
"""

from dataclasses import dataclass

import numpy as np

#: absolute tolerance for band membership and edge coincidence checks
TAU_BAND = 1e-12


class SingularEvaluation(ValueError):
    """Raised when an evaluation lands on a point where the formula blows up."""


def _as_interval_tuple(intervals):
    out = []
    for iv in intervals:
        lo, hi = float(iv[0]), float(iv[1])
        out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class BandSet:
    """A finite union of disjoint closed real intervals (spectral bands)."""

    intervals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _as_interval_tuple(self.intervals))
        edges = self.edges
        if len(edges) % 2 != 0:
            raise ValueError("band set needs an even number of edges")
        for lo, hi in self.intervals:
            if not hi > lo:
                raise ValueError(f"degenerate band [{lo}, {hi}]")
        if any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
            raise ValueError("band edges must be strictly increasing and disjoint")

    @property
    def edges(self):
        return tuple(e for iv in self.intervals for e in iv)

    def __len__(self):
        return len(self.intervals)

    def contains(self, x, tol=TAU_BAND):
        """Membership query with absolute tolerance `tol` (vectorized)."""
        x = np.asarray(x, dtype=float)
        res = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            res |= (x >= lo - tol) & (x <= hi + tol)
        return res if res.shape else bool(res)

    def total_length(self):
        return sum(hi - lo for lo, hi in self.intervals)


@dataclass(frozen=True)
class HyperellipticSurface:
    """Two-sheeted surface of R^{1/2} over a band set with 2g+2 edges."""

    edges: tuple

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(edges) < 2 or len(edges) % 2 != 0:
            raise ValueError("need an even number (>= 2) of band edges")
        if any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
            raise ValueError("band edges must be strictly increasing")

    @property
    def genus(self):
        return len(self.edges) // 2 - 1

    def bands(self):
        e = self.edges
        return BandSet(tuple((e[2 * j], e[2 * j + 1]) for j in range(self.genus + 1)))

    def gaps(self):
        """The g open finite gaps (E_{2j-1}, E_{2j}), j = 1..g."""
        e = self.edges
        return tuple((e[2 * j - 1], e[2 * j]) for j in range(1, self.genus + 1))

    def span(self):
        return self.edges[-1] - self.edges[0]

    def is_branch_point(self, z, tol=TAU_BAND):
        z = complex(z)
        if z.imag != 0.0:
            return False
        return any(abs(z.real - e) <= tol for e in self.edges)

    def sqrt_branch(self, z, sheet=1, side="above"):
        """Vectorized fixed-branch square root -prod sqrt(z - E_j).

        For real z inside a band the value is the limit from above; pass
        side="below" for the conjugate limit.  sheet=-1 negates the value.
        Branch points evaluate to exactly 0.
        """
        z = np.asarray(z, dtype=complex)
        fac = np.sqrt(z[..., None] - np.asarray(self.edges))
        val = -np.prod(fac, axis=-1)
        if side == "below":
            val = np.where(z.imag == 0.0, np.conj(val), val)
        elif side not in ("above", "none", None):
            raise ValueError(f"unknown boundary side {side!r}")
        if sheet == -1:
            val = -val
        elif sheet != 1:
            raise ValueError("sheet must be +1 or -1")
        return val if val.shape else complex(val)

    def sqrt_branch_near(self, anchor, delta, sheet=1):
        """Branch root at z = anchor + delta, cancellation-free in delta.

        Each factor is formed as (anchor - E_j) + delta, so when the anchor
        sits on a band edge the tiny edge distance enters exactly instead of
        being quantized by rounding anchor + delta first.  Real delta,
        limits from above.
        """
        delta = np.asarray(delta, dtype=float)
        val = -np.ones(delta.shape, dtype=complex)
        for e in self.edges:
            val = val * np.sqrt((anchor - e) + delta + 0.0j)
        if sheet == -1:
            val = -val
        elif sheet != 1:
            raise ValueError("sheet must be +1 or -1")
        return val


@dataclass(frozen=True)
class SurfacePoint:
    """A point (z, sheet) of the surface, with an optional boundary side.

    The side matters only when z is real and lies inside a band; elsewhere it
    is ignored (the invariant boundary_side == "none" off the band boundary
    is enforced at evaluation time rather than construction, since a bare
    point does not know its surface).
    """

    z: complex
    sheet: int = 1
    boundary_side: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "z", complex(self.z))
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        if self.boundary_side not in ("above", "below", "none"):
            raise ValueError("boundary_side must be above, below or none")


def star(p):
    """Sheet-exchange involution: flips the sheet, keeps the projection."""
    return SurfacePoint(p.z, -p.sheet, p.boundary_side)


def _point(p):
    if isinstance(p, SurfacePoint):
        return p
    return SurfacePoint(complex(p), 1)


def sqrt_P(surface, p):
    """Branch-consistent R^{1/2} at a surface point.

    Real z inside a band defaults to the limit from above unless the point
    carries boundary_side="below".
    """
    p = _point(p)
    z = p.z
    if not np.isfinite(z):
        raise ValueError("projection must be finite")
    side = p.boundary_side
    if side == "none":
        side = "above"
    elif side == "below":
        # only meaningful on the band boundary; elsewhere above == below
        if z.imag != 0.0 or not surface.bands().contains(z.real):
            side = "above"
    return surface.sqrt_branch(z, sheet=p.sheet, side=side)


def rho(background_surface, mu, z, side="above"):
    """Weyl-ratio factor prod_j (z - mu_j) / R^{1/2}(z) on the upper sheet.

    `mu` holds one Dirichlet value per finite gap (empty for genus 0).
    Band points are understood as limits from above unless side="below".
    """
    mu = tuple(float(m) for m in mu)
    if len(mu) != background_surface.genus:
        raise ValueError("need one Dirichlet value per finite gap")
    if isinstance(z, SurfacePoint):
        side = z.boundary_side if z.boundary_side != "none" else side
        z = z.z
    z = np.asarray(z, dtype=complex)
    denom = background_surface.sqrt_branch(z, sheet=1, side=side)
    if np.any(np.abs(np.asarray(denom)) == 0.0):
        raise SingularEvaluation("rho evaluated at a band edge")
    num = np.ones_like(z)
    for m in mu:
        num = num * (z - m)
    out = num / denom
    return out if out.shape else complex(out)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Union/overlap split of two band sets: sigma = sigma_minus ∪ sigma_plus."""

    sigma: BandSet
    sigma2: BandSet
    sigma_minus1: BandSet
    sigma_plus1: BandSet


def _merge_union(intervals):
    ivs = sorted(intervals)
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(iv) for iv in out]


def _intersect(a_ivs, b_ivs):
    out = []
    for alo, ahi in a_ivs:
        for blo, bhi in b_ivs:
            lo, hi = max(alo, blo), min(ahi, bhi)
            if hi > lo:
                out.append((lo, hi))
    return sorted(out)


def _difference_closure(a_ivs, b_ivs):
    """Closure of the set difference of interval unions (endpoints exact)."""
    out = []
    for alo, ahi in a_ivs:
        pieces = [(alo, ahi)]
        for blo, bhi in b_ivs:
            nxt = []
            for lo, hi in pieces:
                if bhi <= lo or blo >= hi:
                    nxt.append((lo, hi))
                    continue
                if blo > lo:
                    nxt.append((lo, min(blo, hi)))
                if bhi < hi:
                    nxt.append((max(bhi, lo), hi))
            pieces = nxt
        out.extend(p for p in pieces if p[1] > p[0])
    return sorted(out)


def decompose_spectra(sigma_minus, sigma_plus, tol=TAU_BAND):
    """Split two spectra into union, overlap and the single-covered parts.

    Edges that coincide are merged exactly; edges closer than `tol` without
    being equal make the decomposition ill-conditioned and are rejected.
    """
    em, ep = sigma_minus.edges, sigma_plus.edges
    for a in em:
        for b in ep:
            if a != b and abs(a - b) < tol:
                raise ValueError(
                    f"edges {a!r} and {b!r} closer than the band tolerance "
                    "but not equal; decomposition is ill-conditioned"
                )
    union = _merge_union(list(sigma_minus.intervals) + list(sigma_plus.intervals))
    overlap = _intersect(sigma_minus.intervals, sigma_plus.intervals)
    only_minus = _difference_closure(sigma_minus.intervals, overlap)
    only_plus = _difference_closure(sigma_plus.intervals, overlap)
    return SpectralDecomposition(
        sigma=BandSet(union),
        sigma2=BandSet(overlap),
        sigma_minus1=BandSet(only_minus),
        sigma_plus1=BandSet(only_plus),
    )


def surface_from_bands(band_set):
    """Hyperelliptic surface whose bands are the given band set."""
    return HyperellipticSurface(band_set.edges)
