"""Direct-scattering oracle for steplike constant backgrounds.

Two constant (genus-0) backgrounds joined at n = 0 plus a finite-support
perturbation table.  Floquet solutions are powers of the inverse Joukowski
root w(z) with |w| <= 1; Jost solutions are marched through the perturbation
window by the three-term recurrence

    a(n-1) psi(n-1) + b(n) psi(n) + a(n) psi(n+1) = z psi(n),

and transmission/reflection coefficients come out of modified Wronskians
W(f, g)(n) = a(n) (f(n) g(n+1) - f(n+1) g(n)), which are n-independent for
solutions at the same spectral parameter.  Band values are limits from the
upper half plane throughout.
"""

import json
from dataclasses import dataclass

import numpy as np

from .quadrature import DEFAULT_SPEC
from .surface import (
    BandSet,
    HyperellipticSurface,
    decompose_spectra,
    rho,
)

_TAIL_BUFFER = 2


@dataclass(frozen=True)
class Background:
    """Constant Jacobi coefficients (a, b); spectrum [b - 2a, b + 2a]."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("off-diagonal coefficient a must be positive")

    @property
    def edges(self):
        return (self.b - 2.0 * self.a, self.b + 2.0 * self.a)

    def surface(self):
        return HyperellipticSurface(self.edges)

    def w(self, z):
        """Floquet multiplier: root of a(w + 1/w) + b = z with |w| <= 1.

        Built from the fixed square-root branch, so band values are the
        limits from above (lower unit semicircle).
        """
        z = np.asarray(z, dtype=complex)
        root = self.surface().sqrt_branch(z)
        out = ((z - self.b) + root) / (2.0 * self.a)
        return out if out.shape else complex(out)


def floquet(background, z, n, side=1):
    """Background solution w(z)^(side*n), normalized to 1 at n = 0."""
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    w = background.w(z)
    return w ** (side * n)


@dataclass(frozen=True)
class SteplikeOperator:
    """Steplike Jacobi operator: left background for n < 0, right for n >= 0,
    overridden on a finite set of sites by the perturbation table."""

    left: Background
    right: Background
    perturbation: tuple = ()  # entries (n, a_n, b_n)

    def __post_init__(self):
        entries = tuple(
            (int(n), float(a), float(b)) for n, a, b in self.perturbation
        )
        if len({n for n, _, _ in entries}) != len(entries):
            raise ValueError("duplicate perturbation site")
        if any(a <= 0 for _, a, _ in entries):
            raise ValueError("perturbed a(n) must be positive")
        object.__setattr__(self, "perturbation", tuple(sorted(entries)))
        object.__setattr__(
            self, "_table", {n: (a, b) for n, a, b in self.perturbation}
        )

    @property
    def window(self):
        """[N-, N+] outside of which coefficients equal the backgrounds."""
        sites = [n for n, _, _ in self.perturbation]
        lo = min([0] + sites)
        hi = max([-1] + sites)
        return lo, hi

    def coefficient(self, n):
        if n in self._table:
            return self._table[n]
        bg = self.left if n < 0 else self.right
        return bg.a, bg.b

    def a(self, n):
        return self.coefficient(n)[0]

    def b(self, n):
        return self.coefficient(n)[1]


class JostTable:
    """Solution values on a contiguous index range, vectorized over z."""

    def __init__(self, lo, values):
        self.lo = lo
        self.values = values

    def __call__(self, n):
        idx = n - self.lo
        if idx < 0 or idx >= len(self.values):
            raise IndexError("index outside the tabulated range")
        return self.values[idx]

    @property
    def hi(self):
        return self.lo + len(self.values) - 1


def _jost_table(op, z, side, n_lo, n_hi):
    """March the Jost solution so the table covers [n_lo, n_hi+1]."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w_lo, w_hi = op.window
    if side == 1:
        top = max(n_hi, w_hi) + 1
        lo = min(n_lo, top)
        w = np.asarray(op.right.w(z))
        count = top + 2 - lo
        vals = np.empty((count, z.size), dtype=complex)
        vals[top + 1 - lo] = w ** (top + 1)
        vals[top - lo] = w**top
        for n in range(top, lo, -1):
            vals[n - 1 - lo] = (
                (z - op.b(n)) * vals[n - lo] - op.a(n) * vals[n + 1 - lo]
            ) / op.a(n - 1)
        table = JostTable(lo, vals)
    elif side == -1:
        bottom = min(n_lo, w_lo) - 1
        hi = max(n_hi + 1, bottom)
        w = np.asarray(op.left.w(z))
        count = hi - (bottom - 1) + 1
        vals = np.empty((count, z.size), dtype=complex)
        vals[0] = w ** (-(bottom - 1))
        vals[1] = w ** (-bottom)
        for n in range(bottom, hi):
            vals[n + 1 - (bottom - 1)] = (
                (z - op.b(n)) * vals[n - (bottom - 1)]
                - op.a(n - 1) * vals[n - 1 - (bottom - 1)]
            ) / op.a(n)
        table = JostTable(bottom - 1, vals)
    else:
        raise ValueError("side must be +1 or -1")
    if not np.all(np.isfinite(table.values)):
        raise OverflowError("Jost recursion overflowed; |z| too large")
    return table


def jost(op, z, n, side=1):
    """Jost solution value at site n (vectorized over z)."""
    scalar = np.isscalar(z) or np.asarray(z).shape == ()
    zv = np.atleast_1d(np.asarray(z, dtype=complex))
    w_lo, w_hi = op.window
    if side == 1 and n > w_hi:
        out = np.asarray(op.right.w(zv)) ** n
    elif side == -1 and n < w_lo:
        out = np.asarray(op.left.w(zv)) ** (-n)
    else:
        out = _jost_table(op, zv, side, n, n)(n)
    return complex(out[0]) if scalar else out


def wronskian(op, f, g, n):
    """Modified Wronskian a(n) (f(n) g(n+1) - f(n+1) g(n))."""
    return op.a(n) * (f(n) * g(n + 1) - f(n + 1) * g(n))


def wronskian_constant(op, f, g, n_range, tol=1e-8):
    """Wronskian with its n-variance diagnostic over a sample of sites.

    Returns (value, spread); raises if the spread exceeds tol * |value|,
    which flags inputs that do not solve the same spectral problem.
    """
    vals = [wronskian(op, f, g, n) for n in n_range]
    vals = np.asarray(vals)
    value = vals.mean(axis=0)
    spread = float(np.max(np.abs(vals - value)))
    scale = max(float(np.max(np.abs(value))), 1e-300)
    if spread > tol * scale:
        raise ValueError(
            f"Wronskian varies with n (spread {spread:.3e}); "
            "inputs are not solutions at the same spectral parameter"
        )
    return value, spread


def _wronskian_rows(op, ftbl, gtbl, n):
    return op.a(n) * (ftbl(n) * gtbl(n + 1) - ftbl(n + 1) * gtbl(n))


def transmission(op, z, side=1):
    """Transmission coefficient, meromorphically continued off the spectrum.

    T+ = a+ (1/w+ - w+) / W(psi+, psi-), and mirrored for side -1; band
    values are limits from above.  Poles sit at the eigenvalues.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.shape == ()
    zv = np.atleast_1d(z)
    lo, hi = op.window
    plus = _jost_table(op, zv, 1, lo - 1, hi + 1)
    minus = _jost_table(op, zv, -1, lo - 1, hi + 1)
    W = _wronskian_rows(op, plus, minus, lo - 1)
    if side == 1:
        w = np.asarray(op.right.w(zv))
        out = op.right.a * (1.0 / w - w) / W
    elif side == -1:
        w = np.asarray(op.left.w(zv))
        out = -op.left.a * (w - 1.0 / w) / W
    else:
        raise ValueError("side must be +1 or -1")
    return complex(out[0]) if scalar else out


def reflection(op, lam, side=1):
    """Reflection coefficient on the respective spectrum (limit from above)."""
    lam = np.asarray(lam, dtype=float)
    scalar = lam.shape == ()
    zv = np.atleast_1d(lam).astype(complex)
    lo, hi = op.window
    plus = _jost_table(op, zv, 1, lo - 1, hi + 1)
    minus = _jost_table(op, zv, -1, lo - 1, hi + 1)
    if side == 1:
        own, other = plus, minus
    elif side == -1:
        own, other = minus, plus
    else:
        raise ValueError("side must be +1 or -1")
    hat = JostTable(own.lo, np.conj(own.values))
    num = _wronskian_rows(op, hat, other, lo - 1)
    den = _wronskian_rows(op, own, other, lo - 1)
    out = -num / den
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# sampling grids and full scattering data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingGrids:
    """Controls band sampling: cosine-clustered interior nodes per piece plus
    geometric ladders towards each endpoint (band-edge margin kept)."""

    per_piece: int = 64
    edge_margin: float = 1e-6
    ladder_ratio: float = 2.0
    eigenvalue_scan: int = 2000

    def __post_init__(self):
        if self.per_piece < 8:
            raise ValueError("need at least 8 samples per band piece")


def piece_grid(lo, hi, grids=SamplingGrids()):
    """Sampling abscissae inside (lo, hi), clustered at both endpoints.

    Chebyshev-type nodes over the whole piece (uniform in the arc
    coordinate) plus geometric ladders filling the zone between the edge
    margin and the innermost interior node, so edge-asymptotic models can be
    fitted from the samples alone.
    """
    length = hi - lo
    m = grids.edge_margin
    if length <= 40.0 * m:
        return np.linspace(lo + m, hi - m, grids.per_piece)
    k = np.arange(grids.per_piece)
    theta = np.pi * (2.0 * k + 1.0) / (2.0 * grids.per_piece)
    interior = 0.5 * (lo + hi) + 0.5 * length * np.cos(theta)
    interior = interior[(interior > lo + m) & (interior < hi - m)]
    edge_gap = min(interior[0] - lo, hi - interior[-1])
    ladder = []
    d = m
    while d < edge_gap:
        ladder.append(d)
        d *= grids.ladder_ratio
    ladder = np.asarray(ladder)
    pts = np.concatenate([lo + ladder, interior, hi - ladder])
    return np.unique(pts)


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """One-sided data: R+ on sigma_+, |T+|^2 on sigma_-^(1), eigenvalues with
    norming constants, and the Dirichlet divisor lists (empty for constant
    backgrounds)."""

    sigma_minus_edges: tuple
    sigma_plus_edges: tuple
    lam_R: np.ndarray
    R_plus: np.ndarray
    lam_T2: np.ndarray
    T_plus_sq: np.ndarray
    eigenvalues: tuple = ()
    norming_plus: tuple = ()
    M_minus: tuple = ()
    M_plus: tuple = ()

    def surfaces(self):
        sm = HyperellipticSurface(self.sigma_minus_edges)
        sp = HyperellipticSurface(self.sigma_plus_edges)
        return sm, sp


def _eigenvalues(op, n_scan):
    """Zeros of the (real) Jost Wronskian on the reals off the spectrum."""
    sm = BandSet(((op.left.edges),))
    sp = BandSet(((op.right.edges),))
    sigma = decompose_spectra(sm, sp).sigma
    pad = 5.0 * (op.left.a + op.right.a)
    lo = sigma.edges[0] - pad
    hi = sigma.edges[-1] + pad
    segments = []
    cur = lo
    for blo, bhi in sigma.intervals:
        if blo > cur:
            segments.append((cur, blo))
        cur = bhi
    if hi > cur:
        segments.append((cur, hi))
    total = sum(b - a for a, b in segments)
    lo_win, hi_win = op.window

    def W_of(x):
        zv = np.atleast_1d(np.asarray(x, dtype=complex))
        plus = _jost_table(op, zv, 1, lo_win - 1, hi_win + 1)
        minus = _jost_table(op, zv, -1, lo_win - 1, hi_win + 1)
        return _wronskian_rows(op, minus, plus, lo_win - 1).real

    guard = 1e-9
    roots = []
    for a, b in segments:
        a, b = a + guard, b - guard
        if b <= a:
            continue
        n_pts = max(32, int(round(n_scan * (b - a) / total)))
        xs = np.linspace(a, b, n_pts)
        ws = W_of(xs)
        sign_change = np.nonzero(ws[:-1] * ws[1:] < 0)[0]
        for i in sign_change:
            x1, x2 = xs[i], xs[i + 1]
            f1 = ws[i]
            while x2 - x1 > 1e-12:
                xm = 0.5 * (x1 + x2)
                fm = W_of(xm)[0]
                if fm == 0.0:
                    x1 = x2 = xm
                    break
                if f1 * fm < 0:
                    x2 = xm
                else:
                    x1, f1 = xm, fm
            roots.append(0.5 * (x1 + x2))
    return tuple(sorted(roots))


def _norming_constant(op, lam, buffer=_TAIL_BUFFER):
    """1 / sum_n psi_+(lam, n)^2 with geometric tails off the window."""
    lo_win, hi_win = op.window
    lo, hi = lo_win - buffer, hi_win + buffer
    tbl = _jost_table(op, np.array([lam]), 1, lo, hi)
    psi = tbl.values[: hi - tbl.lo + 1, 0].real
    ns = np.arange(tbl.lo, hi + 1)
    explicit = float(np.sum(psi**2))
    w_r = complex(op.right.w(lam)).real
    right_tail = w_r ** (2 * (hi + 1)) / (1.0 - w_r**2)
    w_l = complex(op.left.w(lam)).real
    amp = psi[0] * w_l ** (ns[0])
    left_tail = amp**2 * w_l ** (-2 * (ns[0] - 1)) / (1.0 - w_l**2)
    return 1.0 / (explicit + right_tail + left_tail)


def scattering_data(op, grids=SamplingGrids(), spec=DEFAULT_SPEC):
    """Sample the full one-sided scattering data of the operator.

    R+ is sampled on every piece of sigma^(2) and sigma_+^(1) (so the
    reconstruction integrals see well-placed nodes at all piece endpoints),
    |T+|^2 on the pieces of sigma_-^(1).
    """
    sm = BandSet((op.left.edges,))
    sp = BandSet((op.right.edges,))
    dec = decompose_spectra(sm, sp)
    r_pieces = list(dec.sigma2.intervals) + list(dec.sigma_plus1.intervals)
    lam_R = np.sort(np.concatenate(
        [piece_grid(lo, hi, grids) for lo, hi in sorted(r_pieces)]
    )) if r_pieces else np.zeros(0)
    R_vals = reflection(op, lam_R, side=1) if lam_R.size else np.zeros(0, complex)
    t_pieces = list(dec.sigma_minus1.intervals)
    lam_T2 = np.sort(np.concatenate(
        [piece_grid(lo, hi, grids) for lo, hi in sorted(t_pieces)]
    )) if t_pieces else np.zeros(0)
    T2_vals = (
        np.abs(transmission(op, lam_T2.astype(complex), side=1)) ** 2
        if lam_T2.size
        else np.zeros(0)
    )
    eigs = _eigenvalues(op, grids.eigenvalue_scan)
    norming = tuple(_norming_constant(op, lam) for lam in eigs)
    return ScatteringData(
        sigma_minus_edges=op.left.edges,
        sigma_plus_edges=op.right.edges,
        lam_R=lam_R,
        R_plus=np.asarray(R_vals),
        lam_T2=lam_T2,
        T_plus_sq=np.asarray(T2_vals).real,
        eigenvalues=eigs,
        norming_plus=norming,
        M_minus=(),
        M_plus=(),
    )


# ---------------------------------------------------------------------------
# serialization and side translation
# ---------------------------------------------------------------------------


def scattering_data_to_json(data):
    doc = {
        "sigma_minus_edges": list(data.sigma_minus_edges),
        "sigma_plus_edges": list(data.sigma_plus_edges),
        "R_plus": [
            [float(l), float(v.real), float(v.imag)]
            for l, v in zip(data.lam_R, data.R_plus)
        ],
        "T_plus_sq": [
            [float(l), float(v)] for l, v in zip(data.lam_T2, data.T_plus_sq)
        ],
        "eigenvalues": [float(e) for e in data.eigenvalues],
        "norming_plus": [float(g) for g in data.norming_plus],
        "M_minus": [[float(m), int(s)] for m, s in data.M_minus],
        "M_plus": [[float(m), int(s)] for m, s in data.M_plus],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def scattering_data_from_json(text):
    doc = json.loads(text)
    lam_R = np.array([row[0] for row in doc["R_plus"]])
    R = np.array([complex(row[1], row[2]) for row in doc["R_plus"]])
    lam_T2 = np.array([row[0] for row in doc["T_plus_sq"]])
    T2 = np.array([row[1] for row in doc["T_plus_sq"]])
    for lam in (lam_R, lam_T2):
        if lam.size > 1 and not np.all(np.diff(lam) > 0):
            raise ValueError("sample abscissae must be strictly increasing")
    return ScatteringData(
        sigma_minus_edges=tuple(doc["sigma_minus_edges"]),
        sigma_plus_edges=tuple(doc["sigma_plus_edges"]),
        lam_R=lam_R,
        R_plus=R,
        lam_T2=lam_T2,
        T_plus_sq=T2,
        eigenvalues=tuple(doc["eigenvalues"]),
        norming_plus=tuple(doc["norming_plus"]),
        M_minus=tuple((m, int(s)) for m, s in doc["M_minus"]),
        M_plus=tuple((m, int(s)) for m, s in doc["M_plus"]),
    )


@dataclass(frozen=True, eq=False)
class TranslatedData:
    lam: np.ndarray
    T_minus: np.ndarray
    R_minus: np.ndarray
    flagged: np.ndarray


def translate_data(data, lam, t_plus):
    """Opposite-side quantities on the overlap from T+ values there.

    T- = (rho+/rho-) T+ and R- = -conj(R+) T+ / conj(T+); entries with
    |T+| < 1e-12 are flagged and returned as NaN.  R+ is looked up from the
    sampled data at the requested abscissae.
    """
    lam = np.asarray(lam, dtype=float)
    t_plus = np.asarray(t_plus, dtype=complex)
    sm, sp = data.surfaces()
    overlap = decompose_spectra(sm.bands(), sp.bands()).sigma2
    if lam.size and not np.all(overlap.contains(lam, tol=1e-9)):
        raise ValueError("translation abscissae must lie in the overlap")
    idx = np.searchsorted(data.lam_R, lam)
    idx = np.clip(idx, 0, len(data.lam_R) - 1)
    left = np.clip(idx - 1, 0, len(data.lam_R) - 1)
    choose_left = np.abs(data.lam_R[left] - lam) < np.abs(data.lam_R[idx] - lam)
    idx = np.where(choose_left, left, idx)
    if lam.size and np.max(np.abs(data.lam_R[idx] - lam)) > 1e-9:
        raise ValueError("requested abscissae are not sampled in the data")
    r_plus = data.R_plus[idx]
    mu_minus = tuple(m for m, _ in data.M_minus)
    mu_plus = tuple(m for m, _ in data.M_plus)
    rho_minus = np.asarray(rho(sm, mu_minus, lam.astype(complex)))
    rho_plus = np.asarray(rho(sp, mu_plus, lam.astype(complex)))
    flagged = np.abs(t_plus) < 1e-12
    if np.all(flagged) and lam.size:
        raise ZeroDivisionError("transmission vanishes on the whole grid")
    safe = np.where(flagged, 1.0, t_plus)
    t_minus = rho_plus / rho_minus * t_plus
    r_minus = -np.conj(r_plus) * safe / np.conj(safe)
    t_minus = np.where(flagged, np.nan, t_minus)
    r_minus = np.where(flagged, np.nan, r_minus)
    return TranslatedData(lam, t_minus, r_minus, flagged)
