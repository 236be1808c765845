"""Resonance scanning for barrier modes of the model operator.

A compactly supported radial potential V is added to one mode of the
model operator and the outgoing continuation is probed through a
matching determinant: the solution matched to I_k(mu e^r) below the
support of V and the solution matched to K_{-k}(mu e^r) above it are
integrated into the support, and D(xi) is their Wronskian, normalized
so that D is identically 1 when V vanishes.  Zeros of D in the strip
beyond the critical line are the resonances of the perturbed mode.

On top of the determinant sit a rectangle scan that flags deep dips of
|D| against the local median, an argument-principle refinement of the
flagged candidates, and a least-squares fit of the resonance-free
region boundary (n/2 - Re xi) Im xi = C1 above a height C2.

The designated trapping example is a double bump on the radial axis;
resonances then sit between the bumps.  The zero mode has no barrier
on the right and is outside this module's scope.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.integrate import solve_ivp
from scipy.special import loggamma

from .errors import ConfigError, ConvergenceError, DomainError, StabilityError
from .model import ModelManifold, SpectralPoint, XiRegion

MAP_COLUMNS = ("re_xi", "im_xi", "mode_j", "abs_D")
ZERO_COLUMNS = ("re_xi", "im_xi", "multiplicity", "residual")
FIT_COLUMNS = ("C1", "C2", "residual")

# a candidate is a dip reaching this far below the local median after a
# short Newton probe from the flagged cell
DIP_FACTOR = 1e4
# raw cells this far below the local median trigger the probe; near a zero
# the nearest cell only reaches |D'| * cell size, so the pinned dip factor
# is tested on the probed minimum, not on the raw grid
DIP_TRIGGER = 2.5
DIP_SOFT = 1.2
# polished zeros must push the normalized determinant below this
POLISH_TOL = 1e-10

_SEED_MARGIN = 0.5
_ODE_RTOL = 1e-11
_ODE_ATOL = 1e-13
# refuse windows where the barrier/energy scale outruns the integrator
_STIFFNESS_CAP = 1e7


# ----------------------------------------------------------------------
# potentials
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialProfile:
    """Compactly supported radial potential.

    `support` bounds the region where values may be nonzero;
    `breakpoints` lists jump locations the integrator must not step
    across; `bound` is sup |V|.  Gaussian profiles are truncated at
    eight widths, which is below double roundoff relative to the peak.
    """

    kind: str
    support: tuple
    params: tuple = ()
    breakpoints: tuple = ()
    bound: float = 0.0

    def __post_init__(self):
        lo, hi = (float(self.support[0]), float(self.support[1]))
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ConfigError(f"potential support {self.support} must be a bounded interval")
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        if not math.isfinite(self.bound) or self.bound < 0:
            raise ConfigError(f"potential bound {self.bound} must be finite and >= 0")

    @classmethod
    def free(cls) -> "PotentialProfile":
        return cls(kind="free", support=(0.0, 0.0))

    @classmethod
    def square_well(cls, depth: float, lo: float, hi: float) -> "PotentialProfile":
        if not (lo < hi):
            raise ConfigError(f"square well needs lo < hi, got [{lo}, {hi}]")
        return cls(kind="square_well", support=(lo, hi), params=(float(depth), lo, hi),
                   breakpoints=(lo, hi), bound=abs(depth))

    @classmethod
    def gaussian_bump(cls, amplitude: float, center: float, width: float) -> "PotentialProfile":
        if not (width > 0):
            raise ConfigError(f"bump width must be positive, got {width}")
        return cls(kind="gaussian", support=(center - 8 * width, center + 8 * width),
                   params=(float(amplitude), float(center), float(width)),
                   bound=abs(amplitude))

    @classmethod
    def double_bump(cls, amplitude: float, centers, width: float) -> "PotentialProfile":
        c1, c2 = (float(centers[0]), float(centers[1]))
        if not (width > 0):
            raise ConfigError(f"bump width must be positive, got {width}")
        if not (c1 < c2):
            raise ConfigError(f"bump centers must be ordered, got {centers}")
        support = (c1 - 8 * width, c2 + 8 * width)
        # peak of the sum, sampled; the overlap can push it past |amplitude|
        rr = np.linspace(support[0], support[1], 2001)
        peak = float(np.max(np.abs(amplitude * (np.exp(-((rr - c1) / width) ** 2)
                                                + np.exp(-((rr - c2) / width) ** 2)))))
        return cls(kind="double_bump", support=support,
                   params=(float(amplitude), c1, c2, float(width)), bound=peak)

    def values(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "free":
            return np.zeros_like(r)
        if self.kind == "square_well":
            depth, lo, hi = self.params
            inside = (r > lo) & (r < hi)
            # half weight on the jump keeps node-aligned grids second order
            edge = (r == lo) | (r == hi)
            return depth * (inside.astype(float) + 0.5 * edge.astype(float))
        if self.kind == "gaussian":
            amp, c, w = self.params
            out = amp * np.exp(-(((r - c) / w) ** 2))
            return np.where((r >= self.support[0]) & (r <= self.support[1]), out, 0.0)
        if self.kind == "double_bump":
            amp, c1, c2, w = self.params
            out = amp * (np.exp(-(((r - c1) / w) ** 2)) + np.exp(-(((r - c2) / w) ** 2)))
            return np.where((r >= self.support[0]) & (r <= self.support[1]), out, 0.0)
        raise ConfigError(f"unknown potential kind {self.kind!r}")

    __call__ = values

    @property
    def step_hint(self) -> float:
        """Largest integrator step that still sees the narrowest feature."""
        if self.kind in ("gaussian", "double_bump"):
            return self.params[-1] / 2.0
        return math.inf


# ----------------------------------------------------------------------
# matching determinant
# ----------------------------------------------------------------------

def _series_I_pair(w: complex, z: float, terms: int = 80):
    """(I_w(z), d/dz I_w(z)) by the ascending series; needs z small enough
    that the series settles, which the seed placement guarantees."""
    lw = math.log(z / 2.0)
    s0 = 0.0 + 0.0j
    s1 = 0.0 + 0.0j
    for m in range(terms):
        t = cmath.exp(2 * m * lw - math.lgamma(m + 1) - loggamma(w + m + 1))
        s0 += t
        s1 += t * (2 * m + w)
        if m > 2 and abs(t) < 1e-17 * abs(s0):
            break
    else:
        raise StabilityError(f"I series did not settle at z = {z:g}; seed too far right")
    pref = cmath.exp(w * lw)
    return pref * s0, pref * s1 / z


def _asymptotic_K_pair(w: complex, z: float, max_terms: int = 40):
    """(e^z K_w(z), d/dz e^z K_w(z)) by the large-z expansion.  The caller
    places the seed at z beyond ~2.2 |w|^2 where the optimal truncation
    sits below 1e-12."""
    s = 1.0 + 0.0j
    ds = 0.0 + 0.0j
    a = 1.0 + 0.0j
    w4 = 4.0 * w * w
    prev = math.inf
    for m in range(1, max_terms):
        a = a * (w4 - (2 * m - 1) ** 2) / (8.0 * m * z)
        mag = abs(a)
        if mag >= prev:
            raise StabilityError(f"K expansion diverged before settling at z = {z:g}; "
                                 "seed needs a larger argument")
        s += a
        ds += -m * a / z
        if mag < 1e-15 * abs(s):
            break
        prev = mag
    else:
        raise StabilityError(f"K expansion did not settle at z = {z:g}")
    pref = math.sqrt(math.pi / (2.0 * z))
    return pref * s, pref * (ds - s / (2.0 * z))


def _mode_mu(model: ModelManifold, j: int) -> float:
    entries = model.spectrum.entries
    if not (0 <= j < len(entries)):
        raise IndexError(f"mode index {j} out of range 0..{len(entries) - 1}")
    mu = entries[j][0]
    if mu == 0.0:
        raise DomainError("zero mode has no barrier at +infinity; the matching "
                          "determinant is defined for modes with mu > 0")
    return mu


def _check_order(w: complex):
    if abs(w.real + 0.25) <= 1e-12:
        raise DomainError(f"order k = {w} sits on the continuation boundary "
                          "Re k = -1/4 where the kernel evaluations degenerate")
    if w.real < -0.25:
        raise DomainError(f"order k = {w} lies outside the continuation region Re k > -1/4")


def _matching_window(potential: PotentialProfile, mu: float, w_max: float, match_point):
    """Seed radii and match point.  The I seed sits left of the support
    with mu e^r small enough for the ascending series; the K seed sits
    high enough on the barrier for the large-argument expansion.  The
    default match point stays above the turning point mu e^r ~ |k| so
    the barrier-side solution keeps a monotone modulus on its way down
    (below it, e^z K oscillates through dips the integrator's absolute
    floor would swallow)."""
    lo, hi = potential.support
    if lo == hi:
        lo, hi = lo - _SEED_MARGIN, hi + _SEED_MARGIN
    r_lo = min(lo - _SEED_MARGIN, math.log(0.5 / mu))
    z_top = 30.0 + 2.2 * w_max * w_max
    r_top = max(hi + _SEED_MARGIN, math.log(z_top / mu))
    if match_point is None:
        mid = max(0.5 * (lo + hi), math.log((1.2 * w_max + 3.0) / mu))
        mid = min(mid, r_top - 0.5)
    else:
        mid = float(match_point)
    if not (r_lo < mid < r_top):
        raise DomainError(f"match point {mid} must lie inside the matching window "
                          f"({r_lo:g}, {r_top:g})")
    return r_lo, mid, r_top


def _propagate(kind: str, y0: np.ndarray, r0: float, r1: float, mu: float,
               w2: np.ndarray, potential: PotentialProfile) -> np.ndarray:
    """Advance the matched solutions from r0 to r1, restarting at potential
    jumps.  `plain` integrates u'' = (z^2 + V + k^2) u with z = mu e^r;
    `scaled` integrates v = e^z u, v'' = 2 z v' + (z + V + k^2) v, the
    stable downward form on the barrier side.  y0 has shape (2, B)."""
    nsys = y0.shape[1]

    if kind == "plain":
        def rhs(r, y):
            z = mu * math.exp(r)
            coeff = z * z + float(potential.values(r)) + 0.0j
            return np.concatenate((y[nsys:], (coeff + w2) * y[:nsys]))
    else:
        def rhs(r, y):
            z = mu * math.exp(r)
            coeff = z + float(potential.values(r)) + 0.0j
            return np.concatenate((y[nsys:], 2.0 * z * y[nsys:] + (coeff + w2) * y[:nsys]))

    stops = [b for b in potential.breakpoints if min(r0, r1) < b < max(r0, r1)]
    stops.sort(reverse=r1 < r0)
    y = y0.reshape(-1).astype(complex)
    max_step = min(0.5, potential.step_hint)
    for a, b in zip([r0] + stops, stops + [r1]):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853",
                        rtol=_ODE_RTOL, atol=_ODE_ATOL, max_step=max_step)
        if not sol.success:
            raise StabilityError(f"mode solution lost between r = {a:g} and {b:g}: "
                                 f"{sol.message}; try a smaller region or a shallower well")
        y = sol.y[:, -1]
    if not np.all(np.isfinite(y.view(float))):
        raise StabilityError("mode solution left floating range; try a smaller "
                             "region or a shallower well")
    return y.reshape(2, nsys)


def _determinant_batch(model: ModelManifold, j: int, potential: PotentialProfile,
                       xis, match_point=None) -> np.ndarray:
    mu = _mode_mu(model, j)
    xis = np.asarray(xis, dtype=complex).reshape(-1)
    orders = np.empty(xis.shape, dtype=complex)
    for i, xi in enumerate(xis):
        w = complex(model.effective_order(model.spectral_point(xi)))
        _check_order(w)
        orders[i] = w
    w_max = float(np.max(np.abs(orders)))
    r_lo, mid, r_top = _matching_window(potential, mu, w_max, match_point)

    z_top = mu * math.exp(r_top)
    scale = z_top + potential.bound + w_max * w_max
    if scale > _STIFFNESS_CAP:
        raise StabilityError(f"stiffness scale {scale:.3g} exceeds {_STIFFNESS_CAP:g}; "
                             "shrink the scan region or use a shallower well")

    z_lo = mu * math.exp(r_lo)
    y_i = np.empty((2, xis.size), dtype=complex)
    y_k = np.empty((2, xis.size), dtype=complex)
    log_s = np.empty(xis.size, dtype=float)
    for i, w in enumerate(orders):
        iv, idz = _series_I_pair(w, z_lo)
        kv, kdz = _asymptotic_K_pair(w, z_top)
        ai, ak = abs(iv), abs(kv)
        if ai == 0.0 or ak == 0.0:
            raise StabilityError(f"matching seed underflowed at order {w}")
        # u = I(mu e^r): u' = z I'(z); v = e^z K: v' in r is z (e^z K)'(z)
        y_i[0, i] = iv / ai
        y_i[1, i] = z_lo * idz / ai
        y_k[0, i] = kv / ak
        y_k[1, i] = z_top * kdz / ak
        log_s[i] = math.log(ai) + math.log(ak)

    w2 = orders * orders
    left = _propagate("plain", y_i, r_lo, mid, mu, w2, potential)
    right = _propagate("scaled", y_k, r_top, mid, mu, w2, potential)
    # undo v = e^z u at the match point: u = e^-z v, u' = e^-z (v' - z v)
    z_mid = mu * math.exp(mid)
    wronsk = left[0] * (right[1] - z_mid * right[0]) - left[1] * right[0]
    return -wronsk * np.exp(log_s - z_mid)


def matching_determinant(model: ModelManifold, j: int, potential: PotentialProfile,
                         sp: SpectralPoint, match_point=None) -> complex:
    """Normalized matching determinant D(xi) for mode j with potential V.

    D is the Wronskian of the outgoing-matched and decaying-matched
    solutions, normalized by the seed magnitudes so that D = 1 for
    V = 0 at every xi.  The value does not depend on the interior
    match point; zeros of D are the resonances of the perturbed mode.
    """
    return complex(_determinant_batch(model, j, potential, [sp.xi],
                                      match_point=match_point)[0])


# ----------------------------------------------------------------------
# rectangle scan
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Resonance:
    """Polished determinant zero with its argument-principle multiplicity."""

    xi: complex
    mode: int
    multiplicity: int
    residual: float


@dataclass(frozen=True)
class RegionFit:
    """Envelope (n/2 - Re xi) Im xi = C1 fitted above height C2."""

    C1: float
    C2: float
    residual: float
    n_used: int
    clipped: bool = False


@dataclass(eq=False)
class ResonanceMap:
    """Scan artifact: per-mode |D| grids plus everything refinement needs."""

    model: ModelManifold
    potential: PotentialProfile
    region: XiRegion
    re_axis: np.ndarray
    im_axis: np.ndarray
    modes: tuple
    grids: dict
    candidates: tuple
    notes: tuple = ()
    zeros: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    fit: RegionFit | None = None

    def rows(self):
        """Grid rows (re_xi, im_xi, mode_j, abs_D), deterministic order."""
        for j in self.modes:
            grid = self.grids[j]
            for q, im in enumerate(self.im_axis):
                for p, re in enumerate(self.re_axis):
                    yield (float(re), float(im), j, float(grid[q, p]))

    def zero_rows(self):
        for z in self.zeros:
            yield (z.xi.real, z.xi.imag, z.multiplicity, z.residual)


def _newton_probe(model: ModelManifold, j: int, potential: PotentialProfile,
                  seeds: np.ndarray, re_lo: float, re_hi: float,
                  im_lo: float, im_hi: float, steps: int = 8):
    """Short batched Newton descent used by the dip detector.  Iterates
    that would leave the rectangle or the continuation region stay put."""
    boundary = model.n / 2 - 0.25
    xis = seeds.astype(complex)
    for _ in range(steps):
        h = 1e-6 * (1.0 + np.abs(xis))
        pts = np.concatenate((xis, xis + h, xis - h))
        vals = _determinant_batch(model, j, potential, pts)
        m = len(xis)
        d0, dp, dm = vals[:m], vals[m:2 * m], vals[2 * m:]
        deriv = (dp - dm) / (2.0 * h)
        move = (np.abs(d0) > 1e-12) & (deriv != 0)
        prop = xis - np.where(move, d0 / np.where(deriv == 0, 1, deriv), 0.0)
        # margin must cover the stencil offset h(prop), not just the center
        h_prop = 1e-6 * (1.0 + np.abs(prop))
        bad = ((prop.real <= boundary + 2.0 * h_prop) | (prop.real < re_lo) |
               (prop.real > re_hi) | (prop.imag < im_lo) | (prop.imag > im_hi))
        xis = np.where(bad, xis, prop)
        if not move.any():
            break
    resid = np.abs(_determinant_batch(model, j, potential, xis))
    return xis, resid


def scan_region(model: ModelManifold, potential: PotentialProfile, region: XiRegion,
                density: int = 400, modes=None,
                critical_margin: float = 0.0) -> ResonanceMap:
    """Sample |D| on a rectangle beyond the critical line and flag dips.

    The rectangle must stay inside the continuation region
    (Re xi_min > n/2 - 1/4) and above Im xi = 1.  Cells holding a local
    minimum below DIP_TRIGGER times under the local median get a short
    Newton probe; the cell becomes a candidate when the probed minimum
    falls DIP_FACTOR below the median.  Columns closer than
    `critical_margin` to Re xi = n/2 are skipped and recorded as NaN;
    the uncovered strip is noted on the map.
    """
    n = model.n
    if region.im_min < 1.0:
        raise DomainError(f"scan rectangle must sit above Im xi = 1, got {region.im_min}")
    if not (region.re_min > n / 2 - 0.25):
        raise DomainError(f"scan rectangle must stay right of the continuation "
                          f"boundary Re xi = {n / 2 - 0.25}, got {region.re_min}")
    if int(density) != density or density < 8:
        raise ConfigError(f"grid density must be an integer >= 8, got {density}")
    density = int(density)
    if not (critical_margin >= 0):
        raise ConfigError(f"critical margin must be >= 0, got {critical_margin}")

    entries = model.spectrum.entries
    if modes is None:
        modes = tuple(j for j, (mu, _m) in enumerate(entries) if mu > 0)
    else:
        modes = tuple(int(j) for j in modes)
    if not modes:
        raise ConfigError("no barrier modes to scan (all retained modes have mu = 0)")
    for j in modes:
        _mode_mu(model, j)

    re_axis = np.linspace(region.re_min, region.re_max, density)
    im_axis = np.linspace(region.im_min, region.im_max, density)
    visible = np.abs(re_axis - n / 2) >= critical_margin
    if not visible.any():
        raise ConfigError("critical margin hides the whole rectangle")

    grids = {}
    candidates = []
    size = max(9, (density // 16) | 1)
    for j in modes:
        grid = np.full((density, density), np.nan)
        for q, im in enumerate(im_axis):
            xis = re_axis[visible] + 1j * im
            grid[q, visible] = np.abs(_determinant_batch(model, j, potential, xis))
        grids[j] = grid

        work = np.where(np.isnan(grid), np.inf, grid)
        local = ndimage.median_filter(work, size=size, mode="nearest")
        # a background gradient in Re can tilt a dip off its 2-d grid
        # minimum at coarse density, so also seed from 1-d minima along
        # Im (zeros of a chain separate in Im) under a softer threshold
        dips = work == ndimage.minimum_filter1d(work, 3, axis=0, mode="nearest")
        mask = np.isfinite(work) & ((work < local / DIP_TRIGGER)
                                    | (dips & (work < local / DIP_SOFT)))
        qs, ps = np.nonzero(mask)
        if qs.size:
            pad = 2.0 * max(float(re_axis[1] - re_axis[0]), float(im_axis[1] - im_axis[0]))
            seeds = re_axis[ps] + 1j * im_axis[qs]
            refined, resid = _newton_probe(model, j, potential, seeds,
                                           region.re_min - pad, region.re_max + pad,
                                           region.im_min - pad, region.im_max + pad)
            for i in range(qs.size):
                xi = complex(refined[i])
                inside = (region.re_min - 1e-12 <= xi.real <= region.re_max + 1e-12
                          and region.im_min - 1e-12 <= xi.imag <= region.im_max + 1e-12)
                if inside and resid[i] < local[qs[i], ps[i]] / DIP_FACTOR:
                    candidates.append((j, xi))

    candidates.sort(key=lambda c: (c[0], c[1].imag, c[1].real))
    deduped = []
    for j, xi in candidates:
        if any(j == j2 and abs(xi - xi2) < 1e-6 for j2, xi2 in deduped):
            continue
        deduped.append((j, xi))
    candidates = deduped

    notes = ("trapping modeled by potential shape: monotone barrier / free mode "
             "is the non-trapping analogue, a double bump the trapping analogue; "
             "geodesic-flow computation is out of scope",)
    if critical_margin > 0:
        notes += (f"columns with |Re xi - {n / 2:g}| < {critical_margin:g} skipped "
                  "and stored as NaN; that strip is not certified by this scan",)
    return ResonanceMap(model=model, potential=potential, region=region,
                        re_axis=re_axis, im_axis=im_axis, modes=modes,
                        grids=grids, candidates=tuple(candidates), notes=notes)


# ----------------------------------------------------------------------
# refinement
# ----------------------------------------------------------------------

def refine_zero(det, xi0: complex, cell: float, boundary_re: float):
    """Newton-polish a determinant zero and count it by winding number.

    `det` maps an array of xi values to determinant values.  Returns
    (xi, residual, winding, drift): `winding` is the argument-principle
    count on a circle around the polished point and `drift` the
    distance of the raw winding integral from that integer.
    """
    xi = complex(xi0)
    for _ in range(60):
        h = 1e-6 * (1.0 + abs(xi))
        d0, dp, dm = det(np.array([xi, xi + h, xi - h]))
        if abs(d0) < 5e-13:
            break
        deriv = (dp - dm) / (2.0 * h)
        if deriv == 0:
            raise ConvergenceError("determinant derivative vanished while polishing",
                                   last=abs(d0), previous=None)
        step = d0 / deriv
        xi -= step
        if xi.real <= boundary_re + 1e-9:
            # walked out of the continuation region: report where it stood
            return xi, math.inf, 0, math.inf
        if abs(step) < 1e-14 * (1.0 + abs(xi)):
            break
    residual = abs(complex(det(np.array([xi]))[0]))

    radius = max(3.0 * abs(xi - xi0), 2.0 * cell, 1e-4)
    radius = min(radius, 0.45 * (xi.real - boundary_re))
    angles = 2.0 * math.pi * np.arange(64) / 64
    ring = det(xi + radius * np.exp(1j * angles))
    args = np.angle(ring)
    hops = np.diff(np.concatenate((args, args[:1])))
    hops = (hops + math.pi) % (2.0 * math.pi) - math.pi
    total = float(np.sum(hops)) / (2.0 * math.pi)
    winding = int(round(total))
    return xi, residual, winding, abs(total - winding)


def find_resonances(rmap: ResonanceMap):
    """Polish the scan candidates and keep those certified by winding.

    A candidate becomes a resonance when the polished |D| is below
    POLISH_TOL and the argument-principle count on a surrounding circle
    is a stable integer >= 1 (which is reported as the multiplicity).
    Candidates where the two checks disagree are kept on
    `rmap.unresolved` with a reason instead of being dropped.
    """
    n = rmap.model.n
    boundary_re = n / 2 - 0.25
    cell = max(float(rmap.re_axis[1] - rmap.re_axis[0]),
               float(rmap.im_axis[1] - rmap.im_axis[0]))
    found = []
    unresolved = []
    for j, xi0 in rmap.candidates:
        det = lambda xis, _j=j: _determinant_batch(rmap.model, _j, rmap.potential, xis)
        try:
            xi, residual, winding, drift = refine_zero(det, xi0, cell, boundary_re)
        except (ConvergenceError, StabilityError) as exc:
            unresolved.append({"mode": j, "xi": xi0, "reason": str(exc)})
            continue
        polished = residual < POLISH_TOL
        counted = winding >= 1 and drift < 0.25
        if polished and counted:
            found.append(Resonance(xi=xi, mode=j, multiplicity=winding,
                                   residual=residual))
        elif polished or counted:
            unresolved.append({"mode": j, "xi": xi, "reason":
                               f"winding {winding} (drift {drift:.3g}) and polish "
                               f"residual {residual:.3g} disagree"})
        # neither check fires: the dip was a shallow feature, not a zero

    found.sort(key=lambda z: (z.xi.imag, z.xi.real, z.mode))
    deduped = []
    for z in found:
        if any(z.mode == u.mode and abs(z.xi - u.xi) < 1e-6 for u in deduped):
            continue
        deduped.append(z)
    rmap.zeros = deduped
    rmap.unresolved = unresolved
    return list(deduped)


# ----------------------------------------------------------------------
# resonance-free region boundary
# ----------------------------------------------------------------------

def fit_region_boundary(zeros, n: int) -> RegionFit:
    """Fit (n/2 - Re xi) Im xi = C1 to located zeros above a height C2.

    The least-squares constant is fitted over zeros with Im xi > C2,
    with C2 the smallest height (starting at 1) for which the relative
    rms misfit drops below 20%; that misfit is the reported residual.
    The reported C1 is then lowered to the envelope value so the curve
    leaves every zero of the fitted window on or to its left: the
    region {Im xi > C2, Re xi > n/2 - C1/Im xi} excludes all of them.
    Zeros below C2 sit outside that region and do not constrain C1.
    """
    xis = np.array([z.xi if isinstance(z, Resonance) else complex(z) for z in zeros])
    if xis.size:
        xis = xis[np.imag(xis) > 1.0]
    if xis.size < 3:
        raise DomainError(f"insufficient data: boundary fit needs at least 3 zeros "
                          f"with Im xi > 1, got {xis.size}")
    ims = np.imag(xis)
    s = (n / 2 - np.real(xis)) * ims

    best = None
    chosen = None
    for t in [1.0] + sorted(float(v) - 1e-12 for v in ims):
        sel = ims > t
        if sel.sum() < 3:
            break
        c1 = float(np.mean(s[sel]))
        res = (float(np.sqrt(np.mean((s[sel] - c1) ** 2)) / abs(c1))
               if c1 != 0 else math.inf)
        if best is None or res < best[2]:
            best = (t, c1, res, int(sel.sum()))
        if res < 0.20:
            chosen = (t, c1, res, int(sel.sum()))
            break
    t, c1, res, used = chosen if chosen is not None else best

    # strict exclusion even for the zero defining the envelope
    floor = float(np.min(s[ims > t]))
    floor -= 1e-9 * (1.0 + abs(floor))
    clipped = c1 > floor
    return RegionFit(C1=min(c1, floor), C2=t, residual=res, n_used=used,
                     clipped=clipped)
