"""Complex-order modified Bessel functions by direct quadrature.

The two radial building blocks of the mode resolvents are evaluated from
their classical integral representations,

    I_k(z)    = (1/pi) int_0^pi  exp(z cos u) cos(ku) du
                - sin(k pi)/pi int_0^inf exp(-z cosh u - ku) du,
    K_{-k}(z) = int_0^inf cosh(ku) exp(-z cosh u) du,

for complex order k and real argument z > 0.  Nothing here calls a library
Bessel routine; library values enter only through independent oracles in
the test suite.

Purely imaginary order makes both integrands cancel violently: K_{-ib}(z)
is smaller than its integrand scale by roughly exp(pi*b/2), so float64 is
hopeless already for moderate b.  The engine therefore runs on gmpy2
arbitrary-precision arithmetic and *measures* the cancellation of its own
panel sums (the ratio sum|w f| / |sum w f|), retrying with more bits until
the measured condition number is covered.  Quadrature is nested
Clenshaw-Curtis on panels sized to the oscillation/growth rate of the
integrand; the semi-infinite integrals are truncated at the cutoff U
solving

    z cosh U - m U = ln(1/tol) + tail_margin,   m = max(|Re k|, |Im k|, 1),

which makes the discarded tail provably smaller than the tolerance.  The
two semi-infinite integrands share the factor exp(-z cosh u), so I and K
at the same (k, z) are integrated in a single pass over shared nodes.

Internally everything is computed in rescaled form (I_k(z) e^{-z} and
K_{-k}(z) e^{+z}); the public functions undo the scaling when asked and
raise RangeError when e^z itself is not representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
from gmpy2 import mpfr, mpc

from .errors import ConvergenceError, DomainError, RangeError, DegenerateDenominatorError
from .report import BoundSummary, EstimateReport

_LOG2 = math.log(2.0)
_MAX_BITS = 6000
_REFINEMENT_PASS_DELTA = 0.05
# nodes per oscillation at the starting refinement level; chosen so the
# first doubling already confirms convergence for ~1e-12 tolerances
_PANEL_RATE_DIV = 13.0


def _as_complex(k) -> complex:
    if isinstance(k, ComplexOrder):
        return complex(k.re, k.im)
    return complex(k)


@dataclass(frozen=True)
class ComplexOrder:
    """Spectral order k = xi - n/2 split into real and imaginary parts."""

    re: float
    im: float

    @classmethod
    def from_complex(cls, k: complex) -> "ComplexOrder":
        k = complex(k)
        return cls(k.real, k.imag)

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def admissible(self) -> bool:
        """Inside the strip |Re k| <= 1/4, |Im k| >= 1 where the growth
        bounds are asserted."""
        return abs(self.re) <= 0.25 + 1e-12 and abs(self.im) >= 1.0 - 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and refinement limits for the integral evaluations."""

    rel_tol: float = 1e-12
    max_depth: int = 8
    tail_margin: float = 5.0

    def __post_init__(self):
        if not (0 < self.rel_tol < 1e-2):
            raise DomainError(f"rel_tol {self.rel_tol} outside (0, 1e-2)")
        if self.max_depth < 2:
            raise DomainError("max_depth must be at least 2")

    def truncation_cutoff(self, k, z: float) -> float:
        """Cutoff U with z cosh U - m U >= ln(1/rel_tol) + tail_margin.

        Guarantees exp(-z cosh U + |Im k| U) < rel_tol, so the discarded
        tail of the semi-infinite integrands is below tolerance.
        """
        kc = _as_complex(k)
        if not (z > 0) or math.isinf(z) or math.isnan(z):
            raise DomainError(f"truncation cutoff needs z > 0, got {z}")
        m = max(abs(kc.real), abs(kc.imag), 1.0)
        target = math.log(1.0 / self.rel_tol) + self.tail_margin

        def shortfall(u: float) -> float:
            # z*cosh(u) - m*u - target, computed overflow-safe
            if u > 40.0:
                lg = math.log(z) + u - _LOG2
                if lg > 700.0:
                    return math.inf
                return math.exp(lg) - m * u - target
            return z * math.cosh(u) - m * u - target

        if shortfall(0.0) >= 0.0:
            return 1.0
        hi = 1.0
        while shortfall(hi) < 0.0:
            hi *= 2.0
            if hi > 1e6:
                raise ConvergenceError("truncation cutoff search diverged", hi, hi / 2)
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if shortfall(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return hi


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class BesselEval:
    """Value plus the engine's estimate of its relative error."""

    value: complex
    error: float


# ----------------------------------------------------------------------
# Clenshaw-Curtis rules at arbitrary precision
# ----------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cc_rule(n: int, bits: int):
    """Nodes (as 0..1 fractions of a panel) and weights of the (n+1)-point
    Clenshaw-Curtis rule, computed at `bits` precision.  Nodes of the
    n-point rule are the even-indexed nodes of the 2n-point rule, so each
    refinement reuses every previous integrand evaluation."""
    with gmpy2.context(precision=bits):
        pi = gmpy2.const_pi()
        one = mpfr(1)
        cos_table = [gmpy2.cos(pi * i / n) for i in range(n + 1)]
        nodes = [(one - cos_table[j]) / 2 for j in range(n + 1)]
        half = n // 2
        weights = []
        for j in range(n + 1):
            acc = mpfr(1)
            for m in range(1, half + 1):
                b = one if m == half else mpfr(2)
                s = (2 * m * j) % (2 * n)
                c = cos_table[s] if s <= n else cos_table[2 * n - s]
                acc -= b * c / (4 * m * m - 1)
            c_j = one if j in (0, n) else mpfr(2)
            weights.append(c_j * acc / n)
        # weights sum to 2 on [-1,1]; nodes above live on [0,1], so halve
        weights = [w / 2 for w in weights]
        return tuple(nodes), tuple(weights)


def _integrate_panels(f, a: float, b: float, panels: int, n0: int,
                      max_depth: int, bits: int, tols):
    """Composite nested Clenshaw-Curtis integration of a tuple-valued f
    over [a, b], all components sharing the same nodes.

    Acceptance uses the spectral error model: for an analytic integrand the
    error at level N is about the square of the error at N/2, so component
    c is converged once |S_N - S_{N/2}| <= sqrt(tols[c]/10) * scale and the
    reported relative error is that ratio squared.

    Returns (values, rel_errs, kappas, converged) with kappa the measured
    cancellation sum|w f| / |value| per component.
    """
    m = len(tols)
    with gmpy2.context(precision=bits):
        width = (mpfr(b) - mpfr(a)) / panels
        lefts = [mpfr(a) + width * i for i in range(panels)]
        n = n0
        nodes, _ = _cc_rule(n, bits)
        vals = [[f(lefts[p] + width * x) for x in nodes] for p in range(panels)]

        def totals_for(n_level, values):
            _, w = _cc_rule(n_level, bits)
            tot = [None] * m
            mag = [mpfr(0)] * m
            for p in range(panels):
                for j in range(n_level + 1):
                    wj = w[j]
                    fv = values[p][j]
                    for c in range(m):
                        term = wj * fv[c]
                        tot[c] = term if tot[c] is None else tot[c] + term
                        mag[c] += abs(term)
            return [t * width for t in tot], [g * width for g in mag]

        prev, _ = totals_for(n, vals)
        accept = [math.sqrt(t / 10.0) for t in tols]
        eps = mpfr(2) ** (-bits)
        floor = mpfr(2) ** (-4000)
        cur, mag = prev, [mpfr(0)] * m
        deltas = [1.0] * m
        converged = False
        for _depth in range(max_depth):
            n *= 2
            nodes, _ = _cc_rule(n, bits)
            new_vals = []
            for p in range(panels):
                row = [None] * (n + 1)
                row[0::2] = vals[p]
                for j in range(1, n, 2):
                    row[j] = f(lefts[p] + width * nodes[j])
                new_vals.append(row)
            vals = new_vals
            cur, mag = totals_for(n, vals)
            ok = True
            for c in range(m):
                scale = max(abs(cur[c]), mag[c] * eps, floor)
                deltas[c] = float(abs(cur[c] - prev[c]) / scale)
                if deltas[c] > accept[c]:
                    ok = False
            if ok:
                converged = True
                break
            prev = cur

        rel_errs = []
        kappas = []
        for c in range(m):
            scale = max(abs(cur[c]), mag[c] * eps, floor)
            rel_errs.append(min(deltas[c] ** 2, deltas[c]))
            kappas.append(max(float(mag[c] / scale), 1.0))
        return cur, rel_errs, kappas, converged


def _tol_bits(rel_tol: float) -> int:
    return int(math.ceil(-math.log(rel_tol) / _LOG2))


def _needed_bits(kappas_out, kappa_piece, piece_tol, rel_tol) -> int:
    """Bits required so (a) each output's measured cancellation leaves
    rel_tol headroom and (b) panel sums can resolve refinement deltas down
    to the sqrt-rule acceptance threshold for piece_tol."""
    tb = _tol_bits(rel_tol)
    out = max(53 + int(math.ceil(math.log(max(k, 1.0)) / _LOG2)) + tb
              for k in kappas_out)
    ptb = _tol_bits(max(piece_tol, 1e-300))
    floor = 53 + int(math.ceil(math.log(max(kappa_piece, 1.0)) / _LOG2)) + (ptb + 4) // 2
    return max(out, floor)


def _run_with_condition(build_run, quad: QuadratureSpec, bits0: int,
                        piece_tol0: float, label: str):
    """Retry `build_run(bits, piece_tol)` until the measured cancellation
    is covered by the working precision and the quadrature error is below
    quad.rel_tol.  build_run returns (values, rel_errs, needed_bits, amp,
    converged); needed_bits folds in everything the run measured, amp is
    the piece-combination cancellation used to tighten piece_tol.
    """
    bits = min(max(bits0, 64), _MAX_BITS)
    piece_tol = max(min(piece_tol0, quad.rel_tol), 1e-300)
    last = None
    for _ in range(8):
        values, rel_errs, needed, amp, converged = build_run(bits, piece_tol)
        last = values
        bits_ok = bits >= needed
        err_ok = converged and all(e <= quad.rel_tol * 4 for e in rel_errs)
        if bits_ok and err_ok:
            return values, [max(e, quad.rel_tol) for e in rel_errs], bits
        if bits_ok and not converged:
            raise ConvergenceError(
                f"{label}: refinement depth exhausted",
                complex(values[0]), complex(values[-1]))
        if bits >= _MAX_BITS:
            raise ConvergenceError(
                f"{label}: precision cap reached",
                complex(values[0]), complex(values[-1]))
        piece_tol = max(min(piece_tol, quad.rel_tol / max(amp, 1.0) / 4), 1e-300)
        if not bits_ok:
            bits = min(max(needed + 16, bits + 32), _MAX_BITS)
    raise ConvergenceError(f"{label}: condition loop did not settle",
                           complex(last[0]), complex(last[-1]))


# ----------------------------------------------------------------------
# scaled evaluators (I and K in a single shared-node pass)
# ----------------------------------------------------------------------

def _priors(k: complex, z: float, quad: QuadratureSpec):
    """(bits0, piece_tol0) from the expected cancellation e^{pi|Im k|/2}
    against the integrand mass e^{-z}, plus growth room for Re k.  An
    overestimate only costs excess precision; an underestimate costs one
    measured retry, so the prior aims high."""
    nats = max(0.0, math.pi * abs(k.imag) / 2 - 0.8 * z) + math.pi * abs(k.real)
    piece_tol0 = max(quad.rel_tol * math.exp(-min(nats, 600.0)) / 4, 1e-300)
    tb = _tol_bits(quad.rel_tol)
    ptb = _tol_bits(piece_tol0)
    bits0 = 69 + int(1.45 * nats) + max(tb, (ptb + 4) // 2)
    return bits0, piece_tol0


def _rate(k: complex, z: float) -> float:
    return abs(k.real) + abs(k.imag) + math.sqrt(max(z, 0.0)) + 1.0


@lru_cache(maxsize=100_000)
def _pair_scaled_cached(kr: float, ki: float, z: float, quad: QuadratureSpec,
                        deriv: bool):
    """(e^{-z} I_k(z), e^{z} K_{-k}(z)) and their error estimates, or the
    d/dz of both scaled functions when deriv.  One quadrature pass over
    [0, U] serves the K integral and the second I piece."""
    k = complex(kr, ki)
    U = quad.truncation_cutoff(k, z)
    rate = _rate(k, z)
    panels1 = max(2, int(math.ceil(abs(k.imag))),
                  int(math.ceil(math.pi * rate / _PANEL_RATE_DIV)))
    panels2 = max(2, int(math.ceil(U * rate / _PANEL_RATE_DIV)))

    def run(bits, piece_tol):
        with gmpy2.context(precision=bits):
            kk = mpc(mpfr(repr(kr)), mpfr(repr(ki)))
            zz = mpfr(repr(z))
            pi = gmpy2.const_pi()
            cos = gmpy2.cos
            cosh = gmpy2.cosh
            exp = gmpy2.exp
            e2z = exp(-2 * zz)
            half = mpfr("0.5")
            # lanes: cos(ku) and e^{-ku} stay real for purely real k; for
            # purely imaginary k the trig factors are real and e^{-ku}
            # splits into real cos/sin parts
            if ki == 0.0:
                ka = mpfr(repr(kr))

                def osc1(u):
                    return cos(ka * u)

                def wexp(u):
                    return exp(-ka * u)

                def kpart(w):
                    return (w + 1 / w) * half
            elif kr == 0.0:
                kb = mpfr(repr(ki))
                sin_cos = gmpy2.sin_cos

                def osc1(u):
                    return cosh(kb * u)

                def wexp(u):
                    s, c = sin_cos(kb * u)
                    return mpc(c, -s)

                def kpart(w):
                    return w.real  # Re e^{-ibu} = cos(bu)
            else:
                ka = kk

                def osc1(u):
                    return cos(ka * u)

                def wexp(u):
                    return exp(-ka * u)

                def kpart(w):
                    return (w + 1 / w) * half

            # piece 1 of I on [0, pi]
            if deriv:
                def f1(u):
                    c = cos(u)
                    return (exp(zz * (c - 1)) * osc1(u) * (c - 1),)
            else:
                def f1(u):
                    return (exp(zz * (cos(u) - 1)) * osc1(u),)

            # shared pass on [0, U]: component 0 = K integrand, 1 = I piece 2
            if deriv:
                def f2(u):
                    c = cosh(u)
                    e = exp(zz * (1 - c))
                    w = wexp(u)
                    return (kpart(w) * e * (1 - c), e * e2z * w * (-(c + 1)))
            else:
                def f2(u):
                    e = exp(zz * (1 - cosh(u)))
                    w = wexp(u)
                    return (kpart(w) * e, e * e2z * w)

            # endpoint must be pi at working precision: the integrand grows
            # like cosh(|Im k| u), so a float64 endpoint loses the sliver
            # [float pi, pi] whose mass can exceed the whole integral
            (t1,), (e1,), (kap1,), conv1 = _integrate_panels(
                f1, mpfr(0), pi, panels1, 8, quad.max_depth, bits,
                (piece_tol,))
            (tk, t2), (ek, e2), (kapk, kap2), conv2 = _integrate_panels(
                f2, 0.0, U, panels2, 16, quad.max_depth, bits,
                (quad.rel_tol, piece_tol))
            s = gmpy2.sin(kk * pi)
            ival = (t1 - s * t2) / pi
            weight = abs(t1) + abs(s) * abs(t2)
            eps = mpfr(2) ** (-bits)
            scale = max(abs(ival), weight * eps, mpfr(2) ** (-4000))
            amp = max(float(weight / scale), 1.0)
            kap_i = max(float((kap1 * abs(t1) + kap2 * abs(s) * abs(t2))
                              / (scale * pi)), 1.0)
            err_i = float((e1 * abs(t1) + e2 * abs(s) * abs(t2)) / (scale * pi))
            needed = _needed_bits((kap_i, kapk), max(kap1, kap2),
                                  min(piece_tol, quad.rel_tol / amp / 4),
                                  quad.rel_tol)
            return ((ival, tk), (err_i, ek), needed, amp, conv1 and conv2)

    bits0, piece_tol0 = _priors(k, z, quad)
    (ival, kval), (ierr, kerr), _bits = _run_with_condition(
        run, quad, bits0, piece_tol0, f"bessel pair k={k} z={z}")
    return complex(ival), complex(kval), ierr, kerr


def _check_z(z: float, positive: bool, who: str) -> float:
    z = float(z)
    if math.isnan(z) or math.isinf(z):
        raise DomainError(f"{who}: argument z must be finite, got {z}")
    if positive and z <= 0:
        raise DomainError(f"{who}: argument z must be > 0, got {z}")
    if not positive and z < 0:
        raise DomainError(f"{who}: argument z must be >= 0, got {z}")
    return z


def _check_k(k, who: str) -> complex:
    kc = _as_complex(k)
    if math.isnan(kc.real) or math.isnan(kc.imag) or math.isinf(kc.real) or math.isinf(kc.imag):
        raise DomainError(f"{who}: order k must be finite, got {kc}")
    return kc


def _unscale(val: complex, log_factor: float, who: str) -> complex:
    """Multiply by exp(log_factor) guarding the float range."""
    if val == 0:
        return 0.0 + 0.0j
    mag = math.log(abs(val)) + log_factor
    if mag > 709.0:
        raise RangeError(f"{who}: e^z overflows the floating range; "
                         "use scaled=True and rescale externally")
    return val * math.exp(log_factor)


def eval_I(k, z: float, quad: QuadratureSpec = DEFAULT_QUADRATURE, *,
           scaled: bool = False) -> BesselEval:
    """I_k(z) by quadrature; with scaled=True returns exp(-z) I_k(z).

    Raises RangeError when undoing the scaling would overflow float range.
    """
    kc = _check_k(k, "eval_I")
    z = _check_z(z, positive=False, who="eval_I")
    if z == 0.0:
        if kc == 0:
            return BesselEval(1.0 + 0.0j, 0.0)
        if kc.real > 0:
            return BesselEval(0.0 + 0.0j, 0.0)
        raise DomainError("eval_I: z = 0 needs Re k > 0 (or k = 0)")
    val, _kv, err, _ke = _pair_scaled_cached(kc.real, kc.imag, z, quad, False)
    if scaled:
        return BesselEval(val, err)
    return BesselEval(_unscale(val, z, "eval_I"), err)


def eval_K(k, z: float, quad: QuadratureSpec = DEFAULT_QUADRATURE, *,
           scaled: bool = False) -> BesselEval:
    """K_{-k}(z) by quadrature; with scaled=True returns exp(z) K_{-k}(z)."""
    kc = _check_k(k, "eval_K")
    z = _check_z(z, positive=True, who="eval_K")
    _iv, val, _ie, err = _pair_scaled_cached(kc.real, kc.imag, z, quad, False)
    if scaled:
        return BesselEval(val, err)
    return BesselEval(_unscale(val, -z, "eval_K"), err)


def eval_I_dz(k, z: float, quad: QuadratureSpec = DEFAULT_QUADRATURE, *,
              scaled: bool = False) -> BesselEval:
    """d/dz I_k(z) (or of the scaled e^{-z} I_k(z)) via the differentiated
    integrands, not finite differences."""
    kc = _check_k(k, "eval_I_dz")
    z = _check_z(z, positive=True, who="eval_I_dz")
    dval, _dk, derr, _dke = _pair_scaled_cached(kc.real, kc.imag, z, quad, True)
    if scaled:
        return BesselEval(dval, derr)
    val, _kv, err, _ke = _pair_scaled_cached(kc.real, kc.imag, z, quad, False)
    # I' = e^z (Itilde + Itilde')
    return BesselEval(_unscale(val + dval, z, "eval_I_dz"), err + derr)


def eval_K_dz(k, z: float, quad: QuadratureSpec = DEFAULT_QUADRATURE, *,
              scaled: bool = False) -> BesselEval:
    """d/dz K_{-k}(z) (or of the scaled e^{z} K_{-k}(z))."""
    kc = _check_k(k, "eval_K_dz")
    z = _check_z(z, positive=True, who="eval_K_dz")
    _di, dval, _die, derr = _pair_scaled_cached(kc.real, kc.imag, z, quad, True)
    if scaled:
        return BesselEval(dval, derr)
    _iv, val, _ie, err = _pair_scaled_cached(kc.real, kc.imag, z, quad, False)
    # K' = e^{-z} (Ktilde' - Ktilde)
    return BesselEval(_unscale(dval - val, -z, "eval_K_dz"), err + derr)


# ----------------------------------------------------------------------
# oracles and identity checks
# ----------------------------------------------------------------------

def series_oracle_I(k, z: float, terms: int = 60) -> complex:
    """Ascending power series for I_k(z), summed in high-precision
    arithmetic.  Used only by tests as an independent route; shares no code
    with the quadrature engine."""
    import mpmath as mp

    kc = _check_k(k, "series_oracle_I")
    z = _check_z(z, positive=False, who="series_oracle_I")
    if z == 0.0:
        if kc == 0:
            return 1.0 + 0.0j
        if kc.real > 0:
            return 0.0 + 0.0j
        raise DomainError("series_oracle_I: z = 0 needs Re k > 0 (or k = 0)")
    dps = 30 + int(1.6 * abs(kc.imag)) + int(0.9 * z)
    with mp.workdps(dps):
        kk = mp.mpc(kc.real, kc.imag)
        half = mp.mpf(z) / 2
        log_half = mp.log(half)
        total = mp.mpc(0)
        for m in range(terms):
            total += mp.exp((2 * m + kk) * log_half) / (mp.factorial(m) * mp.gamma(m + 1 + kk))
        tail = abs(mp.exp((2 * terms + kk) * log_half)
                   / (mp.factorial(terms) * mp.gamma(terms + 1 + kk)))
        ratio = float(half ** 2 / max(terms, 1))
        if ratio < 0.9 and abs(total) > 0:
            rel_tail = float(tail / (1 - ratio) / abs(total))
            if rel_tail > 1e-10:
                raise DomainError(
                    f"series_oracle_I: {terms} terms leave tail {rel_tail:.2e}")
        return complex(total)


def wronskian_residual(k, z: float, quad: QuadratureSpec = DEFAULT_QUADRATURE,
                       step: float = 1e-4) -> float:
    """|I_k(z) K_{-k}'(z) - I_k'(z) K_{-k}(z) + 1/z| with the derivatives by
    centered differences in z (step shrunk to stay well inside (0, 2z))."""
    kc = _check_k(k, "wronskian_residual")
    z = _check_z(z, positive=True, who="wronskian_residual")
    h = min(step, z / 20.0)
    iv = eval_I(kc, z, quad).value
    kv = eval_K(kc, z, quad).value
    ip = (eval_I(kc, z + h, quad).value - eval_I(kc, z - h, quad).value) / (2 * h)
    kp = (eval_K(kc, z + h, quad).value - eval_K(kc, z - h, quad).value) / (2 * h)
    return abs(iv * kp - ip * kv + 1.0 / z)


# ----------------------------------------------------------------------
# grid bound checks
# ----------------------------------------------------------------------

def _midpoint_refine(ts):
    out = []
    for a, b in zip(ts, ts[1:]):
        out.append(a)
        out.append(0.5 * (a + b))
    out.append(ts[-1])
    return out


def _validate_bound_grid(k_values, t_values):
    ks = []
    for k in k_values:
        order = k if isinstance(k, ComplexOrder) else ComplexOrder.from_complex(_as_complex(k))
        if not order.admissible():
            raise DomainError(
                f"check grid: k = {order.as_complex()} outside |Re k| <= 1/4, |Im k| >= 1")
        ks.append(order.as_complex())
    ts = sorted(float(t) for t in t_values)
    if len(ts) < 3:
        raise DomainError("check grid: need at least 3 t values")
    return ks, ts


def check_pointwise_bounds(k_values, t_values,
                           quad: QuadratureSpec = DEFAULT_QUADRATURE) -> EstimateReport:
    """Grid suprema of |value| / bound for the four growth/decay bounds

        t > 0:   |I_k(e^t)| <= e^{e^t} e^{-t} / |k|,
                 |K_{-k}(e^t)| <= e^{-e^t} e^{-t} / |k|,
        t <= 0:  |I_k(e^t)| <= 1 / |k|,   |K_{-k}(e^t)| <= 1 / |k|,

    with constant 1.  A bound PASSes when its supremum is finite and moves
    by less than 5% when the t grid is refined once (midpoint insertion).
    """
    ks, ts = _validate_bound_grid(k_values, t_values)
    fine = _midpoint_refine(ts)
    base_set = set(ts)

    report = EstimateReport(
        check_id="pointwise_growth_bounds",
        columns=("bound_id", "re_k", "im_k", "t", "lhs", "rhs", "ratio"),
        notes=[
            "ratio = |value| / bound with constant 1; for t > 0 the lhs and",
            "rhs columns are stated in the e^{-+e^t} rescaled form; the",
            "summaries give the sup over the refined grid and its relative",
            "change under one midpoint refinement of the t grid",
        ],
    )

    sup_base = {b: 0.0 for b in ("I_large_arg", "K_large_arg", "I_small_arg", "K_small_arg")}
    sup_fine = dict(sup_base)

    for kc in ks:
        mag_k = abs(kc)
        for t in fine:
            z = math.exp(t)
            i_scaled = eval_I(kc, z, quad, scaled=True).value
            k_scaled = eval_K(kc, z, quad, scaled=True).value
            if t > 0:
                rhs = math.exp(-t) / mag_k
                rows = (
                    ("I_large_arg", abs(i_scaled) * math.exp(t) * mag_k,
                     abs(i_scaled), rhs),
                    ("K_large_arg", abs(k_scaled) * math.exp(t) * mag_k,
                     abs(k_scaled), rhs),
                )
                for bound_id, ratio, lhs, rhs_v in rows:
                    report.add_row(bound_id, kc.real, kc.imag, t, lhs, rhs_v, ratio)
                    sup_fine[bound_id] = max(sup_fine[bound_id], ratio)
                    if t in base_set:
                        sup_base[bound_id] = max(sup_base[bound_id], ratio)
            else:
                i_val = abs(i_scaled) * math.exp(z)
                k_val = abs(k_scaled) * math.exp(-z)
                for bound_id, val in (("I_small_arg", i_val), ("K_small_arg", k_val)):
                    ratio = val * mag_k
                    report.add_row(bound_id, kc.real, kc.imag, t, val, 1.0 / mag_k, ratio)
                    sup_fine[bound_id] = max(sup_fine[bound_id], ratio)
                    if t in base_set:
                        sup_base[bound_id] = max(sup_base[bound_id], ratio)

    for bound_id in sup_base:
        sb, sf = sup_base[bound_id], sup_fine[bound_id]
        delta = abs(sf - sb) / sb if sb > 0 else math.inf
        finite = math.isfinite(sf) and sf > 0
        report.add_summary(BoundSummary(
            bound_id=bound_id, sup_ratio=sf, refinement_delta=delta,
            passed=finite and delta < _REFINEMENT_PASS_DELTA))
    return report


def merge_bound_reports(reports) -> EstimateReport:
    """Combine bound reports run on different parts of a k grid into the
    report for the union grid.  Sups combine by max; each refinement delta
    is recomputed from the reconstructed base-grid sups (grids are nested,
    so sup_base = sup_fine / (1 + delta))."""
    reports = list(reports)
    if not reports:
        raise DomainError("merge_bound_reports: no reports given")
    out = EstimateReport(check_id=reports[0].check_id,
                         columns=reports[0].columns,
                         notes=list(reports[0].notes))
    for rep in reports:
        if rep.columns != out.columns or rep.check_id != out.check_id:
            raise DomainError("merge_bound_reports: incompatible reports")
        for row in rep.rows:
            out.add_row(*row)
    by_id: dict[str, list[BoundSummary]] = {}
    for rep in reports:
        for s in rep.summaries:
            by_id.setdefault(s.bound_id, []).append(s)
    for bound_id, entries in by_id.items():
        fine = max(s.sup_ratio for s in entries)
        base = max(s.sup_ratio / (1.0 + s.refinement_delta) for s in entries)
        delta = (fine - base) / base if base > 0 else math.inf
        ok = math.isfinite(fine) and fine > 0 and delta < _REFINEMENT_PASS_DELTA
        out.add_summary(BoundSummary(bound_id=bound_id, sup_ratio=fine,
                                     refinement_delta=delta, passed=ok))
    return out


def _sinh_transform_integral(k: complex, z: float, quad: QuadratureSpec) -> float:
    """|int_0^inf sinh(ku) exp(-z cosh u) du| by the same engine."""
    U = quad.truncation_cutoff(k, z)
    panels = max(2, int(math.ceil(U * _rate(k, z) / _PANEL_RATE_DIV)))

    def run(bits, piece_tol):
        with gmpy2.context(precision=bits):
            zz = mpfr(repr(z))
            if k.real == 0.0:
                # sinh(i b u) = i sin(bu); modulus unaffected by the i
                bb = mpfr(repr(k.imag))

                def f(u):
                    return (gmpy2.sin(bb * u) * gmpy2.exp(-zz * gmpy2.cosh(u)),)
            else:
                kk = mpc(mpfr(repr(k.real)), mpfr(repr(k.imag)))

                def f(u):
                    return (gmpy2.sinh(kk * u) * gmpy2.exp(-zz * gmpy2.cosh(u)),)

            (val,), (rel_err,), (kappa,), conv = _integrate_panels(
                f, 0.0, U, panels, 16, quad.max_depth, bits, (quad.rel_tol,))
            needed = _needed_bits((kappa,), kappa, quad.rel_tol, quad.rel_tol)
            return (val,), (rel_err,), needed, kappa, conv

    bits0, _pt0 = _priors(k, z, quad)
    (val,), _errs, _bits = _run_with_condition(
        run, quad, bits0, quad.rel_tol, f"sinh transform k={k} z={z}")
    return abs(complex(val))


def _printed_reading_regularized(b: float, z: float, quad: QuadratureSpec) -> float:
    """|int_0^inf sinh(ku) exp(-z cosh(ku)) du| for k = ib, where the
    integrand is periodic with zero mean and the improper integral is taken
    in the Abel sense; equals the mean of the partial integrals over one
    period, computed as int_0^T f(u) (1 - u/T) du with T = 2 pi / b."""
    T = 2.0 * math.pi / b
    panels = max(4, int(math.ceil(b * T / 4.0)))

    def run(bits, piece_tol):
        with gmpy2.context(precision=bits):
            bb = mpfr(repr(b))
            zz = mpfr(repr(z))
            TT = mpfr(repr(T))

            def f(u):
                # sinh(i b u) = i sin(bu); exp(-z cosh(i b u)) = exp(-z cos(bu))
                return (gmpy2.sin(bb * u) * gmpy2.exp(-zz * gmpy2.cos(bb * u)) * (1 - u / TT),)

            (val,), (rel_err,), (kappa,), conv = _integrate_panels(
                f, 0.0, T, panels, 16, quad.max_depth, bits, (quad.rel_tol,))
            needed = _needed_bits((kappa,), kappa, quad.rel_tol, quad.rel_tol)
            return (val,), (rel_err,), needed, kappa, conv

    (val,), _errs, _bits = _run_with_condition(
        run, quad, 96, quad.rel_tol, f"printed-reading integral b={b} z={z}")
    return abs(complex(val))


def check_appendix_inequality(k_values, t_values,
                              quad: QuadratureSpec = DEFAULT_QUADRATURE) -> EstimateReport:
    """Sup ratio of |int cosh(ku) e^{-e^t cosh u} du| against two readings
    of the comparison integral |int sinh(ku) e^{-e^t cosh(.)} du|:

    * rhs_as_printed: the exponent carries cosh(ku).  As written the
      integral converges for no admissible k; for purely imaginary k the
      integrand is periodic with zero mean and the Abel-regularized value
      (period-averaged partial integral) is used.  For Re k != 0 the
      reading is recorded as divergent and skipped.
    * rhs_cosh_u: the exponent carries cosh(u); converges for all
      admissible k but has real zeros in t, near which the ratio spikes.

    Both suprema are reported; the combined summary passes when at least
    one reading is finite and refinement-stable.
    """
    ks, ts = _validate_bound_grid(k_values, t_values)
    fine = _midpoint_refine(ts)
    base_set = set(ts)

    report = EstimateReport(
        check_id="appendix_comparison",
        columns=("bound_id", "re_k", "im_k", "t", "lhs", "rhs", "ratio"),
        notes=[
            "lhs = |K_{-k}(e^t)| (the cosh-weighted Laplace integral);",
            "rhs_as_printed uses the Abel-regularized value of the printed",
            "integrand (divergent as written; defined for Re k = 0 only),",
            "rhs_cosh_u reads the exponent as cosh(u); combined passes when",
            "at least one reading is finite and refinement-stable",
        ],
    )

    sup_base = {"rhs_as_printed": 0.0, "rhs_cosh_u": 0.0}
    sup_fine = {"rhs_as_printed": 0.0, "rhs_cosh_u": 0.0}
    printed_defined = all(abs(kc.real) < 1e-9 for kc in ks)

    for kc in ks:
        for t in fine:
            z = math.exp(t)
            lhs = abs(eval_K(kc, z, quad).value)
            rhs_b = _sinh_transform_integral(kc, z, quad)
            if rhs_b < 1e-300:
                raise DegenerateDenominatorError(
                    f"appendix check: cosh-u reading vanished at k={kc}, t={t}")
            ratio_b = lhs / rhs_b
            report.add_row("rhs_cosh_u", kc.real, kc.imag, t, lhs, rhs_b, ratio_b)
            sup_fine["rhs_cosh_u"] = max(sup_fine["rhs_cosh_u"], ratio_b)
            if t in base_set:
                sup_base["rhs_cosh_u"] = max(sup_base["rhs_cosh_u"], ratio_b)

            if printed_defined:
                rhs_a = _printed_reading_regularized(abs(kc.imag), z, quad)
                if rhs_a < 1e-300:
                    raise DegenerateDenominatorError(
                        f"appendix check: printed reading vanished at k={kc}, t={t}")
                ratio_a = lhs / rhs_a
                report.add_row("rhs_as_printed", kc.real, kc.imag, t, lhs, rhs_a, ratio_a)
                sup_fine["rhs_as_printed"] = max(sup_fine["rhs_as_printed"], ratio_a)
                if t in base_set:
                    sup_base["rhs_as_printed"] = max(sup_base["rhs_as_printed"], ratio_a)

    outcomes = {}
    for bound_id in ("rhs_as_printed", "rhs_cosh_u"):
        if bound_id == "rhs_as_printed" and not printed_defined:
            report.add_summary(BoundSummary(
                bound_id=bound_id, sup_ratio=math.inf, refinement_delta=math.inf,
                passed=False, note="divergent for Re k != 0; skipped"))
            outcomes[bound_id] = False
            continue
        sb, sf = sup_base[bound_id], sup_fine[bound_id]
        delta = abs(sf - sb) / sb if sb > 0 else math.inf
        ok = math.isfinite(sf) and sf > 0 and delta < _REFINEMENT_PASS_DELTA
        report.add_summary(BoundSummary(
            bound_id=bound_id, sup_ratio=sf, refinement_delta=delta, passed=ok))
        outcomes[bound_id] = ok

    report.add_summary(BoundSummary(
        bound_id="combined", sup_ratio=min(sup_fine.values()),
        refinement_delta=0.0, passed=any(outcomes.values()),
        note="passes when at least one reading is finite and stable"))
    return report
