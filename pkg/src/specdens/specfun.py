"""Special functions and truncated Taylor (jet) arithmetic.

The bosonic blocks downstream are contour integrals of rational functions
against the entire function

    g(p) = exp(p) * (euler_gamma + Gamma(0, p) + log(p)),

whose branch cuts cancel: g(p) = sum_{m>=1} H_m p^m / m! with harmonic
numbers H_m.  The residue engine needs Taylor coefficients of g at points
spread mostly along the negative real axis, where that series cancels
catastrophically.  ``numerator_jet`` therefore switches between

  * the direct series (tiny |p|),
  * a first-order recurrence seeded by an exponential-integral closed form
    (moderate |p|, any phase), and
  * a divergent-tail asymptotic expansion (far left half-plane),

with overlapping regimes that agree to near machine precision; the tests
cross-check every seam.  Coefficients are kept as plain Python complex:
the jets are short (order <~ 12) and scalar arithmetic beats array
dispatch at that size.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath as _mp
import numpy as np
from scipy import special as _sp

from .errors import AccuracyError, DomainError, InvalidInputError, SingularJetError

__all__ = [
    "laguerre",
    "mod_laguerre",
    "gamma_inc0",
    "tricomi_u",
    "bessel_i0",
    "bessel_i0_scaled",
    "Jet",
    "numerator_jet",
]

_EULER = float(np.euler_gamma)

# H_0..H_1023; the series regime caps well below this
_HARMONIC = (0.0,)
_acc = 0.0
_h = [0.0]
for _k in range(1, 1024):
    _acc += 1.0 / _k
    _h.append(_acc)
_HARMONIC = tuple(_h)
del _acc, _h, _k


def harmonic_number(m: int) -> float:
    """H_m = 1 + 1/2 + ... + 1/m, H_0 = 0."""
    if int(m) != m or m < 0:
        raise InvalidInputError(f"harmonic index must be a nonnegative integer, got {m}")
    return _HARMONIC[int(m)]


def _check_int(name, v, low):
    if int(v) != v or v < low:
        raise InvalidInputError(f"{name} must be an integer >= {low}, got {v!r}")
    return int(v)


def laguerre(k: int, x):
    """Laguerre polynomial L_k(x) by the three-term recurrence."""
    k = _check_int("k", k, 0)
    if k == 0:
        return 1.0
    prev, cur = 1.0, 1.0 - x
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 - x) * cur - j * prev) / (j + 1)
    return cur


def mod_laguerre(k: int, x):
    """Companion sequence to L_k: same recurrence, seeds 0 and -1.

    Satisfies mod_laguerre(k, 0) == -H_k; it carries the polynomial part of
    k! U(k+1, 1, x) - exp(x) Gamma(0, x) L_k(-x), which is how Tricomi
    values at the logarithmic parameter point split into stable pieces.
    """
    k = _check_int("k", k, 0)
    if k == 0:
        return 0.0
    prev, cur = 0.0, -1.0
    for j in range(1, k):
        prev, cur = cur, ((2 * j + 1 - x) * cur - j * prev) / (j + 1)
    return cur


def gamma_inc0(x: float) -> float:
    """Upper incomplete gamma at vanishing first parameter, Gamma(0, x), x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma_inc0 needs x > 0, got {x}")
    return float(_sp.exp1(x))


def _exp_scaled_e1(x: float) -> float:
    """exp(x) * E1(x) for x > 0, overflow-safe."""
    if x < 50.0:
        return math.exp(x) * float(_sp.exp1(x))
    # alternating asymptotic sum (1/x) * sum (-1)^k k! / x^k; min term ~ e^-x
    term = 1.0 / x
    acc = term
    k = 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt >= term or nxt < 1e-17 * abs(acc):
            break
        term = nxt
        acc += term if k % 2 == 0 else -term
    return acc


def _u22_large(x: float) -> float:
    """U(2, 2, x) by its asymptotic sum, for x >= 50."""
    term = 1.0 / (x * x)
    acc = term
    k = 0
    while True:
        k += 1
        nxt = term * (k + 1) / x
        if nxt >= term or nxt < 1e-17 * abs(acc):
            break
        term = nxt
        acc += term if k % 2 == 0 else -term
    return acc


def tricomi_u(a: int, b: int, x: float) -> float:
    """Tricomi confluent hypergeometric U(a, b, x), integer a >= 1, integer b, x > 0.

    Routed by parameter class: the cases the density pipeline hits often
    have dedicated stable forms, everything else goes through adaptive
    precision.  Direct double-precision evaluation is unreliable both for
    b <= 0 at small x and near the logarithmic point b = 1, which is why
    the dispatch below exists at all.
    """
    a = _check_int("a", a, 1)
    b = _check_int("b", b, -10**9)
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"tricomi_u needs x > 0, got {x}")
    if b <= 0:
        # Kummer transformation: U(a,b,x) = x^(1-b) U(a-b+1, 2-b, x) lands on
        # parameters where the direct evaluation holds ~1e-10
        val = x ** (1 - b) * float(_sp.hyperu(a - b + 1, 2 - b, x))
        if math.isfinite(val):
            return val
        with _mp.workdps(40):
            return float(_mp.hyperu(a, b, x))
    if a == 1 and b == 1:
        return _exp_scaled_e1(x)
    if a == 2 and b == 2:
        # -(d/dx) U(1,1,x); cancellation grows ~x*eps, so switch forms
        if x < 50.0:
            return 1.0 / x - _exp_scaled_e1(x)
        return _u22_large(x)
    # cold paths (cross-checks, degenerate limits): pay for precision
    with _mp.workdps(40):
        return float(_mp.hyperu(a, b, x))


def bessel_i0(x: float) -> float:
    """Modified Bessel I_0(x), x >= 0."""
    x = float(x)
    if x < 0.0:
        raise DomainError(f"bessel_i0 needs x >= 0, got {x}")
    return float(_sp.i0(x))


def bessel_i0_scaled(x: float) -> float:
    """exp(-x) I_0(x), x >= 0; stays bounded for large arguments."""
    x = float(x)
    if x < 0.0:
        raise DomainError(f"bessel_i0_scaled needs x >= 0, got {x}")
    return float(_sp.i0e(x))


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor data of a function at a point.

    coeffs[k] approximates f^(k)(center) / k!.  Binary operations require
    identical centers (exact comparison; operands are expected to be built
    around the same literal point) and identical truncation orders.
    """

    center: complex
    coeffs: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        coeffs = tuple(complex(c) for c in self.coeffs)
        if not coeffs:
            raise InvalidInputError("a jet needs at least its constant coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, value: complex, center: complex, order: int) -> "Jet":
        order = _check_int("order", order, 0)
        return cls(center, (complex(value),) + (0j,) * order)

    @classmethod
    def variable(cls, center: complex, order: int) -> "Jet":
        """Jet of the identity map p -> p."""
        order = _check_int("order", order, 0)
        coeffs = [complex(center)] + [0j] * order
        if order >= 1:
            coeffs[1] = 1.0 + 0j
        return cls(center, tuple(coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, p: complex) -> complex:
        d = complex(p) - self.center
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * d + c
        return acc

    def _require_same_frame(self, other: "Jet"):
        if self.center != other.center:
            raise InvalidInputError(
                f"jet centers differ: {self.center} vs {other.center}"
            )
        if len(self.coeffs) != len(other.coeffs):
            raise InvalidInputError(
                f"jet orders differ: {self.order} vs {other.order}"
            )

    def __add__(self, other):
        if isinstance(other, Jet):
            self._require_same_frame(other)
            return Jet(self.center, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))
        if isinstance(other, (int, float, complex)):
            coeffs = list(self.coeffs)
            coeffs[0] += other
            return Jet(self.center, tuple(coeffs))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.center, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._require_same_frame(other)
            return Jet(self.center, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))
        if isinstance(other, (int, float, complex)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._require_same_frame(other)
            a, b = self.coeffs, other.coeffs
            n = len(a)
            out = [0j] * n
            for i, ai in enumerate(a):
                if ai == 0:
                    continue
                for j in range(n - i):
                    out[i + j] += ai * b[j]
            return Jet(self.center, tuple(out))
        if isinstance(other, (int, float, complex)):
            return Jet(self.center, tuple(c * other for c in self.coeffs))
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        c = self.coeffs
        if c[0] == 0:
            raise SingularJetError("reciprocal of a jet with vanishing constant term")
        n = len(c)
        out = [0j] * n
        out[0] = 1.0 / c[0]
        for k in range(1, n):
            s = 0j
            for j in range(1, k + 1):
                s += c[j] * out[k - j]
            out[k] = -s / c[0]
        return Jet(self.center, tuple(out))

    def compose_linear(self, scale: complex, shift: complex) -> "Jet":
        """Jet of q -> f(scale * q + shift) at the pulled-back center."""
        scale = complex(scale)
        if scale == 0:
            raise InvalidInputError("compose_linear needs a nonzero scale")
        new_center = (self.center - complex(shift)) / scale
        power = 1.0 + 0j
        out = []
        for c in self.coeffs:
            out.append(c * power)
            power *= scale
        return Jet(new_center, tuple(out))


# ---------------------------------------------------------------------------
# jets of g


def _g_series_value(p0: complex) -> complex:
    """g(p0) from the harmonic series.

    For Re p0 < 0 the terms cancel to depth ~e^|p0|, so this is only a
    full-precision seed for |p0| <= ~4; beyond that the exponential
    integral closed form takes over.
    """
    acc = 0j
    term = 1.0 + 0j  # p0^t / t!
    t = 0
    while t < 300:
        t += 1
        term *= p0 / t
        acc += _HARMONIC[t] * term
        if t > abs(p0) + 8 and abs(term) * _HARMONIC[t] < 1e-18 * (abs(acc) + 1e-300):
            return acc
    raise AccuracyError(f"harmonic series for g did not settle at p0={p0}")


def _g_exp1_value(p0: complex) -> complex:
    """g(p0) via exponential integrals; for moderate |p0| off the tiny disk."""
    if p0.imag == 0.0 and p0.real < 0.0:
        x = -p0.real
        damp = math.exp(p0.real)
        return complex(damp * (_EULER + math.log(x)) - damp * float(_sp.expi(x)))
    val = cmath.exp(p0) * (_EULER + cmath.log(p0) + complex(_sp.exp1(complex(p0))))
    return val


def _g_series_jet(p0: complex, order: int) -> Jet:
    """All coefficients directly from the shifted harmonic series (small |p0|)."""
    coeffs = []
    fact_j = 1.0
    for j in range(order + 1):
        if j > 0:
            fact_j *= j
        acc = _HARMONIC[j] + 0j
        term = 1.0 + 0j  # p0^t / t!
        t = 0
        while t < 300:
            t += 1
            term *= p0 / t
            acc += _HARMONIC[t + j] * term
            if t > abs(p0) + 6 and abs(term) * _HARMONIC[t + j] < 1e-18 * (abs(acc) + 1e-300):
                break
        else:
            raise AccuracyError(f"harmonic series for g jet did not settle at p0={p0}")
        coeffs.append(acc / fact_j)
    return Jet(p0, tuple(coeffs))


def _g_recurrence_jet(p0: complex, order: int) -> Jet:
    """Seed g(p0), then push coefficients through g' = g + (e^p - 1)/p."""
    c0 = _g_series_value(p0) if abs(p0) <= 4.0 else _g_exp1_value(p0)
    if not (math.isfinite(c0.real) and math.isfinite(c0.imag)):
        raise AccuracyError(f"g seed overflowed at p0={p0}")
    # b = jet of (e^p - 1)/p: (exp jet with shifted constant) * jet of 1/p
    k = order  # b_j needed for j <= order-1, keep full length for clarity
    e = cmath.exp(p0)
    num = [e - 1.0]
    f = e
    for t in range(1, k + 1):
        f /= t
        num.append(f)
    inv = [1.0 / p0]
    for t in range(1, k + 1):
        inv.append(-inv[-1] / p0)
    b = [0j] * (k + 1)
    for i, ni in enumerate(num):
        for j in range(k + 1 - i):
            b[i + j] += ni * inv[j]
    coeffs = [c0]
    for j in range(order):
        coeffs.append((coeffs[j] + b[j]) / (j + 1))
    return Jet(p0, tuple(coeffs))


def _g_asymptotic_jet(p0: complex, order: int) -> Jet:
    """Far left half-plane: entire part minus the divergent-tail correction.

    Valid for x0 = -Re(p0) >= 40 with |Im(p0)| <= x0; tail truncated at its
    smallest term, which is ~e^-x0 relatively.
    """
    w = -p0  # Re w >= 40
    k = order
    e = cmath.exp(p0)  # may underflow to 0; the entire part is negligible then
    exp_coeffs = [e]
    f = e
    for t in range(1, k + 1):
        f /= t
        exp_coeffs.append(f)
    log_coeffs = [cmath.log(w)]
    wp = w
    for t in range(1, k + 1):
        log_coeffs.append(-1.0 / (t * wp))
        wp *= w
    log_coeffs[0] += _EULER
    part1 = [0j] * (k + 1)
    for i, ei in enumerate(exp_coeffs):
        for j in range(k + 1 - i):
            part1[i + j] += ei * log_coeffs[j]
    coeffs = []
    fact_j = 1.0
    for j in range(k + 1):
        if j > 0:
            fact_j *= j
        term = fact_j / w ** (j + 1)  # (m+j)!/w^(m+j+1) at m=0
        acc = term
        m = 0
        while True:
            m += 1
            nxt = term * (m + j) / w
            if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(acc):
                break
            term = nxt
            acc += term
        coeffs.append(part1[j] - acc / fact_j)
    return Jet(p0, tuple(coeffs))


def _g_values(points) -> np.ndarray:
    """Vectorized g over an array of points (same regimes as the jets)."""
    ps = np.asarray(points, dtype=complex)
    out = np.empty(ps.shape, dtype=complex)
    absp = np.abs(ps)
    small = absp < 0.5
    asym = (~small) & (ps.real <= -40.0) & (np.abs(ps.imag) <= -ps.real)
    mid = ~(small | asym)
    if small.any():
        sub = ps[small]
        acc = np.zeros_like(sub)
        term = np.ones_like(sub)
        for t in range(1, 30):  # tail < 0.5^30/30!, far below roundoff
            term *= sub / t
            acc += _HARMONIC[t] * term
        out[small] = acc
    if mid.any():
        sub = ps[mid]
        # principal log and the exp1 cut are consistent: their jumps cancel
        out[mid] = np.exp(sub) * (_EULER + np.log(sub) + _sp.exp1(sub))
    if asym.any():
        flat = out.reshape(-1)
        pflat = ps.reshape(-1)
        for idx in np.flatnonzero(asym.reshape(-1)):
            flat[idx] = _g_asymptotic_jet(complex(pflat[idx]), 1).coeffs[0]
    return out


def numerator_jet(point: complex, order: int) -> Jet:
    """Taylor jet of g(p) = e^p (euler_gamma + Gamma(0,p) + log p) at ``point``.

    g is entire (the cuts cancel); g(0) = 0 and g'(0) = 1.  Regime switch
    thresholds were set where the overlapping evaluations agree best; the
    supported domain is Re(point) <= 700 and, left of Re = -40, the sector
    |Im| <= |Re| (which is where the density pipeline's poles live).
    """
    order = _check_int("order", order, 1)
    p0 = complex(point)
    if p0.real > 700.0:
        raise AccuracyError(f"numerator_jet overflows for Re(p) > 700, got {p0}")
    if abs(p0) < 0.5:
        return _g_series_jet(p0, order)
    x0 = -p0.real
    if x0 >= 40.0 and abs(p0.imag) <= x0:
        return _g_asymptotic_jet(p0, order)
    jet = _g_recurrence_jet(p0, order)
    if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in jet.coeffs):
        raise AccuracyError(f"numerator_jet left its supported domain at {p0}")
    return jet
