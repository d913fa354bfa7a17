"""Generating function and density for a rank-one off-diagonal source.

For M = alpha E_(row,col) + X the generating function collapses to a
polynomial in beta = |alpha|^2,

    R = R_0 + beta R_1 + beta^2 R_2 + beta^3 R_3 + beta^4 R_4,

whose coefficients are bilinear in two-index fermionic blocks i_(k,l) and
bosonic blocks j_(q,r).  The second index counts powers of a quadratic
factor whose roots

    k_pm = (beta + 2|x|^2 +- sqrt(beta) sqrt(4|x|^2 + beta)) / 2

satisfy k_plus k_minus = |x|^4 and k_plus + k_minus = beta + 2|x|^2; the
product form keeps k_minus accurate where the subtraction cancels.

Fermionic blocks for l = -1 and all bosonic blocks with negative first
index are the delicate part: they reduce to Tricomi U values and to
residue sums of decremented pole systems respectively, with dedicated
degenerate branches where k_plus -> k_minus (alpha -> 0) or z -> 0.
At alpha = 0 everything collapses to the pure-noise generating function,
which is the anchor the tests pin this module against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .blocks import stable_pole_sum
from .errors import DomainError, InvalidInputError
from .model import RankOneNonNormalEnsemble
from .normal_density import DEFAULT_FD_STEP, _density_from_generating
from .specfun import tricomi_u

__all__ = [
    "KPlusMinus",
    "nn_fermionic",
    "nn_bosonic",
    "nn_generating",
    "nn_density",
]

_FACT = [math.factorial(k) for k in range(171)]

# root-difference evaluations lose ~2e-14/split to cancellation while the
# collapsed-root branch models the spread at O(split^2); measured crossover
_DEGENERATE_SPLIT = 4e-5


@dataclass(frozen=True)
class KPlusMinus:
    """Roots of the coupling quadratic for a given |x|^2 and beta = |alpha|^2."""

    k_plus: float
    k_minus: float

    @classmethod
    def from_abs2(cls, x_abs2: float, beta: float) -> "KPlusMinus":
        x_abs2 = float(x_abs2)
        beta = float(beta)
        if x_abs2 < 0.0 or beta < 0.0:
            raise InvalidInputError("x_abs2 and beta are squared moduli, need >= 0")
        kp = 0.5 * (beta + 2.0 * x_abs2 + math.sqrt(beta) * math.sqrt(4.0 * x_abs2 + beta))
        km = (x_abs2 * x_abs2 / kp) if kp > 0.0 else 0.0
        return cls(kp, km)

    @property
    def mean(self) -> float:
        return 0.5 * (self.k_plus + self.k_minus)

    @property
    def split(self) -> float:
        return self.k_plus - self.k_minus

    def is_degenerate(self) -> bool:
        return self.split < _DEGENERATE_SPLIT * (1.0 + self.mean)


def _partial_exp(k: int, a) -> complex:
    # sum_{j<=k} a^j / j!
    total = 1.0 + 0j
    term = 1.0 + 0j
    for j in range(1, k + 1):
        term *= a / j
        total += term
    return total


def _real_pairing(x_bar, x, what: str) -> float:
    prod = complex(x_bar) * complex(x)
    if abs(prod.imag) > 1e-9 * (1.0 + abs(prod)):
        raise DomainError(f"{what} slots must be conjugate-paired, got product {prod}")
    return prod.real


def nn_fermionic(k: int, l: int, z, alpha, n_inv_var: float, z_bar=None) -> complex:
    """Two-index fermionic block i_(k,l); zero for k < 0, l in {-1, 0, 1}.

    l counts inverse powers of the coupling quadratic, so l = -1 is the
    singular family: it needs z_bar z real (conjugate-paired slots) and,
    at z = 0, k >= 1 (k >= 2 when alpha = 0 too) for convergence.
    """
    k = int(k)
    l = int(l)
    if l not in (-1, 0, 1):
        raise InvalidInputError(f"second fermionic index must be -1, 0 or 1, got {l}")
    if k < 0:
        return 0j
    n = float(n_inv_var)
    if not n > 0.0:
        raise InvalidInputError(f"n_inv_var must be positive, got {n_inv_var}")
    zb = complex(z).conjugate() if z_bar is None else complex(z_bar)
    zz = zb * complex(z)
    sign = -1.0 if k % 2 else 1.0

    if l == 0:
        return sign * _FACT[k] / n ** (k + 1) * _partial_exp(k, n * zz)
    if l == 1:
        beta = abs(complex(alpha)) ** 2
        return (
            nn_fermionic(k + 2, 0, z, alpha, n, z_bar)
            - beta * (nn_fermionic(k + 1, 0, z, alpha, n, z_bar) + zz * nn_fermionic(k, 0, z, alpha, n, z_bar))
        )

    # l == -1
    big_z = _real_pairing(zb, z, "fermionic l=-1")
    beta = abs(complex(alpha)) ** 2
    kpm = KPlusMinus.from_abs2(big_z, beta)
    a = n * big_z

    if kpm.is_degenerate():
        k0 = n * kpm.mean
        if k0 == 0.0:
            # z = 0 and alpha = 0: plain polynomial moment
            if k < 2:
                raise DomainError(f"i_({k},-1) diverges at z = 0 with alpha = 0")
            return sign * _FACT[k - 2] / n ** (k - 1)
        total = 0j
        term = 1.0 + 0j
        for li in range(k + 1):
            if li > 0:
                term *= a / li
            total += term * n * tricomi_u(2, 2 + li - k, k0)
        return sign * _FACT[k] / n**k * total

    if big_z == 0.0:
        # only the li = 0 term survives; U(1, 1-k, 0) = 1/k for k >= 1
        if k < 1:
            raise DomainError(f"i_(0,-1) diverges at z = 0")
        bracket = 1.0 / k - tricomi_u(1, 1 - k, n * kpm.k_plus)
        return sign * _FACT[k] / (kpm.split * n**k) * bracket

    total = 0j
    term = 1.0 + 0j
    for li in range(k + 1):
        if li > 0:
            term *= a / li
        bracket = tricomi_u(1, 1 + li - k, n * kpm.k_minus) - tricomi_u(1, 1 + li - k, n * kpm.k_plus)
        total += term * bracket
    return sign * _FACT[k] / (kpm.split * n**k) * total


_REDUCIBLE = {(-1, 2), (-1, 3), (-2, 3)}


def _contour_block(n: float, big_v: float, kpm: KPlusMinus, orders, numerator=None) -> complex:
    """-(-n)^(sum orders - 1) times the residue sum over the three pole sites."""
    locs = (-n * big_v, -n * kpm.k_minus, -n * kpm.k_plus)
    entries = [(loc, order) for loc, order in zip(locs, orders) if order >= 1]
    if not entries:
        return 0j
    total_order = sum(o for _, o in entries)
    return -((-n) ** (total_order - 1)) * stable_pole_sum(entries, scale=n, numerator=numerator)


def nn_bosonic(q: int, r: int, v, alpha, n_inv_var: float, v_bar=None, numerator=None) -> complex:
    """Two-index bosonic block j_(q,r).

    q >= 0 evaluates directly from the pole system (v-site of order q, each
    coupling root of order r).  The negative-q members the assembly needs,
    (-1,2), (-1,3) and (-2,3), are expanded through the root identity
    2(p + nV) = (p + n k_plus) + (p + n k_minus) - n beta into decremented
    systems; other negative q are rejected.
    """
    q = int(q)
    r = int(r)
    if r < 1:
        raise InvalidInputError(f"second bosonic index must be >= 1, got {r}")
    n = float(n_inv_var)
    if not n > 0.0:
        raise InvalidInputError(f"n_inv_var must be positive, got {n_inv_var}")
    if q < 0 and (q, r) not in _REDUCIBLE:
        raise InvalidInputError(f"negative first index only supported for {sorted(_REDUCIBLE)}, got {(q, r)}")
    vb = complex(v).conjugate() if v_bar is None else complex(v_bar)
    big_v = _real_pairing(vb, v, "bosonic")
    beta = abs(complex(alpha)) ** 2
    kpm = KPlusMinus.from_abs2(big_v, beta)

    def ov(a, b, c):
        return _contour_block(n, big_v, kpm, (a, b, c), numerator)

    if q >= 0:
        return ov(q, r, r)
    if (q, r) == (-1, 2):
        return 0.5 * (ov(0, 1, 2) + ov(0, 2, 1) + beta * ov(0, 2, 2))
    if (q, r) == (-1, 3):
        return 0.5 * (ov(0, 2, 3) + ov(0, 3, 2) + beta * ov(0, 3, 3))
    # (q, r) == (-2, 3)
    return 0.25 * (
        ov(0, 1, 3)
        + 2.0 * ov(0, 2, 2)
        + ov(0, 3, 1)
        + beta * beta * ov(0, 3, 3)
        + 2.0 * beta * (ov(0, 3, 2) + ov(0, 2, 3))
    )


def nn_generating(params: RankOneNonNormalEnsemble, z, z_bar, v, v_bar) -> complex:
    """Generating function of the rank-one source model at paired slots.

    Slots must be conjugate-paired within each of (z, z_bar) and (v, v_bar)
    up to finite-difference-sized drift; the coupling roots need the real
    squared moduli.  Vanishes at v = z for alpha = 0, matching the
    pure-noise limit.
    """
    big_n = params.size
    n = params.n_inv_var
    alpha = params.alpha
    beta = abs(alpha) ** 2
    z, z_bar, v, v_bar = complex(z), complex(z_bar), complex(v), complex(v_bar)
    big_z = _real_pairing(z_bar, z, "generating z")
    big_v = _real_pairing(v_bar, v, "generating v")

    i_memo: dict[tuple[int, int], complex] = {}

    def i(k, l):
        key = (k, l)
        val = i_memo.get(key)
        if val is None:
            val = nn_fermionic(k, l, z, alpha, n, z_bar)
            i_memo[key] = val
        return val

    j_memo: dict[tuple[int, int], complex] = {}

    def j(q, r):
        key = (q, r)
        val = j_memo.get(key)
        if val is None:
            val = nn_bosonic(q, r, v, alpha, n, v_bar)
            j_memo[key] = val
        return val

    N = big_n
    Z = big_z
    V = big_v
    d1 = z_bar * v + z * v_bar
    d2 = (z_bar * v) ** 2 + (z * v_bar) ** 2

    def delta_z(x, y):
        return i(x, y) + Z * i(x - 1, y)

    def sigma(x, y, c):
        return j(x, y) + c * j(x + 1, y)

    delta1p = i(N - 1, 0) + i(N - 3, 1)
    delta1m = i(N - 1, 0) - i(N - 3, 1)
    delta2 = i(N - 4, 1) - i(N - 2, 0)
    delta3 = i(N, -1) - i(N - 2, 0)
    sigma1p = j(N - 3, 2) + j(N - 1, 1)
    sigma1m = j(N - 3, 2) - j(N - 1, 1)
    sigma2 = j(N - 2, 2) - j(N - 4, 3)

    r0 = (
        2.0 * (V * i(N - 3, 1) * j(N, 1) + Z * i(N, -1) * j(N - 3, 2))
        + 6.0 * (V * i(N - 1, 0) * j(N - 4, 3) + Z * i(N - 4, 1) * j(N - 1, 1))
        - 4.0 * V * j(N - 2, 2) * delta1p
        - 4.0 * Z * i(N - 2, 0) * sigma1p
        + N * N * (j(N - 1, 1) * delta_z(N - 3, 1) + V * i(N - 3, 1) * j(N, 1))
        + n * d1 * ((N - 2) * j(N - 1, 1) * i(N - 3, 1) + 2.0 * i(N - 1, 0) * j(N - 3, 2))
        - n * n * i(N - 2, 1) * j(N - 2, 1)
        + N
        * (
            2.0 * V * j(N - 2, 2) * delta1p
            - 2.0 * Z * j(N - 1, 1) * delta2
            + 2.0 * j(N - 3, 2) * delta_z(N - 1, 0)
            - 2.0 * j(N - 1, 1) * delta_z(N - 3, 1)
            - Z * i(N - 4, 1) * j(N - 1, 1)
            - 3.0 * V * i(N - 3, 1) * j(N, 1)
        )
    )

    r1 = (
        -N * (delta1m * sigma(N - 2, 2, V) + delta_z(N - 2, 0) * sigma1m)
        + n * (2.0 * delta_z(N - 1, 0) * sigma(N - 3, 2, V) + d2 * i(N - 2, 0) * j(N - 2, 2))
        + i(N - 1, 0) * (2.0 * V * j(N - 1, 2) + 3.0 * j(N - 4, 3))
        + d1
        * (
            2.0 * N * j(N - 2, 2) * delta_z(N - 2, 0)
            + i(N - 2, 0) * (4.0 * V * j(N - 3, 3) - N * j(N - 2, 2))
            + i(N - 2, 0) * j(N - 4, 3)
            - i(N, -1) * j(N - 2, 2)
            + V * (N - 2) * i(N - 2, 0) * j(N - 1, 2)
            - Z * (N + 2) * i(N - 3, 0) * j(N - 2, 2)
        )
        + 2.0 * V * j(N - 4, 3) * delta3
        - Z * i(N, -1) * sigma2
        - 2.0 * i(N - 3, 1) * sigma(N - 2, 2, V)
        - 2.0 * j(N - 1, 1) * delta_z(N - 2, 0)
        - 2.0 * Z * j(N - 3, 2) * delta_z(N - 1, -1)
        + 2.0 * V * i(N - 1, 0) * sigma(N - 3, 3, V)
        + j(N - 3, 2) * (2.0 * Z * i(N - 3, 0) + i(N, -1))
        - (V * i(N - 2, 0) - Z * i(N, -1)) * j(N - 4, 3)
    )

    r2 = (
        d1 * (delta_z(N - 1, -1) * j(N - 2, 2) + (i(N - 2, 0) - 2.0 * i(N, -1)) * sigma(N - 3, 3, V))
        + 2.0 * (N - 2) * delta_z(N - 2, 0) * sigma(N - 2, 2, V)
        + V * i(N - 2, 0) * sigma(N - 3, 3, -V)
        - 2.0 * (Z + V) * j(N - 4, 3) * delta_z(N - 1, -1)
        - sigma(N - 3, 2, -Z) * delta_z(N - 1, -1)
        - i(N - 1, 0) * sigma(N - 3, 3, V)
        + j(N - 2, 2) * i(N - 2, 0)
        - delta3 * sigma2
    )

    r3 = -delta3 * sigma(N - 3, 3, V) + delta_z(N - 1, -1) * (sigma2 + 2.0 * d1 * sigma(N - 3, 3, V))

    r4 = delta_z(N - 1, -1) * sigma(N - 3, 3, V)

    return r0 + beta * (r1 + beta * (r2 + beta * (r3 + beta * r4)))


def nn_density(params: RankOneNonNormalEnsemble, z, fd_step: float = DEFAULT_FD_STEP) -> float:
    """Spectral density of M = alpha E_(row,col) + X at z."""

    def evaluator(zz, zzb, vv, vvb):
        return nn_generating(params, zz, zzb, vv, vvb)

    return _density_from_generating(evaluator, params.size, z, fd_step).rho
