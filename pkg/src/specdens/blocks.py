"""Fermionic and bosonic building blocks and the residue engine.

The generating functions downstream are bilinear in two families of scalar
blocks indexed by integer vectors:

  * fermionic blocks: moments of exp(-rho) against a product of shifted
    powers prod_i (rho + n a_i)^(m_i) on the half line.  For nonnegative
    indices these are exact finite sums (the integrand is a polynomial);
    an unregularized variant carries an extra Bessel I_0 factor and is
    integrated by Gauss-Laguerre quadrature with node doubling.

  * bosonic blocks: contour integrals of g(p) / prod_i (p + n a_i)^(m_i)
    around all poles, evaluated as exact residues via jet arithmetic.

Pole locations that collide (numerically or exactly) must be merged into
a single higher-order pole before taking residues; ``bosonic_reg`` does
that clustering itself, the raw ``residue_sum`` refuses coincident poles.
Poles that are close without colliding (two source groups whose kernels
nearly cross) make the per-pole residues cancel catastrophically, so the
production path goes through ``stable_pole_sum``, which integrates each
tight cluster around one shared circle instead.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import AccuracyError, InvalidInputError
from .model import StructuredEnsemble, alpha_pair_indep
from .specfun import Jet, _g_values, numerator_jet, tricomi_u

__all__ = [
    "PoleSystem",
    "BlockValue",
    "fermionic_reg",
    "fermionic_unreg",
    "bosonic_reg",
    "residue_sum",
    "stable_pole_sum",
    "merge_close_poles",
    "chgue_bosonic_check",
]

_FACT = [math.factorial(k) for k in range(171)]


@dataclass(frozen=True)
class BlockValue:
    """A block evaluation plus how hard it was to get.

    ``truncation`` is the polynomial degree for exact fermionic sums, the
    node count for quadrature, or the jet order for residue evaluations.
    """

    value: complex
    truncation: int
    max_pole_order: int = 0


@dataclass(frozen=True)
class PoleSystem:
    """Finitely many poles as ((location, order), ...); locations distinct."""

    poles: tuple[tuple[complex, int], ...]

    def __post_init__(self):
        poles = []
        for entry in self.poles:
            try:
                loc, order = entry
            except (TypeError, ValueError):
                raise InvalidInputError(f"pole entries must be (location, order), got {entry!r}")
            if int(order) != order or order < 1:
                raise InvalidInputError(f"pole orders must be positive integers, got {order!r}")
            poles.append((complex(loc), int(order)))
        if not poles:
            raise InvalidInputError("a pole system needs at least one pole")
        locs = [p[0] for p in poles]
        if len(set(locs)) != len(locs):
            raise InvalidInputError(
                "coincident pole locations; merge their orders into one pole first"
            )
        object.__setattr__(self, "poles", tuple(poles))

    @property
    def total_order(self) -> int:
        return sum(o for _, o in self.poles)


def _reciprocal_power_coeffs(center: complex, root: complex, power: int, order: int):
    """Taylor coefficients of (p - root)^(-power) at ``center``."""
    base = center - root
    c = base ** (-power)
    out = [c]
    for t in range(1, order + 1):
        c = -c * (power + t - 1) / (t * base)
        out.append(c)
    return out


def _residue_at(loc, order, others, numerator, guard):
    """Residue at one pole: Taylor coefficient order-1 of the local jet
    of numerator(p) * prod_others (p - oloc)^(-oorder)."""
    k = order - 1 + guard
    jet = numerator(loc, max(k, 1))
    coeffs = list(jet.coeffs[: k + 1])
    if len(coeffs) < k + 1:
        coeffs += [0j] * (k + 1 - len(coeffs))
    for oloc, oorder in others:
        rec = _reciprocal_power_coeffs(loc, oloc, oorder, k)
        conv = [0j] * (k + 1)
        for i in range(k + 1):
            ci = coeffs[i]
            if ci == 0:
                continue
            for j in range(k + 1 - i):
                conv[i + j] += ci * rec[j]
        coeffs = conv
    return coeffs[order - 1]


def residue_sum(system: PoleSystem, numerator=None, guard: int = 4) -> complex:
    """Sum of residues of numerator(p) / prod (p - loc_i)^(order_i).

    ``numerator`` maps (point, jet_order) to a Jet of an entire function;
    defaults to the g-function jet.  Each residue is read off the Taylor
    product at the pole; ``guard`` extra coefficients are carried so a
    slightly over-long jet cross-checks the bookkeeping (they are free at
    these orders).

    Accuracy degrades like separation^-(order + guard) when pole locations
    nearly collide; callers facing that regime want ``stable_pole_sum``.
    """
    if numerator is None:
        numerator = numerator_jet
    guard = max(int(guard), 0)
    total = 0j
    for idx, (loc, order) in enumerate(system.poles):
        others = [p for jdx, p in enumerate(system.poles) if jdx != idx]
        total += _residue_at(loc, order, others, numerator, guard)
    return total


def merge_close_poles(entries, scale: float = 1.0):
    """Cluster (location, order) pairs whose locations nearly coincide.

    Two locations belong together when |a - b| < 1e-12 * (scale + |a|).
    Each cluster becomes one pole at the order-weighted mean location with
    the summed order.  Exact duplicates merge too, which is what makes
    degenerate sources legal inputs upstream.
    """
    clusters = []  # [rep_loc, total_order, weighted_sum]
    for loc, order in entries:
        loc = complex(loc)
        for cl in clusters:
            if abs(loc - cl[0]) < 1e-12 * (scale + abs(cl[0])):
                cl[1] += order
                cl[2] += order * loc
                break
        else:
            clusters.append([loc, order, order * loc])
    return [(cl[2] / cl[1], cl[1]) for cl in clusters]


_CLUSTER_GAP = 1.0  # poles closer than this share one contour


def _cluster_poles(poles, gap: float):
    """Partition poles into groups closed under |a - b| < gap."""
    remaining = list(poles)
    clusters = []
    while remaining:
        group = [remaining.pop(0)]
        grew = True
        while grew:
            grew = False
            for cand in remaining[:]:
                if any(abs(cand[0] - member[0]) < gap for member in group):
                    group.append(cand)
                    remaining.remove(cand)
                    grew = True
        clusters.append(group)
    return clusters


def _cluster_circle(cluster, others):
    """Centroid and contour radius for one pole cluster.

    The quadrature's roundoff goes like radius^-(order - 1) (the result is
    the c_{-1} Laurent coefficient, summed against ring values dominated by
    the deeper c_{-k} R^{1-k} terms), so the circle wants to be as large as
    the clearance to outside poles allows, never shrinking with the pole
    separation.  Returns (center, min_radius, radius); radius < min_radius
    signals that an outside pole is too close for a clean annulus.
    """
    weight = sum(o for _, o in cluster)
    center = sum(l * o for l, o in cluster) / weight
    r_in = max(abs(l - center) for l, _ in cluster)
    min_radius = 1.3 * r_in + 0.05
    radius = 1.5
    if others:
        clear = min(abs(l - center) for l, _ in others)
        radius = min(radius, 0.55 * clear)
    return center, min_radius, radius


def _contour_cluster_sum(cluster, others, numerator) -> complex:
    """Total residue of a tight pole cluster by circular quadrature.

    Summing per-pole jet residues over nearly coincident poles cancels
    catastrophically; the combined residue is one integral over a circle
    that encloses the whole cluster and clears every other pole, where the
    integrand stays tame.  Trapezoid nodes on a circle converge
    geometrically in the node count for integrands analytic in an annulus
    around it, so doubling until two levels agree is cheap and sharp.
    """
    center, min_radius, radius = _cluster_circle(cluster, others)
    radius = max(radius, min_radius)
    nodes = 64
    prev = None
    while nodes <= 8192:
        theta = np.arange(nodes) * (2.0 * np.pi / nodes)
        ring = np.exp(1j * theta)
        pts = center + radius * ring
        if numerator is None:
            vals = _g_values(pts)
        else:
            vals = np.array([numerator(complex(p), 1).coeffs[0] for p in pts])
        for loc, order in cluster:
            vals /= (pts - loc) ** order
        for loc, order in others:
            vals /= (pts - loc) ** order
        vals *= ring
        est = radius * complex(np.mean(vals))
        floor = 1e-3 * radius * float(np.max(np.abs(vals)))
        if prev is not None and abs(est - prev) <= 5e-13 * (abs(est) + floor + 1e-300):
            return est
        prev = est
        nodes *= 2
    raise AccuracyError(
        f"cluster contour quadrature did not converge by 8192 nodes "
        f"(center={center}, radius={radius}, orders={[o for _, o in cluster]})"
    )


def stable_pole_sum(entries, scale: float = 1.0, numerator=None) -> complex:
    """Residue sum that stays accurate for nearly coincident poles.

    Locations within the ``merge_close_poles`` tolerance merge into single
    higher-order poles first.  The survivors are then partitioned into
    clusters of mutual distance below unit scale: isolated poles keep the
    exact jet residues, while each multi-pole cluster is integrated around
    one enclosing circle (see ``_contour_cluster_sum``).  Clusters absorb
    any outside pole their circle cannot clear, so the contours are always
    clean; for well separated poles this reduces to ``residue_sum``.
    """
    merged = merge_close_poles(entries, scale)
    clusters = _cluster_poles(merged, _CLUSTER_GAP)
    while len(clusters) > 1:
        joined = False
        for ci, cl in enumerate(clusters):
            if len(cl) == 1:
                continue
            others = [p for cj, c2 in enumerate(clusters) if cj != ci for p in c2]
            center, min_radius, radius = _cluster_circle(cl, others)
            if radius >= min_radius:
                continue
            # no clean annulus: absorb the nearest outside cluster
            nearest = min(
                (cj for cj in range(len(clusters)) if cj != ci),
                key=lambda cj: min(abs(l - center) for l, _ in clusters[cj]),
            )
            clusters[ci] = cl + clusters[nearest]
            del clusters[nearest]
            joined = True
            break
        if not joined:
            break
    resolved = numerator_jet if numerator is None else numerator
    total = 0j
    for ci, cl in enumerate(clusters):
        others = [p for cj, c2 in enumerate(clusters) if cj != ci for p in c2]
        if len(cl) == 1:
            loc, order = cl[0]
            total += _residue_at(loc, order, others, resolved, 4)
        else:
            total += _contour_cluster_sum(cl, others, numerator)
    return total


def _fermionic_from_shifts(shifts, m_vec) -> complex:
    """Exact value of (1/prod m_i!) * int_0^inf e^-rho prod (rho + shift_i)^m_i.

    Expands the product; int e^-rho rho^k = k! makes the integral a finite
    sum.  Any negative index sends the whole block to zero by convention.
    """
    coeffs = [1.0 + 0j]  # ascending powers of rho
    for shift, mult in zip(shifts, m_vec):
        for _ in range(mult):
            nxt = [0j] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i] += shift * c
                nxt[i + 1] += c
            coeffs = nxt
    total = 0j
    for k, c in enumerate(coeffs):
        total += _FACT[k] * c
    denom = 1.0
    for mult in m_vec:
        denom *= _FACT[mult]
    return total / denom


def _index_vector(ensemble: StructuredEnsemble, m_vec):
    m = tuple(int(v) for v in m_vec)
    if len(m) != len(ensemble.groups):
        raise InvalidInputError(
            f"index vector length {len(m)} != group count {len(ensemble.groups)}"
        )
    return m


def fermionic_reg(ensemble: StructuredEnsemble, z: complex, m_vec, z_bar=None) -> BlockValue:
    """Regularized fermionic block at spectral point z with indices m_vec.

    Zero (exactly) when any index is negative.  ``z_bar`` defaults to
    conj(z); it is a separate argument because the finite-difference
    derivatives move the two copies independently.
    """
    m = _index_vector(ensemble, m_vec)
    if any(v < 0 for v in m):
        return BlockValue(0j, 0, 0)
    zb = complex(z).conjugate() if z_bar is None else complex(z_bar)
    n = ensemble.n_inv_var
    shifts = [n * alpha_pair_indep(g, zb, z) for g in ensemble.groups]
    value = _fermionic_from_shifts(shifts, m)
    return BlockValue(value, sum(m), 0)


_LAGUERRE_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_NODES_LOCK = threading.Lock()


def _laguerre_nodes(count: int):
    with _NODES_LOCK:
        if count not in _LAGUERRE_NODES:
            x, w = _sp.roots_laguerre(count)
            _LAGUERRE_NODES[count] = (x, w)
        return _LAGUERRE_NODES[count]


def fermionic_unreg(ensemble: StructuredEnsemble, z: complex, w_mod: float, m_vec) -> BlockValue:
    """Unregularized fermionic block: the regularized integrand times a
    Bessel ridge exp(-n w^2) I_0(2 sqrt(n rho) w).

    Gauss-Laguerre with node doubling until two consecutive levels agree to
    1e-10 relative.  The Bessel factor is evaluated in scaled form so large
    w cannot overflow before the damping is applied; at w = 0 the integrand
    is the regularized polynomial again and the rule is exact.
    """
    m = _index_vector(ensemble, m_vec)
    if any(v < 0 for v in m):
        return BlockValue(0j, 0, 0)
    w_mod = float(w_mod)
    if w_mod < 0.0:
        raise InvalidInputError(f"w_mod is a modulus, needs >= 0, got {w_mod}")
    zb = complex(z).conjugate()
    n = ensemble.n_inv_var
    shifts = np.array([n * alpha_pair_indep(g, zb, z) for g in ensemble.groups])
    damp = n * w_mod * w_mod
    denom = 1.0
    for mult in m:
        denom *= _FACT[mult]

    nodes = 64
    prev = None
    while nodes <= 4096:
        x, wts = _laguerre_nodes(nodes)
        poly = np.ones_like(x, dtype=complex)
        for shift, mult in zip(shifts, m):
            if mult:
                poly *= (x + shift) ** mult
        t = 2.0 * np.sqrt(n * x) * w_mod
        # i0e(t) * exp(t - damp); cap keeps 0-weight tails from inf * 0
        ridge = _sp.i0e(t) * np.exp(np.minimum(t - damp, 700.0))
        total = complex(np.sum(wts * ridge * poly)) / denom
        if prev is not None and abs(total - prev) <= 1e-10 * (abs(total) + 1e-300):
            return BlockValue(total, nodes, 0)
        prev = total
        nodes *= 2
    raise AccuracyError(
        f"quadrature for the unregularized block did not converge by 4096 nodes "
        f"(z={z}, w={w_mod}, m={m})"
    )


def bosonic_reg(ensemble: StructuredEnsemble, v: complex, m_vec, v_bar=None, numerator=None) -> BlockValue:
    """Regularized bosonic block at source point v with indices m_vec.

    Indices must be nonnegative; zero entries simply contribute no pole,
    and an index vector with no poles at all integrates an entire function
    around a closed contour, which is exactly zero.  Nearly coincident
    pole locations are merged before the residue pass.
    """
    m = _index_vector(ensemble, m_vec)
    if any(v_ < 0 for v_ in m):
        raise InvalidInputError(f"regularized bosonic indices must be >= 0, got {m}")
    vb = complex(v).conjugate() if v_bar is None else complex(v_bar)
    n = ensemble.n_inv_var
    alphas = [alpha_pair_indep(g, vb, v) for g in ensemble.groups]
    value, order = _bosonic_from_alphas(n, alphas, m, numerator)
    return BlockValue(value, order + 4 if order else 0, order)


def _bosonic_from_alphas(n: float, alphas, m_vec, numerator=None):
    prefactor = 1.0
    entries = []
    for a, mult in zip(alphas, m_vec):
        if mult >= 1:
            prefactor *= _FACT[mult - 1]
            entries.append((-n * a, mult))
    if not entries:
        return 0j, 0
    merged = merge_close_poles(entries, scale=n)
    value = -prefactor * stable_pole_sum(merged, scale=n, numerator=numerator)
    return value, max(o for _, o in merged)


def chgue_bosonic_check(m: int, u_mod: float, n_inv_var: float) -> float:
    """Closed form (m-1)! U(m, 1, n u^2) for the chiral cross-check family."""
    m = int(m)
    if m < 1:
        raise InvalidInputError(f"chgue_bosonic_check needs m >= 1, got {m}")
    u_mod = float(u_mod)
    n = float(n_inv_var)
    if u_mod <= 0.0 or n <= 0.0:
        raise InvalidInputError("chgue_bosonic_check needs u_mod > 0 and n_inv_var > 0")
    return _FACT[m - 1] * tricomi_u(m, 1, n * u_mod * u_mod)
