"""Generating function and the finite-difference density pipeline.

The pure-noise closed forms act as the independent reference for the
pipeline; the structural identities (coincidence normalization, group
splitting, numerator insensitivity, slotwise derivative relations) pin the
combinatorial assembly.
"""

import math

import pytest

from specdens import (
    DensityPoint,
    Jet,
    bosonic_reg,
    build_ensemble,
    fermionic_reg,
    generating_reg,
    ginibre_density,
    ginibre_inverse_density,
    inverse_generating,
    numerator_jet,
    spectral_density,
    spectral_density_inverse,
    spectral_density_point,
)
from specdens.errors import DomainError, InvalidInputError, NumericalFailureError
from specdens.model import EnsembleGroup, StructuredEnsemble
from specdens.normal_density import _density_from_generating

THREE_CLUSTER = build_ensemble(
    [(-1.0, 2), (0.0, 1), (1.0 + 1.0j, 3)],
    [(0.75, 2), (1.0, 4)],
    [(1.0, 2), (1.25, 1), (1.0, 3)],
)
GIN4 = build_ensemble([(0.0, 4)], [(1.0, 4)], [(1.0, 4)])


def poly_plus_g(coeffs):
    """Numerator factory: g plus a fixed polynomial."""

    def factory(p0, order):
        acc = Jet.constant(0.0, p0, order)
        p = Jet.variable(p0, order)
        for c in reversed(coeffs):
            acc = acc * p + c
        return numerator_jet(p0, order) + acc

    return factory


# --- structural identities ----------------------------------------------------

def test_generating_normalizes_at_coincidence():
    for ens, z in ((THREE_CLUSTER, 0.9 + 0.4j), (GIN4, 1.2 - 0.3j), (THREE_CLUSTER, -1.0 + 0j)):
        val = generating_reg(ens, z, z.conjugate(), z, z.conjugate())
        assert val == pytest.approx(1.0, abs=1e-12)


def test_generating_split_group_invariance():
    # splitting a multiplicity-3 group into adjacent 1+2 with identical
    # data must not change the value
    whole = build_ensemble([(0.5, 3)], [(1.1, 3)], [(0.9, 3)], n_inv_var=5)
    split = StructuredEnsemble(
        groups=(EnsembleGroup(0.5, 1.1, 0.9, 1), EnsembleGroup(0.5, 1.1, 0.9, 2)),
        n_inv_var=5,
    )
    z, v = 0.8 + 0.2j, -0.3 + 0.6j
    a = generating_reg(whole, z, z.conjugate(), v, v.conjugate())
    b = generating_reg(split, z, z.conjugate(), v, v.conjugate())
    assert b == pytest.approx(a, rel=1e-10)
    assert spectral_density(split, 0.7 + 0.1j) == pytest.approx(
        spectral_density(whole, 0.7 + 0.1j), rel=1e-6
    )


def test_generating_insensitive_to_low_degree_numerator_terms():
    # every bosonic evaluation inside carries total pole order >= N, so a
    # polynomial of degree <= N - 2 added to the residue numerator sums to
    # zero residue by decay at infinity
    z, v = 0.8 + 0.2j, 0.5 - 0.7j
    base = generating_reg(GIN4, z, z.conjugate(), v, v.conjugate())
    alt = generating_reg(
        GIN4, z, z.conjugate(), v, v.conjugate(),
        numerator=poly_plus_g([0.4, -1.3, 0.7]),
    )
    assert alt == pytest.approx(base, rel=1e-10)
    # same statement for the structured ensemble (N = 6, degree 4); the
    # far-flung pole at ~-56 amplifies the cancellation, so the residual
    # roundoff is larger but still far below the value
    base = generating_reg(THREE_CLUSTER, z, z.conjugate(), v, v.conjugate())
    alt = generating_reg(
        THREE_CLUSTER, z, z.conjugate(), v, v.conjugate(),
        numerator=poly_plus_g([0.3, -1.2, 0.5, 2.0, -0.25]),
    )
    assert alt == pytest.approx(base, rel=1e-6)


def test_fermionic_slot_derivative_lowers_index():
    # d/d(z_bar) of the index-a block equals n z times the index-(a-1) block
    h = 1e-6
    z, zb0 = 0.7 + 0.3j, 0.6 - 0.2j
    for a in (1, 2, 3):
        up = fermionic_reg(GIN4, z, (a,), z_bar=zb0 + h).value
        dn = fermionic_reg(GIN4, z, (a,), z_bar=zb0 - h).value
        want = 4 * z * fermionic_reg(GIN4, z, (a - 1,), z_bar=zb0).value
        if a == 1:
            want = 4 * z  # index-0 block is the bare integral, exactly 1
        assert (up - dn) / (2 * h) == pytest.approx(want, rel=1e-7)


def test_bosonic_slot_derivative_raises_index():
    # d/dv of the index-b block equals -n v_bar times the index-(b+1) block
    h = 1e-6
    v0, vb0 = 0.8 + 0.1j, 0.5 - 0.4j
    for b in (1, 2):
        up = bosonic_reg(GIN4, v0 + h, (b,), v_bar=vb0).value
        dn = bosonic_reg(GIN4, v0 - h, (b,), v_bar=vb0).value
        want = -4 * vb0 * bosonic_reg(GIN4, v0, (b + 1,), v_bar=vb0).value
        assert (up - dn) / (2 * h) == pytest.approx(want, rel=1e-7)


# --- density pipeline vs closed forms -----------------------------------------

def test_pure_noise_density_at_origin():
    assert spectral_density(GIN4, 0j) == pytest.approx(1.0 / math.pi, abs=1e-9)


@pytest.mark.parametrize("r", [0.0, 0.4, 0.9, 1.0, 1.4, 1.9])
def test_pure_noise_radial_profile(r):
    z = r * complex(math.cos(0.7), math.sin(0.7))
    got = spectral_density(GIN4, z)
    assert got == pytest.approx(ginibre_density(4, 4.0, z), abs=2e-7)


def test_density_rotational_invariance_for_pure_noise():
    z = 1.1 + 0.0j
    rot = z * complex(math.cos(2.1), math.sin(2.1))
    assert spectral_density(GIN4, rot) == pytest.approx(
        spectral_density(GIN4, z), rel=1e-6, abs=1e-10
    )


def test_density_conjugation_symmetry_for_real_sources():
    ens = build_ensemble([(-2.0, 4), (2.0, 2)], [(1.0, 6)], [(1.0, 6)])
    z = 1.4 + 0.6j
    assert spectral_density(ens, z.conjugate()) == pytest.approx(
        spectral_density(ens, z), rel=1e-8
    )


def test_density_step_halving_consistency():
    a = spectral_density(THREE_CLUSTER, 1.3 + 0j)
    b = spectral_density(THREE_CLUSTER, 1.3 + 0j, fd_step=5e-4)
    assert b == pytest.approx(a, abs=1e-6)


def test_density_finite_at_source_points():
    # frozen from the pipeline itself once validated against simulation;
    # these guard the near-degenerate kernel handling at exact sources
    assert spectral_density(THREE_CLUSTER, -1.0 + 0j) == pytest.approx(0.44569016633827874, rel=1e-6)
    assert spectral_density(THREE_CLUSTER, 1.0 + 1.0j) == pytest.approx(0.28612583067936115, rel=1e-6)


def test_density_point_diagnostics():
    pt = spectral_density_point(GIN4, 0.5 + 0.5j)
    assert isinstance(pt, DensityPoint)
    assert pt.z == 0.5 + 0.5j
    assert pt.fd_step == pytest.approx(1e-3 * (1 + abs(0.5 + 0.5j)))
    # raw stencil spread before the -1/(N pi) factor; order h^2 of the
    # unextrapolated derivative, so ~1e-5 at this step size
    assert pt.richardson_delta < 1e-4
    assert pt.imag_leak < 1e-8


def test_pipeline_failure_surfaces_diagnostics():
    def broken(zz, zzb, vv, vvb):
        return 1e280 * (vv - zz) * zzb

    with pytest.raises(NumericalFailureError) as info:
        _density_from_generating(broken, 4, 0.3 + 0.1j, 1e-3)
    assert "z" in info.value.diagnostics


# --- inverse spectra ----------------------------------------------------------

def test_inverse_density_matches_closed_form():
    for z in (0.4 + 0.3j, -0.8 + 0.1j, 1.5 + 0j):
        got = spectral_density_inverse(GIN4, z)
        assert got == pytest.approx(ginibre_inverse_density(4, 4.0, z), abs=1e-6)


def test_inverse_density_rejects_origin_straddle():
    with pytest.raises(DomainError):
        spectral_density_inverse(GIN4, 0.005 + 0j)


def test_inverse_generating_requires_identity_weights():
    z, v = 0.5 + 0.2j, 0.4 - 0.1j
    with pytest.raises(InvalidInputError):
        inverse_generating(THREE_CLUSTER, z, z.conjugate(), v, v.conjugate())


def test_inverse_generating_rejects_zero_slots():
    with pytest.raises(DomainError):
        inverse_generating(GIN4, 0j, 1j, 1.0, 1.0)


def test_inverse_generating_normalizes_at_coincidence():
    z = 0.8 - 0.5j
    val = inverse_generating(GIN4, z, z.conjugate(), z, z.conjugate())
    assert val == pytest.approx(1.0, abs=1e-10)


# --- closed forms -------------------------------------------------------------

def test_noise_closed_form_plateau():
    # inside the support the density sits near n/(N pi); at the origin the
    # incomplete-gamma factor is exactly 1
    assert ginibre_density(4, 4.0, 0j) == pytest.approx(4 / (4 * math.pi), rel=1e-14)
    assert ginibre_density(3, 5.0, 1e9) == pytest.approx(0.0, abs=1e-300)


def test_inverse_noise_closed_form_is_the_pushforward():
    # rho_inv(w) = rho(1/w) / |w|^4 by the change of variables; the two
    # closed forms are written to satisfy this exactly
    for w in (0.4 + 0.3j, 1.5 + 0j, 0.2 - 0.6j):
        want = ginibre_density(4, 4.0, 1 / w) / abs(w) ** 4
        assert ginibre_inverse_density(4, 4.0, w) == pytest.approx(want, rel=1e-12)


def test_inverse_noise_closed_form_rejects_origin():
    with pytest.raises(DomainError):
        ginibre_inverse_density(4, 4.0, 0j)


def test_noise_closed_form_validation():
    with pytest.raises(InvalidInputError):
        ginibre_density(0, 4.0, 0j)
    with pytest.raises(InvalidInputError):
        ginibre_density(4, -1.0, 0j)
