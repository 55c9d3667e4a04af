import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import staircase_out_amplitudes
from tunnelsplit import (RectangularBarrier, SampledSymmetricBarrier, rect_tunneling_params,
                         stationary_decompose, tunneling_params)
from tunnelsplit.stationary import (DecompositionError, ODEFailure, ODESettings,
                                    outgoing_amplitudes, params_from_amplitudes, scattering_state,
                                    SingularMatchingError, solve_basis)


@settings(max_examples=60, deadline=None)
@given(k=st.floats(0.05, 5.0), V0=st.floats(0.1, 4.0), d=st.floats(0.2, 3.0))
def test_matching_route_equals_closed_form(k, V0, d):
    bar = RectangularBarrier(V0, 5.0, d)
    s = scattering_state(bar, k)
    p = rect_tunneling_params(bar, k)
    assert abs(s.amps.a_out - p.a_out) < 1e-11
    assert abs(s.amps.b_out - p.b_out) < 1e-11
    assert s.params.F == p.F


def test_sampled_rectangle_matches_closed_form():
    rect = RectangularBarrier(1.0, 10.0, 1.0)
    samp = SampledSymmetricBarrier(a=10.0, d=1.0, values=np.ones(101))
    for k in (0.3, 1.0, 1.6, 2.5):
        ps, pr = tunneling_params(samp, k), rect_tunneling_params(rect, k)
        assert ps.T == pytest.approx(pr.T, abs=1e-10)
        assert math.remainder(ps.J - pr.J, 2 * math.pi) == pytest.approx(0, abs=1e-9)
        assert ps.F == pr.F


def test_sampled_smooth_matches_staircase(bump):
    f = lambda x: bump.potential(x)
    for k in (0.8, 1.5, 2.2):
        ao, bo = staircase_out_amplitudes(f, bump.a, bump.d, k, n=4000)
        s = scattering_state(bump, k)
        assert abs(s.amps.a_out - ao) < 1e-6
        assert abs(s.amps.b_out - bo) < 1e-6


def test_basis_wronskian(bump):
    basis = solve_basis(bump, 1.2)
    u, du, v, dv = basis.evaluate(np.linspace(-0.75, 0.75, 31))
    np.testing.assert_allclose(u * dv - du * v, -basis.W, rtol=1e-8)


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.1, 4.0), V0=st.floats(0.2, 3.0), d=st.floats(0.3, 2.5),
       c=st.floats(0.01, 100.0))
def test_basis_scale_invariance(k, V0, d, c):
    bar = RectangularBarrier(V0, 5.0, d)
    basis = solve_basis(bar, k)
    u, du, v, dv = basis.edge()
    Q, P = du + 1j * k * u, dv + 1j * k * v
    a1, b1 = outgoing_amplitudes(Q, P)
    a2, b2 = outgoing_amplitudes(c * Q, c * P)
    assert abs(a1 - a2) < 1e-13 and abs(b1 - b2) < 1e-13


def test_singular_matching():
    with pytest.raises(SingularMatchingError):
        outgoing_amplitudes(0j, 1 + 1j)


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.05, 5.0), V0=st.floats(0.1, 4.0), d=st.floats(0.2, 3.0))
def test_decomposition_invariants(k, V0, d):
    bar = RectangularBarrier(V0, 5.0, d)
    dec = stationary_decompose(bar, k)
    T = dec.params.T
    v = k
    assert np.max(np.abs(dec.psi_full - dec.psi_tr - dec.psi_ref)) <= 1e-12 * max(1, np.max(np.abs(dec.psi_full)))
    assert np.all(np.abs(dec.flux_tr - T * v) <= 1e-8 * v)
    assert np.all(np.abs(dec.flux_ref) <= 1e-8 * v)
    assert np.all(np.abs(dec.flux_full - T * v) <= 1e-8 * v)
    assert np.all(dec.psi_ref[dec.x >= bar.x_c] == 0)


def test_incoming_split_phase(rect):
    for k in np.linspace(0.1, 3.0, 13):
        a = scattering_state(rect, float(k)).amps
        assert abs(a.A_in_tr + a.A_in_ref - 1) < 1e-12
        assert abs(abs(a.A_in_tr) ** 2 + abs(a.A_in_ref) ** 2 - 1) < 1e-10
        dphi = math.remainder(math.atan2(a.A_in_ref.imag, a.A_in_ref.real)
                              - math.atan2(a.A_in_tr.imag, a.A_in_tr.real), 2 * math.pi)
        assert abs(abs(dphi) - math.pi / 2) < 1e-8


def test_incoming_split_magnitudes(rect):
    a = scattering_state(rect, 1.0).amps
    T = rect_tunneling_params(rect, 1.0).T
    assert abs(a.A_in_tr) ** 2 == pytest.approx(T, rel=1e-12)
    assert abs(a.A_in_ref) ** 2 == pytest.approx(1 - T, rel=1e-12)


def test_resonance_has_no_reflected_part():
    bar = RectangularBarrier(1.0, 2.0, 1.0)
    k = math.sqrt(bar.kappa0_sq + math.pi**2)
    dec = stationary_decompose(bar, k)
    assert dec.params.T == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(dec.psi_ref)) < 1e-7


def test_midpoint_check_raises(rect):
    with pytest.raises(DecompositionError):
        stationary_decompose(rect, 1.0, midpoint_tol=-1.0)


def test_params_from_amplitudes_negative_k(rect):
    s = scattering_state(rect, -1.3)
    p = rect_tunneling_params(rect, -1.3)
    assert s.params.T == pytest.approx(p.T, rel=1e-12)
    assert s.params.F == pytest.approx(p.F)


def test_ode_failure_reports_position():
    bar = SampledSymmetricBarrier(a=1.0, d=1.0, values=np.full(11, 1e6))
    with pytest.raises((ODEFailure, SingularMatchingError)):
        scattering_state(bar, 0.5, ODESettings(method="RK45", rtol=1e-10, atol=1e-12))
