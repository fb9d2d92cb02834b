import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdtorus import eigenfunction as ef
from sdtorus import joyce as jy
from sdtorus.hyperbolic import InvalidInput, Twistor
from sdtorus.metric import canonical_pencil

seeds = st.integers(min_value=0, max_value=2 ** 31)
points = st.tuples(st.floats(min_value=0.3, max_value=3.0), st.floats(min_value=-2.0, max_value=2.0))
comps = st.floats(min_value=-3.0, max_value=3.0)


def relative(res, sol):
    size = max(abs(sol.A0.partial((1, 0))), abs(sol.A1.partial((0, 1))), abs(sol.A0.value), 1e-300)
    return max(map(abs, res)) / size


@given(seeds, points, comps, comps)
@settings(max_examples=60, deadline=None)
def test_phi_from_F_solves_joyce(seed, p, a, b):
    if abs(a) + abs(b) < 1e-3:
        return
    spec = ef.random_spec(np.random.default_rng(seed), 4)
    sol = jy.phi_from_F(spec, Twistor(a, b), p)
    assert relative(jy.solution_residual(sol, p), sol) < 1e-10


@given(seeds, points)
@settings(max_examples=40, deadline=None)
def test_canonical_pencil_solves_joyce(seed, p):
    spec = ef.random_spec(np.random.default_rng(seed), 5)
    for sol in (jy.canonical_solution(spec, p), jy.second_solution(spec, p)):
        assert relative(jy.solution_residual(sol, p), sol) < 1e-10
    assert abs(jy.pencil_identity_residual(spec, p)) < 1e-10 * max(1.0, ef.local_scale(spec, p) ** 2)


def test_pencil_comes_from_the_basis_twistors():
    spec, p = ef.random_spec(np.random.default_rng(3), 4), (1.3, 0.4)
    assert np.allclose(jy.canonical_solution(spec, p).values, jy.phi_from_F(spec, Twistor(0, 1), p).values)
    assert np.allclose(jy.second_solution(spec, p).values, jy.phi_from_F(spec, Twistor(1, 0), p).values)


def test_phi_from_F_is_linear_in_the_twistor():
    spec, p = ef.dipole_plus(), (0.9, -0.3)
    u = np.array(jy.phi_from_F(spec, Twistor(1.0, 2.0), p).values)
    v = np.array(jy.phi_from_F(spec, Twistor(-0.5, 0.25), p).values)
    w = np.array(jy.phi_from_F(spec, Twistor(0.5, 2.25), p).values)
    assert np.allclose(u + v, w)


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (2.0, 3.0), (-0.7, 0.4)])
def test_unit_monopole_gives_a_multiple_of_mu1(a, b):
    # F = 1/sqrt(rho) has G = 1, so only the flat part survives
    spec = ef.monopole()
    for p in [(0.5, 0.2), (1.7, -1.1)]:
        A0, A1 = jy.phi_from_F(spec, Twistor(a, b), p).values
        assert abs(A0) < 1e-12 * max(1.0, abs(a) + abs(b))
        assert math.isclose(A1, a, rel_tol=1e-12, abs_tol=1e-12)


def test_zero_twistor_is_rejected():
    with pytest.raises(InvalidInput):
        jy.phi_from_F(ef.dipole_plus(), Twistor(0.0, 0.0), (1.0, 0.0))


def test_einstein_weyl_quotient_of_the_positive_dipole():
    data = jy.ew_quotient(*canonical_pencil(ef.dipole_plus(), (1.0, 0.0)), (1.0, 0.0))
    assert np.allclose(data.gB, np.eye(3))
    assert np.allclose(data.omegaB, [1.0, 0.0, 0.0])
    assert math.isclose(data.w, -1.0)
    assert np.allclose(data.A_form, 0.0)


def test_spinor_square_is_half_the_weyl_form():
    spec, p = ef.random_spec(np.random.default_rng(3), 4), (1.3, 0.4)
    A0, A1, B0, B1 = (float(x.value) for x in canonical_pencil(spec, p))
    omega = jy.ew_quotient(A0, A1, B0, B1, p).omegaB
    assert np.allclose(2 * jy.spinor_square_form(A0, A1, p), omega[:2], rtol=1e-12)


@given(seeds, points)
@settings(max_examples=40, deadline=None)
def test_monopole_equation(seed, p):
    spec = ef.random_spec(np.random.default_rng(seed), 4)
    pencil = canonical_pencil(spec, p)
    assert jy.monopole_residual(*pencil, p) < 1e-7


def test_distinguished_monopoles():
    assert np.allclose(jy.distinguished_monopoles(ef.dipole_plus(), (1.0, 0.0)), (1.0, -1.0))
    spec, p = ef.dipole_minus(), (0.5, 0.3)
    A0, A1, _, _ = (float(x.value) for x in canonical_pencil(spec, p))
    m1, _ = jy.distinguished_monopoles(spec, p)
    assert math.isclose(m1, A0 / (A0 ** 2 + A1 ** 2))


def test_degenerate_pencil():
    with pytest.raises(jy.DegeneratePencil):
        jy.ew_quotient(0.0, 0.0, 1.0, 1.0, (1.0, 0.0))


@pytest.mark.parametrize("spec, p, base", [
    (ef.dipole_plus(), (1.2, 0.3), (1.0, 0.0)),
    (ef.dipole_minus(), (0.5, 0.2), (0.6, 0.1)),
])
def test_toda_equation(spec, p, base):
    data = jy.toda_check(spec, p, base)
    assert abs(data.residual) < 1e-6
    assert abs(data.jacobian_det) > 1e-3
    assert math.isclose(data.u, 2 * math.log(p[0]))
