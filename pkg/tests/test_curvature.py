import math

import numpy as np
import pytest

from sdtorus import eigenfunction as ef
from sdtorus.curvature import (
    DegenerateMetric,
    bianchi_residual,
    curvature_report,
    einstein_verify,
    geometry,
    hodge_star_2form,
    orthonormal_frame,
    twist_scalars,
)
from sdtorus.jets import Jet
from sdtorus.metric import Branch, MetricSample, einstein_metric

from conftest import dipole_specs, good_points, random_specs, type_ii_specs


def diagonal_sample(p, entries):
    """MetricSample with diagonal jets ``entries(x, y)`` in the first two coordinates."""
    x, y = Jet.seed(p, 3)
    diag = entries(x, y)
    jets = tuple(tuple(diag[a] if a == b else None for b in range(4)) for a in range(4))
    return MetricSample(tuple(p), jets)


def hyperbolic_space(p):
    def entries(x, y):
        inv = (x * x).reciprocal()
        return [inv, inv, inv, inv]
    return diagonal_sample(p, entries)


def sin_jet(t):
    v = t.value
    return t.compose([math.sin(v), math.cos(v), -math.sin(v), -math.cos(v)])


def sphere_product(p):
    def entries(x, y):
        one = Jet.constant(1.0, 2, 3)
        sx, sy = sin_jet(x), sin_jet(y)
        return [one, one, sx * sx, sy * sy]
    return diagonal_sample(p, entries)


def test_hyperbolic_space_oracle():
    rep = curvature_report(hyperbolic_space, (1.3, 0.2), fd_check=True)
    # sectional curvature -1 gives Ric = -3 g
    assert math.isclose(rep.lambda_hat, -3.0, rel_tol=1e-12)
    assert rep.einstein_residual < 1e-12
    assert rep.weyl_full_norm < 1e-12
    assert rep.christoffel_fd_error < 1e-8


def test_sphere_product_oracle():
    rep = curvature_report(sphere_product, (1.0, 2.0))
    assert math.isclose(rep.lambda_hat, 1.0, rel_tol=1e-12)
    assert rep.einstein_residual < 1e-12
    # both halves are nonzero and of equal size on a product of equal spheres
    assert rep.weyl_plus_norm > 0.1
    assert math.isclose(rep.weyl_plus_norm, rep.weyl_minus_norm, rel_tol=1e-10)
    assert bianchi_residual(geometry(sphere_product((1.0, 2.0)))) < 1e-13


def test_hodge_star_is_an_involution_on_two_forms():
    g = einstein_metric(ef.dipole_plus(), (1.2, 0.4)).components
    omega = np.zeros((4, 4))
    omega[0, 2], omega[1, 3], omega[0, 3] = 1.0, -0.4, 2.0
    omega -= omega.T
    assert np.allclose(hodge_star_2form(g, hodge_star_2form(g, omega)), omega, atol=1e-12)


def test_orthonormal_frame_rejects_indefinite_metrics():
    V = orthonormal_frame(np.diag([2.0, 1.0, 3.0, 4.0]))
    assert np.allclose(V.T @ np.diag([2.0, 1.0, 3.0, 4.0]) @ V, np.eye(4))
    with pytest.raises(DegenerateMetric):
        orthonormal_frame(np.diag([1.0, -1.0, 1.0, 1.0]))


@pytest.mark.parametrize("spec", [*dipole_specs().values(), *type_ii_specs().values(), *random_specs(3)],
                         ids=lambda s: s.label)
def test_einstein_metrics_are_einstein_with_fixed_constant(spec):
    points = good_points(spec, 6, seed=7)
    summary = einstein_verify(spec, points)
    assert summary.ok, summary.failures
    for p, rep in zip(points, summary.reports):
        branch = einstein_metric(spec, p).signature_flag
        expected = 3.0 if branch is Branch.PositiveBranch else -3.0
        assert math.isclose(rep.lambda_hat, expected, rel_tol=1e-6)


@pytest.mark.parametrize("spec", [*type_ii_specs().values(), *random_specs(3, seed=5)], ids=lambda s: s.label)
def test_one_weyl_half_vanishes(spec):
    for p in good_points(spec, 4, seed=8):
        sample = einstein_metric(spec, p)
        rep = curvature_report(lambda q: einstein_metric(spec, q), p)
        dead, live = (rep.weyl_minus_norm, rep.weyl_plus_norm) \
            if sample.signature_flag is Branch.PositiveBranch else (rep.weyl_plus_norm, rep.weyl_minus_norm)
        assert dead < 1e-7 * max(live, 1.0)


@pytest.mark.parametrize("spec", dipole_specs().values(), ids=lambda s: s.label)
def test_dipoles_are_conformally_flat(spec):
    for p in good_points(spec, 4, seed=9):
        rep = curvature_report(lambda q: einstein_metric(spec, q), p)
        assert rep.weyl_full_norm < 1e-8 * rep.metric_norm


def test_torus_action_is_surface_orthogonal():
    for spec in [ef.dipole_plus(), *random_specs(2)]:
        for p in good_points(spec, 5, seed=10):
            sample = einstein_metric(spec, p)
            scale = np.max(np.abs(sample.components))
            assert max(map(abs, twist_scalars(sample))) < 1e-8 * scale


def test_einstein_verify_flags_non_einstein_input():
    spec = ef.dipole_plus() + ef.MultipoleSpec((ef.Perturbation(0.3),))
    summary = einstein_verify(spec, good_points(spec, 3, seed=11))
    assert not summary.ok
    assert summary.max_residual > 1e-3
