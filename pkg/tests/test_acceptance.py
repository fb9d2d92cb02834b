"""Acceptance checks, one test per criterion.

Each test records a single pass/fail line (see ``conftest.record_criterion``)
before asserting, so a run prints a short scorecard even when some fail.
Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""
import functools
import math
import sys

import numpy as np
import pytest

from sdtorus import eigenfunction as ef
from sdtorus import joyce as jy
from sdtorus import swann as sw
from sdtorus import threepole as tp
from sdtorus.curvature import curvature_report, einstein_verify
from sdtorus.hyperbolic import Twistor, hyperboloid_matrix
from sdtorus.metric import Branch, canonical_pencil, einstein_metric, reconstructed_einstein_metric
from sdtorus.threepole import Kind, RegionKind, ThreePoleParams

from conftest import (dipole_specs, good_points, random_specs, record_criterion, sample_box, type_i_specs,
                      type_ii_specs)
from test_threepole import CELL_REPRESENTATIVES, RS_SPECS, usable_rs_points

PDE_TOL = 1e-10
EINSTEIN_TOL = 1e-7
LAMBDA_SPREAD_TOL = 1e-6
WEYL_HALF_TOL = 1e-7
WEYL_FULL_TOL = 1e-8
TWIST_TOL = 1e-8
MONOPOLE_D_TOL = 1e-12
JOYCE_TOL = 1e-10
PENCIL_IDENTITY_TOL = 1e-10
PINNING_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-11
STRUCTURE_TOL = 1e-8
S_SPREAD_TOL = 1e-8
BD_TOL = 1e-10
GRAMMIAN_TOL = 1e-12
WAVE_TOL = 1e-7
EW_MONOPOLE_TOL = 1e-7
TODA_TOL = 1e-6
RS_PULLBACK_TOL = 1e-9
CRUX_TOL = 1e-12
CLOSED_FORM_TOL = 1e-9
J_SQUARE_TOL = 1e-9
NABLA_J_TOL = 1e-7
BRYANT_SUM_TOL = 1e-13
BRYANT_FIT_TOL = 1e-12
CONTROL_FACTOR = 1e6

EINSTEIN_POINTS = 50
# sampled points keep |D| >= CURVATURE_MARGIN * scale**2; curvature roundoff grows
# roughly like (scale**2/|D|)**6 towards the singular locus
CURVATURE_MARGIN = 1e-1


def curvature_specs():
    """Specs for the curvature criteria: every named family plus random multipoles."""
    return [*dipole_specs().values(), *type_ii_specs().values(), *type_i_specs().values(),
            *random_specs(4, seed=31, margin=CURVATURE_MARGIN),
            *random_specs(2, seed=32, mixed=False, margin=CURVATURE_MARGIN)]


@functools.lru_cache(maxsize=None)
def curvature_samples():
    """``{label: (points, [(branch, report), ...])}`` shared by criteria 2 to 4."""
    out = {}
    for spec in curvature_specs():
        points = good_points(spec, EINSTEIN_POINTS, seed=30, margin=CURVATURE_MARGIN)
        reports = [(einstein_metric(spec, p).signature_flag,
                    curvature_report(lambda q, s=spec: einstein_metric(s, q), p)) for p in points]
        out[spec.label] = (spec, points, reports)
    return out


def defined_points(spec, n, seed):
    """First ``n`` box points where ``F`` can be evaluated (branch cuts are skipped)."""
    out = []
    for p in sample_box(20 * n, seed):
        try:
            ef.eval_F(spec, p)
        except ValueError:
            continue
        out.append(p)
        if len(out) == n:
            return out
    raise AssertionError(f"{spec.label}: not enough points where F is defined")


def worst_pde(spec, points):
    return max(abs(ef.pde_residual(spec, p)) / ef.pde_residual_scale(spec, p) for p in points)


def test_criterion_01_eigenfunction_pde():
    specs = [ef.monopole(), *dipole_specs().values(), *type_i_specs().values(), *type_ii_specs().values(),
             *random_specs(20, seed=33, max_poles=8)]
    worst = {spec.label: worst_pde(spec, defined_points(spec, 100, seed=34)) for spec in specs}
    label = max(worst, key=worst.get)
    ok = worst[label] < PDE_TOL
    record_criterion(1, "eigenfunction PDE", ok,
                     f"{len(specs)} specs x 100 points, worst {worst[label]:.2e} ({label}) < {PDE_TOL:g}")
    assert ok


def test_criterion_02_einstein_condition():
    worst_res, worst_spread, branches, failures = 0.0, 0.0, set(), []
    for label, (spec, points, reports) in curvature_samples().items():
        lams = {Branch.PositiveBranch: [], Branch.NegativeBranch: []}
        for branch, rep in reports:
            lams[branch].append(rep.lambda_hat)
            worst_res = max(worst_res, rep.einstein_residual)
            if np.sign(rep.scalar_curv) != (1.0 if branch is Branch.PositiveBranch else -1.0):
                failures.append(f"{label}: scalar curvature sign")
        for branch, values in lams.items():
            if values:
                branches.add(branch)
                worst_spread = max(worst_spread, float(np.ptp(values) / np.max(np.abs(values))))
    ok = worst_res < EINSTEIN_TOL and worst_spread < LAMBDA_SPREAD_TOL and len(branches) == 2 and not failures
    record_criterion(2, "Einstein condition", ok,
                     f"{len(curvature_samples())} specs x {EINSTEIN_POINTS} points on {len(branches)} branches, "
                     f"residual {worst_res:.2e} < {EINSTEIN_TOL:g}, lambda spread {worst_spread:.2e} "
                     f"< {LAMBDA_SPREAD_TOL:g}")
    assert ok, failures


def test_criterion_03_selfduality():
    dipoles = {spec.label for spec in dipole_specs().values()}
    worst_half, worst_full = 0.0, 0.0
    for label, (spec, points, reports) in curvature_samples().items():
        for branch, rep in reports:
            if label in dipoles:
                worst_full = max(worst_full, rep.weyl_full_norm / rep.metric_norm)
                continue
            dead, live = (rep.weyl_minus_norm, rep.weyl_plus_norm) if branch is Branch.PositiveBranch \
                else (rep.weyl_plus_norm, rep.weyl_minus_norm)
            worst_half = max(worst_half, dead / max(live, 1.0))
    ok = worst_half < WEYL_HALF_TOL and worst_full < WEYL_FULL_TOL
    record_criterion(3, "selfduality", ok,
                     f"vanishing half {worst_half:.2e} < {WEYL_HALF_TOL:g}, "
                     f"dipole full Weyl {worst_full:.2e} < {WEYL_FULL_TOL:g}")
    assert ok


def test_criterion_04_surface_orthogonality():
    worst = 0.0
    for spec, points, reports in curvature_samples().values():
        for _, rep in reports:
            worst = max(worst, max(map(abs, rep.twist_scalars)) / rep.metric_norm)
    ok = worst < TWIST_TOL
    record_criterion(4, "surface orthogonality", ok, f"twist scalars {worst:.2e} < {TWIST_TOL:g}")
    assert ok


def test_criterion_05_monopole_degeneracy():
    spec = ef.monopole()
    worst = max(abs(ef.discriminant(spec, p)) / ef.local_scale(spec, p) ** 2 for p in sample_box(100, seed=35))
    ok = worst < MONOPOLE_D_TOL
    record_criterion(5, "monopole degeneracy", ok, f"|D| {worst:.2e} < {MONOPOLE_D_TOL:g}")
    assert ok


def joyce_relative(sol, p):
    size = max(abs(sol.A0.partial((1, 0))), abs(sol.A1.partial((0, 1))), abs(sol.A0.value), 1e-300)
    return max(map(abs, jy.solution_residual(sol, p))) / size


def test_criterion_06_joyce_layer():
    residual, identity, pinning = 0.0, 0.0, {}
    for spec in random_specs(5, seed=36):
        for p in sample_box(20, seed=37):
            for sol in (jy.canonical_solution(spec, p), jy.second_solution(spec, p)):
                residual = max(residual, joyce_relative(sol, p))
            identity = max(identity, abs(jy.pencil_identity_residual(spec, p))
                           / max(1.0, ef.local_scale(spec, p) ** 2))

    # canonical twistor gives the partials of sqrt(rho) F
    canon, twisted = 0.0, 0.0
    for spec in random_specs(3, seed=38):
        for rho, eta in sample_box(10, seed=39):
            F = ef.eval_F(spec, (rho, eta))
            A0 = 0.5 * F.value / math.sqrt(rho) + math.sqrt(rho) * F.partial((1, 0))
            A1 = math.sqrt(rho) * F.partial((0, 1))
            G = math.sqrt(rho) * F.value
            got = jy.phi_from_F(spec, Twistor(0, 1), (rho, eta)).values
            canon = max(canon, np.max(np.abs(np.subtract(got, (A0, A1)))) / max(1.0, abs(A0), abs(A1)))
            got = jy.phi_from_F(spec, Twistor(1, 0), (rho, eta)).values
            expected = (rho * A1 - eta * A0, G - rho * A0 - eta * A1)
            twisted = max(twisted, np.max(np.abs(np.subtract(got, expected))) / max(1.0, *map(abs, expected)))
    pinning["canonical"] = canon
    pinning["second"] = twisted

    # unit monopole with twistor [a, b] is expected to give (0, 2a)
    mono = 0.0
    for a, b in [(1.0, 0.0), (2.0, 3.0), (-0.7, 0.4)]:
        for p in [(0.5, 0.2), (1.7, -1.1)]:
            got = jy.phi_from_F(ef.monopole(), Twistor(a, b), p).values
            mono = max(mono, np.max(np.abs(np.subtract(got, (0.0, 2 * a)))) / max(1.0, abs(a) + abs(b)))
    pinning["monopole"] = mono

    ok = residual < JOYCE_TOL and identity < PENCIL_IDENTITY_TOL and max(pinning.values()) < PINNING_TOL
    detail = (f"residuals {residual:.2e} < {JOYCE_TOL:g}, identity {identity:.2e} < {PENCIL_IDENTITY_TOL:g}, "
              + ", ".join(f"{name} example {err:.2e}" for name, err in pinning.items())
              + f" < {PINNING_TOL:g}")
    record_criterion(6, "Joyce layer", ok, detail)
    assert ok, detail


def test_criterion_07_reconstruction():
    specs = [ef.dipole_plus(), ef.dipole_minus(), *random_specs(3, seed=40)]
    worst = 0.0
    for spec in specs:
        for p in good_points(spec, 100, seed=41):
            g = einstein_metric(spec, p).components
            rec = reconstructed_einstein_metric(spec, p).components
            worst = max(worst, np.max(np.abs(rec - g)) / np.max(np.abs(g)))
    ok = worst < RECONSTRUCTION_TOL
    record_criterion(7, "reconstruction", ok, f"5 specs x 100 points, {worst:.2e} < {RECONSTRUCTION_TOL:g}")
    assert ok


def test_criterion_08_swann_layer():
    rng = np.random.default_rng(42)
    structure, s_spread, s_values = 0.0, 0.0, []
    for spec in [ef.dipole_plus(), ef.dipole_minus(), *random_specs(2, seed=43, max_poles=5)]:
        checker = sw.StructureChecker(spec)
        for p in good_points(spec, 20, seed=44, need_metric=False):
            res = checker(p)
            structure = max(structure, res.r_theta, res.r_omega)
            s_spread = max(s_spread, abs(sw.fit_s(sw.quaternionic_frames(spec, p)) - checker.s) / abs(checker.s))
        s_values.append(checker.s)
    s_spread = max(s_spread, float(np.ptp(s_values)) / abs(s_values[0]))

    bd, grammian = 0.0, 0.0
    for _ in range(100):
        spec = ef.random_spec(rng, 3, mixed=False)
        p, q = (rng.uniform(0.3, 2.5), rng.uniform(-1.5, 1.5)), rng.normal(size=4)
        x_psi, x_phi = sw.momentum_maps(spec, p, q)
        grammian = max(grammian, np.max(np.abs(sw.grammian_check(x_psi, x_phi) - hyperboloid_matrix(p))))
        mono = sw.monopole_matrix_killing_basis(spec, p, sw.qnorm2(q))
        bd = max(bd, np.max(np.abs(sw.bd_for_spec(spec, p, q) - mono)) / np.max(np.abs(mono)))

    wave = 0.0
    for spec in [ef.monopole(), *dipole_specs().values(), *random_specs(2, seed=45)]:
        for _ in range(20):
            rho, eta = rng.uniform(0.3, 2.5), rng.uniform(-1.5, 1.5)
            det = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
            wave = max(wave, sw.wave_residual(sw.homogeneous_F(spec, math.sqrt(det) * hyperboloid_matrix((rho, eta)))))

    ok = structure < STRUCTURE_TOL and s_spread < S_SPREAD_TOL and bd < BD_TOL and grammian < GRAMMIAN_TOL \
        and wave < WAVE_TOL
    record_criterion(8, "Swann layer", ok,
                     f"structure {structure:.2e}, s spread {s_spread:.2e} (< {STRUCTURE_TOL:g}), "
                     f"BD {bd:.2e} < {BD_TOL:g}, Grammian {grammian:.2e} < {GRAMMIAN_TOL:g}, "
                     f"wave {wave:.2e} < {WAVE_TOL:g}")
    assert ok


def test_criterion_09_einstein_weyl_layer():
    monopole = 0.0
    for spec in random_specs(5, seed=46):
        for p in sample_box(20, seed=47):
            monopole = max(monopole, jy.monopole_residual(*canonical_pencil(spec, p), p))
    toda = max(abs(jy.toda_check(spec, p, base).residual) for spec, p, base in [
        (ef.dipole_plus(), (1.2, 0.3), (1.0, 0.0)),
        (ef.dipole_minus(), (0.5, 0.2), (0.6, 0.1)),
    ])
    ok = monopole < EW_MONOPOLE_TOL and toda < TODA_TOL
    record_criterion(9, "Einstein-Weyl layer", ok,
                     f"monopole equation {monopole:.2e} < {EW_MONOPOLE_TOL:g}, Toda {toda:.2e} < {TODA_TOL:g}")
    assert ok


def sign_pattern_holds(kind, scan):
    if kind is RegionKind.A:
        return not scan.D_negative and not scan.has_conformal_infinity
    if kind is RegionKind.B:
        return scan.has_singularity and not scan.has_conformal_infinity
    if kind is RegionKind.C:
        return scan.has_conformal_infinity and scan.D_negative and not scan.D_positive
    return scan.has_conformal_infinity and scan.has_singularity


def test_criterion_10_three_pole_layer():
    rng = np.random.default_rng(48)
    checks = {}

    pullback = 0.0
    for abc in RS_SPECS:
        for R, S in usable_rs_points(*abc, 10, seed=49):
            g = tp.rs_metric(*abc, R, S).components
            pullback = max(pullback, np.max(np.abs(g - tp.einstein_metric_in_rs(*abc, R, S))) / np.max(np.abs(g)))
    checks["rs pullback"] = (pullback, RS_PULLBACK_TOL)

    crux = 0.0
    for b, c in rng.uniform(-5, 5, size=(1000, 2)):
        # b = 0 or c = 0 sends the common zero to infinity
        b, c = math.copysign(max(abs(b), 1e-3), b), math.copysign(max(abs(c), 1e-3), c)
        R, S, _ = tp.crux_solution(b, c)
        scale = max(1.0, b * b * (R * R + 1) + c * c * (S * S + 1))
        crux = max(crux, tp.crux_identity_residual(b, c) / scale)
    checks["crux identity"] = (crux, CRUX_TOL)

    ordering = all(np.less(*tp.typeI_boundaries(rng.uniform(0.05, 4.0), rng.uniform(0.0, 4.0),
                                                rng.uniform(-1.5, 1.5))) for _ in range(1000))

    special = {(1.0, 0.0): "FubiniStudy", (0.0, 1.0): "Bergmann", (0.0, -1.0): "Bergmann", (-1.0, 0.0): "Bergmann"}
    regions = all(tp.typeII_region(*bc).kind is RegionKind.SpecialPoint and tp.typeII_region(*bc).name == name
                  for bc, name in special.items())
    regions &= all(tp.typeII_region(*reps[0]).kind is kind and sign_pattern_holds(kind, tp.sign_scan(*reps[0]))
                   for kind, reps in CELL_REPRESENTATIVES.items())

    closed, j_square, nabla = 0.0, 0.0, 0.0
    for abc in RS_SPECS[:2]:
        for R, S in usable_rs_points(*abc, 10, seed=50):
            kd = tp.kahler_data(*abc, R, S)
            closed = max(closed, tp.exterior_derivative_norm(kd.kahler_form))
            J = tp.complex_structure(kd, tp.fit_kahler_normalization(kd))
            j_square = max(j_square, np.max(np.abs(J @ J + np.eye(4))))
        R, S = usable_rs_points(*abc, 1, seed=51)[0]
        nabla = max(nabla, tp.nabla_J_norm(*abc, R, S))
    checks["d Omega"] = (closed, CLOSED_FORM_TOL)
    checks["J^2 + 1"] = (j_square, J_SQUARE_TOL)
    checks["nabla J"] = (nabla, NABLA_J_TOL)

    root_sum, fit, scales = 0.0, 0.0, []
    while len(scales) < 100:
        a, b, c = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0) * rng.choice([-1, 1]), rng.uniform(0.2, 3.0)
        if min(abs(b - c), abs(b + c)) < 1e-2:
            continue
        roots = tp.bryant_poly(*tp.configuration_twistors(ThreePoleParams(a, b, c, Kind.TypeII))).roots
        root_sum = max(root_sum, abs(roots.sum()) / max(1.0, np.max(np.abs(roots))))
        scale, res = tp.fit_root_scale(roots, tp.product_form_roots(a, b, c))
        fit = max(fit, res)
        scales.append(abs(scale))
    checks["Bryant root sum"] = (root_sum, BRYANT_SUM_TOL)
    scale_spread = float(np.ptp(scales) / scales[0])
    checks["Bryant product-form fit"] = (fit, BRYANT_FIT_TOL)
    checks["Bryant scale spread"] = (scale_spread, BRYANT_FIT_TOL)

    ok = ordering and regions and all(err < tol for err, tol in checks.values())
    detail = ", ".join(f"{name} {err:.2e} < {tol:g}" for name, (err, tol) in checks.items())
    record_criterion(10, "three-pole layer", ok,
                     f"{detail}, R_inf < R_pm {'holds' if ordering else 'violated'}, "
                     f"regions {'match' if regions else 'differ'}")
    assert ok, detail


def test_criterion_11_negative_controls():
    spec = ef.dipole_plus() + ef.MultipoleSpec((ef.Perturbation(0.1),), "perturbed")
    points = good_points(spec, 5, seed=52)
    pde = worst_pde(spec, points) / PDE_TOL
    einstein = einstein_verify(spec, points).max_residual / EINSTEIN_TOL
    structure = max(max(r.r_theta, r.r_omega) for r in map(lambda p: sw.structure_residuals(spec, p, s=-0.5), points))
    structure /= STRUCTURE_TOL
    ok = min(pde, einstein, structure) >= CONTROL_FACTOR
    record_criterion(11, "negative controls", ok,
                     f"perturbed dipole exceeds tolerance by {pde:.1e} (PDE), {einstein:.1e} (Einstein), "
                     f"{structure:.1e} (structure), each >= {CONTROL_FACTOR:g}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
