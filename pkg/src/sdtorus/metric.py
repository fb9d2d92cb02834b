"""Component assembly of the torus-symmetric 4-metrics.

All metrics use the coordinate order ``(rho, eta, phi, psi)``.  Components
are jets in ``(rho, eta)`` only; the torus coordinates are cyclic.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .eigenfunction import CLASSIFY_TOL, MultipoleSpec, eval_F, local_scale
from .hyperbolic import HalfPlanePoint
from .jets import Jet

COORDS = ("rho", "eta", "phi", "psi")


class DegenerateAtPoint(ValueError):
    pass


class EmptyDomain(ValueError):
    pass


class Branch(enum.Enum):
    PositiveBranch = "PositiveBranch"
    NegativeBranch = "NegativeBranch"


@dataclass(frozen=True)
class MetricSample:
    point: tuple
    component_jets: tuple  # 4x4 nested tuples of Jet (or None for exact zeros)
    signature_flag: Branch = Branch.PositiveBranch

    @property
    def components(self) -> np.ndarray:
        return jet_matrix_values(self.component_jets)

    def first_derivatives(self) -> np.ndarray:
        """``dg[c, a, b] = d_c g_ab`` over all four coordinates."""
        out = np.zeros((4, 4, 4))
        for a in range(4):
            for b in range(4):
                j = self.component_jets[a][b]
                if j is not None:
                    out[:2, a, b] = j.grad()
        return out

    def second_derivatives(self) -> np.ndarray:
        """``ddg[c, d, a, b] = d_c d_d g_ab``."""
        out = np.zeros((4, 4, 4, 4))
        for a in range(4):
            for b in range(4):
                j = self.component_jets[a][b]
                if j is not None:
                    out[:2, :2, a, b] = j.hessian()
        return out

    def scaled(self, factor: Jet | float) -> "MetricSample":
        return MetricSample(self.point, _scale_matrix(self.component_jets, factor), self.signature_flag)

    def to_dict(self) -> dict:
        g = self.components
        comps = {f"g_{COORDS[a]}_{COORDS[b]}": float(g[a, b]) for a in range(4) for b in range(a, 4)}
        return {"point": [float(x) for x in self.point], "components": comps,
                "branch": self.signature_flag.value}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def jet_matrix_values(jets) -> np.ndarray:
    out = np.zeros((4, 4))
    for a in range(4):
        for b in range(4):
            if jets[a][b] is not None:
                out[a, b] = float(jets[a][b].value)
    return out


def _scale_matrix(jets, factor):
    return tuple(tuple(None if j is None else j * factor for j in row) for row in jets)


def _assemble(conformal: Jet, torus) -> tuple:
    """Block-diagonal 4x4 jet matrix with ``conformal * (d rho^2 + d eta^2)``."""
    rows = [[None] * 4 for _ in range(4)]
    rows[0][0] = conformal
    rows[1][1] = conformal
    for i in range(2):
        for k in range(2):
            rows[2 + i][2 + k] = torus[i][k]
    return tuple(tuple(r) for r in rows)


def _point_tuple(p):
    return (float(p.rho), float(p.eta)) if isinstance(p, HalfPlanePoint) else (float(p[0]), float(p[1]))


def _outer(u, v):
    return [[u[i] * v[k] for k in range(2)] for i in range(2)]


def einstein_metric(spec: MultipoleSpec, p, tol: float = CLASSIFY_TOL) -> MetricSample:
    """Selfdual Einstein metric built from ``F``; negated where ``D < 0``.

    With ``alpha = sqrt(rho) dphi`` and ``beta = (dpsi + eta dphi)/sqrt(rho)``::

        g = D/(4 F^2 rho^2) (drho^2 + deta^2)
            + [((F - 2 rho F_r) alpha - 2 rho F_e beta)^2
               + (-2 rho F_e alpha + (F + 2 rho F_r) beta)^2] / (F^2 D)
    """
    if spec.is_monopole:
        raise EmptyDomain("a single pole has identically vanishing discriminant")
    rho_v, eta_v = _point_tuple(p)
    rho, eta = Jet.seed((rho_v, eta_v), 3)
    F = eval_F(spec, (rho_v, eta_v))
    scale = float(local_scale(spec, (rho_v, eta_v)))
    Fr, Fe = F.diff(0), F.diff(1)
    rho2 = rho.truncate(2)
    eta2 = eta.truncate(2)
    F2 = F.truncate(2)
    D = F2 * F2 - 4 * rho2 * rho2 * (Fr * Fr + Fe * Fe)
    if abs(F.value) < tol * scale:
        raise DegenerateAtPoint(f"F vanishes at {p}")
    if abs(D.value) < tol * scale ** 2:
        raise DegenerateAtPoint(f"discriminant vanishes at {p}")
    sr = rho2.sqrt()
    # alpha, beta as (dphi, dpsi) coefficient pairs
    alpha = (sr, 0.0)
    beta = (eta2 / sr, 1.0 / sr)
    c1a, c1b = F2 - 2 * rho2 * Fr, -2 * rho2 * Fe
    c2a, c2b = -2 * rho2 * Fe, F2 + 2 * rho2 * Fr
    v1 = [alpha[i] * c1a + beta[i] * c1b for i in range(2)]
    v2 = [alpha[i] * c2a + beta[i] * c2b for i in range(2)]
    denom = (F2 * F2 * D).reciprocal()
    o1, o2 = _outer(v1, v1), _outer(v2, v2)
    torus = [[(o1[i][k] + o2[i][k]) * denom for k in range(2)] for i in range(2)]
    conformal = D / (4 * F2 * F2 * rho2 * rho2)
    jets = _assemble(conformal, torus)
    branch = Branch.PositiveBranch
    if D.value < 0:
        jets = _scale_matrix(jets, -1.0)
        branch = Branch.NegativeBranch
    return MetricSample((rho_v, eta_v), jets, branch)


def joyce_metric_g0(A0: Jet, A1: Jet, B0: Jet, B1: Jet, p, tol: float = 1e-12) -> MetricSample:
    """Metric attached to a pencil of Joyce solutions.

    ``g0 = det * (drho^2 + deta^2)/rho^2
          + [(A0 dphi - B0 dpsi)^2 + (A1 dphi - B1 dpsi)^2] / det``
    with ``det = A0 B1 - A1 B0``.
    """
    rho_v, eta_v = _point_tuple(p)
    order = min(j.order for j in (A0, A1, B0, B1))
    rho = Jet.seed((rho_v, eta_v), order)[0]
    det = A0 * B1 - A1 * B0
    size = max(abs(float(x.value)) for x in (A0, A1, B0, B1)) ** 2
    if abs(det.value) <= tol * max(size, 1e-300):
        raise DegenerateAtPoint("degenerate Joyce pencil")
    inv = det.reciprocal()
    u = (A0, -B0)
    v = (A1, -B1)
    torus = [[(u[i] * u[k] + v[i] * v[k]) * inv for k in range(2)] for i in range(2)]
    conformal = det / (rho * rho)
    return MetricSample((rho_v, eta_v), _assemble(conformal, torus))


def canonical_pencil(spec: MultipoleSpec, p) -> tuple[Jet, Jet, Jet, Jet]:
    """``A = grad G`` with ``G = sqrt(rho) F`` and the second solution ``B``."""
    rho_v, eta_v = _point_tuple(p)
    rho, eta = Jet.seed((rho_v, eta_v), 3)
    G = rho.sqrt() * eval_F(spec, (rho_v, eta_v))
    A0, A1 = G.diff(0), G.diff(1)
    r, e, G2 = rho.truncate(2), eta.truncate(2), G.truncate(2)
    B0 = r * A1 - e * A0
    B1 = G2 - r * A0 - e * A1
    return A0, A1, B0, B1


def sfk_metric(spec: MultipoleSpec, p) -> MetricSample:
    """Scalar-flat Kahler metric ``rho * g0`` of the canonical pencil."""
    rho_v, eta_v = _point_tuple(p)
    g0 = joyce_metric_g0(*canonical_pencil(spec, p), p)
    rho = Jet.seed((rho_v, eta_v), 2)[0]
    return g0.scaled(rho)


def swap_torus(sample: MetricSample) -> MetricSample:
    """Exchange the roles of ``phi`` and ``psi``."""
    perm = (0, 1, 3, 2)
    jets = tuple(tuple(sample.component_jets[perm[a]][perm[b]] for b in range(4)) for a in range(4))
    return MetricSample(sample.point, jets, sample.signature_flag)


def reconstructed_einstein_metric(spec: MultipoleSpec, p) -> MetricSample:
    """``F^-2 g0`` of the canonical pencil, in the torus labelling of :func:`einstein_metric`.

    The pencil metric names the torus coordinates the other way round, so
    ``phi`` and ``psi`` are exchanged.  The branch sign is applied as in
    :func:`einstein_metric`.
    """
    rho_v, eta_v = _point_tuple(p)
    F = eval_F(spec, (rho_v, eta_v)).truncate(2)
    A0, A1, B0, B1 = canonical_pencil(spec, p)
    g0 = joyce_metric_g0(A0, A1, B0, B1, p)
    sign = 1.0 if (A0 * B1 - A1 * B0).value > 0 else -1.0
    out = swap_torus(g0.scaled((F * F).reciprocal() * sign))
    branch = Branch.PositiveBranch if sign > 0 else Branch.NegativeBranch
    return MetricSample(out.point, out.component_jets, branch)
