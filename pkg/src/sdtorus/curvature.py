"""Levi-Civita curvature of metrics whose components are jets in two variables.

Conventions: ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
with components ``R(d_c, d_d) d_b = R^a_bcd d_a`` and ``Ric_bd = R^a_bad``, so
the round sphere has positive Ricci curvature.  The orientation is the
coordinate order, e.g. ``drho ^ deta ^ dphi ^ dpsi``.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .jets import Jet
from .metric import Branch, MetricSample

MetricField = Callable[[tuple], MetricSample]


class DegenerateMetric(ValueError):
    pass


@dataclass(frozen=True)
class CurvatureReport:
    lambda_hat: float
    einstein_residual: float
    scalar_curv: float
    weyl_plus_norm: float
    weyl_minus_norm: float
    weyl_full_norm: float
    twist_scalars: tuple
    metric_norm: float = 1.0
    christoffel_fd_error: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["twist_scalars"] = list(self.twist_scalars)
        return d


@dataclass(frozen=True)
class Geometry:
    """Pointwise curvature arrays, all in coordinate components."""

    g: np.ndarray
    ginv: np.ndarray
    christoffel: np.ndarray  # Gamma[a, b, c] = Gamma^a_bc
    riemann: np.ndarray  # R[a, b, c, d] = R^a_bcd
    ricci: np.ndarray
    scalar: float


# ---------------------------------------------------------------------------
# core tensor algebra

def christoffel_from(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(g)
    # lowered[d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    low = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    return 0.5 * np.einsum("ad,dbc->abc", ginv, low)


def christoffel_derivative(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """``dGamma[e, a, b, c] = d_e Gamma^a_bc``."""
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("ap,epq,qd->ead", ginv, dg, ginv)
    low = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    dlow = (np.einsum("ebdc->edbc", ddg) + np.einsum("ecdb->edbc", ddg) - ddg)
    return 0.5 * (np.einsum("ead,dbc->eabc", dginv, low) + np.einsum("ad,edbc->eabc", ginv, dlow))


def riemann_from(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    # R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    term1 = np.einsum("cadb->abcd", dgamma)
    term2 = np.einsum("dacb->abcd", dgamma)
    term3 = np.einsum("ace,edb->abcd", gamma, gamma)
    term4 = np.einsum("ade,ecb->abcd", gamma, gamma)
    return term1 - term2 + term3 - term4


def geometry_from_arrays(g, dg, ddg) -> Geometry:
    g = np.asarray(g, dtype=float)
    if abs(np.linalg.det(g)) <= 1e-300:
        raise DegenerateMetric("metric is singular")
    ginv = np.linalg.inv(g)
    gamma = christoffel_from(g, dg)
    riem = riemann_from(gamma, christoffel_derivative(g, dg, ddg))
    ric = np.einsum("abad->bd", riem)
    return Geometry(g, ginv, gamma, riem, ric, float(np.einsum("bd,bd->", ginv, ric)))


def geometry(sample: MetricSample) -> Geometry:
    return geometry_from_arrays(sample.components, sample.first_derivatives(),
                                sample.second_derivatives())


def weyl_lowered(geo: Geometry) -> np.ndarray:
    g, ric, S = geo.g, geo.ricci, geo.scalar
    R = np.einsum("ae,ebcd->abcd", g, geo.riemann)
    kn = (np.einsum("ac,bd->abcd", g, ric) - np.einsum("ad,bc->abcd", g, ric)
          - np.einsum("bc,ad->abcd", g, ric) + np.einsum("bd,ac->abcd", g, ric))
    gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    return R - 0.5 * kn + (S / 6.0) * gg


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns form an oriented orthonormal frame (for ``g`` or ``-g``)."""
    for sign in (1.0, -1.0):
        try:
            L = np.linalg.cholesky(sign * g)
        except np.linalg.LinAlgError:
            continue
        return np.linalg.inv(L).T
    raise DegenerateMetric("metric is neither positive nor negative definite")


_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _two_form_basis():
    """Orthonormal selfdual and antiselfdual bases as vectors over ``_PAIRS``."""
    s = 1.0 / np.sqrt(2.0)

    def vec(entries):
        v = np.zeros(6)
        for pair, coef in entries:
            v[_PAIRS.index(pair)] = coef * s
        return v

    plus = np.stack([vec([((0, 1), 1), ((2, 3), 1)]),
                     vec([((0, 2), 1), ((1, 3), -1)]),
                     vec([((0, 3), 1), ((1, 2), 1)])], axis=1)
    minus = np.stack([vec([((0, 1), 1), ((2, 3), -1)]),
                      vec([((0, 2), 1), ((1, 3), 1)]),
                      vec([((0, 3), 1), ((1, 2), -1)])], axis=1)
    return plus, minus


SELFDUAL_BASIS, ANTISELFDUAL_BASIS = _two_form_basis()


def weyl_operator(geo: Geometry) -> np.ndarray:
    """Weyl tensor as a 6x6 matrix on 2-forms in an orthonormal frame."""
    V = orthonormal_frame(geo.g)
    W = np.einsum("abcd,ai,bj,ck,dl->ijkl", weyl_lowered(geo), V, V, V, V)
    return np.array([[W[i, j, k, l] for (k, l) in _PAIRS] for (i, j) in _PAIRS])


def weyl_halves(geo: Geometry) -> tuple[float, float, float]:
    Wm = weyl_operator(geo)
    wp = SELFDUAL_BASIS.T @ Wm @ SELFDUAL_BASIS
    wm = ANTISELFDUAL_BASIS.T @ Wm @ ANTISELFDUAL_BASIS
    return float(np.linalg.norm(wp)), float(np.linalg.norm(wm)), float(np.linalg.norm(Wm))


def levi_civita_symbol() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inv = sum(1 for i in range(4) for k in range(i + 1, 4) if perm[i] > perm[k])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


_EPS = levi_civita_symbol()


def hodge_star_2form(g: np.ndarray, omega: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(g)
    up = np.einsum("ae,bf,ef->ab", ginv, ginv, omega)
    return 0.5 * np.sqrt(abs(np.linalg.det(g))) * np.einsum("abcd,ab->cd", _EPS, up)


def twist_scalars(sample: MetricSample, k1: int = 2, k2: int = 3) -> tuple[float, float]:
    """``(*dK^flat)(K, K~)`` for the coordinate Killing fields ``d_k1, d_k2``."""
    g = sample.components
    dg = sample.first_derivatives()
    out = []
    for k in (k1, k2):
        # d(K^flat)_ab = d_a g_kb - d_b g_ka
        dk = dg[:, k, :] - dg[:, k, :].T
        out.append(float(hodge_star_2form(g, dk)[k1, k2]))
    return tuple(out)


# ---------------------------------------------------------------------------
# finite-difference cross-check

def christoffel_fd(metric_field: MetricField, p, h: float = 1e-4) -> np.ndarray:
    """Christoffel symbols from five-point central differences of the components."""
    p = np.asarray(p, dtype=float)
    g = metric_field(tuple(p)).components
    dg = np.zeros((4, 4, 4))
    for c in range(2):
        e = np.zeros(2)
        e[c] = h
        g1p = metric_field(tuple(p + e)).components
        g1m = metric_field(tuple(p - e)).components
        g2p = metric_field(tuple(p + 2 * e)).components
        g2m = metric_field(tuple(p - 2 * e)).components
        dg[c] = (8 * (g1p - g1m) - (g2p - g2m)) / (12 * h)
    return christoffel_from(g, dg)


# ---------------------------------------------------------------------------
# reports

def curvature_report(metric_field: MetricField, p, fd_check: bool = False) -> CurvatureReport:
    sample = metric_field(p)
    geo = geometry(sample)
    lam = geo.scalar / 4.0
    gnorm = float(np.max(np.abs(geo.g)))
    resid = float(np.max(np.abs(geo.ricci - lam * geo.g))) / gnorm
    wp, wm, wf = weyl_halves(geo)
    fd_err = None
    if fd_check:
        fd = christoffel_fd(metric_field, p)
        fd_err = float(np.max(np.abs(fd - geo.christoffel)) / max(np.max(np.abs(geo.christoffel)), 1e-300))
    return CurvatureReport(lam, resid, geo.scalar, wp, wm, wf, twist_scalars(sample), gnorm, fd_err)


def bianchi_residual(geo: Geometry) -> float:
    R = geo.riemann
    cyc = R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)
    return float(np.max(np.abs(cyc)) / max(np.max(np.abs(R)), 1e-300))


@dataclass
class EinsteinSummary:
    reports: list
    lambda_spread: float
    sign_consistent: bool
    max_residual: float
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def einstein_verify(spec, points: Sequence, residual_tol: float = 1e-7,
                    spread_tol: float = 1e-6) -> EinsteinSummary:
    """Curvature reports for ``einstein_metric(spec, .)`` with Einstein checks."""
    from .metric import einstein_metric

    reports, failures = [], []
    lams = {Branch.PositiveBranch: [], Branch.NegativeBranch: []}
    sign_ok = True
    for p in points:
        try:
            sample = einstein_metric(spec, p)
            rep = curvature_report(lambda q: einstein_metric(spec, q), p)
        except ValueError as exc:
            failures.append(f"{p}: {exc}")
            continue
        reports.append(rep)
        lams[sample.signature_flag].append(rep.lambda_hat)
        expected = 1.0 if sample.signature_flag is Branch.PositiveBranch else -1.0
        if np.sign(rep.scalar_curv) != expected:
            sign_ok = False
            failures.append(f"{p}: scalar curvature sign {rep.scalar_curv:+.3e} does not match branch")
        if rep.einstein_residual >= residual_tol:
            failures.append(f"{p}: einstein residual {rep.einstein_residual:.3e}")
    # lambda_hat is constant on each branch separately
    spreads = [float(np.ptp(v) / np.max(np.abs(v))) for v in map(np.asarray, lams.values()) if v.size]
    spread = max(spreads, default=float("nan"))
    if spreads and not spread < spread_tol:
        failures.append(f"lambda spread {spread:.3e}")
    max_res = max((r.einstein_residual for r in reports), default=float("nan"))
    return EinsteinSummary(reports, spread, sign_ok, max_res, failures)


# ---------------------------------------------------------------------------
# covariant derivatives

def _tensor_arrays(tensor) -> tuple[np.ndarray, np.ndarray]:
    T = np.zeros((4, 4))
    dT = np.zeros((4, 4, 4))
    for a in range(4):
        for b in range(4):
            t = tensor[a][b]
            if t is None:
                continue
            if isinstance(t, Jet):
                T[a, b] = float(t.value)
                dT[:2, a, b] = t.grad()
            else:
                T[a, b] = float(t)
    return T, dT


def covariant_derivative(metric_field: MetricField, tensor_field, p, kind: str = "mixed") -> np.ndarray:
    """``nabla_c T`` for a (1,1) tensor ``T^a_b`` (``kind='mixed'``) or a (0,2) tensor.

    ``tensor_field(p)`` returns 4x4 nested components (jets, numbers or None).
    Output index order is ``[c, a, b]``.
    """
    sample = metric_field(p)
    gamma = christoffel_from(sample.components, sample.first_derivatives())
    T, dT = _tensor_arrays(tensor_field(p))
    if kind == "mixed":
        return dT + np.einsum("ace,eb->cab", gamma, T) - np.einsum("ecb,ae->cab", gamma, T)
    if kind == "covariant":
        return dT - np.einsum("eca,eb->cab", gamma, T) - np.einsum("ecb,ae->cab", gamma, T)
    raise ValueError(f"unknown tensor kind {kind!r}")
