"""Three-pole eigenfunctions: Type I/II families, moduli regions, closed forms.

A 3-pole solution normalised by ``SL(W)`` reads::

    F = a/sqrt(rho) + (b + c/m)/2 |(1, -m)| + (b - c/m)/2 |(1, m)|

with ``m = 1`` (Type II) or ``m = i`` (Type I).  In the coordinates
``rho = sqrt(R^2 -+ 1) cos(theta)``, ``eta = R sin(theta)`` (upper sign Type I)
one has ``sqrt(rho) F = a + b R + c sin(theta)``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np

from .eigenfunction import CLASSIFY_TOL, ConjugatePair, MultipoleSpec, PointClass, RealPole, classify_values
from .hyperbolic import HalfPlanePoint, InvalidInput, Twistor, twistor_det
from .jets import Jet
from .metric import COORDS, DegenerateAtPoint, MetricSample, _assemble

RS_COORDS = ("R", "S") + COORDS[2:]


class Kind(enum.Enum):
    TypeI = "TypeI"
    TypeII = "TypeII"


@dataclass(frozen=True)
class ThreePoleParams:
    a: float
    b: float
    c: float
    kind: Kind = Kind.TypeII

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", Kind(self.kind))
        if self.b == 0 and self.c == 0:
            raise InvalidInput("b and c both vanish: at most a single pole remains")
        if self.kind is Kind.TypeII and self.a == 0:
            raise InvalidInput("a = 0 leaves a dipole")

    def sheet(self, R: float) -> tuple["ThreePoleParams", float]:
        """Parameters and sign of ``theta`` for evaluation on the sheet of ``R``.

        The ``R < 0`` sheet of a Type I solution is the ``R > 0`` sheet of
        ``(a, -b, -c)`` with ``theta`` reflected.
        """
        if self.kind is Kind.TypeI and R < 0:
            return ThreePoleParams(self.a, -self.b, -self.c, self.kind), -1.0
        return self, 1.0


def _check_theta(theta):
    if not np.all(np.abs(np.asarray(theta)) < np.pi / 2):
        raise InvalidInput("theta must lie in (-pi/2, pi/2)")


def eh_coords(params: ThreePoleParams, R: float, theta: float) -> HalfPlanePoint:
    """Half-plane point of the Eguchi-Hanson-like coordinates ``(R, theta)``.

    For Type I with ``R < 0`` the returned point is where the other sheet
    is evaluated; see :meth:`ThreePoleParams.sheet`.
    """
    _check_theta(theta)
    if params.kind is Kind.TypeII:
        if not R > 1:
            raise InvalidInput("Type II needs R > 1")
        rho = np.sqrt(R * R - 1) * np.cos(theta)
    else:
        if R == 0:
            raise InvalidInput("R = 0 is the branch cut")
        rho = np.sqrt(R * R + 1) * np.cos(theta)
    return HalfPlanePoint(float(rho), float(R * np.sin(theta)))


def eh_point_and_spec(params: ThreePoleParams, R: float, theta: float):
    """``(point, spec)`` evaluating the solution on the sheet containing ``R``."""
    sheet_params, flip = params.sheet(R)
    return eh_coords(params, abs(R) if params.kind is Kind.TypeI else R, flip * theta), \
        threepole_spec(sheet_params)


def configuration_twistors(params: ThreePoleParams) -> tuple[Twistor, Twistor, Twistor]:
    """Signed real twistors of a Type II configuration (coefficient times direction)."""
    if params.kind is not Kind.TypeII:
        raise InvalidInput("only Type II configurations are real")
    a, b, c = params.a, params.b, params.c
    return Twistor(0.0, a), Twistor((b + c) / 2, -(b + c) / 2), Twistor((b - c) / 2, (b - c) / 2)


def threepole_spec(params: ThreePoleParams) -> MultipoleSpec:
    a, b, c = params.a, params.b, params.c
    label = f"{params.kind.value}({a:g},{b:g},{c:g})"
    terms = []
    if a != 0:
        terms.append(RealPole(Twistor(0.0, abs(a)), 1 if a > 0 else -1))
    if params.kind is Kind.TypeII:
        for coef, direction in (((b + c) / 2, (1.0, -1.0)), ((b - c) / 2, (1.0, 1.0))):
            if coef != 0:
                terms.append(RealPole(Twistor(abs(coef) * direction[0], abs(coef) * direction[1]),
                                      1 if coef > 0 else -1))
    else:
        # pole pair at eta = -i, +i with weights (b -+ i c)/2
        terms.append(ConjugatePair(Twistor(1.0, 0.0), Twistor(0.0, -1.0), complex(b, -c) / 2))
    return MultipoleSpec(tuple(terms), label)


def sqrt_rho_F(params: ThreePoleParams, R, S):
    return params.a + params.b * R + params.c * S


def discriminant_closed_form(params: ThreePoleParams, R, S):
    """``D / (4 rho)`` in terms of ``(R, S = sin(theta))``."""
    a, b, c = params.a, params.b, params.c
    if params.kind is Kind.TypeII:
        return (b * (a * R + b) - c * (a * S + c)) / (R * R - S * S)
    return (b * (a * R - b) - c * (a * S + c)) / (R * R + S * S)


# ---------------------------------------------------------------------------
# Type I boundaries

def typeI_boundaries(b: float, c: float, theta) -> tuple:
    """``(R_inf, R_pm)``: zero of ``F`` and of the discriminant at fixed ``theta`` (``a = 1``)."""
    if b == 0:
        raise InvalidInput("b = 0 is the Bianchi VIII case; use typeI_b0_locus")
    s = np.sin(theta)
    return -(1 + c * s) / b, (b * b + c * c + c * s) / b


def typeI_b0_locus(c: float) -> tuple[str, float | None]:
    """For ``b = 0``: conformal infinity at ``sin(theta) = -1/c`` (c > 1) or singularity at ``-c`` (c < 1)."""
    if c > 1:
        return "ConformalInfinity", -1.0 / c
    if 0 < c < 1:
        return "Singular", -c
    if c == 1:
        return "Bergmann", None
    raise InvalidInput("expected c > 0")


# ---------------------------------------------------------------------------
# Type II moduli regions

class RegionKind(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    BianchiVIIILine = "BianchiVIIILine"
    BianchiIXLine = "BianchiIXLine"
    DipoleLine = "DipoleLine"
    SpecialPoint = "SpecialPoint"
    Unclassified = "Unclassified"


@dataclass(frozen=True)
class RegionLabel:
    kind: RegionKind
    name: str | None = None

    def __str__(self):
        return f"{self.kind.value}({self.name})" if self.name else self.kind.value


SPECIAL_POINTS = {(1.0, 0.0): "FubiniStudy", (0.0, 1.0): "Bergmann",
                  (0.0, -1.0): "Bergmann", (-1.0, 0.0): "Bergmann"}
LINE_TOL = 1e-12


@dataclass(frozen=True)
class SignScan:
    """Sign content of ``F`` and ``D`` over a Type II ``(R, S)`` grid."""
    F_positive: bool
    F_negative: bool
    D_positive: bool
    D_negative: bool
    classes: np.ndarray

    @property
    def has_conformal_infinity(self) -> bool:
        return self.F_positive and self.F_negative

    @property
    def has_singularity(self) -> bool:
        return self.D_positive and self.D_negative


def rs_grid(n: int = 200):
    """Grid over ``R = 1/u`` in ``(1, inf)`` and ``S`` in ``(-1, 1)``.

    Nodes cluster towards the boundary, where the marked points sit and
    small domains appear near the region walls.
    """
    t = (np.arange(n) + 0.5) / n
    R = 2.0 / (1 - np.cos(np.pi * t))
    S = -np.cos(np.pi * t)
    return np.meshgrid(R, S, indexing="ij")


def sign_scan(b: float, c: float, n: int = 200, tol: float = CLASSIFY_TOL) -> SignScan:
    """Classify every grid cell with the eigenfunction banding and collect signs."""
    from .eigenfunction import discriminant_jet, eval_F, local_scale

    params = ThreePoleParams(1.0, b, c, Kind.TypeII)
    spec = threepole_spec(params)
    R, S = rs_grid(n)
    rho = np.sqrt(R * R - 1) * np.sqrt(1 - S * S)
    eta = R * S
    F = eval_F(spec, (rho.ravel(), eta.ravel()), order=1)
    D = discriminant_jet(F, Jet.seed((rho.ravel(), eta.ravel()), 1)[0]).value
    scale = local_scale(spec, (rho.ravel(), eta.ravel()))
    classes = classify_values(F.value, D, scale, tol).reshape(R.shape)
    Fv, Dv = F.value, D
    big = np.abs(Fv) > tol * scale
    bigD = np.abs(Dv) > tol * scale ** 2
    return SignScan(bool(np.any(big & (Fv > 0))), bool(np.any(big & (Fv < 0))),
                    bool(np.any(bigD & (Dv > 0))), bool(np.any(bigD & (Dv < 0))), classes)


def region_class(scan: SignScan) -> RegionLabel:
    """Open-stratum type from the sign content of a scan."""
    inf, sing = scan.has_conformal_infinity, scan.has_singularity
    if not inf and not sing and scan.D_positive:
        return RegionLabel(RegionKind.A)
    if sing and not inf:
        return RegionLabel(RegionKind.B)
    if inf and not sing and scan.D_negative:
        return RegionLabel(RegionKind.C)
    if inf and sing:
        return RegionLabel(RegionKind.D)
    return RegionLabel(RegionKind.Unclassified)


def _on_segment(b, c, start, end, tol):
    p, q, r = np.array([b, c]), np.array(start), np.array(end)
    d = r - q
    t = (p - q) @ d / (d @ d)
    return -tol <= t <= 1 + tol and np.linalg.norm(q + t * d - p) <= tol


def typeII_region(b: float, c: float, n: int = 200, tol: float = LINE_TOL) -> RegionLabel:
    """Stratum of the ``(b, c)`` plane (``a = 1``) for Type II solutions."""
    for (pb, pc), name in SPECIAL_POINTS.items():
        if abs(b - pb) <= tol and abs(c - pc) <= tol:
            return RegionLabel(RegionKind.SpecialPoint, name)
    if abs(b) <= tol or abs(b + c + 1) <= tol or abs(b - c + 1) <= tol:
        return RegionLabel(RegionKind.BianchiVIIILine)
    if abs(b - c) <= tol or abs(b + c) <= tol:
        return RegionLabel(RegionKind.DipoleLine)
    for other in ((0.0, 1.0), (0.0, -1.0), (-1.0, 0.0)):
        if _on_segment(b, c, (1.0, 0.0), other, tol):
            return RegionLabel(RegionKind.BianchiIXLine)
    return region_class(sign_scan(b, c, n))


def dipole_line_geometry(b: float, c: float) -> str:
    """On ``b = +-c``: hyperbolic for ``b < 0``, spherical for ``b > 0``."""
    if abs(abs(b) - abs(c)) > LINE_TOL:
        raise InvalidInput("not on a dipole line")
    return "hyperbolic" if b < 0 else "spherical"


def crux_solution(b: float, c: float) -> tuple[float, float, bool]:
    """Common zero of ``F`` and ``D`` in ``(R, S)`` and whether it lies in the Type II domain."""
    if b == 0 or c == 0:
        raise InvalidInput("b and c must be nonzero")
    R = -(1 + b * b - c * c) / (2 * b)
    S = -(1 - b * b + c * c) / (2 * c)
    return R, S, bool(R > 1 and -1 < S < 1)


def crux_identity_residual(b: float, c: float) -> float:
    R, S, _ = crux_solution(b, c)
    return abs(b * b * (R * R - 1) - c * c * (S * S - 1))


# ---------------------------------------------------------------------------
# rational metric and Kahler structure in (R, S, phi, psi)

def _rs_parts(a, b, c, R, S, order=3):
    Rj, Sj = Jet.seed((float(R), float(S)), order)
    L = a + b * Rj + c * Sj
    N = b * b - c * c + a * (b * Rj - c * Sj)
    return Rj, Sj, L, N


def _check_rs_domain(a, b, c, R, S):
    if not (R > 1 and -1 < S < 1):
        raise InvalidInput("(R, S) must lie in (1, inf) x (-1, 1)")
    L = a + b * R + c * S
    N = b * b - c * c + a * (b * R - c * S)
    if abs(L) <= CLASSIFY_TOL * (abs(a) + abs(b * R) + abs(c * S)):
        raise DegenerateAtPoint("a + bR + cS vanishes")
    if abs(N) <= CLASSIFY_TOL * (b * b + c * c + abs(a) * (abs(b * R) + abs(c * S))):
        raise DegenerateAtPoint("b^2 - c^2 + a(bR - cS) vanishes")


def rs_metric(a: float, b: float, c: float, R: float, S: float) -> MetricSample:
    """The rational Type II Einstein metric in coordinates ``(R, S, phi, psi)``."""
    _check_rs_domain(a, b, c, R, S)
    Rj, Sj, L, N = _rs_parts(a, b, c, R, S)
    R2m1, S2m1 = Rj * Rj - 1, 1 - Sj * Sj
    diff = Rj * Rj - Sj * Sj
    base = N / (L * L)
    torus_scale = (L * L * N * diff).reciprocal()
    u = (b * Rj - c * Sj, c * Rj - b * Sj)
    v = (b * R2m1 * Sj + c * S2m1 * Rj, c * R2m1 * Sj + b * S2m1 * Rj + a * diff)
    w = R2m1 * S2m1
    torus = [[(w * u[i] * u[k] + v[i] * v[k]) * torus_scale for k in range(2)] for i in range(2)]
    rows = [list(r) for r in _assemble(base, torus)]
    rows[0][0] = base / R2m1
    rows[1][1] = base / S2m1
    return MetricSample((float(R), float(S)), tuple(tuple(r) for r in rows))


def rs_jacobian(R: float, S: float) -> np.ndarray:
    """``d(rho, eta)/d(R, S)`` for ``rho = sqrt(R^2-1) sqrt(1-S^2)``, ``eta = R S``."""
    a, s = np.sqrt(R * R - 1), np.sqrt(1 - S * S)
    return np.array([[R * s / a, -S * a / s], [S, R]])


def einstein_metric_in_rs(a: float, b: float, c: float, R: float, S: float) -> np.ndarray:
    """Components of ``einstein_metric`` pulled back to ``(R, S, phi, psi)``.

    The rational formula labels the torus so that its ``(phi, psi)`` are
    ``(psi, -phi)`` of :func:`sdtorus.metric.einstein_metric`.  It is also
    the unnegated expression, negative definite where ``D < 0``, so the
    branch sign is undone here.
    """
    from .metric import Branch, einstein_metric

    params = ThreePoleParams(a, b, c, Kind.TypeII)
    p = (np.sqrt(R * R - 1) * np.sqrt(1 - S * S), R * S)
    sample = einstein_metric(threepole_spec(params), p)
    g = sample.components
    if sample.signature_flag is Branch.NegativeBranch:
        g = -g
    T = np.zeros((4, 4))
    T[:2, :2] = rs_jacobian(R, S)
    T[3, 2] = 1.0   # d/dphi_rs = d/dpsi
    T[2, 3] = -1.0  # d/dpsi_rs = -d/dphi
    return T.T @ g @ T


@dataclass(frozen=True)
class KahlerData:
    conformal_factor: Jet
    metric: MetricSample
    kahler_form: tuple   # 4x4 nested jets, antisymmetric, (R, S, phi, psi)
    mu_phi: Jet
    mu_psi: Jet

    def kahler_form_values(self) -> np.ndarray:
        from .metric import jet_matrix_values
        return jet_matrix_values(self.kahler_form)


def kahler_data(a: float, b: float, c: float, R: float, S: float) -> KahlerData:
    """Conformal Kahler metric, Kahler form and torus momentum maps at ``(R, S)``."""
    g = rs_metric(a, b, c, R, S)
    Rj, Sj, L, N = _rs_parts(a, b, c, R, S)
    factor = (L * L) * (N * N).reciprocal()
    inv_N2 = (N * N).reciprocal()
    # Omega = N^-2 (dphi ^ (b dR - c dS) + dpsi ^ ((c + a S) dR - (b + a R) dS))
    zero = None
    omega = [[zero] * 4 for _ in range(4)]

    def put(i, k, val):
        omega[i][k] = val
        omega[k][i] = val * -1.0

    put(2, 0, inv_N2 * b)
    put(2, 1, inv_N2 * (-c))
    put(3, 0, (c + a * Sj) * inv_N2)
    put(3, 1, (b + a * Rj) * inv_N2 * -1.0)
    mu_phi = (b * Rj - c * Sj) * N.reciprocal()
    mu_psi = (c * Rj - b * Sj) * N.reciprocal()
    return KahlerData(factor, g.scaled(factor), tuple(tuple(r) for r in omega), mu_phi, mu_psi)


def _form_values_and_grad(form):
    vals = np.zeros((4, 4))
    grad = np.zeros((4, 4, 4))  # grad[c, i, k] = d_c form_ik
    for i in range(4):
        for k in range(4):
            if form[i][k] is not None:
                vals[i, k] = float(form[i][k].value)
                grad[:2, i, k] = form[i][k].grad()
    return vals, grad


def exterior_derivative_norm(form) -> float:
    """Largest component of ``d Omega`` relative to ``|Omega| + |d Omega| terms``."""
    vals, grad = _form_values_and_grad(form)
    worst = 0.0
    for i, j, k in itertools.combinations(range(4), 3):
        d = grad[i, j, k] + grad[j, k, i] + grad[k, i, j]
        worst = max(worst, abs(d))
    return worst / max(np.max(np.abs(grad)), 1e-300)


def complex_structure(kd: KahlerData, normalization: float = 1.0) -> np.ndarray:
    """``J^a_b = c g^{ac} Omega_{cb}`` with a global ``normalization``."""
    g = kd.metric.components
    return normalization * np.linalg.solve(g, kd.kahler_form_values())


def fit_kahler_normalization(kd: KahlerData) -> float:
    """Constant making ``J^2 = -1``: ``sqrt(-4 / tr((g^-1 Omega)^2))``."""
    J0 = complex_structure(kd)
    tr = np.trace(J0 @ J0)
    if not tr < 0:
        raise DegenerateAtPoint("g^-1 Omega has no complex-structure normalization here")
    return float(np.sqrt(-4.0 / tr))


def complex_structure_jets(kd: KahlerData, normalization: float):
    """``J`` as a 4x4 nested tuple of jets (for covariant differentiation)."""
    g = kd.metric.component_jets
    block = [[g[i][k] for k in range(2)] for i in range(2)]
    torus = [[g[2 + i][2 + k] for k in range(2)] for i in range(2)]

    def inv2(m):
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        inv = det.reciprocal()
        return [[m[1][1] * inv, m[0][1] * inv * -1.0], [m[1][0] * inv * -1.0, m[0][0] * inv]]

    # the RS metric has no (R,S)-torus cross terms and diagonal (R,S) block
    ginv = [[None] * 4 for _ in range(4)]
    ginv[0][0] = block[0][0].reciprocal()
    ginv[1][1] = block[1][1].reciprocal()
    tinv = inv2(torus)
    for i in range(2):
        for k in range(2):
            ginv[2 + i][2 + k] = tinv[i][k]
    out = [[None] * 4 for _ in range(4)]
    om = kd.kahler_form
    for i in range(4):
        for k in range(4):
            total = None
            for m in range(4):
                if ginv[i][m] is None or om[m][k] is None:
                    continue
                term = ginv[i][m] * om[m][k]
                total = term if total is None else total + term
            out[i][k] = None if total is None else total * normalization
    return tuple(tuple(r) for r in out)


def nabla_J_norm(a: float, b: float, c: float, R: float, S: float) -> float:
    """``max |nabla J|`` for the normalised complex structure of the Kahler metric."""
    from .curvature import covariant_derivative

    kd = kahler_data(a, b, c, R, S)
    norm = fit_kahler_normalization(kd)
    nab = covariant_derivative(lambda p: kahler_data(a, b, c, *p).metric,
                               lambda p: complex_structure_jets(kd, norm), (R, S))
    return float(np.max(np.abs(nab)))


def momentum_constants(kd: KahlerData) -> tuple[np.ndarray, np.ndarray]:
    """Ratios of ``d mu_K`` to ``-iota_K Omega`` on the ``(R, S)`` components, for ``K = phi, psi``.

    Components where ``iota_K Omega`` vanishes identically come back as nan.
    """
    om = kd.kahler_form_values()
    out = []
    for mu, idx in ((kd.mu_phi, 2), (kd.mu_psi, 3)):
        dmu = mu.grad()
        iota = om[idx, :2]
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = dmu / (-iota)
        out.append(np.where(iota == 0, np.nan, ratio))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Bryant polynomial

@dataclass(frozen=True)
class BryantData:
    z: tuple
    roots: np.ndarray
    coefficients: np.ndarray   # monic, highest degree first


def bryant_poly(phi1: Twistor, phi2: Twistor, phi3: Twistor) -> BryantData:
    """Quartic whose roots are built from the pairwise determinants of three twistors."""
    z1, z2, z3 = twistor_det(phi2, phi3), twistor_det(phi3, phi1), twistor_det(phi1, phi2)
    sizes = [np.hypot(p.a, p.b) for p in (phi1, phi2, phi3)]
    for z, (s, t) in zip((z1, z2, z3), ((1, 2), (2, 0), (0, 1))):
        if abs(z) <= 1e-12 * sizes[s] * sizes[t]:
            raise InvalidInput("twistors must be pairwise independent")
    roots = 0.5 * np.array([z1 + z2 + z3, z1 - z2 - z3, -z1 + z2 - z3, -z1 - z2 + z3])
    return BryantData((z1, z2, z3), roots, np.poly(roots))


def product_form_roots(a: float, b: float, c: float) -> np.ndarray:
    """Roots of the product form ``p(y)`` written in terms of ``(a, b, c)``."""
    return np.array([2 * a * b + b * b - c * c, -2 * a * b + b * b - c * c,
                     2 * a * c - b * b + c * c, -2 * a * c - b * b + c * c])


def fit_root_scale(roots: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    """Least-squares ``lambda`` with ``roots ~ lambda * target`` over all matchings.

    Returns ``(lambda, relative residual)`` for the best permutation.
    """
    best = (np.nan, np.inf)
    tnorm = max(np.linalg.norm(target), 1e-300)
    for perm in itertools.permutations(range(4)):
        t = target[list(perm)]
        lam = float(roots @ t / (t @ t))
        res = float(np.linalg.norm(roots - lam * t) / tnorm)
        if res < best[1]:
            best = (lam, res)
    return best
