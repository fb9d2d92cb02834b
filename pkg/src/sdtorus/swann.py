"""Quaternionic frames, generalized Gibbons-Hawking data and the cone extension.

Quaternions are arrays ``[w, x, y, z]`` meaning ``w + x i + y j + z k`` with
``ij = k``.  Imaginary-quaternion-valued forms are stored with a trailing
quaternion axis of length 4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigenfunction import MultipoleSpec, RealPole, eval_F, F_jet, local_scale
from .hyperbolic import InvalidInput, Twistor, frame_vectors, hyperboloid_matrix, point_from_hyperboloid
from .jets import Jet, JetDomainError
from .metric import _point_tuple


class DegenerateInput(ValueError):
    pass


# ---------------------------------------------------------------------------
# quaternion algebra

def _structure_constants() -> np.ndarray:
    C = np.zeros((4, 4, 4))
    table = {
        (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
        (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
        (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
        (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
    }
    for (p, q), (r, s) in table.items():
        C[p, q, r] = s
    return C


QMUL = _structure_constants()
ONE, I, J, K = np.eye(4)


def qmul(x, y) -> np.ndarray:
    return np.einsum("pqr,...p,...q->...r", QMUL, np.asarray(x, float), np.asarray(y, float))


def qconj(x) -> np.ndarray:
    x = np.array(x, dtype=float)
    x[..., 1:] *= -1
    return x


def qnorm2(x) -> np.ndarray:
    return np.sum(np.asarray(x, float) ** 2, axis=-1)


@dataclass(frozen=True)
class ImQuat:
    i: float
    j: float
    k: float

    @classmethod
    def from_array(cls, x) -> "ImQuat":
        x = np.asarray(x, dtype=float)
        return cls(float(x[1]), float(x[2]), float(x[3]))

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.i, self.j, self.k])

    @property
    def quat(self) -> np.ndarray:
        return np.array([0.0, self.i, self.j, self.k])


# ---------------------------------------------------------------------------
# frames on the 4-manifold, coordinates (rho, eta, phi, psi)

def _one_form(rho_c=0.0, eta_c=0.0, phi_c=0.0, psi_c=0.0):
    return [rho_c, eta_c, phi_c, psi_c]


def _wedge(u, v):
    return [[u[a] * v[b] - u[b] * v[a] for b in range(4)] for a in range(4)]


def _lincomb(forms_and_coeffs, shape):
    """Sum ``coef * form`` over nested lists of jets/numbers."""
    def rec(items, depth):
        if depth == len(shape):
            total = 0.0
            for form, coef in items:
                total = total + form * coef
            return total
        return [rec([(f[i], c) for f, c in items], depth + 1) for i in range(shape[depth])]
    return rec(forms_and_coeffs, 0)


def _to_arrays(components, shape):
    """Values and first derivatives (``d_rho``, ``d_eta``) of nested jet lists."""
    val = np.zeros(shape)
    der = np.zeros((4,) + shape)
    for idx in np.ndindex(*shape):
        c = components
        for i in idx:
            c = c[i]
        if isinstance(c, Jet):
            val[idx] = float(c.value)
            if c.order >= 1:
                der[(slice(0, 2),) + idx] = c.grad()
        else:
            val[idx] = float(c)
    return val, der


@dataclass(frozen=True)
class QuaternionicFrames:
    theta: np.ndarray  # [a, b, quaternion]
    dtheta: np.ndarray  # [c, a, b, quaternion], d_c theta_ab
    omega: np.ndarray  # [a, quaternion]
    domega: np.ndarray  # [c, a, quaternion]


def _frame_jets(F: Jet, rho: Jet, eta: Jet):
    Fr, Fe = F.diff(0), F.diff(1)
    F2, r, e = F.truncate(2), rho.truncate(2), eta.truncate(2)
    sr = r.sqrt()
    one = Jet.constant(np.ones_like(r.value), 2, 2)
    zero = 0.0 * one
    alpha = _one_form(zero, zero, sr, zero)
    beta = _one_form(zero, zero, e / sr, one / sr)
    drho = _one_form(one, zero, zero, zero)
    deta = _one_form(zero, one, zero, zero)
    invF = F2.reciprocal()
    invF2 = invF * invF
    rFr, rFe = r * Fr, r * Fe

    # i-part of theta
    conf = (-0.25 * F2 * F2 + r * r * (Fr * Fr + Fe * Fe)) / (r * r)
    th_i = _lincomb([(_wedge(drho, deta), conf * invF2), (_wedge(alpha, beta), invF2)], (4, 4))
    # X = (rho F_r + i rho F_e)(alpha - i beta) - F/2 (alpha + i beta)
    Xr = _lincomb([(alpha, rFr - 0.5 * F2), (beta, rFe)], (4,))
    Xi = _lincomb([(alpha, rFe), (beta, -rFr - 0.5 * F2)], (4,))
    # X ^ (drho - i deta)/rho, then times j: real part -> j, imaginary part -> k
    inv_r = r.reciprocal() * invF2
    th_j = _lincomb([(_wedge(Xr, drho), inv_r), (_wedge(Xi, deta), inv_r)], (4, 4))
    th_k = _lincomb([(_wedge(Xi, drho), inv_r), (_wedge(Xr, deta), -1.0 * inv_r)], (4, 4))

    om_i = _lincomb([(drho, -1.0 * Fe * invF), (deta, (0.5 * F2 + rFr) * invF / r)], (4,))
    om_j = _lincomb([(alpha, -1.0 * invF)], (4,))
    om_k = _lincomb([(beta, invF)], (4,))
    theta = [[[zero, th_i[a][b], th_j[a][b], th_k[a][b]] for b in range(4)] for a in range(4)]
    omega = [[zero, om_i[a], om_j[a], om_k[a]] for a in range(4)]
    return theta, omega


def quaternionic_frames(spec: MultipoleSpec, p, F_override=None) -> QuaternionicFrames:
    """``Theta`` (frame of the antiselfdual 2-forms) and the connection ``omega``.

    ``F_override(rho_jet, eta_jet)`` replaces the eigenfunction, which is used
    for negative controls.
    """
    pt = _point_tuple(p)
    rho, eta = Jet.seed(pt, 3)
    F = F_jet(spec, rho, eta) if F_override is None else F_override(rho, eta)
    if abs(F.value) < 1e-9 * float(local_scale(spec, pt)):
        raise DegenerateInput(f"F vanishes at {p}")
    theta, omega = _frame_jets(F, rho, eta)
    th, dth = _to_arrays(theta, (4, 4, 4))
    om, dom = _to_arrays(omega, (4, 4))
    return QuaternionicFrames(th, dth, om, dom)


def omega_on(frames: QuaternionicFrames, vector) -> np.ndarray:
    return np.einsum("a,aq->q", np.asarray(vector, float), frames.omega)


@dataclass(frozen=True)
class StructureResiduals:
    r_theta: float
    r_omega: float
    s: float


# The frame rotates under the adjoint action ad_u x = 2 u x x of Im H, so the
# structure equations hold for the rescaled connection -omega/2.
CONNECTION_SCALE = -0.5


def _structure_terms(fr: QuaternionicFrames, scale: float = CONNECTION_SCALE):
    T, dT = fr.theta, fr.dtheta
    W, dW = scale * fr.omega, scale * fr.domega
    d_theta = dT + np.einsum("bcaq->abcq", dT) + np.einsum("cabq->abcq", dT)
    wT = np.einsum("pqr,ap,bcq->abcr", QMUL, W, T)
    w_wedge_T = wT + np.einsum("bcar->abcr", wT) + np.einsum("cabr->abcr", wT)
    Tw = np.einsum("pqr,bcp,aq->abcr", QMUL, T, W)
    T_wedge_w = Tw + np.einsum("bcar->abcr", Tw) + np.einsum("cabr->abcr", Tw)
    d_omega = dW - np.einsum("bac->abc", dW)
    ww = np.einsum("pqr,ap,bq->abr", QMUL, W, W)
    w_wedge_w = ww - np.einsum("bar->abr", ww)
    return d_theta, w_wedge_T, T_wedge_w, d_omega, w_wedge_w


def fit_s(frames: QuaternionicFrames, scale: float = CONNECTION_SCALE) -> float:
    _, _, _, d_omega, w_wedge_w = _structure_terms(frames, scale)
    X = d_omega - w_wedge_w
    T = frames.theta
    return float(-np.sum(X * T) / np.sum(T * T))


def structure_residuals(spec: MultipoleSpec, p, s: float | None = None,
                        F_override=None, scale: float = CONNECTION_SCALE) -> StructureResiduals:
    """Residuals of ``dTheta - w^Theta + Theta^w = 0`` and
    ``dw - w^w + s Theta = 0`` for ``w = scale * omega``, each relative to
    its term sizes.

    ``s`` is fitted by least squares when not given.
    """
    fr = quaternionic_frames(spec, p, F_override)
    d_theta, wT, Tw, d_omega, ww = _structure_terms(fr, scale)
    if s is None:
        s = fit_s(fr, scale)
    r1 = d_theta - wT + Tw
    r2 = d_omega - ww + s * fr.theta
    n = np.linalg.norm
    size1 = n(d_theta) + n(wT) + n(Tw)
    size2 = n(d_omega) + n(ww) + abs(s) * n(fr.theta)
    return StructureResiduals(float(n(r1) / size1), float(n(r2) / size2), float(s))


class StructureChecker:
    """Fits ``s`` at the first point and reuses it afterwards."""

    def __init__(self, spec: MultipoleSpec, F_override=None):
        self.spec = spec
        self.F_override = F_override
        self.s: float | None = None

    def __call__(self, p) -> StructureResiduals:
        res = structure_residuals(self.spec, p, self.s, self.F_override)
        if self.s is None:
            self.s = res.s
        return res


# ---------------------------------------------------------------------------
# generalized Gibbons-Hawking data

def _F_first(spec, p):
    F = eval_F(spec, _point_tuple(p), order=1)
    return float(F.value), float(F.partial((1, 0))), float(F.partial((0, 1)))


def frame_matrix(F: float, Fr: float, Fe: float, rho: float) -> np.ndarray:
    """``[[F/2 + rho F_r, rho F_e], [rho F_e, F/2 - rho F_r]]``."""
    return np.array([[0.5 * F + rho * Fr, rho * Fe], [rho * Fe, 0.5 * F - rho * Fr]])


def monopole_matrix(spec: MultipoleSpec, p, qnorm2: float) -> np.ndarray:
    if not qnorm2 > 0:
        raise InvalidInput("qnorm2 must be positive")
    rho, _ = _point_tuple(p)
    F, Fr, Fe = _F_first(spec, p)
    return (F / qnorm2) * frame_matrix(F, Fr, Fe, rho)


def momentum_maps(spec: MultipoleSpec, p, q) -> tuple[ImQuat, ImQuat]:
    """Momentum maps ``(x_psi, x_phi)`` of the two Killing fields."""
    q = np.asarray(q, dtype=float)
    if not qnorm2(q) > 0:
        raise InvalidInput("q must be nonzero")
    rho, eta = _point_tuple(p)
    F = float(eval_F(spec, (rho, eta), order=0).value)
    if F == 0:
        raise DegenerateInput("F vanishes")
    scale = 1.0 / (np.sqrt(rho) * F)
    qb = qconj(q)
    x_psi = qmul(qmul(q, K), qb) * scale
    inner = qmul(eta * ONE + rho * I, K)
    x_phi = qmul(qmul(q, inner), qb) * scale
    return ImQuat.from_array(x_psi), ImQuat.from_array(x_phi)


def grammian_check(x1: ImQuat, x2: ImQuat, tol: float = 1e-12) -> np.ndarray:
    """Gram matrix of ``(x1, x2)`` divided by ``|x1 ^ x2|``."""
    u, v = x1.vec, x2.vec
    gram = np.array([[u @ u, u @ v], [u @ v, v @ v]])
    wedge = np.linalg.norm(np.cross(u, v))
    if wedge <= tol * np.linalg.norm(u) * np.linalg.norm(v):
        raise DegenerateInput("momentum maps are linearly dependent")
    return gram / wedge


def bielawski_dancer_matrix(twistors, x1: ImQuat, x2: ImQuat, signs=None) -> np.ndarray:
    """``sum_k alpha_k alpha_k^T / r_k`` with ``alpha_k = (b_k, -a_k)``.

    ``r_k = |b_k x1 - a_k x2|``; optional ``signs`` weight the summands.
    """
    signs = signs or [1] * len(twistors)
    out = np.zeros((2, 2))
    for phi, sgn in zip(twistors, signs):
        alpha = np.array([phi.b, -phi.a])
        r = np.linalg.norm(phi.b * x1.vec - phi.a * x2.vec)
        if r <= 1e-14 * (np.linalg.norm(x1.vec) + np.linalg.norm(x2.vec)):
            raise DegenerateInput(f"point lies on the axis of {phi}")
        out += sgn * np.outer(alpha, alpha) / r
    return out


def killing_frame_change(p) -> np.ndarray:
    """Rows: the frame dual to ``(alpha, beta)`` in ``(d_psi, d_phi)`` components."""
    rho, eta = _point_tuple(p)
    s = np.sqrt(rho)
    return np.array([[-eta / s, 1.0 / s], [s, 0.0]])


def monopole_matrix_killing_basis(spec: MultipoleSpec, p, qnorm2: float) -> np.ndarray:
    """The monopole matrix re-expressed in the ``(d_psi, d_phi)`` basis.

    It is a symmetric square of Killing fields given in the frame dual to
    ``(alpha, beta)``, so it transforms as ``P^T M P``.  The multipole is
    normalized to ``F > 0`` as in :func:`bd_for_spec`.
    """
    if _F_first(spec, p)[0] < 0:
        spec = spec.negated()
    P = killing_frame_change(p)
    return P.T @ monopole_matrix(spec, p, qnorm2) @ P


def bd_for_spec(spec: MultipoleSpec, p, q, normalize: bool = True) -> np.ndarray:
    """Bielawski-Dancer matrix of a real multipole spec at the momentum maps.

    With ``normalize`` the multipole is replaced by its negative where ``F < 0``
    (same metric), which is where the identity with the monopole matrix holds.
    """
    if spec.has_conjugate_pairs or spec.is_perturbed:
        raise InvalidInput("only real pole terms have a torus-quotient description")
    if normalize and _F_first(spec, p)[0] < 0:
        spec = spec.negated()
    x_psi, x_phi = momentum_maps(spec, p, q)
    terms = [t for t in spec.terms if isinstance(t, RealPole)]
    return bielawski_dancer_matrix([t.phi for t in terms], x_psi, x_phi, [t.sign for t in terms])


# ---------------------------------------------------------------------------
# homogeneous extension to the cone of positive matrices

def homogeneous_F(spec: MultipoleSpec, cone_pt) -> Jet:
    """Homogeneity-1/2 extension ``F~(A) = det(A)^(1/4) F(point of A/sqrt(det A))``.

    Jet variables are ``(A11, A12, A22)`` at order 2.
    """
    A = np.asarray(cone_pt, dtype=float)
    x, y, z = Jet.seed((A[0, 0], A[0, 1], A[1, 1]), 2)
    det = x * z - y * y
    if not det.value > 0 or not A[0, 0] > 0:
        raise InvalidInput("cone point must be positive definite")
    rho = det.sqrt() / x
    eta = y / x
    return det.power(0.25) * F_jet(spec, rho, eta)


def wave_residual(Ft: Jet) -> float:
    """``F~_yy/4 - F~_xz`` (inverse of the form ``-4 det``), relative to the second jet."""
    a = 0.25 * Ft.partial((0, 2, 0))
    b = Ft.partial((1, 0, 1))
    size = max(float(np.max(np.abs(Ft.hessian()))), abs(float(Ft.value)))
    return float(abs(a - b) / max(size, 1e-300))


def cone_frame_matrix(spec: MultipoleSpec, cone_pt) -> np.ndarray:
    """``2 dF~(m_i m_j)`` in the homogeneity-1/2 frame orthonormal for ``A^-1``.

    At ``A = sqrt(det A) A(rho, eta)`` that frame is ``det(A)^(1/4)`` times
    the frame of the hyperboloid point, so the result is
    ``det(A)^(1/4) [[F/2 + rho F_r, rho F_e], [rho F_e, F/2 - rho F_r]]``.
    """
    A = np.asarray(cone_pt, dtype=float)
    Ft = homogeneous_F(spec, A)
    grad = Ft.grad()
    p = point_from_hyperboloid(A)
    m0, m1, _, _ = frame_vectors(p)
    lift = np.linalg.det(A) ** 0.25
    ms = (lift * m0, lift * m1)
    out = np.zeros((2, 2))
    for i in range(2):
        for k in range(2):
            S = 0.5 * (np.outer(ms[i], ms[k]) + np.outer(ms[k], ms[i]))
            out[i, k] = 2.0 * (grad[0] * S[0, 0] + grad[1] * S[0, 1] + grad[2] * S[1, 1])
    return out
