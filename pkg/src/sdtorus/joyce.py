"""Joyce solutions, Einstein-Weyl quotients, monopoles and the Toda form.

A solution of the Joyce equation is written ``Phi = A0 mu0 + A1 mu1`` in the
dual frame of :func:`sdtorus.hyperbolic.frame_vectors`; the component
equations are

    (A0)_r + (A1)_e = A0 / rho,      (A0)_e = (A1)_r.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .eigenfunction import MultipoleSpec, eval_F, integrate_V
from .hyperbolic import HalfPlanePoint, InvalidInput, Twistor, twistor_frame_coefficients
from .jets import Jet
from .metric import _point_tuple, canonical_pencil


class DegeneratePencil(ValueError):
    pass


class NewtonFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class JoyceSolution:
    A0: Jet
    A1: Jet

    @property
    def values(self) -> tuple[float, float]:
        return float(self.A0.value), float(self.A1.value)


def _seed(p, order=3):
    rho_v, eta_v = _point_tuple(p)
    if rho_v <= 0:
        raise InvalidInput("rho must be positive")
    return Jet.seed((rho_v, eta_v), order), (rho_v, eta_v)


def phi_from_F(spec: MultipoleSpec, twistor: Twistor, p) -> JoyceSolution:
    """Apply ``F`` to a twistor: ``Phi = F/2 flat(phi) + dF . phi``.

    ``flat`` lowers with ``A(p)^-1``; ``dF`` is paired with ``phi`` through
    one symmetric slot.  Writing ``phi = c0 m0 + c1 m1``, this gives

        A0 = c0 (F/2 + rho F_r) + c1 rho F_e
        A1 = c1 (F/2 - rho F_r) + c0 rho F_e
    """
    if twistor.is_zero():
        raise InvalidInput("zero twistor")
    (rho, eta), pt = _seed(p)
    F = eval_F(spec, pt)
    c0, c1 = twistor_frame_coefficients(twistor.a, twistor.b, rho, eta)
    c0, c1, r, F2 = c0.truncate(2), c1.truncate(2), rho.truncate(2), F.truncate(2)
    rFr, rFe = r * F.diff(0), r * F.diff(1)
    A0 = c0 * (0.5 * F2 + rFr) + c1 * rFe
    A1 = c1 * (0.5 * F2 - rFr) + c0 * rFe
    return JoyceSolution(A0, A1)


def canonical_solution(spec: MultipoleSpec, p) -> JoyceSolution:
    """``(G_r, G_e)`` with ``G = sqrt(rho) F``."""
    A0, A1, _, _ = canonical_pencil(spec, p)
    return JoyceSolution(A0, A1)


def second_solution(spec: MultipoleSpec, p) -> JoyceSolution:
    """``B0 = rho A1 - eta A0``, ``B1 = G - rho A0 - eta A1``."""
    _, _, B0, B1 = canonical_pencil(spec, p)
    return JoyceSolution(B0, B1)


def joyce_residual(A0: Jet, A1: Jet, rho: float) -> tuple[float, float]:
    r1 = A0.partial((1, 0)) + A1.partial((0, 1)) - A0.value / rho
    r2 = A0.partial((0, 1)) - A1.partial((1, 0))
    return float(r1), float(r2)


def solution_residual(sol: JoyceSolution, p) -> tuple[float, float]:
    return joyce_residual(sol.A0, sol.A1, _point_tuple(p)[0])


def pencil_identity_residual(spec: MultipoleSpec, p) -> float:
    """``A1 B0 - A0 B1 - (rho (A0^2 + A1^2) - G A0)``."""
    rho_v, eta_v = _point_tuple(p)
    A0, A1, B0, B1 = (float(x.value) for x in canonical_pencil(spec, p))
    G = np.sqrt(rho_v) * float(eval_F(spec, (rho_v, eta_v), order=0).value)
    return A1 * B0 - A0 * B1 - (rho_v * (A0 * A0 + A1 * A1) - G * A0)


# ---------------------------------------------------------------------------
# Einstein-Weyl quotient

@dataclass(frozen=True)
class EWData:
    gB: np.ndarray  # coordinates (rho, eta, psi)
    omegaB: np.ndarray
    w: float
    A_form: np.ndarray

    def to_dict(self) -> dict:
        return {"gB": self.gB.tolist(), "omegaB": self.omegaB.tolist(), "w": self.w,
                "A_form": self.A_form.tolist()}


def _ew_parts(A0, A1, B0, B1, rho):
    N = A0 * A0 + A1 * A1
    inv = 1.0 / N if not isinstance(N, Jet) else N.reciprocal()
    w = (A1 * B0 - A0 * B1) * inv
    f = (A0 * B0 + A1 * B1) * inv
    om_r = (A0 * A0 - A1 * A1) * inv / rho
    om_e = 2 * A0 * A1 * inv / rho
    return N, w, f, om_r, om_e


def _values(*xs):
    return [float(x.value) if isinstance(x, Jet) else float(x) for x in xs]


def ew_quotient(A0, A1, B0, B1, p) -> EWData:
    """Einstein-Weyl space and monopole of the pencil ``(A, B)``.

    ``gB = N g_H + dpsi^2``, ``omegaB = (2 A0 A1 deta + (A0^2 - A1^2) drho)/(rho N)``,
    ``w = (A1 B0 - A0 B1)/N`` and ``A = -(A0 B0 + A1 B1)/N dpsi`` with
    ``N = A0^2 + A1^2``.
    """
    rho, _ = _point_tuple(p)
    A0, A1, B0, B1 = _values(A0, A1, B0, B1)
    N = A0 * A0 + A1 * A1
    if N <= 1e-300:
        raise DegeneratePencil("A0 = A1 = 0")
    _, w, f, om_r, om_e = _ew_parts(A0, A1, B0, B1, rho)
    gB = np.diag([N / rho ** 2, N / rho ** 2, 1.0])
    return EWData(gB, np.array([om_r, om_e, 0.0]), w, np.array([0.0, 0.0, -f]))


def monopole_residual(A0: Jet, A1: Jet, B0: Jet, B1: Jet, p) -> float:
    """Norm of ``*(dw + omegaB w) - dA`` for the Hodge star of ``gB``.

    Orientation ``drho ^ deta ^ dpsi``, for which ``*drho = deta ^ dpsi`` and
    ``*deta = dpsi ^ drho``.  With ``omegaB`` as returned by
    :func:`ew_quotient`, the Weyl-covariant derivative of the weight of ``w``
    is ``dw + omegaB w``.  Returned relative to the size of the terms.
    """
    rj = Jet.seed(_point_tuple(p), min(x.order for x in (A0, A1, B0, B1)))[0]
    N, w, f, om_r, om_e = _ew_parts(A0, A1, B0, B1, rj)
    wv = float(w.value)
    u = w.partial((1, 0)) + float(om_r.value) * wv
    v = w.partial((0, 1)) + float(om_e.value) * wv
    # dA = -f_r drho^dpsi - f_e deta^dpsi
    fr, fe = f.partial((1, 0)), f.partial((0, 1))
    res_eta_psi = u + fe
    res_rho_psi = -v + fr
    size = abs(u) + abs(v) + abs(fr) + abs(fe)
    return float(np.hypot(res_eta_psi, res_rho_psi) / max(size, 1e-300))


def distinguished_monopoles(spec: MultipoleSpec, p) -> tuple[float, float]:
    """``m1 = A0/N`` and ``m2 = (rho N - G A0)/N`` for the canonical pencil."""
    rho, eta = _point_tuple(p)
    A0, A1, _, _ = _values(*canonical_pencil(spec, p))
    N = A0 * A0 + A1 * A1
    if N <= 1e-300:
        raise DegeneratePencil("A0 = A1 = 0")
    G = np.sqrt(rho) * float(eval_F(spec, (rho, eta), order=0).value)
    return A0 / N, (rho * N - G * A0) / N


# ---------------------------------------------------------------------------
# Toda form

@dataclass(frozen=True)
class TodaData:
    x: float
    y: float
    z: float
    u: float
    u_x: float
    u_z: float
    u_xx: float
    exp_u_zz: float
    residual: float
    jacobian_det: float

    def to_dict(self) -> dict:
        return asdict(self)


def _VG_jacobian(spec, rho, eta):
    A0, A1, _, _ = _values(*canonical_pencil(spec, (rho, eta)))
    J = np.array([[A1 / rho, -A0 / rho], [A0, A1]])
    G = np.sqrt(rho) * float(eval_F(spec, (rho, eta), order=0).value)
    return J, G, A0, A1


def _invert(spec, target, start, V_start, tol=1e-12, max_iter=50):
    """Find ``(rho, eta)`` near ``start`` with ``(V, G) = target``."""
    q = np.array(start, dtype=float)
    V = V_start
    for _ in range(max_iter):
        J, G, _, _ = _VG_jacobian(spec, *q)
        r = np.array([V, G]) - target
        if np.max(np.abs(r)) <= tol * max(1.0, np.max(np.abs(target))):
            return q
        step = np.linalg.solve(J, -r)
        nq = q + step
        while nq[0] <= 0:
            step *= 0.5
            nq = q + step
        V = V + integrate_V(spec, [tuple(q), tuple(nq)])
        q = nq
    raise NewtonFailure(f"Newton inversion did not converge from {start}")


def toda_check(spec: MultipoleSpec, p, basepoint, h: float = 1e-3) -> TodaData:
    """SU(infinity) Toda residual ``u_xx + (e^u)_zz`` by Newton inversion.

    ``x = V``, ``y = psi``, ``z = G`` and ``e^u = rho^2``.  Second
    differences of ``u`` and ``e^u`` in ``(x, z)`` come from inverting
    ``(rho, eta) -> (V, G)`` at perturbed targets, with one Richardson step.
    """
    rho, eta = _point_tuple(p)
    J, G, A0, A1 = _VG_jacobian(spec, rho, eta)
    det = float(np.linalg.det(J))
    N = A0 * A0 + A1 * A1
    if abs(det) <= 1e-10 * max(N / rho, 1e-300) or N <= 1e-300:
        raise DegeneratePencil("(rho, eta) -> (V, G) is not locally invertible")
    x0 = integrate_V(spec, [tuple(_point_tuple(basepoint)), (rho, eta)])
    center = np.array([x0, G])

    cache = {(0.0, 0.0): rho}

    def rho_at(dx, dz):
        key = (float(dx), float(dz))
        if key not in cache:
            cache[key] = _invert(spec, center + np.array(key), (rho, eta), x0)[0]
        return cache[key]

    def second_diff(fun, axis, step):
        e = np.zeros(2)
        e[axis] = step
        return (fun(*e) - 2 * fun(0.0, 0.0) + fun(*(-e))) / step ** 2

    def richardson(fun, axis):
        coarse = second_diff(fun, axis, h)
        fine = second_diff(fun, axis, h / 2)
        return (4 * fine - coarse) / 3

    u_fun = lambda dx, dz: 2 * np.log(rho_at(dx, dz))
    eu_fun = lambda dx, dz: rho_at(dx, dz) ** 2
    u_xx = richardson(u_fun, 0)
    eu_zz = richardson(eu_fun, 1)
    return TodaData(x=float(x0), y=0.0, z=float(G), u=float(2 * np.log(rho)),
                    u_x=float(2 * A1 / N), u_z=float(2 * A0 / (rho * N)),
                    u_xx=float(u_xx), exp_u_zz=float(eu_zz),
                    residual=float(u_xx + eu_zz), jacobian_det=det)


def spinor_square_form(A0: float, A1: float, p) -> np.ndarray:
    """``(Phi^2)_0 / |Phi|^2`` as a 1-form ``(c_rho, c_eta)`` on the half plane.

    ``Phi`` is identified with ``A0 m0 + A1 m1`` in W, its square with the
    symmetric matrix ``Phi Phi^T``.  The part orthogonal to ``A(p)`` is
    tangent to the hyperboloid, expanded in ``dA(d_rho), dA(d_eta)`` and
    lowered with the hyperbolic metric.
    """
    from .hyperbolic import frame_vectors, hyperboloid_matrix

    rho, eta = _point_tuple(p)
    m0, m1, _, _ = frame_vectors((rho, eta))
    phi = A0 * m0 + A1 * m1
    A = hyperboloid_matrix((rho, eta))
    Ainv = np.linalg.inv(A)
    S = np.outer(phi, phi)
    S0 = S - 0.5 * np.trace(Ainv @ S) * A
    dA_rho = np.array([[-1.0, -eta], [-eta, rho * rho - eta * eta]]) / rho ** 2
    dA_eta = np.array([[0.0, 1.0], [1.0, 2 * eta]]) / rho
    basis = np.stack([dA_rho.ravel(), dA_eta.ravel()], axis=1)
    vec, *_ = np.linalg.lstsq(basis, S0.ravel(), rcond=None)
    norm2 = float(phi @ Ainv @ phi)
    return vec / rho ** 2 / norm2
