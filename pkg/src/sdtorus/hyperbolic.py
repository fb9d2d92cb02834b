"""Half-space model of the hyperbolic plane and its spinor linear algebra.

Points of H^2 are pairs ``(rho, eta)`` with ``rho > 0``.  Twistors are
elements of a fixed 2-dimensional real vector space W with area form
``eps(e1, e2) = 1``; H^2 sits inside the symmetric square S^2 W as the
positive definite unimodular matrices ``A(rho, eta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class HalfPlanePoint:
    rho: float
    eta: float

    def __post_init__(self):
        if not (self.rho > 0) or not np.isfinite(self.rho) or not np.isfinite(self.eta):
            raise InvalidInput(f"need rho > 0 and finite coordinates, got {self}")

    def __iter__(self):
        yield self.rho
        yield self.eta


@dataclass(frozen=True)
class Twistor:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise InvalidInput("twistor components must be finite")

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=float)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __mul__(self, s: float) -> "Twistor":
        return Twistor(s * self.a, s * self.b)

    __rmul__ = __mul__

    def __add__(self, other: "Twistor") -> "Twistor":
        return Twistor(self.a + other.a, self.b + other.b)

    def __neg__(self) -> "Twistor":
        return Twistor(-self.a, -self.b)

    def to_json(self) -> list:
        return [self.a, self.b]

    @classmethod
    def from_json(cls, data) -> "Twistor":
        if len(data) != 2:
            raise InvalidInput(f"twistor must be a 2-element array, got {data!r}")
        return cls(float(data[0]), float(data[1]))


@dataclass(frozen=True)
class ComplexTwistor:
    a: complex
    b: complex

    def to_json(self) -> list:
        return [[self.a.real, self.a.imag], [self.b.real, self.b.imag]]

    @classmethod
    def from_json(cls, data) -> "ComplexTwistor":
        (ar, ai), (br, bi) = data
        return cls(complex(ar, ai), complex(br, bi))

    @classmethod
    def combine(cls, phi1: Twistor, phi2: Twistor, sign: int = 1) -> "ComplexTwistor":
        """``phi1 + i*sign*phi2``."""
        return cls(complex(phi1.a, sign * phi2.a), complex(phi1.b, sign * phi2.b))


def _as_point(p):
    if isinstance(p, HalfPlanePoint):
        return p.rho, p.eta
    rho, eta = p
    return rho, eta


def twistor_norm_squared_scaled(a, b, rho, eta):
    """``a^2 rho^2 + (a eta - b)^2``, i.e. ``rho |phi|^2``.

    Works for floats, arrays and jets, real or complex ``a, b``.
    """
    t = a * eta - b
    return (a * a) * (rho * rho) + t * t


def twistor_norm(phi: Twistor, p) -> float:
    """Pointwise norm ``sqrt(a^2 rho^2 + (a eta - b)^2) / sqrt(rho)``."""
    if phi.is_zero():
        raise InvalidInput("norm of the zero twistor")
    rho, eta = _as_point(p)
    return np.sqrt(twistor_norm_squared_scaled(phi.a, phi.b, rho, eta)) / np.sqrt(rho)


def hyperboloid_matrix(p) -> np.ndarray:
    rho, eta = _as_point(p)
    if not rho > 0:
        raise InvalidInput("rho must be positive")
    return np.array([[1.0, eta], [eta, rho * rho + eta * eta]]) / rho


def point_from_hyperboloid(A: np.ndarray) -> HalfPlanePoint:
    """Inverse of :func:`hyperboloid_matrix`; ``A`` is renormalised to det 1."""
    A = np.asarray(A, dtype=float)
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not det > 0 or not A[0, 0] > 0:
        raise InvalidInput("matrix is not positive definite")
    N = A / np.sqrt(det)
    return HalfPlanePoint(1.0 / N[0, 0], N[0, 1] / N[0, 0])


def twistor_det(phi1: Twistor, phi2: Twistor) -> float:
    """Area form ``eps(phi1, phi2) = a1 b2 - a2 b1``."""
    return phi1.a * phi2.b - phi2.a * phi1.b


def _check_unimodular(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise InvalidInput("expected a 2x2 matrix")
    if abs(np.linalg.det(M) - 1.0) > tol:
        raise InvalidInput(f"matrix is not unimodular (det = {np.linalg.det(M)!r})")
    return M


def sl2_act(M, phi: Twistor) -> Twistor:
    M = _check_unimodular(M)
    v = M @ phi.vec
    return Twistor(float(v[0]), float(v[1]))


def mobius_act(M, p) -> HalfPlanePoint:
    """Isometry of H^2 induced by ``M`` in SL(W).

    Twistor norms transform by ``phi^T A^{-1} phi``; the invariant choice is
    ``A -> M A M^T``, so that ``|M phi|`` at ``M.p`` equals ``|phi|`` at ``p``.
    """
    M = _check_unimodular(M)
    A = hyperboloid_matrix(p)
    return point_from_hyperboloid(M @ A @ M.T)


def frame_vectors(p):
    """Orthonormal frame ``(m0, m1)`` of W at ``p`` and its dual ``(mu0, mu1)``.

    Orthonormality is with respect to the inner product ``A(p)^{-1}``; the
    duals are represented as row vectors paired with W by the dot product,
    so that ``mu_i . m_j = delta_ij`` and ``mu_i = A^{-1} m_i``.
    """
    rho, eta = _as_point(p)
    s = np.sqrt(rho)
    m0 = np.array([0.0, s])
    m1 = np.array([1.0 / s, eta / s])
    mu0 = np.array([-eta / s, 1.0 / s])
    mu1 = np.array([s, 0.0])
    return m0, m1, mu0, mu1


def twistor_frame_coefficients(a, b, rho, eta):
    """Coefficients ``(c0, c1)`` of ``[a, b] = c0 m0 + c1 m1``.

    Accepts jets as well as numbers.
    """
    s = rho ** 0.5 if not isinstance(rho, Jet) else rho.sqrt()
    return -(a * eta - b) / s, a * s


def random_unimodular(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    M = rng.normal(scale=scale, size=(2, 2))
    d = np.linalg.det(M)
    while abs(d) < 1e-3:
        M = rng.normal(scale=scale, size=(2, 2))
        d = np.linalg.det(M)
    if d < 0:
        M[:, 0] = -M[:, 0]
        d = -d
    return M / np.sqrt(d)
