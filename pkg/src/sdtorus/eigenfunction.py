"""Multipole eigenfunctions of the hyperbolic Laplacian with eigenvalue 3/4.

An eigenfunction ``F`` is described by a :class:`MultipoleSpec`, an ordered
list of pole terms:

* ``RealPole(phi, sign)`` contributes ``sign * |phi|``;
* ``ConjugatePair(phi1, phi2, weight)`` contributes
  ``w |phi1 + i phi2| + conj(w) |phi1 - i phi2|``, the complex norms taken
  on the principal branch of the square root.

Every twistor norm solves ``F_rr + F_ee = 3F / (4 rho^2)``, hence so does
any such sum.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import integrate

from .hyperbolic import HalfPlanePoint, InvalidInput, Twistor, sl2_act, twistor_norm_squared_scaled
from .jets import BranchAmbiguityError, Jet, JetDomainError


@dataclass(frozen=True)
class RealPole:
    phi: Twistor
    sign: int = 1

    def __post_init__(self):
        if self.phi.is_zero():
            raise InvalidInput("pole twistor must be nonzero")
        if self.sign not in (1, -1):
            raise InvalidInput(f"sign must be +1 or -1, got {self.sign!r}")


@dataclass(frozen=True)
class ConjugatePair:
    phi1: Twistor
    phi2: Twistor
    weight: complex = 1.0

    def __post_init__(self):
        if abs(self.phi1.a * self.phi2.b - self.phi1.b * self.phi2.a) == 0:
            raise InvalidInput("conjugate pair twistors must be linearly independent")
        if self.weight == 0:
            raise InvalidInput("conjugate pair weight must be nonzero")


@dataclass(frozen=True)
class Perturbation:
    """``coefficient * rho**rho_power``; not an eigenfunction unless the power is 3/2 or -1/2.

    Only used to build negative controls.
    """
    coefficient: float
    rho_power: float = 1.0


PoleTerm = Union[RealPole, ConjugatePair, Perturbation]


def _proportional(u: Twistor, v: Twistor, tol: float = 1e-12) -> bool:
    cross = abs(u.a * v.b - u.b * v.a)
    return cross <= tol * np.hypot(u.a, u.b) * np.hypot(v.a, v.b)


@dataclass(frozen=True)
class MultipoleSpec:
    terms: tuple
    label: str = ""

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise InvalidInput("a multipole spec needs at least one term")
        reals = [t.phi for t in terms if isinstance(t, RealPole)]
        for i, u in enumerate(reals):
            for v in reals[i + 1:]:
                if _proportional(u, v):
                    raise InvalidInput(f"proportional pole twistors {u} and {v}")

    def __add__(self, other: "MultipoleSpec") -> "MultipoleSpec":
        return MultipoleSpec(self.terms + other.terms, f"{self.label}+{other.label}")

    @property
    def is_monopole(self) -> bool:
        return len(self.terms) == 1 and isinstance(self.terms[0], RealPole)

    @property
    def has_conjugate_pairs(self) -> bool:
        return any(isinstance(t, ConjugatePair) for t in self.terms)

    @property
    def is_perturbed(self) -> bool:
        return any(isinstance(t, Perturbation) for t in self.terms)

    def transformed(self, M) -> "MultipoleSpec":
        """Image under ``M`` in SL(W) acting on every twistor."""
        out = []
        for t in self.terms:
            if isinstance(t, RealPole):
                out.append(RealPole(sl2_act(M, t.phi), t.sign))
            elif isinstance(t, Perturbation):
                raise InvalidInput("a perturbation term has no SL(W) image")
            else:
                out.append(ConjugatePair(sl2_act(M, t.phi1), sl2_act(M, t.phi2), t.weight))
        return MultipoleSpec(tuple(out), self.label)

    def negated(self) -> "MultipoleSpec":
        """Spec of ``-F``; the Einstein metric is unchanged."""
        out = []
        for t in self.terms:
            if isinstance(t, RealPole):
                out.append(RealPole(t.phi, -t.sign))
            elif isinstance(t, Perturbation):
                out.append(Perturbation(-t.coefficient, t.rho_power))
            else:
                out.append(ConjugatePair(t.phi1, t.phi2, -t.weight))
        return MultipoleSpec(tuple(out), self.label)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        terms = []
        for t in self.terms:
            if isinstance(t, RealPole):
                terms.append({"type": "real", "phi": t.phi.to_json(), "sign": t.sign})
            elif isinstance(t, Perturbation):
                terms.append({"type": "perturbation", "coefficient": t.coefficient,
                              "rho_power": t.rho_power})
            else:
                d = {"type": "conjpair", "phi1": t.phi1.to_json(), "phi2": t.phi2.to_json()}
                if t.weight != 1:
                    w = complex(t.weight)
                    d["weight"] = [w.real, w.imag]
                terms.append(d)
        return {"label": self.label, "terms": terms}

    @classmethod
    def from_dict(cls, data: dict) -> "MultipoleSpec":
        try:
            raw = data["terms"]
            terms = []
            for t in raw:
                kind = t["type"]
                if kind == "real":
                    terms.append(RealPole(Twistor.from_json(t["phi"]), int(t.get("sign", 1))))
                elif kind == "conjpair":
                    w = t.get("weight", [1.0, 0.0])
                    terms.append(ConjugatePair(Twistor.from_json(t["phi1"]),
                                               Twistor.from_json(t["phi2"]),
                                               complex(w[0], w[1])))
                elif kind == "perturbation":
                    terms.append(Perturbation(float(t["coefficient"]), float(t.get("rho_power", 1.0))))
                else:
                    raise InvalidInput(f"unknown term type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"malformed multipole spec: {exc}") from exc
        return cls(tuple(terms), str(data.get("label", "")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MultipoleSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)


class PointClass(enum.Enum):
    PositiveScal = "PositiveScal"
    NegativeScal = "NegativeScal"
    ConformalInfinity = "ConformalInfinity"
    Singular = "Singular"
    Undefined = "Undefined"


# ---------------------------------------------------------------------------
# built-in families

def monopole(phi=(0.0, 1.0)) -> MultipoleSpec:
    return MultipoleSpec((RealPole(Twistor(*phi)),), "monopole")


def dipole_plus() -> MultipoleSpec:
    return MultipoleSpec((RealPole(Twistor(0.0, 1.0)), RealPole(Twistor(1.0, 0.0))), "F+")


def dipole_minus() -> MultipoleSpec:
    return MultipoleSpec((RealPole(Twistor(0.0, 1.0)), RealPole(Twistor(1.0, 0.0), -1)), "F-")


def dipole_conj() -> MultipoleSpec:
    # [1, -i] = [1,0] + i [0,-1]; its norm is sqrt(rho^2 + (eta + i)^2)/sqrt(rho)
    return MultipoleSpec((ConjugatePair(Twistor(1.0, 0.0), Twistor(0.0, -1.0)),), "Fc")


def multipole(twistors: Sequence, signs: Sequence[int] | None = None, label: str = "") -> MultipoleSpec:
    signs = signs or [1] * len(twistors)
    return MultipoleSpec(tuple(RealPole(Twistor(*t) if not isinstance(t, Twistor) else t, s)
                               for t, s in zip(twistors, signs)), label)


def random_spec(rng: np.random.Generator, n_poles: int, mixed: bool = True,
                label: str = "random") -> MultipoleSpec:
    terms = []
    for _ in range(n_poles):
        sign = int(rng.choice([1, -1])) if mixed else 1
        terms.append(RealPole(Twistor(*rng.normal(size=2)), sign))
    return MultipoleSpec(tuple(terms), label)


# ---------------------------------------------------------------------------
# evaluation

def term_jets(spec: MultipoleSpec, rho, eta) -> list:
    """One real jet per term; ``rho``, ``eta`` may be jets of any kind."""
    inv_sqrt_rho = rho ** -0.5
    out = []
    for t in spec.terms:
        if isinstance(t, RealPole):
            q = twistor_norm_squared_scaled(t.phi.a, t.phi.b, rho, eta)
            out.append(q.sqrt() * inv_sqrt_rho * t.sign)
        elif isinstance(t, Perturbation):
            out.append(rho ** t.rho_power * t.coefficient)
        else:
            a = complex(t.phi1.a, t.phi2.a)
            b = complex(t.phi1.b, t.phi2.b)
            q = twistor_norm_squared_scaled(a, b, rho, eta)
            w = complex(t.weight)
            s = q.sqrt()
            pair = s * w + s.conj() * w.conjugate()
            out.append(pair.real * inv_sqrt_rho)
    return out


def conjugate_pair_imag(spec: MultipoleSpec, rho, eta) -> float:
    """Largest imaginary coefficient of the summed conjugate-pair jets."""
    worst = 0.0
    for t in spec.terms:
        if isinstance(t, ConjugatePair):
            w = complex(t.weight)
            za = complex(t.phi1.a, t.phi2.a)
            zb = complex(t.phi1.b, t.phi2.b)
            plus = twistor_norm_squared_scaled(za, zb, rho, eta).sqrt() * w
            minus = twistor_norm_squared_scaled(za.conjugate(), zb.conjugate(), rho, eta).sqrt() \
                * w.conjugate()
            worst = max(worst, float(np.max(np.abs((plus + minus).c.imag))))
    return worst


def _seed(p, order: int = 3):
    if isinstance(p, HalfPlanePoint):
        rho, eta = p.rho, p.eta
    else:
        rho, eta = p
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise JetDomainError("rho must be positive", rho)
    return Jet.seed((rho, eta), order)


def F_jet(spec: MultipoleSpec, rho, eta) -> Jet:
    terms = term_jets(spec, rho, eta)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def eval_F(spec: MultipoleSpec, p, order: int = 3) -> Jet:
    """Order-3 jet of ``F`` in ``(rho, eta)`` at ``p`` (scalar or arrays)."""
    rho, eta = _seed(p, order)
    return F_jet(spec, rho, eta)


def local_scale(spec: MultipoleSpec, p) -> np.ndarray:
    """Sum of the absolute term values, the natural size of ``F`` near ``p``."""
    if isinstance(p, HalfPlanePoint):
        rho, eta = float(p.rho), float(p.eta)
    else:
        rho, eta = np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float)
    total = 0.0
    for t in term_jets(spec, Jet.constant(rho, 2, 0), Jet.constant(eta, 2, 0)):
        total = total + np.abs(t.value)
    return total


def pde_residual(spec: MultipoleSpec, p):
    """``F_rr + F_ee - 3F/(4 rho^2)``."""
    F = eval_F(spec, p)
    rho = F_rho_value(p)
    return F.partial((2, 0)) + F.partial((0, 2)) - 3 * F.value / (4 * rho ** 2)


def pde_residual_scale(spec: MultipoleSpec, p):
    """Normalisation for :func:`pde_residual`: ``max(1, scale/rho^2)``."""
    rho = F_rho_value(p)
    return np.maximum(1.0, local_scale(spec, p) / rho ** 2)


def F_rho_value(p):
    if isinstance(p, HalfPlanePoint):
        return p.rho
    return np.asarray(p[0], dtype=float)


def discriminant_jet(F: Jet, rho) -> Jet:
    """``F^2 - 4 rho^2 (F_r^2 + F_e^2)`` as a jet, one order below ``F``."""
    Fr, Fe = F.diff(0), F.diff(1)
    return F * F - 4 * (rho * rho) * (Fr * Fr + Fe * Fe)


def discriminant(spec: MultipoleSpec, p):
    F = eval_F(spec, p, order=1)
    rho = F_rho_value(p)
    return F.value ** 2 - 4 * rho ** 2 * (F.partial((1, 0)) ** 2 + F.partial((0, 1)) ** 2)


CLASSIFY_TOL = 1e-9


def classify_values(F, D, scale, tol: float = CLASSIFY_TOL):
    """Vectorised point classification from values of ``F``, ``D`` and the scale."""
    F, D, scale = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (F, D, scale)))
    out = np.full(F.shape, PointClass.Undefined, dtype=object)
    fin = np.isfinite(F) & np.isfinite(D)
    zero_F = fin & (np.abs(F) < tol * scale)
    zero_D = fin & ~zero_F & (np.abs(D) < tol * scale ** 2)
    out[zero_F] = PointClass.ConformalInfinity
    out[zero_D] = PointClass.Singular
    rest = fin & ~zero_F & ~zero_D
    out[rest & (D > 0)] = PointClass.PositiveScal
    out[rest & (D < 0)] = PointClass.NegativeScal
    return out if out.ndim else out.item()


def classify_point(spec: MultipoleSpec, p, tol: float = CLASSIFY_TOL) -> PointClass:
    try:
        F = eval_F(spec, p, order=1)
    except BranchAmbiguityError:
        return PointClass.Undefined
    rho = F_rho_value(p)
    D = F.value ** 2 - 4 * rho ** 2 * (F.partial((1, 0)) ** 2 + F.partial((0, 1)) ** 2)
    return classify_values(F.value, D, local_scale(spec, p), tol)


# ---------------------------------------------------------------------------
# Backlund transformation F -> G -> V

class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class BacklundData:
    G: Jet
    V: float
    ahf_residual: float


def G_jet(spec: MultipoleSpec, p, order: int = 3) -> Jet:
    """``G = sqrt(rho) F``; its gradient is the canonical Joyce solution."""
    rho, eta = _seed(p, order)
    return rho.sqrt() * F_jet(spec, rho, eta)


def _dV(spec: MultipoleSpec, rho: float, eta: float) -> tuple[float, float]:
    G = G_jet(spec, (rho, eta), order=1)
    A0, A1 = G.partial((1, 0)), G.partial((0, 1))
    return A1 / rho, -A0 / rho


def integrate_V(spec: MultipoleSpec, path: Sequence, rtol: float = 1e-10) -> float:
    """Integrate ``dV = (A1 d rho - A0 d eta)/rho`` along a polyline."""
    total = 0.0
    pts = [tuple(map(float, q)) for q in path]
    for (r0, e0), (r1, e1) in zip(pts[:-1], pts[1:]):
        if min(r0, r1) <= 0:
            raise IntegrationError("path leaves the half plane")
        dr, de = r1 - r0, e1 - e0

        def integrand(t):
            try:
                vr, ve = _dV(spec, r0 + t * dr, e0 + t * de)
            except JetDomainError as exc:
                raise IntegrationError(f"path leaves the domain of F: {exc}") from exc
            return vr * dr + ve * de

        val, _err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-15, epsrel=rtol, limit=200)
        total += val
    return total


def backlund(spec: MultipoleSpec, p, basepoint, path: Sequence | None = None) -> BacklundData:
    """``G = sqrt(rho) F`` and the axisymmetric harmonic function ``V``.

    ``V`` is pinned to zero at ``basepoint``; ``path`` optionally gives
    intermediate polyline vertices.
    """
    p = p if isinstance(p, HalfPlanePoint) else HalfPlanePoint(*p)
    base = basepoint if isinstance(basepoint, HalfPlanePoint) else HalfPlanePoint(*basepoint)
    verts = [tuple(base)] + [tuple(q) for q in (path or [])] + [tuple(p)]
    V = integrate_V(spec, verts)
    G = G_jet(spec, p)
    A0, A1 = G.diff(0), G.diff(1)
    # rho V_ee + (rho V_r)_r with V_r = A1/rho, V_e = -A0/rho
    ahf = A1.partial((1, 0)) - A0.partial((0, 1))
    return BacklundData(G, V, float(ahf))
