"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` carries the Taylor polynomial of a function about a point,
truncated at a fixed total order.  Coefficients are stored normalised
(``c[alpha] = d^alpha f / alpha!``) so that multiplication is a truncated
Cauchy product.  The leading array axis indexes multi-indices; any trailing
axes are batch dimensions broadcast through all operations, so a single jet
may describe a whole grid of evaluation points.

Two instantiations are used throughout the package:

* ``Jet2``: two variables ``(rho, eta)``, order 3;
* ``Jet3``: three variables (symmetric 2x2 matrix entries), order 2.

Complex coefficients are supported; ``sqrt`` then uses the principal branch
and refuses to evaluate on or next to the cut.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Iterable, Sequence

import numpy as np


class JetDomainError(ValueError):
    """Raised when a jet operation leaves its domain (division by zero, ...)."""

    def __init__(self, message: str, value=None):
        super().__init__(message)
        self.value = value


class BranchAmbiguityError(JetDomainError):
    """Complex square root evaluated on (or too near) the principal branch cut."""


@functools.lru_cache(maxsize=None)
def multi_indices(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices of total degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        for alpha in itertools.product(range(deg + 1), repeat=nvars):
            if sum(alpha) == deg:
                out.append(alpha)
    # within a degree put higher powers of the first variable first
    out.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _index_map(nvars: int, order: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(nvars, order))}


@functools.lru_cache(maxsize=None)
def _product_tensor(nvars: int, order: int) -> np.ndarray:
    idx = multi_indices(nvars, order)
    pos = _index_map(nvars, order)
    n = len(idx)
    t = np.zeros((n, n, n))
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            s = tuple(x + y for x, y in zip(a, b))
            k = pos.get(s)
            if k is not None:
                t[k, i, j] = 1.0
    return t


@functools.lru_cache(maxsize=None)
def _truncation(nvars: int, order_from: int, order_to: int) -> np.ndarray:
    pos = _index_map(nvars, order_from)
    return np.array([pos[a] for a in multi_indices(nvars, order_to)])


@functools.lru_cache(maxsize=None)
def _diff_table(nvars: int, order: int, var: int):
    pos = _index_map(nvars, order)
    src, fac = [], []
    for a in multi_indices(nvars, order - 1):
        up = list(a)
        up[var] += 1
        src.append(pos[tuple(up)])
        fac.append(float(up[var]))
    return np.array(src), np.array(fac)


def _factorial(alpha: Sequence[int]) -> float:
    return float(np.prod([math.factorial(x) for x in alpha]))


class Jet:
    """Truncated Taylor expansion in ``nvars`` variables up to ``order``."""

    __slots__ = ("c", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, nvars: int, order: int):
        c = np.asarray(coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        n = len(multi_indices(nvars, order))
        if c.shape[0] != n:
            raise ValueError(f"expected {n} coefficients, got {c.shape[0]}")
        self.c = c
        self.nvars = nvars
        self.order = order

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value)
        n = len(multi_indices(nvars, order))
        c = np.zeros((n,) + value.shape, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, nvars, order)

    @classmethod
    def variable(cls, value, var: int, nvars: int, order: int) -> "Jet":
        j = cls.constant(value, nvars, order)
        if order >= 1:
            e = [0] * nvars
            e[var] = 1
            j.c[_index_map(nvars, order)[tuple(e)]] = 1.0
        return j

    @classmethod
    def seed(cls, values: Sequence, order: int) -> tuple["Jet", ...]:
        """Independent variable jets at the point ``values``."""
        values = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])
        nvars = len(values)
        return tuple(cls.variable(v, i, nvars, order) for i, v in enumerate(values))

    # -- access -------------------------------------------------------------

    @property
    def value(self):
        return self.c[0]

    def coeff(self, alpha: Sequence[int]):
        return self.c[_index_map(self.nvars, self.order)[tuple(alpha)]]

    def partial(self, alpha: Sequence[int]):
        """The partial derivative ``d^alpha f`` at the expansion point."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError(f"derivative {alpha} exceeds jet order {self.order}")
        return _factorial(alpha) * self.coeff(alpha)

    def grad(self) -> np.ndarray:
        return np.stack([self.partial(tuple(int(i == k) for i in range(self.nvars)))
                         for k in range(self.nvars)])

    def hessian(self) -> np.ndarray:
        n = self.nvars
        rows = []
        for i in range(n):
            row = []
            for k in range(n):
                alpha = [0] * n
                alpha[i] += 1
                alpha[k] += 1
                row.append(self.partial(alpha))
            rows.append(np.stack(row))
        return np.stack(rows)

    def diff(self, var: int) -> "Jet":
        """Jet of ``d f / d x_var``, one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.nvars, self.order, var)
        fac = fac.reshape((-1,) + (1,) * (self.c.ndim - 1))
        return Jet(self.c[src] * fac, self.nvars, self.order - 1)

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot raise jet order")
        return Jet(self.c[_truncation(self.nvars, self.order, order)], self.nvars, order)

    @property
    def real(self) -> "Jet":
        return Jet(self.c.real.copy(), self.nvars, self.order)

    @property
    def imag(self) -> "Jet":
        return Jet(self.c.imag.copy(), self.nvars, self.order)

    def conj(self) -> "Jet":
        return Jet(self.c.conj(), self.nvars, self.order)

    def __getitem__(self, item) -> "Jet":
        """Index the batch dimensions."""
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.c[(slice(None),) + item], self.nvars, self.order)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        value = np.asarray(other)
        batch = np.broadcast_shapes(value.shape, self.c.shape[1:])
        return self, Jet.constant(np.broadcast_to(value, batch), self.nvars, self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c + b.c, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.c - b.c, a.nvars, a.order)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            return Jet(self.c * other[None, ...], self.nvars, self.order)
        a, b = self._coerce(other)
        t = _product_tensor(a.nvars, a.order)
        return Jet(np.einsum("kij,i...,j...->k...", t, a.c, b.c), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other)
            if np.any(other == 0):
                raise JetDomainError("division by zero", other)
            return Jet(self.c / other[None, ...], self.nvars, self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(np.ones_like(self.value), self.nvars, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        return self.power(p)

    def compose(self, derivs: Sequence) -> "Jet":
        """``f(self)`` given ``derivs[n] = f^(n)(value)`` for n = 0..order."""
        h = Jet(self.c.copy(), self.nvars, self.order)
        h.c[0] = 0
        out = Jet.constant(derivs[0], self.nvars, self.order)
        hn = None
        for n in range(1, self.order + 1):
            hn = h if hn is None else hn * h
            out = out + hn * (np.asarray(derivs[n]) / math.factorial(n))
        return out

    def reciprocal(self) -> "Jet":
        v = self.value
        if np.any(v == 0):
            raise JetDomainError("division by a zero-valued jet", v)
        derivs = [(-1) ** n * math.factorial(n) / v ** (n + 1) for n in range(self.order + 1)]
        return self.compose(derivs)

    def power(self, p: float) -> "Jet":
        """Real power ``self**p``; for complex jets the principal branch."""
        v = self.value
        if np.iscomplexobj(v):
            _check_branch(v)
            vp = np.power(v, p)
        else:
            if np.any(v <= 0):
                raise JetDomainError(f"power {p} of a nonpositive-valued jet", v)
            vp = np.power(v, p)
        derivs = []
        coef = 1.0
        for n in range(self.order + 1):
            derivs.append(coef * vp / v ** n)
            coef *= p - n
        return self.compose(derivs)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def log(self) -> "Jet":
        v = self.value
        if np.iscomplexobj(v) or np.any(v <= 0):
            raise JetDomainError("log of a nonpositive-valued jet", v)
        derivs = [np.log(v)] + [(-1) ** (n - 1) * math.factorial(n - 1) / v ** n
                                for n in range(1, self.order + 1)]
        return self.compose(derivs)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value!r})"


# relative half-width of the excluded band around the negative real axis
BRANCH_BAND = 1e-9


def _check_branch(v) -> None:
    v = np.asarray(v)
    bad = (v.real <= 0) & (np.abs(v.imag) <= BRANCH_BAND * np.maximum(np.abs(v), 1e-300))
    if np.any(bad):
        raise BranchAmbiguityError("complex square root on the principal branch cut", v)


def sqrt(x):
    """Square root of a jet or a plain number."""
    if isinstance(x, Jet):
        return x.sqrt()
    return np.sqrt(x)


def jet_sqrt_quadratic(q: Jet) -> Jet:
    """sqrt of a positive-valued jet (the one transcendental the norms need)."""
    if np.iscomplexobj(q.value):
        return q.sqrt()
    if np.any(q.value <= 0):
        raise JetDomainError("sqrt of a nonpositive-valued jet", q.value)
    return q.sqrt()


def Jet2(rho, eta) -> tuple[Jet, Jet]:
    """Seed jets for ``(rho, eta)`` at order 3."""
    return Jet.seed((rho, eta), order=3)


def Jet3(x, y, z) -> tuple[Jet, Jet, Jet]:
    """Seed jets for three variables at order 2."""
    return Jet.seed((x, y, z), order=2)


def stack_values(jets: Iterable[Jet]) -> np.ndarray:
    return np.stack([j.value for j in jets])
