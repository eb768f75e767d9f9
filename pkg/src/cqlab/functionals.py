"""Classical field variables and their Taylor data at the vacuum.

Every built-in family is even in psi and vanishes at zero.  Taylor
coefficients are supplied analytically as symmetric k-linear forms, not by
numeric differentiation: the correspondence maps need f''(0) and f''''(0)
exactly.

Forms induced by powers of a quadratic form, e.g. (A psi, psi)^m, are kept
in a factored pairing representation and densified only on demand.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np

from .errors import DimensionMismatchError, OrderError, SizeError
from .hilbert import as_vector, operator_norm, symmetric_from_entries
from .pairings import double_factorial, perfect_matchings

# Dense tensors beyond order 6 are never materialized; factored forms may
# carry order 8 (the largest order the pairing enumerator supports).
MAX_DENSE_ORDER = 6
MAX_FORM_ORDER = 8
_DENSE_SIZE_LIMIT = 20_000_000


def symmetrize_tensor(t: np.ndarray) -> np.ndarray:
    """Average a tensor over all axis permutations.

    Each orbit's average is computed once (at the sorted index slot) and
    broadcast to every permuted position, so the output is bitwise
    permutation-invariant and symmetrization is exactly idempotent;
    already-symmetric input is returned unchanged.
    """
    k = t.ndim
    if k <= 1:
        return t
    axes = tuple(range(k))
    if all(
        np.array_equal(t, np.transpose(t, axes[:i] + (axes[i + 1], axes[i]) + axes[i + 2:]))
        for i in range(k - 1)
    ):
        return t
    acc = np.zeros_like(t)
    for perm in permutations(axes):
        acc += np.transpose(t, perm)
    acc /= float(math.factorial(k))
    canon = np.sort(np.indices(t.shape).reshape(k, -1), axis=0)
    return acc[tuple(canon)].reshape(t.shape)


class SymmetricForm:
    """Symmetric k-linear form on R^n.

    kind == "dense":   explicit tensor with k axes.
    kind == "pairing": coeff * sum over perfect matchings of prod (z_a, M z_b),
                       order 2m; this is coeff*(2m-1)!! * sym(M tensor-power m).
    kind == "zero":    identically zero at any order.
    """

    def __init__(self, kind: str, order: int, dim: int, tensor=None,
                 matrix=None, npairs: int = 0, coeff: float = 0.0):
        self.kind = kind
        self.order = order
        self.dim = dim
        self.tensor = tensor
        self.matrix = matrix
        self.npairs = npairs
        self.coeff = coeff

    @classmethod
    def zero(cls, order: int, dim: int) -> "SymmetricForm":
        return cls("zero", order, dim)

    @classmethod
    def from_dense(cls, tensor) -> "SymmetricForm":
        t = np.asarray(tensor, dtype=np.float64)
        if t.ndim < 1:
            raise OrderError("a form needs at least one axis")
        if t.ndim > MAX_DENSE_ORDER:
            raise SizeError(f"dense forms are capped at order {MAX_DENSE_ORDER}")
        dims = set(t.shape)
        if len(dims) != 1:
            raise DimensionMismatchError(f"tensor axes disagree: shape {t.shape}")
        return cls("dense", t.ndim, t.shape[0], tensor=symmetrize_tensor(t))

    @classmethod
    def from_matrix(cls, m) -> "SymmetricForm":
        mm = symmetric_from_entries(m)
        return cls("dense", 2, mm.shape[0], tensor=mm)

    @classmethod
    def from_quadratic_power(cls, m, power: int, scale: float) -> "SymmetricForm":
        """The symmetric form whose diagonal is scale * ((M psi, psi))^power."""
        mm = symmetric_from_entries(m)
        order = 2 * power
        if order > MAX_FORM_ORDER:
            raise OrderError(f"factored forms are capped at order {MAX_FORM_ORDER}")
        coeff = scale / double_factorial(2 * power - 1)
        return cls("pairing", order, mm.shape[0], matrix=mm, npairs=power, coeff=coeff)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "pairing" and self.coeff == 0.0)

    def scaled(self, c: float) -> "SymmetricForm":
        if self.kind == "zero":
            return self
        if self.kind == "pairing":
            return SymmetricForm("pairing", self.order, self.dim, matrix=self.matrix,
                                 npairs=self.npairs, coeff=self.coeff * c)
        return SymmetricForm("dense", self.order, self.dim, tensor=self.tensor * c)

    def __call__(self, *args) -> float:
        vs = [as_vector(a, self.dim) for a in args]
        if len(vs) != self.order:
            raise OrderError(f"form of order {self.order} got {len(vs)} arguments")
        if self.kind == "zero":
            return 0.0
        if self.kind == "pairing":
            z = np.stack(vs)
            gram = z @ self.matrix @ z.T
            total = 0.0
            for matching in perfect_matchings(self.npairs):
                term = 1.0
                for a, b in matching:
                    term *= gram[a, b]
                total += term
            return float(self.coeff * total)
        cur = self.tensor
        for v in vs:
            cur = np.tensordot(cur, v, axes=([0], [0]))
        return float(cur)

    def eval_diag(self, psi) -> float:
        """Value on the repeated argument (psi, ..., psi)."""
        v = as_vector(psi, self.dim)
        if self.kind == "zero":
            return 0.0
        if self.kind == "pairing":
            q = float(v @ self.matrix @ v)
            return float(self.coeff * double_factorial(2 * self.npairs - 1) * q ** self.npairs)
        cur = self.tensor
        for _ in range(self.order):
            cur = cur @ v
        return float(cur)

    def eval_diag_batch(self, x: np.ndarray, block: int = 2048) -> np.ndarray:
        """Diagonal values for each row of x, shape (N,)."""
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatchError(f"expected (N, {self.dim}) samples, got {x.shape}")
        if self.kind == "zero":
            return np.zeros(x.shape[0])
        if self.kind == "pairing":
            q = np.einsum("pi,ij,pj->p", x, self.matrix, x)
            return self.coeff * double_factorial(2 * self.npairs - 1) * q ** self.npairs
        out = np.empty(x.shape[0])
        flat = self.tensor.reshape(self.dim, -1)
        for start in range(0, x.shape[0], block):
            v = x[start:start + block]
            cur = v @ flat
            for _ in range(self.order - 1):
                cur = np.einsum("pi,pij->pj", v, cur.reshape(v.shape[0], self.dim, -1))
            out[start:start + block] = cur[:, 0]
        return out

    def dense(self) -> np.ndarray:
        if self.order > MAX_DENSE_ORDER:
            raise SizeError(f"dense materialization capped at order {MAX_DENSE_ORDER}")
        if self.dim ** self.order > _DENSE_SIZE_LIMIT:
            raise SizeError(
                f"dense tensor of order {self.order} at dim {self.dim} is too large")
        if self.kind == "zero":
            return np.zeros((self.dim,) * self.order)
        if self.kind == "dense":
            return self.tensor
        letters = "abcdefgh"[: self.order]
        acc = np.zeros((self.dim,) * self.order)
        for matching in perfect_matchings(self.npairs):
            script = ",".join(letters[a] + letters[b] for a, b in matching) + "->" + letters
            acc += np.einsum(script, *([self.matrix] * self.npairs))
        return self.coeff * acc

    def matrix_representation(self) -> np.ndarray:
        """Order-2 forms only: the symmetric matrix M with form(u, v) = (M u, v)."""
        if self.order != 2:
            raise OrderError(f"matrix representation needs order 2, got {self.order}")
        return self.dense()

    def norm_bound(self) -> float:
        """Upper bound on sup |form(z_1..z_k)| over unit vectors."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "pairing":
            nm = float(np.sqrt(np.sum(self.matrix ** 2)))
            return abs(self.coeff) * double_factorial(2 * self.npairs - 1) * nm ** self.npairs
        return float(np.sqrt(np.sum(self.tensor ** 2)))


class Functional:
    """A classical variable f with f(0) = 0, even in psi."""

    dim: int

    def eval(self, psi) -> float:
        raise NotImplementedError

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def taylor_form(self, k: int) -> SymmetricForm:
        """Exact k-th Taylor coefficient f^(k)(0) as a symmetric k-form."""
        raise NotImplementedError

    def quad_growth_constants(self) -> tuple[float, float]:
        """Declared (c1, c2) for the bound |f(psi)| <= c1 + c2 ||psi||^2."""
        raise NotImplementedError

    def growth_bound(self) -> tuple[float, float]:
        """Declared (C0, C1) for the bound |f(psi)| <= C0 exp(C1 ||psi||)."""
        raise NotImplementedError

    def __call__(self, psi) -> float:
        return self.eval(psi)

    def _check_order(self, k: int) -> None:
        if k < 1:
            raise OrderError(f"Taylor order must be >= 1, got {k}")
        if k > MAX_FORM_ORDER:
            raise OrderError(f"Taylor data capped at order {MAX_FORM_ORDER}")


class Quadratic(Functional):
    """f(psi) = (A psi, psi)."""

    def __init__(self, a):
        self.operator = symmetric_from_entries(a)
        self.dim = self.operator.shape[0]

    def eval(self, psi) -> float:
        v = as_vector(psi, self.dim)
        return float(v @ self.operator @ v)

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("pi,ij,pj->p", x, self.operator, x)

    def taylor_form(self, k: int) -> SymmetricForm:
        self._check_order(k)
        if k == 2:
            return SymmetricForm.from_matrix(2.0 * self.operator)
        return SymmetricForm.zero(k, self.dim)

    def quad_growth_constants(self) -> tuple[float, float]:
        return 0.0, operator_norm(self.operator)

    def growth_bound(self) -> tuple[float, float]:
        # x^2 <= 2 e^x for x >= 0
        return 2.0 * operator_norm(self.operator), 1.0


class SinQuad(Functional):
    """f(psi) = sin((A psi, psi))."""

    def __init__(self, a):
        self.operator = symmetric_from_entries(a)
        self.dim = self.operator.shape[0]

    def eval(self, psi) -> float:
        v = as_vector(psi, self.dim)
        return float(np.sin(v @ self.operator @ v))

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        return np.sin(np.einsum("pi,ij,pj->p", x, self.operator, x))

    def taylor_form(self, k: int) -> SymmetricForm:
        # sin q = q - q^3/6 + ... contributes at degrees 2, 6, 10, ...
        self._check_order(k)
        if k == 2:
            return SymmetricForm.from_matrix(2.0 * self.operator)
        if k == 6:
            return SymmetricForm.from_quadratic_power(self.operator, 3, -120.0)
        return SymmetricForm.zero(k, self.dim)

    def quad_growth_constants(self) -> tuple[float, float]:
        return 1.0, 0.0

    def growth_bound(self) -> tuple[float, float]:
        return 1.0, 0.0


class CosQuadMinusOne(Functional):
    """f(psi) = cos((A psi, psi)) - 1."""

    def __init__(self, a):
        self.operator = symmetric_from_entries(a)
        self.dim = self.operator.shape[0]

    def eval(self, psi) -> float:
        v = as_vector(psi, self.dim)
        return float(np.cos(v @ self.operator @ v) - 1.0)

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        return np.cos(np.einsum("pi,ij,pj->p", x, self.operator, x)) - 1.0

    def taylor_form(self, k: int) -> SymmetricForm:
        # cos q - 1 = -q^2/2 + q^4/24 - ... contributes at degrees 4, 8, ...
        self._check_order(k)
        if k == 4:
            return SymmetricForm.from_quadratic_power(self.operator, 2, -12.0)
        if k == 8:
            return SymmetricForm.from_quadratic_power(self.operator, 4, 1680.0)
        return SymmetricForm.zero(k, self.dim)

    def quad_growth_constants(self) -> tuple[float, float]:
        return 2.0, 0.0

    def growth_bound(self) -> tuple[float, float]:
        return 2.0, 0.0


class EvenPolynomial(Functional):
    """f(psi) = sum_j Q_2j(psi, ..., psi) over even orders 2j."""

    def __init__(self, terms: dict[int, SymmetricForm | np.ndarray]):
        if not terms:
            raise ValueError("an even polynomial needs at least one term")
        self.terms: dict[int, SymmetricForm] = {}
        dims = set()
        for order, q in sorted(terms.items()):
            if order < 2 or order % 2 != 0:
                raise OrderError(f"even polynomial terms need even order >= 2, got {order}")
            form = q if isinstance(q, SymmetricForm) else (
                SymmetricForm.from_matrix(q) if np.asarray(q).ndim == 2
                else SymmetricForm.from_dense(q))
            if form.order != order:
                raise OrderError(f"term labelled {order} has order {form.order}")
            self.terms[order] = form
            dims.add(form.dim)
        if len(dims) != 1:
            raise DimensionMismatchError(f"terms live on different dimensions: {sorted(dims)}")
        self.dim = dims.pop()

    def eval(self, psi) -> float:
        v = as_vector(psi, self.dim)
        return float(sum(q.eval_diag(v) for q in self.terms.values()))

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape[0])
        for q in self.terms.values():
            out += q.eval_diag_batch(x)
        return out

    def taylor_form(self, k: int) -> SymmetricForm:
        self._check_order(k)
        if k in self.terms:
            return self.terms[k].scaled(float(math.factorial(k)))
        return SymmetricForm.zero(k, self.dim)

    def quad_growth_constants(self) -> tuple[float, float]:
        return 0.0, sum(q.norm_bound() for q in self.terms.values())

    def growth_bound(self) -> tuple[float, float]:
        c0 = sum(math.factorial(order) * q.norm_bound() for order, q in self.terms.items())
        return c0, 1.0


class ScaledFunctional(Functional):
    """c * f, used for measurement-gain amplification."""

    def __init__(self, base: Functional, factor: float):
        if isinstance(base, ScaledFunctional):
            factor = factor * base.factor
            base = base.base
        self.base = base
        self.factor = factor
        self.dim = base.dim

    def eval(self, psi) -> float:
        return self.factor * self.base.eval(psi)

    def eval_batch(self, x: np.ndarray) -> np.ndarray:
        return self.factor * self.base.eval_batch(x)

    def taylor_form(self, k: int) -> SymmetricForm:
        return self.base.taylor_form(k).scaled(self.factor)

    def quad_growth_constants(self) -> tuple[float, float]:
        c1, c2 = self.base.quad_growth_constants()
        return abs(self.factor) * c1, abs(self.factor) * c2

    def growth_bound(self) -> tuple[float, float]:
        c0, c1 = self.base.growth_bound()
        return abs(self.factor) * c0, c1


def amplify(f: Functional, alpha: float) -> Functional:
    """Gain form f_alpha = f / alpha of a variable."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return ScaledFunctional(f, 1.0 / alpha)


def quadratic_growth_check(f: Functional, probes) -> bool:
    """True iff |f| <= c1 + c2 ||psi||^2 at every probe, with declared constants."""
    probes = list(probes)
    if not probes:
        raise ValueError("need at least one probe")
    c1, c2 = f.quad_growth_constants()
    for p in probes:
        v = as_vector(p, f.dim)
        bound = c1 + c2 * float(v @ v)
        if abs(f.eval(v)) > bound * (1.0 + 1e-12) + 1e-15:
            return False
    return True
