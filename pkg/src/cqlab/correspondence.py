"""The classical-to-quantum correspondence map on states and variables.

States: a Gaussian measure with dispersion alpha is sent to the density
operator D = cov/alpha (unit trace).  The extended map divides by the
state's own dispersion, so it also covers approximate-dispersion and
non-Gaussian second-moment states, at the price of injectivity.

Variables: f is sent to half its second derivative at the vacuum.  The
higher-order map keeps one symmetric form per even Taylor order, scaled
by alpha^(k-1)/(2k)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ClassMembershipError, DegenerateStateError, DimensionMismatchError, OrderError
from .functionals import Functional, SymmetricForm
from .gaussian import EXACT_CLASS_RTOL, GaussianState
from .hilbert import require_symmetric, trace_product
from .wick import MAX_TRACE_ORDER, moment_form, trace_forms

DENSITY_TRACE_ATOL = 1e-9
DENSITY_EIG_FLOOR = -1e-12


@dataclass(frozen=True)
class DensityOperator:
    """Symmetric positive unit-trace operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = require_symmetric(self.matrix)
        object.__setattr__(self, "matrix", m)
        tr = float(np.trace(m))
        if abs(tr - 1.0) > DENSITY_TRACE_ATOL:
            raise ValueError(f"density operator must have unit trace, got {tr!r}")
        min_eig = float(np.linalg.eigvalsh(m).min())
        if min_eig < DENSITY_EIG_FLOOR:
            raise ValueError(f"density operator has eigenvalue {min_eig:.3e} < {DENSITY_EIG_FLOOR}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_dict(self) -> dict:
        return {"order": 2, "dim": self.dim,
                "matrix": [[float(x) for x in row] for row in self.matrix]}


@dataclass(frozen=True)
class ObservableMultiple:
    """Observable of the generalized model: forms at orders 2, 4, ..., 2n."""

    forms: tuple[SymmetricForm, ...]

    def __post_init__(self):
        orders = [f.order for f in self.forms]
        if orders != list(range(2, 2 * len(orders) + 1, 2)):
            raise OrderError(f"expected orders 2, 4, ... in steps of 2, got {orders}")

    @property
    def order(self) -> int:
        return 2 * len(self.forms)

    def to_dict(self) -> dict:
        return {"orders": [f.order for f in self.forms],
                "components": [_form_to_dict(f) for f in self.forms]}


def _form_to_dict(form: SymmetricForm) -> dict:
    out: dict = {"order": form.order, "dim": form.dim, "kind": form.kind}
    if form.kind == "pairing":
        out["coefficient"] = float(form.coeff)
        out["matrix"] = [[float(x) for x in row] for row in form.matrix]
    elif form.kind == "dense" and form.order == 2:
        out["matrix"] = [[float(x) for x in row] for row in form.tensor]
    elif form.kind == "dense" and form.dim ** form.order <= 4096:
        out["entries"] = form.tensor.tolist()
    return out


def t_state(rho: GaussianState, alpha: float) -> DensityOperator:
    """Map a dispersion-alpha Gaussian state to D = cov/alpha."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    disp = rho.dispersion()
    if disp == 0.0:
        raise DegenerateStateError("zero-covariance state has no quantum image")
    if abs(disp - alpha) > EXACT_CLASS_RTOL * alpha:
        raise ClassMembershipError(
            f"state dispersion {disp!r} is outside the alpha={alpha!r} class")
    return DensityOperator(rho.covariance / alpha)


def t_state_extended(state) -> DensityOperator:
    """Map any zero-mean second-moment state to cov/dispersion (unit trace).

    Accepts anything exposing `covariance` and `dispersion()`; this map is
    deliberately not injective.
    """
    disp = float(state.dispersion())
    if not disp > 0.0:
        raise DegenerateStateError("state with zero dispersion has no normalized image")
    return DensityOperator(np.asarray(state.covariance, dtype=np.float64) / disp)


def t_variable(f: Functional) -> np.ndarray:
    """Map a variable to half its second derivative at the vacuum."""
    form = f.taylor_form(2)
    if form.is_zero:
        return np.zeros((f.dim, f.dim))
    return 0.5 * form.matrix_representation()


def quantum_average(d: DensityOperator, a) -> float:
    """Trace-formula average Tr D A."""
    am = np.asarray(a, dtype=np.float64)
    if am.shape != d.matrix.shape:
        raise DimensionMismatchError(f"shape mismatch {am.shape} vs {d.matrix.shape}")
    return trace_product(d.matrix, am)


def t2n_variable(f: Functional, n: int, alpha: float) -> ObservableMultiple:
    """Higher-order map: component at order 2k is alpha^(k-1)/(2k)! f^(2k)(0)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    forms = []
    for k in range(1, n + 1):
        scale = alpha ** (k - 1) / math.factorial(2 * k)
        forms.append(f.taylor_form(2 * k).scaled(scale))
    return ObservableMultiple(tuple(forms))


def generalized_average(d: DensityOperator, a: ObservableMultiple) -> float:
    """Average in the generalized model: sum_k Tr e(2k, D) A_2k."""
    if a.order > MAX_TRACE_ORDER:
        raise OrderError(f"generalized averages capped at order {MAX_TRACE_ORDER}")
    total = 0.0
    for form in a.forms:
        if form.is_zero:
            continue
        if form.order == 2:
            total += quantum_average(d, form.matrix_representation())
        else:
            total += trace_forms(moment_form(d.matrix, form.order), form)
    return total


def variables_equivalent(f: Functional, g: Functional, atol: float = 1e-12) -> bool:
    """True iff f and g share the same second derivative at the vacuum."""
    fa = t_variable(f)
    ga = t_variable(g)
    if fa.shape != ga.shape:
        raise DimensionMismatchError(f"shape mismatch {fa.shape} vs {ga.shape}")
    return bool(np.abs(fa - ga).max(initial=0.0) <= atol)
