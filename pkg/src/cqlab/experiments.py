"""Experiment orchestration: Monte-Carlo vs analytic averages, dispersion
sweeps with remainder-order fitting, pure-state demonstrations, sub-dispersion
states, non-Gaussian second-moment states, and the small-dimension end-to-end
demo.

Remainder fitting prefers closed-form classical averages (exact for
polynomials; determinant formula for the sin/cos families) because MC noise
at small dispersion swamps the quadratic-order remainders at feasible sample
counts.  MC estimates stay in every report as sanity overlays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correspondence import (
    generalized_average,
    quantum_average,
    t2n_variable,
    t_state,
    t_state_extended,
    t_variable,
)
from .errors import ClassMembershipError, ConfigError, OrderError
from .functionals import (
    CosQuadMinusOne,
    EvenPolynomial,
    Functional,
    Quadratic,
    ScaledFunctional,
    SinQuad,
    SymmetricForm,
    amplify,
)
from .gaussian import (
    DEFAULT_CHUNK_SIZE,
    GaussianState,
    SampleBatch,
    chebyshev_tail,
    draw_chunked,
    exact_span_coefficients,
    pure_state_measure,
)
from .hilbert import as_vector, operator_norm, symmetric_from_entries, trace_product
from .wick import gaussian_integral_multilinear, moment_form_eval, moment_mc_check

# Large odd stride so per-row substream seeds never collide for small indices.
_SEED_STRIDE = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, index: int) -> int:
    return (seed + index * _SEED_STRIDE) & _MASK64


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int
    alpha_grid: tuple[float, ...]
    functional_spec: dict
    state_spec: dict
    mc_samples: int
    seed: int
    order: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        grid = tuple(float(a) for a in self.alpha_grid)
        if not grid or any(a <= 0.0 for a in grid):
            raise ConfigError("alpha_grid must contain positive values")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("alpha_grid must be strictly decreasing")
        object.__setattr__(self, "alpha_grid", grid)
        if self.mc_samples < 1000:
            raise ConfigError(f"mc_samples must be >= 1000, got {self.mc_samples}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")


def build_operator(spec, dim: int) -> np.ndarray:
    """Operator from a config fragment: identity, diagonal, matrix or random."""
    if spec == "identity" or spec is None:
        return np.eye(dim)
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"bad operator spec: {spec!r}")
    kind, payload = next(iter(spec.items()))
    if kind == "diagonal":
        d = np.asarray(payload, dtype=np.float64)
        if d.shape != (dim,):
            raise ConfigError(f"diagonal of length {d.shape} does not match dim {dim}")
        return np.diag(d)
    if kind == "matrix":
        m = np.asarray(payload, dtype=np.float64)
        if m.shape != (dim, dim):
            raise ConfigError(f"matrix of shape {m.shape} does not match dim {dim}")
        return symmetric_from_entries(m)
    if kind == "random":
        seed = int(payload.get("seed", 0))
        scale = float(payload.get("scale", 1.0))
        extra = set(payload) - {"seed", "scale"}
        if extra:
            raise ConfigError(f"unknown random-operator keys: {sorted(extra)}")
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
        return symmetric_from_entries(scale * rng.standard_normal((dim, dim)))
    raise ConfigError(f"unknown operator kind {kind!r}")


def build_functional(spec: dict, dim: int) -> Functional:
    family = spec.get("family")
    if family == "quadratic":
        return Quadratic(build_operator(spec.get("operator"), dim))
    if family == "sin-quad":
        return SinQuad(build_operator(spec.get("operator"), dim))
    if family == "cos-quad-minus-one":
        return CosQuadMinusOne(build_operator(spec.get("operator"), dim))
    if family == "even-polynomial":
        terms: dict[int, SymmetricForm] = {}
        if spec.get("quadratic") is not None:
            terms[2] = SymmetricForm.from_matrix(build_operator(spec["quadratic"], dim))
        if spec.get("quartic") is not None:
            q = spec["quartic"]
            terms[4] = SymmetricForm.from_quadratic_power(
                build_operator(q.get("operator"), dim), 2, float(q.get("coeff", 1.0)))
        if not terms:
            raise ConfigError("even-polynomial needs a quadratic or quartic term")
        return EvenPolynomial(terms)
    raise ConfigError(f"unknown functional family {family!r}")


def build_state(spec: dict, dim: int, alpha: float) -> GaussianState:
    """Gaussian state of dispersion alpha with the configured covariance shape."""
    shape = spec.get("shape", "isotropic")
    if shape == "isotropic":
        return GaussianState(np.eye(dim) * (alpha / dim))
    if shape == "diagonal":
        w = np.asarray(spec.get("weights"), dtype=np.float64)
        if w.shape != (dim,) or np.any(w < 0.0) or w.sum() <= 0.0:
            raise ConfigError("diagonal state needs nonnegative weights of length dim")
        return GaussianState(np.diag(alpha * w / w.sum()))
    if shape == "rank1":
        psi = as_vector(spec.get("psi"), dim)
        nrm2 = float(psi @ psi)
        if nrm2 <= 0.0:
            raise ConfigError("rank1 state needs a nonzero psi")
        return pure_state_measure(psi / math.sqrt(nrm2), alpha)
    if shape == "random":
        seed = int(spec.get("seed", 0))
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, 1], dtype=np.uint64)))
        m = rng.standard_normal((dim, dim))
        b = m @ m.T
        return GaussianState(b * (alpha / np.trace(b)))
    raise ConfigError(f"unknown state shape {shape!r}")


# ---------------------------------------------------------------------------
# non-Gaussian second-moment states


class SecondMomentState:
    """Zero-mean non-Gaussian state with a known covariance operator."""

    def __init__(self, kind: str, covariance: np.ndarray, sampler):
        self.kind = kind
        self.covariance = covariance
        self.dim = covariance.shape[0]
        self._sampler = sampler

    def dispersion(self) -> float:
        return float(np.trace(self.covariance))

    def sample(self, seed: int, count: int, chunk_size: int = DEFAULT_CHUNK_SIZE,
               workers: int = 1) -> SampleBatch:
        return draw_chunked(seed, count, self._sampler, chunk_size=chunk_size, workers=workers)

    @classmethod
    def product_laplace(cls, variances) -> "SecondMomentState":
        v = np.asarray(variances, dtype=np.float64)
        if np.any(v < 0.0):
            raise ValueError("variances must be nonnegative")
        scales = np.sqrt(v / 2.0)  # Laplace(0, b) has variance 2 b^2

        def fill(rng: np.random.Generator, m: int) -> np.ndarray:
            return rng.laplace(0.0, 1.0, size=(m, v.size)) * scales

        return cls("product-laplace", np.diag(v), fill)

    @classmethod
    def uniform_sphere(cls, radius: float, dim: int) -> "SecondMomentState":
        if not radius > 0.0:
            raise ValueError("radius must be positive")

        def fill(rng: np.random.Generator, m: int) -> np.ndarray:
            z = rng.standard_normal((m, dim))
            norms = np.linalg.norm(z, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            return radius * z / norms

        return cls("uniform-sphere-radius", (radius ** 2 / dim) * np.eye(dim), fill)


def build_second_moment_state(spec: dict, dim: int, alpha: float) -> SecondMomentState:
    kind = spec.get("sampler", "product-laplace")
    if kind == "product-laplace":
        return SecondMomentState.product_laplace(np.full(dim, alpha / dim))
    if kind == "uniform-sphere":
        return SecondMomentState.uniform_sphere(math.sqrt(alpha), dim)
    raise ConfigError(f"unknown non-Gaussian sampler {kind!r}")


# ---------------------------------------------------------------------------
# averages


def mc_average(f: Functional, state, n_samples: int, seed: int,
               workers: int = 1) -> tuple[float, float]:
    """Sample mean and standard error of f over a deterministic batch.

    The mean is a pairwise reduction over the assembled value array, so it
    does not depend on how many workers filled the batch.
    """
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    batch = state.sample(seed, n_samples, workers=workers)
    values = f.eval_batch(batch.samples)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples))
    return mean, stderr


def analytic_average(f: Functional, rho: GaussianState, max_order: int) -> float:
    """Taylor/Wick average: sum over even orders 2k <= max_order of
    (1/(2k)!) Tr e(2k, B) f^(2k)(0).  Exact when f is a polynomial of
    degree <= max_order."""
    if max_order > 6:
        raise OrderError(f"analytic averages capped at order 6, got {max_order}")
    total = 0.0
    for two_k in range(2, max_order + 1, 2):
        form = f.taylor_form(two_k)
        if form.is_zero:
            continue
        total += gaussian_integral_multilinear(form, rho.covariance) / math.factorial(two_k)
    return total


def closed_form_average(f: Functional, rho: GaussianState) -> float | None:
    """Exact classical average when one is known for the family, else None.

    For sin/cos of a quadratic form the average follows from the
    characteristic function of (A psi, psi) under the Gaussian measure:
    E exp(i (A psi, psi)) = prod_j (1 - 2 i mu_j)^(-1/2) with mu_j the
    eigenvalues of F^T A F, F F^T = B.
    """
    if isinstance(f, ScaledFunctional):
        inner = closed_form_average(f.base, rho)
        return None if inner is None else f.factor * inner
    if isinstance(f, Quadratic):
        return trace_product(rho.covariance, f.operator)
    if isinstance(f, EvenPolynomial):
        return float(sum(
            gaussian_integral_multilinear(q, rho.covariance) for q in f.terms.values()))
    if isinstance(f, (SinQuad, CosQuadMinusOne)):
        fmat = rho.sampling_matrix()
        mu = np.linalg.eigvalsh(fmat.T @ f.operator @ fmat)
        char = complex(np.prod((1.0 - 2.0j * mu) ** -0.5))
        if isinstance(f, SinQuad):
            return float(char.imag)
        return float(char.real) - 1.0
    return None


# ---------------------------------------------------------------------------
# dispersion sweep


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    classical_mc: float
    classical_analytic: float | None
    quantum_term: float
    remainder: float
    stderr: float
    below_noise: bool

    def __post_init__(self):
        if self.stderr < 0.0:
            raise ValueError("stderr must be nonnegative")


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    fitted_slope: float | None
    fitted_intercept: float | None
    noise_limited: bool
    excluded: int

    def passed(self, lo: float | None = None, hi: float | None = None) -> bool:
        if lo is None and hi is None:
            return True
        if self.fitted_slope is None:
            return False
        if lo is not None and self.fitted_slope < lo:
            return False
        if hi is not None and self.fitted_slope > hi:
            return False
        return True


def alpha_sweep(cfg: ExperimentConfig, workers: int = 1) -> SweepResult:
    """Classical vs quantum-term averages along the dispersion grid, with a
    log-log fit of the remainder order.

    Rows whose remainder is not resolved (below 4 MC standard errors when
    only MC is available, or at the floating-point floor for exact values)
    are flagged and excluded from the fit.
    """
    if len(cfg.alpha_grid) < 3:
        raise ConfigError("a sweep needs at least 3 grid points")
    if cfg.alpha_grid[0] / cfg.alpha_grid[-1] < 100.0:
        raise ConfigError("a sweep grid must span at least two decades")
    f = build_functional(cfg.functional_spec, cfg.dim)
    a_quant = t_variable(f)
    rows = []
    for i, alpha in enumerate(cfg.alpha_grid):
        rho = build_state(cfg.state_spec, cfg.dim, alpha)
        d = t_state(rho, alpha)
        quantum_term = alpha * quantum_average(d, a_quant)
        analytic = closed_form_average(f, rho)
        mc, stderr = mc_average(f, rho, cfg.mc_samples, derive_seed(cfg.seed, i), workers=workers)
        classical = analytic if analytic is not None else mc
        remainder = classical - quantum_term
        scale = max(abs(classical), abs(quantum_term), 1.0)
        if analytic is None:
            floor = 4.0 * stderr
        else:
            floor = 1e-12 * scale
        rows.append(SweepRow(
            alpha=alpha, classical_mc=mc, classical_analytic=analytic,
            quantum_term=quantum_term, remainder=remainder, stderr=stderr,
            below_noise=abs(remainder) <= floor))
    fit_rows = [r for r in rows if not r.below_noise]
    if len(fit_rows) < 2:
        return SweepResult(tuple(rows), None, None, True, len(rows) - len(fit_rows))
    logs_a = np.log(np.array([r.alpha for r in fit_rows]))
    logs_r = np.log(np.array([abs(r.remainder) for r in fit_rows]))
    slope, intercept = np.polyfit(logs_a, logs_r, 1)
    return SweepResult(tuple(rows), float(slope), float(intercept), False,
                       len(rows) - len(fit_rows))


# ---------------------------------------------------------------------------
# pure states


def pure_state_experiment(psi, alpha: float, a, n_samples: int, seed: int,
                          workers: int = 1) -> dict:
    """Rank-1 mixture demo: amplified average, exact span membership, and the
    sample-covariance shape against psi (x) psi."""
    v = as_vector(psi)
    am = symmetric_from_entries(a)
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"the quantum comparison needs a unit vector, got norm {nrm!r}")
    rho = pure_state_measure(v, alpha)
    batch = rho.sample(seed, n_samples, workers=workers)
    x = batch.samples

    f = Quadratic(am)
    values = f.eval_batch(x) / alpha
    amp_mean = float(np.mean(values))
    amp_stderr = float(np.std(values, ddof=1) / math.sqrt(n_samples))
    expected = float(v @ am @ v)

    direction = rho.sampling_matrix()[:, 0]
    ok, _coeffs = exact_span_coefficients(x, direction)
    zero_cols = np.nonzero(direction == 0.0)[0]
    zeros_exact = bool(np.all(x[:, zero_cols] == 0.0)) if zero_cols.size else True

    b = rho.covariance
    cov_hat = (x.T @ x) / n_samples / alpha
    target = np.outer(v, v)
    band = 4.0 * np.sqrt((np.outer(np.diag(b), np.diag(b)) + b ** 2) / n_samples) / alpha
    cov_ok = bool(np.all(np.abs(cov_hat - target) <= band + 1e-15))

    amp_ok = abs(amp_mean - expected) <= 4.0 * amp_stderr
    return {
        "alpha": alpha,
        "samples": n_samples,
        "amplified_average": {"mc": amp_mean, "stderr": amp_stderr,
                              "expected": expected, "passed": bool(amp_ok)},
        "span": {"exact_fraction": float(np.mean(ok)), "passed": bool(np.all(ok)),
                 "off_axis_zero": zeros_exact},
        "covariance_shape": {"max_error": float(np.abs(cov_hat - target).max()),
                             "passed": cov_ok},
        "passed": bool(amp_ok and np.all(ok) and zeros_exact and cov_ok),
    }


# ---------------------------------------------------------------------------
# sub-dispersion states


def sub_alpha_states(alpha: float, shrink: float, dim: int, hamiltonian,
                     n_samples: int, seed: int, workers: int = 1) -> dict:
    """States with dispersion shrink*alpha: the exact-dispersion map must
    reject them (they have no quantum image), the extended map still
    normalizes them, and the mean energy obeys |<H>| <= ||H|| sigma^2."""
    if not 0.0 < shrink <= 1.0:
        raise ValueError(f"shrink must be in (0, 1], got {shrink}")
    h = symmetric_from_entries(hamiltonian)
    sigma2 = shrink * alpha
    rho = GaussianState(np.eye(dim) * (sigma2 / dim))

    try:
        t_state(rho, alpha)
        exact = {"accepted": True, "error": None}
    except ClassMembershipError as exc:
        exact = {"accepted": False, "error": str(exc)}

    extended = t_state_extended(rho)
    extended_trace = float(np.trace(extended.matrix))

    mean, stderr = mc_average(Quadratic(h), rho, n_samples, seed, workers=workers)
    bound = operator_norm(h) * sigma2
    energy_ok = abs(mean) <= bound + 4.0 * stderr

    boundary = abs(sigma2 - alpha) <= 1e-9 * alpha
    rejection_ok = exact["accepted"] == boundary
    return {
        "alpha": alpha,
        "shrink": shrink,
        "dispersion": sigma2,
        "exact_mode": exact,
        "rejection_as_expected": bool(rejection_ok),
        "extended_trace": extended_trace,
        "energy": {"mc": mean, "stderr": stderr, "bound": bound, "passed": bool(energy_ok)},
        "passed": bool(rejection_ok and energy_ok and abs(extended_trace - 1.0) <= 1e-12),
    }


# ---------------------------------------------------------------------------
# non-Gaussian states


def nongaussian_experiment(state: SecondMomentState, a, n_samples: int, seed: int,
                           workers: int = 1) -> dict:
    """Quadratic averages see only the covariance; a quartic form exposes the
    non-Gaussian fourth moments against the Gaussian pairing prediction."""
    am = symmetric_from_entries(a)
    quad = Quadratic(am)
    mean, stderr = mc_average(quad, state, n_samples, seed, workers=workers)
    expected = trace_product(state.covariance, am)
    # the FP floor matters when the statistic is constant (uniform sphere
    # with A = I), where both the error and stderr sit at round-off scale
    quad_ok = abs(mean - expected) <= 4.0 * stderr + 1e-12 * max(1.0, abs(expected))

    quartic = SymmetricForm.from_quadratic_power(np.eye(state.dim), 2, 1.0)
    batch = state.sample(derive_seed(seed, 1), n_samples, workers=workers)
    q_values = quartic.eval_diag_batch(batch.samples)
    q_mean = float(np.mean(q_values))
    q_stderr = float(np.std(q_values, ddof=1) / math.sqrt(n_samples))
    gaussian_pred = gaussian_integral_multilinear(quartic, state.covariance)
    separation = abs(q_mean - gaussian_pred) / q_stderr if q_stderr > 0.0 else math.inf

    return {
        "kind": state.kind,
        "samples": n_samples,
        "quadratic": {"mc": mean, "stderr": stderr, "expected": expected,
                      "passed": bool(quad_ok)},
        "quartic": {"mc": q_mean, "stderr": q_stderr, "gaussian_prediction": gaussian_pred,
                    "separation_sigmas": float(separation), "separated": bool(separation > 4.0)},
        "passed": bool(quad_ok and separation > 4.0),
    }


# ---------------------------------------------------------------------------
# small-dimension end-to-end demo


def finite_qm_demo(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Full pipeline on R^n for small n with all analytic cross-checks."""
    if cfg.dim > 4:
        raise ConfigError("the end-to-end demo runs at dim <= 4")
    alpha = cfg.alpha_grid[0]
    n = cfg.dim
    rng = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, 2], dtype=np.uint64)))

    # pure state branch
    psi = np.ones(n) / math.sqrt(n)
    a_op = build_operator(cfg.functional_spec.get("operator"), n) \
        if cfg.functional_spec.get("family") == "quadratic" else np.eye(n)
    pure = pure_state_experiment(psi, alpha, a_op, cfg.mc_samples, derive_seed(cfg.seed, 10),
                                 workers=workers)

    # random mixed state, quadratic variable: amplified MC vs Tr D A
    m = rng.standard_normal((n, n))
    b = m @ m.T
    rho = GaussianState(b * (alpha / np.trace(b)))
    d = t_state(rho, alpha)
    a_rand = symmetric_from_entries(rng.standard_normal((n, n)))
    f = Quadratic(a_rand)
    mc, stderr = mc_average(amplify(f, alpha), rho, cfg.mc_samples,
                            derive_seed(cfg.seed, 11), workers=workers)
    expected = quantum_average(d, t_variable(f))
    mixed_ok = abs(mc - expected) <= 4.0 * stderr

    # higher-order model: exact polynomial equality through order 4
    q2 = symmetric_from_entries(rng.standard_normal((n, n)))
    q4 = SymmetricForm.from_quadratic_power(symmetric_from_entries(rng.standard_normal((n, n))), 2, 0.5)
    poly = EvenPolynomial({2: SymmetricForm.from_matrix(q2), 4: q4})
    classical = analytic_average(poly, rho, 4)
    generalized = alpha * generalized_average(d, t2n_variable(poly, 2, alpha))
    rel = abs(classical - generalized) / max(abs(classical), abs(generalized), 1e-300)
    poly_ok = rel <= 1e-10

    return {
        "dim": n,
        "alpha": alpha,
        "pure_state": pure,
        "mixed_quadratic": {"mc": mc, "stderr": stderr, "expected": expected,
                            "passed": bool(mixed_ok)},
        "higher_order": {"classical": classical, "generalized_times_alpha": generalized,
                         "relative_error": rel, "passed": bool(poly_ok)},
        "passed": bool(pure["passed"] and mixed_ok and poly_ok),
    }


def moments_check(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Pairing-formula moments vs MC at order 2k, k = cfg.order.

    The covariance here is not dispersion-normalized: isotropic means the
    identity, diagonal uses the raw weights, random is trace-normalized to
    dim.  With the identity covariance the two order-4 spot values (3 on a
    repeated axis, 1 on two distinct axes) are checked exactly.
    """
    k = cfg.order
    if not 1 <= k <= 3:
        raise ConfigError(f"moments-check supports k in 1..3, got {k}")
    shape = cfg.state_spec.get("shape", "isotropic")
    if shape == "isotropic":
        d = np.eye(cfg.dim)
    else:
        d = build_state(cfg.state_spec, cfg.dim, float(cfg.dim)).covariance
    rho = GaussianState(d)

    rng = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, 5], dtype=np.uint64)))
    ak = SymmetricForm.from_dense(rng.standard_normal((cfg.dim,) * (2 * k)))
    batch = rho.sample(derive_seed(cfg.seed, 6), cfg.mc_samples, workers=workers)
    analytic, mc, stderr = moment_mc_check(d, ak, batch)
    band_ok = abs(analytic - mc) <= 4.0 * stderr

    report = {
        "order": 2 * k,
        "samples": cfg.mc_samples,
        "analytic": analytic,
        "mc": mc,
        "stderr": stderr,
        "within_band": bool(band_ok),
        "passed": bool(band_ok),
    }
    if shape == "isotropic" and cfg.dim >= 2:
        e1 = np.eye(cfg.dim)[0]
        e2 = np.eye(cfg.dim)[1]
        rep = moment_form_eval(d, [e1, e1, e1, e1])
        split = moment_form_eval(d, [e1, e1, e2, e2])
        spot_ok = rep == 3.0 and split == 1.0
        report["identity_spot_checks"] = {"repeated_axis": rep, "split_axes": split,
                                          "passed": bool(spot_ok)}
        report["passed"] = bool(band_ok and spot_ok)
    return report


def chebyshev_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Tail probabilities of the field energy against the dispersion/C bound."""
    alphas = cfg.alpha_grid[:3]
    if len(alphas) < 3:
        raise ConfigError("the tail experiment needs at least 3 grid points")
    rows = []
    all_ok = True
    for i, alpha in enumerate(alphas):
        rho = build_state(cfg.state_spec, cfg.dim, alpha)
        batch = rho.sample(derive_seed(cfg.seed, 20 + i), cfg.mc_samples, workers=workers)
        for mult in (1.0, 10.0, 100.0):
            c = mult * alpha
            bound, empirical = chebyshev_tail(rho, c, batch)
            noise = 4.0 * math.sqrt(bound / cfg.mc_samples)
            ok = empirical <= bound + noise
            all_ok = all_ok and ok
            rows.append({"alpha": alpha, "C": c, "bound": bound, "empirical": empirical,
                         "noise": noise, "passed": bool(ok)})
    return {"rows": rows, "passed": bool(all_ok)}


def higher_order_check(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Exactness of the generalized model on even polynomials, MC overlay included."""
    if cfg.order < 1 or 2 * cfg.order > 6:
        raise ConfigError("higher-order checks support order n with 2n <= 6")
    alpha = cfg.alpha_grid[0]
    if cfg.functional_spec.get("family") == "even-polynomial":
        f = build_functional(cfg.functional_spec, cfg.dim)
    else:
        rng = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, 3], dtype=np.uint64)))
        f = EvenPolynomial({
            2: SymmetricForm.from_matrix(symmetric_from_entries(rng.standard_normal((cfg.dim, cfg.dim)))),
            4: SymmetricForm.from_quadratic_power(
                symmetric_from_entries(rng.standard_normal((cfg.dim, cfg.dim))), 2, 1.0),
        })
    rho = build_state(cfg.state_spec, cfg.dim, alpha)
    d = t_state(rho, alpha)
    observable = t2n_variable(f, cfg.order, alpha)
    classical = analytic_average(f, rho, 2 * cfg.order)
    generalized = alpha * generalized_average(d, observable)
    rel = abs(classical - generalized) / max(abs(classical), abs(generalized), 1e-300)
    mc, stderr = mc_average(f, rho, cfg.mc_samples, derive_seed(cfg.seed, 4), workers=workers)
    mc_ok = abs(mc - classical) <= 4.0 * stderr
    return {
        "alpha": alpha,
        "order": cfg.order,
        "classical_analytic": classical,
        "generalized_times_alpha": generalized,
        "relative_error": rel,
        "mc": mc,
        "stderr": stderr,
        "mc_within_band": bool(mc_ok),
        "density_operator": d.to_dict(),
        "observable": observable.to_dict(),
        "passed": bool(rel <= 1e-10 and mc_ok),
    }
