"""The two estimators: l2 coefficient regularization (any real outer kernel)
and the kernel ridge baseline (PSD outer kernels only).

The coefficient scheme solves (lam * m^2 * I + G^T G) alpha = G^T y. That
system matrix is symmetric positive definite for ANY real Gram matrix G and
lam > 0 (a scaled identity plus a Gram of columns), which is what lets the
scheme survive indefinite and asymmetric kernels. The ridge baseline solves
(lam * m * I + G) alpha = y and is only defined when G is symmetric PSD.
Both are direct dense solves; no inverses are formed.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .embedding import Bag, EmbeddingKernelSpec
from .errors import ConfigError, ContractError, InputError, NumericalError
from .gram import GramMatrix, build_cross_gram
from .outer import OuterKernelSpec

SCHEMES = ("coefficient_l2", "krr")

# Condition numbers above this trigger a warning but not a failure; the
# coefficient system stays SPD and solvable.
CONDITION_WARN_THRESHOLD = 1e12


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FitReport:
    objective_value: float
    residual_norm: float
    condition_estimate: float
    wall_time: float


@dataclass(frozen=True)
class CoefficientModel:
    """A fitted model: coefficients plus everything prediction needs.

    Training bag points are retained because predictions evaluate the outer
    kernel between test embeddings and every training embedding.
    """

    alpha: np.ndarray
    lam: float
    train_bags: tuple[Bag, ...]
    outer_kernel: OuterKernelSpec
    embedding_kernel: EmbeddingKernelSpec
    scheme: str

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if len(self.alpha) != len(self.train_bags):
            raise InputError(
                f"alpha has length {len(self.alpha)} but there are "
                f"{len(self.train_bags)} training bags"
            )

    def predict(self, test_bags: Sequence[Bag], threads: int | None = None) -> np.ndarray:
        return predict(self, test_bags, threads=threads)


def _validate_fit_inputs(g: GramMatrix, y: np.ndarray, lam: float) -> np.ndarray:
    if lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if not g.square:
        raise InputError("fitting requires a square Gram matrix")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != g.m:
        raise InputError(f"y has length {y.shape[0]}, Gram matrix is {g.m} x {g.m}")
    if not np.all(np.isfinite(y)):
        raise InputError("y contains non-finite values")
    return y


def _solve_spd(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(system)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"SPD factorization failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs)


def assemble_system(
    scheme: str, g_values: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """System matrix and right-hand side of the scheme's normal equations."""
    m = len(y)
    if scheme == "coefficient_l2":
        return lam * m * m * np.eye(m) + g_values.T @ g_values, g_values.T @ y
    if scheme == "krr":
        return lam * m * np.eye(m) + g_values, y
    raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def solve_alpha(scheme: str, g_values: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Matrix-level solve for either scheme, without building a model."""
    if lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    system, rhs = assemble_system(scheme, g_values, np.asarray(y, dtype=np.float64), lam)
    return _solve_spd(system, rhs)


def _report(
    system: np.ndarray,
    rhs: np.ndarray,
    alpha: np.ndarray,
    objective: float,
    t0: float,
) -> FitReport:
    residual = np.linalg.norm(system @ alpha - rhs)
    scale = np.linalg.norm(rhs)
    rel_residual = residual / scale if scale > 0 else residual
    cond = float(np.linalg.cond(system))
    if cond > CONDITION_WARN_THRESHOLD:
        warnings.warn(
            f"system condition estimate {cond:.3e} exceeds {CONDITION_WARN_THRESHOLD:.0e}; "
            "solution is SPD-solvable but may be inaccurate",
            IllConditionedWarning,
            stacklevel=3,
        )
    return FitReport(
        objective_value=float(objective),
        residual_norm=float(rel_residual),
        condition_estimate=cond,
        wall_time=time.perf_counter() - t0,
    )


def coefficient_objective(g_values: np.ndarray, y: np.ndarray, lam: float, alpha: np.ndarray) -> float:
    """(1/m) ||G alpha - y||^2 + lam * m * ||alpha||^2."""
    m = len(y)
    fit = g_values @ alpha - y
    return float(fit @ fit / m + lam * m * (alpha @ alpha))


def krr_objective(g_values: np.ndarray, y: np.ndarray, lam: float, alpha: np.ndarray) -> float:
    """(1/m) ||G alpha - y||^2 + lam * alpha^T G alpha (PSD kernels)."""
    m = len(y)
    fit = g_values @ alpha - y
    return float(fit @ fit / m + lam * (alpha @ (g_values @ alpha)))


def fit_coefficient(
    g: GramMatrix,
    y: np.ndarray,
    lam: float,
    train_bags: Sequence[Bag],
    outer_kernel: OuterKernelSpec,
    embedding_kernel: EmbeddingKernelSpec,
) -> tuple[CoefficientModel, FitReport]:
    """Fit the l2 coefficient scheme: alpha = (lam m^2 I + G^T G)^{-1} G^T y."""
    y = _validate_fit_inputs(g, y, lam)
    if len(train_bags) != g.m:
        raise InputError("train_bags must match the Gram matrix dimension")
    t0 = time.perf_counter()
    gv = g.values
    system, rhs = assemble_system("coefficient_l2", gv, y, lam)
    alpha = _solve_spd(system, rhs)
    model = CoefficientModel(
        alpha=alpha,
        lam=lam,
        train_bags=tuple(train_bags),
        outer_kernel=outer_kernel,
        embedding_kernel=embedding_kernel,
        scheme="coefficient_l2",
    )
    report = _report(system, rhs, alpha, coefficient_objective(gv, y, lam, alpha), t0)
    return model, report


def fit_krr(
    g: GramMatrix,
    y: np.ndarray,
    lam: float,
    train_bags: Sequence[Bag],
    outer_kernel: OuterKernelSpec,
    embedding_kernel: EmbeddingKernelSpec,
) -> tuple[CoefficientModel, FitReport]:
    """Fit the ridge baseline: alpha = (lam m I + G)^{-1} y.

    Only legal for outer kernels that are symmetric and claimed PSD; anything
    else gets the contract error rather than a silent non-SPD solve.
    """
    if not (outer_kernel.psd_claimed and outer_kernel.symmetric):
        raise ContractError(
            f"KRR requires positive semi-definite K; outer kernel family "
            f"{outer_kernel.family!r} is not symmetric PSD"
        )
    y = _validate_fit_inputs(g, y, lam)
    if len(train_bags) != g.m:
        raise InputError("train_bags must match the Gram matrix dimension")
    t0 = time.perf_counter()
    system, rhs = assemble_system("krr", g.values, y, lam)
    alpha = _solve_spd(system, rhs)
    model = CoefficientModel(
        alpha=alpha,
        lam=lam,
        train_bags=tuple(train_bags),
        outer_kernel=outer_kernel,
        embedding_kernel=embedding_kernel,
        scheme="krr",
    )
    report = _report(system, rhs, alpha, krr_objective(g.values, y, lam, alpha), t0)
    return model, report


def predict(
    model: CoefficientModel, test_bags: Sequence[Bag], threads: int | None = None
) -> np.ndarray:
    """Predictions sum_i alpha_i K(mu_test, mu_train_i), test embedding first."""
    if len(test_bags) == 0:
        return np.zeros(0)
    cross = build_cross_gram(
        model.outer_kernel,
        model.embedding_kernel,
        test_bags,
        model.train_bags,
        threads=threads,
    )
    return cross @ model.alpha


def excess_error(
    model: CoefficientModel,
    test_bags_with_targets: Sequence[tuple[Bag, float]],
    threads: int | None = None,
) -> float:
    """Monte Carlo L2 distance to the regression function.

    Test bags come with their noiseless targets; the estimate is the root
    mean squared gap between predictions and those targets.
    """
    if len(test_bags_with_targets) == 0:
        raise InputError("excess_error needs a nonempty test set")
    bags = [b for b, _ in test_bags_with_targets]
    targets = np.array([t for _, t in test_bags_with_targets], dtype=np.float64)
    preds = predict(model, bags, threads=threads)
    return float(np.sqrt(np.mean((preds - targets) ** 2)))
