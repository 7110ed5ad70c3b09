"""Theory-facing computations and desk-scale experiments.

Covers the spectral effective dimension and its decay diagnostics, the
asymptotic lambda/N schedules with their regime split at regularity 2,
log-log learning-rate fits, the replicated rate experiment, and the
coefficient-vs-ridge saturation comparison. Quantities derived from Gram
spectra are empirical proxies for population operator spectra and are labeled
as such; the schedules' prefactor is exposed as a plain tuning scale because
its population value is unknowable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .embedding import EmbeddingKernelSpec
from .errors import ConfigError, ContractError, InputError
from .gram import GramMatrix, SpectrumReport, build_gram, spectrum
from .outer import OuterKernelSpec
from .solver import (
    excess_error,
    fit_coefficient,
    fit_krr,
    solve_alpha,
)
from .synth import MetaDistributionSpec, generate

# Singular values at or below this are treated as numerical noise.
DECAY_FLOOR = 1e-12

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-8.0, 0.0, 10))
DEFAULT_HOLDOUT_FRAC = 0.3

# A schedule N too large to represent meaningfully; always beyond any cap.
_N_HUGE = 10**18


@dataclass(frozen=True)
class ScheduleParams:
    """Knobs of the asymptotic schedules.

    r: regularity index of the target (> 0). alpha_decay: singular-value
    decay exponent; >= 1, where 1 is the capacity-independent limit case.
    h: Holder exponent of the outer kernel in (0, 1]. kappa4_scale:
    multiplier on the lambda schedule, default 1; stands in for the unknown
    population constant.
    """

    r: float
    alpha_decay: float
    h: float = 1.0
    kappa4_scale: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigError(f"r must be > 0, got {self.r}")
        if not self.alpha_decay >= 1:
            raise ConfigError(f"alpha_decay must be >= 1, got {self.alpha_decay}")
        if not 0 < self.h <= 1:
            raise ConfigError(f"h must lie in (0, 1], got {self.h}")
        if not self.kappa4_scale > 0:
            raise ConfigError(f"kappa4_scale must be positive, got {self.kappa4_scale}")


class Schedule(NamedTuple):
    beta: float
    zeta: float
    lam: float
    n_points: int


def effective_dimension(report: SpectrumReport, lam: float) -> float:
    """Spectral complexity sum sigma_l / (sigma_l + lam) over the report.

    Strictly decreasing in lam and bounded by the number of nonzero singular
    values.
    """
    if lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    sv = report.singular_values
    return float(np.sum(sv / (sv + lam)))


def fit_decay_exponent(report: SpectrumReport, head: int) -> float:
    """Fitted polynomial decay exponent of the leading singular values.

    Least-squares slope of log sigma_l against log l over the first `head`
    values above the noise floor, negated so that sigma_l ~ l^-alpha gives
    alpha back.
    """
    sv = report.singular_values
    usable = sv[sv > DECAY_FLOOR][:head]
    if usable.shape[0] < 3:
        raise InputError(
            f"need at least 3 singular values above {DECAY_FLOOR} to fit a decay "
            f"exponent, got {usable.shape[0]}"
        )
    ranks = np.arange(1, usable.shape[0] + 1, dtype=np.float64)
    slope, _ = np.polyfit(np.log(ranks), np.log(usable), deg=1)
    return float(-slope)


def schedule(p: ScheduleParams, m: int) -> Schedule:
    """lambda and N schedules as functions of the first-stage sample size.

    beta = 2a/(2ar+1) and zeta = (3a+2ar)/(h(2ar+1)) for r <= 2 (the sub-1/2
    range reuses the same expressions, following the PSD-case convention);
    past r = 2 both freeze at their r = 2 values, the saturation plateau.
    lambda = kappa4_scale * m^-beta; N = ceil(m^zeta * ln m).
    """
    if m < 3:
        raise InputError(f"schedule requires m >= 3, got {m}")
    a, r, h = p.alpha_decay, p.r, p.h
    if r <= 2:
        beta = 2 * a / (2 * a * r + 1)
        zeta = (3 * a + 2 * a * r) / (h * (2 * a * r + 1))
    else:
        beta = 2 * a / (4 * a + 1)
        zeta = 7 * a / (h * (4 * a + 1))
    lam = p.kappa4_scale * m ** (-beta)
    # N explodes quickly; test in log space first to dodge float overflow.
    log_n = zeta * math.log(m) + math.log(math.log(m))
    if log_n >= math.log(_N_HUGE):
        n_points = _N_HUGE
    else:
        n_points = math.ceil(float(m) ** zeta * math.log(m))
    return Schedule(beta=beta, zeta=zeta, lam=lam, n_points=n_points)


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log m, log error) points."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def rate_fit(points: Sequence[tuple[float, float]]) -> RateFit:
    if len(points) < 3:
        raise InputError(f"rate fit needs at least 3 points, got {len(points)}")
    ms = np.array([p[0] for p in points], dtype=np.float64)
    errs = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(errs <= 0):
        raise InputError("rate fit requires strictly positive errors")
    x, z = np.log(ms), np.log(errs)
    slope, intercept = np.polyfit(x, z, deg=1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((z - fitted) ** 2))
    ss_tot = float(np.sum((z - np.mean(z)) ** 2))
    r_squared = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        points=tuple((float(m), float(e)) for m, e in points),
    )


def select_lambda_holdout(
    g_values: np.ndarray,
    y: np.ndarray,
    grid: Sequence[float],
    scheme: str,
    holdout_frac: float,
    seed: int,
) -> tuple[float, list[tuple[float, float]]]:
    """Pick lambda from a grid by held-out mean squared error.

    Splits the training set once (seeded permutation), fits on the kept part
    at every grid value, scores label MSE on the held-out part, and returns
    the best lambda plus the (lambda, mse) table. Ties break toward the
    smaller lambda via first-minimum selection on an ascending grid.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    m = y.shape[0]
    grid = sorted(float(g) for g in grid)
    if len(grid) == 0:
        raise ConfigError("lambda grid is empty")
    if m < 3:
        raise InputError(f"holdout selection needs at least 3 bags, got {m}")
    n_hold = min(m - 2, max(1, round(holdout_frac * m)))
    perm = np.random.default_rng(np.random.SeedSequence(entropy=seed)).permutation(m)
    hold_idx, fit_idx = perm[:n_hold], perm[n_hold:]
    sub = g_values[np.ix_(fit_idx, fit_idx)]
    cross = g_values[np.ix_(hold_idx, fit_idx)]
    table = []
    for lam in grid:
        alpha = solve_alpha(scheme, sub, y[fit_idx], lam)
        mse = float(np.mean((cross @ alpha - y[hold_idx]) ** 2))
        table.append((lam, mse))
    best = min(range(len(table)), key=lambda i: table[i][1])
    return table[best][0], table


def _derived_seed(master: int, *key: int) -> int:
    seq = np.random.SeedSequence(entropy=master, spawn_key=tuple(key))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepConfig:
    """One rate experiment: error versus first-stage sample size."""

    meta: MetaDistributionSpec
    embedding_kernel: EmbeddingKernelSpec
    outer_kernel: OuterKernelSpec
    scheme: str
    m_values: tuple[int, ...]
    replications: int
    schedule_params: ScheduleParams
    lambda_mode: str = "grid"  # grid | schedule | fixed
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    lambda_fixed: float | None = None
    n_max: int = 2000
    n_test: int = 64
    holdout_frac: float = DEFAULT_HOLDOUT_FRAC
    threads: int | None = None

    def __post_init__(self):
        if self.lambda_mode not in ("grid", "schedule", "fixed"):
            raise ConfigError(f"unknown lambda mode {self.lambda_mode!r}")
        if self.lambda_mode == "fixed" and self.lambda_fixed is None:
            raise ConfigError("lambda_mode 'fixed' needs lambda_fixed")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if len(self.m_values) < 1:
            raise ConfigError("m_values must be nonempty")
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")


@dataclass(frozen=True)
class SweepRow:
    m: int
    n_points: int
    lam: float
    rep: int
    scheme: str
    error: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    fit: RateFit | None
    medians: dict[int, float]
    n_by_m: dict[int, int]
    capped_m: tuple[int, ...]  # m values where n_max bound the schedule N


def run_rate_experiment(config: SweepConfig) -> SweepResult:
    """Generate, fit, and score per (m, replication); fit the log-log rate line.

    The rate line goes through the per-m median errors. Every random stream
    is derived from the master seed and the (m, rep) pair, so reruns with the
    same config reproduce identical rows; the first R replications of a
    larger run coincide with an R-replication run.
    """
    rows: list[SweepRow] = []
    medians: dict[int, float] = {}
    n_by_m: dict[int, int] = {}
    capped: list[int] = []
    master = config.meta.seed
    for m in config.m_values:
        sched = schedule(config.schedule_params, m)
        n_points = min(config.n_max, sched.n_points)
        n_by_m[m] = n_points
        if sched.n_points > config.n_max:
            capped.append(m)
        errors = []
        for rep in range(config.replications):
            train = generate(
                replace(config.meta, seed=_derived_seed(master, m, rep, 0)), m, n_points
            )
            test = generate(
                replace(config.meta, seed=_derived_seed(master, m, rep, 1)),
                config.n_test,
                n_points,
            )
            g = build_gram(
                config.outer_kernel,
                config.embedding_kernel,
                train.bags,
                threads=config.threads,
            )
            y = train.labels()
            if config.lambda_mode == "schedule":
                lam = sched.lam
            elif config.lambda_mode == "fixed":
                lam = float(config.lambda_fixed)
            else:
                lam, _ = select_lambda_holdout(
                    g.values,
                    y,
                    config.lambda_grid,
                    config.scheme,
                    config.holdout_frac,
                    _derived_seed(master, m, rep, 2),
                )
            fitter = fit_coefficient if config.scheme == "coefficient_l2" else fit_krr
            model, _ = fitter(
                g, y, lam, train.bags, config.outer_kernel, config.embedding_kernel
            )
            err = excess_error(model, test.with_targets(), threads=config.threads)
            rows.append(
                SweepRow(m=m, n_points=n_points, lam=lam, rep=rep, scheme=config.scheme, error=err)
            )
            errors.append(err)
        medians[m] = float(np.median(errors))
    fit = None
    if len(config.m_values) >= 3 and all(e > 0 for e in medians.values()):
        fit = rate_fit([(m, medians[m]) for m in config.m_values])
    return SweepResult(
        rows=tuple(rows),
        fit=fit,
        medians=medians,
        n_by_m=n_by_m,
        capped_m=tuple(capped),
    )


@dataclass(frozen=True)
class SaturationConfig:
    """Coefficient-vs-ridge comparison on one smooth synthetic problem."""

    meta: MetaDistributionSpec
    embedding_kernel: EmbeddingKernelSpec
    outer_kernel: OuterKernelSpec
    m: int
    n_points: int
    n_test: int = 64
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    holdout_frac: float = DEFAULT_HOLDOUT_FRAC
    threads: int | None = None


@dataclass(frozen=True)
class SaturationReport:
    err_coefficient: float
    err_krr: float
    lambda_grid: tuple[float, ...]
    lambda_coefficient: float
    lambda_krr: float
    ratio: float  # err_coefficient / err_krr
    winner: str

    def to_dict(self) -> dict:
        return {
            "err_coefficient": self.err_coefficient,
            "err_krr": self.err_krr,
            "lambda_grid": list(self.lambda_grid),
            "lambda_coefficient": self.lambda_coefficient,
            "lambda_krr": self.lambda_krr,
            "ratio": self.ratio,
            "winner": self.winner,
        }


def saturation_compare(config: SaturationConfig) -> SaturationReport:
    """Fit both schemes on a shared problem and lambda grid; report both errors.

    Both schemes see the same data, the same holdout split, and the same
    grid; each picks its own lambda and is refit on the full training set.
    Requires a PSD outer kernel (the ridge baseline is undefined otherwise)
    and the smooth target family this comparison is about.
    """
    if not (config.outer_kernel.psd_claimed and config.outer_kernel.symmetric):
        raise ContractError(
            "saturation comparison requires a symmetric PSD outer kernel; "
            f"got {config.outer_kernel.family!r}"
        )
    if config.meta.target != "smooth_composite":
        raise ConfigError(
            f"saturation comparison expects the smooth_composite target, "
            f"got {config.meta.target!r}"
        )
    master = config.meta.seed
    train = generate(
        replace(config.meta, seed=_derived_seed(master, 0)), config.m, config.n_points
    )
    test = generate(
        replace(config.meta, seed=_derived_seed(master, 1)), config.n_test, config.n_points
    )
    g = build_gram(
        config.outer_kernel, config.embedding_kernel, train.bags, threads=config.threads
    )
    y = train.labels()
    split_seed = _derived_seed(master, 2)
    errors: dict[str, float] = {}
    lams: dict[str, float] = {}
    for scheme, fitter in (("coefficient_l2", fit_coefficient), ("krr", fit_krr)):
        lam, _ = select_lambda_holdout(
            g.values, y, config.lambda_grid, scheme, config.holdout_frac, split_seed
        )
        model, _ = fitter(
            g, y, lam, train.bags, config.outer_kernel, config.embedding_kernel
        )
        errors[scheme] = excess_error(model, test.with_targets(), threads=config.threads)
        lams[scheme] = lam
    ratio = errors["coefficient_l2"] / errors["krr"] if errors["krr"] > 0 else math.inf
    winner = "coefficient_l2" if errors["coefficient_l2"] <= errors["krr"] else "krr"
    return SaturationReport(
        err_coefficient=errors["coefficient_l2"],
        err_krr=errors["krr"],
        lambda_grid=tuple(float(v) for v in config.lambda_grid),
        lambda_coefficient=lams["coefficient_l2"],
        lambda_krr=lams["krr"],
        ratio=ratio,
        winner=winner,
    )


def spectrum_of_bags(
    kspec: OuterKernelSpec,
    espec: EmbeddingKernelSpec,
    bags,
    threads: int | None = None,
) -> tuple[GramMatrix, SpectrumReport]:
    """Convenience: Gram plus spectrum in one call (used by the CLI)."""
    g = build_gram(kspec, espec, bags, threads=threads)
    return g, spectrum(g)
