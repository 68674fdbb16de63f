"""Oracle suite: exact identities plus seeded Monte-Carlo checks.

``run_suite(full=False)`` runs everything at a reduced replicate count;
``full=True`` uses the acceptance scale and adds the coverage and comparator
experiments.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from .comparators import lasso_fit, lasso_path
from .confset import build_confidence_set
from .linalg_core import block_corr, cochran_decompose, corr, orthonormal_basis, residualise
from .reduction import ReductionConfig, cox_reduce
from .regression_stats import SigmaMode, chisq_cdf, chisq_quantile, wald, wald_signal_noise_split
from .report import render_json
from .seeding import derive_seed, generator
from .simulation import (
    GenSpec,
    arrangement_companion_experiment,
    comparator_contrast_experiment,
    coverage_experiment,
    desk_spec,
    generate,
    noncentral_moment_experiment,
    null_acceptance_experiment,
    retention_probability_experiment,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerifyResult:
    name: str
    passed: bool
    detail: str

    def to_record(self) -> Dict[str, Any]:
        return {"check": self.name, "passed": self.passed, "detail": self.detail}


def _instances(seed: int, count: int) -> List[np.random.Generator]:
    return [generator(derive_seed(seed, i, "verify")) for i in range(count)]


def _random_problem(rng: np.random.Generator, n: int = 40, k: int = 6) -> Tuple[np.ndarray, np.ndarray]:
    x = rng.standard_normal((n, k))
    x -= x.mean(axis=0)
    y = x @ rng.standard_normal(k) + rng.standard_normal(n)
    return y - y.mean(), x


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def check_wald_identity(seed: int, count: int) -> VerifyResult:
    worst = 0.0
    for rng in _instances(seed, count):
        y, x = _random_problem(rng)
        sigma = float(rng.uniform(0.5, 2.0))
        values = wald(y, x, SigmaMode.known(sigma)).values
        oracle = np.array(
            [
                np.linalg.norm(y) * corr(y, residualise(x[:, e], np.delete(x, e, axis=1))) / sigma
                for e in range(x.shape[1])
            ]
        )
        worst = max(worst, _relative(values, oracle))
    return VerifyResult("wald_identity", worst <= 1e-8, f"max relative error {worst:.2e} over {count}")


def check_cochran(seed: int, count: int) -> VerifyResult:
    worst = 0.0
    vanishing = 0.0
    for rng in _instances(seed, count):
        y, x = _random_problem(rng, k=7)
        lhs, rhs = cochran_decompose(y, [0, 1, 2], [3, 4, 5, 6], x)
        worst = max(worst, _relative(lhs, rhs))

        lhs, rhs = cochran_decompose(y, [0, 1, 2], [], x)
        vanishing = max(vanishing, float(np.max(np.abs(lhs - rhs))))
        # F orthogonal to E: the partial coefficients equal the marginal ones
        xf = _residualise_block(x[:, 3:], x[:, :3])
        design = np.hstack([x[:, :3], xf])
        lhs, _ = cochran_decompose(y, [0, 1, 2], [], design)
        joint = np.linalg.lstsq(design, y, rcond=None)[0][:3]
        vanishing = max(vanishing, float(np.max(np.abs(lhs - joint))))
    passed = worst <= 1e-8 and vanishing <= 1e-10
    return VerifyResult(
        "cochran_decomposition", passed, f"identity {worst:.2e}, vanishing clauses {vanishing:.2e}"
    )


def _residualise_block(block: np.ndarray, against: np.ndarray) -> np.ndarray:
    basis = orthonormal_basis(against)
    return block - basis @ (basis.T @ block)


def check_block_corr(seed: int, count: int) -> VerifyResult:
    worst = 0.0
    below_one = True
    for rng in _instances(seed, count):
        _, x = _random_problem(rng, n=30, k=7)
        qa = orthonormal_basis(x[:, :3])
        qb = orthonormal_basis(x[:, 3:])
        oracle = float(np.linalg.norm((qa @ qa.T) @ (qb @ qb.T), 2))
        value = block_corr(x[:, :3], x[:, 3:])
        worst = max(worst, abs(value - oracle))
        below_one = below_one and value < 1.0
    return VerifyResult("block_correlation", worst <= 1e-8 and below_one, f"max error {worst:.2e}")


def check_signal_noise_split(seed: int, count: int) -> VerifyResult:
    worst = 0.0
    noise_exact = True
    for rng in _instances(seed, count):
        _, x = _random_problem(rng)
        theta0 = rng.standard_normal(x.shape[1])
        theta0[-1] = 0.0
        sigma = float(rng.uniform(0.5, 2.0))
        y = x @ theta0 + sigma * rng.standard_normal(x.shape[0])
        values = wald(y, x, SigmaMode.known(sigma)).values
        for a in range(x.shape[1]):
            d1, d2 = wald_signal_noise_split(y, x, theta0, a)
            worst = max(worst, abs(d1 + d2 - sigma * values[a]) / max(1.0, abs(sigma * values[a])))
        noise_exact = noise_exact and wald_signal_noise_split(y, x, theta0, x.shape[1] - 1)[0] == 0.0
    return VerifyResult(
        "signal_noise_split", worst <= 1e-8 and noise_exact, f"max relative error {worst:.2e}"
    )


def check_companion_means(seed: int, replicates: int) -> VerifyResult:
    failures = []
    for dims in (2, 3):
        for n_marked in (3, 6, 10):
            for side in (5, 8, 12):
                report = arrangement_companion_experiment(n_marked, side, dims, replicates, seed)
                if not report.passed:
                    failures.append((dims, n_marked, side))
    return VerifyResult("companion_means", not failures, f"failing (dims, |A|, k): {failures}")


def check_isolation(seed: int, replicates: int) -> VerifyResult:
    details = []
    passed = True
    for n_marked, side in ((5, 8), (10, 10), (15, 12)):
        report = retention_probability_experiment(n_marked, side, replicates, seed)
        check = report.checks[0]
        passed = passed and check.passed
        details.append(
            f"({n_marked},{side}) {check.estimate:.4f}>={check.target:.5f}"
            f" (stated {report.parameters['stated_bound']:.5f})"
        )
    return VerifyResult("isolation_bound", passed, "; ".join(details))


def check_noncentral(seed: int, replicates: int) -> VerifyResult:
    base = GenSpec.sparse(100, 8, (0, 1, 2), (1.0, -0.5, 0.3), 1.0, seed=seed)
    comprehensive = (0, 1, 2, 3, 4, 5)
    cases = (("zero", (0, 1, 2)), ("partial", (0, 3)), ("empty", ()))
    details = []
    passed = True
    for label, submodel in cases:
        report = noncentral_moment_experiment(base, comprehensive, submodel, replicates, seed)
        check = report.checks[0]
        passed = passed and check.passed
        details.append(f"{label} {check.estimate:.3f}~{check.target:.3f}")
    return VerifyResult("noncentral_moments", passed, "; ".join(details))


def check_null_acceptance(seed: int, replicates: int) -> VerifyResult:
    spec = GenSpec(n=200, p=6, theta0=(0.0,) * 6, sigma=1.0, seed=seed)
    check = null_acceptance_experiment(spec, (0, 1, 2, 3), (), 0.05, replicates, seed).checks[0]
    return VerifyResult("null_acceptance", check.passed, f"rate {check.estimate:.4f}")


def check_chisq_quantiles() -> VerifyResult:
    worst = 0.0
    for df in range(1, 31):
        for prob in np.linspace(0.01, 0.99, 99):
            worst = max(worst, abs(chisq_cdf(chisq_quantile(df, float(prob)), df) - prob))
    closed = max(
        abs(chisq_quantile(2, float(prob)) + 2.0 * math.log(1.0 - prob))
        for prob in np.linspace(0.01, 0.99, 99)
    )
    return VerifyResult(
        "chisq_quantiles", worst <= 1e-8 and closed <= 1e-10, f"cdf {worst:.2e}, df=2 {closed:.2e}"
    )


def check_lasso(seed: int, count: int) -> VerifyResult:
    worst_gap = 0.0
    for rng in _instances(seed, count):
        y, x = _random_problem(rng, n=60, k=8)
        path = lasso_path(y, x, n_lambdas=20, ratio=1e-2)
        worst_gap = max(worst_gap, max(path.kkt_gaps))

    rng = generator(derive_seed(seed, count, "verify"))
    n = 50
    q, _ = np.linalg.qr(rng.standard_normal((n, 5)))
    x = q * math.sqrt(n)
    y = x @ np.array([2.0, -1.0, 0.5, 0.0, 0.1]) + 0.1 * rng.standard_normal(n)
    lam = 0.3
    path = lasso_path(y, x, n_lambdas=1)

    fitted = lasso_fit(y, x, lam)
    rho = x.T @ y / n
    oracle = np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0)
    soft = float(np.max(np.abs(fitted - oracle)))
    passed = worst_gap <= 1e-6 and soft <= 1e-8 and not path.supports[0]
    return VerifyResult("lasso_kkt", passed, f"max KKT gap {worst_gap:.2e}, soft-threshold {soft:.2e}")


def check_determinism(seed: int) -> VerifyResult:
    spec = GenSpec.sparse(120, 60, (3, 17, 40), 1.0, 1.0, seed=seed)

    y, x, _ = generate(spec)
    digests = []
    for threads in (1, 8):
        config = ReductionConfig(rerandomisations=4, seed=seed, threads=threads)
        outcome = cox_reduce(y, x, config)
        part = outcome.assessment_rows
        mcs = build_confidence_set(
            y[part] - y[part].mean(), x[part] - x[part].mean(axis=0), outcome.comprehensive, threads=threads
        )
        record = {"reduction": outcome.to_record(), "confset": mcs.to_record()}
        digests.append(hashlib.sha256(render_json(record).encode()).hexdigest())
    return VerifyResult("determinism", digests[0] == digests[1], f"sha256 {digests[0][:16]}")


def check_coverage(seed: int, replicates: int, threads: int) -> VerifyResult:
    spec = desk_spec(seed)
    report = coverage_experiment(spec, 0.05, 4, replicates, seed, threads=threads)
    check = report.checks[0]
    return VerifyResult("coverage", report.passed, f"P(S in M | S kept) {check.estimate:.3f}")


def check_contrast(seed: int, replicates: int, threads: int) -> VerifyResult:
    report = comparator_contrast_experiment(replicates=replicates, seed=seed, threads=threads)
    detail = ", ".join(f"{c.name} {c.estimate:.2f} vs {c.target:.2f}" for c in report.checks)
    return VerifyResult("comparator_contrast", report.passed, detail)


def run_suite(full: bool = False, seed: int = 0, threads: int = 1) -> List[VerifyResult]:
    scale = 1 if full else 10
    checks: List[Tuple[str, Callable[[], VerifyResult]]] = [
        ("wald_identity", lambda: check_wald_identity(seed, 300 // scale)),
        ("cochran_decomposition", lambda: check_cochran(seed, 200 // scale)),
        ("block_correlation", lambda: check_block_corr(seed, 200 // scale)),
        ("signal_noise_split", lambda: check_signal_noise_split(seed, 200 // scale)),
        ("companion_means", lambda: check_companion_means(seed, 100_000 // scale)),
        ("isolation_bound", lambda: check_isolation(seed, 100_000 // scale)),
        ("noncentral_moments", lambda: check_noncentral(seed, 2000 // scale)),
        ("null_acceptance", lambda: check_null_acceptance(seed, 2000 // scale)),
        ("chisq_quantiles", check_chisq_quantiles),
        ("lasso_kkt", lambda: check_lasso(seed, 50 // scale)),
        ("determinism", lambda: check_determinism(seed)),
    ]
    if full:
        checks.append(("coverage", lambda: check_coverage(seed, 500, threads)))
        checks.append(("comparator_contrast", lambda: check_contrast(seed, 100, threads)))

    results = []
    for name, check in checks:
        logger.info("Running check %s", name)
        results.append(check())
    return results
