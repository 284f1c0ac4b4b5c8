"""Monte Carlo harnesses for the semicircle law and the moment CLT.

Replica r of a run always uses the stream keyed by (seed, r), and
per-replica results are stored by index before any reduction, so a
report does not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from . import linalg, oracle
from .randmat import EnsembleSpec, empirical_measure, sample_wigner, spectral_measure, spectral_moments

MIN_VERDICT_REPLICAS = 1000
VAR_REL_TOL = 0.10
N_SE = 4.0
NORMALITY_ALPHA = 0.01


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    sd: float
    se: float
    skew: float
    kurtosis: float
    degenerate: bool


def summarize(samples: Sequence[float]) -> Summary:
    """Mean, unbiased SD, standard error, skewness and excess kurtosis.

    Skewness is the adjusted Fisher-Pearson G1 = g1 sqrt(n(n-1))/(n-2);
    kurtosis is G2 = ((n+1) g2 + 6)(n-1)/((n-2)(n-3)), where g1, g2 are
    the plain moment ratios.  Constant samples get sd = 0 and NaN shape
    statistics, with ``degenerate`` set.
    """
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("summarize needs at least 2 samples")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d * d))
    sd = math.sqrt(m2 * n / (n - 1))
    se = sd / math.sqrt(n)
    if m2 == 0.0:
        return Summary(n, mean, 0.0, 0.0, float("nan"), float("nan"), True)
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    g1 = m3 / m2 ** 1.5
    g2 = m4 / (m2 * m2) - 3.0
    skew = g1 * math.sqrt(n * (n - 1)) / (n - 2) if n > 2 else float("nan")
    kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3)) if n > 3 else float("nan")
    return Summary(n, mean, sd, se, skew, kurt, False)


def kolmogorov_sf(x: float) -> float:
    """P(K > x) for the limiting Kolmogorov distribution."""
    if x <= 0.0:
        return 1.0
    if x < 1.0:
        # theta-function form, converges fast for small x
        c = math.pi ** 2 / (8.0 * x * x)
        s = sum(math.exp(-(2 * j - 1) ** 2 * c) for j in range(1, 20))
        return 1.0 - math.sqrt(2.0 * math.pi) / x * s
    total = 0.0
    for j in range(1, 101):
        term = math.exp(-2.0 * j * j * x * x)
        total += term if j % 2 else -term
        if term < 1e-18:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_statistic(samples, cdf: Callable) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@dataclass(frozen=True)
class NormalityResult:
    statistic: float
    pvalue: float
    n: int


def normality_test(samples, mean0: float, var0: float) -> NormalityResult:
    """One-sample KS test against Normal(mean0, var0), asymptotic p-value."""
    if var0 <= 0:
        raise ValueError("var0 must be positive")
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < MIN_VERDICT_REPLICAS:
        raise ValueError(f"normality_test needs at least {MIN_VERDICT_REPLICAS} samples, got {n}")
    z = (x - mean0) / math.sqrt(var0)
    d = ks_statistic(z, ndtr)
    return NormalityResult(d, kolmogorov_sf(math.sqrt(n) * d), n)


# -- replicas ----------------------------------------------------------------


def _map_replicas(fn: Callable[[int], np.ndarray], replicas: int, threads: int) -> np.ndarray:
    if threads <= 1:
        rows = [fn(r) for r in range(replicas)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(fn, range(replicas), chunksize=64))
    return np.array(rows)


def simulate_moments(spec: EnsembleSpec, K: int, replicas: int, threads: int = 1) -> np.ndarray:
    """(replicas, K) array of X^k(1,1), k = 1..K, one row per replica."""
    local = threading.local()
    N = spec.N

    def run(r: int) -> np.ndarray:
        if not hasattr(local, "X"):
            local.X = np.empty((N, N))
            local.scratch = np.empty(N * (N + 1) // 2)
        X = sample_wigner(spec, r, out=local.X, scratch=local.scratch)
        return spectral_moments(X, K)

    return _map_replicas(run, replicas, threads)


# -- LLN ---------------------------------------------------------------------


@dataclass
class LlnCell:
    N: int
    replicas: int
    mean: list[float]
    sd: list[float]
    se: list[float]
    target: list[int]
    variance: list[float]
    ks_spectral_median: float
    ks_empirical_median: float
    error: str | None = None


@dataclass
class LlnReport:
    spec: dict
    K: int
    replicas: int
    grid: list[int]
    cells: list[LlnCell]
    ks_strictly_decreasing: bool
    moment_error_first: list[float]
    moment_error_last: list[float]
    variance_exponent: list[float | None]

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list[dict]:
        out = []
        for c in self.cells:
            for k in range(1, self.K + 1):
                row = {"N": c.N, "k": k, "replicas": c.replicas, "target": c.target[k - 1] if c.target else "",
                       "mean": c.mean[k - 1] if c.mean else "", "sd": c.sd[k - 1] if c.sd else "",
                       "se": c.se[k - 1] if c.se else "", "variance": c.variance[k - 1] if c.variance else "",
                       "ks_spectral_median": c.ks_spectral_median, "ks_empirical_median": c.ks_empirical_median}
                out.append(row)
        return out


def _lln_replica(spec: EnsembleSpec, K: int, method: str) -> Callable[[int], np.ndarray]:
    def run(r: int) -> np.ndarray:
        X = sample_wigner(spec, r)
        dec = linalg.eigh(X, method)
        nu = spectral_measure(X, decomposition=dec)
        L = empirical_measure(X, decomposition=dec)
        ks = [linalg.ks_distance(nu, linalg.semicircle_cdf), linalg.ks_distance(L, linalg.semicircle_cdf)]
        return np.concatenate([spectral_moments(X, K), ks])
    return run


def run_lln(spec: EnsembleSpec, grid: Sequence[int], K: int, replicas: int, threads: int = 1,
            method: str = "auto") -> LlnReport:
    """Spectral moments and KS distances to the semicircle along an N grid."""
    if replicas < 2:
        raise ValueError("run_lln needs at least 2 replicas")
    grid = [int(n) for n in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N grid must be strictly increasing")
    target = [oracle.semicircle_moment(k) for k in range(1, K + 1)]
    cells = []
    for N in grid:
        s = spec.with_N(N)
        try:
            data = _map_replicas(_lln_replica(s, K, method), replicas, threads)
        except Exception as exc:  # recorded in the report, the grid continues
            cells.append(LlnCell(N, replicas, [], [], [], target, [], float("nan"), float("nan"),
                                 f"{type(exc).__name__}: {exc}"))
            continue
        m = data[:, :K]
        sums = [summarize(m[:, k]) for k in range(K)]
        cells.append(LlnCell(
            N=N, replicas=replicas,
            mean=[x.mean for x in sums], sd=[x.sd for x in sums], se=[x.se for x in sums],
            target=target, variance=[x.sd ** 2 for x in sums],
            ks_spectral_median=float(np.median(data[:, K])),
            ks_empirical_median=float(np.median(data[:, K + 1])),
        ))
    ok = [c for c in cells if c.error is None]
    ks = [c.ks_spectral_median for c in ok]
    decreasing = len(ks) == len(cells) and all(b < a for a, b in zip(ks, ks[1:]))
    err_first = [abs(ok[0].mean[k] - target[k]) for k in range(K)] if ok else []
    err_last = [abs(ok[-1].mean[k] - target[k]) for k in range(K)] if ok else []
    exponents: list[float | None] = []
    for k in range(K):
        pts = [(math.log(c.N), math.log(c.variance[k])) for c in ok if c.variance[k] > 0]
        if len(pts) >= 2:
            xs, ys = zip(*pts)
            exponents.append(float(np.polyfit(xs, ys, 1)[0]))
        else:
            exponents.append(None)
    return LlnReport(spec.to_dict(), K, replicas, grid, cells, decreasing, err_first, err_last, exponents)


# -- CLT ---------------------------------------------------------------------


@dataclass
class MomentCheck:
    k: int
    a_k: int
    variance: float
    variance_se: float
    predicted_variance: float
    variance_verdict: str
    skew: float
    kurtosis: float
    predicted_kurtosis: float
    kurtosis_verdict: str
    gaussian_limit: bool
    ks_statistic: float | None
    normality_p: float | None
    normality_verdict: str
    centering_se: float


@dataclass
class CovarianceCheck:
    k: int
    l: int
    covariance: float
    se: float
    predicted: float
    verdict: str


@dataclass
class CltReport:
    spec: dict
    profile: str
    K: int
    replicas: int
    thresholds: dict
    moments: list[MomentCheck]
    covariances: list[CovarianceCheck]
    sample_cov: list[list[float]]
    predicted_cov: list[list[float]]
    verdict: str
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("samples")
        return d

    def moment(self, k: int) -> MomentCheck:
        return self.moments[k - 1]

    def covariance(self, k: int, l: int) -> CovarianceCheck:
        k, l = min(k, l), max(k, l)
        return next(c for c in self.covariances if (c.k, c.l) == (k, l))

    def rows(self) -> list[dict]:
        return [asdict(m) for m in self.moments]

    def covariance_rows(self) -> list[dict]:
        return [asdict(c) for c in self.covariances]


def _within(value: float, pred: float, se: float) -> bool:
    return abs(value - pred) <= max(VAR_REL_TOL * abs(pred), N_SE * se)


def clt_statistics(S: np.ndarray, centering_se: np.ndarray, spec: EnsembleSpec, K: int) -> CltReport:
    """Compare centered, scaled moment samples S (replicas x K) with the limit."""
    M = S.shape[0]
    prof = spec.profile()
    pred = oracle.limit_cov_matrix(K, prof)
    enough = M >= MIN_VERDICT_REPLICAS

    def verdict(ok: bool) -> str:
        return ("pass" if ok else "fail") if enough else "insufficient"

    moments = []
    for k in range(1, K + 1):
        x = S[:, k - 1]
        s = summarize(x)
        var = s.sd ** 2
        d = x - x.mean()
        var_se = math.sqrt(max(float(np.mean(d ** 4)) - float(np.mean(d * d)) ** 2, 0.0) / M)
        pv = float(pred[k - 1, k - 1])
        law = oracle.limit_law(k, prof)
        kurt_pred = oracle.limit_excess_kurtosis(k, prof)
        ks_stat = pval = None
        if law.is_pure_gaussian:
            kurt_verdict = "skipped"
            if pv > 0 and enough:
                res = normality_test(x, 0.0, pv)
                ks_stat, pval = res.statistic, res.pvalue
                norm_verdict = "pass" if pval >= NORMALITY_ALPHA else "fail"
            elif pv > 0:
                norm_verdict = "insufficient"
            else:
                norm_verdict = "skipped"
        else:
            norm_verdict = "skipped"
            kurt_tol = max(N_SE * math.sqrt(24.0 / M), VAR_REL_TOL * abs(kurt_pred))
            kurt_verdict = verdict(not s.degenerate and abs(s.kurtosis - kurt_pred) <= kurt_tol)
        moments.append(MomentCheck(
            k=k, a_k=law.a_k, variance=var, variance_se=var_se, predicted_variance=pv,
            variance_verdict=verdict(_within(var, pv, var_se)),
            skew=s.skew, kurtosis=s.kurtosis, predicted_kurtosis=kurt_pred, kurtosis_verdict=kurt_verdict,
            gaussian_limit=law.is_pure_gaussian, ks_statistic=ks_stat, normality_p=pval,
            normality_verdict=norm_verdict, centering_se=float(centering_se[k - 1]),
        ))
    C = np.cov(S, rowvar=False, ddof=1).reshape(K, K)
    covs = []
    for k in range(1, K + 1):
        for l in range(k + 1, K + 1):
            prod = (S[:, k - 1] - S[:, k - 1].mean()) * (S[:, l - 1] - S[:, l - 1].mean())
            se = float(prod.std(ddof=1) / math.sqrt(M))
            p = float(pred[k - 1, l - 1])
            covs.append(CovarianceCheck(k, l, float(C[k - 1, l - 1]), se, p, verdict(_within(C[k - 1, l - 1], p, se))))
    labels = [m.variance_verdict for m in moments] + [m.normality_verdict for m in moments] \
        + [m.kurtosis_verdict for m in moments] + [c.verdict for c in covs]
    if "fail" in labels:
        overall = "fail"
    elif "insufficient" in labels:
        overall = "insufficient"
    else:
        overall = "pass"
    thresholds = {"variance_rel_tol": VAR_REL_TOL, "n_se": N_SE, "normality_alpha": NORMALITY_ALPHA,
                  "min_replicas": MIN_VERDICT_REPLICAS, "kurtosis_se": "sqrt(24/M)"}
    return CltReport(spec.to_dict(), prof.name, K, M, thresholds, moments, covs,
                     C.tolist(), pred.tolist(), overall, S)


def run_clt(spec: EnsembleSpec, K: int, replicas: int, threads: int = 1) -> CltReport:
    """Sample S_k = sqrt(N)(X^k(1,1) - mean over replicas) and test the limit."""
    if replicas < 2:
        raise ValueError("run_clt needs at least 2 replicas")
    m = simulate_moments(spec, K, replicas, threads)
    S = math.sqrt(spec.N) * (m - m.mean(axis=0))
    centering_se = math.sqrt(spec.N) * m.std(axis=0, ddof=1) / math.sqrt(replicas)
    return clt_statistics(S, centering_se, spec, K)
