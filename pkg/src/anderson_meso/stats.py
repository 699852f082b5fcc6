"""Reference distributions, goodness-of-fit statistics and the arctan mollifier.

Streaming moment summaries are mergeable value types so ensemble statistics
can be reduced in any order.  Every decision surface is a TestReport; pass
thresholds live here, never inline in the experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr


@dataclass(frozen=True)
class RunningMoments:
    """Streaming (n, mean, M2, M3, M4, max); merge is associative."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0
    max: float = float("-inf")

    def push(self, x: float) -> "RunningMoments":
        return self.merge(RunningMoments(n=1, mean=float(x), max=float(x)))

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        na, nb = self.n, other.n
        n = na + nb
        d = other.mean - self.mean
        d2, d3, d4 = d * d, d ** 3, d ** 4
        mean = self.mean + d * nb / n
        m2 = self.m2 + other.m2 + d2 * na * nb / n
        m3 = (self.m3 + other.m3
              + d3 * na * nb * (na - nb) / n ** 2
              + 3.0 * d * (na * other.m2 - nb * self.m2) / n)
        m4 = (self.m4 + other.m4
              + d4 * na * nb * (na * na - na * nb + nb * nb) / n ** 3
              + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / n ** 2
              + 4.0 * d * (na * other.m3 - nb * self.m3) / n)
        return RunningMoments(n=n, mean=mean, m2=m2, m3=m3, m4=m4,
                              max=max(self.max, other.max))

    @staticmethod
    def from_samples(x) -> "RunningMoments":
        x = np.asarray(x, dtype=float)
        n = len(x)
        if n == 0:
            return RunningMoments()
        mean = float(np.mean(x))
        c = x - mean
        return RunningMoments(n=n, mean=mean, m2=float(np.sum(c ** 2)),
                              m3=float(np.sum(c ** 3)), m4=float(np.sum(c ** 4)),
                              max=float(np.max(x)))

    @property
    def variance(self) -> float:
        """Unbiased sample variance M2/(n-1)."""
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    def central_moment(self, k: int) -> float:
        if k == 1:
            return 0.0
        if k == 2:
            return self.m2 / self.n
        if k == 3:
            return self.m3 / self.n
        if k == 4:
            return self.m4 / self.n
        raise ValueError("streaming summary holds central moments up to k=4 only")

    def raw_moment(self, k: int) -> float:
        mu = self.mean
        if k == 1:
            return mu
        c2 = self.central_moment(2)
        if k == 2:
            return c2 + mu * mu
        c3 = self.central_moment(3)
        if k == 3:
            return c3 + 3 * mu * c2 + mu ** 3
        c4 = self.central_moment(4)
        if k == 4:
            return c4 + 4 * mu * c3 + 6 * mu * mu * c2 + mu ** 4
        raise ValueError("streaming summary holds raw moments up to k=4 only")

    @property
    def skewness(self) -> float:
        c2 = self.central_moment(2)
        return self.central_moment(3) / c2 ** 1.5 if c2 > 0 else 0.0


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Ensemble samples with a streaming summary and an integer histogram."""

    samples: np.ndarray
    summary: RunningMoments = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.summary is None:
            object.__setattr__(self, "summary", RunningMoments.from_samples(self.samples))

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def is_integer(self) -> bool:
        return bool(np.all(self.samples == np.round(self.samples)))

    def integer_histogram(self):
        """(values 0..max, empirical probabilities); integer samples only."""
        if not self.is_integer or self.n == 0 or np.min(self.samples) < 0:
            raise ValueError("integer histogram requires nonnegative integer samples")
        counts = np.bincount(self.samples.astype(np.int64))
        return np.arange(len(counts)), counts / self.n

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        return EmpiricalDistribution(
            samples=np.concatenate([self.samples, other.samples]),
            summary=self.summary.merge(other.summary))


@dataclass(frozen=True)
class TestReport:
    statistic: str
    value: float
    threshold: float
    n: int
    notes: str = ""

    @property
    def passed(self) -> bool:
        return self.value <= self.threshold

    def to_json_dict(self) -> dict:
        return {"statistic": self.statistic, "value": self.value,
                "threshold": self.threshold, "passed": self.passed,
                "n": self.n, "notes": self.notes}


def poisson_pmf(lam: float, n: int) -> float:
    """P(Poisson(lam) = n), evaluated in log space."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def poisson_sf(lam: float, n: int) -> float:
    """P(Poisson(lam) >= n)."""
    if n <= 0:
        return 1.0
    return max(0.0, 1.0 - math.fsum(poisson_pmf(lam, k) for k in range(n)))


def total_variation_poisson(emp: EmpiricalDistribution, lam: float,
                            threshold: float = 0.05) -> TestReport:
    """TV distance between integer count samples and Poisson(lam)."""
    values, phat = emp.integer_histogram()
    pmf = np.array([poisson_pmf(lam, int(k)) for k in values])
    tail = max(0.0, 1.0 - float(np.sum(pmf)))
    tv = 0.5 * (float(np.sum(np.abs(phat - pmf))) + tail)
    return TestReport(statistic="tv_poisson", value=tv, threshold=threshold,
                      n=emp.n, notes=f"lambda={lam:.6g}")


def ks_statistic(samples: np.ndarray, cdf) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = cdf(x)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_normal(samples, mu: float, sigma: float, threshold: float = None) -> TestReport:
    """One-sample Kolmogorov-Smirnov against Normal(mu, sigma^2)."""
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    if n < 10:
        raise ValueError("ks_normal requires n >= 10")
    if threshold is None:
        threshold = 1.358 / math.sqrt(n)
    if sigma <= 0:
        return TestReport(statistic="ks_normal", value=1.0, threshold=threshold,
                          n=n, notes="degenerate: sigma <= 0")
    d = ks_statistic(samples, lambda x: ndtr((x - mu) / sigma))
    return TestReport(statistic="ks_normal", value=d, threshold=threshold,
                      n=n, notes=f"mu={mu:.6g} sigma={sigma:.6g}")


def moments(emp: EmpiricalDistribution, k: int, kind: str = "central") -> float:
    """k-th moment (k <= 4) from the streaming summary."""
    if k > 4:
        raise ValueError("k > 4 not supported by the streaming summary; use raw samples")
    if kind == "central":
        return emp.summary.central_moment(k)
    if kind == "raw":
        return emp.summary.raw_moment(k)
    raise ValueError(f"unknown moment kind {kind!r}")


def lindeberg_diagnostic(cell_samples, eps: float) -> float:
    """Σ_m E[Y_m^2; |Y_m| > eps * sqrt(Σ Var)] / Σ Var over centered cells."""
    cells = [np.asarray(c, dtype=float) for c in cell_samples]
    total_var = math.fsum(float(np.mean(c ** 2)) for c in cells if len(c))
    if total_var == 0.0:
        return 0.0
    cut = eps * math.sqrt(total_var)
    num = math.fsum(float(np.mean(np.where(np.abs(c) > cut, c ** 2, 0.0)))
                    for c in cells if len(c))
    return num / total_var


def mollifier_eval(x: float, eps: float, a: float, b: float):
    """Cauchy-smoothed indicator of (a, b): (1/π)(arctan((x-a)/ε) - arctan((x-b)/ε))."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not a < b:
        raise ValueError("mollifier requires a < b")
    x = np.asarray(x, dtype=float)
    out = (np.arctan((x - a) / eps) - np.arctan((x - b) / eps)) / math.pi
    return float(out) if out.ndim == 0 else out


def _mollifier_antiderivative(x: float, eps: float, a: float, b: float) -> float:
    ta = math.atan((x - a) / eps)
    tb = math.atan((x - b) / eps)
    aa = ((x - a) * ta - (x - b) * tb) / math.pi
    bb = (eps / (2.0 * math.pi)) * (math.log1p(((x - a) / eps) ** 2)
                                    - math.log1p(((x - b) / eps) ** 2))
    return aa - bb


def mollifier_l1_error(eps: float, a: float, b: float) -> float:
    """‖χ_(a,b) - g_ε‖₁ from the closed-form antiderivative."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not a < b:
        raise ValueError("mollifier requires a < b")
    width = b - a
    f_a = _mollifier_antiderivative(a, eps, a, b)
    f_b = _mollifier_antiderivative(b, eps, a, b)
    f_minus_inf = -width / 2.0
    f_plus_inf = width / 2.0
    left_tail = f_a - f_minus_inf          # ∫_{-∞}^a g_ε
    right_tail = f_plus_inf - f_b          # ∫_b^∞ g_ε
    middle = width - (f_b - f_a)           # ∫_a^b (1 - g_ε)
    return left_tail + right_tail + middle
