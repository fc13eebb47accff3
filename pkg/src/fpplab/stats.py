"""Monte-Carlo summaries: means with standard errors and Wilson intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats as _st

Z95 = float(_st.norm.ppf(0.975))


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    replicas: int
    provenance: str = ""
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def __post_init__(self) -> None:
        if self.stderr < 0 or not math.isfinite(self.stderr):
            raise ValueError(f"stderr must be finite and >= 0, got {self.stderr}")
        if self.replicas < 1:
            raise ValueError("an estimate needs at least one replica")

    @property
    def ci(self) -> tuple[float, float]:
        lo = self.mean - Z95 * self.stderr if self.ci_low is None else self.ci_low
        hi = self.mean + Z95 * self.stderr if self.ci_high is None else self.ci_high
        return lo, hi


def mean_estimate(samples, provenance: str = "") -> Estimate:
    """Sample mean with stderr = sample std (ddof=1) / sqrt(n); normal 95% CI."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    n = x.size
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(m, se, n, provenance, m - Z95 * se, m + Z95 * se)


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def proportion_estimate(events, provenance: str = "") -> Estimate:
    """Fraction of true events with a Wilson 95% interval."""
    e = np.asarray(events, dtype=bool).ravel()
    n = e.size
    if n == 0:
        raise ValueError("no samples")
    k = int(e.sum())
    p = k / n
    se = math.sqrt(p * (1 - p) / (n - 1)) if n > 1 else 0.0
    lo, hi = wilson_interval(k, n)
    return Estimate(p, se, n, provenance, lo, hi)


def combined_stderr(*estimates: Estimate) -> float:
    return math.sqrt(sum(e.stderr ** 2 for e in estimates))
