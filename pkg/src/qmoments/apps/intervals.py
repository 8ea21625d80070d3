"""Bounds on the largest eigenvalue of rho from noisy moment estimates.

With |m_j - Tr(rho^j)| <= eps the following hold for every valid j:

    lambda_max >= (m_{j+1} - eps) / (m_j + eps)      (ratio)
    lambda_max >= (m_j - eps)^(1/(j-1))              (root)
    lambda_max <= (m_j + eps)^(1/j)                  (upper)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NumericalError
from ..simcore.streams import parallel_map

CONTAINMENT_ATOL = 1e-12


@dataclass(frozen=True)
class NoisyMoments:
    """Estimates of Tr(rho^2)..Tr(rho^k); ``values[j - 2]`` is order j."""

    values: tuple[float, ...]
    eps: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError("need at least Tr(rho^2)")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    @property
    def k(self) -> int:
        return len(self.values) + 1

    def order(self, j: int) -> float:
        return self.values[j - 2]


@dataclass(frozen=True)
class EigenInterval:
    lower: float
    upper: float
    consistent: bool = True

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, atol: float = CONTAINMENT_ATOL) -> bool:
        return self.lower - atol <= value <= self.upper + atol


def lambda_max_interval(nm: NoisyMoments) -> EigenInterval:
    eps, k = nm.eps, nm.k
    lowers, uppers = [], []
    for j in range(2, k):
        num = nm.order(j + 1) - eps
        den = nm.order(j) + eps
        if num > 0 and den > 0:
            lowers.append(num / den)
    for j in range(2, k + 1):
        radicand = nm.order(j) - eps
        if radicand > 0:
            lowers.append(radicand ** (1.0 / (j - 1)))
        top = nm.order(j) + eps
        if top > 0:
            uppers.append(top ** (1.0 / j))
    if not lowers and not uppers:
        raise NumericalError("insufficient usable moments: every bound term was skipped")
    lower = min(max(max(lowers, default=0.0), 0.0), 1.0)
    upper = min(max(min(uppers, default=1.0), 0.0), 1.0)
    if lower > upper:
        mid = (lower + upper) / 2
        return EigenInterval(mid, mid, consistent=False)
    return EigenInterval(lower, upper)


def perturb_moments(
    moments: Sequence[float],
    eps: float,
    rng: np.random.Generator | None = None,
    *,
    normals: np.ndarray | None = None,
) -> NoisyMoments:
    """m_j + sgn(xi) min(eps, |xi|) with xi ~ N(0, eps^2/4).

    ``normals`` supplies the standard-normal draws directly (xi = eps*z/2) so
    that several eps values can share one set of draws.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    m = np.asarray(moments, dtype=float)
    if normals is None:
        if rng is None:
            raise ValueError("provide rng or normals")
        normals = rng.standard_normal(m.size)
    xi = eps * np.asarray(normals, dtype=float) / 2
    noisy = m + np.sign(xi) * np.minimum(eps, np.abs(xi))
    return NoisyMoments(tuple(noisy), eps)


@dataclass(frozen=True)
class IntervalRow:
    rank: int
    eps: float
    mean_width: float
    sd_width: float
    containment: float
    inconsistent: int
    trials: int


def _trial_rng(seed: int, rank: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rank), int(trial))))


def interval_study(
    ranks: Sequence[int] = (2, 4, 8, 16, 32),
    eps_grid: Sequence[float] = (1e-3, 1e-4, 1e-5, 1e-6),
    trials: int = 1000,
    k: int = 4,
    seed: int = 0,
    *,
    threads: int = 1,
) -> list[IntervalRow]:
    """Monte Carlo over Dirichlet(1,...,1) spectra.

    Each (rank, trial) owns a keyed stream giving one spectrum and one set of
    standard normals reused for every eps, so widths across the eps grid are
    compared on common random numbers.
    """
    eps_grid = [float(e) for e in eps_grid]

    def one_rank(rank: int) -> list[IntervalRow]:
        widths = np.empty((trials, len(eps_grid)))
        inside = np.empty((trials, len(eps_grid)), dtype=bool)
        bad = np.zeros(len(eps_grid), dtype=int)
        for t in range(trials):
            rng = _trial_rng(seed, rank, t)
            lam = rng.dirichlet(np.ones(rank))
            z = rng.standard_normal(k - 1)
            exact = [float(np.sum(lam**j)) for j in range(2, k + 1)]
            lam_max = float(lam.max())
            for e, eps in enumerate(eps_grid):
                iv = lambda_max_interval(perturb_moments(exact, eps, normals=z))
                widths[t, e] = iv.width
                inside[t, e] = iv.contains(lam_max)
                bad[e] += not iv.consistent
        rows = []
        for e, eps in enumerate(eps_grid):
            w = widths[:, e]
            rows.append(
                IntervalRow(
                    rank,
                    eps,
                    float(w.mean()),
                    float(w.std(ddof=1)) if trials > 1 else 0.0,
                    float(inside[:, e].mean()),
                    int(bad[e]),
                    trials,
                )
            )
        return rows

    return [row for rows in parallel_map(one_rank, list(ranks), threads) for row in rows]
