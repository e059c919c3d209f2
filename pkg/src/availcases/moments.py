"""Pairwise-complete moments: the computational core of Available Cases.

For every column pair (r, s) only rows where both cells are present
contribute.  ``cross[r, s]`` is the mean cross-product over those rows,
``cov[r, s]`` the covariance about the pair's own means.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataError
from .frame import NumericFrame

__all__ = ["DenominatorPolicy", "PairwiseMoments", "pairwise_correlation", "pairwise_moments"]


class DenominatorPolicy(str, Enum):
    SAMPLE = "sample"          # divide by N_rs - 1
    POPULATION = "population"  # divide by N_rs

    @property
    def min_count(self) -> int:
        return 2 if self is DenominatorPolicy.SAMPLE else 1


@dataclass(frozen=True, eq=False)
class PairwiseMoments:
    counts: np.ndarray
    cross: np.ndarray
    pair_means: np.ndarray  # [r, s] = mean of column r over rows where (r, s) intact
    cov: np.ndarray
    policy: DenominatorPolicy
    col_names: tuple[str, ...]

    @property
    def dim(self) -> int:
        return self.counts.shape[0]

    @property
    def means(self) -> np.ndarray:
        """Available (per-column) means."""
        return np.diag(self.pair_means).copy()


def pairwise_moments(frame: NumericFrame,
                     policy: DenominatorPolicy | str = DenominatorPolicy.SAMPLE) -> PairwiseMoments:
    policy = DenominatorPolicy(policy)
    vals, pres = frame.values, frame.present
    p = frame.n_cols
    counts = np.zeros((p, p), dtype=np.int64)
    cross = np.zeros((p, p))
    pair_means = np.zeros((p, p))
    cov = np.zeros((p, p))
    ddof = 1 if policy is DenominatorPolicy.SAMPLE else 0
    cols = [vals[:, j] for j in range(p)]
    for r in range(p):
        for s in range(r, p):
            both = pres[:, r] & pres[:, s]
            n_rs = int(both.sum())
            if n_rs < policy.min_count:
                raise DataError(
                    f"pair ({frame.col_names[r]!r}, {frame.col_names[s]!r}) has {n_rs} "
                    f"intact rows; need at least {policy.min_count}")
            xr = cols[r][both]
            xs = xr if s == r else cols[s][both]
            mr = xr.mean()
            ms = xs.mean()
            dr = xr - mr
            ds = dr if s == r else xs - ms
            c = np.dot(dr, ds) / (n_rs - ddof)
            k = np.dot(xr, xs) / n_rs
            counts[r, s] = counts[s, r] = n_rs
            cross[r, s] = cross[s, r] = k
            cov[r, s] = cov[s, r] = c
            pair_means[r, s] = mr
            pair_means[s, r] = ms
    return PairwiseMoments(counts, cross, pair_means, cov, policy, frame.col_names)


def pairwise_correlation(pm: PairwiseMoments) -> np.ndarray:
    """Rescale the pairwise covariance by the available per-column variances."""
    var = np.diag(pm.cov)
    for j, v in enumerate(var):
        if not v > 0:
            raise DataError(f"column {pm.col_names[j]!r} has zero variance")
    sd = np.sqrt(var)
    cor = pm.cov / np.outer(sd, sd)
    np.fill_diagonal(cor, 1.0)
    return cor
