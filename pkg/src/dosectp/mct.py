"""One-way model fit and single-step max-T multiple contrast tests."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .contrasts import (ContrastKind, Design, contrast_correlation, dunnett_contrasts,
                        williams_contrasts)
from .errors import DataError, DegenerateDataError, DomainError
from .mvt import DEFAULT_TOL, mvt_cdf, t_sf

DIRECTIONS = ("greater", "lesser")


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: float
    ss_within: float


@dataclass(frozen=True)
class ModelFit:
    """Cell means model with a pooled residual variance.

    Attributes
    ----------
    groups : tuple of GroupSummary
        Control first, then doses in increasing order.
    s2_pooled : float
        Sum of within-group squares divided by ``df``.
    df : int
        Residual degrees of freedom, total sample size minus number of groups.
    labels : tuple of str
        Group names used in contrast labels.
    """

    groups: tuple
    s2_pooled: float
    df: int
    labels: tuple

    @property
    def k(self):
        return len(self.groups) - 1

    @property
    def n(self):
        return np.array([g.n for g in self.groups])

    @property
    def means(self):
        return np.array([g.mean for g in self.groups])

    @property
    def s(self):
        return math.sqrt(self.s2_pooled)

    @property
    def design(self):
        return Design(tuple(int(v) for v in self.n), self.labels)


def fit_groups(samples, labels=None):
    """Fit the one-way model from one array of responses per group."""
    samples = [np.asarray(s, dtype=float).ravel() for s in samples]
    if len(samples) < 2:
        raise DataError("need a control and at least one dose group")
    for i, s in enumerate(samples):
        if s.size < 2:
            raise DataError(f"group {i} has {s.size} observation(s); at least 2 are required")
        if not np.all(np.isfinite(s)):
            raise DataError(f"group {i} contains non-finite responses")
    groups = []
    for s in samples:
        mean = float(np.mean(s))
        groups.append(GroupSummary(int(s.size), mean, float(np.sum((s - mean) ** 2))))
    df = sum(g.n for g in groups) - len(groups)
    ss = sum(g.ss_within for g in groups)
    if not ss > 0:
        raise DegenerateDataError("all groups have zero within-group variation")
    if labels is None:
        labels = tuple(str(i) for i in range(len(groups)))
    return ModelFit(tuple(groups), ss / df, df, tuple(str(v) for v in labels))


def fit_oneway(data, labels=None):
    """Fit the one-way model from ``(group_index, response)`` pairs.

    Group indices must cover ``0..k`` with index 0 the control.  The fit does
    not depend on the order of the pairs.
    """
    by_group = defaultdict(list)
    for g, y in data:
        if isinstance(g, bool) or int(g) != g or g < 0:
            raise DataError(f"group index must be a nonnegative integer, got {g!r}")
        by_group[int(g)].append(float(y))
    if not by_group:
        raise DataError("no observations")
    k = max(by_group)
    missing = [g for g in range(k + 1) if g not in by_group]
    if missing:
        raise DataError(f"groups {missing} have no observations")
    # sorting makes the floating-point sums independent of input order
    return fit_groups([np.sort(by_group[g]) for g in range(k + 1)], labels)


@dataclass(frozen=True)
class ContrastTestResult:
    label: str
    statistic: float
    raw_p: float
    adj_p: float
    error_bound: float


@dataclass(frozen=True)
class MctResult:
    """Rows of a max-T test plus the global p-value (smallest adjusted p)."""

    kind: ContrastKind
    direction: str
    df: int
    results: tuple
    global_p: float
    global_error: float

    @property
    def adj_p(self):
        return np.array([r.adj_p for r in self.results])

    @property
    def statistics(self):
        return np.array([r.statistic for r in self.results])


def _check_direction(direction):
    if direction not in DIRECTIONS:
        raise DomainError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def contrast_statistics(fit, cm):
    """Standardized contrast statistics using the pooled S and full-model df."""
    rows = cm.rows
    if rows.shape[1] != fit.k + 1:
        raise DomainError(f"contrast matrix has {rows.shape[1]} columns, fit has {fit.k + 1} groups")
    est = rows @ fit.means
    se = fit.s * np.sqrt(rows ** 2 @ (1.0 / fit.n))
    return est / se


def max_t_test(fit, cm, direction="greater", seed=0, tol=DEFAULT_TOL):
    """Single-step max-T test with multivariate t adjusted p-values.

    The adjusted p-value of row ``l`` is ``P(max_m T_m >= t_l)`` under the
    joint central t with the contrast-induced correlation and ``fit.df``.
    """
    _check_direction(direction)
    stats = contrast_statistics(fit, cm)
    if direction == "lesser":
        stats = -stats
    corr = contrast_correlation(cm, fit.design)
    q = cm.q
    results = []
    cache = {}
    for label, t in zip(cm.labels, stats):
        raw = float(np.clip(t_sf(t, fit.df), 0.0, 1.0))
        if t not in cache:
            cache[t] = mvt_cdf(np.full(q, t), corr, fit.df, rng_seed=seed, tol=tol)
        res = cache[t]
        adj = min(max(res.complement, 0.0), 1.0)
        results.append(ContrastTestResult(label, float(t), raw, adj, float(res.error_bound)))
    best = min(results, key=lambda r: r.adj_p)
    return MctResult(cm.kind, direction, fit.df, tuple(results), best.adj_p, best.error_bound)


def dunnett_test(fit, direction="greater", seed=0, tol=DEFAULT_TOL):
    """Dunnett many-to-one test; row ``i`` is dose ``i`` against control."""
    return max_t_test(fit, dunnett_contrasts(fit.design), direction, seed, tol)


def williams_test(fit, direction="greater", seed=0, tol=DEFAULT_TOL):
    """Williams-type trend test as a max-T test over pooled top-dose contrasts.

    Only the first row (highest dose against control) and the global p-value
    have a pairwise interpretation.
    """
    return max_t_test(fit, williams_contrasts(fit.design), direction, seed, tol)
