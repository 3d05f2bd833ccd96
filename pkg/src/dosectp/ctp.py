"""Closed testing for many-to-one comparisons under a monotone order restriction.

With a monotone alternative, an intersection hypothesis over doses
``{i_1 < ... < i_m}`` is decided by the test of the contiguous subset
``{0, 1, ..., i_m}``.  The closure therefore collapses to a chain: the
elementary hypothesis for dose ``i`` is rejected when every subset
``{0..j}`` with ``j >= i`` is rejected, and its adjusted p-value is the
maximum of those subset p-values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .contrasts import pairwise_contrast, sub_williams_contrasts
from .errors import DomainError
from .mct import max_t_test
from .mvt import DEFAULT_TOL


class CtpMethod(enum.Enum):
    CW = "cw"
    CP = "cp"


@dataclass(frozen=True)
class ClosurePlan:
    """``chains[i - 1]`` lists the subset top doses ``j`` that dose ``i`` must pass."""

    k: int
    chains: tuple

    def chain(self, i):
        return self.chains[i - 1]


def build_closure_plan(k):
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"number of doses must be a positive integer, got {k!r}")
    k = int(k)
    return ClosurePlan(k, tuple(tuple(range(i, k + 1)) for i in range(1, k + 1)))


def closure_adjust(subset_p, plan):
    """Adjusted p-value per dose: running maximum of subset p-values down the chain.

    ``subset_p`` maps each subset top dose ``j`` to its p-value.
    """
    return {i: max(subset_p[j] for j in plan.chain(i)) for i in range(1, plan.k + 1)}


@dataclass(frozen=True)
class CtpReport:
    """Subset and elementary p-values of one closed testing variant.

    Keys of ``subset_p`` are subset top doses ``j`` (subset ``{0..j}``);
    keys of ``elementary_adj_p`` are doses ``i``.
    """

    method: CtpMethod
    subset_p: dict
    elementary_adj_p: dict
    subset_error: dict
    labels: dict

    def error_bound(self, i):
        """Error bound carried by the subset p-value that determines dose ``i``."""
        p = self.elementary_adj_p[i]
        return max(self.subset_error[j] for j in self.subset_p
                   if j >= i and self.subset_p[j] == p)


def _report(method, fit, subset_p, subset_err):
    plan = build_closure_plan(fit.k)
    labels = {i: f"{fit.labels[i]} - {fit.labels[0]}" for i in range(1, fit.k + 1)}
    return CtpReport(method, subset_p, closure_adjust(subset_p, plan), subset_err, labels)


def ctp_cw(fit, direction="greater", seed=0, tol=DEFAULT_TOL):
    """Closure with a Williams global test for every subset ``{0..j}``.

    Every subset test uses the pooled variance and df of the full model.
    """
    design = fit.design
    subset_p, subset_err = {}, {}
    for j in range(1, fit.k + 1):
        res = max_t_test(fit, sub_williams_contrasts(design, j), direction, seed, tol)
        subset_p[j] = res.global_p
        subset_err[j] = res.global_error
    return _report(CtpMethod.CW, fit, subset_p, subset_err)


def ctp_cp(fit, direction="greater", seed=0, tol=DEFAULT_TOL):
    """Closure with the pairwise top-dose contrast ``mu_j - mu_0`` for every subset."""
    design = fit.design
    subset_p, subset_err = {}, {}
    for j in range(1, fit.k + 1):
        res = max_t_test(fit, pairwise_contrast(design, j), direction, seed, tol)
        subset_p[j] = res.results[0].raw_p
        subset_err[j] = 0.0
    return _report(CtpMethod.CP, fit, subset_p, subset_err)
