"""Many-to-one contrast matrices and the correlation they induce.

Group 0 is the control and groups 1..k are doses in increasing order.  Rows
are oriented for the one-sided "dose above control" alternative; the
"lesser" direction is handled by negating statistics downstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .mvt import CorrelationMatrix


class ContrastKind(enum.Enum):
    DUNNETT = "dunnett"
    WILLIAMS = "williams"
    SUB_WILLIAMS = "sub_williams"
    PAIRWISE = "pairwise"


@dataclass(frozen=True)
class Design:
    """Group sizes of a one-way layout, control first.

    ``labels`` names the groups for reporting; defaults to ``"0", "1", ...``.
    """

    n: tuple
    labels: tuple = None

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if len(n) < 2:
            raise DataError("a design needs a control and at least one dose group")
        if any(v < 2 for v in n):
            raise DataError(f"every group needs at least 2 observations, got sizes {n}")
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(len(n)))
        labels = tuple(str(v) for v in labels)
        if len(labels) != len(n):
            raise DataError("labels and group sizes differ in length")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self):
        return len(self.n) - 1


@dataclass(frozen=True, eq=False)
class ContrastMatrix:
    """Contrast coefficients, one row per comparison, over the k+1 groups.

    ``index`` is the top dose of a sub-Williams matrix or the dose of a
    pairwise contrast, and None otherwise.
    """

    rows: np.ndarray
    kind: ContrastKind
    labels: tuple
    index: int = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, ndmin=2)
        if rows.shape[1] < 2:
            raise DomainError("contrast rows need at least two columns")
        if len(self.labels) != rows.shape[0]:
            raise DomainError("one label per contrast row is required")
        if np.any(np.abs(rows.sum(axis=1)) > 1e-12):
            raise DomainError("contrast rows must sum to zero")
        if np.any(rows[:, 0] >= 0) or np.any(rows[:, 1:] < 0):
            raise DomainError("rows must weigh the control negatively and doses nonnegatively")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def q(self):
        return self.rows.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ContrastMatrix):
            return NotImplemented
        return (self.kind == other.kind and self.index == other.index
                and self.labels == other.labels and np.array_equal(self.rows, other.rows))

    __hash__ = None


def _pair_label(design, i):
    return f"{design.labels[i]} - {design.labels[0]}"


def dunnett_contrasts(design):
    """One row per dose: dose ``i`` minus control."""
    k = design.k
    rows = np.zeros((k, k + 1))
    rows[:, 0] = -1.0
    rows[:, 1:] = np.eye(k)
    labels = [_pair_label(design, i) for i in range(1, k + 1)]
    return ContrastMatrix(rows, ContrastKind.DUNNETT, labels)


def _williams_rows(n, width):
    """Williams rows for groups ``n[0..j]`` embedded in ``width`` columns.

    Row ``q`` contrasts the control with the size-weighted mean of the top
    ``q`` doses, so row 1 is the highest dose against control.
    """
    j = len(n) - 1
    rows = np.zeros((j, width))
    rows[:, 0] = -1.0
    for q in range(1, j + 1):
        top = np.arange(j - q + 1, j + 1)
        rows[q - 1, top] = n[top] / n[top].sum()
    return rows


def _williams_labels(design, j):
    labels = []
    for q in range(1, j + 1):
        top = design.labels[j - q + 1:j + 1]
        if q == 1:
            labels.append(_pair_label(design, j))
        else:
            labels.append(f"mean({','.join(top)}) - {design.labels[0]}")
    return labels


def williams_contrasts(design):
    """Williams-type contrasts for the full design (k rows)."""
    n = np.asarray(design.n, dtype=float)
    rows = _williams_rows(n, design.k + 1)
    return ContrastMatrix(rows, ContrastKind.WILLIAMS, _williams_labels(design, design.k))


def sub_williams_contrasts(design, j):
    """Williams contrasts of groups ``0..j`` with zero columns for doses above ``j``."""
    if isinstance(j, bool) or not 1 <= int(j) <= design.k:
        raise DomainError(f"sub-Williams top dose must lie in 1..{design.k}, got {j}")
    j = int(j)
    n = np.asarray(design.n[:j + 1], dtype=float)
    rows = _williams_rows(n, design.k + 1)
    return ContrastMatrix(rows, ContrastKind.SUB_WILLIAMS, _williams_labels(design, j), index=j)


def pairwise_contrast(design, i):
    """Single contrast of dose ``i`` against the control."""
    if isinstance(i, bool) or not 1 <= int(i) <= design.k:
        raise DomainError(f"dose index must lie in 1..{design.k}, got {i}")
    i = int(i)
    rows = np.zeros((1, design.k + 1))
    rows[0, 0] = -1.0
    rows[0, i] = 1.0
    return ContrastMatrix(rows, ContrastKind.PAIRWISE, [_pair_label(design, i)], index=i)


def contrast_correlation(cm, design):
    """Correlation matrix of the standardized statistics of ``cm`` under the null."""
    rows = cm.rows
    if rows.shape[1] != design.k + 1:
        raise DomainError(
            f"contrast matrix has {rows.shape[1]} columns, design has {design.k + 1} groups")
    if np.any(np.all(rows == 0, axis=1)):
        raise DomainError("a contrast row with all coefficients zero has no variance")
    inv_n = 1.0 / np.asarray(design.n, dtype=float)
    cov = (rows * inv_n) @ rows.T
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return CorrelationMatrix(np.clip(corr, -1.0, 1.0))
