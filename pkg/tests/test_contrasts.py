import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dosectp.contrasts import (ContrastKind, ContrastMatrix, Design, contrast_correlation,
                               dunnett_contrasts, pairwise_contrast, sub_williams_contrasts,
                               williams_contrasts)
from dosectp.errors import DataError, DomainError

designs = st.lists(st.integers(2, 30), min_size=2, max_size=7).map(lambda n: Design(tuple(n)))


def test_design_validation():
    with pytest.raises(DataError):
        Design((5,))
    with pytest.raises(DataError):
        Design((5, 1, 4))
    d = Design((3, 4, 5))
    assert d.k == 2 and d.labels == ("0", "1", "2")


def test_dunnett_k2():
    cm = dunnett_contrasts(Design((5, 5, 5)))
    np.testing.assert_array_equal(cm.rows, [[-1, 1, 0], [-1, 0, 1]])
    assert cm.kind is ContrastKind.DUNNETT
    assert cm.labels == ("1 - 0", "2 - 0")


def test_dunnett_k4_pattern():
    cm = dunnett_contrasts(Design((4,) * 5))
    np.testing.assert_array_equal(cm.rows[:, 1:], np.eye(4))
    np.testing.assert_array_equal(np.abs(cm.rows).sum(axis=1), 2)


def test_williams_balanced_k3():
    cm = williams_contrasts(Design((10, 10, 10, 10)))
    np.testing.assert_allclose(cm.rows, [[-1, 0, 0, 1], [-1, 0, 0.5, 0.5],
                                         [-1, 1 / 3, 1 / 3, 1 / 3]], atol=1e-15)


def test_williams_weighted():
    cm = williams_contrasts(Design((4, 2, 2, 4)))
    np.testing.assert_allclose(cm.rows[2], [-1, 2 / 8, 2 / 8, 4 / 8], atol=1e-15)


def test_williams_k1():
    cm = williams_contrasts(Design((3, 3)))
    np.testing.assert_array_equal(cm.rows, [[-1, 1]])


def test_sub_williams():
    d = Design((6, 6, 6, 6))
    cm = sub_williams_contrasts(d, 2)
    np.testing.assert_allclose(cm.rows, [[-1, 0, 1, 0], [-1, 0.5, 0.5, 0]], atol=1e-15)
    assert cm.index == 2
    np.testing.assert_array_equal(sub_williams_contrasts(d, 1).rows, [[-1, 1, 0, 0]])
    with pytest.raises(DomainError):
        sub_williams_contrasts(d, 0)
    with pytest.raises(DomainError):
        sub_williams_contrasts(d, 4)


@given(designs)
def test_sub_williams_top_equals_williams(design):
    full = williams_contrasts(design)
    sub = sub_williams_contrasts(design, design.k)
    np.testing.assert_array_equal(sub.rows, full.rows)
    assert sub.labels == full.labels


@given(designs, st.data())
def test_sub_williams_zero_padding(design, data):
    j = data.draw(st.integers(1, design.k))
    rows = sub_williams_contrasts(design, j).rows
    assert np.all(rows[:, j + 1:] == 0)
    restricted = williams_contrasts(Design(design.n[:j + 1]))
    np.testing.assert_array_equal(rows[:, :j + 1], restricted.rows)


def test_pairwise():
    d = Design((5, 5, 5, 5))
    np.testing.assert_array_equal(pairwise_contrast(d, 1).rows, [[-1, 1, 0, 0]])
    np.testing.assert_array_equal(pairwise_contrast(d, 3).rows, williams_contrasts(d).rows[:1])
    with pytest.raises(DomainError):
        pairwise_contrast(d, 4)


@given(designs)
def test_row_invariants(design):
    for cm in (dunnett_contrasts(design), williams_contrasts(design)):
        assert np.all(np.abs(cm.rows.sum(axis=1)) < 1e-12)
        assert np.all(cm.rows[:, 0] < 0) and np.all(cm.rows[:, 1:] >= 0)


def test_contrast_matrix_rejects_bad_rows():
    with pytest.raises(DomainError):
        ContrastMatrix([[-1, 0.5, 0.4]], ContrastKind.PAIRWISE, ["x"])
    with pytest.raises(DomainError):
        ContrastMatrix([[1, -1]], ContrastKind.PAIRWISE, ["x"])


def test_correlation_dunnett_balanced():
    d = Design((7, 7, 7))
    r = contrast_correlation(dunnett_contrasts(d), d).entries
    np.testing.assert_allclose(r, [[1, 0.5], [0.5, 1]], atol=1e-15)


def test_correlation_single_row():
    d = Design((4, 9))
    assert contrast_correlation(pairwise_contrast(d, 1), d).entries.tolist() == [[1.0]]


def test_correlation_williams_against_simulation():
    n = 10
    d = Design((n,) * 4)
    cm = williams_contrasts(d)
    rng = np.random.default_rng(11)
    means = rng.standard_normal((1_000_000, 4)) / np.sqrt(n)
    est = means @ cm.rows.T
    empirical = np.corrcoef(est, rowvar=False)
    r = contrast_correlation(cm, d).entries
    assert np.max(np.abs(r - empirical)) < 0.005


def test_correlation_column_mismatch():
    with pytest.raises(DomainError):
        contrast_correlation(dunnett_contrasts(Design((3, 3, 3))), Design((3, 3)))


@given(designs)
@settings(max_examples=100)
def test_correlation_psd_unit_diagonal(design):
    for cm in [dunnett_contrasts(design), williams_contrasts(design)] + \
              [sub_williams_contrasts(design, j) for j in range(1, design.k + 1)]:
        r = contrast_correlation(cm, design).entries
        assert np.all(np.diag(r) == 1.0)
        assert np.linalg.eigvalsh(r)[0] > -1e-10


@given(designs, st.data())
def test_correlation_scale_invariance(design, data):
    cm = williams_contrasts(design)
    scale = np.array(data.draw(st.lists(st.floats(0.01, 100), min_size=cm.q, max_size=cm.q)))
    scaled = ContrastMatrix(cm.rows * scale[:, None], cm.kind, cm.labels)
    np.testing.assert_allclose(contrast_correlation(scaled, design).entries,
                               contrast_correlation(cm, design).entries, atol=1e-12)
