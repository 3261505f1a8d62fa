import numpy as np
import pytest

from cavlab.radial import RadialField, RadialGrid, minimize_classical
from cavlab.repulsion import (core_h_asymptote, monotone, repulsion_table, tilde_reference,
                              truncate_core)


@pytest.fixture(scope="module")
def rc64(model):
    return minimize_classical(1.5, model, RadialGrid(64)).field


def test_truncate(rc64):
    for n in (2, 4, 8, 16):
        f = truncate_core(rc64, n)
        k = 64 // n
        assert f.r[0] == 0.0
        np.testing.assert_array_equal(f.r[k:], rc64.r[k:])
        np.testing.assert_allclose(np.diff(f.r[:k + 1]), rc64.r[k] / k)
        assert f.is_feasible()


def test_truncate_errors(rc64):
    with pytest.raises(ValueError):
        truncate_core(rc64, 1)
    with pytest.raises(ValueError):
        truncate_core(rc64, 3)


def test_core_determinant(rc64):
    f = truncate_core(rc64, 16)
    _, _, det, _, _ = f.cell_quantities()
    assert det[0] == pytest.approx((16 * rc64.r[4]) ** 3)


def test_table_properties(rc64, model):
    rows = repulsion_table(rc64, [2, 4, 8, 16], model)
    assert monotone([r.E_total for r in rows])
    assert monotone([r.E_h for r in rows])
    for r in rows:
        assert r.E_total == pytest.approx(r.E_tilde + r.E_h)
    assert max(r.E_tilde for r in rows) < 2 * tilde_reference(rc64, model)
    assert rows[-1].E_h / rows[-2].E_h > 6


def test_asymptote(rc64, model):
    assert core_h_asymptote(rc64, model) == pytest.approx(rc64.r[0] ** 6 / 3)


def test_monotone():
    assert monotone([1, 2, 3]) and not monotone([1, 1, 2])
