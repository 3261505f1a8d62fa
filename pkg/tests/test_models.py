import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavlab.models import (H_tau, InfeasibleError, MaterialModel, PenaltyModel, d0_of,
                           h_eval, h_second, k_normalizer, ogden_phi, phi_tau_eval,
                           phi_tau_second, stress_free_c2)


def test_default_constants(model):
    assert model.c2 == 2.0
    assert model.d0 == pytest.approx(2 ** 0.25, rel=1e-12)


def test_stress_free_reference(model):
    # identity is stress free: Phi_1 + h'(1) = 0 with all stretches 1
    _, (p1, _, _) = ogden_phi(1.0, 1.0, 1.0, model)
    assert p1 + h_eval(1.0, model)[1] == pytest.approx(0.0, abs=1e-14)


def test_h_values():
    m = MaterialModel(mu=0.0, c1=1.0, c2=1.0)
    assert h_eval(1.0, m)[0] == 2.0
    assert h_eval(1.44, m)[0] == pytest.approx(1.44 ** 2 + 1.44 ** -2)
    with pytest.raises(InfeasibleError):
        h_eval(0.0, m)
    with pytest.raises(InfeasibleError):
        h_eval(np.array([1.0, -1.0]), m)


@given(st.floats(0.05, 20.0))
def test_h_derivatives_match_fd(d):
    m = MaterialModel()
    step = 1e-6 * d
    fd = (h_eval(d + step, m)[0] - h_eval(d - step, m)[0]) / (2 * step)
    assert h_eval(d, m)[1] == pytest.approx(fd, rel=1e-6, abs=1e-8)
    fd2 = (h_eval(d + step, m)[1] - h_eval(d - step, m)[1]) / (2 * step)
    assert h_second(d, m) == pytest.approx(fd2, rel=1e-5)


@given(st.floats(0.1, 5.0), st.floats(0.5, 4.0), st.floats(1.5, 4.0), st.floats(0.5, 4.0))
def test_d0_minimizes_h(c1, c2, gamma, delta):
    m = MaterialModel(mu=0.0, c1=c1, c2=c2, gamma=gamma, delta=delta)
    d0 = d0_of(m)
    assert abs(h_eval(d0, m)[1]) < 1e-9 * max(1.0, h_eval(d0, m)[0])
    assert h_eval(d0 * 1.01, m)[0] > h_eval(d0, m)[0]
    assert h_eval(d0 / 1.01, m)[0] > h_eval(d0, m)[0]


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialModel(p=3.5)
    with pytest.raises(ValueError):
        MaterialModel(mu=-1)
    with pytest.raises(ValueError):
        MaterialModel(gamma=1.0)
    assert stress_free_c2(1.0, 2.0, 2.0, 2.0, 1.0) == 2.0


@given(st.floats(0.1, 50.0))
def test_phi_max_is_one(tau):
    pen = PenaltyModel(eps=0.1, tau=tau)
    v = np.linspace(0, tau, 2001)
    assert phi_tau_eval(v, pen)[0].max() == pytest.approx(1.0, rel=1e-6)
    assert k_normalizer(tau) == pytest.approx(16 / tau ** 4)


def test_phi_shape():
    pen = PenaltyModel(eps=0.1, tau=3.0, M=50.0)
    val, der = phi_tau_eval(np.array([-1.0, 0.0, 1.5, 3.0, 4.0]), pen)
    assert val.tolist() == [0.0, 0.0, 1.0, 0.0, 0.0]
    assert der[1] == 0.0 and der[3] == 0.0
    ext, dext = phi_tau_eval(-1.0, pen, extended=True)
    assert ext == 50.0 and dext == -100.0
    assert phi_tau_second(-1.0, pen, extended=True) == 100.0


@given(st.floats(0.01, 2.99))
def test_phi_derivative(v):
    pen = PenaltyModel(eps=0.1, tau=3.0)
    s = 1e-6
    fd = (phi_tau_eval(v + s, pen)[0] - phi_tau_eval(v - s, pen)[0]) / (2 * s)
    assert phi_tau_eval(v, pen)[1] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_penalty_conjugacy():
    pen = PenaltyModel(eps=0.01, alpha=3.0)
    assert pen.q == pytest.approx(1.5)
    with pytest.raises(ValueError):
        PenaltyModel(eps=0.1, alpha=2.0, q=3.0)
    with pytest.raises(ValueError):
        PenaltyModel(eps=0.0)
    p2 = PenaltyModel.from_eps2(1e-6)
    assert p2.eps2 == pytest.approx(1e-6)
    assert p2.grad_coef == pytest.approx(0.5e-6)
    assert p2.phi_coef == pytest.approx(0.5e6)


def test_H_tau_closed_form():
    # q = 2: int_0^tau sqrt(K) v (tau - v) dv = sqrt(K) tau^3 / 6 = 2 tau / 3
    for tau in (1.0, 3.0):
        pen = PenaltyModel(eps=0.1, tau=tau)
        assert H_tau(tau, pen) == pytest.approx(2 * tau / 3, rel=1e-10)
        assert H_tau(10 * tau, pen) == pytest.approx(2 * tau / 3, rel=1e-10)
    assert H_tau(0.0, PenaltyModel(eps=0.1)) == 0.0


def test_ogden():
    m = MaterialModel()
    val, parts = ogden_phi(1.5, 1.5, 1.5, m)
    assert val == pytest.approx(3 * 2.25)
    assert parts[0] == pytest.approx(3.0)
    with pytest.raises(InfeasibleError):
        ogden_phi(0.0, 1.0, 1.0, m)
