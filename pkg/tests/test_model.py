"""Model tests: heterogeneity, nonlinearity derivatives, primary front."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchlab.grid import make_grid
from quenchlab.model import (
    ModelSpec,
    f_derivs,
    f_eval,
    front_residual,
    quench_h,
    trivial_front,
)

SPEC = ModelSpec()  # gamma=-1, delta=5, K=10*pi, k=1/2


def test_quench_h_zero_at_edge():
    assert quench_h(SPEC.K_halfwidth, SPEC) == 0.0


def test_quench_h_plateau_and_far_field():
    assert np.isclose(quench_h(0.0, SPEC), 1.0, atol=1e-12)
    assert np.isclose(quench_h(2 * SPEC.K_halfwidth, SPEC), -1.0, atol=1e-12)


def test_quench_h_even():
    x = np.linspace(-40 * np.pi, 40 * np.pi, 257)
    assert np.max(np.abs(quench_h(x, SPEC) - quench_h(-x, SPEC))) < 1e-14


def test_f_at_zero():
    x = np.linspace(-5.0, 5.0, 11)
    assert np.allclose(f_derivs(x, 0.0, SPEC, 1), quench_h(x, SPEC))
    assert np.allclose(f_derivs(x, 0.0, SPEC, 2), 0.0)
    assert np.allclose(f_derivs(x, 0.0, SPEC, 3), -6.0)
    spec2 = ModelSpec(gamma=2.0)
    assert np.allclose(f_derivs(x, 0.0, spec2, 3), 12.0)


def test_f_derivs_bad_order():
    with pytest.raises(ValueError):
        f_derivs(0.0, 0.0, SPEC, 4)


@settings(max_examples=40, deadline=None)
@given(st.floats(-40.0, 40.0), st.floats(-1.2, 1.2),
       st.sampled_from([-1.0, 0.5, 2.0]))
def test_f_derivs_match_finite_differences(x, u, gamma):
    spec = ModelSpec(gamma=gamma)
    eps = 1e-5
    fd1 = (f_eval(x, u + eps, spec) - f_eval(x, u - eps, spec)) / (2 * eps)
    fd2 = (f_eval(x, u + eps, spec) - 2 * f_eval(x, u, spec)
           + f_eval(x, u - eps, spec)) / eps**2
    scale = max(1.0, abs(fd1))
    assert abs(f_derivs(x, u, spec, 1) - fd1) < 1e-6 * scale
    assert abs(f_derivs(x, u, spec, 2) - fd2) < 1e-4 * max(1.0, abs(fd2))


def test_far_field_limit():
    # h(+-M) within 1e-8 of -1 for M >= K + 10/delta
    M = SPEC.K_halfwidth + 10.0 / SPEC.delta_steep + 1.0
    assert -1.0 <= quench_h(M, SPEC) <= -1.0 + 1e-8
    assert -1.0 <= quench_h(-M, SPEC) <= -1.0 + 1e-8


def test_trivial_front():
    g = make_grid(M=30 * np.pi, n_x=256, n_y=8, k=0.5)
    fr = trivial_front(g)
    assert np.all(fr.values == 0.0)
    assert fr.asymptotic_states == (0.0, 0.0)


def test_front_residual_trivial():
    g = make_grid(M=30 * np.pi, n_x=256, n_y=8, k=0.5)
    fr = trivial_front(g)
    assert front_residual(fr, SPEC, g) == 0.0


def test_front_residual_with_source():
    g = make_grid(M=30 * np.pi, n_x=256, n_y=8, k=0.5)
    chi = np.exp(-g.x_nodes**2)
    spec = ModelSpec(c=1.3, chi=chi)
    fr = trivial_front(g)
    assert np.isclose(front_residual(fr, spec, g), 1.3 * np.max(np.abs(chi)))


def test_front_residual_perturbed_positive():
    g = make_grid(M=30 * np.pi, n_x=256, n_y=8, k=0.5)
    fr = trivial_front(g)
    fr.values = fr.values + 1e-3 * np.cos(g.xi_wavenumbers[4] * g.x_nodes)
    assert front_residual(fr, SPEC, g) > 1e-6


def test_modelspec_validation():
    with pytest.raises(ValueError):
        ModelSpec(delta_steep=0.0)
    with pytest.raises(ValueError):
        ModelSpec(K_halfwidth=-1.0)
    with pytest.raises(ValueError):
        ModelSpec(k=0.0)


def test_chi_values_shape_check():
    g = make_grid(M=1.0, n_x=16, n_y=8, k=0.5)
    assert np.all(SPEC.chi_values(g) == 0.0)
    with pytest.raises(ValueError):
        ModelSpec(chi=np.zeros(8)).chi_values(g)
