"""DNS tests: stepper invariants, convergence order, linear growth rates,
seeding, relaxation diagnostics and checkpointing."""

import numpy as np
import pytest

from quenchlab.grid import Field, make_grid, weight_profile
from quenchlab.linop import assemble_modal, leading_eig
from quenchlab.model import ModelSpec, trivial_front
from quenchlab.sim import (
    BlowUpError,
    CheckpointError,
    ContinuationBranch,
    RelaxResult,
    SimState,
    Stepper,
    adiabatic_continuation,
    checkpoint_load,
    checkpoint_save,
    classify_pattern,
    relax,
    seed,
)


def _rand_state(grid, amp=1e-3, rng_seed=0):
    rng = np.random.default_rng(rng_seed)
    vals = amp * rng.standard_normal((grid.n_x, grid.n_y))
    return SimState(field=Field(grid=grid, values=vals))


def test_zero_fixed_point(model, grid256):
    st = SimState(field=Field(grid=grid256, values=np.zeros((256, 16))))
    stepper = Stepper(grid256, model, 5e-3)
    out = stepper.run(st, 5)
    assert np.all(out.field.values == 0.0)
    assert out.step_count == 5
    assert np.isclose(out.t, 25e-3)


def test_mass_conservation(model, grid256):
    st = _rand_state(grid256, amp=5e-2)
    m0 = np.mean(st.field.values)
    stepper = Stepper(grid256, model, 5e-3)
    out = stepper.run(st, 200)
    assert abs(np.mean(out.field.values) - m0) < 1e-14


def test_equivariance(model, grid256):
    # y-translation and y-reflection commute with the dynamics
    st = _rand_state(grid256, amp=1e-2)
    stepper = Stepper(grid256, model, 5e-3)
    out = stepper.run(st, 20).field.values

    shifted = SimState(field=Field(grid=grid256,
                                   values=np.roll(st.field.values, 3, axis=1)))
    out_shift = stepper.run(shifted, 20).field.values
    assert np.max(np.abs(out_shift - np.roll(out, 3, axis=1))) < 1e-12

    refl = SimState(field=Field(
        grid=grid256, values=np.roll(st.field.values[:, ::-1], 1, axis=1)))
    out_refl = stepper.run(refl, 20).field.values
    assert np.max(np.abs(out_refl - np.roll(out[:, ::-1], 1, axis=1))) < 1e-12


def test_temporal_order_two(model, grid256):
    # errors vs a fine-dt reference on a smooth trajectory
    base = _rand_state(grid256, amp=2e-2, rng_seed=4)
    t_final = 0.32
    spec = ModelSpec(c=1.25)

    def final(dt):
        stepper = Stepper(grid256, spec, dt)
        return stepper.run(SimState(field=base.field), round(t_final / dt))

    ref = final(2.5e-4).field.values
    errs = [np.max(np.abs(final(dt).field.values - ref))
            for dt in (8e-3, 4e-3, 2e-3)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.6)
    assert np.all(orders < 2.4)


def test_blow_up_detected(hopf512, model):
    st = seed("checkerboard", 1.0, hopf512)  # pointwise ~ 20: quintic blow-up
    stepper = Stepper(hopf512.grid, ModelSpec(c=1.2), 5e-3)
    with pytest.raises(BlowUpError):
        stepper.run(st, 200)


def test_linear_growth_rate_matches_eigenvalue(hopf512, model, grid512,
                                               front512):
    # project the ell=1 mode onto the left eigenvector of the modal matrix:
    # the coefficient grows like exp(lambda t) for small data.  The left
    # vector is computed in the weighted frame, where the eigenproblem is
    # well conditioned, and pulled back by q = w * q_w.
    c = 1.25
    pair = leading_eig(model, front512, grid512, 1, c, 0.2)
    mat_w = assemble_modal(1, c, 0.2, model, front512, grid512).matrix
    adj_lams, adj_vecs = np.linalg.eig(mat_w.conj().T.astype(complex))
    q_w = adj_vecs[:, np.argmin(np.abs(adj_lams - np.conj(pair.lam)))]
    q = weight_profile(grid512, 0.2).values * q_w

    st = seed("oblique+", 1e-6, hopf512)
    stepper = Stepper(grid512, ModelSpec(c=c), 5e-3)

    def coeff(state):
        mode = np.mean(state.field.values
                       * np.exp(-1j * grid512.y_nodes)[None, :], axis=1)
        return np.mean(mode * np.conj(q))

    st = stepper.run(st, 100)  # settle the multistep history
    a1, t1 = coeff(st), st.t
    st = stepper.run(st, 200)
    a2, t2 = coeff(st), st.t
    rate = np.log(abs(a2 / a1)) / (t2 - t1)
    assert abs(rate - pair.lam.real) < 0.05 * abs(pair.lam.real)
    # temporal frequency from the phase drift
    freq = np.angle(a2 / a1) / (t2 - t1)
    assert abs(abs(freq) - abs(pair.lam.imag)) < 0.05 * abs(pair.lam.imag)


def test_seed_kinds(hopf512):
    g = hopf512.grid
    for kind in ("oblique+", "oblique-", "checkerboard", "stripes", "random"):
        st = seed(kind, 1e-3, hopf512)
        assert st.field.values.shape == (g.n_x, g.n_y)
    with pytest.raises(ValueError):
        seed("spiral", 1e-3, hopf512)
    with pytest.raises(ValueError):
        seed("stripes", -1.0, hopf512)


def test_seed_mode_content(hopf512):
    g = hopf512.grid
    cb = seed("checkerboard", 1e-3, hopf512).field.values
    yhat = np.fft.fft(cb, axis=1) / g.n_y
    # equal +1/-1 content, nothing else
    assert np.allclose(yhat[:, 1], np.conj(yhat[:, -1]), atol=1e-16)
    assert np.max(np.abs(yhat[:, 2:-1])) < 1e-16
    ob = seed("oblique+", 1e-3, hopf512).field.values
    yhat = np.fft.fft(ob, axis=1) / g.n_y
    assert np.max(np.abs(yhat[:, 1])) > 1e-5
    assert np.max(np.abs(yhat[:, 0])) < 1e-16


def test_relax_decay_above_crossing(hopf512):
    # c = 1.5 > c*: the transverse mode decays (tiny seed, short horizon,
    # with the even-ell long-wave modes projected out)
    st = seed("oblique+", 1e-4, hopf512)
    stepper = Stepper(hopf512.grid, ModelSpec(c=1.5), 5e-3,
                      restrict="odd-ell")
    res = relax(st, stepper, hopf512, t_max=40.0, window=10.0, tol=1e-9)
    assert res.amplitude < 5e-5
    assert res.z_plus > res.z_minus


def test_stepper_restrict(hopf512):
    g = hopf512.grid
    st = seed("checkerboard", 1e-3, hopf512)
    dirty = st.field.values + 1e-8 * np.cos(2 * g.y_nodes)[None, :]
    st = SimState(field=Field(grid=g, values=dirty))
    stepper = Stepper(g, ModelSpec(c=1.3), 5e-3, restrict="odd-ell")
    out = stepper.run(st, 5)
    yhat = np.fft.fft(out.field.values, axis=1) / g.n_y
    even = np.abs(yhat[:, ::2])
    assert np.max(even) == 0.0
    with pytest.raises(ValueError):
        Stepper(g, ModelSpec(), 1e-3, restrict="even-ell")


def test_classify_pattern_branches():
    def res(amp, zp, zm, ell0):
        return RelaxResult(state=None, amplitude=amp, period=None,
                           converged=True, z_plus=zp, z_minus=zm,
                           ell0_fraction=ell0, series_t=np.array([]),
                           series_z=np.array([]))

    assert classify_pattern(res(1e-7, 0, 0, 0)) == "trivial"
    assert classify_pattern(res(0.1, 0.01, 0.01, 0.95)) == "stripes"
    assert classify_pattern(res(0.1, 0.2, 0.005, 0.1)) == "oblique+"
    assert classify_pattern(res(0.1, 0.005, 0.2, 0.1)) == "oblique-"
    assert classify_pattern(res(0.1, 0.1, 0.09, 0.1)) == "checkerboard"
    assert classify_pattern(res(0.1, 0.1, 0.025, 0.1)) == "mixed"


def test_adiabatic_continuation_validation(hopf512, model):
    st = seed("checkerboard", 1e-3, hopf512)
    with pytest.raises(ValueError):
        adiabatic_continuation(st, 1.2, 1.4, -0.02, model, hopf512)


def test_branch_csv(tmp_path):
    br = ContinuationBranch(
        samples=[(1.2, 0.1, "checkerboard", 7.9, True),
                 (1.22, 0.09, "checkerboard", None, False)],
        direction="increasing")
    path = tmp_path / "branch.csv"
    br.write_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "c,amplitude,class,period,converged"
    assert rows[1].split(",")[2] == "checkerboard"
    assert rows[2].split(",")[3] == ""


def test_checkpoint_roundtrip(model, grid256, tmp_path):
    st = _rand_state(grid256, amp=1e-2, rng_seed=9)
    stepper = Stepper(grid256, model, 5e-3)
    st = stepper.run(st, 7)
    path = tmp_path / "state.qch"
    checkpoint_save(st, path, model)
    loaded, c = checkpoint_load(path)
    assert c == model.c
    assert loaded.t == st.t
    assert loaded.step_count == st.step_count
    assert np.array_equal(loaded.field.values, st.field.values)
    assert np.array_equal(loaded.prev_nonlinear, st.prev_nonlinear)


def test_checkpoint_exact_resume(model, grid256, tmp_path):
    st = _rand_state(grid256, amp=1e-2, rng_seed=9)
    stepper = Stepper(grid256, model, 5e-3)
    mid = stepper.run(st, 10)
    path = tmp_path / "mid.qch"
    checkpoint_save(mid, path, model)
    direct = stepper.run(mid, 10)
    resumed, _ = checkpoint_load(path, grid=grid256)
    resumed = stepper.run(resumed, 10)
    # the multistep history travels with the checkpoint: bitwise match
    assert np.array_equal(direct.field.values, resumed.field.values)


def test_checkpoint_errors(model, grid256, tmp_path):
    bad = tmp_path / "bad.qch"
    bad.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError):
        checkpoint_load(bad)
    st = _rand_state(grid256)
    path = tmp_path / "ok.qch"
    checkpoint_save(st, path, model)
    other = make_grid(30 * np.pi, 128, 16, 0.5)
    with pytest.raises(CheckpointError):
        checkpoint_load(path, grid=other)
