import numpy as np
import pytest

from gpliouville import backend
from gpliouville.evolution import (
    BINARY_MAGIC,
    BoundaryError,
    ConvergenceError,
    EvolutionConfig,
    PERTURBATION_SHAPES,
    Stepper,
    perturbation_shape,
    perturbed_soliton,
    read_binary,
    read_csv,
    simulate,
    step,
    stepper_for,
)
from gpliouville.grid import Grid, integrate
from gpliouville.soliton import build_profile, distance, soliton_state


def test_config_validation():
    for kw in ({"dt": 0.0}, {"dt": -1e-3}, {"c_frame": 1.5}, {"newton_tol": 0.0}, {"t_end": -1.0}):
        args = {"c_frame": 0.5, "dt": 1e-3, "t_end": 1.0, **kw}
        with pytest.raises(ValueError):
            EvolutionConfig(**args)


def test_steady_state_in_comoving_frame():
    cfg = EvolutionConfig(c_frame=0.5, dt=1e-3, t_end=1.0)
    g = cfg.grid
    psi = soliton_state(g, 0.5)
    st = stepper_for(cfg)
    for _ in range(1000):
        psi = st.step(psi)
    assert np.max(np.abs(psi - soliton_state(g, 0.5))) <= 1e-6


def test_vacuum_is_fixed():
    g = Grid.from_spacing(10.0, 0.05)
    st = Stepper(g, 0.0, 1e-2, (1.0, 1.0))
    psi = np.ones(g.n_points, dtype=complex)
    for _ in range(50):
        psi = st.step(psi)
    assert np.max(np.abs(psi - 1.0)) < 1e-13


def test_time_reversibility():
    cfg = EvolutionConfig(c_frame=0.3, dt=2e-3, t_end=1.0, half_length=20.0, n_points=1001)
    g = cfg.grid
    psi0 = perturbed_soliton(g, 0.3, 1e-2)
    fwd = step(psi0, cfg)
    back = step(fwd, cfg, dt=-cfg.dt)
    assert np.max(np.abs(fwd - psi0)) > 1e-6
    assert np.max(np.abs(back - psi0)) < 1e-11


def test_boundary_mismatch_rejected():
    cfg = EvolutionConfig(c_frame=0.0, dt=1e-3, t_end=1.0, half_length=20.0, n_points=1001)
    psi = soliton_state(cfg.grid, 0.0)
    psi[0] += 1e-6
    with pytest.raises(BoundaryError):
        step(psi, cfg)


def test_large_step_fails_to_converge():
    g = Grid.from_spacing(20.0, 0.05)
    edge = soliton_state(g, 0.0)
    st = Stepper(g, 0.0, 5.0, (edge[0], edge[-1]), tol=1e-12, max_iter=3)
    with pytest.raises(ConvergenceError):
        st.step(perturbed_soliton(g, 0.0, 0.05))


def test_time_order_two():
    g = Grid.from_spacing(20.0, 0.05)
    psi0 = perturbed_soliton(g, 0.4, 2e-2, "gaussian")
    ends = []
    for dt in (2e-2, 1e-2, 5e-3):
        cfg = EvolutionConfig(0.4, dt, 1.0, 20.0, g.n_points, snapshot_stride=int(round(1 / dt)))
        ends.append(simulate(psi0, cfg).states[-1])
    ratio = np.max(np.abs(ends[0] - ends[1])) / np.max(np.abs(ends[1] - ends[2]))
    assert 3.6 < ratio < 4.4


def test_space_order_on_exact_soliton():
    # U_c is an exact steady state, so the drift is pure spatial error
    drift = []
    for h in (0.1, 0.05):
        cfg = EvolutionConfig(0.5, 1e-2, 1.0, 30.0, Grid.from_spacing(30.0, h).n_points,
                              snapshot_stride=100)
        psi0 = soliton_state(cfg.grid, 0.5)
        drift.append(np.max(np.abs(simulate(psi0, cfg).states[-1] - psi0)))
    assert np.log2(drift[0] / drift[1]) >= 3


def test_trajectory_invariants_and_pinning():
    cfg = EvolutionConfig(0.5, 1e-3, 0.5, 20.0, 1001, snapshot_stride=25)
    g = cfg.grid
    psi0 = perturbed_soliton(g, 0.5, 1e-2)
    tr = simulate(psi0, cfg)
    assert len(tr) == 21
    assert np.all(np.diff(tr.times) > 0)
    np.testing.assert_allclose(np.diff(tr.times), tr.snapshot_dt, rtol=1e-12)
    assert np.all(tr.states[:, 0] == psi0[0]) and np.all(tr.states[:, -1] == psi0[-1])
    assert tr.relative_energy_drift() <= 1e-6
    assert tr.relative_mass_drift() <= 1e-6
    assert len(tr.energies) == cfg.n_steps + 1


def test_perturbed_run_stays_near_family():
    cfg = EvolutionConfig(0.5, 1e-3, 2.0, 30.0, 1501, snapshot_stride=500)
    g = cfg.grid
    delta = 1e-2
    psi0 = perturbed_soliton(g, 0.5, delta, project=False)
    tr = simulate(psi0, cfg)
    d = [distance(g, psi, soliton_state(g, 0.5)) for psi in tr.states]
    assert max(d) < 10 * delta


def test_perturbation_shapes(grid):
    for shape in PERTURBATION_SHAPES:
        p = perturbation_shape(grid, shape, seed=4)
        assert p.shape == (grid.n_points,) and np.all(np.isfinite(p))
    np.testing.assert_array_equal(perturbation_shape(grid, "random_smooth", 7),
                                  perturbation_shape(grid, "random_smooth", 7))
    with pytest.raises(ValueError):
        perturbation_shape(grid, "square")


def test_projected_perturbation_is_orthogonal(grid):
    psi = perturbed_soliton(grid, 0.5, 1e-2)
    p = build_profile(0.5, grid)
    eps = psi - p.U
    assert psi[0] == p.U[0] and psi[-1] == p.U[-1]
    for r in (integrate(grid, p.Q * eps.real), integrate(grid, p.Q * eps.imag),
              integrate(grid, p.R * p.Q * eps.imag)):
        assert abs(r) < 1e-12


def test_serialization_round_trip(tmp_path):
    cfg = EvolutionConfig(0.5, 1e-3, 0.05, 10.0, 201, snapshot_stride=10)
    tr = simulate(perturbed_soliton(cfg.grid, 0.5, 1e-2), cfg)
    t1, s1 = read_csv(tr.save_csv(tmp_path / "t.csv"), 201)
    t2, s2 = read_binary(tr.save_binary(tmp_path / "t.bin"), 201)
    np.testing.assert_array_equal(t1, tr.times)
    np.testing.assert_array_equal(s1, tr.states)
    np.testing.assert_array_equal(t2, tr.times)
    np.testing.assert_array_equal(s2, tr.states)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "t,x_index,re_psi,im_psi"
    assert (tmp_path / "t.bin").read_bytes()[:4] == BINARY_MAGIC
    with pytest.raises(ValueError):
        read_binary(tmp_path / "t.csv", 201)


@pytest.mark.skipif(not backend.COMPILED_AVAILABLE, reason="compiled kernel not built")
def test_backends_agree():
    cfg = dict(c_frame=0.5, dt=1e-3, t_end=0.2, half_length=20.0, n_points=1001, snapshot_stride=200)
    g = Grid(20.0, 1001)
    psi0 = perturbed_soliton(g, 0.5, 1e-2, "gaussian")
    a = simulate(psi0, EvolutionConfig(**cfg, backend="compiled")).states[-1]
    b = simulate(psi0, EvolutionConfig(**cfg, backend="python")).states[-1]
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.skipif(not backend.COMPILED_AVAILABLE, reason="compiled kernel not built")
def test_band_lu_solves_like_scipy(rng):
    import scipy.sparse as sp
    from scipy.sparse.linalg import spsolve

    n = 60
    diags = [rng.normal(size=n - abs(k)) * 0.1 + 1j * rng.normal(size=n - abs(k)) * 0.1
             for k in range(-2, 3)]
    diags[2] = diags[2] + 4.0
    M = sp.diags(diags, range(-2, 3), format="csr")
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    from gpliouville import _cn_kernel

    lu, kl, ku = backend.to_band(M)
    _cn_kernel.band_lu(lu, kl, ku)
    x = b.copy()
    _cn_kernel.band_solve(lu, kl, ku, x)  # in place
    np.testing.assert_allclose(x, spsolve(M.tocsc(), b), atol=1e-12)
    y = np.asarray(_cn_kernel.band_matvec(backend.to_band(M)[0], kl, ku, b))
    np.testing.assert_allclose(y, M @ b, atol=1e-13)
