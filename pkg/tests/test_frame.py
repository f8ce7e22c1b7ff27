"""Connection assembly, curvature families, frame integration, monodromy."""

import numpy as np
import pytest
import scipy.linalg as sla

from todalab.field import DomainGrid, Form1, ScalarField
from todalab.toda import CyclicData, TodaState, toda_residual
from todalab import frame as fr

H3 = (2.0, 2.0, 1.0)


@pytest.fixture(scope="module")
def const_setup():
    grid = DomainGrid("torus", 32, 0.5)
    data = CyclicData(3, grid)
    state = TodaState.constant(grid, H3)
    return grid, data, state, fr.assemble_omega(state, data)


def test_omega_blocks_constant_solution(const_setup):
    grid, data, state, om = const_setup
    # theta = sqrt(2) (dx, dy); Omega_i = 0 for constants
    assert om.omega_x[0, 0][0, 1] == pytest.approx(np.sqrt(2.0))
    assert om.omega_y[0, 0][0, 2] == pytest.approx(np.sqrt(2.0))
    assert om.omega_x[0, 0][1, 2] == 0.0 and om.omega_y[0, 0][3, 4] == 0.0
    assert om.so_residual() == 0.0


def test_omega_alpha_minus_zero_block():
    grid = DomainGrid("torus", 16, 0.5)
    state = TodaState.constant(grid, H3)
    data0 = CyclicData(3, grid, alpha_n_minus=(0.0,))
    om0 = fr.assemble_omega(state, data0)
    # alpha_n block must be the pure rotation-type matrix
    b = om0.omega_x[0, 0][5:7, 3:5]
    fac = np.sqrt(H3[2] / H3[1])
    assert np.allclose(b, fac * np.eye(2))
    assert om0.so_residual() == 0.0


def test_omega_so_valued_on_random_states(rng):
    grid = DomainGrid("torus", 16, 1.0)
    data = CyclicData(4, grid, alpha_n_minus=(0.4 + 0.1j,))
    st = TodaState.from_array(grid, rng.normal(scale=0.3, size=(4, 16, 16)))
    om = fr.assemble_omega(st, data)
    assert om.so_residual() < 1e-14


def test_curvature_zero_connection():
    grid = DomainGrid("torus", 16, 1.0)
    A = Form1(grid, np.zeros((16, 16, 3, 3)), np.zeros((16, 16, 3, 3)))
    from todalab.field import plaquette_curvature
    assert np.max(np.abs(plaquette_curvature(A).density)) == 0.0


def test_curvature_flat_on_constant_solution(const_setup):
    grid, data, state, om = const_setup
    dens, summ = fr.gauss_codazzi_residual(om)
    assert summ["max_log"] < 1e-12
    assert summ["far"] < 1e-14


def test_curvature_diagonal_family_tracks_toda_residual(rng):
    # Eq. sss1: the diagonal-family density equals 2 r_k J + O(h^2)
    grid = DomainGrid("torus", 48, 0.5)
    data = CyclicData(3, grid)
    X, Y = grid.meshgrid()
    w = np.log(np.array(H3))[:, None, None] + 0.1 * np.stack([
        np.cos(2 * np.pi * (X + 2 * Y) / grid.L),
        np.sin(2 * np.pi * (X - Y) / grid.L),
        np.cos(2 * np.pi * Y / grid.L)])
    st = TodaState.from_array(grid, w)
    om = fr.assemble_omega(st, data)
    dens, _ = fr.gauss_codazzi_residual(om)
    r = toda_residual(st, data)
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    for k in range(3):
        blk = dens.density[..., 2 * k + 1:2 * k + 3, 2 * k + 1:2 * k + 3]
        # compare at plaquette centers: average the 4 corner residuals
        rv = r[k].values
        rc = 0.25 * (rv + np.roll(rv, -1, 0) + np.roll(rv, -1, 1)
                     + np.roll(rv, -1, (0, 1)))
        dev = np.max(np.abs(blk - 2.0 * rc[..., None, None] * J))
        assert dev < 25 * grid.h ** 2


def test_integrate_zero_connection():
    grid = DomainGrid("torus", 16, 1.0)
    data = CyclicData(2, grid)
    st = TodaState.constant(grid, (2.0, 1.0))
    om = fr.assemble_omega(st, data)
    om.omega_x[:] = 0.0
    om.omega_y[:] = 0.0
    frames = fr.integrate_frame(om)
    assert np.max(np.abs(frames.P - np.eye(5))) == 0.0


def test_edge_transport_matches_expm(const_setup):
    grid, data, state, om = const_setup
    Tx, Ty = fr.edge_transports(om)
    assert np.max(np.abs(Tx[0, 0] - sla.expm(grid.h * om.omega_x[0, 0]))) < 1e-10
    assert np.max(np.abs(Ty[5, 7] - sla.expm(grid.h * om.omega_y[5, 7]))) < 1e-10


def test_path_independence_on_flat(const_setup):
    grid, data, state, om = const_setup
    f1 = fr.integrate_frame(om)
    f2 = fr.integrate_frame(om, column_first=True)
    assert np.max(np.abs(f1.P - f2.P)) < 1e-11


def test_base_frame_must_be_orthonormal(const_setup):
    grid, data, state, om = const_setup
    with pytest.raises(ValueError):
        fr.integrate_frame(om, base_frame=2.0 * np.eye(7))


def test_monodromy_identity_and_flat(const_setup):
    grid, data, state, om = const_setup
    zero = fr.ConnectionForm(grid, 3, np.zeros_like(om.omega_x),
                             np.zeros_like(om.omega_y))
    (Mx, My), rep = fr.monodromy(zero)
    assert np.max(np.abs(Mx - np.eye(7))) == 0.0
    (Mx, My), rep = fr.monodromy(om, g2_check=True)
    assert rep["commutator"] < 1e-12
    assert rep["metric_residual"] < 1e-8
    assert rep["phi_residual"] < 1e-9


def test_monodromy_disk_rejected():
    grid = DomainGrid("disk", 16, 2.0)
    data = CyclicData(2, grid)
    st = TodaState.constant(grid, (2.0, 1.0))
    om = fr.assemble_omega(st, data)
    with pytest.raises(ValueError):
        fr.monodromy(om)


def test_verify_structure_and_negative_control(torus_n3):
    data, state, _ = torus_n3
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    rep = fr.verify_structure(frames, state, data, om)
    assert rep["all_ok"]
    assert rep["F_norm_residual"] < 1e-8
    assert rep["gram_residual"] < 1e-8
    for key in ("dF_span_residual", "far_coupling_residual", "II_block_residual"):
        assert rep[key] < 1e-6
    # deliberately permuted frame columns break the block pattern
    perm = list(range(7))
    perm[3:5], perm[5:7] = perm[5:7], perm[3:5]
    bad = fr.FrameField(data.grid, 3, frames.P[..., :, perm], (0, 0), 0.0)
    rep_bad = fr.verify_structure(bad, state, data)
    assert not rep_bad["checks"]["far_coupling"]


def test_f_norm_drift_linear_in_path_length(torus_n3):
    data, state, _ = torus_n3
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    signs = np.array(om.sig.ambient_signs, float)
    F = frames.immersion()
    drift = np.abs(np.einsum("...i,i,...i->...", F, signs, F) + 1.0)
    assert np.max(drift) < 1e-8


def test_antipodal_block_swap_identity(rng):
    # conjugating Omega by diag(1,...,1,-1) equals assembling from the
    # (an+ <-> an-, wn -> -wn) swapped data: the alpha_n roles exchange
    grid = DomainGrid("torus", 16, 1.0)
    data = CyclicData(3, grid, alpha_n_plus=(0.8 + 0.1j,),
                      alpha_n_minus=(0.5 - 0.3j,))
    st = TodaState.from_array(grid, rng.normal(scale=0.2, size=(3, 16, 16)))
    om = fr.assemble_omega(st, data)
    om_sw = fr.assemble_omega(st.swap_ln(), data.swap_ln())
    T = np.eye(7)
    T[6, 6] = -1.0
    conj_x = np.einsum("ij,...jk,kl->...il", T, om.omega_x, T)
    conj_y = np.einsum("ij,...jk,kl->...il", T, om.omega_y, T)
    assert np.max(np.abs(conj_x - om_sw.omega_x)) < 1e-13
    assert np.max(np.abs(conj_y - om_sw.omega_y)) < 1e-13


def test_frames_reextract_swapped_blocks(torus_n3):
    # flipping the v_n column of every frame (the L_n orientation reversal
    # behind the antipodal alpha_n^+/alpha_n^- exchange) re-extracts the
    # swapped alpha_n block
    data, state, _ = torus_n3
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    T = np.eye(7)
    T[6, 6] = -1.0
    flipped = fr.FrameField(data.grid, 3, frames.P @ T, (0, 0),
                            frames.gram_drift)
    Ox, _ = fr.extract_connection(flipped)
    om_sw = fr.assemble_omega(state.swap_ln(), data.swap_ln())
    mask = fr._nowrap_mask(data.grid)[..., None, None]
    blk = Ox[..., 5:7, 3:5] * mask
    want = om_sw.omega_x[..., 5:7, 3:5] * mask
    assert np.max(np.abs(blk - want)) < 1e-6
