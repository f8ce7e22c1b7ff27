"""Gauss-map lift: Gamma blocks, pullback metric, conformality, J-holomorphy."""

import numpy as np
import pytest

from todalab.field import DomainGrid
from todalab.toda import CyclicData, TodaState, norms
from todalab import frame as fr
from todalab import gauss as gs


@pytest.fixture(scope="module")
def g2_frames():
    grid = DomainGrid("torus", 64, 0.5)
    data = CyclicData(3, grid)
    state = TodaState.constant(grid, (2.0, 2.0, 1.0))
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    return data, state, om, frames


def test_gamma_blocks_n3(g2_frames):
    data, state, om, frames = g2_frames
    gx, gy = gs.gamma_matrix(state, data, om)
    assert gx.shape[-2:] == (3, 4)   # (q+1) x p for n = 3
    # row 1: theta^T only; rows 2-3: alpha_2 then alpha_3^T
    assert gx[0, 0][0, 0] == pytest.approx(np.sqrt(2.0))
    assert np.max(np.abs(gx[0, 0][0, 2:])) == 0.0
    a2x, _ = fr.alpha_block(data, state, 2)
    assert np.allclose(gx[0, 0][1:3, 0:2], a2x[0, 0])
    a3x, _ = fr.alpha_block(data, state, 3)
    assert np.allclose(gx[0, 0][1:3, 2:4], a3x[0, 0].T)


def test_gamma_trace_gram_structure(g2_frames):
    # Tr_g[Gamma Gamma^T] = diag(2, Lambda) with Lambda from the norm sums
    data, state, om, frames = g2_frames
    gx, gy = gs.gamma_matrix(state, data, om)
    h1 = np.exp(state.w[0].values)[..., None, None]
    M = (np.einsum("...ij,...kj->...ik", gx, gx)
         + np.einsum("...ij,...kj->...ik", gy, gy)) / h1
    nr = norms(state, data)
    lam_top = 2 * nr[2][0, 0] + 2 * (nr["plus"] + nr["minus"])[0, 0]
    want = np.diag([2.0, lam_top, lam_top])
    assert np.max(np.abs(M[0, 0] - want)) < 1e-12


def test_pullback_factor_and_conformality(g2_frames):
    data, state, om, frames = g2_frames
    (Exx, Exy, Eyy), (Fxx, _, _), rep = gs.pullback_metric(frames, state, data)
    assert rep["factor_formula"] == pytest.approx(30.0)
    assert Fxx[0, 0] == pytest.approx(60.0)
    assert rep["formula_rel_err"] < 1e-4
    assert rep["conformality_max"] < 1e-4


def test_pullback_formula_zero_alpha_reading():
    # with all norms zero the factor reads (8n-4)/2
    for n in (2, 3, 4):
        assert (8 * n - 4) * 0.5 == (8 * n - 4) / 2


def test_pullback_n2(torus_n2):
    data, state, _ = torus_n2
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    _, (Fxx, _, _), rep = gs.pullback_metric(frames, state, data)
    # n=2 on (2,1): ||a2+||^2 = ||a2-||^2 = 1/4, factor 12, F_xx = 24
    assert rep["factor_formula"] == pytest.approx(12.0)
    assert Fxx[0, 0] == pytest.approx(24.0)
    assert rep["formula_rel_err"] < 1e-4


def test_jholo_base_point_exact(g2_frames):
    data, state, om, frames = g2_frames
    res, rep = gs.jholo_residual(frames, state, data)
    by, bx = frames.base_point
    assert res[by, bx] < 1e-14    # F x U1 = e1 x e4 = e5 = V1 exactly
    assert rep["jholo_max"] < 1e-6
    assert rep["phi_residual_max"] < 1e-6


def test_jholo_antipodal_pattern(g2_frames):
    data, state, om, frames = g2_frames
    res, rep = gs.jholo_residual(frames, state, data, antipodal=True)
    assert rep["jholo_antipodal_max"] < 1e-6   # -F is J-anti-holomorphic
    assert rep["jholo_max"] > 1.0


def test_jholo_negative_control(g2_frames):
    data, state, om, frames = g2_frames
    bad = TodaState.constant(data.grid, (2.0, 2.0, 2.0))
    with pytest.raises(ValueError, match="h3 = h1 h2 / 4"):
        gs.jholo_residual(frames, bad, data)


def test_jholo_needs_n3(torus_n2):
    data, state, _ = torus_n2
    om = fr.assemble_omega(state, data)
    frames = fr.integrate_frame(om)
    with pytest.raises(ValueError, match="n = 3"):
        gs.jholo_residual(frames, state, data)


def test_cross_batched_matches_table(rng):
    from todalab import algebra as al
    x = rng.normal(size=(5, 7))
    y = rng.normal(size=(5, 7))
    for k in range(5):
        assert np.allclose(gs.cross_batched(x[k], y[k]), al.cross(x[k], y[k]))


def test_pullback_improves_with_resolution():
    errs = {}
    for N in (32, 64):
        grid = DomainGrid("torus", N, 0.5)
        data = CyclicData(3, grid)
        state = TodaState.constant(grid, (2.0, 2.0, 1.0))
        om = fr.assemble_omega(state, data)
        frames = fr.integrate_frame(om)
        _, _, rep = gs.pullback_metric(frames, state, data)
        errs[N] = rep["formula_rel_err"]
    assert errs[32] / errs[64] > 3.0
