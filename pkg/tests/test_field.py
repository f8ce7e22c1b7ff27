"""Stencils, discrete forms, plaquette curvature, and field I/O."""

import numpy as np
import pytest
import scipy.linalg as sla

from todalab import field as fd


def test_laplace_constant_is_zero():
    g = fd.DomainGrid("torus", 16, 1.0)
    f = fd.ScalarField.constant(g, 3.7)
    out = fd.laplace_zzbar(f)
    assert np.max(np.abs(out.values)) == 0.0


def test_laplace_cosine_torus_and_convergence():
    errs = {}
    for N in (32, 64):
        g = fd.DomainGrid("torus", N, 1.0)
        f = fd.ScalarField.from_function(g, lambda X, Y: np.cos(2 * np.pi * X / g.L))
        out = fd.laplace_zzbar(f)
        exact = -(np.pi / g.L) ** 2 * f.values
        errs[N] = np.max(np.abs(out.values - exact))
    assert errs[32] / errs[64] == pytest.approx(4.0, rel=0.1)


def test_laplace_disk_paraboloid():
    g = fd.DomainGrid("disk", 32, 2.0)
    f = fd.ScalarField.from_function(g, lambda X, Y: X ** 2 + Y ** 2)
    out = fd.laplace_zzbar(f)
    inner = g.interior_mask()
    assert np.max(np.abs(out.values[inner] - 1.0)) < 1e-12
    assert np.max(np.abs(out.values[~inner])) == 0.0


def test_dc_form_examples():
    g = fd.DomainGrid("disk", 16, 2.0)
    const = fd.dc_form(fd.ScalarField.constant(g, 5.0))
    assert np.max(np.abs(const.comp_x)) == 0 and np.max(np.abs(const.comp_y)) == 0
    wx = fd.dc_form(fd.ScalarField.from_function(g, lambda X, Y: X))
    inner = g.interior_mask()
    assert np.max(np.abs(wx.comp_x[inner] - 0.0)) < 1e-13
    assert np.max(np.abs(wx.comp_y[inner] + 1.0)) < 1e-13
    wy = fd.dc_form(fd.ScalarField.from_function(g, lambda X, Y: Y))
    assert np.max(np.abs(wy.comp_x[inner] - 1.0)) < 1e-13
    assert np.max(np.abs(wy.comp_y[inner] - 0.0)) < 1e-13


def _const_form(g, X, Y, d):
    cx = np.broadcast_to(X, (g.N, g.N, d, d)).copy()
    cy = np.broadcast_to(Y, (g.N, g.N, d, d)).copy()
    return fd.Form1(g, cx, cy)


def test_plaquette_zero_and_commuting():
    g = fd.DomainGrid("torus", 16, 1.0)
    Z = np.zeros((3, 3))
    out = fd.plaquette_curvature(_const_form(g, Z, Z, 3))
    assert np.max(np.abs(out.density)) < 1e-15
    A = np.diag([1.0, -2.0, 1.0])
    B = np.diag([0.5, 0.25, -0.75])
    out = fd.plaquette_curvature(_const_form(g, A, B, 3))
    assert np.max(np.abs(out.density)) < 1e-12


def test_plaquette_constant_commutator_limit(rng):
    X = rng.normal(size=(4, 4)) * 0.5
    Y = rng.normal(size=(4, 4)) * 0.5
    comm = X @ Y - Y @ X
    errs = []
    for N in (16, 32):
        g = fd.DomainGrid("torus", N, 1.0)
        out = fd.plaquette_curvature(_const_form(g, X, Y, 4))
        errs.append(np.max(np.abs(out.density - comm)))
        # the ordered-product holonomy tends to the same limit
        hol = fd.plaquette_curvature(_const_form(g, X, Y, 4), method="holonomy")
        assert np.max(np.abs(hol.density - comm)) < 3.0 / N
    assert errs[0] < 1e-13 and errs[1] < 1e-13   # exact for constant A


def test_plaquette_flat_connection_rate():
    # Nonabelian pure gauge: g = Rz(a(x)) Rx(b(y)) in SO(3), A = g^-1 dg.
    Jz = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])
    Jx = np.array([[0.0, 0, 0], [0, 0, -1], [0, 1, 0]])

    def conn(g):
        X, Y = g.meshgrid()
        a = np.sin(2 * np.pi * X / g.L)
        b = np.cos(2 * np.pi * Y / g.L)
        da = 2 * np.pi / g.L * np.cos(2 * np.pi * X / g.L)
        db = -2 * np.pi / g.L * np.sin(2 * np.pi * Y / g.L)
        Rx = fd.expm_batched(b[..., None, None] * Jx)
        AdJz = np.einsum("...ji,jk,...kl->...il", Rx, Jz, Rx)
        Ax = da[..., None, None] * AdJz
        Ay = db[..., None, None] * np.broadcast_to(Jx, Ax.shape)
        return fd.Form1(g, Ax, Ay)

    errs = []
    for N in (16, 32):
        g = fd.DomainGrid("torus", N, 1.0)
        out = fd.plaquette_curvature(conn(g))
        errs.append(np.max(np.abs(out.density)))
    assert errs[0] > 1e-4   # genuinely nonabelian discretization error
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.35)


def test_expm_logm_batched(rng):
    A = rng.normal(size=(5, 3, 3)) * 0.8
    E = fd.expm_batched(A)
    for k in range(5):
        assert np.max(np.abs(E[k] - sla.expm(A[k]))) < 1e-13
    small = rng.normal(size=(5, 3, 3)) * 0.01
    U = fd.expm_batched(small)
    L = fd.logm_series(U)
    assert np.max(np.abs(L - small)) < 1e-14


def test_field_io_roundtrip(tmp_path):
    g = fd.DomainGrid("torus", 16, 1.0)
    f = fd.ScalarField.from_function(g, lambda X, Y: np.sin(X * 7.1) + Y / 3)
    path = str(tmp_path / "w1.csv")
    fd.write_field(f, path)
    back = fd.read_field(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid.mode == "torus" and back.grid.N == 16

    c = fd.ComplexField.from_function(g, lambda Z: Z ** 2 + 1j)
    fd.write_field(c, str(tmp_path / "a.csv"))
    from todalab.field import read_complex_field
    cb = read_complex_field(str(tmp_path / "a"))
    assert np.array_equal(cb.values, c.values)


def test_field_io_errors(tmp_path):
    g = fd.DomainGrid("torus", 16, 1.0)
    f = fd.ScalarField.constant(g, 1.0)
    path = str(tmp_path / "w.csv")
    fd.write_field(f, path)
    # wrong row count
    with open(path) as fh:
        lines = fh.readlines()
    with open(path, "w") as fh:
        fh.writelines(lines[:-1])
    with pytest.raises(ValueError, match="dimension mismatch"):
        fd.read_field(path)
    # sidecar mode mismatch
    fd.write_field(f, path)
    other = fd.DomainGrid("disk", 16, 1.0)
    with pytest.raises(ValueError, match="grid mismatch"):
        fd.read_field(path, expect_grid=other)


def test_grid_validation():
    with pytest.raises(ValueError):
        fd.DomainGrid("torus", 4, 1.0)
    with pytest.raises(ValueError):
        fd.DomainGrid("annulus", 16, 1.0)
    with pytest.raises(ValueError):
        fd.DomainGrid("disk", 16, -1.0)


def test_nonfinite_rejected():
    g = fd.DomainGrid("torus", 8, 1.0)
    vals = np.zeros((8, 8))
    vals[3, 3] = np.inf
    with pytest.raises(ValueError):
        fd.ScalarField(g, vals)
