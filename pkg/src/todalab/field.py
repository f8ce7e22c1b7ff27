"""Discretized fields on a 2D desk-scale domain (periodic torus or Dirichlet square).

Grid convention: arrays are (N, N) row-major with index [iy, ix]; the x
coordinate varies along a row.  Torus mode covers [0,L) with spacing L/N and
wrapping indices; disk mode covers the centered square [-L/2, L/2] with
spacing L/(N-1) and an explicit boundary ring.  Derivative stencils are
central differences; on the disk, outputs on the boundary ring are zeroed.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainGrid", "ScalarField", "ComplexField", "Form1", "Form2",
    "laplace_zzbar", "dc_form", "grad_central", "plaquette_curvature",
    "write_field", "read_field", "expm_batched", "logm_series",
]


@dataclass(frozen=True)
class DomainGrid:
    mode: str
    N: int
    L: float

    def __post_init__(self):
        if self.mode not in ("torus", "disk"):
            raise ValueError("mode must be 'torus' or 'disk'")
        if self.N < 8:
            raise ValueError("N >= 8 required")
        if self.L <= 0:
            raise ValueError("L > 0 required")

    @property
    def h(self):
        return self.L / self.N if self.mode == "torus" else self.L / (self.N - 1)

    def axis(self):
        if self.mode == "torus":
            return np.arange(self.N) * self.h
        return -self.L / 2 + np.arange(self.N) * self.h

    def meshgrid(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="xy")  # X[iy,ix]=x_ix, Y[iy,ix]=y_iy

    def zmesh(self):
        X, Y = self.meshgrid()
        return X + 1j * Y

    def interior_mask(self):
        m = np.ones((self.N, self.N), dtype=bool)
        if self.mode == "disk":
            m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = False
        return m

    def shifted(self, a, dy, dx):
        """a shifted so result[iy,ix] = a[iy+dy, ix+dx]; torus wraps."""
        return np.roll(a, (-dy, -dx), axis=(0, 1))


class ScalarField:
    kind = "scalar"

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N, grid.N):
            raise ValueError("field values must be N x N")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid, f):
        X, Y = grid.meshgrid()
        return cls(grid, f(X, Y))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full((grid.N, grid.N), float(c)))


class ComplexField:
    kind = "complex"

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.N, grid.N):
            raise ValueError("field values must be N x N")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid, f):
        Z = grid.zmesh()
        return cls(grid, f(Z))


class Form1:
    """Per-point x- and y-components of a (matrix- or scalar-valued) 1-form."""

    def __init__(self, grid, comp_x, comp_y):
        comp_x = np.asarray(comp_x)
        comp_y = np.asarray(comp_y)
        if comp_x.shape != comp_y.shape or comp_x.shape[:2] != (grid.N, grid.N):
            raise ValueError("component arrays must share the grid")
        self.grid = grid
        self.comp_x = comp_x
        self.comp_y = comp_y

    @property
    def d(self):
        return self.comp_x.shape[2] if self.comp_x.ndim == 4 else None


class Form2:
    """Per-plaquette density of a 2-form (matrix- or scalar-valued)."""

    def __init__(self, grid, density):
        self.grid = grid
        self.density = np.asarray(density)


def _central_pair(a, axis_dy_dx, grid):
    dy, dx = axis_dy_dx
    return grid.shifted(a, dy, dx), grid.shifted(a, -dy, -dx)


def laplace_zzbar(f):
    """d^2/dz dzbar = (d_xx + d_yy)/4 via the 5-point stencil.

    On the disk the boundary ring of the output is zeroed.
    """
    g = f.grid
    a = f.values
    e, w = _central_pair(a, (0, 1), g)
    n, s = _central_pair(a, (1, 0), g)
    out = (e + w + n + s - 4.0 * a) / (4.0 * g.h ** 2)
    if g.mode == "disk":
        out = out * g.interior_mask()
    return ScalarField(g, out)


def grad_central(f_values, grid):
    """Central-difference (d_x, d_y); boundary zeroed in disk mode.

    Accepts arrays with trailing component dimensions beyond (N, N).
    """
    f_values = np.asarray(f_values)
    e, w = _central_pair(f_values, (0, 1), grid)
    n, s = _central_pair(f_values, (1, 0), grid)
    dx = (e - w) / (2.0 * grid.h)
    dy = (n - s) / (2.0 * grid.h)
    if grid.mode == "disk":
        m = grid.interior_mask().reshape((grid.N, grid.N) + (1,) * (f_values.ndim - 2))
        dx = dx * m
        dy = dy * m
    return dx, dy


def grad_central4(f_values, grid):
    """Fourth-order central differences (d_x, d_y); no boundary masking."""
    f = np.asarray(f_values)

    def diff(dy, dx):
        p1 = grid.shifted(f, dy, dx)
        m1 = grid.shifted(f, -dy, -dx)
        p2 = grid.shifted(f, 2 * dy, 2 * dx)
        m2 = grid.shifted(f, -2 * dy, -2 * dx)
        return (-p2 + 8 * p1 - 8 * m1 + m2) / (12.0 * grid.h)

    return diff(0, 1), diff(1, 0)


def dc_form(w):
    """d^c w = i(partial - bar-partial) w = (d_y w) dx - (d_x w) dy."""
    dxw, dyw = grad_central(w.values, w.grid)
    return Form1(w.grid, dyw, -dxw)


def _fro(A):
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(-2, -1)))


def expm_batched(A):
    """Matrix exponential of a (..., d, d) stack, scaling-and-squaring Taylor."""
    A = np.asarray(A)
    if not np.iscomplexobj(A):
        A = A.astype(float)
    norm = float(np.max(_fro(A))) if A.size else 0.0
    s = int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0
    B = A / (2 ** s)
    out = np.zeros_like(B)
    idx = np.arange(B.shape[-1])
    out[..., idx, idx] = 1.0
    term = out.copy()
    for k in range(1, 18):
        term = np.einsum("...ij,...jk->...ik", term, B) / k
        out = out + term
    for _ in range(s):
        out = np.einsum("...ij,...jk->...ik", out, out)
    return out


def logm_series(U, terms=28):
    """log U for U near the identity, by the Mercator series on E = U - I.

    Falls back to scipy's logm when U is too far from the identity for the
    series (only exercised by stress tests; lattice holonomies are near I).
    """
    U = np.asarray(U)
    d = U.shape[-1]
    E = U.copy()
    idx = np.arange(d)
    E[..., idx, idx] = E[..., idx, idx] - 1.0
    if U.size and float(np.max(_fro(E))) > 0.25:
        import scipy.linalg as sla
        flat = U.reshape(-1, d, d)
        return np.array([sla.logm(m) for m in flat]).reshape(U.shape)
    out = np.zeros_like(E)
    power = E.copy()
    for m in range(1, terms + 1):
        out = out + ((-1) ** (m + 1)) * power / m
        power = np.einsum("...ij,...jk->...ik", power, E)
    return out


def _plaquette_edges(A):
    """Edge-midpoint samples (bottom, top, left, right) per plaquette."""
    g = A.grid
    Ax, Ay = A.comp_x, A.comp_y
    bot = 0.5 * (Ax + g.shifted(Ax, 0, 1))
    top = 0.5 * (g.shifted(Ax, 1, 0) + g.shifted(Ax, 1, 1))
    left = 0.5 * (Ay + g.shifted(Ay, 1, 0))
    right = 0.5 * (g.shifted(Ay, 0, 1) + g.shifted(Ay, 1, 1))
    return bot, top, left, right


def plaquette_curvature(A, method="bch2"):
    """Curvature density of a matrix-valued 1-form, per lattice plaquette.

    method="bch2" (default): the second-order expansion of dA + A wedge A
    at the plaquette center, (Ay_r - Ay_l)/h - (Ax_t - Ax_b)/h + [Ax, Ay];
    second-order accurate for the density d_x Ay - d_y Ax + [Ax, Ay].

    method="holonomy": log of the ordered product of the four edge
    transports exp(+-h A); its raw norm (density * h^2) measures flatness
    directly but carries O(h^3) ordering terms, so the density is only
    first-order for noncommuting components.
    """
    g = A.grid
    if A.comp_x.ndim != 4 or A.comp_x.shape[2] != A.comp_x.shape[3]:
        raise ValueError("plaquette_curvature needs square matrix values")
    h = g.h
    bot, top, left, right = _plaquette_edges(A)
    if method == "bch2":
        Axc = 0.5 * (bot + top)
        Ayc = 0.5 * (left + right)
        mm = lambda X, Y: np.einsum("...ij,...jk->...ik", X, Y)
        dens = (right - left) / h - (top - bot) / h + mm(Axc, Ayc) - mm(Ayc, Axc)
    elif method == "holonomy":
        Tb = expm_batched(h * bot)
        Tr = expm_batched(h * right)
        Tt = expm_batched(-h * top)
        Tl = expm_batched(-h * left)
        H = np.einsum("...ij,...jk,...kl,...lm->...im", Tb, Tr, Tt, Tl)
        dens = logm_series(H) / h ** 2
    else:
        raise ValueError("unknown method %r" % method)
    if g.mode == "disk":
        # keep only plaquettes whose four corners are interior points
        # (the boundary ring carries Dirichlet data with no stencil values)
        dens = dens[1:-2, 1:-2]
    return Form2(g, dens)


def write_field(f, path):
    """Write a field as CSV (+ .meta.json); complex fields as _re/_im pairs."""
    if f.kind == "complex":
        base, ext = os.path.splitext(path)
        write_field(ScalarField(f.grid, f.values.real), base + "_re" + ext)
        write_field(ScalarField(f.grid, f.values.imag), base + "_im" + ext)
        return
    base, _ = os.path.splitext(path)
    kind = "scalar"
    if base.endswith("_re"):
        kind = "complex-re"
    elif base.endswith("_im"):
        kind = "complex-im"
    with open(path, "w") as fh:
        for row in f.values:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")
    meta = {"mode": f.grid.mode, "N": f.grid.N, "L": f.grid.L, "kind": kind}
    with open(base + ".meta.json", "w") as fh:
        json.dump(meta, fh, sort_keys=True)
        fh.write("\n")


def read_field(path, expect_grid=None):
    """Read a CSV field with its JSON sidecar; checks shape and mode."""
    base, _ = os.path.splitext(path)
    with open(base + ".meta.json") as fh:
        meta = json.load(fh)
    for key in ("mode", "N", "L", "kind"):
        if key not in meta:
            raise ValueError("malformed sidecar: missing %r" % key)
    grid = DomainGrid(meta["mode"], int(meta["N"]), float(meta["L"]))
    if expect_grid is not None:
        if (expect_grid.mode, expect_grid.N) != (grid.mode, grid.N):
            raise ValueError("sidecar grid mismatch: got %s/%d, expected %s/%d"
                             % (grid.mode, grid.N, expect_grid.mode, expect_grid.N))
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    arr = np.array(rows, dtype=float)
    if arr.shape != (grid.N, grid.N):
        raise ValueError("dimension mismatch: %s rows/cols vs N=%d"
                         % (arr.shape, grid.N))
    return ScalarField(grid, arr)


def read_complex_field(basepath, expect_grid=None):
    """Read a complex field stored as <base>_re.csv / <base>_im.csv."""
    re = read_field(basepath + "_re.csv", expect_grid)
    im = read_field(basepath + "_im.csv", expect_grid)
    return ComplexField(re.grid, re.values + 1j * im.values)
