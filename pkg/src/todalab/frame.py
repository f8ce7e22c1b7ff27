"""Flat connection Omega, moving-frame integration, and the A-surface immersion.

dP = P Omega with P = (iota,u1,v1,...,un,vn) and

        ( 0      theta^T                      )
        ( theta  Omega_1  alpha_2^T           )
Omega = (        alpha_2  Omega_2   ...       )
        (                 ...       alpha_n^T )
        (                 alpha_n   Omega_n   )

theta = sqrt(h1)(dx,dy)^T, Omega_i = [[0, dc h_i/(2h_i)],[-dc h_i/(2h_i),0]],
alpha blocks as 2x2 rotation/reflection matrices of the holomorphic data.
Every assembled matrix lies in so(ambient_signs) exactly.
"""

import numpy as np

from .algebra import SignatureSpec, PHI
from .field import Form1, plaquette_curvature, grad_central, grad_central4

__all__ = [
    "ConnectionForm", "FrameField", "assemble_omega", "gauss_codazzi_residual",
    "integrate_frame", "monodromy", "verify_structure", "extract_connection",
    "g2_frame_matrix", "group_form_residual", "alpha_block",
]


def _mplus(alpha):
    """2x2 matrix pair (x-comp, y-comp) of the rotation-type alpha block."""
    re, im = alpha.real, alpha.imag
    mx = np.stack([np.stack([re, -im], -1), np.stack([im, re], -1)], -2)
    my = np.stack([np.stack([-im, -re], -1), np.stack([re, -im], -1)], -2)
    return mx, my


def _mminus(alpha):
    """The reflection-type block of alpha_n^- (sign-flipped second row)."""
    re, im = alpha.real, alpha.imag
    mx = np.stack([np.stack([re, -im], -1), np.stack([-im, -re], -1)], -2)
    my = np.stack([np.stack([-im, -re], -1), np.stack([-re, im], -1)], -2)
    return mx, my


def alpha_block(data, state, j):
    """(x,y) components of the alpha_j block (alpha_n = plus + minus part)."""
    h = np.exp(state.array())
    n = data.n
    if 2 <= j <= n - 1:
        fac = np.sqrt(h[j - 1] / h[j - 2])
        mx, my = _mplus(data.alpha_on_grid(j))
        return fac[..., None, None] * mx, fac[..., None, None] * my
    if j == n:
        facp = np.sqrt(h[n - 1] / h[n - 2])
        facm = 1.0 / np.sqrt(h[n - 2] * h[n - 1])
        px, py = _mplus(data.alpha_on_grid("plus"))
        mx, my = _mminus(data.alpha_on_grid("minus"))
        return (facp[..., None, None] * px + facm[..., None, None] * mx,
                facp[..., None, None] * py + facm[..., None, None] * my)
    raise ValueError("alpha block index out of range")


class ConnectionForm:
    def __init__(self, grid, n, omega_x, omega_y):
        self.grid = grid
        self.n = n
        self.sig = SignatureSpec(n)
        self.d = 2 * n + 1
        self.omega_x = omega_x
        self.omega_y = omega_y

    def form1(self):
        return Form1(self.grid, self.omega_x, self.omega_y)

    def so_residual(self):
        G = self.sig.metric_matrix()
        r = 0.0
        for comp in (self.omega_x, self.omega_y):
            r = max(r, float(np.max(np.abs(
                np.swapaxes(comp, -1, -2) @ G + G @ comp))))
        return r


def assemble_omega(state, data):
    """ConnectionForm of a Toda state (blocks exactly per the frame equation)."""
    n, grid = data.n, data.grid
    if n < 2:
        raise ValueError("n >= 2 required")
    if state.grid.N != grid.N or state.grid.mode != grid.mode:
        raise ValueError("state/data grid mismatch")
    N = grid.N
    d = 2 * n + 1
    Ox = np.zeros((N, N, d, d))
    Oy = np.zeros((N, N, d, d))
    sqrt_h1 = np.sqrt(np.exp(state.w[0].values))
    Ox[..., 0, 1] = Ox[..., 1, 0] = sqrt_h1
    Oy[..., 0, 2] = Oy[..., 2, 0] = sqrt_h1
    for i in range(1, n + 1):
        dxw, dyw = grad_central(state.w[i - 1].values, grid)
        om_x, om_y = 0.5 * dyw, -0.5 * dxw   # dc w / 2
        r = 2 * i - 1
        Ox[..., r, r + 1] = om_x
        Ox[..., r + 1, r] = -om_x
        Oy[..., r, r + 1] = om_y
        Oy[..., r + 1, r] = -om_y
    for j in range(2, n + 1):
        ax, ay = alpha_block(data, state, j)
        r, c = 2 * j - 1, 2 * j - 3
        Ox[..., r:r + 2, c:c + 2] = ax
        Oy[..., r:r + 2, c:c + 2] = ay
        Ox[..., c:c + 2, r:r + 2] = np.swapaxes(ax, -1, -2)
        Oy[..., c:c + 2, r:r + 2] = np.swapaxes(ay, -1, -2)
    return ConnectionForm(grid, n, Ox, Oy)


def _block_distance_masks(n):
    d = 2 * n + 1
    bi = np.array([0] + [(r + 1) // 2 for r in range(1, d)])
    dist = np.abs(bi[:, None] - bi[None, :])
    return dist


def gauss_codazzi_residual(omega):
    """Plaquette curvature of Omega with the three-family block summary.

    Families: block-diagonal (the dOmega_i + ... equations), adjacent blocks
    (the dtheta/dalpha equations), two-step blocks (the alpha wedge alpha
    equations).  The density uses the second-order expansion; the raw
    holonomy log norm `summary['max_log']` is the absolute flatness
    diagnostic (ordered product of the four edge transports).
    """
    form = omega.form1()
    dens = plaquette_curvature(form, method="bch2")
    hol = plaquette_curvature(form, method="holonomy")
    dist = _block_distance_masks(omega.n)
    a = np.abs(dens.density)
    summary = {}
    for name, dd in (("diagonal", 0), ("adjacent", 1), ("two_step", 2)):
        mask = dist == dd
        summary[name] = float(np.max(a[..., mask])) if mask.any() else 0.0
    far = dist >= 3
    summary["far"] = float(np.max(a[..., far])) if far.any() else 0.0
    summary["max_density"] = float(np.max(a))
    summary["max_log"] = float(np.max(np.abs(hol.density))) * omega.grid.h ** 2
    return dens, summary


def _rk4_edge_transports(Aab, h, substeps=2):
    """Transport matrices for edges with endpoint samples Aab = (A0, A1).

    Integrates dT/ds = T A(s) over s in [0,h] by RK4 with `substeps` steps,
    A(s) sampled by quadratic interpolation through (A0, (A0+A1)/2, A1).
    A0, A1 are (..., d, d) stacks; returns the (..., d, d) transports.
    """
    A0, A1 = Aab
    Am = 0.5 * (A0 + A1)

    def A(s):
        # Lagrange quadratic through s=0, h/2, h
        t = s / h
        c0 = (1 - t) * (1 - 2 * t)
        cm = 4 * t * (1 - t)
        c1 = t * (2 * t - 1)
        return c0 * A0 + cm * Am + c1 * A1

    d = A0.shape[-1]
    T = np.zeros_like(A0)
    idx = np.arange(d)
    T[..., idx, idx] = 1.0
    hs = h / substeps
    mm = lambda X, Y: np.einsum("...ij,...jk->...ik", X, Y)
    for k in range(substeps):
        s0 = k * hs
        a1 = A(s0)
        a2 = A(s0 + hs / 2)
        a4 = A(s0 + hs)
        k1 = mm(T, a1)
        k2 = mm(T + 0.5 * hs * k1, a2)
        k3 = mm(T + 0.5 * hs * k2, a2)
        k4 = mm(T + hs * k3, a4)
        T = T + (hs / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return T


class FrameField:
    def __init__(self, grid, n, P, base_point, gram_drift):
        self.grid = grid
        self.n = n
        self.sig = SignatureSpec(n)
        self.P = P
        self.base_point = base_point
        self.gram_drift = gram_drift

    def immersion(self):
        """First column: the map F into H^{p,q}."""
        return self.P[..., :, 0]

    def column(self, idx):
        return self.P[..., :, idx]


def edge_transports(omega, substeps=2):
    """Per-edge RK4 transports (Tx to the +x neighbor, Ty to +y)."""
    g = omega.grid
    h = g.h
    Ax, Ay = omega.omega_x, omega.omega_y
    Tx = _rk4_edge_transports((Ax, g.shifted(Ax, 0, 1)), h, substeps)
    Ty = _rk4_edge_transports((Ay, g.shifted(Ay, 1, 0)), h, substeps)
    return Tx, Ty


def integrate_frame(omega, base_point=(0, 0), base_frame=None, substeps=2,
                    column_first=False):
    """Integrate dP = P Omega over the spanning tree from ``base_point``.

    The tree runs along the base row in x, then up each column in y
    (``column_first`` swaps the two, giving an independent path network for
    path-dependence diagnostics).  No re-orthonormalization is applied; the
    frame-Gram drift is reported in the result.
    """
    g = omega.grid
    N, d = g.N, omega.d
    if base_frame is None:
        base_frame = np.eye(d)
    base_frame = np.asarray(base_frame, dtype=float)
    G = omega.sig.metric_matrix()
    if np.max(np.abs(base_frame.T @ G @ base_frame - G)) > 1e-10:
        raise ValueError("base_frame must satisfy P^T G P = G")
    Tx, Ty = edge_transports(omega, substeps)
    by, bx = base_point
    P = np.zeros((N, N, d, d))
    P[by, bx] = base_frame

    def x_paths(start):
        """Index pairs (cur, nxt) covering the x-axis from `start`."""
        if g.mode == "torus":
            return [((start + k) % N, (start + k + 1) % N) for k in range(N - 1)]
        fwd = [(c, c + 1) for c in range(start, N - 1)]
        bwd = [(c, c - 1) for c in range(start, 0, -1)]
        return fwd + bwd

    def transport_x(cur, nxt, rows):
        T = Tx[rows, cur] if nxt == (cur + 1) % N else \
            np.linalg.inv(Tx[rows, nxt])
        P[rows, nxt] = np.einsum("...ij,...jk->...ik", P[rows, cur], T)

    def transport_y(cur, nxt, cols):
        T = Ty[cur, cols] if nxt == (cur + 1) % N else \
            np.linalg.inv(Ty[nxt, cols])
        P[nxt, cols] = np.einsum("...ij,...jk->...ik", P[cur, cols], T)

    allrows = np.arange(N)
    if column_first:
        for cur, nxt in x_paths(by):
            transport_y(cur, nxt, np.array([bx]))
        for cur, nxt in x_paths(bx):
            transport_x(cur, nxt, allrows)
    else:
        for cur, nxt in x_paths(bx):
            transport_x(cur, nxt, np.array([by]))
        for cur, nxt in x_paths(by):
            transport_y(cur, nxt, allrows)
    gram = np.einsum("...ji,jk,...kl->...il", P, G, P) - G
    drift = float(np.max(np.abs(gram)))
    return FrameField(g, omega.n, P, base_point, drift)


def monodromy(omega, substeps=2, base_frame=None, g2_check=False):
    """Holonomies around the two torus period loops from the base point.

    Reports the commutator norm, metric preservation, and (n=3, on request)
    the phi-preservation residual in the base G2'-frame.
    """
    g = omega.grid
    if g.mode != "torus":
        raise ValueError("monodromy requires torus mode")
    N, d = g.N, omega.d
    if base_frame is None:
        base_frame = np.eye(d)
    Tx, Ty = edge_transports(omega, substeps)
    Mx = np.eye(d)
    for ix in range(N):
        Mx = Mx @ Tx[0, ix]
    My = np.eye(d)
    for iy in range(N):
        My = My @ Ty[iy, 0]
    G = omega.sig.metric_matrix()
    report = {
        "commutator": float(np.max(np.abs(Mx @ My - My @ Mx))),
        "metric_residual": max(
            float(np.max(np.abs(Mx.T @ G @ Mx - G))),
            float(np.max(np.abs(My.T @ G @ My - G)))),
    }
    if g2_check:
        if omega.n != 3:
            raise ValueError("phi-preservation check needs n = 3")
        C = base_frame @ g2_frame_matrix()
        Ci = np.linalg.inv(C)
        report["phi_residual"] = max(
            group_form_residual(Ci @ Mx @ C),
            group_form_residual(Ci @ My @ C))
    return (Mx, My), report


def g2_frame_matrix():
    """Signed permutation sending (iota,u1,v1,u2,v2,u3,v3) columns to the
    G2'-frame order (F, U2, V2, U1, V1, -V3, U3)."""
    C = np.zeros((7, 7))
    order = [(0, 1), (3, 1), (4, 1), (1, 1), (2, 1), (6, -1), (5, 1)]
    for col, (row_src, sgn) in enumerate(order):
        C[row_src, col] = sgn
    return C


def group_form_residual(A, form=PHI):
    """max over basis triples of |form(Ae_i,Ae_j,Ae_k) - form(e_i,e_j,e_k)|."""
    cols = [A[:, c] for c in range(7)]
    res = 0.0
    for i in range(7):
        for j in range(i + 1, 7):
            for k in range(j + 1, 7):
                v = form(cols[i], cols[j], cols[k]) - form.coefficient(i, j, k)
                res = max(res, abs(complex(v)))
    return res


def _nowrap_mask(grid, width=2):
    """Points whose difference stencil avoids the frame branch cut.

    The integrated frame field is single-valued on the tree gauge but jumps
    across the torus periods (nontrivial monodromy), so differencing must
    never wrap; on disks the Dirichlet ring is excluded as usual.  ``width``
    matches the stencil radius (2 for the 4th-order stencil).
    """
    m = np.zeros((grid.N, grid.N), dtype=bool)
    m[width:-width, width:-width] = True
    return m


def extract_connection(frames):
    """Central-difference P^{-1} dP of an integrated frame field.

    Valid only on the seam-free interior (`_nowrap_mask`); entries outside
    it are zeroed.
    """
    g = frames.grid
    P = frames.P
    Pinv = np.linalg.inv(P)
    dPx, dPy = grad_central4(P, g)
    Ox = np.einsum("...ij,...jk->...ik", Pinv, dPx)
    Oy = np.einsum("...ij,...jk->...ik", Pinv, dPy)
    m = _nowrap_mask(g)[..., None, None]
    return Ox * m, Oy * m


def verify_structure(frames, state, data, omega=None):
    """Structural checks of integrated frames against the Toda data.

    (i) <F,F> = -1; (ii) frame Gram = G; (iii) dF = sqrt(h1)(u1,v1) and
    first fundamental form h1(dx^2+dy^2); (iv) the finite-difference
    connection has no couplings between L_i and L_j for |i-j| >= 2;
    (v) the second-fundamental-form block matches alpha_2.
    """
    g = frames.grid
    n = data.n
    sig = frames.sig
    G = sig.metric_matrix()
    P = frames.P
    interior = _nowrap_mask(g)
    F = frames.immersion()
    FF = np.einsum("...i,i,...i->...", F, np.array(sig.ambient_signs, float), F)
    report = {}
    report["F_norm_residual"] = float(np.max(np.abs(FF + 1.0)))
    gram = np.einsum("...ji,jk,...kl->...il", P, G, P) - G
    report["gram_residual"] = float(np.max(np.abs(gram)))

    h1 = np.exp(state.w[0].values)
    dFx = np.stack(grad_central4(F, g), axis=0)  # (2, N, N, dim)
    sq = np.sqrt(h1)
    u1, v1 = frames.column(1), frames.column(2)
    tangent_res = max(
        float(np.max(np.abs((dFx[0] - sq[..., None] * u1) * interior[..., None]))),
        float(np.max(np.abs((dFx[1] - sq[..., None] * v1) * interior[..., None]))))
    report["dF_span_residual"] = tangent_res
    signs = np.array(sig.ambient_signs, float)
    fff_xx = np.einsum("...i,i,...i->...", dFx[0], signs, dFx[0])
    fff_xy = np.einsum("...i,i,...i->...", dFx[0], signs, dFx[1])
    fff_yy = np.einsum("...i,i,...i->...", dFx[1], signs, dFx[1])
    report["fff_residual"] = float(np.max(np.abs(
        np.stack([(fff_xx - h1), fff_xy, (fff_yy - h1)]) * interior)))

    Ox, Oy = extract_connection(frames)
    dist = _block_distance_masks(n)
    far = dist >= 2
    report["far_coupling_residual"] = max(
        float(np.max(np.abs(Ox[..., far]))), float(np.max(np.abs(Oy[..., far]))))
    a2x, a2y = alpha_block(data, state, 2)
    mask = interior[..., None, None]
    report["II_block_residual"] = max(
        float(np.max(np.abs((Ox[..., 3:5, 1:3] - a2x) * mask))),
        float(np.max(np.abs((Oy[..., 3:5, 1:3] - a2y) * mask))))
    if omega is not None:
        report["connection_residual"] = max(
            float(np.max(np.abs((Ox - omega.omega_x) * mask))),
            float(np.max(np.abs((Oy - omega.omega_y) * mask))))
    checks = {
        "F_norm": report["F_norm_residual"] < 1e-6,
        "gram": report["gram_residual"] < 1e-6,
        "dF_span": report["dF_span_residual"] < 1e-3,
        "far_coupling": report["far_coupling_residual"] < 1e-3,
        "II_block": report["II_block_residual"] < 1e-3,
    }
    report["checks"] = checks
    report["all_ok"] = bool(all(checks.values()))
    return report
