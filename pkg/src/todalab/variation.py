"""Second variation of volume and the Jacobi operator on the normal bundle.

Normal sections live in N = L_2 + ... + L_n with the (u_i, v_i) coordinate
frames; the spacelike part N^+ collects the odd-i summands, the timelike
part N^- the even ones.  The second variation of a compactly supported
section is the discrete integral of

    Tr_g <grad^N xi, grad^N xi> - Tr_g <S_xi, S_xi> + 2 <xi, xi>

(the curvature term uses the constant-curvature identity with kappa = -1;
the shape operator vanishes off the L_2 component).  The Jacobi operator is
the form's Riesz representative L = -M^{-1} A w.r.t. the indefinite L^2
pairing, so self-adjointness and <-L xi, xi> = SV(xi) hold to round-off.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import expm_batched
from .frame import assemble_omega, alpha_block
from .toda import norms

__all__ = [
    "NormalField", "support_mask", "gamma0_blocks", "trg_matrices",
    "trg_eigenvalues", "JacobiOperator", "second_variation",
    "jacobi_apply", "jacobi_min_singular",
]


def _component_layout(n):
    """L-index and sign for each of the 2(n-1) normal components."""
    li = np.array([2 + c // 2 for c in range(2 * (n - 1))])
    signs = np.where(li % 2 == 1, 1.0, -1.0)
    return li, signs


def support_mask(grid, collar_frac=0.1):
    """Smooth mask vanishing on a collar of the given relative width.

    Torus grids have no boundary and get the constant mask 1.
    """
    if grid.mode == "torus":
        return np.ones((grid.N, grid.N))
    x = grid.axis()
    dist = np.minimum(x - x[0], x[-1] - x)
    t = np.clip(dist / (collar_frac * grid.L), 0.0, 1.0)
    ramp = t * t * (3 - 2 * t)
    return ramp[None, :] * ramp[:, None]


class NormalField:
    """Section of the normal bundle in (u_i, v_i) coordinates.

    ``values`` has shape (N, N, 2(n-1)); parity is 'plus' (L_3+L_5+...),
    'minus' (L_2+L_4+...) or None for mixed sections.
    """

    def __init__(self, grid, n, values, parity=None):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N, grid.N, 2 * (n - 1)):
            raise ValueError("normal field needs shape (N, N, 2(n-1))")
        self.grid = grid
        self.n = n
        self.values = values
        li, _ = _component_layout(n)
        if parity == "plus" and np.any(values[..., li % 2 == 0] != 0):
            raise ValueError("plus-parity field has minus components")
        if parity == "minus" and np.any(values[..., li % 2 == 1] != 0):
            raise ValueError("minus-parity field has plus components")
        self.parity = parity

    @classmethod
    def random_bump(cls, grid, n, parity, rng, masked=True, collar_frac=0.1):
        """Random smooth bump on the requested parity blocks, compactly
        supported on disks."""
        li, _ = _component_layout(n)
        keep = (li % 2 == 1) if parity == "plus" else (li % 2 == 0)
        X, Y = grid.meshgrid()
        L = grid.L
        if grid.mode == "torus":
            kx, ky = rng.integers(1, 3, size=2)
            phx, phy = rng.uniform(0, 2 * np.pi, size=2)
            bump = np.cos(2 * np.pi * kx * X / L + phx) * \
                np.cos(2 * np.pi * ky * Y / L + phy) + 0.3
        else:
            cx, cy = rng.uniform(-0.2 * L, 0.2 * L, size=2)
            w = rng.uniform(0.15, 0.35) * L
            bump = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / w ** 2)
        vals = np.zeros((grid.N, grid.N, 2 * (n - 1)))
        coef = rng.normal(size=2 * (n - 1))
        coef[~keep] = 0.0
        vals[:] = bump[..., None] * coef
        if masked and grid.mode == "disk":
            vals *= support_mask(grid, collar_frac)[..., None]
        return cls(grid, n, vals, parity=parity)

    def split_parity(self):
        li, _ = _component_layout(self.n)
        plus = self.values.copy()
        plus[..., li % 2 == 0] = 0.0
        minus = self.values - plus
        return (NormalField(self.grid, self.n, plus, "plus"),
                NormalField(self.grid, self.n, minus, "minus"))


def _normal_block(omega):
    """Normal-normal sub-block of Omega (rows/cols of L_2..L_n)."""
    return omega.omega_x[..., 3:, 3:], omega.omega_y[..., 3:, 3:]


def gamma0_blocks(state, data, omega=None):
    """Gamma_0^+ / Gamma_0^- 1-form components built from the alpha blocks.

    Gamma_0^+ maps N^+ to N^-; rows collect the even-i blocks, columns the
    odd-i blocks; alpha_i couples L_{i-1} -> L_i and its transpose goes
    back.  Gamma_0^- is the transpose.  n >= 3 required.
    """
    n = data.n
    if n < 3:
        raise ValueError("gamma0_blocks needs n >= 3")
    li, _ = _component_layout(n)
    plus_cols = np.nonzero(li % 2 == 1)[0]
    minus_cols = np.nonzero(li % 2 == 0)[0]
    N = data.grid.N
    gx = np.zeros((N, N, len(minus_cols), len(plus_cols)))
    gy = np.zeros_like(gx)

    def put(target_i, source_i, mat_x, mat_y):
        # rows: components of L_target within the minus layout, etc.
        trow = np.nonzero(li[minus_cols] == target_i)[0]
        scol = np.nonzero(li[plus_cols] == source_i)[0]
        gx[..., trow[0]:trow[0] + 2, scol[0]:scol[0] + 2] = mat_x
        gy[..., trow[0]:trow[0] + 2, scol[0]:scol[0] + 2] = mat_y

    for i in range(3, n + 1, 2):      # plus blocks
        ax, ay = alpha_block(data, state, i)
        put(i - 1, i, np.swapaxes(ax, -1, -2), np.swapaxes(ay, -1, -2))
        if i + 1 <= n:
            bx, by = alpha_block(data, state, i + 1)
            put(i + 1, i, bx, by)
    gmx = np.swapaxes(gx, -1, -2)
    gmy = np.swapaxes(gy, -1, -2)
    return (gx, gy), (gmx, gmy)


def trg_matrices(state, data, omega=None):
    """The psd matrices of the quadratic forms -/+ Tr_g <Gamma_0 xi, Gamma_0 xi>.

    M_plus acts on N^+ coordinates, M_minus on N^-; both are
    (1/h1) sum_d Gamma_d^T Gamma_d of the respective block.
    """
    (gx, gy), (gmx, gmy) = gamma0_blocks(state, data, omega)
    h1 = np.exp(state.w[0].values)[..., None, None]
    Mp = (np.einsum("...ji,...jk->...ik", gx, gx)
          + np.einsum("...ji,...jk->...ik", gy, gy)) / h1
    Mm = (np.einsum("...ji,...jk->...ik", gmx, gmx)
          + np.einsum("...ji,...jk->...ik", gmy, gmy)) / h1
    return Mp, Mm


def trg_analytic_eigenvalues(state, data):
    """The lemma's eigenvalue list per grid point, with multiplicities.

    Every normal block contributes 2||a_i||^2 + 2||a_{i+1}||^2 terms twice
    (reading ||a_n||^2 = ||a_n^+||^2 + ||a_n^-||^2, and dropping the i or
    i+1 term when the coupling leaves N), and the L_n block contributes the
    pair 2(||a_n^+|| +/- ||a_n^-||)^2.  Returned sorted ascending.
    """
    n = data.n
    nr = norms(state, data)
    tot_n = nr["plus"] + nr["minus"]

    def nrm(i):
        return tot_n if i == n else nr[i]

    eigs = []
    pm = 2 * (np.sqrt(nr["plus"]) + np.sqrt(nr["minus"])) ** 2
    mm = 2 * (np.sqrt(nr["plus"]) - np.sqrt(nr["minus"])) ** 2
    for i in range(2, n + 1):
        if i == n:
            eigs += [pm, mm]
            continue
        val = np.zeros_like(tot_n)
        if i >= 3:
            val = val + 2 * nrm(i)
        if i + 1 <= n:
            val = val + 2 * nrm(i + 1)
        eigs += [val, val]
    return np.sort(np.stack(eigs, axis=-1), axis=-1)


def trg_eigenvalues(state, data, omega=None):
    """Numeric eigenvalues of the Gamma_0 trace forms vs the analytic list.

    Returns (analytic, numeric, max deviation); both sorted ascending along
    the last axis, concatenating the N^+ and N^- spectra.
    """
    if data.n < 3:
        raise ValueError("trg_eigenvalues needs n >= 3")
    Mp, Mm = trg_matrices(state, data, omega)
    ev = np.concatenate([np.linalg.eigvalsh(Mp), np.linalg.eigvalsh(Mm)], axis=-1)
    ev = np.sort(ev, axis=-1)
    ana = trg_analytic_eigenvalues(state, data)
    dev = float(np.max(np.abs(ev - ana)))
    return ana, ev, dev


class JacobiOperator:
    """Sparse assembly of the second-variation form and Jacobi operator.

    A is the symmetric form matrix with SV(xi) = xi^T A xi; M is the
    diagonal indefinite mass (signs * h1 * h^2); L = -M^{-1} A.  Edge
    covariant differences use exact so-orthogonal midpoint transports, so
    A is symmetric to round-off and L is self-adjoint w.r.t. M.
    """

    def __init__(self, state, data, omega=None):
        n, grid = data.n, data.grid
        if omega is None:
            omega = assemble_omega(state, data)
        self.n, self.grid = n, grid
        m = 2 * (n - 1)
        self.m = m
        N = grid.N
        li, signs = _component_layout(n)
        self.signs = signs
        Ax, Ay = _normal_block(omega)
        h = grid.h
        h1 = np.exp(state.w[0].values)
        interior = grid.interior_mask()
        npts = N * N
        S = np.diag(signs)
        pids = np.arange(npts).reshape(N, N)
        diag_count = np.zeros(npts)
        off_rows, off_cols, off_vals = [], [], []
        cp = np.arange(m)
        inflat = interior.ravel()
        # edge terms: <xq,xq> + <xp,xp> - <xq,T xp> - <T xp,xq>   (times h^2/h^2)
        for direction, Ad in (("x", Ax), ("y", Ay)):
            dy, dx = (0, 1) if direction == "x" else (1, 0)
            mid = 0.5 * (Ad + grid.shifted(Ad, dy, dx))
            T = expm_batched(-h * mid)
            valid = np.ones((N, N), dtype=bool)
            if grid.mode == "disk":
                if direction == "x":
                    valid[:, -1] = False
                else:
                    valid[-1, :] = False
            p = pids
            q = grid.shifted(pids, dy, dx)
            pv, qv = p[valid].ravel(), q[valid].ravel()
            p_in, q_in = inflat[pv], inflat[qv]
            np.add.at(diag_count, pv[p_in], 1.0)
            np.add.at(diag_count, qv[q_in], 1.0)
            both = p_in & q_in
            pe, qe = pv[both], qv[both]
            C = -np.einsum("ij,ejk->eik", S, T[valid][both])
            r_idx = (qe[:, None, None] * m + cp[:, None]).repeat(m, axis=2)
            c_idx = (pe[:, None, None] * m + cp[None, :]).repeat(m, axis=1)
            off_rows += [r_idx.ravel(), c_idx.ravel()]
            off_cols += [c_idx.ravel(), r_idx.ravel()]
            off_vals += [C.ravel(), C.ravel()]
        A_off = sp.coo_matrix(
            (np.concatenate(off_vals),
             (np.concatenate(off_rows), np.concatenate(off_cols))),
            shape=(npts * m, npts * m)).tocsr()
        # pointwise blocks: edge diagonals, shape operator (L_2), curvature
        a2x, a2y = alpha_block(data, state, 2)
        diag_blocks = np.zeros((N, N, m, m))
        diag_blocks += diag_count.reshape(N, N)[..., None, None] * S
        shape_op = np.zeros((N, N, 2, 2))
        for Bd in (a2x, a2y):
            # S_xi(e_d) = -(alpha_2^T(e_d)) xi_2, so the form is -|B^T xi|^2
            shape_op -= np.einsum("...ij,...kj->...ik", Bd, Bd)
        pt = np.zeros((N, N, m, m))
        pt[..., :2, :2] = shape_op
        pt += 2.0 * h1[..., None, None] * S
        pt *= interior[..., None, None]
        diag_blocks += pt
        Apt = sp.bsr_matrix((diag_blocks.reshape(npts, m, m),
                             np.arange(npts), np.arange(npts + 1)),
                            shape=(npts * m, npts * m))
        self.A = ((A_off + Apt) * (h * h)).tocsr()
        mass = (signs[None, :] * h1.reshape(-1, 1) * h * h).ravel()
        mass = np.where(np.repeat(interior.ravel(), m), mass, 1.0)
        self.mass = mass
        self.interior = interior
        self._lu = None

    def vec(self, xi):
        return xi.values.reshape(-1)

    def field(self, v):
        N = self.grid.N
        return NormalField(self.grid, self.n, v.reshape(N, N, self.m))

    def second_variation(self, xi):
        v = self.vec(xi)
        return float(v @ (self.A @ v))

    def apply(self, xi):
        """L xi = -M^{-1} A xi (zero outside the Dirichlet interior)."""
        v = self.vec(xi)
        out = -(self.A @ v) / self.mass
        out[~np.repeat(self.interior.ravel(), self.m)] = 0.0
        return self.field(out)

    def pairing(self, a, b):
        """The indefinite L^2 pairing int <a, b> dvol."""
        return float(self.vec(a) @ (self.mass * self.vec(b)))

    def _operator_matrix(self):
        Dm = sp.diags(1.0 / self.mass)
        L = -Dm @ self.A
        keep = np.repeat(self.interior.ravel(), self.m)
        idx = np.nonzero(keep)[0]
        return L.tocsr()[idx][:, idx], idx

    def min_singular_value(self, iters=60, seed=7):
        """sigma_min of L on the Dirichlet interior by inverse power iteration."""
        L, _ = self._operator_matrix()
        lu = spla.splu(L.tocsc())
        rng = np.random.default_rng(seed)
        x = rng.normal(size=L.shape[0])
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(iters):
            y = lu.solve(x)
            z = lu.solve(y, trans="T")
            nz = np.linalg.norm(z)
            lam = nz
            x = z / nz
        return 1.0 / np.sqrt(lam)


def second_variation(xi, state, data, op=None):
    """Second variation of volume for a normal section (see JacobiOperator)."""
    if op is None:
        op = JacobiOperator(state, data)
    return op.second_variation(xi)


def jacobi_apply(xi, state, data, op=None):
    if op is None:
        op = JacobiOperator(state, data)
    return op.apply(xi)


def jacobi_min_singular(state, data, op=None):
    if op is None:
        op = JacobiOperator(state, data)
    return op.min_singular_value()
