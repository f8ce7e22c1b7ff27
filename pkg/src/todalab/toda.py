"""Affine Toda system of the cyclic surface data: assembly, solver, norms.

Unknowns are the metric logs w_i = log h_i on a DomainGrid.  The system,
written with z-derivatives (d^2/dz dzbar = Laplacian/4), is

  n = 2:   w1_zzb = |a1|^2 h1 - (h2/h1)|a2+|^2 - |a2-|^2/(h1 h2)
           w2_zzb = (h2/h1)|a2+|^2 - |a2-|^2/(h1 h2)
  n >= 3:  w1_zzb = |a1|^2 h1 - (h2/h1)|a2|^2
           wk_zzb = (hk/hk-1)|ak|^2 - (hk+1/hk)|ak+1|^2      (2 <= k <= n-2)
           wn-1_zzb = (hn-1/hn-2)|an-1|^2 - (hn/hn-1)|an+|^2 - |an-|^2/(hn-1 hn)
           wn_zzb = (hn/hn-1)|an+|^2 - |an-|^2/(hn-1 hn)

with a1 = 1/sqrt(2) in the surface case (kept general for the appendix form).
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import DomainGrid, ScalarField, laplace_zzbar

__all__ = [
    "CyclicData", "TodaState", "toda_residual", "rhs_terms",
    "constant_solution", "solve_toda", "norms", "check_star",
    "check_divisor_chain", "polynomial_divisor",
]

ALPHA1_DEFAULT = 1.0 / np.sqrt(2.0)


def _as_poly(c):
    arr = np.atleast_1d(np.asarray(c, dtype=complex))
    if arr.ndim != 1:
        raise ValueError("polynomial coefficients must be a 1D list")
    return arr


def _poly_eval(coeffs, z):
    out = np.zeros_like(z, dtype=complex) + coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * z + c
    return out


class CyclicData:
    """Holomorphic inputs of a cyclic SO0(n,n+1) bundle on a desk domain.

    alphas[j] for 2 <= j <= n-1, alpha_n_plus and alpha_n_minus are
    polynomial coefficient arrays in z (degree 0 on the torus); alpha1 is a
    complex constant, 1/sqrt(2) by default.  alpha_2..alpha_{n-1} and
    alpha_n_plus must not be identically zero; alpha_n_minus may be.
    """

    def __init__(self, n, grid, alphas=None, alpha_n_plus=(1.0,),
                 alpha_n_minus=(1.0,), alpha1=ALPHA1_DEFAULT,
                 deg_Ln_negative=False):
        if n < 2:
            raise ValueError("n >= 2 required")
        self.n = n
        self.grid = grid
        alphas = {} if alphas is None else dict(alphas)
        self.alphas = {}
        for j in range(2, n):
            self.alphas[j] = _as_poly(alphas.get(j, (1.0,)))
        self.alpha_n_plus = _as_poly(alpha_n_plus)
        self.alpha_n_minus = _as_poly(alpha_n_minus)
        self.alpha1 = complex(alpha1)
        self.deg_Ln_negative = bool(deg_Ln_negative)
        if grid.mode == "torus":
            for coeffs in self._all_polys():
                if len(coeffs) > 1 and np.any(coeffs[1:] != 0):
                    raise ValueError("torus mode requires constant alphas")
        for j in range(2, n):
            if np.all(self.alphas[j] == 0):
                raise ValueError("alpha_%d must not be identically zero" % j)
        if np.all(self.alpha_n_plus == 0):
            raise ValueError("alpha_n_plus must not be identically zero")
        self._cache = {}

    def _all_polys(self):
        return list(self.alphas.values()) + [self.alpha_n_plus, self.alpha_n_minus]

    def alpha_poly(self, key):
        if key == "plus":
            return self.alpha_n_plus
        if key == "minus":
            return self.alpha_n_minus
        return self.alphas[key]

    def alpha_on_grid(self, key):
        """Pointwise complex values of the named alpha on the grid."""
        if key not in self._cache:
            z = self.grid.zmesh()
            self._cache[key] = _poly_eval(self.alpha_poly(key), z)
        return self._cache[key]

    def abs2_on_grid(self, key):
        return np.abs(self.alpha_on_grid(key)) ** 2

    def swap_ln(self):
        """The hidden-symmetry partner: alpha_n^+ and alpha_n^- exchanged."""
        return CyclicData(self.n, self.grid, {j: self.alphas[j] for j in self.alphas},
                          alpha_n_plus=self.alpha_n_minus,
                          alpha_n_minus=self.alpha_n_plus,
                          alpha1=self.alpha1,
                          deg_Ln_negative=self.deg_Ln_negative)


class TodaState:
    """Grids of w_i = log h_i."""

    def __init__(self, fields):
        self.w = list(fields)
        grids = {f.grid for f in self.w}
        if len(grids) != 1:
            raise ValueError("all component fields must share one grid")
        self.grid = self.w[0].grid
        self.n = len(self.w)

    @classmethod
    def from_array(cls, grid, arr):
        return cls([ScalarField(grid, a) for a in arr])

    @classmethod
    def constant(cls, grid, hs):
        return cls([ScalarField.constant(grid, np.log(h)) for h in hs])

    def array(self):
        return np.stack([f.values for f in self.w])

    def h(self, i):
        """h_i as an array (1-based index)."""
        return np.exp(self.w[i - 1].values)

    def swap_ln(self):
        flipped = self.w[:-1] + [ScalarField(self.grid, -self.w[-1].values)]
        return TodaState(flipped)


def rhs_terms(warr, data):
    """Exponential interaction terms; warr has shape (n, N, N) or (n, P).

    Returns (t, tp, tm): t[j] = (h_j/h_{j-1})|alpha_j|^2 for 2 <= j <= n-1
    (dict), and the two alpha_n terms.
    """
    n = data.n
    h = np.exp(warr)
    t = {}
    for j in range(2, n):
        t[j] = (h[j - 1] / h[j - 2]) * data.abs2_on_grid(j)
    tp = (h[n - 1] / h[n - 2]) * data.abs2_on_grid("plus")
    tm = data.abs2_on_grid("minus") / (h[n - 2] * h[n - 1])
    return t, tp, tm


def _rhs(warr, data):
    n = data.n
    h1 = np.exp(warr[0])
    a1sq = abs(data.alpha1) ** 2
    t, tp, tm = rhs_terms(warr, data)
    rhs = np.empty_like(warr)
    if n == 2:
        rhs[0] = a1sq * h1 - tp - tm
        rhs[1] = tp - tm
        return rhs
    rhs[0] = a1sq * h1 - t[2]
    for k in range(2, n - 1):
        rhs[k - 1] = t[k] - t[k + 1]
    rhs[n - 2] = t[n - 1] - tp - tm
    rhs[n - 1] = tp - tm
    return rhs


def _rhs_jacobian(warr, data):
    """Pointwise Jacobian d(RHS_k)/d(w_m); shape (n, n) + field shape."""
    n = data.n
    shape = warr.shape[1:]
    h1 = np.exp(warr[0])
    a1sq = abs(data.alpha1) ** 2
    t, tp, tm = rhs_terms(warr, data)
    J = np.zeros((n, n) + shape)

    def add(k, term, dep):
        # term depends on w via exp(sum eps_m w_m); dep lists (m, eps)
        for m, eps in dep:
            J[k, m] += eps * term

    if n == 2:
        add(0, a1sq * h1, [(0, 1)])
        add(0, -tp, [(1, 1), (0, -1)])
        add(0, -tm, [(0, -1), (1, -1)])
        add(1, tp, [(1, 1), (0, -1)])
        add(1, -tm, [(0, -1), (1, -1)])
        return J
    dep_t = {j: [(j - 1, 1), (j - 2, -1)] for j in t}
    dep_p = [(n - 1, 1), (n - 2, -1)]
    dep_m = [(n - 2, -1), (n - 1, -1)]
    add(0, a1sq * h1, [(0, 1)])
    add(0, -t[2], dep_t[2])
    for k in range(2, n - 1):
        add(k - 1, t[k], dep_t[k])
        if k + 1 <= n - 1:
            add(k - 1, -t[k + 1], dep_t[k + 1])
    add(n - 2, t[n - 1], dep_t[n - 1])
    add(n - 2, -tp, dep_p)
    add(n - 2, -tm, dep_m)
    add(n - 1, tp, dep_p)
    add(n - 1, -tm, dep_m)
    return J


def toda_residual(state, data):
    """Residual fields r_k = w_k_zzbar - RHS_k (boundary rows zero on disks)."""
    if state.n != data.n:
        raise ValueError("state/data dimension mismatch")
    if state.grid is not data.grid and (state.grid.mode, state.grid.N, state.grid.L) \
            != (data.grid.mode, data.grid.N, data.grid.L):
        raise ValueError("state/data grid mismatch")
    warr = state.array()
    rhs = _rhs(warr, data)
    mask = state.grid.interior_mask()
    out = []
    for k in range(data.n):
        lap = laplace_zzbar(state.w[k]).values
        out.append(ScalarField(state.grid, (lap - rhs[k]) * mask))
    return out


def constant_solution(n, mags, a1=abs(ALPHA1_DEFAULT), tol=1e-14, max_iter=200):
    """Solve the constant (algebraic) Toda system RHS = 0.

    ``mags`` lists |alpha_2|,...,|alpha_{n-1}|, |alpha_n^+|, |alpha_n^-|
    (scalars or broadcastable arrays, all > 0).  Damped Newton on the log
    variables from the all-ones start; returns h_1..h_n.
    """
    mags = [np.asarray(m, dtype=float) for m in mags]
    if len(mags) != n:
        raise ValueError("need n magnitudes (alpha_2..alpha_{n-1}, plus, minus)")
    if any(np.any(m <= 0) for m in mags):
        raise ValueError("constant_solution requires positive magnitudes")
    shape = np.broadcast(*[np.empty(m.shape) for m in mags]).shape if mags else ()

    class _ConstData:
        pass

    data = _ConstData()
    data.n = n
    data.alpha1 = a1
    sq = {j: np.broadcast_to(mags[j - 2] ** 2, shape) for j in range(2, n)}
    psq = np.broadcast_to(mags[n - 2] ** 2, shape)
    msq = np.broadcast_to(mags[n - 1] ** 2, shape)
    data.abs2_on_grid = lambda key: {"plus": psq, "minus": msq}.get(key, sq.get(key))

    w = np.zeros((n,) + shape)
    for it in range(max_iter):
        r = _rhs(w, data)
        rmax = float(np.max(np.abs(r)))
        if rmax <= tol:
            return np.exp(w)
        J = _rhs_jacobian(w, data)
        # solve -J dw = -r pointwise (RHS = 0 target, residual is +RHS)
        Jm = np.moveaxis(J.reshape(n, n, -1), -1, 0)
        rv = np.moveaxis(r.reshape(n, -1), -1, 0)
        dw = np.linalg.solve(Jm, -rv[..., None])[..., 0]
        dw = np.moveaxis(dw, 0, -1).reshape(w.shape)
        lam = 1.0
        for _ in range(40):
            rn = float(np.max(np.abs(_rhs(w + lam * dw, data))))
            if rn < rmax:
                break
            lam *= 0.5
        w = w + lam * dw
    raise RuntimeError("constant_solution: no convergence after %d iterations" % max_iter)


def _scalar_lap_matrix(grid):
    """Sparse matrix of the d^2/dz dzbar stencil; disk boundary rows are zero."""
    N = grid.N
    h2 = 4.0 * grid.h ** 2
    if grid.mode == "torus":
        ones = np.ones(N)
        D = sp.diags([ones, -2 * ones, ones], [-1, 0, 1], shape=(N, N)).tolil()
        D[0, N - 1] += 1.0
        D[N - 1, 0] += 1.0
        D = D.tocsr()
        eye = sp.identity(N, format="csr")
        lap = (sp.kron(eye, D) + sp.kron(D, eye)) / h2
        return lap.tocsr()
    ones = np.ones(N)
    D = sp.diags([ones, -2 * ones, ones], [-1, 0, 1], shape=(N, N)).tocsr()
    eye = sp.identity(N, format="csr")
    lap = (sp.kron(eye, D) + sp.kron(D, eye)) / h2
    mask = grid.interior_mask().ravel()
    sel = sp.diags(mask.astype(float))
    return (sel @ lap).tocsr()


def default_boundary_state(data, floor_frac=1e-3):
    """Pointwise constant-solution state of the local |alpha(z)| values.

    Used both as the default initial guess and as the Dirichlet data on
    disks.  Interior magnitudes are floored (zeros of alpha are fine in the
    interior, the init just needs smooth order-1 data); the boundary ring
    must carry genuinely nonzero alphas.
    """
    n, grid = data.n, data.grid
    mags = [np.sqrt(data.abs2_on_grid(j)) for j in range(2, n)]
    mags += [np.sqrt(data.abs2_on_grid("plus")), np.sqrt(data.abs2_on_grid("minus"))]
    if grid.mode == "disk":
        bd = ~grid.interior_mask()
        for m in mags:
            if np.any(m[bd] <= 0):
                raise ValueError("disk boundary data needs |alpha| > 0 on the "
                                 "boundary ring (zero found)")
    floored = []
    for m in mags:
        floor = floor_frac * max(float(np.median(m)), 1e-12)
        floored.append(np.maximum(m, floor))
    h = constant_solution(n, floored, a1=abs(data.alpha1))
    return TodaState.from_array(grid, np.log(h))


class SolveReport(dict):
    pass


def solve_toda(data, init=None, tol=1e-11, max_iter=60, damping=True):
    """Damped Newton for the discrete Toda system; returns (state, report).

    The linearization (Laplacian minus the analytic RHS Jacobian) is solved
    directly (sparse LU) for N <= 128 and by preconditioned Krylov above.
    Disk runs impose Dirichlet data from ``default_boundary_state``.
    """
    grid, n = data.grid, data.n
    if init is None:
        init = default_boundary_state(data)
    w = init.array().copy()
    bc = None
    if grid.mode == "disk":
        bc = default_boundary_state(data).array()
        bd = ~grid.interior_mask()
        w[:, bd] = bc[:, bd]
    N2 = grid.N ** 2
    lap = _scalar_lap_matrix(grid)
    interior = grid.interior_mask().ravel()

    def residual_vec(warr):
        rhs = _rhs(warr, data)
        out = np.empty(n * N2)
        for k in range(n):
            rk = lap @ warr[k].ravel() - rhs[k].ravel() * interior
            if grid.mode == "disk":
                rk[~interior] = warr[k].ravel()[~interior] - bc[k].ravel()[~interior]
            out[k * N2:(k + 1) * N2] = rk
        return out

    def jacobian(warr):
        D = _rhs_jacobian(warr, data)
        blocks = []
        for k in range(n):
            row = []
            for m in range(n):
                dkm = D[k, m].ravel() * interior
                B = sp.diags(-dkm)
                if k == m:
                    B = lap + B
                    if grid.mode == "disk":
                        B = B + sp.diags((~interior).astype(float))
                row.append(B)
            blocks.append(row)
        return sp.bmat(blocks, format="csc")

    history = []
    r = residual_vec(w)
    rmax = float(np.max(np.abs(r)))
    history.append(rmax)
    converged = False
    for it in range(max_iter):
        if rmax <= tol:
            converged = True
            break
        J = jacobian(w)
        if grid.N <= 128:
            dw = spla.spsolve(J, -r)
        else:
            ilu = spla.spilu(J, drop_tol=1e-5, fill_factor=12)
            M = spla.LinearOperator(J.shape, ilu.solve)
            dw, info = spla.lgmres(J, -r, M=M, rtol=1e-10, atol=0.0)
            if info != 0:
                raise RuntimeError("Krylov solve failed (info=%d)" % info)
        dw = dw.reshape(n, grid.N, grid.N)
        lam = 1.0
        r2 = float(np.linalg.norm(r))
        accepted = False
        for _ in range(30 if damping else 1):
            cand = w + lam * dw
            rc = residual_vec(cand)
            if np.linalg.norm(rc) <= (1 - 1e-4 * lam) * r2 or not damping:
                w, r = cand, rc
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise RuntimeError("solve_toda: Armijo line search failed; "
                               "residual history %s" % history)
        rmax = float(np.max(np.abs(r)))
        history.append(rmax)
    if not converged and rmax > tol:
        raise RuntimeError("solve_toda: no convergence after %d iterations; "
                           "residual history %s" % (max_iter, history))
    state = TodaState.from_array(grid, w)
    report = SolveReport(iterations=len(history) - 1,
                         residual_history=history,
                         converged=bool(converged),
                         tol=tol)
    return state, report


def norms(state, data):
    """Pointwise squared norms of the alphas under the induced metrics.

    ||alpha_j||^2 = h_j |alpha_j|^2 / (h_1 h_{j-1}),
    ||alpha_n^+||^2 = h_n |alpha_n^+|^2 / (h_1 h_{n-1}),
    ||alpha_n^-||^2 = |alpha_n^-|^2 / (h_1 h_{n-1} h_n).
    """
    n = data.n
    h = np.exp(state.array())
    out = {}
    for j in range(2, n):
        out[j] = h[j - 1] * data.abs2_on_grid(j) / (h[0] * h[j - 2])
    out["plus"] = h[n - 1] * data.abs2_on_grid("plus") / (h[0] * h[n - 2])
    out["minus"] = data.abs2_on_grid("minus") / (h[0] * h[n - 2] * h[n - 1])
    return out


def check_star(state, data, tol=1e-9, tol_frac=0.01):
    """Evaluate the norm chain behind hypothesis (*) pointwise.

    Quantities: 1/2 - ||a2||^2, ||ak||^2 - ||ak+1||^2 (2<=k<=n-2), and
    ||an-1||^2 - ||an+||^2 - ||an-||^2.  Disk grids are evaluated on the
    interior (the boundary ring carries data, not solution).  Borderline
    cases (all zero, e.g. flat-torus constants) are reported, never passed.
    """
    n = data.n
    if n < 3:
        raise ValueError("check_star needs n >= 3")
    nr = norms(state, data)
    mask = state.grid.interior_mask() if state.grid.mode == "disk" else \
        np.ones((state.grid.N,) * 2, dtype=bool)
    chains = [("half_minus_a2", 0.5 - nr[2])]
    for k in range(2, n - 1):
        chains.append(("a%d_minus_a%d" % (k, k + 1), nr[k] - nr[k + 1]))
    chains.append(("a%d_minus_an" % (n - 1),
                   nr[n - 1] - nr["plus"] - nr["minus"]))
    report = {"quantities": {}}
    holds = True
    for name, q in chains:
        qi = q[mask]
        frac_pos = float(np.mean(qi > 0))
        report["quantities"][name] = {
            "min": float(np.min(qi)),
            "frac_strictly_positive": frac_pos,
        }
        if np.min(qi) < -tol or frac_pos < 1 - tol_frac:
            holds = False
    report["holds_open_dense_proxy"] = bool(holds)
    report["borderline"] = bool(all(
        abs(v["min"]) <= tol and v["frac_strictly_positive"] <= tol_frac
        for v in report["quantities"].values()))
    return report


def polynomial_divisor(coeffs, grid, cluster_tol=1e-7):
    """Roots-with-multiplicity of a polynomial inside the domain square.

    Returns None for the identically-zero section (divisor +infinity).
    """
    coeffs = _as_poly(coeffs)
    if np.all(coeffs == 0):
        return None
    lead = np.max(np.nonzero(np.abs(coeffs) > 0)[0])
    coeffs = coeffs[:lead + 1]
    if len(coeffs) == 1:
        return {}
    roots = np.roots(coeffs[::-1])
    half = grid.L / 2 + 10 * cluster_tol
    roots = [r for r in roots if abs(r.real) <= half and abs(r.imag) <= half]
    clusters = []
    for r in roots:
        for c in clusters:
            if abs(r - c[0]) < cluster_tol:
                c[1] += 1
                break
        else:
            clusters.append([r, 1])
    return {complex(c[0]): c[1] for c in clusters}


def _strictly_precedes(d1, d2):
    """d1 < d2 at every point where d1 is nonzero; None encodes +infinity."""
    if d1 is None:
        return False, [{"note": "left divisor is +infinity"}]
    details = []
    ok = True
    for root, m1 in d1.items():
        if d2 is None:
            m2 = None
            good = True
        else:
            m2 = 0
            for r2, mm in d2.items():
                if abs(root - r2) < 1e-6:
                    m2 += mm
            good = m1 < m2
        details.append({"root": [root.real, root.imag], "m1": m1,
                        "m2": "inf" if m2 is None else m2, "ok": bool(good)})
        ok = ok and good
    return ok, details


def check_divisor_chain(data):
    """Check (a2) < (a3) < ... < (a_{n-1}) < min{(an+),(an-)} (strict `<`).

    Divisors are root multiplicities inside the domain; the identically
    zero section has divisor +infinity; empty divisors precede anything.
    """
    grid = data.grid
    divs = []
    for j in range(2, data.n):
        divs.append(("alpha_%d" % j, polynomial_divisor(data.alphas[j], grid)))
    dp = polynomial_divisor(data.alpha_n_plus, grid)
    dm = polynomial_divisor(data.alpha_n_minus, grid)
    if dm is None:
        dmin = dp
    elif dp is None:
        dmin = dm
    else:
        dmin = {}
        for root in set(list(dp) + list(dm)):
            mp = sum(m for r, m in dp.items() if abs(r - root) < 1e-6)
            mm = sum(m for r, m in dm.items() if abs(r - root) < 1e-6)
            m = min(mp, mm)
            if m > 0:
                dmin[root] = m
    divs.append(("min_alpha_n", dmin))
    ok_all = True
    pairs = []
    for (name1, d1), (name2, d2) in zip(divs[:-1], divs[1:]):
        ok, details = _strictly_precedes(d1, d2)
        pairs.append({"pair": [name1, name2], "ok": bool(ok), "points": details})
        ok_all = ok_all and ok
    return bool(ok_all), pairs
