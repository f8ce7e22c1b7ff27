"""Maximum-principle machinery as checkable algebra.

The inequality system on the maxima A_2..A_n of the norm-ratio fields,
its B_k rewriting, the exhaustive dichotomy scan ("either all equal to 1
or all less than 1"), and field-level extraction of the A's from a
converged Toda solution.  Background metric is flat (h0 = 1, kappa = 0);
the kappa/2 terms cancel in every difference equation used here.
"""

from dataclasses import dataclass

import numpy as np

from .field import laplace_zzbar, ScalarField
from .toda import norms

try:
    from . import _scan as _kernel
    COMPILED = True
except ImportError:  # pragma: no cover - build-environment dependent
    from . import _scan_py as _kernel
    COMPILED = False

from . import _scan_py

__all__ = [
    "MaxTuple", "inequality_residuals", "b_values", "telescoping_gap",
    "scan_grid", "dichotomy_scan", "field_maxima", "scan_backend",
]


def scan_backend():
    return "cython" if COMPILED else "numpy"


@dataclass
class MaxTuple:
    """Positive maxima A_2..A_n with the derived B_k = (1-1/A_k)-(A_{k-1}-1)."""
    n: int
    A: tuple

    def __post_init__(self):
        self.A = tuple(self.A)
        if len(self.A) != self.n - 1:
            raise ValueError("need n-1 values A_2..A_n")
        if any(not (a > 0) for a in self.A):
            raise ValueError("all A_k must be positive")

    @property
    def B(self):
        # B_k for 3 <= k <= n, index aligned so B[0] is B_3
        A = self.A
        return tuple((1 - 1 / A[k]) - (A[k - 1] - 1) for k in range(1, len(A)))


def inequality_residuals(t):
    """Left-hand sides of the displayed inequalities (<= 0 iff satisfied).

    Exact for Fraction inputs.  n=2: [A2-1]; n=3: the two-member system;
    n>=4: first/middle/last families.
    """
    A = t.A
    m = len(A)
    if m == 1:
        return [A[0] - 1]
    out = [2 * (A[0] - 1) - (1 - 1 / A[1])]
    for j in range(1, m - 1):
        out.append(-A[j] * (A[j - 1] - 1) + 2 * (A[j] - 1) - (1 - 1 / A[j + 1]))
    out.append(-A[m - 1] * (A[m - 2] - 1) + 2 * (A[m - 1] - 1))
    return out


def b_values(t):
    return t.B


def b_form_residuals(t):
    """The B_k-form of the system: A_2-1-B_3, A_k B_k - B_{k+1}, A_n B_n + (A_n-1)."""
    A, B = t.A, t.B
    m = len(A)
    if m == 1:
        return [A[0] - 1]
    out = [(A[0] - 1) - B[0]]
    for j in range(1, m - 1):
        out.append(A[j] * B[j - 1] - B[j])
    out.append(A[m - 1] * B[m - 2] + (A[m - 1] - 1))
    return out


def telescoping_gap(t):
    """(1 - 1/A_n) minus its telescoped expansion; identically zero.

    1 - 1/A_n = B_n + A_{n-1}B_{n-1} + ... + A_{n-1}...A_3 B_3
                + A_{n-1}...A_3 (A_2 - 1).
    """
    A, B = t.A, t.B
    m = len(A)
    if m < 2:
        raise ValueError("telescoping needs n >= 3")
    acc = B[m - 2]
    prod = 1
    for j in range(m - 2, 0, -1):
        prod = prod * A[j]
        acc = acc + prod * B[j - 1]
    acc = acc + prod * (A[0] - 1)
    return (1 - 1 / A[m - 1]) - acc


def scan_grid(A_max, step, refine=True):
    """Grid over (0, A_max]: uniform `step`, refined 10x inside [0.9, 1.1].

    Values within 1e-12 of 1.0 are snapped to exactly 1.0 (the dichotomy is
    tight exactly there).
    """
    K = int(round(A_max / step))
    vals = np.arange(1, K + 1) * step
    if refine:
        lo, hi = 0.9, 1.1
        fine = np.arange(1, int(round(A_max / step)) * 10 + 1) * (step / 10)
        fine = fine[(fine >= lo) & (fine <= hi)]
        vals = np.unique(np.concatenate([vals, fine]))
    vals = vals[vals > 0]
    vals[np.abs(vals - 1.0) < 1e-12] = 1.0
    return np.ascontiguousarray(vals)


def dichotomy_scan(n, A_max=2.0, step=1e-2, eps=1e-9, refine=True,
                   threads=1, backend=None):
    """Exhaustive scan of the inequality system over (0, A_max]^{n-1}.

    For every feasible tuple (all residuals <= eps) the dichotomy predicts
    max A_k <= 1; tuples violating 1 + eps are counterexamples (expected
    none), and feasible tuples entering [1-eps, ...] must cluster at
    (1,...,1) within the reported delta.
    """
    if not 2 <= n <= 6:
        raise ValueError("dichotomy_scan supports 2 <= n <= 6")
    if step <= 0:
        raise ValueError("step must be positive")
    values = scan_grid(A_max, step, refine=refine)
    m = n - 1
    if backend == "numpy":
        raw = _scan_py.scan(values, m, eps, threads=max(1, threads))
        used = "numpy"
    elif backend == "cython" and not COMPILED:
        raise RuntimeError("compiled scan kernel unavailable")
    elif COMPILED and backend in (None, "cython"):
        raw = _kernel.scan(values, m, eps)
        used = "cython"
    else:
        raw = _scan_py.scan(values, m, eps, threads=max(1, threads))
        used = "numpy"
    report = {
        "n": n, "A_max": A_max, "step": step, "eps": eps,
        "refined_near_one": bool(refine),
        "grid_points_per_axis": int(len(values)),
        "backend": used,
    }
    report.update(raw)
    report["dichotomy_holds"] = (len(raw["counterexamples"]) == 0
                                 and raw["max_feasible_coord"] <= 1.0 + eps)
    report["margins"] = {
        "max_feasible_coord": raw["max_feasible_coord"],
        "max_feasible_coord_below_near1": raw["max_feasible_coord_below_near1"],
        "near1_delta": raw["near1_delta"],
    }
    return report


def _appendix_u_fields(state, data):
    """Appendix norm fields (h0 = 1): the relabeled ||gamma||^2, ||beta||^2.

    Index order u_0..u_n: beta = alpha_n^-, gamma_1 = alpha_n^+,
    gamma_k = alpha_{n+1-k} (2 <= k <= n-1), gamma_n = alpha_1.
    Returned un-logged (the ratio fields are what matters).
    """
    n = data.n
    h1 = state.h(1)
    nr = norms(state, data)
    U = [h1 * nr["minus"], h1 * nr["plus"]]
    for k in range(2, n):
        U.append(h1 * nr[n + 1 - k])
    U.append(h1 * abs(data.alpha1) ** 2 * np.ones_like(h1))
    return U


def field_maxima(state, data, tol=1e-8, den_floor=1e-10):
    """Extract the A_k maxima from a converged solution, with MP spot checks.

    A_2 = max (U_0+U_1)/U_2 and A_k = max U_{k-1}/U_k (3 <= k <= n), maxima
    over interior points where the denominator field is not flagged as a
    zero; at each interior maximizer the discrete Laplacian of the log
    ratio must be <= tol (maximum principle).  Also reports the Step-3
    quantity A_2' = max U_1/U_2 without any claim attached.
    """
    n, grid = data.n, data.grid
    U = _appendix_u_fields(state, data)
    interior = grid.interior_mask()
    report = {"n": n, "A": {}, "maximizers": {}, "mp_checks": {},
              "flagged_zero_denominators": {}}

    def extract(name, num, den):
        scale = float(np.max(den))
        valid = interior & (den > den_floor * max(scale, 1e-300))
        flagged = int(np.count_nonzero(interior & ~valid))
        ratio = np.where(valid, num / np.maximum(den, 1e-300), -np.inf)
        iy, ix = np.unravel_index(np.argmax(ratio), ratio.shape)
        A = float(ratio[iy, ix])
        report["A"][name] = A
        report["maximizers"][name] = [int(iy), int(ix)]
        report["flagged_zero_denominators"][name] = flagged
        # maximum-principle spot check at the maximizer
        logratio = np.where(valid, np.log(np.maximum(num, 1e-300))
                            - np.log(np.maximum(den, 1e-300)), 0.0)
        lap = laplace_zzbar(ScalarField(grid, logratio)).values
        if grid.mode == "torus":
            inner = np.ones_like(interior)
        else:
            # stencil at the maximizer must not touch the Dirichlet ring
            inner = np.zeros_like(interior)
            inner[2:-2, 2:-2] = True
        at_max_ok = None
        if inner[iy, ix] and valid[iy, ix]:
            neighbors_valid = all(valid[(iy + dy) % grid.N, (ix + dx) % grid.N]
                                  for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)))
            if neighbors_valid:
                at_max_ok = bool(lap[iy, ix] <= tol)
                report["mp_checks"][name] = {"laplacian": float(lap[iy, ix]),
                                             "ok": at_max_ok}
        if at_max_ok is None:
            report["mp_checks"][name] = {"laplacian": None,
                                         "ok": None,
                                         "note": "maximizer at boundary or "
                                                 "near flagged zero"}
        return A

    A_list = [extract("A2", U[0] + U[1], U[2])]
    for k in range(3, n + 1):
        A_list.append(extract("A%d" % k, U[k - 1], U[k]))
    # Step-3 quantity, reported with no claim
    valid = interior & (U[2] > den_floor * max(float(np.max(U[2])), 1e-300))
    report["A2_prime"] = float(np.max(np.where(valid, U[1] / np.maximum(U[2], 1e-300),
                                               -np.inf)))
    t = MaxTuple(n, A_list)
    res = inequality_residuals(t)
    report["inequality_residuals"] = [float(r) for r in res]
    report["inequalities_satisfied"] = bool(all(r <= tol for r in res))
    return report
