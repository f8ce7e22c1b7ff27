"""Gauss-map lift, conformality/pullback-metric checks, J-holomorphy (n=3).

The lift reorders the moving frame as (u1,v1,u3,v3,..., iota,u2,v2,u4,v4,...);
its Maurer-Cartan 1-form has the p x (q+1) off-diagonal block Gamma, and the
pullback of the symmetric-space metric is (4n-2) Tr(Gamma^T Gamma), to be
compared with (8n-4)(1/2 + sum of squared alpha norms) times the first
fundamental form.  The Killing constant 4n-2 is hard-coded.
"""

import numpy as np

from .algebra import CROSS_TABLE, PHI
from .field import grad_central4
from .frame import _nowrap_mask, g2_frame_matrix
from .toda import norms

__all__ = [
    "gauss_permutation", "gamma_matrix", "pullback_metric", "jholo_residual",
    "cross_batched", "phi_tensor",
]


def gauss_permutation(n):
    """Column order of the Gauss lift: positive pairs first, then iota and
    the negative pairs.  Returns (perm, p, q)."""
    pos, neg = [], [0]
    for i in range(1, n + 1):
        cols = [2 * i - 1, 2 * i]
        (pos if i % 2 == 1 else neg).extend(cols)
    return pos + neg, len(pos), len(neg) - 1


def gamma_matrix(state, data, omega=None):
    """The (q+1) x p matrix 1-form Gamma of the Gauss lift, per point.

    Assembled from the connection blocks (theta^T / alpha_even /
    alpha_odd^T bidiagonal structure).  Returns (Gamma_x, Gamma_y).
    """
    from .frame import assemble_omega
    if omega is None:
        omega = assemble_omega(state, data)
    perm, p, q1 = gauss_permutation(data.n)
    q1 += 1
    gx = omega.omega_x[..., perm, :][..., :, perm]
    gy = omega.omega_y[..., perm, :][..., :, perm]
    return gx[..., p:, :p], gy[..., p:, :p]


def _killing_gram(gx, gy, h1, n):
    """Components of (4n-2) Tr(Gamma^T Gamma) as a 2x2 symmetric tensor."""
    c = 4 * n - 2
    Exx = c * np.einsum("...ij,...ij->...", gx, gx)
    Exy = c * np.einsum("...ij,...ij->...", gx, gy)
    Eyy = c * np.einsum("...ij,...ij->...", gy, gy)
    return Exx, Exy, Eyy


def pullback_metric(frames, state, data):
    """Pullback metric of the Gauss map, finite differences vs closed formula.

    (a) 4th-order differences of the lift with the (4n-2)Tr Killing metric;
    (b) (8n-4)(1/2 + sum ||alpha||^2) h1 (dx^2+dy^2).
    Reports the max relative deviation and the conformality defect of (a).
    """
    n = data.n
    g = frames.grid
    perm, p, _ = gauss_permutation(n)
    ft = frames.P[..., :, perm]
    fti = np.linalg.inv(ft)
    dx, dy = grad_central4(ft, g)
    wx = np.einsum("...ij,...jk->...ik", fti, dx)
    wy = np.einsum("...ij,...jk->...ik", fti, dy)
    gx, gy = wx[..., p:, :p], wy[..., p:, :p]
    h1 = np.exp(state.w[0].values)
    Exx, Exy, Eyy = _killing_gram(gx, gy, h1, n)

    nr = norms(state, data)
    total = 0.5 + nr["plus"] + nr["minus"]
    for j in range(2, n):
        total = total + nr[j]
    factor = (8 * n - 4) * total
    Fxx = factor * h1

    mask = _nowrap_mask(g)
    trace = 0.5 * (Exx + Eyy)
    rel = np.zeros_like(Exx)
    rel[mask] = np.abs(Exx - Fxx)[mask] / np.abs(Fxx)[mask]
    rel_yy = np.zeros_like(rel)
    rel_yy[mask] = np.abs(Eyy - Fxx)[mask] / np.abs(Fxx)[mask]
    conf = np.zeros_like(rel)
    conf[mask] = (np.abs(Exy) + 0.5 * np.abs(Exx - Eyy))[mask] / trace[mask]
    report = {
        "factor_formula": float(np.max(factor)),
        "formula_rel_err": float(max(np.max(rel), np.max(rel_yy))),
        "conformality_max": float(np.max(conf)),
        "killing_constant": 4 * n - 2,
    }
    return (Exx, Exy, Eyy), (Fxx, np.zeros_like(Fxx), Fxx), report


_CROSS_TENSOR = np.zeros((7, 7, 7))
for _i in range(7):
    for _j in range(7):
        _e = CROSS_TABLE[_i][_j]
        if _e is not None:
            _CROSS_TENSOR[_i, _j, _e[1]] = _e[0]

_PHI_TENSOR = np.zeros((7, 7, 7))
for (_i, _j, _k), _c in PHI.items():
    for (_a, _b, _cc, _s) in (
            (_i, _j, _k, 1), (_j, _k, _i, 1), (_k, _i, _j, 1),
            (_j, _i, _k, -1), (_i, _k, _j, -1), (_k, _j, _i, -1)):
        _PHI_TENSOR[_a, _b, _cc] = _s * _c


def cross_batched(x, y):
    """Cross product on stacks of 7-vectors (last axis)."""
    return np.einsum("ijk,...i,...j->...k", _CROSS_TENSOR, x, y)


def phi_tensor():
    return _PHI_TENSOR.copy()


def jholo_residual(frames, state, data, tol=1e-8, antipodal=False):
    """J-holomorphy of the immersion in the base-point G2'-frame (n = 3).

    Requires h3 = h1 h2 / 4 pointwise within ``tol``.  Expresses the moved
    frame (F,U2,V2,U1,V1,-V3,U3)(z) in the base-point G2'-frame, where
    J(X) = F x X; returns the pointwise norm of F x U1 - V1 (J-holomorphy),
    the antipodal pattern norm F x U1 + V1, and the phi-preservation
    residual of the moved frame.  ``antipodal=True`` negates the frames.
    """
    n = data.n
    if n != 3:
        raise ValueError("jholo_residual needs n = 3 (G2' case)")
    h = np.exp(state.array())
    c_res = float(np.max(np.abs(h[2] - h[0] * h[1] / 4.0)))
    if c_res > tol * float(np.max(h[2])):
        raise ValueError("G2' constraint h3 = h1 h2 / 4 violated "
                         "(max residual %.3e)" % c_res)
    C = frames.P[frames.base_point] @ g2_frame_matrix()
    Ci = np.linalg.inv(C)
    M = np.einsum("ij,...jk,kl->...il", Ci, frames.P, g2_frame_matrix())
    if antipodal:
        M = -M
    F = M[..., :, 0]
    U1 = M[..., :, 3]
    V1 = M[..., :, 4]
    JU1 = cross_batched(F, U1)
    res_plus = np.sqrt(np.sum((JU1 - V1) ** 2, axis=-1))
    res_minus = np.sqrt(np.sum((JU1 + V1) ** 2, axis=-1))
    # phi preservation of the full moved frame relative to the base point
    t1 = np.einsum("abc,...ai->...ibc", _PHI_TENSOR, M)
    t2 = np.einsum("...ibc,...bj->...ijc", t1, M)
    t3 = np.einsum("...ijc,...ck->...ijk", t2, M)
    phi_res = np.max(np.abs(t3 - _PHI_TENSOR), axis=(-3, -2, -1))
    report = {
        "h3_constraint_residual": c_res,
        "jholo_max": float(np.max(res_plus)),
        "jholo_antipodal_max": float(np.max(res_minus)),
        "phi_residual_max": float(np.max(phi_res)),
    }
    return res_plus, report
