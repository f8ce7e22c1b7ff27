"""Split-octonion / G2' linear algebra over exact and float scalars.

Basis conventions, fixed once and for all:

* R^{3,4} carries the diagonal metric (+1,+1,+1,-1,-1,-1,-1) in the basis
  (e1,...,e7) obtained from the imaginary split octonions (i,j,k,l,il,jl,kl).
* The cross product is hard-coded from its multiplication table (never
  re-derived at runtime), and phi(x,y,z) = <x cross y, z>.
* The ambient space R^{p,q+1} for the surface modules uses the frame order
  (iota, u1, v1, ..., un, vn) with signs (-1, +1,+1, -1,-1, +1,+1, ...).

All operations are pure and value-semantic; scalars may be float, Fraction,
or sympy expressions (the tables are integer, so exactness is preserved).
"""

import numbers
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "SignatureSpec", "ThreeForm", "PHI", "VARPI", "Q_FORM", "G34",
    "metric34", "cross", "split_octonion_mul", "phi3",
    "complete_g2_basis", "g2_lie_element", "g2_lie_pattern",
    "g2c_element", "g2c_pattern", "so_metric_residual",
    "form_invariance_residual", "principal_sl2", "real_form_frame",
    "lambda_involution",
]


@dataclass(frozen=True)
class SignatureSpec:
    """Ambient dimension/signature data for H^{p,q} inside R^{p,q+1}.

    (p,q) = (n,n) for even n and (n+1,n-1) for odd n; ambient_signs is the
    diagonal metric in the frame order (iota,u1,v1,...,un,vn).
    """
    n: int
    p: int = field(init=False)
    q: int = field(init=False)
    ambient_signs: tuple = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("SignatureSpec needs n >= 2")
        n = self.n
        if n % 2 == 0:
            p, q = n, n
        else:
            p, q = n + 1, n - 1
        signs = [-1]
        for i in range(1, n + 1):
            s = 1 if i % 2 == 1 else -1
            signs += [s, s]
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "ambient_signs", tuple(signs))

    @property
    def dim(self):
        return 2 * self.n + 1

    def metric_matrix(self):
        return np.diag(np.array(self.ambient_signs, dtype=float))


# Cross product on R^{3,4}: CROSS_TABLE[i][j] = (sign, k) with
# e_{i+1} x e_{j+1} = sign * e_{k+1}, or None for zero.
CROSS_TABLE = (
    (None, (1, 2), (-1, 1), (1, 4), (-1, 3), (-1, 6), (1, 5)),
    ((-1, 2), None, (1, 0), (1, 5), (1, 6), (-1, 3), (-1, 4)),
    ((1, 1), (-1, 0), None, (1, 6), (-1, 5), (1, 4), (-1, 3)),
    ((-1, 4), (-1, 5), (-1, 6), None, (-1, 0), (-1, 1), (-1, 2)),
    ((1, 3), (-1, 6), (1, 5), (1, 0), None, (1, 2), (-1, 1)),
    ((1, 6), (1, 3), (-1, 4), (1, 1), (-1, 2), None, (1, 0)),
    ((-1, 5), (1, 4), (1, 3), (1, 2), (1, 1), (-1, 0), None),
)

# Split octonions O' in the basis (1,i,j,k,l,il,jl,kl), index 0..7.
# OCT_TABLE[a][b] = (sign, c) meaning basis_a * basis_b = sign * basis_c,
# for a,b >= 1; products with the unit are handled separately.
OCT_TABLE = (
    ((-1, 0), (1, 3), (-1, 2), (1, 5), (-1, 4), (-1, 7), (1, 6)),
    ((-1, 3), (-1, 0), (1, 1), (1, 6), (1, 7), (-1, 4), (-1, 5)),
    ((1, 2), (-1, 1), (-1, 0), (1, 7), (-1, 6), (1, 5), (-1, 4)),
    ((-1, 5), (-1, 6), (-1, 7), (1, 0), (-1, 1), (-1, 2), (-1, 3)),
    ((1, 4), (-1, 7), (1, 6), (1, 1), (1, 0), (1, 3), (-1, 2)),
    ((1, 7), (1, 4), (-1, 5), (1, 2), (-1, 3), (1, 0), (1, 1)),
    ((-1, 6), (1, 5), (1, 4), (1, 3), (1, 2), (-1, 1), (1, 0)),
)

SIGNS34 = (1, 1, 1, -1, -1, -1, -1)
G34 = np.diag(np.array(SIGNS34, dtype=float))


def _zero_like(x):
    """Additive zero matching the scalar type of sequence entry x."""
    return x * 0


def metric34(x, y):
    """<x,y> on R^{3,4} with signs (+,+,+,-,-,-,-)."""
    if len(x) != 7 or len(y) != 7:
        raise ValueError("metric34 expects 7-dimensional vectors")
    acc = x[0] * y[0]
    for i in (1, 2):
        acc = acc + x[i] * y[i]
    for i in (3, 4, 5, 6):
        acc = acc - x[i] * y[i]
    return acc


def cross(x, y):
    """Cross product on R^{3,4}, bilinear extension of the basis table.

    Works on any scalar field containing the integers; exact for rational
    or sympy inputs.  Numpy float inputs return a numpy array.
    """
    if len(x) != 7 or len(y) != 7:
        raise ValueError("cross expects 7-dimensional vectors")
    out = [_zero_like(x[0] * y[0])] * 7
    for i in range(7):
        xi = x[i]
        for j in range(7):
            ent = CROSS_TABLE[i][j]
            if ent is None:
                continue
            s, k = ent
            term = xi * y[j]
            out[k] = out[k] + term if s > 0 else out[k] - term
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        return np.array(out)
    return out


def split_octonion_mul(a, b):
    """Product in O' (basis 1,i,j,k,l,il,jl,kl); unit is the first slot."""
    if len(a) != 8 or len(b) != 8:
        raise ValueError("split_octonion_mul expects 8-dimensional vectors")
    out = [_zero_like(a[0] * b[0])] * 8
    # unit parts
    for c in range(8):
        out[c] = out[c] + a[0] * b[c]
    for c in range(1, 8):
        out[c] = out[c] + a[c] * b[0]
    # imaginary times imaginary
    for i in range(1, 8):
        ai = a[i]
        for j in range(1, 8):
            s, c = OCT_TABLE[i - 1][j - 1]
            term = ai * b[j]
            out[c] = out[c] + term if s > 0 else out[c] - term
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array(out)
    return out


def phi3(x, y, z):
    """phi(x,y,z) = <x cross y, z>; totally antisymmetric."""
    return metric34(cross(x, y), z)


class ThreeForm:
    """Alternating 3-tensor on a 7-dimensional space.

    Stored as coefficients on ordered triples i<j<k (0-based); evaluation on
    arbitrary index triples picks up the permutation sign.
    """

    def __init__(self, coeffs):
        self.coeffs = {}
        for (i, j, k), c in coeffs.items():
            if not (0 <= i < j < k < 7):
                raise ValueError("ThreeForm coefficients must use i<j<k")
            if c != 0:
                self.coeffs[(i, j, k)] = c

    @classmethod
    def from_function(cls, f):
        """Tabulate a trilinear alternating function on all basis triples."""
        basis = [[Fraction(1) if r == s else Fraction(0) for r in range(7)]
                 for s in range(7)]
        coeffs = {}
        for i in range(7):
            for j in range(i + 1, 7):
                for k in range(j + 1, 7):
                    c = f(basis[i], basis[j], basis[k])
                    if c != 0:
                        coeffs[(i, j, k)] = c
        return cls(coeffs)

    def coefficient(self, i, j, k):
        """Coefficient on an arbitrary triple, with permutation sign."""
        if len({i, j, k}) < 3:
            return 0
        perm = sorted([i, j, k])
        sign = 1
        seq = [i, j, k]
        # parity of the permutation taking seq to sorted order
        for a in range(3):
            for b in range(a + 1, 3):
                if seq[a] > seq[b]:
                    sign = -sign
        return sign * self.coeffs.get(tuple(perm), 0)

    def __call__(self, x, y, z):
        acc = None
        for (i, j, k), c in self.coeffs.items():
            det = (x[i] * (y[j] * z[k] - y[k] * z[j])
                   - x[j] * (y[i] * z[k] - y[k] * z[i])
                   + x[k] * (y[i] * z[j] - y[j] * z[i]))
            term = c * det
            acc = term if acc is None else acc + term
        return 0 if acc is None else acc

    def items(self):
        return self.coeffs.items()


# phi = e^123 - e^145 + e^167 - e^246 - e^257 - e^347 + e^356  (0-based keys)
PHI = ThreeForm({
    (0, 1, 2): 1, (0, 3, 4): -1, (0, 5, 6): 1,
    (1, 3, 5): -1, (1, 4, 6): -1, (2, 3, 6): -1, (2, 4, 5): 1,
})

# varpi = i(eps^147 + eps^246 - eps^345 - 2*sqrt2*eps^156 - eps^237/sqrt2)
_SQRT2 = np.sqrt(2.0)
VARPI = ThreeForm({
    (0, 3, 6): 1j, (1, 3, 5): 1j, (2, 3, 4): -1j,
    (0, 4, 5): -2j * _SQRT2, (1, 2, 6): -1j / _SQRT2,
})

# Q from the g2-complex representation: antidiagonal with entries
# (-1, 1, -1, 1, -1, 1, -1) read from the top-right corner.
Q_FORM = np.zeros((7, 7))
for _i, _s in enumerate((-1, 1, -1, 1, -1, 1, -1)):
    Q_FORM[_i, 6 - _i] = _s


def _varpi_exact():
    import sympy as sp
    s2 = sp.sqrt(2)
    return ThreeForm({
        (0, 3, 6): sp.I, (1, 3, 5): sp.I, (2, 3, 4): -sp.I,
        (0, 4, 5): -2 * sp.I * s2, (1, 2, 6): -sp.I / s2,
    })


def so_metric_residual(X, G):
    """max |X^T G + G X|: zero iff X is in so(G)."""
    X = np.asarray(X)
    return float(np.max(np.abs(X.T @ G + G @ X)))


def form_invariance_residual(X, form=PHI):
    """Infinitesimal invariance defect of a 3-form under endomorphism X.

    Returns max over basis triples of
    |form(Xe_i,e_j,e_k) + form(e_i,Xe_j,e_k) + form(e_i,e_j,Xe_k)|.
    Works for numeric arrays; exact inputs go through `_invariance_terms`.
    """
    res = 0
    for (i, j, k), val in _invariance_terms(X, form):
        res = max(res, abs(complex(val)))
    return res


def _invariance_terms(X, form):
    """Yield ((i,j,k), L_X form (e_i,e_j,e_k)) over all triples i<j<k."""
    for i in range(7):
        for j in range(i + 1, 7):
            for k in range(j + 1, 7):
                acc = None
                for m in range(7):
                    t = (X[m][i] * form.coefficient(m, j, k)
                         + X[m][j] * form.coefficient(i, m, k)
                         + X[m][k] * form.coefficient(i, j, m))
                    acc = t if acc is None else acc + t
                yield (i, j, k), acc


def complete_g2_basis(e1t, e2t, e4t, tol=1e-12):
    """Complete an admissible triple to a G2'-basis by cross products.

    Precondition (checked within ``tol``, exactly for Fraction inputs):
    <e1,e1> = <e2,e2> = 1, <e4,e4> = -1, mutual orthogonality, and
    <e1 x e2, e4> = 0.  Returns the seven vectors with
    e3 = e1 x e2, e5 = e1 x e4, e6 = e2 x e4, e7 = e3 x e4.
    """
    checks = [
        ("<e1,e1> - 1", metric34(e1t, e1t) - 1),
        ("<e2,e2> - 1", metric34(e2t, e2t) - 1),
        ("<e4,e4> + 1", metric34(e4t, e4t) + 1),
        ("<e1,e2>", metric34(e1t, e2t)),
        ("<e1,e4>", metric34(e1t, e4t)),
        ("<e2,e4>", metric34(e2t, e4t)),
        ("<e1 x e2, e4>", phi3(e1t, e2t, e4t)),
    ]
    for name, val in checks:
        if abs(float(val)) > tol:
            raise ValueError("not an admissible G2' triple: %s = %s" % (name, val))
    e3t = cross(e1t, e2t)
    e5t = cross(e1t, e4t)
    e6t = cross(e2t, e4t)
    e7t = cross(e3t, e4t)
    return e1t, e2t, e3t, e4t, e5t, e6t, e7t


def g2_lie_element(a, b, c):
    """Build the g2' matrix with parameters a[0:6], b[0:6], c[0:2].

    Layout follows the corollary describing g2' inside so(3,4); zero-based
    entries, e.g. X[0,1] = a1, X[0,5] = b1, X[0,4] = c1.
    """
    a1, a2, a3, a4, a5, a6 = a
    b1, b2, b3, b4, b5, b6 = b
    c1, c2 = c
    X = np.zeros((7, 7))
    rows = [
        [0, a1, a2, b4, c1, b1, b2],
        [-a1, 0, a3, b5, b1 - b6, c2, b3],
        [-a2, -a3, 0, b6, b2 + b5, b3 - b4, -c1 - c2],
        [b4, b5, b6, 0, a4, a5, a6],
        [c1, b1 - b6, b2 + b5, -a4, 0, a1 + a6, a2 - a5],
        [b1, c2, b3 - b4, -a5, -a1 - a6, 0, a3 + a4],
        [b2, b3, -c1 - c2, -a6, -a2 + a5, -a3 - a4, 0],
    ]
    for i in range(7):
        for j in range(7):
            X[i, j] = rows[i][j]
    return X


def g2_lie_pattern(X, tol=1e-12):
    """Test membership of a real 7x7 matrix in g2' and extract parameters.

    Reads the 14 parameters off their defining slots, rebuilds the pattern
    matrix, and accepts iff the difference is below ``tol``.  Returns
    (ok, params) with params = dict(a=..., b=..., c=...) when ok.
    """
    X = np.asarray(X, dtype=float)
    a = (X[0, 1], X[0, 2], X[1, 2], X[3, 4], X[3, 5], X[3, 6])
    b = (X[0, 5], X[0, 6], X[1, 6], X[0, 3], X[1, 3], X[2, 3])
    c = (X[0, 4], X[1, 5])
    M = g2_lie_element(a, b, c)
    ok = bool(np.max(np.abs(X - M)) <= tol)
    if not ok:
        return False, None
    return True, {"a": a, "b": b, "c": c}


def g2c_element(t, x, y, sqrt2=None):
    """Build the g2-complex matrix with parameters t[0:2], x[0:6], y[0:6]."""
    if sqrt2 is None:
        sqrt2 = _SQRT2
    t1, t2 = t
    x1, x2, x3, x4, x5, x6 = x
    y1, y2, y3, y4, y5, y6 = y
    z = x1 * 0
    rows = [
        [t1 + t2, x1, x2, x3, x4, x5, z],
        [y1, t1, x6, -2 * sqrt2 * x2, -sqrt2 * x3, z, x5],
        [y2, y6, t2, 2 * sqrt2 * x1, z, -sqrt2 * x3, -x4],
        [y3, -y2 / sqrt2, y1 / sqrt2, z, 2 * sqrt2 * x1, 2 * sqrt2 * x2, x3],
        [y4, -y3 / (2 * sqrt2), z, y1 / sqrt2, -t2, x6, -x2],
        [y5, z, -y3 / (2 * sqrt2), y2 / sqrt2, y6, -t1, x1],
        [z, y5, -y4, y3, -y2, y1, -t1 - t2],
    ]
    if isinstance(x1, (numbers.Number, np.generic)):
        return np.array(rows, dtype=complex)
    return rows


def g2c_pattern(X, tol=1e-12):
    """Membership test for the g2-complex matrix pattern.

    Also verifies X in so(Q) (X^T Q + Q X = 0).  Returns (ok, params).
    """
    X = np.asarray(X, dtype=complex)
    t = (X[1, 1], X[2, 2])
    x = (X[0, 1], X[0, 2], X[0, 3], X[0, 4], X[0, 5], X[1, 2])
    y = (X[1, 0], X[2, 0], X[3, 0], X[4, 0], X[5, 0], X[2, 1])
    M = g2c_element(t, x, y)
    if np.max(np.abs(X - M)) > tol:
        return False, None
    if np.max(np.abs(X.T @ Q_FORM + Q_FORM @ X)) > tol:
        return False, None
    return True, {"t": t, "x": x, "y": y}


def principal_sl2(exact=False):
    """The principal sl2 triple (etilde, a, e) of g2-complex.

    a = diag(3,2,1,0,-1,-2,-3); etilde and e are the sub/super-diagonal
    matrices with entries (1,1,1/sqrt2,1/sqrt2,1,1) and (3,5,6sqrt2,6sqrt2,5,3).
    """
    if exact:
        import sympy as sp
        s2 = sp.sqrt(2)
        et = sp.zeros(7)
        e = sp.zeros(7)
        a = sp.diag(3, 2, 1, 0, -1, -2, -3)
        sub = [1, 1, 1 / s2, 1 / s2, 1, 1]
        sup = [3, 5, 6 * s2, 6 * s2, 5, 3]
        for i in range(6):
            et[i + 1, i] = sub[i]
            e[i, i + 1] = sup[i]
        return et, a, e
    s2 = _SQRT2
    et = np.zeros((7, 7))
    e = np.zeros((7, 7))
    a = np.diag([3.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0])
    sub = [1, 1, 1 / s2, 1 / s2, 1, 1]
    sup = [3, 5, 6 * s2, 6 * s2, 5, 3]
    for i in range(6):
        et[i + 1, i] = sub[i]
        e[i, i + 1] = sup[i]
    return et, a, e


def real_form_frame(h1, h2, exact=False):
    """Column matrix B of the Lambda-fixed frame for metric data (h1,h2).

    Sets h3 = h1*h2/4.  Columns are fixed by the anti-linear involution
    Lambda, Q-orthonormal with Gram diag(1,1,1,-1,-1,-1,-1), and pull the
    complex 3-form varpi back to the coefficient pattern of phi.
    """
    if not (h1 > 0 and h2 > 0):
        raise ValueError("real_form_frame needs h1, h2 > 0")
    if exact:
        import sympy as sp
        h1, h2 = sp.nsimplify(h1), sp.nsimplify(h2)
        h3 = h1 * h2 / 4
        r1, r2, r3 = sp.sqrt(h1), sp.sqrt(h2), sp.sqrt(h3)
        I = sp.I
        s2 = sp.sqrt(2)
        B = sp.zeros(7)
    else:
        h3 = h1 * h2 / 4.0
        r1, r2, r3 = np.sqrt(h1), np.sqrt(h2), np.sqrt(h3)
        I = 1j
        s2 = _SQRT2
        B = np.zeros((7, 7), dtype=complex)
    B[0, 5] = I * r3
    B[0, 6] = r3
    B[1, 1] = r2
    B[1, 2] = -I * r2
    B[2, 3] = r1
    B[2, 4] = -I * r1
    B[3, 0] = s2
    B[4, 3] = 1 / r1
    B[4, 4] = I / r1
    B[5, 1] = 1 / r2
    B[5, 2] = I / r2
    B[6, 5] = -I / r3
    B[6, 6] = 1 / r3
    return B / s2


def lambda_involution(z, h1, h2):
    """The anti-linear involution Lambda on C^7 for metric data (h1,h2)."""
    h3 = h1 * h2 / 4
    conj = [zi.conjugate() for zi in z]
    return [h3 * conj[6], h2 * conj[5], h1 * conj[4], conj[3],
            conj[2] / h1, conj[1] / h2, conj[0] / h3]


def pullback_threeform(form, B):
    """Pull a ThreeForm back through the column matrix B (exact-friendly)."""
    cols = [[B[r, c] if hasattr(B, "shape") else B[r][c] for r in range(7)]
            for c in range(7)]
    coeffs = {}
    for i in range(7):
        for j in range(i + 1, 7):
            for k in range(j + 1, 7):
                v = form(cols[i], cols[j], cols[k])
                if v != 0:
                    coeffs[(i, j, k)] = v
    return ThreeForm(coeffs)
