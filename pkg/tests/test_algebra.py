"""Exact-arithmetic checks of the split-octonion / G2' algebra layer."""

import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from todalab import algebra as al


def rational_vec(rnd, dim=7, span=6):
    return [Fraction(rnd.randint(-span, span), rnd.randint(1, span))
            for _ in range(dim)]


def project_off(x, y):
    """y minus its <.,.>-projection on x (requires <x,x> != 0)."""
    q = al.metric34(x, x)
    c = al.metric34(x, y)
    return [yi - c / q * xi for xi, yi in zip(x, y)]


def test_cross_basis_table_entries():
    e = [[Fraction(int(i == j)) for i in range(7)] for j in range(7)]
    assert al.cross(e[0], e[1]) == e[2]          # e1 x e2 = e3
    assert al.cross(e[3], e[4]) == [-v for v in e[0]]   # e4 x e5 = -e1
    x = rational_vec(random.Random(1))
    assert al.cross(x, x) == [Fraction(0)] * 7


def test_octonion_unit_and_table():
    one = [Fraction(int(i == 0)) for i in range(8)]
    rnd = random.Random(2)
    x = rational_vec(rnd, 8)
    assert al.split_octonion_mul(one, x) == x
    assert al.split_octonion_mul(x, one) == x
    # i * j = k and l * l = 1
    i = [Fraction(int(k == 1)) for k in range(8)]
    j = [Fraction(int(k == 2)) for k in range(8)]
    el = [Fraction(int(k == 4)) for k in range(8)]
    assert al.split_octonion_mul(i, j) == [Fraction(int(k == 3)) for k in range(8)]
    assert al.split_octonion_mul(el, el) == one


def test_cross_is_imaginary_octonion_product():
    rnd = random.Random(3)
    for _ in range(50):
        x, y = rational_vec(rnd), rational_vec(rnd)
        xo = [Fraction(0)] + x
        yo = [Fraction(0)] + y
        assert al.cross(x, y) == al.split_octonion_mul(xo, yo)[1:]


def test_composition_property():
    rnd = random.Random(4)
    met8 = lambda a, b: sum(s * ai * bi for s, ai, bi in
                            zip([1, 1, 1, 1, -1, -1, -1, -1], a, b))
    for _ in range(30):
        x, y = rational_vec(rnd, 8), rational_vec(rnd, 8)
        xy = al.split_octonion_mul(x, y)
        assert met8(xy, xy) == met8(x, x) * met8(y, y)


def test_cross_identities_exact():
    rnd = random.Random(5)
    count = 0
    while count < 200:
        x, y, z = rational_vec(rnd), rational_vec(rnd), rational_vec(rnd)
        if al.metric34(x, x) == 0:
            continue
        count += 1
        cxy = al.cross(x, y)
        assert al.metric34(cxy, x) == 0
        assert al.metric34(cxy, z) == al.metric34(al.cross(y, z), x)
        assert al.metric34(cxy, cxy) == \
            al.metric34(x, x) * al.metric34(y, y) - al.metric34(x, y) ** 2
        lhs = al.cross(x, al.cross(x, y))
        rhs = [-al.metric34(x, x) * yi + al.metric34(x, y) * xi
               for xi, yi in zip(x, y)]
        assert lhs == rhs


def test_fifth_identity_fully_projected():
    # The quoted form needs y and z orthogonal as well; built by projection.
    rnd = random.Random(6)
    count = 0
    while count < 200:
        x, y, z = rational_vec(rnd), rational_vec(rnd), rational_vec(rnd)
        if al.metric34(x, x) == 0:
            continue
        y = project_off(x, y)
        z = project_off(x, z)
        if al.metric34(y, y) == 0:
            continue
        z = project_off(y, z)
        count += 1
        lhs = al.cross(x, al.cross(y, z))
        rhs = [-v for v in al.cross(y, al.cross(x, z))]
        assert lhs == rhs


def test_fifth_identity_sharp_correction():
    # With only <x,y> = 0:  x(yz) + y(xz) = <x,z> y + <y,z> x  exactly.
    rnd = random.Random(7)
    for _ in range(100):
        x, y, z = rational_vec(rnd), rational_vec(rnd), rational_vec(rnd)
        if al.metric34(x, x) == 0:
            continue
        y = project_off(x, y)
        s = [a + b for a, b in zip(al.cross(x, al.cross(y, z)),
                                   al.cross(y, al.cross(x, z)))]
        t = [al.metric34(x, z) * yi + al.metric34(y, z) * xi
             for xi, yi in zip(x, y)]
        assert s == t


def test_phi_equals_threeform_and_pattern():
    tab = al.ThreeForm.from_function(al.phi3)
    assert {k: Fraction(v) for k, v in al.PHI.items()} == tab.coeffs
    rnd = random.Random(8)
    for _ in range(30):
        x, y, z = rational_vec(rnd), rational_vec(rnd), rational_vec(rnd)
        assert al.PHI(x, y, z) == al.phi3(x, y, z)
        assert al.phi3(x, x, z) == 0
    e = [[Fraction(int(i == j)) for i in range(7)] for j in range(7)]
    assert al.phi3(e[0], e[1], e[2]) == 1
    assert al.phi3(e[0], e[3], e[4]) == -1


def _cayley_so(S):
    n = S.shape[0]
    eye = sp.eye(n) if isinstance(S, sp.MatrixBase) else np.eye(n)
    if isinstance(S, sp.MatrixBase):
        return (eye - S) * (eye + S).inv()
    return (eye - S) @ np.linalg.inv(eye + S)


def rational_k_triple(rnd):
    """Admissible triple from rational SO(3) x SO(4) Cayley rotations."""

    def rat():
        return Fraction(rnd.randint(-3, 3), rnd.randint(1, 4))

    S3 = sp.Matrix(3, 3, lambda i, j: 0)
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        v = sp.Rational(rat())
        S3[i, j], S3[j, i] = v, -v
    S4 = sp.Matrix(4, 4, lambda i, j: 0)
    for (i, j) in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
        v = sp.Rational(rat())
        S4[i, j], S4[j, i] = v, -v
    Q3 = _cayley_so(S3)
    Q4 = _cayley_so(S4)
    e1 = [Fraction(Q3[r, 0]) for r in range(3)] + [Fraction(0)] * 4
    e2 = [Fraction(Q3[r, 1]) for r in range(3)] + [Fraction(0)] * 4
    e4 = [Fraction(0)] * 3 + [Fraction(Q4[r, 0]) for r in range(4)]
    return e1, e2, e4


def _check_g2_basis_matrix(cols, exact):
    tol = 0 if exact else 1e-12
    for i in range(7):
        for j in range(7):
            want = (1 if i < 3 else -1) if i == j else 0
            v = al.metric34(cols[i], cols[j]) - want
            assert abs(float(v)) <= tol
    for i in range(7):
        for j in range(i + 1, 7):
            for k in range(j + 1, 7):
                v = al.phi3(cols[i], cols[j], cols[k]) - al.PHI.coefficient(i, j, k)
                assert abs(float(v)) <= (0 if exact else 1e-12)


def test_complete_g2_basis_standard_and_swapped():
    e = [[Fraction(int(i == j)) for i in range(7)] for j in range(7)]
    cols = al.complete_g2_basis(e[0], e[1], e[3])
    assert list(cols) == [e[0], e[1], e[2], e[3], e[4], e[5], e[6]]
    swapped = al.complete_g2_basis(e[1], e[0], e[3])
    assert swapped[2] == [-v for v in e[2]]


def test_complete_g2_basis_exact_rational_family():
    rnd = random.Random(9)
    for _ in range(25):
        e1, e2, e4 = rational_k_triple(rnd)
        cols = al.complete_g2_basis(e1, e2, e4, tol=0)
        _check_g2_basis_matrix(cols, exact=True)


def test_complete_g2_basis_signed_permutation_triples():
    e = [[Fraction(int(i == j)) for i in range(7)] for j in range(7)]
    for (i, j, k, si, sj, sk) in ((1, 2, 4, 1, 1, 1), (2, 0, 5, 1, -1, 1),
                                  (0, 2, 6, -1, 1, -1)):
        t1 = [si * v for v in e[i]]
        t2 = [sj * v for v in e[j]]
        t4 = [sk * v for v in e[k]]
        if abs(float(al.phi3(t1, t2, t4))) > 0:
            continue
        cols = al.complete_g2_basis(t1, t2, t4, tol=0)
        _check_g2_basis_matrix(cols, exact=True)


def random_admissible_triple(rng):
    """Generic float admissible triple via Gram-Schmidt on the quadric.

    Rejection thresholds keep the normalizations well conditioned so float
    round-off stays at the 1e-14 scale.
    """
    while True:
        v = rng.normal(size=(3, 7))
        q0 = al.metric34(v[0], v[0])
        if q0 < 0.5:
            continue
        e1 = v[0] / np.sqrt(q0)
        y = v[1] - al.metric34(e1, v[1]) * np.asarray(e1)
        q = al.metric34(y, y)
        if q < 0.5:
            continue
        e2 = y / np.sqrt(q)
        e3 = np.asarray(al.cross(e1, e2))
        w = v[2]
        for b in (e1, e2, e3):
            w = w - al.metric34(b, w) / al.metric34(b, b) * np.asarray(b)
        qw = al.metric34(w, w)
        if qw > -0.5:
            continue
        return e1, e2, w / np.sqrt(-qw)


def test_complete_g2_basis_float_generic(rng):
    from todalab.frame import group_form_residual
    for _ in range(100):
        e1, e2, e4 = random_admissible_triple(rng)
        cols = al.complete_g2_basis(e1, e2, e4, tol=1e-10)
        M = np.stack(cols, axis=1)
        assert np.max(np.abs(M.T @ al.G34 @ M - al.G34)) < 1e-12
        assert group_form_residual(M) < 1e-12


def test_complete_g2_basis_rejects_bad_triple():
    e = [[Fraction(int(i == j)) for i in range(7)] for j in range(7)]
    with pytest.raises(ValueError):
        al.complete_g2_basis(e[0], e[1], e[2])   # e4-slot must be timelike


def test_g2_lie_pattern_examples(rng):
    ok, params = al.g2_lie_pattern(np.zeros((7, 7)))
    assert ok and all(abs(v) == 0 for v in params["a"] + params["b"] + params["c"])
    X = al.g2_lie_element((1, 0, 0, 0, 0, 0), (0,) * 6, (0, 0))
    assert X[0, 1] == 1 and X[1, 0] == -1 and X[4, 5] == 1 and X[5, 4] == -1
    ok, params = al.g2_lie_pattern(X)
    assert ok and params["a"][0] == 1
    # pattern <=> infinitesimal phi-invariance, both directions on samples
    for _ in range(10):
        Y = al.g2_lie_element(rng.normal(size=6), rng.normal(size=6),
                              rng.normal(size=2))
        assert al.form_invariance_residual(Y, al.PHI) < 1e-12
        assert al.so_metric_residual(Y, al.G34) < 1e-12
        A = rng.normal(size=(7, 7))
        Z = (A - A.T) @ al.G34
        okz, _ = al.g2_lie_pattern(Z, tol=1e-8)
        if not okz:
            assert al.form_invariance_residual(Z, al.PHI) > 1e-6


def test_g2c_pattern_examples(rng):
    D = np.diag([3, 1, 2, 0, -2, -1, -3]).astype(complex)
    ok, params = al.g2c_pattern(D)
    assert ok and params["t"] == (1, 2)
    ok, _ = al.g2c_pattern(np.zeros((7, 7)))
    assert ok
    X = al.g2c_element((0, 0), (0, 0, 1, 0, 0, 0), (0,) * 6)
    assert al.form_invariance_residual(X, al.VARPI) < 1e-12
    for _ in range(10):
        Z = al.g2c_element(rng.normal(size=2) + 1j * rng.normal(size=2),
                           rng.normal(size=6) + 1j * rng.normal(size=6),
                           rng.normal(size=6) + 1j * rng.normal(size=6))
        assert al.form_invariance_residual(Z, al.VARPI) < 1e-10
        assert np.max(np.abs(Z.T @ al.Q_FORM + al.Q_FORM @ Z)) < 1e-12


def test_principal_sl2():
    et, a, e = al.principal_sl2()
    assert np.allclose(np.diag(a), [3, 2, 1, 0, -1, -2, -3])
    assert np.max(np.abs(a @ e - e @ a - e)) == 0
    assert np.max(np.abs(a @ et - et @ a + et)) == 0
    assert np.max(np.abs(e @ et - et @ e - a)) < 1e-14
    for M in (et, a, e):
        ok, _ = al.g2c_pattern(M, tol=1e-12)
        assert ok


def test_principal_sl2_exact():
    et, a, e = al.principal_sl2(exact=True)
    assert (a * e - e * a - e).is_zero_matrix
    assert (a * et - et * a + et).is_zero_matrix
    assert sp.simplify(e * et - et * e - a).is_zero_matrix


@pytest.mark.parametrize("h1,h2", [(1, 1), (2, 2), (4, 1)])
def test_real_form_frame_exact(h1, h2):
    B = sp.Matrix(al.real_form_frame(h1, h2, exact=True))
    # Lambda fixes every column
    for c in range(7):
        col = [B[r, c] for r in range(7)]
        fixed = al.lambda_involution(col, sp.nsimplify(h1), sp.nsimplify(h2))
        assert all(sp.simplify(a - b) == 0 for a, b in zip(col, fixed))
    Q = sp.Matrix(al.Q_FORM.astype(int))
    gram = sp.simplify(B.T * Q * B)
    assert gram == sp.diag(1, 1, 1, -1, -1, -1, -1)
    pb = al.pullback_threeform(al._varpi_exact(), B)
    target = dict(al.PHI.items())
    seen = {}
    for k, v in pb.items():
        vs = sp.simplify(v)
        if vs != 0:
            seen[k] = vs
    assert set(seen) == set(target)
    for k, v in seen.items():
        assert sp.simplify(v - target[k]) == 0
    assert seen[(0, 1, 2)] == 1


def test_real_form_frame_float_and_errors():
    B = al.real_form_frame(2.0, 2.0)
    gram = B.T @ al.Q_FORM @ B
    assert np.max(np.abs(gram - al.G34)) < 1e-12
    with pytest.raises(ValueError):
        al.real_form_frame(-1.0, 1.0)


def test_dimension_errors():
    with pytest.raises(ValueError):
        al.cross([1] * 6, [1] * 7)
    with pytest.raises(ValueError):
        al.split_octonion_mul([1] * 7, [1] * 8)
