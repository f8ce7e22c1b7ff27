# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Hot kernel: exhaustive feasibility scan of the max-principle inequalities.

A tuple (A_2,...,A_n) is feasible when every inequality residual is <= eps:
    2(A_2-1) - (1 - 1/A_3)                                  (first)
    -A_k(A_{k-1}-1) + 2(A_k-1) - (1 - 1/A_{k+1})            (middle)
    -A_n(A_{n-1}-1) + 2(A_n-1)                              (last)
(n=2 degenerates to A_2 - 1 <= eps).  The scan walks the full grid
values^m (m = n-1) with an odometer and aggregates the dichotomy stats.
"""

import numpy as np


cdef inline bint _feasible(double* A, int m, double eps) noexcept:
    cdef double r
    cdef int j
    if m == 1:
        return A[0] - 1.0 <= eps
    r = 2.0 * (A[0] - 1.0) - (1.0 - 1.0 / A[1])
    if r > eps:
        return 0
    for j in range(1, m - 1):
        r = -A[j] * (A[j - 1] - 1.0) + 2.0 * (A[j] - 1.0) - (1.0 - 1.0 / A[j + 1])
        if r > eps:
            return 0
    r = -A[m - 1] * (A[m - 2] - 1.0) + 2.0 * (A[m - 1] - 1.0)
    return r <= eps


def scan(double[::1] values, int m, double eps, int max_record=200):
    """Scan values^m; returns the aggregate dict (see certify.dichotomy_scan)."""
    cdef Py_ssize_t K = values.shape[0]
    cdef long long total = 1
    cdef int i, j
    for i in range(m):
        total *= K
    cdef long long n_feasible = 0
    cdef long long near1_count = 0
    cdef double max_feas = -1.0
    cdef double max_feas_below = -1.0
    cdef double near1_delta = 0.0
    cdef double lo = 1.0 - eps
    cdef double hi = 1.0 + eps
    cdef double tup_max, dev, d
    cdef long long cnt
    cdef Py_ssize_t idx[8]
    cdef double A[8]
    if m < 1 or m > 8:
        raise ValueError("m must be between 1 and 8")
    for i in range(m):
        idx[i] = 0
        A[i] = values[0]
    counterexamples = []
    near1 = []
    cnt = 0
    while cnt < total:
        if _feasible(A, m, eps):
            n_feasible += 1
            tup_max = A[0]
            dev = A[0] - 1.0 if A[0] >= 1.0 else 1.0 - A[0]
            for j in range(1, m):
                if A[j] > tup_max:
                    tup_max = A[j]
                d = A[j] - 1.0 if A[j] >= 1.0 else 1.0 - A[j]
                if d > dev:
                    dev = d
            if tup_max > max_feas:
                max_feas = tup_max
            if tup_max >= lo:
                near1_count += 1
                if dev > near1_delta:
                    near1_delta = dev
                if len(near1) < max_record:
                    near1.append(tuple(A[j] for j in range(m)))
            elif tup_max > max_feas_below:
                max_feas_below = tup_max
            if tup_max > hi and len(counterexamples) < max_record:
                counterexamples.append(tuple(A[j] for j in range(m)))
        # odometer increment
        cnt += 1
        if cnt == total:
            break
        j = 0
        while True:
            idx[j] += 1
            if idx[j] < K:
                A[j] = values[idx[j]]
                break
            idx[j] = 0
            A[j] = values[0]
            j += 1
    return {
        "tuples": int(total),
        "feasible": int(n_feasible),
        "max_feasible_coord": float(max_feas),
        "max_feasible_coord_below_near1": float(max_feas_below),
        "near1_count": int(near1_count),
        "near1_delta": float(near1_delta),
        "near1_tuples": near1,
        "counterexamples": counterexamples,
    }
