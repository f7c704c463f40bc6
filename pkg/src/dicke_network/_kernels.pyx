# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Ryser permanent (Gray-code ordering)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def ryser_permanent(double complex[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef unsigned long long gray, prev, diff, step, total
    cdef double complex prod, acc = 0.0
    cdef double sign
    cdef double complex[::1] rowsum
    if n == 0:
        return 1.0 + 0.0j
    if a.shape[1] != n:
        raise ValueError("matrix must be square")
    rowsum = np.zeros(n, dtype=np.complex128)
    total = (<unsigned long long> 1) << n
    prev = 0
    for step in range(1, total):
        gray = step ^ (step >> 1)
        diff = gray ^ prev
        j = 0
        while (diff >> j) != 1:
            j += 1
        if gray & diff:
            for i in range(n):
                rowsum[i] += a[i, j]
        else:
            for i in range(n):
                rowsum[i] -= a[i, j]
        prev = gray
        prod = 1.0
        for i in range(n):
            prod *= rowsum[i]
        # popcount parity of the column subset
        k = 0
        diff = gray
        while diff:
            diff &= diff - 1
            k += 1
        sign = -1.0 if (k & 1) else 1.0
        acc += sign * prod
    if n & 1:
        acc = -acc
    return complex(acc)
