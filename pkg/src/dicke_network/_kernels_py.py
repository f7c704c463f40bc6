"""Pure-Python fallback for the compiled kernels."""

import numpy as np


def ryser_permanent(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if a.shape[1] != n:
        raise ValueError("matrix must be square")
    rowsum = np.zeros(n, dtype=np.complex128)
    acc = 0.0 + 0.0j
    prev = 0
    for step in range(1, 1 << n):
        gray = step ^ (step >> 1)
        diff = gray ^ prev
        j = diff.bit_length() - 1
        if gray & diff:
            rowsum += a[:, j]
        else:
            rowsum -= a[:, j]
        prev = gray
        term = complex(np.prod(rowsum))
        acc += -term if bin(gray).count("1") & 1 else term
    return -acc if n & 1 else acc
