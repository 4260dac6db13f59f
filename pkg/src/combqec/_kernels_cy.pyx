# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory-stepping kernels (BLAS zgemv inner loop).

Contracts match ``_kernels_py``; the pure-python module stays the reference
implementation.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()


cdef inline double _norm2(double complex* v, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += v[i].real * v[i].real + v[i].imag * v[i].imag
    return s


cdef inline void _matvec(const double complex* a, double complex* x,
                         double complex* y, int n) noexcept nogil:
    # row-major a seen by BLAS as its transpose, hence trans='T'
    cdef char trans = b'T'
    cdef double complex one = 1.0
    cdef double complex zero = 0.0
    cdef int inc = 1
    zgemv(&trans, &n, &n, &one, <double complex*> a, &n, x, &inc, &zero, y, &inc)


def propagate_until(const double complex[:, :, ::1] props, psi, double threshold):
    """See ``_kernels_py.propagate_until``."""
    cdef int n_steps = props.shape[0]
    cdef int d = props.shape[1]
    cur_arr = np.array(psi, dtype=np.complex128)
    nxt_arr = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] cur = cur_arr
    cdef double complex[::1] nxt = nxt_arr
    cdef int k = 0
    cdef int crossed = -1
    with nogil:
        for k in range(n_steps):
            _matvec(&props[k, 0, 0], &cur[0], &nxt[0], d)
            if _norm2(&nxt[0], d) < threshold:
                crossed = k
                break
            cur[:] = nxt
    if crossed >= 0:
        return crossed, cur_arr
    return -1, cur_arr


def propagate_repeat_until(const double complex[:, ::1] prop, int n_steps, psi,
                           double threshold):
    """See ``_kernels_py.propagate_repeat_until``."""
    cdef int d = prop.shape[0]
    cur_arr = np.array(psi, dtype=np.complex128)
    nxt_arr = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] cur = cur_arr
    cdef double complex[::1] nxt = nxt_arr
    cdef int k = 0
    cdef int crossed = -1
    with nogil:
        for k in range(n_steps):
            _matvec(&prop[0, 0], &cur[0], &nxt[0], d)
            if _norm2(&nxt[0], d) < threshold:
                crossed = k
                break
            cur[:] = nxt
    if crossed >= 0:
        return crossed, cur_arr
    return -1, cur_arr


def apply_sequence(const double complex[:, :, ::1] props, psi):
    """See ``_kernels_py.apply_sequence``."""
    cdef int n_steps = props.shape[0]
    cdef int d = props.shape[1]
    cur_arr = np.array(psi, dtype=np.complex128)
    nxt_arr = np.empty(d, dtype=np.complex128)
    cdef double complex[::1] cur = cur_arr
    cdef double complex[::1] nxt = nxt_arr
    cdef int k
    with nogil:
        for k in range(n_steps):
            _matvec(&props[k, 0, 0], &cur[0], &nxt[0], d)
            cur[:] = nxt
    return cur_arr
