# cython: language_level=3
"""Compiled stepping loops for the matrix ODE dS/dt = G(t) S.

The generator at every evaluation point is ``s * (i diag(w) + v1 M1 + v2 M2)``
with real 2N x 2N blocks M1, M2. All matrices are Fortran ordered so they can
be handed to BLAS/LAPACK without copies.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log2, ceil, sqrt
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zgesv

cnp.import_array()

ctypedef double complex cplx

cdef double[14] PADE13 = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
]
cdef double THETA13 = 5.371920351148152


cdef inline void gemm(int n, cplx alpha, cplx* a, cplx* b, cplx beta, cplx* c) noexcept nogil:
    # c <- alpha a b + beta c
    cdef char tr = b'N'
    zgemm(&tr, &tr, &n, &n, &n, &alpha, a, &n, b, &n, &beta, c, &n)


cdef class _Workspace:
    cdef int n
    cdef cplx[::1, :] a2, a4, a6, u, v, tmp, e, g1, g2, s2, k1, k2, k3, k4
    cdef int[::1] ipiv

    def __init__(self, int n):
        self.n = n
        def z():
            return np.zeros((n, n), dtype=complex, order="F")
        self.a2 = z(); self.a4 = z(); self.a6 = z(); self.u = z(); self.v = z()
        self.tmp = z(); self.e = z(); self.g1 = z(); self.g2 = z(); self.s2 = z()
        self.k1 = z(); self.k2 = z(); self.k3 = z(); self.k4 = z()
        self.ipiv = np.zeros(n, dtype=np.intc)


cdef int expm_inplace(_Workspace w, cplx[::1, :] a, cplx[::1, :] out) noexcept nogil:
    """out <- exp(a); a is overwritten by its scaled copy. Returns LAPACK info."""
    cdef int n = w.n, i, j, k, s, info = 0, nrhs
    cdef double col, norm = 0.0, scale
    cdef cplx x
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += abs(a[i, j])
        if col > norm:
            norm = col
    s = 0
    if norm > THETA13:
        s = <int>ceil(log2(norm / THETA13))
    scale = 1.0
    for k in range(s):
        scale *= 0.5
    if s > 0:
        for j in range(n):
            for i in range(n):
                a[i, j] = a[i, j] * scale
    gemm(n, 1.0, &a[0, 0], &a[0, 0], 0.0, &w.a2[0, 0])
    gemm(n, 1.0, &w.a2[0, 0], &w.a2[0, 0], 0.0, &w.a4[0, 0])
    gemm(n, 1.0, &w.a4[0, 0], &w.a2[0, 0], 0.0, &w.a6[0, 0])
    # u <- a (a6 (b13 a6 + b11 a4 + b9 a2) + b7 a6 + b5 a4 + b3 a2 + b1 I)
    for j in range(n):
        for i in range(n):
            w.tmp[i, j] = PADE13[13] * w.a6[i, j] + PADE13[11] * w.a4[i, j] + PADE13[9] * w.a2[i, j]
            w.v[i, j] = PADE13[7] * w.a6[i, j] + PADE13[5] * w.a4[i, j] + PADE13[3] * w.a2[i, j]
        w.v[j, j] = w.v[j, j] + PADE13[1]
    gemm(n, 1.0, &w.a6[0, 0], &w.tmp[0, 0], 1.0, &w.v[0, 0])
    gemm(n, 1.0, &a[0, 0], &w.v[0, 0], 0.0, &w.u[0, 0])
    # v <- a6 (b12 a6 + b10 a4 + b8 a2) + b6 a6 + b4 a4 + b2 a2 + b0 I
    for j in range(n):
        for i in range(n):
            w.tmp[i, j] = PADE13[12] * w.a6[i, j] + PADE13[10] * w.a4[i, j] + PADE13[8] * w.a2[i, j]
            w.v[i, j] = PADE13[6] * w.a6[i, j] + PADE13[4] * w.a4[i, j] + PADE13[2] * w.a2[i, j]
        w.v[j, j] = w.v[j, j] + PADE13[0]
    gemm(n, 1.0, &w.a6[0, 0], &w.tmp[0, 0], 1.0, &w.v[0, 0])
    # solve (v - u) r = (v + u); a is free to hold the LU factors
    for j in range(n):
        for i in range(n):
            x = w.v[i, j]
            a[i, j] = x - w.u[i, j]
            out[i, j] = x + w.u[i, j]
    nrhs = n
    zgesv(&n, &nrhs, &a[0, 0], &n, &w.ipiv[0], &out[0, 0], &n, &info)
    if info != 0:
        return info
    for k in range(s):
        gemm(n, 1.0, &out[0, 0], &out[0, 0], 0.0, &w.tmp[0, 0])
        memcpy(&out[0, 0], &w.tmp[0, 0], n * n * sizeof(cplx))
    return 0


cdef inline void build_generator(
    cplx[::1, :] g, double[::1] omega, double[::1, :] m1, double[::1, :] m2,
    double s, double v1, double v2,
) noexcept nogil:
    cdef int n = g.shape[0], i, j
    for j in range(n):
        for i in range(n):
            g[i, j] = s * (v1 * m1[i, j] + v2 * m2[i, j])
        g[j, j] = g[j, j] + 1j * s * omega[j]


def expm(a):
    """Matrix exponential of a square complex matrix (Pade 13, scaling and squaring)."""
    cdef cplx[::1, :] work = np.array(a, dtype=complex, order="F", copy=True)
    n = work.shape[0]
    if work.shape[1] != n:
        raise ValueError("expm needs a square matrix")
    out = np.zeros((n, n), dtype=complex, order="F")
    cdef cplx[::1, :] o = out
    cdef _Workspace w = _Workspace(n)
    cdef int info
    with nogil:
        info = expm_inplace(w, work, o)
    if info != 0:
        raise np.linalg.LinAlgError(f"singular Pade denominator (info={info})")
    return out


def magnus4(double[::1] omega, double[::1, :] m1, double[::1, :] m2, double[:, ::1] coeffs, double h):
    """Fourth-order Magnus stepping from S = I.

    ``coeffs[k]`` holds (s, v1, v2) at the first Gauss node of step k followed
    by (s, v1, v2) at the second node.
    """
    cdef int n = omega.shape[0], k, i, j, info = 0
    cdef int steps = coeffs.shape[0]
    cdef _Workspace w = _Workspace(n)
    out = np.asfortranarray(np.eye(n, dtype=complex))
    cdef cplx[::1, :] S = out
    cdef cplx[::1, :] omega4 = np.zeros((n, n), dtype=complex, order="F")
    cdef double c2 = sqrt(3.0) * h * h / 12.0
    with nogil:
        for k in range(steps):
            build_generator(w.g1, omega, m1, m2, coeffs[k, 0], coeffs[k, 1], coeffs[k, 2])
            build_generator(w.g2, omega, m1, m2, coeffs[k, 3], coeffs[k, 4], coeffs[k, 5])
            # omega4 <- h/2 (g1 + g2) + c2 (g2 g1 - g1 g2)
            for j in range(n):
                for i in range(n):
                    omega4[i, j] = 0.5 * h * (w.g1[i, j] + w.g2[i, j])
            gemm(n, c2, &w.g2[0, 0], &w.g1[0, 0], 1.0, &omega4[0, 0])
            gemm(n, -c2, &w.g1[0, 0], &w.g2[0, 0], 1.0, &omega4[0, 0])
            info = expm_inplace(w, omega4, w.e)
            if info != 0:
                break
            gemm(n, 1.0, &w.e[0, 0], &S[0, 0], 0.0, &w.s2[0, 0])
            memcpy(&S[0, 0], &w.s2[0, 0], n * n * sizeof(cplx))
    if info != 0:
        raise np.linalg.LinAlgError(f"singular Pade denominator at step {k} (info={info})")
    return out


def rk4(double[::1] omega, double[::1, :] m1, double[::1, :] m2, double[:, ::1] coeffs, double h):
    """Classical Runge-Kutta stepping from S = I.

    ``coeffs[k]`` holds (s, v1, v2) at the start, midpoint and end of step k.
    """
    cdef int n = omega.shape[0], k, i, j
    cdef int steps = coeffs.shape[0]
    cdef _Workspace w = _Workspace(n)
    out = np.asfortranarray(np.eye(n, dtype=complex))
    cdef cplx[::1, :] S = out
    with nogil:
        for k in range(steps):
            build_generator(w.g1, omega, m1, m2, coeffs[k, 0], coeffs[k, 1], coeffs[k, 2])
            build_generator(w.g2, omega, m1, m2, coeffs[k, 3], coeffs[k, 4], coeffs[k, 5])
            gemm(n, 1.0, &w.g1[0, 0], &S[0, 0], 0.0, &w.k1[0, 0])
            for j in range(n):
                for i in range(n):
                    w.s2[i, j] = S[i, j] + 0.5 * h * w.k1[i, j]
            gemm(n, 1.0, &w.g2[0, 0], &w.s2[0, 0], 0.0, &w.k2[0, 0])
            for j in range(n):
                for i in range(n):
                    w.s2[i, j] = S[i, j] + 0.5 * h * w.k2[i, j]
            gemm(n, 1.0, &w.g2[0, 0], &w.s2[0, 0], 0.0, &w.k3[0, 0])
            for j in range(n):
                for i in range(n):
                    w.s2[i, j] = S[i, j] + h * w.k3[i, j]
            build_generator(w.g1, omega, m1, m2, coeffs[k, 6], coeffs[k, 7], coeffs[k, 8])
            gemm(n, 1.0, &w.g1[0, 0], &w.s2[0, 0], 0.0, &w.k4[0, 0])
            for j in range(n):
                for i in range(n):
                    S[i, j] = S[i, j] + (h / 6.0) * (w.k1[i, j] + 2.0 * w.k2[i, j] + 2.0 * w.k3[i, j] + w.k4[i, j])
    return out
