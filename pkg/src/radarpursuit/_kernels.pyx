# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled selection kernels.

Call signatures and tie/exclusion semantics match the numpy fallback
radarpursuit._kernels_py: ties resolve to the smallest index, excluded
entries are skipped, all-excluded inputs return index 0 with score -1.
The scans here fuse the correlation, masking and argmax passes so no
(num_nodes,)-sized temporaries are built.
"""
import numpy as np

from libc.math cimport hypot, isfinite

BACKEND_NAME = "cython"

cdef double RIDGE_FLOOR = 1e-300


def select_max_abs_corr(atoms_conj, residual, excluded):
    """argmax_n |<atom_n, residual>| over rows of the conjugated dictionary.

    atoms_conj: (N, M) complex, row n = conj(atom_n); residual: (M,);
    excluded: (N,) uint8 mask.  Returns (n, score).
    """
    cdef double complex[:, ::1] a = np.ascontiguousarray(
        atoms_conj, dtype=np.complex128)
    cdef double complex[::1] r = np.ascontiguousarray(
        residual, dtype=np.complex128)
    cdef const unsigned char[::1] ex = np.ascontiguousarray(
        excluded, dtype=np.uint8)
    cdef Py_ssize_t num_nodes = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    if r.shape[0] != m or ex.shape[0] != num_nodes:
        raise ValueError("kernel input shapes do not agree")
    cdef Py_ssize_t n, i, best = 0
    cdef double best_score = -1.0
    cdef double score
    cdef double complex acc
    with nogil:
        for n in range(num_nodes):
            if ex[n]:
                continue
            acc = 0
            for i in range(m):
                acc = acc + a[n, i] * r[i]
            score = hypot(acc.real, acc.imag)
            if score > best_score:
                best_score = score
                best = n
    return int(best), float(best_score)


def select_max_abs_corr_2d(xi_conj_t, resid_matrix, eta_conj, excluded):
    """Separable correlation scan |xi^H R conj(eta)| over all bin pairs.

    xi_conj_t: (Nr, Ms); resid_matrix: (Ms, Mc); eta_conj: (Mc, Nv);
    excluded: (Nr*Nv,) uint8 in linear order n = nv*Nr + nr.  The product
    is staged so the per-pair contraction runs over min(Ms, Mc).
    Returns (linear n, score).
    """
    cdef Py_ssize_t ms = resid_matrix.shape[0]
    cdef Py_ssize_t mc = resid_matrix.shape[1]
    resid = np.asarray(resid_matrix, dtype=np.complex128)
    if ms <= mc:
        left = np.ascontiguousarray(xi_conj_t, dtype=np.complex128)
        right_t = np.ascontiguousarray(
            (resid @ np.asarray(eta_conj, dtype=np.complex128)).T)
    else:
        left = np.ascontiguousarray(
            np.asarray(xi_conj_t, dtype=np.complex128) @ resid)
        right_t = np.ascontiguousarray(
            np.asarray(eta_conj, dtype=np.complex128).T)
    cdef double complex[:, ::1] lv = left
    cdef double complex[:, ::1] rv = right_t
    cdef const unsigned char[::1] ex = np.ascontiguousarray(
        excluded, dtype=np.uint8)
    cdef Py_ssize_t n_r = lv.shape[0]
    cdef Py_ssize_t n_v = rv.shape[0]
    cdef Py_ssize_t kdim = lv.shape[1]
    if rv.shape[1] != kdim or ex.shape[0] != n_r * n_v:
        raise ValueError("kernel input shapes do not agree")
    cdef Py_ssize_t nr, nv, k, n, best = 0
    cdef double best_score = -1.0
    cdef double score
    cdef double complex acc
    with nogil:
        for nv in range(n_v):
            for nr in range(n_r):
                n = nv * n_r + nr
                if ex[n]:
                    continue
                acc = 0
                for k in range(kdim):
                    acc = acc + lv[nr, k] * rv[nv, k]
                score = hypot(acc.real, acc.imag)
                if score > best_score:
                    best_score = score
                    best = n
    return int(best), float(best_score)


cdef inline int _solve3(double complex* g, double complex* b,
                        double complex* x) noexcept nogil:
    """Partial-pivot Gaussian elimination on a row-major 3x3 system.

    Overwrites g and b.  Returns 1 on an exactly zero pivot.
    """
    cdef Py_ssize_t k, i, j, p
    cdef double best, mag
    cdef double complex factor, tmp
    for k in range(3):
        p = k
        best = hypot(g[3 * k + k].real, g[3 * k + k].imag)
        for i in range(k + 1, 3):
            mag = hypot(g[3 * i + k].real, g[3 * i + k].imag)
            if mag > best:
                best = mag
                p = i
        if best == 0.0:
            return 1
        if p != k:
            for j in range(3):
                tmp = g[3 * k + j]
                g[3 * k + j] = g[3 * p + j]
                g[3 * p + j] = tmp
            tmp = b[k]
            b[k] = b[p]
            b[p] = tmp
        for i in range(k + 1, 3):
            factor = g[3 * i + k] / g[3 * k + k]
            for j in range(k + 1, 3):
                g[3 * i + j] = g[3 * i + j] - factor * g[3 * k + j]
            b[i] = b[i] - factor * b[k]
    for k in range(2, -1, -1):
        tmp = b[k]
        for j in range(k + 1, 3):
            tmp = tmp - g[3 * k + j] * x[j]
        x[k] = tmp / g[3 * k + k]
    return 0


def full_ls_scan(d1_conj, d2_conj, d3_conj, residual, grams, ridge_rel,
                 excluded):
    """Per-node order-1 least-squares objective scan.

    Maximizes the explained energy Re(f_n^H G_n^-1 f_n) where f_n stacks
    the three interpolant correlations with the residual and G_n is the
    node Gram block.  Grams that hit a zero pivot or a non-finite gain
    are retried once with a relative ridge; gains are computed for every
    node (masking applies to the argmax only) so the ridge count matches
    the fallback backend.  Returns (n, gain, ridge count).
    """
    res = np.ascontiguousarray(residual, dtype=np.complex128)
    nn_py = np.asarray(d1_conj).shape[0]
    f_arr = np.empty((nn_py, 3), dtype=np.complex128)
    f_arr[:, 0] = np.asarray(d1_conj) @ res
    f_arr[:, 1] = np.asarray(d2_conj) @ res
    f_arr[:, 2] = np.asarray(d3_conj) @ res
    cdef double complex[:, ::1] fv = f_arr
    cdef double complex[:, :, ::1] gv = np.ascontiguousarray(
        grams, dtype=np.complex128)
    cdef const unsigned char[::1] ex = np.ascontiguousarray(
        excluded, dtype=np.uint8)
    cdef Py_ssize_t nn = fv.shape[0]
    if (gv.shape[0] != nn or gv.shape[1] != 3 or gv.shape[2] != 3
            or ex.shape[0] != nn):
        raise ValueError("kernel input shapes do not agree")
    cdef double rr = ridge_rel
    cdef Py_ssize_t n, i, j, best = 0
    cdef int ridge_count = 0
    cdef int fail
    cdef double best_gain = -1.0
    cdef double gain, lam, val
    cdef double complex g[9]
    cdef double complex b[3]
    cdef double complex x[3]
    with nogil:
        for n in range(nn):
            for i in range(3):
                b[i] = fv[n, i]
                for j in range(3):
                    g[3 * i + j] = gv[n, i, j]
            fail = _solve3(g, b, x)
            gain = 0.0
            if fail == 0:
                for i in range(3):
                    gain = gain + fv[n, i].real * x[i].real \
                        + fv[n, i].imag * x[i].imag
            if fail != 0 or not isfinite(gain):
                lam = rr * (gv[n, 0, 0].real + gv[n, 1, 1].real
                            + gv[n, 2, 2].real) + RIDGE_FLOOR
                for i in range(3):
                    b[i] = fv[n, i]
                    for j in range(3):
                        g[3 * i + j] = gv[n, i, j]
                    g[3 * i + i] = g[3 * i + i] + lam
                fail = _solve3(g, b, x)
                gain = 0.0
                if fail == 0:
                    for i in range(3):
                        gain = gain + fv[n, i].real * x[i].real \
                            + fv[n, i].imag * x[i].imag
                    if not isfinite(gain):
                        gain = 0.0
                ridge_count += 1
            val = -1.0 if ex[n] else gain
            if val > best_gain:
                best_gain = val
                best = n
    return int(best), float(best_gain), ridge_count
