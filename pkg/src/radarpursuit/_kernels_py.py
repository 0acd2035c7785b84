"""Vectorized numpy fallback for the hot selection kernels.

Same call signatures and tie/exclusion semantics as the compiled module
radarpursuit._kernels: ties resolve to the smallest index, excluded
entries are skipped, all-excluded inputs return index 0 with score -1.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_RIDGE_FLOOR = 1e-300


def select_max_abs_corr(atoms_conj, residual, excluded):
    """argmax_n |<atom_n, residual>| over rows of the conjugated dictionary.

    atoms_conj: (N, M) complex, row n = conj(atom_n); residual: (M,);
    excluded: (N,) uint8 mask.  Returns (n, score).
    """
    corr = np.abs(atoms_conj @ residual)
    if excluded.any():
        corr = np.where(excluded.astype(bool), -1.0, corr)
    n = int(np.argmax(corr))
    return n, float(corr[n])


def select_max_abs_corr_2d(xi_conj_t, resid_matrix, eta_conj, excluded):
    """Separable correlation scan |xi^H R conj(eta)| over all bin pairs.

    xi_conj_t: (Nr, Ms); resid_matrix: (Ms, Mc); eta_conj: (Mc, Nv);
    excluded: (Nr*Nv,) uint8 in linear order n = nv*Nr + nr.  The product
    is staged so the final (dominant) contraction runs over min(Ms, Mc).
    Returns (linear n, score).
    """
    ms, mc = resid_matrix.shape
    if ms <= mc:
        corr = xi_conj_t @ (resid_matrix @ eta_conj)
    else:
        corr = (xi_conj_t @ resid_matrix) @ eta_conj
    mag = np.abs(corr).T.reshape(-1)  # linear order nv*Nr + nr
    if excluded.any():
        mag = np.where(excluded.astype(bool), -1.0, mag)
    n = int(np.argmax(mag))
    return n, float(mag[n])


def _gain_with_ridge(gram, f, ridge_rel):
    """Per-node least-squares gain Re(f^H G^-1 f), ridging G on failure."""
    try:
        x = np.linalg.solve(gram, f)
        gain = float(np.real(np.vdot(f, x)))
        if np.isfinite(gain):
            return gain, 0
    except np.linalg.LinAlgError:
        pass
    lam = ridge_rel * float(np.real(np.trace(gram))) + _RIDGE_FLOOR
    try:
        x = np.linalg.solve(gram + lam * np.eye(gram.shape[0]), f)
        gain = float(np.real(np.vdot(f, x)))
    except np.linalg.LinAlgError:
        gain = 0.0
    if not np.isfinite(gain):
        gain = 0.0
    return gain, 1


def full_ls_scan(d1_conj, d2_conj, d3_conj, residual, grams, ridge_rel,
                 excluded):
    """Per-node order-1 least-squares objective scan.

    Maximizes the explained energy Re(f_n^H G_n^-1 f_n) where f_n stacks
    the three interpolant correlations with the residual and G_n is the
    node Gram block; equivalently minimizes the per-node LS residual.
    Returns (n, gain, number of ridge-regularized nodes).
    """
    nn = d1_conj.shape[0]
    f = np.empty((nn, 3), dtype=np.complex128)
    f[:, 0] = d1_conj @ residual
    f[:, 1] = d2_conj @ residual
    f[:, 2] = d3_conj @ residual
    ridge_count = 0
    try:
        x = np.linalg.solve(grams, f[:, :, None])[:, :, 0]
        gains = np.real(np.einsum("ni,ni->n", np.conj(f), x))
        bad = ~np.isfinite(gains)
        if bad.any():
            for i in np.nonzero(bad)[0]:
                gains[i], r = _gain_with_ridge(grams[i], f[i], ridge_rel)
                ridge_count += r
    except np.linalg.LinAlgError:
        gains = np.empty(nn)
        for i in range(nn):
            gains[i], r = _gain_with_ridge(grams[i], f[i], ridge_rel)
            ridge_count += r
    if excluded.any():
        gains = np.where(excluded.astype(bool), -1.0, gains)
    n = int(np.argmax(gains))
    return n, float(gains[n]), ridge_count
