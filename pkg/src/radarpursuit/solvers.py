"""Greedy sparse recovery over Taylor dictionaries.

Four algorithms share one greedy loop: pick the best-matching grid node,
re-fit all coefficients jointly by least squares, update the residual,
repeat K times, then map coefficients to parameter estimates.

  omp     exact atoms, on-grid (first-order interpolant only)
  comp    exact atoms plus derivative interpolants; per-pick off-grid
          correction recovers continuous (r, v)
  f_omp   rank-1 sub-atom model on a coupled-range grid, on-grid
  f_comp  rank-1 model with derivative sub-atoms and off-grid correction

The on-grid variants are the single-interpolant special case of their
corrected counterparts.  Factorized estimates live on the (r', v) axes
with r' = r + gamma*v; final range estimates subtract gamma*v_hat.

The off-grid correction solves min_{alpha, dr, dv} |alpha*(1, dr, dv) -
beta| by alternating the closed-form updates

    alpha = (b1 + b2*dr + b3*dv) / (1 + dr^2 + dv^2)
    dr    = Re(b2 / alpha),   dv = Re(b3 / alpha)

from dr = dv = 0 until the deviations settle.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .dictionary import ParamGrid, TaylorDictionary
from .signal import Measurement

ALGORITHMS = ("omp", "comp", "f_omp", "f_comp")
INDEX_SELECTIONS = ("simplified", "full")

# relative ridge applied to a rank-deficient normal matrix
RIDGE_REL = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    num_targets: int
    index_selection: str = "simplified"
    correction_max_iters: int = 50
    correction_tol: float = 1e-10
    clamp_deviations: bool = True

    def __post_init__(self) -> None:
        if self.num_targets < 1:
            raise ValueError("num_targets must be at least 1")
        if self.index_selection not in INDEX_SELECTIONS:
            raise ValueError(
                f"unknown index_selection {self.index_selection!r}")
        if self.correction_max_iters < 1:
            raise ValueError("correction_max_iters must be at least 1")
        if not self.correction_tol > 0.0:
            raise ValueError("correction_tol must be positive")


@dataclass(frozen=True)
class CorrectionResult:
    alpha: complex
    delta_r: float
    delta_v: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class PickedAtom:
    node: int
    node_rv: tuple[int, int]
    beta: np.ndarray
    selection_score: float
    zero_correlation: bool


@dataclass(frozen=True)
class Estimate:
    r_hat: float
    v_hat: float
    alpha_hat: complex
    source: PickedAtom
    correction: CorrectionResult | None = None


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    node: int
    node_rv: tuple[int, int]
    selection_score: float
    zero_correlation: bool
    residual_norm: float
    ridge_events: int


@dataclass(frozen=True)
class SolverReport:
    algorithm: str
    backend: str
    estimates: tuple[Estimate, ...]
    residual_norm: float
    wall_time: float
    iterations: tuple[IterationRecord, ...]


def _order_of(algorithm: str) -> tuple[int, bool]:
    """(number of interpolants used, factorized path flag)."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; "
                         f"expected one of {ALGORITHMS}")
    factorized = algorithm.startswith("f_")
    order = 1 if algorithm in ("omp", "f_omp") else 3
    return order, factorized


def select_index_simplified(residual: np.ndarray, dic: TaylorDictionary,
                            excluded: np.ndarray | None = None
                            ) -> tuple[int, float, bool]:
    """Best node by first-order correlation magnitude |<d1[n], residual>|.

    Ties resolve to the smaller node index.  Returns (n, score, flag)
    where flag marks an all-zero correlation (degenerate residual).
    """
    if excluded is None:
        excluded = np.zeros(dic.grid.num_nodes, dtype=np.uint8)
    n, score = backend.active().select_max_abs_corr(
        dic.atom_rows_conj(), np.ascontiguousarray(residual), excluded)
    return n, score, score <= 0.0


def select_index_full(residual: np.ndarray, dic: TaylorDictionary,
                      excluded: np.ndarray | None = None
                      ) -> tuple[int, float, bool, int]:
    """Best node by the full per-node least-squares objective over all
    three interpolants.  Returns (n, gain, zero_flag, ridge_events)."""
    if excluded is None:
        excluded = np.zeros(dic.grid.num_nodes, dtype=np.uint8)
    d2c, d3c = dic.deriv_rows_conj()
    n, gain, ridged = backend.active().full_ls_scan(
        dic.atom_rows_conj(), d2c, d3c, np.ascontiguousarray(residual),
        dic.node_grams(), RIDGE_REL, excluded)
    return n, gain, gain <= 0.0, ridged


def select_index_factorized(resid_matrix: np.ndarray, dic: TaylorDictionary,
                            excluded: np.ndarray | None = None
                            ) -> tuple[tuple[int, int], float, bool]:
    """Best (range bin, speed bin) by separable first-order correlation.

    Equals select_index_simplified run on the vectorized rank-1 atom
    dictionary; cost scales with num_nodes * min(Ms, Mc).
    """
    if excluded is None:
        excluded = np.zeros(dic.grid.num_nodes, dtype=np.uint8)
    subs = dic.sub_atoms()
    n, score = backend.active().select_max_abs_corr_2d(
        subs.xi1_conj_t, np.ascontiguousarray(resid_matrix), subs.eta1_conj,
        excluded)
    nr, nv = dic.grid.split_index(n)
    return (nr, nv), score, score <= 0.0


def _check_duplicate_picks(picks) -> None:
    if len(set(picks)) != len(picks):
        raise ValueError("duplicate picks yield identical columns and a "
                         "singular joint system")


def _ls_columns(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, int]:
    """Least squares beta for A @ beta ~ y; ridge on rank deficiency."""
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        warnings.warn("rank-deficient joint least squares; applying ridge",
                      RuntimeWarning, stacklevel=3)
        g = A.conj().T @ A
        lam = RIDGE_REL * float(np.real(np.trace(g))) + 1e-300
        beta = np.linalg.solve(g + lam * np.eye(g.shape[0]), A.conj().T @ y)
        return beta, 1
    return beta, 0


def joint_ls_exact(dic: TaylorDictionary, y: np.ndarray, picks,
                   order: int = 3) -> list[np.ndarray]:
    """Joint least-squares coefficients over the interpolants of all picked
    nodes (exact path).  Returns one (order,) beta vector per pick."""
    picks = list(picks)
    _check_duplicate_picks(picks)
    cols = [np.column_stack(dic.interpolants(n)[:order]) for n in picks]
    beta, _ = _ls_columns(np.hstack(cols), y)
    return [beta[i * order:(i + 1) * order] for i in range(len(picks))]


def _factorized_beta(xi_cols: np.ndarray, eta_cols: np.ndarray,
                     matrix: np.ndarray) -> tuple[np.ndarray, int]:
    """Solve the factorized normal equations H beta = f where H is the
    entrywise product of the xi and eta Gram matrices."""
    h = (xi_cols.conj().T @ xi_cols) * (eta_cols.conj().T @ eta_cols)
    f = np.einsum("sc,sm,mc->c", xi_cols.conj(), matrix, eta_cols.conj())
    try:
        beta = np.linalg.solve(h, f)
        if np.all(np.isfinite(beta)):
            return beta, 0
    except np.linalg.LinAlgError:
        pass
    warnings.warn("singular factorized normal matrix; applying ridge",
                  RuntimeWarning, stacklevel=3)
    lam = RIDGE_REL * float(np.real(np.trace(h))) + 1e-300
    beta = np.linalg.solve(h + lam * np.eye(h.shape[0]), f)
    return beta, 1


def joint_ls_factorized(dic: TaylorDictionary, matrix: np.ndarray, picks,
                        order: int = 3) -> list[np.ndarray]:
    """Joint least squares over rank-1 interpolants of picked (nr, nv)
    pairs, computed from the small sub-atom Gram matrices instead of the
    length-M columns.  Matches joint_ls_exact on the vectorized model."""
    picks = list(picks)
    _check_duplicate_picks(picks)
    xi_cols, eta_cols = [], []
    for nr, nv in picks:
        xis, etas = dic.factorized_node(nr, nv)
        xi_cols.extend(xis[:order])
        eta_cols.extend(etas[:order])
    beta, _ = _factorized_beta(np.column_stack(xi_cols),
                               np.column_stack(eta_cols), matrix)
    return [beta[i * order:(i + 1) * order] for i in range(len(picks))]


def correct_offgrid(beta: np.ndarray, options: SolverOptions
                    ) -> CorrectionResult:
    """Map an interpolation coefficient triple to (alpha, delta_r, delta_v).

    Alternates the closed-form amplitude and deviation updates from zero
    deviation until the deviations move less than correction_tol.  With
    clamp_deviations the deviations are kept inside half a cell.  A zero
    leading coefficient falls back to the on-grid solution.
    """
    b1, b2, b3 = (complex(beta[0]), complex(beta[1]), complex(beta[2]))
    if b1 == 0:
        return CorrectionResult(b1, 0.0, 0.0, 0, True)
    dr = dv = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, options.correction_max_iters + 1):
        alpha = (b1 + b2 * dr + b3 * dv) / (1.0 + dr * dr + dv * dv)
        if alpha == 0:
            break
        ndr = (b2 / alpha).real
        ndv = (b3 / alpha).real
        if options.clamp_deviations:
            ndr = min(max(ndr, -0.5), 0.5)
            ndv = min(max(ndv, -0.5), 0.5)
        step = max(abs(ndr - dr), abs(ndv - dv))
        dr, dv = ndr, ndv
        if step < options.correction_tol:
            converged = True
            break
    alpha = (b1 + b2 * dr + b3 * dv) / (1.0 + dr * dr + dv * dv)
    return CorrectionResult(alpha, dr, dv, iterations, converged)


def _as_views(measurement, dic: TaylorDictionary
              ) -> tuple[np.ndarray, np.ndarray]:
    cfg = dic.cfg
    if isinstance(measurement, Measurement):
        if measurement.Ms != cfg.Ms or measurement.Mc != cfg.Mc:
            raise ValueError("measurement shape does not match the config")
        return measurement.samples, measurement.matrix
    arr = np.asarray(measurement, dtype=np.complex128)
    if arr.ndim == 1:
        if arr.size != cfg.M:
            raise ValueError(f"expected {cfg.M} samples, got {arr.size}")
        return arr, arr.reshape(cfg.Mc, cfg.Ms).T
    if arr.ndim == 2:
        if arr.shape != (cfg.Ms, cfg.Mc):
            raise ValueError(
                f"expected shape {(cfg.Ms, cfg.Mc)}, got {arr.shape}")
        return arr.T.reshape(-1), arr
    raise ValueError("measurement must be a vector or an (Ms, Mc) matrix")


def _solve_exact(y: np.ndarray, dic: TaylorDictionary, opts: SolverOptions,
                 order: int) -> tuple[list, list, np.ndarray]:
    grid = dic.grid
    n_nodes = grid.num_nodes
    use_full = opts.index_selection == "full" and order == 3
    excluded = np.zeros(n_nodes, dtype=np.uint8)
    residual = y.astype(np.complex128, copy=True)
    picks: list[int] = []
    records: list[IterationRecord] = []
    cols: list[np.ndarray] = []
    beta = np.zeros(0, dtype=np.complex128)
    for k in range(opts.num_targets):
        ridge_events = 0
        if use_full:
            n, score, zero_flag, ridge_events = select_index_full(
                residual, dic, excluded)
        else:
            n, score, zero_flag = select_index_simplified(
                residual, dic, excluded)
        excluded[n] = 1
        picks.append(n)
        cols.append(np.column_stack(dic.interpolants(n)[:order]))
        beta, ls_ridged = _ls_columns(np.hstack(cols), y)
        residual = y - np.hstack(cols) @ beta
        records.append(IterationRecord(
            iteration=k, node=n, node_rv=grid.split_index(n),
            selection_score=score, zero_correlation=zero_flag,
            residual_norm=float(np.linalg.norm(residual)),
            ridge_events=ridge_events + ls_ridged))
    betas = [beta[i * order:(i + 1) * order] for i in range(len(picks))]
    estimates = []
    for n, b, rec in zip(picks, betas, records):
        rb, vb = grid.node(n)
        pick = PickedAtom(node=n, node_rv=grid.split_index(n),
                          beta=b.copy(),
                          selection_score=rec.selection_score,
                          zero_correlation=rec.zero_correlation)
        if order == 3:
            corr = correct_offgrid(b, opts)
            r_hat = rb + grid.range_norm * corr.delta_r
            v_hat = vb + grid.speed_norm * corr.delta_v
            estimates.append(Estimate(r_hat, v_hat, corr.alpha, pick, corr))
        else:
            estimates.append(Estimate(rb, vb, complex(b[0]), pick, None))
    return estimates, records, residual


def _solve_factorized(Y: np.ndarray, dic: TaylorDictionary,
                      opts: SolverOptions, order: int
                      ) -> tuple[list, list, np.ndarray]:
    grid = dic.grid
    gamma = dic.cfg.gamma
    excluded = np.zeros(grid.num_nodes, dtype=np.uint8)
    target = np.ascontiguousarray(Y)
    residual = target.copy()
    picks: list[tuple[int, int]] = []
    records: list[IterationRecord] = []
    xi_cols: list[np.ndarray] = []
    eta_cols: list[np.ndarray] = []
    beta = np.zeros(0, dtype=np.complex128)
    for k in range(opts.num_targets):
        (nr, nv), score, zero_flag = select_index_factorized(
            residual, dic, excluded)
        n = grid.linear_index(nr, nv)
        excluded[n] = 1
        picks.append((nr, nv))
        xis, etas = dic.factorized_node(nr, nv)
        xi_cols.extend(xis[:order])
        eta_cols.extend(etas[:order])
        xi_mat = np.column_stack(xi_cols)
        eta_mat = np.column_stack(eta_cols)
        beta, ridged = _factorized_beta(xi_mat, eta_mat, target)
        residual = np.ascontiguousarray(
            target - (xi_mat * beta[None, :]) @ eta_mat.T)
        records.append(IterationRecord(
            iteration=k, node=n, node_rv=(nr, nv), selection_score=score,
            zero_correlation=zero_flag,
            residual_norm=float(np.linalg.norm(residual)),
            ridge_events=ridged))
    betas = [beta[i * order:(i + 1) * order] for i in range(len(picks))]
    estimates = []
    for (nr, nv), b, rec in zip(picks, betas, records):
        rb = float(grid.range_bins[nr])
        vb = float(grid.speed_bins[nv])
        pick = PickedAtom(node=grid.linear_index(nr, nv), node_rv=(nr, nv),
                          beta=b.copy(), selection_score=rec.selection_score,
                          zero_correlation=rec.zero_correlation)
        if order == 3:
            corr = correct_offgrid(b, opts)
            r_coupled = rb + grid.range_norm * corr.delta_r
            v_hat = vb + grid.speed_norm * corr.delta_v
            estimates.append(Estimate(r_coupled - gamma * v_hat, v_hat,
                                      corr.alpha, pick, corr))
        else:
            estimates.append(Estimate(rb - gamma * vb, vb, complex(b[0]),
                                      pick, None))
    return estimates, records, residual


def solve(measurement, dic: TaylorDictionary, options: SolverOptions,
          algorithm: str) -> SolverReport:
    """Run one greedy recovery pass and return estimates plus diagnostics.

    measurement may be a Measurement, a length-M sample vector or an
    (Ms, Mc) matrix.  Wall time covers the whole call.
    """
    t0 = time.perf_counter()
    order, factorized = _order_of(algorithm)
    opts = options
    if opts.num_targets * order > dic.cfg.M:
        raise ValueError("num_targets * interpolants exceeds the number of "
                         "samples; the joint system would be underdetermined")
    if opts.num_targets > dic.grid.num_nodes:
        raise ValueError("num_targets exceeds the number of grid nodes")
    if factorized and opts.index_selection == "full":
        raise ValueError("full index selection is only defined for the "
                         "exact-model algorithms")
    y, Y = _as_views(measurement, dic)
    if factorized:
        estimates, records, residual = _solve_factorized(Y, dic, opts, order)
        final_norm = float(np.linalg.norm(residual))
    else:
        estimates, records, residual = _solve_exact(y, dic, opts, order)
        final_norm = float(np.linalg.norm(residual))
    wall = time.perf_counter() - t0
    return SolverReport(algorithm=algorithm, backend=backend.active_name(),
                        estimates=tuple(estimates),
                        residual_norm=final_norm, wall_time=wall,
                        iterations=tuple(records))
