"""Parameter grids and the order-1 Taylor atom dictionary.

A dictionary node n = nv*Nr + nr carries three interpolants per signal
model family:

  exact path       d1 = a(node),  d2 = Rn * da/dr,  d3 = Vn * da/dv
  factorized path  D^i = outer(xi_i, eta_i) with
                   xi = (psi, Rn*psi', psi),  eta = (phi, phi, Vn*phi')

where (Rn, Vn) are the per-axis normalization lengths.  A parameter pair
at deviation (dr, dv) grid cells from the node is then approximated by
alpha * (d1 + dr*d2 + dv*d3), the order-1 Taylor expansion whose residual
decays quadratically in each deviation.

Grids are uniform with bins centered inside the covered interval (offset
half a step from each edge).  The factorized solvers index their range
axis by the coupled range r' = r + gamma*v, so their grid covers the
slightly wider r' span (build_grid(..., coupled=True)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal import (
    RadarConfig,
    _phase_rates,
    atom_phase_gradients,
    exact_atom,
    exact_atom_batch,
    range_sub_atom,
    range_sub_atom_deriv,
    speed_sub_atom,
    speed_sub_atom_deriv,
)

NORMALIZATIONS = ("grid_step", "resolution")


@dataclass(frozen=True)
class GridSpec:
    """Requested grid shape, independent of any particular RadarConfig."""

    num_range_bins: int
    num_speed_bins: int
    normalization: str = "grid_step"

    def __post_init__(self) -> None:
        if self.num_range_bins < 2 or self.num_speed_bins < 2:
            raise ValueError("grids need at least 2 bins per axis")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True, eq=False)
class ParamGrid:
    """Uniform separable (range-like, speed) grid, node order n = nv*Nr + nr.

    coupled=True means the range axis holds coupled ranges r' = r+gamma*v.
    range_norm / speed_norm are the lengths used to express deviations in
    dimensionless cells.
    """

    range_bins: np.ndarray
    speed_bins: np.ndarray
    range_step: float
    speed_step: float
    range_norm: float
    speed_norm: float
    coupled: bool = False

    @property
    def num_range_bins(self) -> int:
        return self.range_bins.size

    @property
    def num_speed_bins(self) -> int:
        return self.speed_bins.size

    @property
    def num_nodes(self) -> int:
        return self.range_bins.size * self.speed_bins.size

    def linear_index(self, nr: int, nv: int) -> int:
        if not (0 <= nr < self.num_range_bins):
            raise IndexError(f"range bin {nr} out of range")
        if not (0 <= nv < self.num_speed_bins):
            raise IndexError(f"speed bin {nv} out of range")
        return nv * self.num_range_bins + nr

    def split_index(self, n: int) -> tuple[int, int]:
        if not (0 <= n < self.num_nodes):
            raise IndexError(f"node {n} out of range")
        return n % self.num_range_bins, n // self.num_range_bins

    def node(self, n: int) -> tuple[float, float]:
        nr, nv = self.split_index(n)
        return float(self.range_bins[nr]), float(self.speed_bins[nv])


def _bin_centers(lo: float, hi: float, count: int) -> tuple[np.ndarray, float]:
    step = (hi - lo) / count
    return lo + step * (np.arange(count) + 0.5), step


def build_grid(cfg: RadarConfig, num_range_bins: int, num_speed_bins: int,
               normalization: str = "grid_step",
               coupled: bool = False) -> ParamGrid:
    """Uniform grid over the admissible parameter domain.

    The range axis covers (0, max_range], or the wider coupled-range span
    when coupled=True; the speed axis covers (-max_speed, max_speed].
    normalization picks the deviation unit: "grid_step" uses the bin steps,
    "resolution" uses (range_resolution, speed_resolution).
    """
    if num_range_bins < 2 or num_speed_bins < 2:
        raise ValueError("grids need at least 2 bins per axis")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    if coupled:
        r_lo, r_hi = cfg.coupled_range_bounds()
    else:
        r_lo, r_hi = 0.0, cfg.max_range
    range_bins, range_step = _bin_centers(r_lo, r_hi, num_range_bins)
    speed_bins, speed_step = _bin_centers(-cfg.max_speed, cfg.max_speed,
                                          num_speed_bins)
    if normalization == "grid_step":
        norms = (range_step, speed_step)
    else:
        norms = (cfg.range_resolution, cfg.speed_resolution)
    range_bins.flags.writeable = False
    speed_bins.flags.writeable = False
    return ParamGrid(range_bins, speed_bins, range_step, speed_step,
                     norms[0], norms[1], coupled)


def _axis_nearest(x: float, first: float, step: float, count: int) -> int:
    # round half down so ties go to the smaller bin index
    idx = math.ceil((x - first) / step - 0.5)
    return min(max(idx, 0), count - 1)


def nearest_node(grid: ParamGrid, r: float, v: float) -> int:
    """Node minimizing max(|r - rb|/step_r, |v - vb|/step_v); ties resolve
    to the smaller linear index."""
    nr = _axis_nearest(float(r), float(grid.range_bins[0]), grid.range_step,
                       grid.num_range_bins)
    nv = _axis_nearest(float(v), float(grid.speed_bins[0]), grid.speed_step,
                       grid.num_speed_bins)
    return grid.linear_index(nr, nv)


def mapping_coefficients(grid: ParamGrid, n: int, r: float,
                         v: float) -> np.ndarray:
    """Taylor coefficient triple (1, dr, dv) of (r, v) around node n, with
    deviations expressed in normalization units."""
    rb, vb = grid.node(n)
    return np.array([1.0,
                     (float(r) - rb) / grid.range_norm,
                     (float(v) - vb) / grid.speed_norm])


def exact_interpolants(cfg: RadarConfig, grid: ParamGrid,
                       n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d1, d2, d3) at node n for the exact signal model.

    d1 is the exact atom; d2 and d3 are its partial derivatives along
    range and speed, scaled by the grid normalization lengths.  Entry 0 of
    d2 and d3 is exactly 0 (the first sample carries no phase).
    """
    rb, vb = grid.node(n)
    d1 = exact_atom(cfg, rb, vb)
    dphi_dr, dphi_dv = atom_phase_gradients(cfg, rb, vb)
    d2 = grid.range_norm * (-1j * dphi_dr) * d1
    d3 = grid.speed_norm * (-1j * dphi_dv) * d1
    return d1, d2, d3


def factorized_interpolants(
        cfg: RadarConfig, grid: ParamGrid, nr: int, nv: int
) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray],
           tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Sub-atom triples ((xi1, xi2, xi3), (eta1, eta2, eta3)) at (nr, nv).

    outer(xi_i, eta_i) is the i-th factorized interpolant: xi2 carries the
    scaled psi derivative (eta2 = eta1), eta3 the scaled phi derivative
    (xi3 = xi1).  On a coupled grid the range bin is a coupled range r'.
    """
    if not (0 <= nr < grid.num_range_bins):
        raise IndexError(f"range bin {nr} out of range")
    if not (0 <= nv < grid.num_speed_bins):
        raise IndexError(f"speed bin {nv} out of range")
    rb = float(grid.range_bins[nr])
    vb = float(grid.speed_bins[nv])
    xi1 = range_sub_atom(cfg, rb)
    xi2 = grid.range_norm * range_sub_atom_deriv(cfg, rb)
    eta1 = speed_sub_atom(cfg, vb)
    eta3 = grid.speed_norm * speed_sub_atom_deriv(cfg, vb)
    return (xi1, xi2, xi1), (eta1, eta1, eta3)


@dataclass(frozen=True, eq=False)
class SubAtomMatrices:
    """Column-stacked factorized sub-atoms plus the conjugated layouts the
    selection kernels consume."""

    xi1: np.ndarray        # (Ms, Nr)
    xi2: np.ndarray        # (Ms, Nr)
    eta1: np.ndarray       # (Mc, Nv)
    eta3: np.ndarray       # (Mc, Nv)
    xi1_conj_t: np.ndarray   # (Nr, Ms), C-contiguous
    eta1_conj: np.ndarray    # (Mc, Nv), C-contiguous


class TaylorDictionary:
    """Grid-indexed order-1 Taylor atom family with lazy materialization.

    Exact-path arrays (the full atom matrix, derivative matrices, per-node
    Gram blocks) and factorized-path sub-atom matrices are built on first
    use and cached; repeated access returns identical arrays.
    """

    num_interpolants = 3

    def __init__(self, cfg: RadarConfig, grid: ParamGrid) -> None:
        self.cfg = cfg
        self.grid = grid
        self._atom_rows: np.ndarray | None = None      # (N, M)
        self._atom_rows_conj: np.ndarray | None = None
        self._deriv_rows: tuple[np.ndarray, np.ndarray] | None = None
        self._deriv_rows_conj: tuple[np.ndarray, np.ndarray] | None = None
        self._grams: np.ndarray | None = None
        self._subs: SubAtomMatrices | None = None
        self._node_cache: dict[int, tuple[np.ndarray, ...]] = {}
        self._fact_node_cache: dict[tuple[int, int], tuple] = {}

    def _node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        n = np.arange(self.grid.num_nodes)
        nr = n % self.grid.num_range_bins
        nv = n // self.grid.num_range_bins
        return self.grid.range_bins[nr], self.grid.speed_bins[nv]

    # exact path -----------------------------------------------------------

    def atom_rows(self) -> np.ndarray:
        """(N, M) array with row n holding the exact atom at node n."""
        if self._atom_rows is None:
            r, v = self._node_coords()
            self._atom_rows = exact_atom_batch(self.cfg, r, v)
        return self._atom_rows

    def atom_matrix(self) -> np.ndarray:
        """(M, N) exact first-order dictionary (atoms as columns)."""
        return self.atom_rows().T

    def atom_rows_conj(self) -> np.ndarray:
        if self._atom_rows_conj is None:
            self._atom_rows_conj = np.ascontiguousarray(
                np.conj(self.atom_rows()))
        return self._atom_rows_conj

    def interpolants(self, n: int) -> tuple[np.ndarray, ...]:
        if n not in self._node_cache:
            self._node_cache[n] = exact_interpolants(self.cfg, self.grid, n)
        return self._node_cache[n]

    def deriv_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """(N, M) scaled derivative interpolant rows (d2, d3), lazily built
        for full index selection."""
        if self._deriv_rows is None:
            r, v = self._node_coords()
            d1 = self.atom_rows()
            n = self.grid.num_nodes
            d2 = np.empty_like(d1)
            d3 = np.empty_like(d1)
            for i in range(n):
                gr, gv = atom_phase_gradients(self.cfg, float(r[i]),
                                              float(v[i]))
                d2[i] = self.grid.range_norm * (-1j * gr) * d1[i]
                d3[i] = self.grid.speed_norm * (-1j * gv) * d1[i]
            self._deriv_rows = (d2, d3)
        return self._deriv_rows

    def deriv_rows_conj(self) -> tuple[np.ndarray, np.ndarray]:
        if self._deriv_rows_conj is None:
            d2, d3 = self.deriv_rows()
            self._deriv_rows_conj = (np.ascontiguousarray(np.conj(d2)),
                                     np.ascontiguousarray(np.conj(d3)))
        return self._deriv_rows_conj

    def node_grams(self) -> np.ndarray:
        """(N, 3, 3) Hermitian Gram blocks of the per-node interpolants."""
        if self._grams is None:
            d1 = self.atom_rows()
            d2, d3 = self.deriv_rows()
            rows = (d1, d2, d3)
            n = self.grid.num_nodes
            g = np.empty((n, 3, 3), dtype=np.complex128)
            for i in range(3):
                for j in range(i, 3):
                    gij = np.einsum("nm,nm->n", np.conj(rows[i]), rows[j])
                    g[:, i, j] = gij
                    if i != j:
                        g[:, j, i] = np.conj(gij)
            self._grams = g
        return self._grams

    # factorized path ------------------------------------------------------

    def sub_atoms(self) -> SubAtomMatrices:
        if self._subs is None:
            cfg, grid = self.cfg, self.grid
            kr, kv, _, _ = _phase_rates(cfg)
            ms = np.arange(cfg.Ms).reshape(-1, 1)
            mc = np.arange(cfg.Mc).reshape(-1, 1)
            xi1 = np.exp(-1j * kr * ms * grid.range_bins[None, :])
            xi2 = grid.range_norm * (-1j * kr * ms) * xi1
            eta1 = np.exp(-1j * kv * mc * grid.speed_bins[None, :])
            eta3 = grid.speed_norm * (-1j * kv * mc) * eta1
            self._subs = SubAtomMatrices(
                xi1, xi2, eta1, eta3,
                np.ascontiguousarray(np.conj(xi1.T)),
                np.ascontiguousarray(np.conj(eta1)))
        return self._subs

    def factorized_node(self, nr: int, nv: int) -> tuple:
        key = (nr, nv)
        if key not in self._fact_node_cache:
            self._fact_node_cache[key] = factorized_interpolants(
                self.cfg, self.grid, nr, nv)
        return self._fact_node_cache[key]
