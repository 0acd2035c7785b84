"""Compare the compiled and numpy kernel backends.

Times the three selection kernels on a dense dictionary and the four
solvers end to end, then prints one table per section with the speedup
of the compiled path.  Runs with the numpy backend alone when the
compiled extension is not built.

Usage: python3 benchmarks/backend_bench.py [--repeats N] [--solves N]
"""
import argparse
import time

import numpy as np

from radarpursuit import backend
from radarpursuit.dictionary import GridSpec, TaylorDictionary, build_grid
from radarpursuit.evaluation import sample_scene
from radarpursuit.signal import RadarConfig, synthesize
from radarpursuit.solvers import RIDGE_REL, SolverOptions, solve

BASE = dict(f0=24e9, B=200e6, Ts=5e-6)


def best_of(fn, repeats: int, inner: int) -> float:
    """Best mean seconds per call over repeats batches of inner calls."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def time_kernels(repeats: int) -> list[tuple[str, dict[str, float]]]:
    cfg = RadarConfig(Ms=16, Mc=16, **BASE)
    dic = TaylorDictionary(cfg, build_grid(cfg, 64, 64))
    cdic = TaylorDictionary(cfg, build_grid(cfg, 64, 64, coupled=True))
    rng = np.random.default_rng(7)
    resid = np.ascontiguousarray(rng.standard_normal(cfg.M)
                                 + 1j * rng.standard_normal(cfg.M))
    matrix = np.ascontiguousarray(rng.standard_normal((cfg.Ms, cfg.Mc))
                                  + 1j * rng.standard_normal((cfg.Ms, cfg.Mc)))
    excluded = np.zeros(dic.grid.num_nodes, dtype=np.uint8)
    atoms_c = dic.atom_rows_conj()
    d2c, d3c = dic.deriv_rows_conj()
    grams = dic.node_grams()
    subs = cdic.sub_atoms()
    cases = [
        ("correlation scan (4096 atoms)",
         lambda mod: mod.select_max_abs_corr(atoms_c, resid, excluded)),
        ("factorized scan (64 x 64)",
         lambda mod: mod.select_max_abs_corr_2d(subs.xi1_conj_t, matrix,
                                                subs.eta1_conj, excluded)),
        ("per-node LS scan (4096 nodes)",
         lambda mod: mod.full_ls_scan(atoms_c, d2c, d3c, resid, grams,
                                      RIDGE_REL, excluded)),
    ]
    rows = []
    for label, call in cases:
        timings = {}
        for name in backend.available():
            mod = backend._resolve(name)
            inner = 50 if "LS" not in label else 5
            timings[name] = best_of(lambda: call(mod), repeats, inner)
        rows.append((label, timings))
    return rows


def time_solvers(repeats: int, solves: int) -> list[tuple[str, dict[str, float]]]:
    cfg = RadarConfig(Ms=16, Mc=16, **BASE)
    spec = GridSpec(32, 32)
    measurements = [synthesize(cfg, sample_scene(cfg, 5, (11, i)))
                    for i in range(solves)]
    rows = []
    restore = backend.active_name()
    try:
        for algorithm in ("omp", "comp", "f_omp", "f_comp"):
            coupled = algorithm.startswith("f_")
            dic = TaylorDictionary(
                cfg, build_grid(cfg, spec.num_range_bins, spec.num_speed_bins,
                                coupled=coupled))
            opts = SolverOptions(num_targets=5)
            timings = {}
            for name in backend.available():
                backend.use(name)

                def run_all():
                    for meas in measurements:
                        solve(meas, dic, opts, algorithm)

                timings[name] = best_of(run_all, repeats, 1) / solves
            rows.append((algorithm, timings))
    finally:
        backend.use(restore)
    return rows


def print_table(title: str, rows) -> None:
    names = backend.available()
    header = f"{title:<32}" + "".join(f"{n:>12}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, timings in rows:
        line = f"{label:<32}"
        for n in names:
            line += f"{timings[n] * 1e3:>10.3f}ms"
        if len(names) > 1:
            line += f"{timings['python'] / timings['cython']:>9.1f}x"
        print(line)
    print()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing batches per case (best is kept)")
    parser.add_argument("--solves", type=int, default=20,
                        help="measurements per end-to-end solver timing")
    args = parser.parse_args()
    if "cython" not in backend.available():
        print("compiled backend not built; timing the numpy backend only\n")
    print_table("kernel (per call)", time_kernels(args.repeats))
    print_table("solver (per measurement)",
                time_solvers(args.repeats, args.solves))


if __name__ == "__main__":
    main()
