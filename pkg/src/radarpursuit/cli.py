"""Command-line front end: simulate frames, solve them, run benchmarks.

Subcommands:

  simulate --config FILE --out FILE
      Sample a frame of the configured scene and write the measurement
      (plus the ground-truth scene next to it).
  solve --config FILE --input FILE [--truth FILE] --algorithm NAME
      Run one algorithm on a stored measurement and print the estimates.
  bench --preset NAME [--trials T] [--seed S] [--config FILE] --out CSV
      Monte-Carlo accuracy/runtime sweep; presets fig1, fig2, fig3 cover
      the standard grid-density and frame-size studies, custom reads a
      single sweep point from --config.

Config files are flat "key = value" text; '#' starts a comment and
unknown keys are rejected.  All randomness is seeded, so identical
invocations write identical files (timing columns aside).
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, backend
from .dictionary import GridSpec, build_grid, TaylorDictionary
from .evaluation import (
    AggregateResult,
    SweepPoint,
    associate,
    normalized_error,
    run_sweep,
)
from .signal import Measurement, RadarConfig, Scene, Target, synthesize
from .solvers import ALGORITHMS, INDEX_SELECTIONS, SolverOptions, solve

BENCH_COLUMNS = ("experiment", "algorithm", "Nstar", "Ms", "Mc", "trials",
                 "MR", "AHE", "mean_time_s")
RATIO_COLUMNS = ("time_ratio", "MR_ratio", "AHE_ratio")

_BASE_RADAR = {"f0": 24e9, "B": 200e6, "Ts": 5e-6}

PRESETS = ("fig1", "fig2", "fig3", "custom")


class ConfigError(ValueError):
    pass


# --- config files ---------------------------------------------------------

def parse_config_text(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip()
    return values


def _as_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {raw!r}") from None


def _as_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: not an integer: {raw!r}") from None


def _check_keys(cfg: dict[str, str], allowed: set[str], required: set[str],
                source: str) -> None:
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    missing = sorted(required - set(cfg))
    if missing:
        raise ConfigError(f"{source}: missing required keys {missing}")


_RADAR_KEYS = {"f0", "B", "Ts", "Tc", "Ms", "Mc"}


def radar_from_config(cfg: dict[str, str]) -> RadarConfig:
    kwargs = {
        "f0": _as_float(cfg["f0"], "f0"),
        "B": _as_float(cfg["B"], "B"),
        "Ts": _as_float(cfg["Ts"], "Ts"),
        "Ms": _as_int(cfg["Ms"], "Ms"),
        "Mc": _as_int(cfg["Mc"], "Mc"),
    }
    if "Tc" in cfg:
        kwargs["Tc"] = _as_float(cfg["Tc"], "Tc")
    return RadarConfig(**kwargs)


def _parse_targets(raw: str) -> Scene:
    targets = []
    for k, chunk in enumerate(filter(None,
                                     (c.strip() for c in raw.split(";")))):
        parts = [p for p in chunk.replace(",", " ").split() if p]
        if len(parts) != 4:
            raise ConfigError(
                f"target {k}: expected 'r, v, alpha_re, alpha_im', "
                f"got {chunk!r}")
        r, v, re, im = (_as_float(p, "targets") for p in parts)
        targets.append(Target(r, v, complex(re, im)))
    return Scene(tuple(targets))


# --- measurement / scene files --------------------------------------------

def write_measurement(path: str, cfg: RadarConfig, meas: Measurement,
                      model: str, noise_sigma: float, seed: int) -> None:
    """Text format: '# key = value' header, then M rows of 're im'."""
    lines = ["# radarpursuit measurement v1"]
    for key, val in (("f0", cfg.f0), ("B", cfg.B), ("Ts", cfg.Ts),
                     ("Tc", cfg.Tc)):
        lines.append(f"# {key} = {val:.17g}")
    lines.append(f"# Ms = {cfg.Ms}")
    lines.append(f"# Mc = {cfg.Mc}")
    lines.append(f"# M = {cfg.M}")
    lines.append(f"# model = {model}")
    lines.append(f"# noise_sigma = {noise_sigma:.17g}")
    lines.append(f"# seed = {seed}")
    for z in meas.samples:
        lines.append(f"{z.real:.17g} {z.imag:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_header_and_rows(path: str) -> tuple[dict[str, str], np.ndarray]:
    header: dict[str, str] = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, val = body.split("=", 1)
                    header[key.strip()] = val.strip()
                continue
            try:
                rows.append([float(p) for p in line.split()])
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: malformed data row {raw!r}") from None
    return header, np.array(rows) if rows else np.zeros((0, 0))


def read_measurement(path: str) -> tuple[RadarConfig, Measurement]:
    header, rows = _read_header_and_rows(path)
    for key in ("f0", "B", "Ts", "Tc", "Ms", "Mc"):
        if key not in header:
            raise ConfigError(f"{path}: missing header key {key!r}")
    cfg = RadarConfig(f0=float(header["f0"]), B=float(header["B"]),
                      Ts=float(header["Ts"]), Ms=int(header["Ms"]),
                      Mc=int(header["Mc"]), Tc=float(header["Tc"]))
    if rows.size == 0 or rows.shape[1] != 2:
        raise ConfigError(f"{path}: expected two real columns per sample")
    if rows.shape[0] != cfg.M:
        raise ConfigError(
            f"{path}: expected {cfg.M} samples, found {rows.shape[0]}")
    return cfg, Measurement(rows[:, 0] + 1j * rows[:, 1], cfg.Ms, cfg.Mc)


def write_scene(path: str, scene: Scene) -> None:
    lines = ["# radarpursuit scene v1",
             f"# num_targets = {scene.num_targets}"]
    for t in scene.targets:
        lines.append(f"{t.r:.17g} {t.v:.17g} "
                     f"{t.alpha.real:.17g} {t.alpha.imag:.17g}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_scene(path: str) -> Scene:
    header, rows = _read_header_and_rows(path)
    if rows.size == 0:
        return Scene(())
    if rows.shape[1] != 4:
        raise ConfigError(f"{path}: expected 'r v alpha_re alpha_im' rows")
    return Scene.from_arrays(rows[:, 0], rows[:, 1],
                             rows[:, 2] + 1j * rows[:, 3])


# --- simulate -------------------------------------------------------------

_SIM_KEYS = _RADAR_KEYS | {"targets", "noise_sigma", "seed", "model",
                           "truth_out"}


def cmd_simulate(args) -> int:
    cfg_text = parse_config_text(args.config)
    _check_keys(cfg_text, _SIM_KEYS,
                (_RADAR_KEYS - {"Tc"}) | {"targets"}, args.config)
    cfg = radar_from_config(cfg_text)
    scene = _parse_targets(cfg_text["targets"])
    model = cfg_text.get("model", "exact")
    noise_sigma = _as_float(cfg_text.get("noise_sigma", "0"), "noise_sigma")
    seed = _as_int(cfg_text.get("seed", "0"), "seed")
    meas = synthesize(cfg, scene, model=model, noise_sigma=noise_sigma,
                      seed=seed)
    write_measurement(args.out, cfg, meas, model, noise_sigma, seed)
    truth_path = cfg_text.get("truth_out", args.out + ".truth")
    write_scene(truth_path, scene)
    print(f"wrote {cfg.M} samples to {args.out}")
    print(f"wrote {scene.num_targets} targets to {truth_path}")
    return 0


# --- solve ----------------------------------------------------------------

_SOLVE_KEYS = _RADAR_KEYS | {"Nr", "Nv", "K", "normalization",
                             "index_selection"}


def cmd_solve(args) -> int:
    cfg_text = parse_config_text(args.config)
    _check_keys(cfg_text, _SOLVE_KEYS,
                (_RADAR_KEYS - {"Tc"}) | {"Nr", "Nv", "K"}, args.config)
    cfg = radar_from_config(cfg_text)
    file_cfg, meas = read_measurement(args.input)
    if (file_cfg.Ms, file_cfg.Mc) != (cfg.Ms, cfg.Mc):
        raise ConfigError(
            f"config frame shape {(cfg.Ms, cfg.Mc)} does not match "
            f"measurement {(file_cfg.Ms, file_cfg.Mc)}")
    for name, a, b in (("f0", cfg.f0, file_cfg.f0), ("B", cfg.B, file_cfg.B),
                       ("Ts", cfg.Ts, file_cfg.Ts),
                       ("Tc", cfg.Tc, file_cfg.Tc)):
        if not np.isclose(a, b, rtol=1e-12, atol=0.0):
            raise ConfigError(f"config {name}={a!r} does not match "
                              f"measurement header {name}={b!r}")
    if args.algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {args.algorithm!r}; "
                          f"expected one of {ALGORITHMS}")
    grid_spec = GridSpec(
        num_range_bins=_as_int(cfg_text["Nr"], "Nr"),
        num_speed_bins=_as_int(cfg_text["Nv"], "Nv"),
        normalization=cfg_text.get("normalization", "grid_step"))
    selection = cfg_text.get("index_selection", "simplified")
    if selection not in INDEX_SELECTIONS:
        raise ConfigError(f"unknown index_selection {selection!r}")
    coupled = args.algorithm.startswith("f_")
    grid = build_grid(cfg, grid_spec.num_range_bins,
                      grid_spec.num_speed_bins, grid_spec.normalization,
                      coupled=coupled)
    dic = TaylorDictionary(cfg, grid)
    opts = SolverOptions(num_targets=_as_int(cfg_text["K"], "K"),
                         index_selection=selection)
    report = solve(meas, dic, opts, args.algorithm)

    truth = read_scene(args.truth) if args.truth else None
    print(f"algorithm = {report.algorithm}, backend = {report.backend}")
    print(f"residual norm = {report.residual_norm:.6g}, "
          f"wall time = {report.wall_time:.6g} s")
    header = f"{'#':>3} {'r_hat_m':>16} {'v_hat_mps':>16} " \
             f"{'abs_alpha':>12} {'phase_rad':>12}"
    errors = None
    if truth is not None:
        if truth.num_targets != len(report.estimates):
            raise ConfigError(
                f"truth has {truth.num_targets} targets but the solver "
                f"returned {len(report.estimates)} estimates")
        truths = [(t.r, t.v) for t in truth.targets]
        ests = [(e.r_hat, e.v_hat) for e in report.estimates]
        perm = associate(cfg, truths, ests)
        errors = [float("nan")] * len(ests)
        for i, j in enumerate(perm):
            errors[j] = normalized_error(cfg, truths[i], ests[j])
        header += f" {'error':>12}"
    print(header)
    for i, est in enumerate(report.estimates):
        line = (f"{i:>3} {est.r_hat:>16.9g} {est.v_hat:>16.9g} "
                f"{abs(est.alpha_hat):>12.6g} "
                f"{np.angle(est.alpha_hat):>12.6g}")
        if errors is not None:
            line += f" {errors[i]:>12.6g}"
        print(line)
    return 0


# --- bench ----------------------------------------------------------------

@dataclass(frozen=True)
class BenchPlan:
    experiment: str
    points: tuple[SweepPoint, ...]
    algorithms: tuple[str, ...]
    num_targets: int
    synthesis_model: str = "exact"
    index_selection: str = "simplified"


def _square_points(mstar: int, nstars) -> tuple[SweepPoint, ...]:
    cfg = RadarConfig(Ms=mstar, Mc=mstar, **_BASE_RADAR)
    return tuple(SweepPoint(cfg=cfg, grid_spec=GridSpec(n, n), nstar=n)
                 for n in nstars)


def build_plan(preset: str, config_path: str | None) -> BenchPlan:
    if preset in ("fig1", "fig2", "fig3") and config_path is not None:
        raise ConfigError("--config is only used with --preset custom")
    if preset == "fig1":
        return BenchPlan("fig1", _square_points(16, (16, 32, 64)),
                         ("omp", "comp", "f_omp", "f_comp"), 5)
    if preset == "fig2":
        return BenchPlan("fig2", _square_points(64, (32, 64, 128)),
                         ("f_omp", "f_comp"), 5)
    if preset == "fig3":
        points = []
        for ms in (8, 16, 32):
            for mc in (8, 16, 32):
                cfg = RadarConfig(Ms=ms, Mc=mc, **_BASE_RADAR)
                points.append(SweepPoint(
                    cfg=cfg, grid_spec=GridSpec(2 * ms, 2 * mc), nstar=None))
        return BenchPlan("fig3", tuple(points), ("f_omp", "f_comp"), 5)
    if preset == "custom":
        if config_path is None:
            raise ConfigError("--preset custom requires --config")
        raw = parse_config_text(config_path)
        allowed = _RADAR_KEYS | {"Nr", "Nv", "K", "algorithms",
                                 "normalization", "index_selection",
                                 "synthesis_model"}
        _check_keys(raw, allowed,
                    (_RADAR_KEYS - {"Tc"}) | {"Nr", "Nv", "algorithms"},
                    config_path)
        cfg = radar_from_config(raw)
        algorithms = tuple(a.strip() for a in raw["algorithms"].split(",")
                           if a.strip())
        for a in algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if not algorithms:
            raise ConfigError("algorithms list is empty")
        nr = _as_int(raw["Nr"], "Nr")
        nv = _as_int(raw["Nv"], "Nv")
        spec = GridSpec(nr, nv, raw.get("normalization", "grid_step"))
        selection = raw.get("index_selection", "simplified")
        if selection not in INDEX_SELECTIONS:
            raise ConfigError(f"unknown index_selection {selection!r}")
        model = raw.get("synthesis_model", "exact")
        point = SweepPoint(cfg=cfg, grid_spec=spec,
                           nstar=nr if nr == nv else None)
        return BenchPlan("custom", (point,), algorithms,
                         _as_int(raw.get("K", "5"), "K"),
                         synthesis_model=model, index_selection=selection)
    raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}")


def _plan_digest(plan: BenchPlan, trials: int, seed: int) -> str:
    parts = [plan.experiment, str(trials), str(seed),
             ",".join(plan.algorithms), str(plan.num_targets),
             plan.synthesis_model, plan.index_selection]
    for p in plan.points:
        parts.append(f"{p.cfg.f0:.17g}/{p.cfg.B:.17g}/{p.cfg.Ts:.17g}/"
                     f"{p.cfg.Tc:.17g}/{p.cfg.Ms}/{p.cfg.Mc}/"
                     f"{p.grid_spec.num_range_bins}/"
                     f"{p.grid_spec.num_speed_bins}/"
                     f"{p.grid_spec.normalization}/{p.nstar}")
    digest = hashlib.sha256("|".join(parts).encode()).hexdigest()
    return digest[:16]


def _fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return format(x, ".9g")


def write_bench_csv(path: str, plan: BenchPlan, result: AggregateResult,
                    trials: int, seed: int) -> None:
    columns = BENCH_COLUMNS + (RATIO_COLUMNS if plan.experiment == "fig3"
                               else ())
    ratios = _fig3_ratios(result) if plan.experiment == "fig3" else {}
    lines = [
        "# radarpursuit bench v1",
        f"# preset = {plan.experiment}",
        f"# trials = {trials}",
        f"# base_seed = {seed}",
        f"# num_targets = {plan.num_targets}",
        f"# synthesis_model = {plan.synthesis_model}",
        f"# index_selection = {plan.index_selection}",
        f"# backend = {backend.active_name()}",
        f"# artifact_version = {__version__}",
        f"# config_digest = {_plan_digest(plan, trials, seed)}",
        ",".join(columns),
    ]
    for row in result.rows:
        cells = [plan.experiment, row.algorithm,
                 str(row.nstar) if row.nstar is not None else "",
                 str(row.Ms), str(row.Mc), str(row.trials),
                 _fmt(row.mr_mean), _fmt(row.ahe_mean), _fmt(row.time_mean)]
        if plan.experiment == "fig3":
            tr = ratios.get((row.algorithm, row.point_index))
            if tr is None:
                cells += ["", "", ""]
            else:
                cells += [_fmt(tr[0]), _fmt(tr[1]), _fmt(tr[2])]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_bench_csv(path: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    header, columns, rows = {}, None, []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, val = body.split("=", 1)
                    header[key.strip()] = val.strip()
                continue
            cells = line.split(",")
            if columns is None:
                columns = cells
                continue
            rows.append(dict(zip(columns, cells)))
    return header, rows


def _fig3_ratios(result: AggregateResult) -> dict:
    """Per point, f_comp metrics relative to f_omp, keyed to the f_comp
    row.  Undefined ratios (zero denominator) are left out."""
    ratios = {}
    points = sorted({r.point_index for r in result.rows})
    for p in points:
        try:
            num = result.row("f_comp", p)
            den = result.row("f_omp", p)
        except KeyError:
            continue
        def _ratio(a: float, b: float) -> float:
            if not (np.isfinite(a) and np.isfinite(b)) or b == 0.0:
                return float("nan")
            return a / b
        ratios[("f_comp", p)] = (_ratio(num.time_mean, den.time_mean),
                                 _ratio(num.mr_mean, den.mr_mean),
                                 _ratio(num.ahe_mean, den.ahe_mean))
    return ratios


def _verdict(label: str, ok: bool) -> str:
    return f"  {label}: {'yes' if ok else 'no'}"


def _nonincreasing(values) -> bool:
    return all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def print_summary(plan: BenchPlan, result: AggregateResult) -> None:
    print(f"{plan.experiment}: {len(plan.points)} points x "
          f"{len(plan.algorithms)} algorithms, {result.trials} trials, "
          f"base seed {result.base_seed}")
    head = (f"{'algorithm':>10} {'Nstar':>6} {'Ms':>4} {'Mc':>4} "
            f"{'MR':>10} {'AHE':>10} {'time_s':>10}")
    print(head)
    for row in result.rows:
        nstar = str(row.nstar) if row.nstar is not None else "-"
        ahe = f"{row.ahe_mean:.4g}" if np.isfinite(row.ahe_mean) else "-"
        print(f"{row.algorithm:>10} {nstar:>6} {row.Ms:>4} {row.Mc:>4} "
              f"{row.mr_mean:>10.4g} {ahe:>10} {row.time_mean:>10.4g}")
    print("trend verdicts:")
    points = sorted({r.point_index for r in result.rows})

    def series(alg, attr):
        return [getattr(result.row(alg, p), attr) for p in points]

    algs = plan.algorithms
    if "omp" in algs and "comp" in algs:
        print(_verdict("AHE(comp) < AHE(omp) at all points",
                       all(a < b for a, b in zip(series("comp", "ahe_mean"),
                                                 series("omp", "ahe_mean")))))
    if "f_omp" in algs and "f_comp" in algs:
        print(_verdict(
            "AHE(f_comp) < AHE(f_omp) at all points",
            all(a < b for a, b in zip(series("f_comp", "ahe_mean"),
                                      series("f_omp", "ahe_mean")))))
    if plan.experiment in ("fig1", "fig2"):
        for alg in algs:
            print(_verdict(f"MR({alg}) non-increasing in Nstar",
                           _nonincreasing(series(alg, "mr_mean"))))
        if "comp" in algs and "f_comp" in algs:
            last = points[-1]
            print(_verdict(
                "mean time(comp) > mean time(f_comp) at largest Nstar",
                result.row("comp", last).time_mean
                > result.row("f_comp", last).time_mean))
    if plan.experiment == "fig3":
        ratios = _fig3_ratios(result)
        mr_ratios = [v[1] for v in ratios.values() if np.isfinite(v[1])]
        print(_verdict("MR(f_comp)/MR(f_omp) < 1 at all defined points",
                       bool(mr_ratios)
                       and all(v < 1.0 for v in mr_ratios)))


def cmd_bench(args) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    plan = build_plan(args.preset, args.config)
    result = run_sweep(plan.points, plan.algorithms, trials=args.trials,
                       base_seed=args.seed,
                       synthesis_model=plan.synthesis_model,
                       index_selection=plan.index_selection,
                       num_targets=plan.num_targets)
    write_bench_csv(args.out, plan, result, args.trials, args.seed)
    print_summary(plan, result)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    return 0


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarpursuit",
        description="Greedy on/off-grid range and speed estimation for "
                    "FMCW chirp trains")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="synthesize a measurement file")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_solve = sub.add_parser("solve", help="estimate targets from a "
                                           "measurement file")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--input", required=True)
    p_solve.add_argument("--truth", default=None)
    p_solve.add_argument("--algorithm", required=True)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="Monte-Carlo accuracy/runtime "
                                           "sweep")
    p_bench.add_argument("--preset", required=True, choices=PRESETS)
    p_bench.add_argument("--trials", type=int, default=200)
    p_bench.add_argument("--seed", type=int, default=1234)
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (np.linalg.LinAlgError, FloatingPointError,
            ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
