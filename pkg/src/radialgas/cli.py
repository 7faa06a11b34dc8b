"""Configuration parsing, run orchestration, and file output.

The command line exposes four subcommands: `run` (one annular simulation
with monitor battery and CSV/JSON outputs), `family` (a sweep over inner
radius and total mass), `check-weakform` (the weak-identity refinement
study), and `scalars` (direct access to the convex scalar functions and
their branch inverses, handy for external cross-checks).

Config files are TOML. Every key is validated before any solver work
starts, unknown keys are rejected, and all validation problems are
reported together rather than one at a time. Outputs are deterministic:
no timestamps, fixed 17-significant-digit number formatting, and a
manifest recording digests of everything that feeds the numerics, so a
rerun of the same config overwrites the run directory with byte-identical
files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .convexity import ConvexFnId, branch_inverse, convex_eval
from .eulerian import eulerian_profile, pullback
from .family import FamilyAborted, FamilyReport, report_json, run_family, write_family_csv
from .initial_data import (
    data_entropy_constant,
    generate_radial,
    load_radial_csv,
    mollify_extend,
    to_lagrangian,
    truncate_farfield,
)
from .monitors import entropy_series, standard_monitor_report
from .solver import FluidParams, RunAborted, SolverConfig, run
from .weakform import residual_table, write_residual_csv

__all__ = [
    "RunConfig",
    "FamilySpec",
    "ConfigError",
    "parse_config",
    "emit_outputs",
    "main",
]

PRESETS = ("constant", "gaussian_bump", "discontinuous_shell")
DEFAULT_SEED = 20260821
N_OUTPUT_SAMPLES = 16

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3
EXIT_MONITOR = 4


class ConfigError(ValueError):
    """Raised with the full list of configuration problems."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("configuration errors:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass(frozen=True)
class FamilySpec:
    a_list: tuple[float, ...]
    k_list: tuple[int, ...]
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    params: FluidParams
    source: str
    data_path: str | None
    a: float
    k: int
    N: int
    T: float
    cfl: float
    output_times: tuple[float, ...] | None
    mode: str
    seed: int
    out_dir: str | None
    family: FamilySpec | None
    config_sha256: str


_FLUID_KEYS = {"gamma", "mu", "lam", "kappa", "n"}
_RUN_KEYS = {"a", "k", "N", "T", "cfl", "mode", "output_times", "seed", "out"}
_DATA_KEYS = {"source", "path"}
_FAMILY_KEYS = {"a_list", "k_list", "workers"}
_SECTIONS = {"data", "fluid", "run", "family"}


def _check_number(table, key, problems, kind=float, where=""):
    value = table.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where}{key} must be a number, got {value!r}")
        return None
    if kind is int and int(value) != value:
        problems.append(f"{where}{key} must be an integer, got {value!r}")
        return None
    return kind(value)


def parse_config(path) -> RunConfig:
    """Load and fully validate a TOML config.

    All problems are collected and raised together as a ConfigError; a
    returned config has passed every module precondition that can be
    checked without computing.
    """
    raw = Path(path).read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError([f"not parseable TOML: {exc}"]) from exc

    problems: list[str] = []
    for section in doc:
        if section not in _SECTIONS:
            problems.append(f"unknown section [{section}]")
    for section, allowed in (
        ("data", _DATA_KEYS),
        ("fluid", _FLUID_KEYS),
        ("run", _RUN_KEYS),
        ("family", _FAMILY_KEYS),
    ):
        table = doc.get(section, {})
        if not isinstance(table, dict):
            problems.append(f"[{section}] must be a table")
            doc[section] = {}
            continue
        for key in table:
            if key not in allowed:
                problems.append(f"unknown key {key!r} in [{section}]")

    data = doc.get("data", {})
    source = data.get("source", "gaussian_bump")
    data_path = data.get("path")
    if source == "csv":
        if not data_path:
            problems.append("data.source = 'csv' requires data.path")
        elif not Path(data_path).is_file():
            problems.append(f"data.path {data_path!r} does not exist")
    elif source not in PRESETS:
        problems.append(
            f"data.source must be 'csv' or one of {', '.join(PRESETS)}, got {source!r}"
        )
    elif data_path is not None:
        problems.append("data.path is only meaningful with data.source = 'csv'")

    fluid = doc.get("fluid", {})
    gamma = _check_number(fluid, "gamma", problems, where="fluid.")
    mu = _check_number(fluid, "mu", problems, where="fluid.")
    lam = _check_number(fluid, "lam", problems, where="fluid.")
    kappa = _check_number(fluid, "kappa", problems, where="fluid.")
    n = _check_number(fluid, "n", problems, kind=int, where="fluid.")
    defaults = FluidParams()
    gamma = defaults.gamma if gamma is None else gamma
    mu = defaults.mu if mu is None else mu
    lam = defaults.lam if lam is None else lam
    kappa = defaults.kappa if kappa is None else kappa
    n = defaults.n if n is None else n
    # physical admissibility of the dissipative coefficients
    if gamma is not None and not gamma > 1.0:
        problems.append(f"fluid.gamma must exceed 1 (the adiabatic exponent), got {gamma:g}")
    if mu is not None and not mu > 0.0:
        problems.append(f"fluid.mu must be positive, got {mu:g}")
    if kappa is not None and not kappa > 0.0:
        problems.append(f"fluid.kappa must be positive, got {kappa:g}")
    if n not in (2, 3):
        problems.append(f"fluid.n must be 2 or 3, got {n}")
    elif None not in (mu, lam) and lam + 2.0 * mu / n < 0.0:
        problems.append(
            f"fluid.lam + 2*mu/n must be nonnegative (effective bulk viscosity), "
            f"got {lam + 2.0 * mu / n:g}"
        )

    run_tbl = doc.get("run", {})
    a = _check_number(run_tbl, "a", problems, where="run.")
    k = _check_number(run_tbl, "k", problems, kind=int, where="run.")
    N = _check_number(run_tbl, "N", problems, kind=int, where="run.")
    T = _check_number(run_tbl, "T", problems, where="run.")
    cfl = _check_number(run_tbl, "cfl", problems, where="run.")
    seed = _check_number(run_tbl, "seed", problems, kind=int, where="run.")
    a = 0.1 if a is None else a
    k = 4 if k is None else k
    N = 1024 if N is None else N
    T = 0.5 if T is None else T
    cfl = 0.4 if cfl is None else cfl
    seed = DEFAULT_SEED if seed is None else seed
    mode = run_tbl.get("mode", "strict")
    out_dir = run_tbl.get("out")
    if a is not None and not a > 0.0:
        problems.append(f"run.a must be positive, got {a:g}")
    if k is not None and not k >= 1:
        problems.append(f"run.k must be a positive integer, got {k}")
    if N is not None and not N >= 8:
        problems.append(f"run.N must be at least 8, got {N}")
    if T is not None and not T > 0.0:
        problems.append(f"run.T must be positive, got {T:g}")
    if cfl is not None and not 0.0 < cfl <= 1.0:
        problems.append(f"run.cfl must lie in (0, 1], got {cfl:g}")
    if mode not in ("strict", "exploratory"):
        problems.append(f"run.mode must be 'strict' or 'exploratory', got {mode!r}")
    if out_dir is not None and not isinstance(out_dir, str):
        problems.append(f"run.out must be a string path, got {out_dir!r}")
        out_dir = None

    output_times = run_tbl.get("output_times")
    if output_times is not None:
        if not isinstance(output_times, list) or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in output_times
        ):
            problems.append("run.output_times must be a list of numbers")
            output_times = None
        elif T is not None and any(t < 0.0 or t > T for t in output_times):
            problems.append("run.output_times must lie in [0, T]")
            output_times = None
        else:
            output_times = tuple(float(t) for t in output_times)

    family = None
    if "family" in doc:
        fam_tbl = doc["family"]
        a_list = fam_tbl.get("a_list")
        k_list = fam_tbl.get("k_list")
        workers = _check_number(fam_tbl, "workers", problems, kind=int, where="family.")
        workers = 1 if workers is None else workers
        ok = True
        for name, lst in (("a_list", a_list), ("k_list", k_list)):
            if not isinstance(lst, list) or not lst:
                problems.append(f"family.{name} must be a nonempty list")
                ok = False
            elif any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in lst):
                problems.append(f"family.{name} must contain numbers")
                ok = False
            elif sorted(lst) != list(lst) or len(set(lst)) != len(lst):
                problems.append(f"family.{name} must be strictly sorted ascending")
                ok = False
        if ok and any(int(v) != v or v < 1 for v in k_list):
            problems.append("family.k_list entries must be positive integers")
            ok = False
        if ok and any(not v > 0.0 for v in a_list):
            problems.append("family.a_list entries must be positive")
            ok = False
        if workers is not None and workers < 1:
            problems.append(f"family.workers must be at least 1, got {workers}")
            ok = False
        if ok:
            family = FamilySpec(
                a_list=tuple(float(v) for v in a_list),
                k_list=tuple(int(v) for v in k_list),
                workers=int(workers),
            )

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        params=FluidParams(gamma=gamma, mu=mu, lam=lam, kappa=kappa, n=n),
        source=source,
        data_path=data_path,
        a=float(a),
        k=int(k),
        N=int(N),
        T=float(T),
        cfl=float(cfl),
        output_times=output_times,
        mode=mode,
        seed=int(seed),
        out_dir=out_dir,
        family=family,
        config_sha256=hashlib.sha256(raw).hexdigest(),
    )


# ---------------------------------------------------------------------------
# pipeline pieces shared by the subcommands


def _load_base_data(cfg: RunConfig):
    if cfg.source == "csv":
        return load_radial_csv(cfg.data_path, n=cfg.params.n)
    return generate_radial(cfg.source, n=cfg.params.n)


def _data_digest(cfg: RunConfig) -> str:
    if cfg.source == "csv":
        return hashlib.sha256(Path(cfg.data_path).read_bytes()).hexdigest()
    return hashlib.sha256(cfg.source.encode("utf-8")).hexdigest()


def _run_id(cfg: RunConfig) -> str:
    payload = (cfg.config_sha256 + _data_digest(cfg)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:12]


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "unknown"


def _resolved_output_times(cfg: RunConfig) -> tuple[float, ...]:
    if cfg.output_times is not None:
        return cfg.output_times
    return tuple(np.linspace(0.0, cfg.T, N_OUTPUT_SAMPLES))


def _solver_config(cfg: RunConfig, mode: str | None = None) -> SolverConfig:
    return SolverConfig(
        N=cfg.N,
        T=cfg.T,
        cfl=cfg.cfl,
        output_times=_resolved_output_times(cfg),
        mode=mode or cfg.mode,
    )


def _preflight_out_dir(out_dir: Path) -> None:
    """Fail before any compute if the output directory cannot be written."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise ConfigError([f"output directory {out_dir} is not writable: {exc}"]) from exc


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, cfg: RunConfig, kind: str, run_id: str) -> None:
    manifest = {
        "artifact": "radialgas",
        "version": _package_version(),
        "kind": kind,
        "run_id": run_id,
        "config_sha256": cfg.config_sha256,
        "data_source": cfg.source,
        "data_sha256": _data_digest(cfg),
        "mode": cfg.mode,
    }
    _write_json(out / "manifest.json", manifest)


def _write_lagrangian_csv(traj, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x,v,u,e,r\n")
        for s in traj.states:
            for i in range(s.x.size):
                fh.write(
                    f"{s.t:.17g},{s.x[i]:.17g},{s.v[i]:.17g},"
                    f"{s.u[i]:.17g},{s.e[i]:.17g},{s.r[i]:.17g}\n"
                )


def _write_eulerian_csv(traj, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,r,rho,u,e\n")
        for s in traj.states:
            prof = eulerian_profile(s)
            for i in range(prof.r.size):
                fh.write(
                    f"{prof.t:.17g},{prof.r[i]:.17g},{prof.rho[i]:.17g},"
                    f"{prof.u[i]:.17g},{prof.e[i]:.17g}\n"
                )


def _write_entropy_csv(traj, C0: float, path: Path) -> None:
    series = entropy_series(traj, traj.params, C0)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,E,D_heat,D_visc_bulk,D_visc_shear,cumulative\n")
        for rep in series:
            fh.write(
                f"{rep.t:.17g},{rep.E:.17g},{rep.D_heat:.17g},"
                f"{rep.D_visc_bulk:.17g},{rep.D_visc_shear:.17g},{rep.cumulative:.17g}\n"
            )


def emit_outputs(result, cfg: RunConfig, out_dir) -> Path:
    """Write all files for a finished run or family under out_dir.

    Single runs produce manifest.json, lagrangian.csv, eulerian.csv,
    entropy.csv, and monitors.json in a directory named by the run id
    (a digest of config and data, so reruns overwrite in place).
    Family results produce family.json plus one subdirectory per (a, k)
    member holding that run's summary and sampled path surface.
    """
    out_dir = Path(out_dir)
    if isinstance(result, FamilyReport):
        out = out_dir / f"family-{_run_id(cfg)}"
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, cfg, "family", _run_id(cfg))
        (out / "family.json").write_text(report_json(result), encoding="utf-8")
        for summary, fam in zip(result.runs, result.path_families):
            sub = out / f"a{summary['a']:g}_k{summary['k']:g}"
            sub.mkdir(exist_ok=True)
            _write_json(sub / "summary.json", summary)
            write_family_csv([fam], sub / "paths.csv")
        return out

    traj, C0, report = result
    out = out_dir / f"run-{_run_id(cfg)}"
    out.mkdir(parents=True, exist_ok=True)
    _write_manifest(out, cfg, "run", _run_id(cfg))
    _write_lagrangian_csv(traj, out / "lagrangian.csv")
    _write_eulerian_csv(traj, out / "eulerian.csv")
    _write_entropy_csv(traj, C0, out / "entropy.csv")
    _write_json(out / "monitors.json", {"C0": C0, "report": report})
    return out


def _monitors_green(report: dict) -> bool:
    return all(entry["satisfied"] for entry in report["monitors"])


# ---------------------------------------------------------------------------
# subcommands


def _cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    base = _load_base_data(cfg)
    lag = to_lagrangian(
        truncate_farfield(mollify_extend(base, cfg.a), cfg.k, n=cfg.params.n),
        cfg.k,
        cfg.N,
        n=cfg.params.n,
    )
    C0 = data_entropy_constant(lag, cfg.params)
    try:
        traj = run(lag, cfg.params, _solver_config(cfg))
    except RunAborted as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORTED
    report = standard_monitor_report(traj, C0, seed=cfg.seed)
    out = emit_outputs((traj, C0, report), cfg, out_dir)
    green = _monitors_green(report)
    print(f"run {_run_id(cfg)}: {len(traj.states)} samples, C0={C0:.6g}, "
          f"monitors {'all satisfied' if green else 'VIOLATED'} -> {out}")
    if not green and cfg.mode == "strict":
        return EXIT_MONITOR
    return EXIT_OK


def _cmd_family(cfg: RunConfig, out_dir: Path, workers: int | None) -> int:
    if cfg.family is None:
        print("configuration errors:\n  - family command needs a [family] section",
              file=sys.stderr)
        return EXIT_CONFIG
    base = _load_base_data(cfg)
    n_workers = workers if workers is not None else cfg.family.workers
    try:
        report = run_family(
            list(cfg.family.a_list),
            [float(k) for k in cfg.family.k_list],
            base,
            cfg.params,
            _solver_config(cfg),
            max_workers=n_workers,
        )
    except FamilyAborted as exc:
        out = emit_outputs(exc.partial_report, cfg, out_dir)
        print(f"family aborted: {exc}; partial report -> {out}", file=sys.stderr)
        return EXIT_ABORTED
    out = emit_outputs(report, cfg, out_dir)
    green = all(m["satisfied"] for r in report.runs for m in r["monitors"])
    print(f"family {_run_id(cfg)}: {len(report.runs)} runs, "
          f"monitors {'all satisfied' if green else 'VIOLATED'} -> {out}")
    if not green and cfg.mode == "strict":
        return EXIT_MONITOR
    return EXIT_OK


def _cmd_check_weakform(cfg: RunConfig, out_dir: Path) -> int:
    """Refinement study of the three weak identities on the configured case.

    Runs the case at N/4, N/2, and N with output sampling matched to the
    natural step cadence, writes the residual table, and prints the
    observed convergence order per identity (catalog mean over the
    standard test functions).
    """
    resolutions = [cfg.N // 4, cfg.N // 2, cfg.N]
    if resolutions[0] < 8:
        print(f"configuration errors:\n  - run.N={cfg.N} leaves no room for "
              "the N/4 and N/2 refinement levels", file=sys.stderr)
        return EXIT_CONFIG
    base = _load_base_data(cfg)
    profiles_by_resolution = {}
    for N_i in resolutions:
        lag = to_lagrangian(
            truncate_farfield(mollify_extend(base, cfg.a), cfg.k, n=cfg.params.n),
            cfg.k,
            N_i,
            n=cfg.params.n,
        )
        # output sampling at the scheme's natural step cadence; sparser
        # sampling aliases the time quadrature and hides the true order
        n_steps = max(16, round(3.125 * N_i * cfg.T))
        solver_cfg = SolverConfig(
            N=N_i, T=cfg.T, cfl=cfg.cfl,
            output_times=tuple(np.linspace(0.0, cfg.T, n_steps + 1)),
            mode=cfg.mode,
        )
        try:
            traj = run(lag, cfg.params, solver_cfg)
        except RunAborted as exc:
            print(f"run aborted at N={N_i}: {exc}", file=sys.stderr)
            return EXIT_ABORTED
        edges = [float(s.r[-1]) for s in traj.states]
        grid = np.linspace(traj.states[0].a, max(edges) * 1.02, 2 * N_i + 1)
        profiles_by_resolution[N_i] = [pullback(s, grid) for s in traj.states]

    rows = residual_table(profiles_by_resolution, cfg.params)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "weakform_residuals.csv"
    write_residual_csv(rows, csv_path)

    for eq in ("continuity", "momentum", "energy"):
        means = []
        for N_i in resolutions:
            vals = [r["residual"] for r in rows if r["eq"] == eq and r["N"] == N_i]
            means.append(float(np.mean(vals)))
        orders = [
            float(np.log2(means[i] / means[i + 1])) for i in range(len(means) - 1)
        ]
        print(f"{eq}: residual means {' '.join(f'{v:.3e}' for v in means)}; "
              f"orders {' '.join(f'{o:+.2f}' for o in orders)}")
    print(f"residual table -> {csv_path}")
    return EXIT_OK


_SCALAR_IDS = {"G": ConvexFnId.G, "psi": ConvexFnId.Psi, "H": ConvexFnId.H}


def _cmd_scalars(args) -> int:
    fn = _SCALAR_IDS[args.fn]
    try:
        if args.inverse is not None:
            values = [branch_inverse(fn, args.inverse, y) for y in args.values]
        else:
            values = [convex_eval(fn, z) for z in args.values]
    except ValueError as exc:
        print(f"scalars: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for v in values:
        print(f"{v:.17g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialgas",
        description="Annular compressible heat-conducting gas flow runs with "
        "certified runtime bound checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", default=None, help="output directory (default ./out)")
        p.add_argument("--mode", choices=("strict", "exploratory"), default=None,
                       help="override run.mode from the config")

    p_run = sub.add_parser("run", help="one (a, k) simulation with monitors")
    add_common(p_run)

    p_fam = sub.add_parser("family", help="sweep over the [family] lists")
    add_common(p_fam)
    p_fam.add_argument("--workers", type=int, default=None,
                       help="concurrent runs (default from config)")

    p_weak = sub.add_parser("check-weakform",
                            help="weak-identity residual refinement study")
    add_common(p_weak)

    p_scal = sub.add_parser("scalars", help="evaluate the convex scalar kernels")
    p_scal.add_argument("--fn", choices=sorted(_SCALAR_IDS), required=True)
    p_scal.add_argument("--inverse", choices=("left", "right"), default=None,
                        help="evaluate the branch inverse instead of the function")
    p_scal.add_argument("values", nargs="+", type=float)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "scalars":
        return _cmd_scalars(args)

    try:
        cfg = parse_config(args.config)
    except FileNotFoundError as exc:
        print(f"configuration errors:\n  - config file not found: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    if args.mode is not None:
        cfg = RunConfig(**{**cfg.__dict__, "mode": args.mode})

    out_dir = Path(args.out or cfg.out_dir or "out")
    try:
        _preflight_out_dir(out_dir)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        return _cmd_run(cfg, out_dir)
    if args.command == "family":
        return _cmd_family(cfg, out_dir, args.workers)
    return _cmd_check_weakform(cfg, out_dir)


if __name__ == "__main__":
    raise SystemExit(main())
