"""Command-line entry point.

    photonic-vqa vqf --n 35 --exact --seed 7
    photonic-vqa vqe-h2 --r 0.736 --counts 2000 --optimizer bayes
    photonic-vqa --dump-tables --output-dir tables/

Settings come from an optional TOML file (``--config``) overridden by flags.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, experiments as ex
from .counts import NoiseConfig
from .errors import InvalidArgument, NumericalError
from .io import write_csv, write_json, write_jsonl
from .observables import register_value
from .optimizers import GdConfig, GpConfig
from .tables import h2_distances, h2_table, phase_tables

EXPERIMENTS = ("vqe-h2", "vqf", "scan-h2", "dissociation", "interference", "certify-dim", "fidelity")
OUTPUT_ENV = "PHOTONIC_VQA_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


@dataclass
class RunConfig:
    experiment: str
    output_dir: str = "results"
    seed: int = 0
    exact: bool = False
    counts: int = 2000
    car: float = math.inf
    subtract_accidentals: bool = False
    epsilon: float = 1.0
    threads: int = 1
    # problem parameters
    n: int = 35
    r: float = 0.736
    pair: str = "2-3"
    d: int | None = None
    sources: str | None = None
    source: int | None = None
    grid_points: int = 41
    # optimizer
    optimizer: str | None = None
    opt: dict = field(default_factory=dict)

    @property
    def noise(self) -> NoiseConfig | None:
        if self.exact:
            return None
        return NoiseConfig(self.counts, self.car, self.seed, self.subtract_accidentals)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d.pop("threads")
        d["car"] = None if math.isinf(self.car) else self.car
        return d


def _is_prime(k: int) -> bool:
    return k > 1 and all(k % j for j in range(2, int(math.isqrt(k)) + 1))


def _odd_semiprime(n: int) -> bool:
    if n % 2 == 0:
        return False
    return any(n % p == 0 and _is_prime(p) and _is_prime(n // p) for p in range(3, int(math.isqrt(n)) + 1))


def validate_config(cfg: RunConfig) -> list[str]:
    """Every violation in ``cfg``; an empty list means the config is usable."""
    errs = []
    if cfg.experiment not in EXPERIMENTS:
        errs.append(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if not 0.0 <= cfg.epsilon <= 1.0:
        errs.append(f"epsilon = {cfg.epsilon} out of range [0, 1]")
    if not cfg.exact:
        if cfg.counts < 1:
            errs.append("counts per setting must be >= 1")
        if not cfg.car > 0:
            errs.append("car must be positive")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        errs.append("seed must be a non-negative 64-bit integer")
    if cfg.threads < 1:
        errs.append("threads must be >= 1")
    exp = cfg.experiment
    if exp == "vqf":
        if not (3 <= cfg.n <= 49 and _odd_semiprime(cfg.n)):
            errs.append(f"N must be an odd semiprime in [3, 49], got {cfg.n}")
        elif not all(p in (3, 5, 7) for p in _factor_pair(cfg.n)):
            errs.append(f"factors of N = {cfg.n} do not fit the 2+2 qubit register (odd factors up to 7)")
    if exp in ("vqe-h2", "scan-h2"):
        grid = h2_distances()
        if not np.any(np.abs(grid - cfg.r) < 1e-9):
            errs.append(f"R = {cfg.r} is not on the tabulated grid: {', '.join(f'{x:g}' for x in grid)}")
    if exp == "interference" and cfg.pair not in ex.SWEPT_PHASE:
        errs.append(f"pair must be one of {', '.join(ex.SWEPT_PHASE)}")
    if exp == "certify-dim":
        known = ex.entangled_sources()
        if cfg.sources is not None and cfg.sources not in known:
            errs.append(f"sources must be one of {', '.join(known)}")
        elif cfg.sources is not None and cfg.d is not None and _dim_of(cfg.sources) != cfg.d:
            errs.append(f"sources {cfg.sources} do not give d = {cfg.d}")
        if cfg.d is not None and cfg.d not in (2, 3, 4):
            errs.append("d must be 2, 3 or 4")
    if exp == "fidelity" and cfg.source is not None and cfg.source not in (1, 2, 3, 4):
        errs.append("source must be in 1..4")
    if exp in ("scan-h2", "dissociation", "interference") and cfg.grid_points < 3:
        errs.append("grid_points must be >= 3")
    if cfg.optimizer is not None and cfg.optimizer not in ("bayes", "gd"):
        errs.append("optimizer must be 'bayes' or 'gd'")
    if exp == "vqf" and cfg.optimizer == "bayes":
        errs.append("the factoring run uses gradient descent (3 parameters)")
    try:
        _optimizer_config(cfg)
    except (InvalidArgument, TypeError) as err:
        errs.append(f"optimizer settings: {err}")
    return errs


def _factor_pair(n: int) -> tuple[int, int]:
    for p in range(3, int(math.isqrt(n)) + 1):
        if n % p == 0:
            return p, n // p
    return n, 1


def _dim_of(sources: str) -> int:
    return 4 if sources == "all" else len(sources.split("-"))


def _optimizer_config(cfg: RunConfig):
    kind = cfg.optimizer or ("gd" if cfg.experiment == "vqf" else "bayes")
    if kind == "bayes":
        return GpConfig(**cfg.opt)
    base = asdict(ex.VQF_GD) if cfg.experiment == "vqf" else {"eta": 0.3, "epsilon_fd": 1e-3}
    base.update(cfg.opt)
    return GdConfig(**base)


# ----------------------------------------------------------------- experiments

def _run_vqe(cfg, out):
    opt = _optimizer_config(cfg)
    fn = ex.h2_cost_function(cfg.r, cfg.noise, cfg.epsilon)
    if isinstance(opt, GpConfig):
        run = ex.bayesian_optimize(fn, 0.0, opt)
    else:
        run = ex.gradient_descent(fn, [0.0], opt)
    e_min, th_min = ex.ucc_minimum(ex.h2_coefficients(cfg.r))
    rows = [(k, p.params[0], p.cost, p.std_err) for k, p in enumerate(run.trajectory)]
    out["trajectory.csv"] = (("iteration", "theta", "energy", "std_err"), rows)
    return {"run": run.to_dict(), "exact_minimum": {"energy": e_min, "theta": th_min}}, fn.trace


def _run_vqf(cfg, out):
    gd = _optimizer_config(cfg)
    fn = ex.vqf_cost_function(cfg.n, cfg.noise, cfg.epsilon)
    init = ex.phase_row("A2b", "all", ex.Stage.PUMP).theta
    run = ex.gradient_descent(fn, list(init), gd)
    bits, factors = ex.decode_factors(run.trajectory[-1].params)
    admissible = ex.vqf_admissible()
    rows = []
    for k, p in enumerate(run.trajectory):
        probs = np.abs(ex.prepare_state(ex.vqf_pump(p.params)).alpha) ** 2
        rows.append((k, *p.params, p.cost, p.std_err, *probs))
    header = ("iteration", "theta1", "theta2", "theta3", "cost", "std_err", *(f"P_{b}" for b in admissible))
    out["trajectory.csv"] = (header, rows)
    cands = {b: list(register_value(b)) for b in admissible}
    return {"run": run.to_dict(), "bits": bits, "factors": list(factors), "candidates": cands}, fn.trace


def _run_scan(cfg, out):
    grid = np.linspace(-np.pi / 4, np.pi / 2, cfg.grid_points)
    scan = ex.h2_theta_scan(cfg.r, grid, cfg.noise, cfg.threads)
    out["scan.csv"] = (("theta", "energy", "std_err"), scan)
    coef = ex.fit_ucc_curve(*zip(*scan))
    e, th = ex.ucc_minimum(coef)
    trace = [{"eval_index": k, "params": [t], "value": v, "std_err": s} for k, (t, v, s) in enumerate(scan)]
    return {"scan": [list(s) for s in scan], "fit": list(coef), "minimum": {"energy": e, "theta": th}}, trace


def _run_dissociation(cfg, out):
    grid = np.linspace(-np.pi / 4, np.pi / 2, cfg.grid_points)
    pts = ex.h2_dissociation(None, cfg.noise, grid, cfg.threads)
    rows = [(p.R, p.E_min, p.theta_min, *p.fit) for p in pts]
    out["dissociation.csv"] = (("R", "E_min", "theta_min", "g0", "g1", "g2"), rows)
    return {"points": [p.to_dict() for p in pts]}, []


def _run_interference(cfg, out):
    grid = np.linspace(0, 2 * np.pi, cfg.grid_points)
    scan = ex.heralded_interference(cfg.pair, cfg.epsilon, grid, cfg.noise)
    out["fringe.csv"] = (("phase", "normalized_cc"), list(zip(scan.phase_grid, scan.normalized_cc)))
    return {"pair": cfg.pair, "fringe": scan.to_dict()}, []


def _run_certify(cfg, out):
    combos = [cfg.sources] if cfg.sources else [s for s in ex.entangled_sources()
                                                if cfg.d is None or _dim_of(s) == cfg.d]
    res = [ex.certified_dimension(_dim_of(s), s, cfg.epsilon, cfg.noise) for s in combos]
    out["certified_dimension.csv"] = (("sources", "d", "certified_dimension"),
                                      [(r.sources, r.d, r.certified_dimension) for r in res])
    return {"results": [r.to_dict() for r in res]}, []


def _run_fidelity(cfg, out):
    srcs = [cfg.source] if cfg.source else [1, 2, 3, 4]
    res = [(m, ex.projector_fidelity(m, cfg.noise)) for m in srcs]
    out["fidelity.csv"] = (("source", "fidelity"), res)
    return {"fidelity": {str(m): f for m, f in res}}, []


RUNNERS = {"vqe-h2": _run_vqe, "vqf": _run_vqf, "scan-h2": _run_scan, "dissociation": _run_dissociation,
           "interference": _run_interference, "certify-dim": _run_certify, "fidelity": _run_fidelity}


# ------------------------------------------------------------------- argparse

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photonic-vqa", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--dump-tables", action="store_true", help="write the bundled data tables and exit")
    ap.add_argument("--output-dir", default=argparse.SUPPRESS,
                    help=f"output directory (default: ${OUTPUT_ENV} or ./results)")
    sub = ap.add_subparsers(dest="experiment")
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML file with run settings")
        p.add_argument("--output-dir", default=argparse.SUPPRESS)
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--exact", action="store_true", default=argparse.SUPPRESS,
                       help="exact probabilities instead of sampled counts")
        p.add_argument("--counts", type=int, default=argparse.SUPPRESS, help="coincidences per setting")
        p.add_argument("--car", type=float, default=argparse.SUPPRESS)
        p.add_argument("--subtract-accidentals", action="store_true", default=argparse.SUPPRESS)
        p.add_argument("--epsilon", type=float, default=argparse.SUPPRESS, help="source purity")
        p.add_argument("--threads", type=int, default=argparse.SUPPRESS)
        if name == "vqf":
            p.add_argument("--n", type=int, default=argparse.SUPPRESS)
        if name in ("vqe-h2", "scan-h2"):
            p.add_argument("--r", type=float, default=argparse.SUPPRESS, help="bond length (angstrom)")
        if name in ("vqe-h2", "vqf"):
            p.add_argument("--optimizer", choices=("bayes", "gd"), default=argparse.SUPPRESS)
            p.add_argument("--eta", type=float, default=argparse.SUPPRESS)
            p.add_argument("--fd-step", type=float, default=argparse.SUPPRESS)
            p.add_argument("--max-iters", type=int, default=argparse.SUPPRESS)
        if name in ("scan-h2", "dissociation", "interference"):
            p.add_argument("--grid-points", type=int, default=argparse.SUPPRESS)
        if name == "interference":
            p.add_argument("--pair", default=argparse.SUPPRESS)
        if name == "certify-dim":
            p.add_argument("--d", type=int, default=argparse.SUPPRESS)
            p.add_argument("--sources", default=argparse.SUPPRESS)
        if name == "fidelity":
            p.add_argument("--source", type=int, default=argparse.SUPPRESS)
    return ap


def _flatten_toml(doc: dict) -> dict:
    flat = {}
    for k, v in doc.items():
        if k == "optimizer" and isinstance(v, dict):
            v = dict(v)
            if "kind" in v:
                flat["optimizer"] = v.pop("kind")
            flat["opt"] = v
        elif k == "noise" and isinstance(v, dict):
            flat.update(v)
        elif k == "params" and isinstance(v, dict):
            flat.update(v)
        else:
            flat[k] = v
    return flat


def load_config(args: argparse.Namespace) -> tuple[RunConfig | None, list[str]]:
    values: dict = {"output_dir": os.environ.get(OUTPUT_ENV, "results"),
                    "threads": os.cpu_count() or 1}
    path = getattr(args, "config", None)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                values.update(_flatten_toml(tomllib.load(fh)))
        except (OSError, tomllib.TOMLDecodeError) as err:
            return None, [f"cannot read config {path}: {err}"]
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "dump_tables")}
    opt = dict(values.pop("opt", {}))
    for flag, key in (("eta", "eta"), ("fd_step", "epsilon_fd"), ("max_iters", "max_iters")):
        if flag in flags:
            opt[key] = flags.pop(flag)
    values.update(flags)
    values["opt"] = opt
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(values) - known)
    if unknown:
        return None, [f"unknown config keys: {', '.join(unknown)}"]
    try:
        cfg = RunConfig(**values)
    except TypeError as err:
        return None, [str(err)]
    return cfg, validate_config(cfg)


def _dump_tables(output_dir: Path) -> int:
    output_dir.mkdir(parents=True, exist_ok=True)
    write_json(output_dir / "phase_tables.json", phase_tables())
    write_json(output_dir / "h2_sto3g.json", h2_table())
    print(f"tables written to {output_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if args.dump_tables:
        out = getattr(args, "output_dir", None) or os.environ.get(OUTPUT_ENV, "results")
        return _dump_tables(Path(out))
    if args.experiment is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    cfg, errs = load_config(args)
    if errs:
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    outputs: dict = {}
    t0, started = time.perf_counter(), time.strftime("%Y-%m-%dT%H:%M:%S%z")
    try:
        with np.errstate(invalid="raise", divide="raise", over="raise"):
            result, trace = RUNNERS[cfg.experiment](cfg, outputs)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "results.json", {"experiment": cfg.experiment, "version": __version__,
                                          "config": cfg.echo(), "result": result})
    write_jsonl(out_dir / "trace.jsonl", trace)
    for name, (header, rows) in outputs.items():
        write_csv(out_dir / name, header, rows)
    write_json(out_dir / "metadata.json", {
        "started": started, "wall_clock_s": time.perf_counter() - t0, "threads": cfg.threads,
        "python": platform.python_version(), "numpy": np.__version__, "host": platform.node()})
    print(f"{cfg.experiment}: results written to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
