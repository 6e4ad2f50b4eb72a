"""Command-line front end: ``qcorr {gibbs,measure,evolve,sweep}``.

Options may also come from an INI file (``--config``), one section per
command with keys named like the long flags (``tmax = 0.05``).  Flags win
over the file, the file wins over built-in defaults.

Exit codes: 0 success, 2 invalid parameters or malformed input, 3 I/O
failure, 4 dimension mismatch (including a state file without a DIMS line
where a bipartite measure needs one).  Output files are written to a
temporary name and renamed, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bipartite import DensityMatrix
from .correlations import (
    pauli_product_family,
    profile_score,
    quantum_correlation_coefficient,
    quantum_correlation_distance,
)
from .ensemble_search import OptimizerSettings
from .entanglement import EntropyFunctional, eof, m_a, ppt_direct, product_warm_start
from .errors import DimensionMismatch, MissingDims
from .numerics import pauli_word
from .qmat import atomic_write_text, format_real, read_qmat, write_qmat
from .xxz import ChainConfig, Schedule, gibbs_state, product_basis_state, production_experiment, xxz_hamiltonian

logger = logging.getLogger("qcorr")

EXIT_INVALID = 2
EXIT_IO = 3
EXIT_DIMS = 4


class UsageError(ValueError):
    pass


def _float_list(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


def _pair(text) -> tuple[int, int]:
    vals = [int(v) for v in str(text).replace(",", " ").split()] if isinstance(text, str) else [int(v) for v in text]
    if len(vals) != 2:
        raise UsageError(f"expected two integers, got {text!r}")
    return vals[0], vals[1]


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in {"1", "true", "yes", "on"}


# per command: option name -> (converter, default)
CHAIN_OPTIONS = {
    "sites": (int, 5),
    "beta": (float, 1.0),
    "delta": (float, 0.5),
    "cut": (int, None),
}
OPTIONS = {
    "gibbs": {**CHAIN_OPTIONS, "out": (str, None)},
    "measure": {
        "measure": (str, None),
        "seed": (int, None),
        "restarts": (int, 16),
        "max_iter": (int, 200),
        "entropy": (str, "linear"),
        "product_warm_start": (_flag, False),
        "observable": (str, None),
        "profile": (_flag, False),
        "a": (str, "Z"),
        "a2": (str, "Z"),
        "out": (str, None),
    },
    "evolve": {
        **CHAIN_OPTIONS,
        "swap": (_pair, (1, 3)),
        "tmax": (float, 0.1),
        "steps": (int, 100),
        "mode": (str, "exact"),
        "initial": (str, None),
        "initial_file": (str, None),
        "no_renormalize": (_flag, False),
        "t_star": (float, 0.01),
        "eof_every": (int, 0),
        "seed": (int, 0),
        "csv_out": (str, None),
        "figure": (str, None),
    },
}
OPTIONS["sweep"] = {
    **{k: v for k, v in OPTIONS["evolve"].items() if k not in {"beta", "delta", "csv_out", "figure", "initial_file"}},
    "betas": (_float_list, [0.1, 1.0, 5.0]),
    "deltas": (_float_list, [0.5, 1.5]),
    "out_dir": (str, None),
    "jobs": (int, 1),
    "figure": (str, None),
}


def _chain_args(p: argparse.ArgumentParser, scan: bool = False) -> None:
    p.add_argument("--sites", type=int, help="chain length (2..6)")
    if not scan:
        p.add_argument("--beta", type=float, help="inverse temperature")
        p.add_argument("--delta", type=float, help="anisotropy")
    p.add_argument("--cut", type=int, help="sites 0..cut-1 form subsystem 1")


def _evolve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--swap", type=int, nargs=2, metavar=("K", "L"), help="exchanged sites")
    p.add_argument("--tmax", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--mode", choices=["exact", "euler"])
    p.add_argument("--initial", help="bit string of the initial basis state, e.g. 01000")
    p.add_argument("--no-renormalize", action="store_const", const=True, default=None)
    p.add_argument("--t-star", type=float, help="probe time reported in the summary")
    p.add_argument("--eof-every", type=int, help="sample EoF every n steps (0 = never)")
    p.add_argument("--seed", type=int, help="seed for the EoF samples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcorr", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qcorr {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gibbs", help="write the XXZ Gibbs state as a QMAT file")
    _chain_args(g)
    g.add_argument("--out", help="output QMAT path")
    g.add_argument("--config")

    m = sub.add_parser("measure", help="evaluate a measure on a stored state")
    m.add_argument("state", help="QMAT file")
    m.add_argument("--measure", choices=["eof", "ma", "ppt", "dqc", "cq"])
    m.add_argument("--seed", type=int, help="required for eof and dqc")
    m.add_argument("--restarts", type=int)
    m.add_argument("--max-iter", type=int, help="rotation sweeps per restart")
    m.add_argument("--entropy", choices=["linear", "von-neumann"])
    m.add_argument("--product-warm-start", action="store_const", const=True, default=None,
                   help="seed the search with the product decomposition when the state is a product")
    m.add_argument("--observable", help="Pauli word (e.g. ZZ) or QMAT path, for dqc")
    m.add_argument("--profile", action="store_const", const=True, default=None,
                   help="dqc over all local Pauli products; reports the largest normalized value")
    m.add_argument("--a", help="observable on factor 1 for cq: Pauli word, proj:K or QMAT path")
    m.add_argument("--a2", help="observable on factor 2 for cq")
    m.add_argument("--out", help="also write the machine line as CSV")
    m.add_argument("--config")

    e = sub.add_parser("evolve", help="entanglement production along the chain dynamics")
    _chain_args(e)
    _evolve_args(e)
    e.add_argument("--initial-file", help="QMAT initial state instead of --initial")
    e.add_argument("--csv-out", help="CSV output path")
    e.add_argument("--figure", help="also render the series to this image file")
    e.add_argument("--config")

    s = sub.add_parser("sweep", help="production experiments over a beta x delta grid")
    _chain_args(s, scan=True)
    _evolve_args(s)
    s.add_argument("--betas", type=_float_list, help="comma separated")
    s.add_argument("--deltas", type=_float_list, help="comma separated")
    s.add_argument("--out-dir", help="directory for per-job CSVs and sweep_summary.csv")
    s.add_argument("--jobs", type=int, help="concurrent jobs")
    s.add_argument("--figure", help="render E_a(t*) against beta to this image file")
    s.add_argument("--config")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags, config-file values and defaults for ``args.command``."""
    table = OPTIONS[args.command]
    section = {}
    if getattr(args, "config", None):
        cp = configparser.ConfigParser()
        with open(args.config, encoding="utf-8") as fh:
            cp.read_file(fh)
        if cp.has_section(args.command):
            section = {k.replace("-", "_"): v for k, v in cp.items(args.command)}
        unknown = set(section) - set(table)
        if unknown:
            raise UsageError(f"unknown keys in [{args.command}]: {', '.join(sorted(unknown))}")
    out = {}
    for name, (conv, default) in table.items():
        flag = getattr(args, name, None)
        if flag is not None:
            out[name] = flag
        elif name in section:
            try:
                out[name] = conv(section[name])
            except ValueError as exc:
                raise UsageError(f"config key {name}: {exc}") from exc
        else:
            out[name] = default
    return out


def _chain(opts: dict, **override) -> ChainConfig:
    kw = dict(sites=opts["sites"], beta=opts.get("beta", 1.0), delta=opts.get("delta", 0.5), cut=opts["cut"])
    # the exchanged pair does not enter the Hamiltonian; any valid pair will do
    kw["swap_pair"] = tuple(opts["swap"]) if "swap" in opts else (0, 1)
    kw.update(override)
    return ChainConfig(**kw)


def _load_state(path) -> DensityMatrix:
    m, dims = read_qmat(path)
    return DensityMatrix(m, dims)


def _local_observable(spec: str, d: int) -> np.ndarray:
    if spec.startswith("proj:"):
        k = int(spec[5:])
        if not 0 <= k < d:
            raise DimensionMismatch(f"projector index {k} outside dimension {d}")
        p = np.zeros((d, d), dtype=complex)
        p[k, k] = 1.0
        return p
    if os.path.exists(spec):
        a, _ = read_qmat(spec)
    elif set(spec) <= set("IXYZ") and spec:
        a = pauli_word(spec)
    else:
        raise UsageError(f"observable {spec!r} is neither a Pauli word, proj:K, nor a file")
    if a.shape[0] != d:
        raise DimensionMismatch(f"observable of size {a.shape[0]} for dimension {d}")
    return a


def _settings(opts: dict) -> OptimizerSettings:
    if opts["seed"] is None:
        raise UsageError(f"--seed is required for {opts['measure']}")
    return OptimizerSettings(seed=opts["seed"], restarts=opts["restarts"], max_iter=opts["max_iter"])


def cmd_gibbs(opts: dict) -> int:
    if not opts["out"]:
        raise UsageError("--out is required")
    cfg = _chain(opts)
    rho = gibbs_state(xxz_hamiltonian(cfg), cfg.beta, cfg.dims)
    write_qmat(opts["out"], rho.matrix, cfg.dims)
    print(f"wrote Gibbs state: sites={cfg.sites} beta={cfg.beta:g} delta={cfg.delta:g} dims={cfg.dims} -> {opts['out']}")
    return 0


def cmd_measure(args, opts: dict) -> int:
    which = opts["measure"]
    if which is None:
        raise UsageError("--measure is required")
    rho = _load_state(args.state)
    if which != "ppt" and which != "ma" and rho.dims is None:
        raise MissingDims(f"{args.state} has no DIMS line")
    report = []
    if which == "ppt":
        v = ppt_direct(rho)
        value, converged = ("true" if v.is_ppt else "false"), "true"
        report.append(f"minimum partial-transpose eigenvalue: {v.min_pt_eigenvalue:.12g}")
    elif which == "ma":
        if rho.dims is None:
            raise MissingDims(f"{args.state} has no DIMS line")
        value, converged = format_real(m_a(rho)), "true"
    elif which == "eof":
        f = EntropyFunctional.parse(opts["entropy"])
        warm = product_warm_start(rho) if opts["product_warm_start"] else None
        if opts["product_warm_start"] and warm is None:
            report.append("state is not a product of its reductions; no warm start used")
        res = eof(rho, f, _settings(opts), warm_start=warm)
        value, converged = format_real(res.value), str(res.converged).lower()
        report.append(f"entropy: {f.value}; ensemble size {len(res.best_ensemble)}; random restarts {res.restarts_used}")
    elif which == "dqc":
        opt = _settings(opts)
        warm = product_warm_start(rho) if opts["product_warm_start"] else None
        if opts["profile"]:
            results = [quantum_correlation_distance(rho, a, opt, warm_start=warm) for a in pauli_product_family(rho.dims)]
            value = format_real(profile_score(results))
            converged = str(all(r.converged for r in results)).lower()
            report.append(f"profile over {len(results)} local Pauli products (normalized by operator norm)")
        else:
            if not opts["observable"]:
                raise UsageError("dqc needs --observable or --profile")
            obs = _local_observable(opts["observable"], rho.dim)
            res = quantum_correlation_distance(rho, obs, opt, warm_start=warm)
            value, converged = format_real(res.value), str(res.converged).lower()
            report.append(f"observable {opts['observable']}; random restarts {res.restarts_used}")
    elif which == "cq":
        d1, d2 = rho.dims
        rep = quantum_correlation_coefficient(rho, _local_observable(opts["a"], d1), _local_observable(opts["a2"], d2))
        value, converged = format_real(rep.value), "true"
        report.append(f"covariance {rep.numerator:.12g}; variances {rep.variances[0]:.12g}, {rep.variances[1]:.12g}")
    else:
        raise UsageError(f"unknown measure {which!r}")
    for line in report:
        print(line)
    machine = f"{which},{value},{converged}"
    print(machine)
    if opts["out"]:
        atomic_write_text(opts["out"], "measure,value,converged\n" + machine + "\n")
    return 0


def _schedule(opts: dict) -> Schedule:
    eof_settings = OptimizerSettings(seed=opts["seed"], restarts=2, max_iter=50)
    return Schedule(
        tmax=opts["tmax"], steps=opts["steps"], mode=opts["mode"], renormalize=not opts["no_renormalize"],
        t_star=opts["t_star"], eof_every=opts["eof_every"], eof_settings=eof_settings,
    )


def _initial(opts: dict, cfg: ChainConfig) -> DensityMatrix | None:
    if opts.get("initial_file"):
        rho = _load_state(opts["initial_file"])
        if rho.dim != cfg.dim:
            raise DimensionMismatch(f"initial state has dimension {rho.dim}, chain needs {cfg.dim}")
        return rho.with_dims(cfg.dims)
    bits = opts["initial"]
    if bits is None:
        return None
    if len(bits) != cfg.sites or set(bits) - {"0", "1"}:
        raise DimensionMismatch(f"initial bit string {bits!r} does not describe {cfg.sites} sites")
    return product_basis_state(bits, cfg.dims)


def _summary_line(summary) -> str:
    sign = {1: "+", -1: "-", 0: "0"}[summary.slope_sign]
    return (
        f"summary: sign(E_a/t) at t={summary.first_time:g} is {sign} "
        f"(E_a/t = {summary.first_slope:.6e}); E_a({summary.t_star:g}) = {summary.ea_at_t_star:.6e}; "
        f"max trace drift {summary.max_trace_drift:.3e}"
    )


def cmd_evolve(opts: dict) -> int:
    if not opts["csv_out"]:
        raise UsageError("--csv-out is required")
    cfg = _chain(opts)
    series, summary = production_experiment(cfg, _initial(opts, cfg), _schedule(opts))
    atomic_write_text(opts["csv_out"], series.to_csv())
    if opts["figure"]:
        from .plotting import plot_series

        plot_series(series, opts["figure"], f"sites={cfg.sites}, beta={cfg.beta:g}, delta={cfg.delta:g}")
    print(_summary_line(summary))
    for c in summary.eof_checks:
        print(f"eof check t={c.t:g}: M={c.formation:.6e} <= M^a={c.ma:.6e}; E={c.production:.6e} <= E_a={c.production_bound:.6e}; {'ok' if c.holds else 'VIOLATED'}")
    return 0


def _job_name(beta: float, delta: float) -> str:
    return f"series_beta={beta:g}_delta={delta:g}.csv"


def cmd_sweep(opts: dict) -> int:
    if not opts["out_dir"]:
        raise UsageError("--out-dir is required")
    out = Path(opts["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    grid = [(b, d) for b in opts["betas"] for d in opts["deltas"]]
    if not grid:
        raise UsageError("empty parameter grid")
    cfgs = {key: _chain(opts, beta=key[0], delta=key[1]) for key in grid}
    initial = _initial(opts, next(iter(cfgs.values())))
    schedule = _schedule(opts)

    def job(key):
        series, summary = production_experiment(cfgs[key], initial, schedule)
        atomic_write_text(out / _job_name(*key), series.to_csv())
        return key, summary

    with ThreadPoolExecutor(max_workers=max(1, opts["jobs"])) as pool:
        done = dict(pool.map(job, grid))
    # aggregation runs after every job finished, in grid order
    rows = ["beta,delta,first_slope,slope_sign,ea_t_star,max_trace_drift"]
    records = []
    for key in grid:
        s = done[key]
        rows.append(",".join([format_real(key[0]), format_real(key[1]), format_real(s.first_slope),
                              str(s.slope_sign), format_real(s.ea_at_t_star), format_real(s.max_trace_drift)]))
        records.append({"beta": key[0], "delta": key[1], "ea_t_star": s.ea_at_t_star})
    atomic_write_text(out / "sweep_summary.csv", "\n".join(rows) + "\n")
    if opts["figure"]:
        from .plotting import plot_sweep

        plot_sweep(records, opts["figure"])
    for key in grid:
        print(f"beta={key[0]:g} delta={key[1]:g}: " + _summary_line(done[key]))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve(args)
        if args.command == "gibbs":
            return cmd_gibbs(opts)
        if args.command == "measure":
            return cmd_measure(args, opts)
        if args.command == "evolve":
            return cmd_evolve(opts)
        return cmd_sweep(opts)
    except (DimensionMismatch, MissingDims) as exc:
        print(f"qcorr: dimension error: {exc}", file=sys.stderr)
        return EXIT_DIMS
    except OSError as exc:
        print(f"qcorr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, configparser.Error) as exc:
        print(f"qcorr: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
