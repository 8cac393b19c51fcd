"""Command-line entry point: ``stablewalk <command> [options]``.

Every command builds a kernel from a ``[kernel]`` config section (or flags),
runs one computation and writes a CSV and a JSON artifact named
``<command>-<hash>.<ext>`` in ``--out``, where ``<hash>`` is a content hash of
the resolved configuration.  Reruns with the same configuration overwrite the
same files with identical bytes.

Config files are INI text with one section per command::

    [kernel]
    d = 1
    alpha = 0.75
    angular.kind = constant

    [verify]
    t_list = 1
    rho_list = 10 30 100

Flags override file values.  Exit codes: 0 success, 2 bad configuration or
parameters, 3 a tolerance could not be met, 4 an internal integrity failure.
Errors are reported as one JSON object on stderr.
"""
import argparse
import configparser
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .density import CutoffFunction, StableDensity, pmf_fft, pmf_series
from .errors import IntegrityError, ParameterError, StableWalkError, ValidationError
from .io import content_hash, write_csv, write_json
from .kernel import ANGULAR_KINDS, cached_kernel, kernel_spec_from_mapping
from .limits import central_report, large_deviation_report, lemma_bounds_report
from .spectral import StableSymbol, one_minus_ahat
from .walker import estimate_pmf

LOGGER = logging.getLogger("stablewalk")

COMMANDS = ("kernel", "symbol", "pmf", "stable", "simulate", "verify")
REGIMES = ("central", "ldp", "lemmas")

# command parameters: name -> (type, default)
PARAMS = {
    "kernel": {"radius": (int, 10)},
    "symbol": {"k_max": (float, math.pi), "n_k": (int, 64), "direction": ("floats", None),
               "grid": (int, 0), "tol": (float, 1e-10)},
    "pmf": {"t": (float, None), "method": (str, "fft"), "N": (int, 0), "box": (int, 64),
            "tol": (float, 1e-8)},
    "stable": {"r_min": (float, 0.01), "r_max": (float, 100.0), "n_points": (int, 41),
               "direction": ("floats", None)},
    "simulate": {"t": (float, None), "n": (int, None), "seed": (int, 0), "box": (int, 20),
                 "level": (float, 0.99)},
    "verify": {"t_list": ("floats", None), "rho_list": ("floats", None), "A": (float, 3.0),
               "rel_tol": (float, 0.01), "psi": (str, "exp")},
}
KERNEL_KEYS = {"d": int, "alpha": float, "angular.kind": str, "angular.params": str,
               "R_near": int, "R_box": int}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of printing usage and exiting."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _convert(kind, raw, name):
    if raw is None:
        return None
    try:
        if kind == "floats":
            if isinstance(raw, (list, tuple)):
                return [float(v) for v in raw]
            return [float(v) for v in str(raw).replace(",", " ").split()]
        return kind(raw)
    except ValueError:
        raise ValidationError(f"cannot parse {name} = {raw!r}") from None


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI file with [kernel] and per-command sections")
    common.add_argument("--out", default=None, help="output directory (default: current)")
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    common.add_argument("--cache", default=None,
                        help="kernel cache directory (default: $STABLEWALK_CACHE)")
    common.add_argument("--log-level", default="WARNING")
    k = common.add_argument_group("kernel")
    k.add_argument("--d", type=int)
    k.add_argument("--alpha", type=float)
    k.add_argument("--angular-kind", dest="angular.kind", choices=ANGULAR_KINDS)
    k.add_argument("--angular-params", dest="angular.params",
                   help="numbers separated by spaces/commas, or a JSON object")
    k.add_argument("--R-near", dest="R_near", type=int)
    k.add_argument("--R-box", dest="R_box", type=int)

    parser = _Parser(prog="stablewalk", description="Heavy-tailed lattice random walk lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kernel", parents=[common], help="build a kernel and tabulate masses")
    p.add_argument("--radius", type=int, help="tabulate a(z) for |z| <= radius")

    p = sub.add_parser("symbol", parents=[common], help="1 - ahat versus its stable approximation")
    p.add_argument("--k-max", dest="k_max", type=float)
    p.add_argument("--n-k", dest="n_k", type=int)
    p.add_argument("--direction", help="ray direction, e.g. '1 1'")
    p.add_argument("--grid", type=int, help="use an N^d torus grid instead of a ray")
    p.add_argument("--tol", type=float)

    p = sub.add_parser("pmf", parents=[common], help="transition probabilities on a box")
    p.add_argument("--t", type=float)
    p.add_argument("--method", choices=("fft", "series"))
    p.add_argument("--N", type=int, help="FFT grid size (0 picks one automatically)")
    p.add_argument("--box", type=int)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("stable", parents=[common], help="stable density along a ray")
    p.add_argument("--r-min", dest="r_min", type=float)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--direction")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo endpoint histogram")
    p.add_argument("--t", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--box", type=int)
    p.add_argument("--level", type=float)

    p = sub.add_parser("verify", parents=[common], help="limit-theorem reports")
    p.add_argument("regime", choices=REGIMES)
    p.add_argument("--t-list", dest="t_list")
    p.add_argument("--rho-list", dest="rho_list")
    p.add_argument("--A", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--psi", choices=("exp", "exp2"))
    return parser


def _read_config(path):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        ok = parser.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}") from None
    if not ok:
        raise ValidationError(f"cannot read config file {path}")
    return parser


def resolve(args):
    """Merge config-file sections with command-line flags (flags win)."""
    cfg = _read_config(args.config) if args.config else None
    ns = vars(args)

    ksec = dict(cfg["kernel"]) if cfg is not None and "kernel" in cfg else {}
    unknown = set(ksec) - set(KERNEL_KEYS)
    if unknown:
        raise ValidationError(f"unknown [kernel] keys: {sorted(unknown)}")
    for key in KERNEL_KEYS:
        if ns.get(key) is not None:
            ksec[key] = ns[key]
    kernel_spec = kernel_spec_from_mapping(ksec)

    section = args.command
    csec = dict(cfg[section]) if cfg is not None and section in cfg else {}
    table = PARAMS[section]
    unknown = set(csec) - set(table)
    if unknown:
        raise ValidationError(f"unknown [{section}] keys: {sorted(unknown)}")
    params = {}
    for name, (kind, default) in table.items():
        raw = ns.get(name)
        if raw is None:
            raw = csec.get(name)
        value = _convert(kind, raw, name)
        params[name] = default if value is None else value
    if section == "verify":
        params["regime"] = args.regime
    missing = [n for n, v in params.items() if v is None and n not in ("direction", "t_list", "rho_list")]
    if missing:
        raise ValidationError(f"{section} needs values for {missing}")

    out = args.out
    if out is None and cfg is not None and "output" in cfg:
        out = cfg["output"].get("dir")
    threads = args.threads
    if threads is None and cfg is not None and "run" in cfg:
        threads = _convert(int, cfg["run"].get("threads"), "threads")
    threads = 1 if threads is None else threads
    if threads < 1:
        raise ParameterError("--threads must be >= 1")
    return kernel_spec, params, Path(out or "."), threads


def _direction(d, raw):
    if raw is None:
        v = np.ones(d)
    else:
        v = np.asarray(raw, dtype=float)
        if v.shape != (d,) or not np.any(v):
            raise ParameterError(f"direction must be a nonzero vector of length {d}")
    return v / np.linalg.norm(v)


def _fmt(v):
    return repr(float(v))


def _cmd_kernel(kernel, p, stem):
    R = p["radius"]
    if R < 1:
        raise ParameterError("--radius must be >= 1")
    from .kernel import lattice_ball

    pts = lattice_ball(R, kernel.d)
    mass = kernel.mass(pts)
    write_csv(stem.with_suffix(".csv"), [f"z{i + 1}" for i in range(kernel.d)] + ["a"],
              [[*map(int, z), _fmt(m)] for z, m in zip(pts, mass)])
    tm = kernel.tail_mass(kernel.R_near)
    doc = kernel.to_dict()
    doc["tail_mass_beyond_R_near"] = {"value": tm.value, "lower": tm.lower, "upper": tm.upper}
    write_json(stem.with_suffix(".json"), doc)
    return f"c_norm={kernel.c_norm:.12g} tail(R_near)={tm.value:.4g}"


def _cmd_symbol(kernel, p, stem):
    d = kernel.d
    if p["grid"]:
        n = p["grid"]
        axis = 2.0 * np.pi * (np.arange(n) - n // 2) / n
        ks = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
        ks = ks[np.any(ks != 0, axis=1)]
    else:
        if p["n_k"] < 1 or not p["k_max"] > 0:
            raise ParameterError("symbol ray needs n_k >= 1 and k_max > 0")
        u = _direction(d, p["direction"])
        ks = np.linspace(p["k_max"] / p["n_k"], p["k_max"], p["n_k"])[:, None] * u
    kk = ks[:, 0] if d == 1 else ks
    omega, err = one_minus_ahat(kernel, kk, tol=p["tol"])
    stable = StableSymbol.from_kernel(kernel)(ks)
    resid = stable - omega
    err = np.broadcast_to(err, omega.shape)
    header = [f"k{i + 1}" for i in range(d)] + ["ahat", "stable_approx", "residual", "err"]
    write_csv(stem.with_suffix(".csv"), header,
              [[*map(_fmt, k), _fmt(1.0 - w), _fmt(s), _fmt(r), _fmt(e)]
               for k, w, s, r, e in zip(ks, omega, stable, resid, err)])
    ratio = np.abs(resid) / np.maximum(stable, np.finfo(float).tiny)
    write_json(stem.with_suffix(".json"), {"n_points": int(len(ks)), "err": float(err.max()),
                                           "max_relative_residual": float(ratio.max())})
    return f"points={len(ks)} max|resid|/stable={ratio.max():.3g}"


def _cmd_pmf(kernel, p, stem):
    if p["method"] == "fft":
        table = pmf_fft(kernel, p["t"], N=p["N"] or None, box_radius=p["box"], tol=p["tol"])
    else:
        table = pmf_series(kernel, p["t"], box_radius=p["box"], tol=p["tol"])
    table.to_csv(stem.with_suffix(".csv"))
    doc = {"method": table.method, "t": table.t, "d": table.d, "box_radius": table.box_radius,
           "err_bound": table.err_bound, "tol": p["tol"], "total": table.total,
           "outside_mass": table.outside_mass, "meta": table.meta}
    write_json(stem.with_suffix(".json"), doc)
    return f"rows={table.values.size} err_bound={table.err_bound:.3g} outside_mass={table.outside_mass:.6g}"


def _cmd_stable(kernel, p, stem):
    d = kernel.d
    if not 0 < p["r_min"] < p["r_max"] or p["n_points"] < 2:
        raise ParameterError("stable needs 0 < r_min < r_max and n_points >= 2")
    sd = StableDensity.from_kernel(kernel)
    u = _direction(d, p["direction"])
    radii = np.concatenate([[0.0], np.geomspace(p["r_min"], p["r_max"], p["n_points"])])
    rows = []
    for r in radii:
        y = r * u
        val, err = sd.evaluate(y)
        tail = sd.tail(y) if r > 0 else math.inf
        rows.append([*map(_fmt, y), _fmt(val), _fmt(err), _fmt(val / tail)])
    header = [f"y{i + 1}" for i in range(d)] + ["S", "err", "S_over_tail"]
    write_csv(stem.with_suffix(".csv"), header, rows)
    write_json(stem.with_suffix(".json"), {"S0": float(rows[0][d]), "direction": u,
                                           "tail_ratio_at_r_max": float(rows[-1][-1])})
    return f"S(0)={float(rows[0][d]):.10g} S/tail(r_max)={float(rows[-1][-1]):.4g}"


def _cmd_simulate(kernel, p, stem, threads):
    emp = estimate_pmf(kernel, p["t"], p["n"], p["box"], p["seed"], threads=threads)
    emp.to_csv(stem.with_suffix(".csv"), level=p["level"])
    doc = emp.to_dict(level=p["level"])
    doc.pop("counts", None)
    write_json(stem.with_suffix(".json"), doc)
    return f"paths={emp.n_samples} overflow={emp.overflow} seed={emp.seed}"


def _cmd_verify(kernel, p, stem):
    regime = p["regime"]
    if regime == "central":
        kw = {"A": p["A"]}
        if p["t_list"]:
            kw["t_list"] = tuple(p["t_list"])
        report = central_report(kernel, **kw)
        metric = f"E_last={report.summary['E_last']:.4g} non_increasing={report.summary['non_increasing']}"
    elif regime == "ldp":
        kw = {"rel_tol": p["rel_tol"]}
        if p["t_list"]:
            kw["t_list"] = tuple(p["t_list"])
        if p["rho_list"]:
            kw["rho_list"] = tuple(p["rho_list"])
        report = large_deviation_report(kernel, **kw)
        metric = f"last={report.summary['last']}"
    else:
        kw = {"psi": CutoffFunction(p["psi"])}
        if p["t_list"]:
            kw["t_list"] = tuple(p["t_list"])
        if p["rho_list"]:
            kw["rho_list"] = tuple(p["rho_list"])
        report = lemma_bounds_report(kernel, **kw)
        metric = (f"C_spread={report.summary['C_spread']:.3g} "
                  f"doubling_min={report.summary['doubling_min']:.3g}")
    report.to_csv(stem.with_suffix(".csv"))
    report.to_json(stem.with_suffix(".json"))
    return metric


def run(argv=None):
    """Parse ``argv``, run one command and return the exit status."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        kernel_spec, params, out, threads = resolve(args)
        kernel = cached_kernel(kernel_spec, args.cache)
        command = args.command if args.command != "verify" else f"verify-{params['regime']}"
        tag = content_hash({"command": command, "kernel": kernel_spec, "params": params})
        stem = out / f"{command}-{tag}"
        if args.command == "simulate":
            metric = _cmd_simulate(kernel, params, stem, threads)
        else:
            metric = globals()[f"_cmd_{args.command}"](kernel, params, stem)
    except StableWalkError as exc:
        return _fail(exc, exc.exit_code)
    except (MemoryError, FloatingPointError, OverflowError) as exc:
        return _fail(exc, 3)
    except OSError as exc:
        return _fail(exc, 2)
    except Exception as exc:  # noqa: BLE001 - anything else is a bug in the package
        LOGGER.debug("internal error", exc_info=True)
        return _fail(IntegrityError(f"{type(exc).__name__}: {exc}"), 4)
    print(f"{command} d={kernel.d} alpha={kernel.alpha:g} {metric} -> {stem}.csv")
    return 0


def _fail(exc, code):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("estimate", "achieved"):
        val = getattr(exc, attr, None)
        if isinstance(val, (int, float)) and not isinstance(val, bool):
            doc[attr] = float(val)
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
