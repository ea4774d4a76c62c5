"""Command-line front end.

Verbs
-----
``verify <suite>``
    Run a suite (``thm22``, ``lemma34``, ``mobius``, ``defining``,
    ``schur``, ``project`` or ``all``) from flags or ``--config file.json``;
    writes ``<out>/<suite>.jsonl`` and ``<out>/<suite>.csv``.
``kernel eval``
    Evaluate a kernel ``K(z; conj zeta)`` of a configured region.
``project``
    Reproducing study and L^p ratio tables of the discretized projection
    on a configured region.
``merge``
    Merge partial Monte Carlo reports of one configuration.

Exit codes: 0 pass, 1 fail, 2 configuration/usage error, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .config import KERNEL_VARIANTS, SUITES, ConfigError, RegionConfig, RunConfig, load_config, parse_config
from .reports import EXIT_CODES, MergeError, bundle_reports, merge_reports, read_report, worst_status

__all__ = ["main", "build_parser", "run", "config_from_args", "EXIT_PARSE"]

EXIT_PARSE = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting, so errors map to exit 2."""

    def error(self, message):
        raise ConfigError(message)


def _add_region_flags(p):
    g = p.add_argument_group("region")
    g.add_argument("--domain", choices=("disc", "polydisc", "ball", "egg"), help="catalog base domain")
    g.add_argument("--n", type=int, dest="dim", help="dimension of a polydisc or ball")
    g.add_argument("--p", type=float, nargs="+", dest="egg_p", help="egg exponents p_j (sum |z_j|^(2/p_j) < 1)")
    g.add_argument("--alpha", type=float, nargs="+", help="successor exponent vector")
    g.add_argument("--k", type=int, help="successor fibre dimension (also the ball dimension of lemma34)")
    g.add_argument("--chain", help='iterated successor as JSON, e.g. \'[{"alpha":[1],"k":1},{"alpha":[2],"k":1}]\'')
    g.add_argument("--kernel", choices=KERNEL_VARIANTS, default="auto", help="kernel variant (default auto)")


def _add_run_flags(p):
    g = p.add_argument_group("sampling and output")
    g.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    g.add_argument("--samples", type=int, help="main sample count of the suite (pairs, MC draws, finest nodes)")
    g.add_argument("--strata", type=int, default=12, help="boundary strata M (default 12)")
    g.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="override a tolerance")
    g.add_argument("--out", default="reports", help="output directory (default ./reports)")
    g.add_argument("--delta", type=float, nargs="+", help="lemma34: delta values")
    g.add_argument("--eps", type=float, nargs="+", help="epsilon grid (lemma34, schur)")
    g.add_argument("--chunks", help="schur: partial Monte Carlo run over chunks START:STOP")
    g.add_argument("--p-list", type=float, nargs="+", dest="p_list", help="L^p exponents (schur, project)")
    g.add_argument("--nodes", type=int, help="node count of the L^p / invariant checks")
    g.add_argument("--inner", type=int, help="inner importance samples per evaluation point")
    g.add_argument("--timestamp", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bergman-lab", description="Numerical verification of Bergman kernel and projection "
                                                       "estimates on Reinhardt and successor domains.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", nargs="?", help="one of " + ", ".join(SUITES + ("all",)))
    v.add_argument("--config", help="JSON run configuration (replaces all other flags)")
    _add_region_flags(v)
    _add_run_flags(v)

    k = sub.add_parser("kernel", help="kernel utilities")
    ksub = k.add_subparsers(dest="kernel_verb", required=True, parser_class=_Parser)
    ke = ksub.add_parser("eval", help="evaluate K(z; conj zeta)")
    _add_region_flags(ke)
    ke.add_argument("--z", required=True, help="comma-separated complex coordinates, e.g. '0.1+0.2j,0.3'")
    ke.add_argument("--zeta", required=True, help="comma-separated complex coordinates")

    pr = sub.add_parser("project", help="discretized projection study on a region")
    _add_region_flags(pr)
    _add_run_flags(pr)

    m = sub.add_parser("merge", help="merge partial Monte Carlo reports")
    m.add_argument("paths", nargs="+", help="report files (.jsonl)")
    m.add_argument("-o", "--output", required=True, help="merged report path (.jsonl)")
    m.add_argument("--timestamp", help=argparse.SUPPRESS)
    return parser


def _region_dict(a) -> dict | None:
    d = {}
    if a.domain is not None:
        d["domain"] = a.domain
    if a.dim is not None:
        d["n"] = a.dim
    if a.egg_p is not None:
        d["p"] = a.egg_p
    if a.alpha is not None:
        d["alpha"] = a.alpha
    if a.k is not None:
        d["k"] = a.k
    if a.chain is not None:
        try:
            d["chain"] = json.loads(a.chain)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--chain is not valid JSON: {exc}") from exc
    return d or None


def config_from_args(a, suites) -> RunConfig:
    """Build a validated :class:`RunConfig` from parsed flags."""
    tolerances = {}
    for item in a.tol:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            tolerances[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"--tol {key}: {val!r} is not a number") from exc
    options = {}
    if a.delta is not None:
        options["deltas"] = a.delta
    if a.eps is not None:
        options["eps"] = a.eps
    if a.p_list is not None:
        options["p"] = a.p_list
    if a.nodes is not None:
        options["n_nodes"] = a.nodes
    if a.inner is not None:
        options["n_inner"] = a.inner
    if a.chunks is not None:
        start, sep, stop = a.chunks.partition(":")
        try:
            options["chunks"] = [int(start), int(stop)]
        except ValueError as exc:
            raise ConfigError("--chunks expects START:STOP") from exc
    d = {
        "schema_version": 1,
        "suites": suites,
        "region": _region_dict(a),
        "kernel": a.kernel,
        "sampling": {"n": a.samples, "strata": a.strata, "seed": a.seed},
        "tolerances": tolerances,
        "options": options,
        "output_dir": a.out,
    }
    return parse_config(d)


def _aggregate(statuses) -> int:
    return EXIT_CODES[worst_status(statuses)]


def _emit(report, out_dir, name, timestamp=None) -> None:
    path = os.path.join(out_dir, f"{name}.jsonl")
    report.write(path, timestamp)
    report.write_csv(os.path.join(out_dir, f"{name}.csv"))


def _print_report(report, out=None) -> None:
    out = sys.stdout if out is None else out
    if report.settings.get("bundle"):
        print(f"[{report.status.upper():>12}] {report.suite}", file=out)
        for name, m in report.metrics.items():
            head = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                             for k, v in sorted(m.items()) if k != "status" and not isinstance(v, (dict, list)))
            print(f"    {m['status']:>12}  {name}: {head}", file=out)
    else:
        print(report.summary_line(), file=out)


def run(cfg: RunConfig, timestamp: str | None = None, out=None) -> int:
    """Run every selected suite, write its report files and return the exit code."""
    out = sys.stdout if out is None else out
    from .suites import run_suite

    statuses = []
    for suite in cfg.suites:
        t0 = time.perf_counter()
        rep = run_suite(suite, cfg)
        rep.header_extra = {"elapsed_seconds": round(time.perf_counter() - t0, 3)}
        _emit(rep, cfg.output_dir, suite, timestamp)
        _print_report(rep, out)
        statuses.append(rep.status)
    names = {code: status for status, code in EXIT_CODES.items()}
    print(f"overall: {names[_aggregate(statuses)]} "
          f"({len(statuses)} suite(s); reports in {cfg.output_dir})", file=out)
    return _aggregate(statuses)


def _points(text, n) -> np.ndarray:
    try:
        vals = [complex(s.strip().replace(" ", "")) for s in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse point {text!r}") from exc
    if len(vals) != n:
        raise ConfigError(f"point {text!r} has {len(vals)} coordinates, the region has dimension {n}")
    return np.array(vals)


def _kernel_eval(a) -> int:
    from .suites import build_kernel

    rc = RegionConfig.from_dict(_region_dict(a) or {"domain": "disc"})
    region = rc.region()
    z = _points(a.z, region.n)
    zeta = _points(a.zeta, region.n)
    if not (region.contains(z[None])[0] and region.contains(zeta[None])[0]):
        raise ConfigError(f"both points must lie inside {region.key}")
    K = build_kernel(region, a.kernel, points=np.stack([z, zeta]))
    val = complex(np.asarray(K.eval(z[None], zeta[None]))[0])
    print(json.dumps({"region": region.key, "kernel": getattr(K, "key", ""), "z": [[c.real, c.imag] for c in z],
                      "zeta": [[c.real, c.imag] for c in zeta], "value": [val.real, val.imag]}))
    return 0


def _project(a) -> int:
    from .projection import ProjectionOperator, TestFamily, lp_ratios, reproducing_study, stratified_nodes
    from .suites import _weight, build_kernel

    cfg = config_from_args(a, ["project"])
    rc = cfg.region if cfg.region.given else RegionConfig.from_dict({"domain": "disc"})
    region = rc.region()
    K = build_kernel(region, cfg.kernel)
    finest = cfg.n or 100_000
    counts = [c for c in (10_000,) if c < finest] + [finest]
    parts = {"reproducing": reproducing_study(K, counts, seed=cfg.seed, tol=cfg.tol("project", "sup_error"))}
    nodes = stratified_nodes(region, cfg.option("n_nodes", 4096), cfg.seed, grading=10.0)
    op = ProjectionOperator(K, nodes)
    h = _weight(region)
    p_list = tuple(cfg.option("p", (1.5, 2.0, 3.0, 6.0)))
    n_inner = cfg.option("n_inner", 2000)
    for mode in ("signed", "absolute"):
        opm = op.with_mode(mode)
        parts[f"lp_{mode}_polynomials"] = lp_ratios(opm, TestFamily.polynomials(region, 5, 3, cfg.seed), p_list,
                                                    n_inner=n_inner, seed=cfg.seed)
        parts[f"lp_{mode}_boundary"] = lp_ratios(opm, TestFamily.boundary(h, (0.1, 0.5, 0.9), 2.0), p_list,
                                                 n_inner=n_inner, seed=cfg.seed,
                                                 family_by_p=lambda p: TestFamily.boundary(h, (0.1, 0.5, 0.9), p))
    rep = bundle_reports("project", parts, cfg.record())
    _emit(rep, cfg.output_dir, "project", a.timestamp)
    _print_report(rep)
    return rep.exit_code


def _merge(a) -> int:
    try:
        reports = [read_report(p)[1] for p in a.paths]
    except (OSError, ValueError, KeyError, StopIteration) as exc:
        raise ConfigError(f"cannot read report: {exc}") from exc
    merged = merge_reports(reports)
    merged.write(a.output, a.timestamp)
    base, _ = os.path.splitext(a.output)
    merged.write_csv(base + ".csv")
    _print_report(merged)
    return merged.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.verb == "verify":
            if a.config is not None:
                cfg = load_config(a.config)
                if a.suite is not None and a.suite not in cfg.suites and a.suite != "all":
                    raise ConfigError(f"suite {a.suite!r} is not selected in {a.config}")
            else:
                if a.suite is None:
                    raise ConfigError("verify needs a suite name or --config")
                cfg = config_from_args(a, [a.suite])
            return run(cfg, a.timestamp)
        if a.verb == "kernel":
            return _kernel_eval(a)
        if a.verb == "project":
            return _project(a)
        return _merge(a)
    except (ConfigError, MergeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
