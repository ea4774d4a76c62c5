"""Run configuration: parsing, validation and region/kernel construction.

A run configuration is a JSON document::

    {
      "schema_version": 1,
      "suites": ["thm22"],
      "region": {"domain": "disc", "alpha": [1], "k": 1},
      "kernel": "auto",
      "sampling": {"n": 100, "strata": 12, "seed": 7},
      "tolerances": {"ball_rel": 1e-8},
      "options": {},
      "units": {"distance": "gauge", "angle": "radian"},
      "output_dir": "reports"
    }

Every quantity is dimensionless; ``units`` records the conventions
(distances are gauge distances to the boundary, angles are in radians) so
a stored report is self-describing.  ``sampling.seed`` is mandatory in a
file: there is no nondeterministic default.  ``sampling.n`` is the main
sample count of each suite (pairs, samples per probe, finest node count);
``null`` keeps the suite default.

Region fields: ``domain`` (``disc``, ``polydisc``, ``ball``, ``egg``),
``n`` (dimension of polydisc/ball), ``p`` (egg exponents), and either a
single successor ``alpha``/``k`` or a ``chain`` of ``{"alpha", "k"}``
entries.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .domains import RadialProfile, SuccessorChain, SuccessorRegion, SuccessorSpec, ball, disc, egg, polydisc

__all__ = [
    "ConfigError",
    "SUITES",
    "KERNEL_VARIANTS",
    "TOLERANCE_KEYS",
    "RegionConfig",
    "RunConfig",
    "load_config",
    "parse_config",
]

SCHEMA_VERSION = 1
SUITES = ("thm22", "lemma34", "mobius", "defining", "schur", "project")
KERNEL_VARIANTS = ("auto", "closed", "series", "successor")
UNITS = {"distance": ("gauge",), "angle": ("radian",)}
DOMAINS = ("disc", "polydisc", "ball", "egg")

#: recognised tolerance keys per suite, with defaults
TOLERANCE_KEYS = {
    "thm22": {"ball_rel": 1e-8, "series_rel": 1e-5, "expansion_abs": 1e-10, "series_tail": 1e-10},
    "lemma34": {"slope_tol": 0.05, "r2_min": 0.99, "bounded_ratio": 2.0, "decision_eps": 0.9},
    "mobius": {"identity": 1e-12, "radial": 1e-10},
    "defining": {"property": 1e-8},
    "schur": {"stability": 3.0, "blowup": 1e3},
    "project": {"sup_error": 1e-3, "idempotence": 1e-3, "adjointness": 1e-8, "p2_ratio": 0.02},
}
OPTION_KEYS = {"deltas", "eps", "chunks", "p", "n_nodes", "n_inner", "degree", "node_counts"}


class ConfigError(ValueError):
    """The configuration does not parse or does not validate (exit code 2)."""


def _floats(x, name) -> tuple:
    try:
        vals = tuple(float(v) for v in (x if isinstance(x, (list, tuple)) else [x]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number or a list of numbers") from exc
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{name} must be finite")
    return vals


def _int(x, name, minimum=None) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ConfigError(f"{name} must be an integer")
    if minimum is not None and x < minimum:
        raise ConfigError(f"{name} must be >= {minimum}")
    return int(x)


@dataclass(frozen=True)
class RegionConfig:
    """Region description: a catalog base, optionally with successor data."""

    domain: str | None = None
    n: int | None = None
    p: tuple | None = None
    alpha: tuple | None = None
    k: int | None = None
    chain: tuple | None = None

    @classmethod
    def from_dict(cls, d) -> "RegionConfig":
        if d is None:
            return cls()
        if not isinstance(d, dict):
            raise ConfigError("region must be an object")
        unknown = set(d) - {"domain", "n", "p", "alpha", "k", "chain"}
        if unknown:
            raise ConfigError(f"unknown region fields {sorted(unknown)}")
        domain = d.get("domain")
        if domain is not None and domain not in DOMAINS:
            raise ConfigError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
        n = None if d.get("n") is None else _int(d["n"], "region.n", 1)
        p = None if d.get("p") is None else _floats(d["p"], "region.p")
        alpha = None if d.get("alpha") is None else _floats(d["alpha"], "region.alpha")
        k = None if d.get("k") is None else _int(d["k"], "region.k", 1)
        chain = None
        if d.get("chain") is not None:
            if not isinstance(d["chain"], list) or not d["chain"]:
                raise ConfigError("region.chain must be a nonempty list")
            chain = tuple((_floats(e.get("alpha"), "chain.alpha"), _int(e.get("k", 1), "chain.k", 1))
                          for e in d["chain"])
            if alpha is not None:
                raise ConfigError("give either alpha/k or chain, not both")
        if alpha is not None and any(a <= 0 for a in alpha):
            raise ConfigError("successor exponents must be positive")
        if domain == "egg" and p is None:
            raise ConfigError("egg domains need the exponent list p")
        if domain != "egg" and p is not None:
            raise ConfigError("p is only meaningful for egg domains")
        if domain == "disc" and n not in (None, 1):
            raise ConfigError("the disc has n = 1")
        out = cls(domain, n, p, alpha, k, chain)
        if out.domain is not None:
            try:
                out.region()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return out

    @property
    def given(self) -> bool:
        return self.domain is not None or self.alpha is not None or self.chain is not None

    @property
    def is_successor(self) -> bool:
        return self.alpha is not None or self.chain is not None

    def base(self) -> RadialProfile:
        domain = self.domain or "disc"
        if domain == "disc":
            return disc()
        if domain == "polydisc":
            return polydisc(self.n or 1)
        if domain == "ball":
            return ball(self.n or 1)
        return egg(self.p)

    def specs(self) -> tuple:
        if self.chain is not None:
            return tuple(SuccessorSpec(a, k) for a, k in self.chain)
        if self.alpha is not None:
            return (SuccessorSpec(self.alpha, self.k or 1),)
        return ()

    def region(self) -> RadialProfile:
        base = self.base()
        specs = self.specs()
        if not specs:
            return base
        if any(s.n != base.n for s in specs):
            raise ValueError(f"alpha has {specs[0].n} entries but the base has dimension {base.n}")
        return SuccessorRegion(base, specs[0] if len(specs) == 1 else SuccessorChain(specs))

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.chain is not None:
            d["chain"] = [{"alpha": list(a), "k": k} for a, k in self.chain]
        return {key: (list(v) if isinstance(v, tuple) else v) for key, v in d.items() if v is not None}


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration (see the module docstring for the format)."""

    suites: tuple
    seed: int
    region: RegionConfig = field(default_factory=RegionConfig)
    kernel: str = "auto"
    n: int | None = None
    strata: int = 12
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    output_dir: str = "reports"

    def tol(self, suite: str, key: str) -> float:
        return float(self.tolerances.get(key, TOLERANCE_KEYS[suite][key]))

    def option(self, key, default=None):
        return self.options.get(key, default)

    def record(self) -> dict:
        """Deterministic part of the configuration (recorded in reports).

        The output directory is left out: it does not influence results.
        """
        return {
            "schema_version": SCHEMA_VERSION,
            "suites": list(self.suites),
            "region": self.region.to_dict(),
            "kernel": self.kernel,
            "sampling": {"n": self.n, "strata": self.strata, "seed": self.seed},
            "tolerances": dict(sorted(self.tolerances.items())),
            "options": dict(sorted(self.options.items())),
            "units": {"distance": "gauge", "angle": "radian"},
        }

    def for_suite(self, suite: str) -> "RunConfig":
        return RunConfig((suite,), self.seed, self.region, self.kernel, self.n, self.strata,
                         self.tolerances, self.options, self.output_dir)


def parse_config(d: dict, require_seed: bool = True) -> RunConfig:
    """Validate a configuration mapping and build a :class:`RunConfig`."""
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(d) - {"schema_version", "suites", "suite", "region", "kernel", "sampling", "tolerances",
                        "options", "units", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown configuration fields {sorted(unknown)}")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    suites = d.get("suites", d.get("suite"))
    if suites is None:
        raise ConfigError("no suite selected")
    suites = [suites] if isinstance(suites, str) else list(suites)
    if "all" in suites:
        suites = list(SUITES)
    bad = [s for s in suites if s not in SUITES]
    if bad or not suites:
        raise ConfigError(f"unknown suite(s) {bad}; expected one of {SUITES + ('all',)}")
    suites = tuple(dict.fromkeys(suites))
    sampling = d.get("sampling", {})
    if not isinstance(sampling, dict):
        raise ConfigError("sampling must be an object")
    unknown = set(sampling) - {"n", "strata", "seed"}
    if unknown:
        raise ConfigError(f"unknown sampling fields {sorted(unknown)}")
    if "seed" not in sampling:
        if require_seed:
            raise ConfigError("sampling.seed is required (no nondeterministic default)")
    seed = _int(sampling.get("seed", 0), "sampling.seed", 0)
    n = None if sampling.get("n") is None else _int(sampling["n"], "sampling.n", 1)
    strata = _int(sampling.get("strata", 12), "sampling.strata", 2)
    kernel = d.get("kernel", "auto")
    if kernel not in KERNEL_VARIANTS:
        raise ConfigError(f"unknown kernel variant {kernel!r}; expected one of {KERNEL_VARIANTS}")
    tolerances = d.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("tolerances must be an object")
    known = {k for s in suites for k in TOLERANCE_KEYS[s]}
    unknown = set(tolerances) - known
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)} for suites {list(suites)}")
    tolerances = {k: _floats(v, f"tolerances.{k}")[0] for k, v in tolerances.items()}
    if any(v <= 0 for v in tolerances.values()):
        raise ConfigError("tolerances must be positive")
    options = d.get("options", {})
    if not isinstance(options, dict) or set(options) - OPTION_KEYS:
        raise ConfigError(f"options must be an object with keys from {sorted(OPTION_KEYS)}")
    options = _validate_options(options)
    units = d.get("units", {})
    if not isinstance(units, dict):
        raise ConfigError("units must be an object")
    for key, val in units.items():
        if key not in UNITS or val not in UNITS[key]:
            raise ConfigError(f"unsupported unit {key}={val!r}; supported: {UNITS}")
    region = RegionConfig.from_dict(d.get("region"))
    out = d.get("output_dir", "reports")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir must be a nonempty string")
    return RunConfig(suites, seed, region, kernel, n, strata, tolerances, options, out)


def _validate_options(options: dict) -> dict:
    out = {}
    for key, val in options.items():
        if key in ("deltas", "eps", "p"):
            out[key] = list(_floats(val, f"options.{key}"))
        elif key == "node_counts":
            out[key] = [_int(v, "options.node_counts", 16) for v in (val if isinstance(val, list) else [val])]
        elif key == "chunks":
            if not isinstance(val, list) or len(val) != 2:
                raise ConfigError("options.chunks must be [start, stop]")
            a, b = _int(val[0], "chunks.start", 0), _int(val[1], "chunks.stop", 1)
            if b <= a:
                raise ConfigError("options.chunks must satisfy start < stop")
            out[key] = [a, b]
        else:
            out[key] = _int(val, f"options.{key}", 1)
    if "eps" in out and any(not 0 < e < 1 for e in out["eps"]):
        raise ConfigError("options.eps values must lie in (0, 1)")
    if "p" in out and any(p <= 1 for p in out["p"]):
        raise ConfigError("options.p values must exceed 1")
    return out


def load_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)
