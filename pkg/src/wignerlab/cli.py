"""Command line entry point: ``wignerlab {oracle,lln,clt,exact,words,sample}``.

Parameters come from defaults, then an optional ``--config`` JSON file,
then explicit flags (flags win).  Every run writes the fully resolved
config next to its outputs, and every output embeds it, so a run can be
replayed from any one of its files.

Exit codes: 0 ok, 2 config error, 3 enumeration cap / brute-force budget
exceeded, 4 verdict failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, combinatorics as comb, experiments, oracle
from .randmat import (EnsembleSpec, EntryDistribution, empirical_measure, sample_wigner,
                      spectral_measure, spectral_moments)

OUTDIR_ENV = "WIGNERLAB_OUTDIR"

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_VERDICT = 0, 2, 3, 4

DEFAULTS: dict[str, dict[str, Any]] = {
    "oracle": {"kmax": 6, "profile": "gaussian", "diag": None, "cap": None},
    "lln": {"grid": [100, 400, 1600], "K": 6, "replicas": 20, "seed": 0, "diag": "gaussian",
            "offdiag": "gaussian", "threads": None, "method": "auto"},
    "clt": {"N": 500, "K": 4, "replicas": 20000, "seed": 0, "diag": "gaussian",
            "offdiag": "gaussian", "threads": None},
    "exact": {"N": 2, "k": 2, "k2": None, "profile": "gaussian", "diag": None, "replicas": 0,
              "seed": 0, "budget": None, "threads": None},
    "words": {"k": 4, "filter": "wigner", "cap": None, "k2": None},
    "sample": {"N": 10, "K": 10, "seed": 0, "replica": 0, "diag": "gaussian",
               "offdiag": "gaussian", "method": "auto"},
}

# parameters that do not change the content of any output
NON_SEMANTIC = {"threads"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    params: dict[str, Any] = field(default_factory=dict)
    version: str = __version__

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "version": self.version,
                "params": {k: v for k, v in sorted(self.params.items()) if k not in NON_SEMANTIC}}

    @property
    def seed(self) -> int | None:
        return self.params.get("seed")


def _grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wignerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wignerlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, seeded: bool = True) -> None:
        p.add_argument("--config", type=Path, default=None, help="JSON file with parameters; flags override it")
        p.add_argument("--outdir", type=Path, default=None,
                       help=f"output directory (default ${OUTDIR_ENV} or ./runs)")
        if seeded:
            p.add_argument("--seed", type=int, default=None)

    kinds = list(oracle.DISTRIBUTIONS)

    p = sub.add_parser("oracle", help="limiting moments, covariance table A(k,l) and a_k")
    common(p, seeded=False)
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--profile", choices=oracle.PROFILES, default=None)
    p.add_argument("--diag", choices=kinds, default=None, help="diagonal law (default: same as profile)")
    p.add_argument("--cap", type=int, default=None, help="override the pair enumeration cap on k1+k2")

    p = sub.add_parser("lln", help="semicircle law along an N grid")
    common(p)
    p.add_argument("--grid", type=_grid, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--diag", choices=kinds, default=None)
    p.add_argument("--offdiag", choices=kinds, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--method", choices=["auto", "jacobi", "lapack"], default=None)

    p = sub.add_parser("clt", help="CLT for centered moments at one N")
    common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--diag", choices=kinds, default=None)
    p.add_argument("--offdiag", choices=kinds, default=None)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("exact", help="exact finite-N moments by brute force")
    common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k2", type=int, default=None, help="also compute the covariance of orders k and k2")
    p.add_argument("--profile", choices=oracle.PROFILES, default=None)
    p.add_argument("--diag", choices=kinds, default=None)
    p.add_argument("--replicas", type=int, default=None, help="Monte Carlo cross-check when > 0")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("words", help="debug dumps of canonical words")
    p.add_argument("action", choices=["dump"])
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k2", type=int, default=None, help="dump CLT pairs (k, k2) instead of words")
    p.add_argument("--filter", choices=comb.FILTERS, default=None)
    p.add_argument("--cap", type=int, default=None)

    p = sub.add_parser("sample", help="one Wigner matrix: spectral measure and moments as CSV")
    common(p)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--replica", type=int, default=None)
    p.add_argument("--diag", choices=kinds, default=None)
    p.add_argument("--offdiag", choices=kinds, default=None)
    p.add_argument("--method", choices=["auto", "jacobi", "lapack"], default=None)
    return parser


CSV_CONFIG_PREFIX = "# config: "


def load_config_file(path: Path, command: str) -> dict:
    """Parameters from a config file, a report.json, or a CSV written by this tool."""
    try:
        text = Path(path).read_text()
        first = text.split("\n", 1)[0]
        loaded = json.loads(first[len(CSV_CONFIG_PREFIX):] if first.startswith(CSV_CONFIG_PREFIX) else text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config {path} is not a JSON object")
    if isinstance(loaded.get("config"), dict):
        loaded = loaded["config"]
    if "params" in loaded:
        if loaded.get("subcommand", command) != command:
            raise ConfigError(f"config {path} belongs to '{loaded['subcommand']}', not '{command}'")
        loaded = loaded["params"]
    return loaded


def resolve_config(args: argparse.Namespace) -> RunConfig:
    params = dict(DEFAULTS[args.command])
    if getattr(args, "config", None) is not None:
        loaded = load_config_file(args.config, args.command)
        unknown = set(loaded) - set(params)
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        params.update(loaded)
    for key in params:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if params.get("threads") is None and "threads" in params:
        params["threads"] = os.cpu_count() or 1
    return RunConfig(args.command, params)


# -- output helpers -----------------------------------------------------------


def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(rows: Sequence[dict], columns: Sequence[str], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(CSV_CONFIG_PREFIX + json.dumps(config.to_dict(), sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for k, v in _clean(row).items()})
    return buf.getvalue()


def read_csv(path: Path) -> list[dict]:
    """Rows of a CSV written by this tool (the config comment is skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def outdir_root(args: argparse.Namespace) -> Path:
    if getattr(args, "outdir", None) is not None:
        return Path(args.outdir)
    return Path(os.environ.get(OUTDIR_ENV, "runs"))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _run_dir(root: Path, config: RunConfig) -> Path:
    d = root / f"{config.subcommand}-{config.seed}"
    d.mkdir(parents=True, exist_ok=True)
    _write(d / "config.json", dumps(config.to_dict()))
    return d


def _spec(p: dict, N: int | None = None) -> EnsembleSpec:
    return EnsembleSpec(N if N is not None else p["N"], EntryDistribution(p["diag"]),
                        EntryDistribution(p["offdiag"]), p["seed"])


# -- subcommands --------------------------------------------------------------

A_COLUMNS = ["k", "l", "tree", "cycle", "value"]
CLT_COLUMNS = ["k", "a_k", "variance", "variance_se", "predicted_variance", "variance_verdict", "skew",
               "kurtosis", "predicted_kurtosis", "kurtosis_verdict", "gaussian_limit", "ks_statistic",
               "normality_p", "normality_verdict", "centering_se"]
COV_COLUMNS = ["k", "l", "covariance", "se", "predicted", "verdict"]
LLN_COLUMNS = ["N", "k", "replicas", "target", "mean", "sd", "se", "variance",
               "ks_spectral_median", "ks_empirical_median"]


def oracle_document(config: RunConfig) -> dict:
    p = config.params
    prof = oracle.profile(p["profile"], p["diag"])
    kmax = p["kmax"]
    table = oracle.covariance_table(kmax, prof, p["cap"])
    K = kmax
    return {
        "config": config.to_dict(),
        "profile": prof.to_dict(),
        "catalan": [oracle.catalan(n) for n in range(0, kmax // 2 + 1)],
        "semicircle_moments": [oracle.semicircle_moment(k) for k in range(0, kmax + 1)],
        "A": [e.to_dict() for e in table.cells()],
        "a": [{"k": k, "a_k": oracle.a_coefficient(k, p["cap"])} for k in range(1, kmax + 1)],
        "limit_cov": oracle.limit_cov_matrix(K, prof, p["cap"]).tolist(),
        "findings": table.findings(),
    }


def cmd_oracle(config: RunConfig, root: Path) -> int:
    doc = oracle_document(config)
    _write(root / "oracle.json", dumps(doc))
    _write(root / "a-table.csv", csv_text(doc["A"], A_COLUMNS, config))
    for cell in doc["A"]:
        if cell["k"] <= cell["l"]:
            print(f"A({cell['k']},{cell['l']}) = {cell['value']:g}  [tree={cell['tree']}, cycle={cell['cycle']}]")
    print("a_k:", " ".join(f"a{x['k']}={x['a_k']}" for x in doc["a"]))
    return EXIT_OK


def cmd_lln(config: RunConfig, root: Path) -> int:
    p = config.params
    spec = _spec(p, N=p["grid"][0])
    report = experiments.run_lln(spec, p["grid"], p["K"], p["replicas"], p["threads"], p["method"])
    d = _run_dir(root, config)
    _write(d / "report.json", dumps({"config": config.to_dict(), "report": report.to_dict()}))
    _write(d / "tables" / "lln.csv", csv_text(report.rows(), LLN_COLUMNS, config))
    for c in report.cells:
        print(f"N={c.N}: median KS(nu)={c.ks_spectral_median:.4f}  median KS(L)={c.ks_empirical_median:.4f}"
              + (f"  ERROR {c.error}" if c.error else ""))
    print("KS strictly decreasing:", report.ks_strictly_decreasing)
    failed = any(c.error for c in report.cells) or not report.ks_strictly_decreasing
    return EXIT_VERDICT if failed else EXIT_OK


def cmd_clt(config: RunConfig, root: Path) -> int:
    p = config.params
    spec = _spec(p)
    if p["K"] * 2 > comb.PAIR_CAP:
        raise comb.EnumerationCapError(f"enumeration cap exceeded: K={p['K']} needs k1+k2={2 * p['K']}")
    report = experiments.run_clt(spec, p["K"], p["replicas"], p["threads"])
    d = _run_dir(root, config)
    _write(d / "report.json", dumps({"config": config.to_dict(), "report": report.to_dict()}))
    _write(d / "tables" / "moments.csv", csv_text(report.rows(), CLT_COLUMNS, config))
    _write(d / "tables" / "covariances.csv", csv_text(report.covariance_rows(), COV_COLUMNS, config))
    for m in report.moments:
        print(f"k={m.k}: Var={m.variance:.4f} (pred {m.predicted_variance:g}) {m.variance_verdict}; "
              f"normality {m.normality_verdict}" + (f" p={m.normality_p:.3g}" if m.normality_p is not None else ""))
    print("verdict:", report.verdict)
    return EXIT_OK if report.verdict == "pass" else EXIT_VERDICT


def exact_document(config: RunConfig) -> dict:
    p = config.params
    prof = oracle.profile(p["profile"], p["diag"])
    N, k = p["N"], p["k"]
    value = oracle.exact_moment_finite_N(N, k, prof, p["budget"])
    doc: dict[str, Any] = {"config": config.to_dict(), "profile": prof.to_dict(), "N": N, "k": k,
                           "exact": float(value), "exact_str": str(value)}
    if p["k2"] is not None:
        cov = oracle.exact_pair_moment_finite_N(N, k, p["k2"], prof, p["budget"])
        doc.update({"k2": p["k2"], "exact_covariance": float(cov), "exact_covariance_str": str(cov)})
    if p["replicas"] > 0:
        spec = EnsembleSpec(N, EntryDistribution(p["diag"] or p["profile"]),
                            EntryDistribution(p["profile"]), p["seed"])
        m = experiments.simulate_moments(spec, k, p["replicas"], p["threads"])[:, k - 1]
        s = experiments.summarize(m)
        z = (s.mean - float(value)) / s.se if s.se > 0 else (0.0 if s.mean == float(value) else math.inf)
        doc["monte_carlo"] = {"replicas": p["replicas"], "mean": s.mean, "se": s.se, "z": z,
                              "verdict": "pass" if abs(z) <= experiments.N_SE else "fail"}
    return doc


def cmd_exact(config: RunConfig, root: Path) -> int:
    doc = exact_document(config)
    d = _run_dir(root, config)
    _write(d / "report.json", dumps(doc))
    print(f"{doc['exact']:.12g}")
    if "exact_covariance" in doc:
        print(f"covariance({doc['k']},{doc['k2']}) = {doc['exact_covariance']:.12g}")
    mc = doc.get("monte_carlo")
    if mc:
        print(f"Monte Carlo: mean={mc['mean']:.6g} se={mc['se']:.3g} z={mc['z']:.2f} {mc['verdict']}")
        if mc["verdict"] != "pass":
            return EXIT_VERDICT
    return EXIT_OK


def cmd_words(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    p = config.params
    if p["k2"] is not None:
        for a, b, kind in comb.enumerate_clt_pairs(p["k"], p["k2"], cap=p["cap"]):
            out.write(f"{a};{b};{kind.value}\n")
    else:
        for w in comb.enumerate_words(p["k"], p["filter"], cap=p["cap"]):
            out.write(f"{w}\n")
    return EXIT_OK


def cmd_sample(config: RunConfig, root: Path) -> int:
    p = config.params
    spec = _spec(p)
    X = sample_wigner(spec, p["replica"])
    nu = spectral_measure(X, p["method"])
    L = empirical_measure(X, p["method"])
    moments = spectral_moments(X, p["K"])
    d = _run_dir(root, config)
    rows = [{"location": x, "weight": w} for x, w in zip(nu.locations, nu.weights)]
    _write(d / "tables" / "spectral_measure.csv", csv_text(rows, ["location", "weight"], config))
    rows = [{"location": x, "weight": w} for x, w in zip(L.locations, L.weights)]
    _write(d / "tables" / "empirical_measure.csv", csv_text(rows, ["location", "weight"], config))
    rows = [{"k": k, "value": v} for k, v in enumerate(moments, start=1)]
    _write(d / "tables" / "moments.csv", csv_text(rows, ["k", "value"], config))
    print(f"wrote {d}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "words":
            return cmd_words(config)
        root = outdir_root(args)
        handler = {"oracle": cmd_oracle, "lln": cmd_lln, "clt": cmd_clt,
                   "exact": cmd_exact, "sample": cmd_sample}[args.command]
        return handler(config, root)
    except (comb.EnumerationCapError, oracle.BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
