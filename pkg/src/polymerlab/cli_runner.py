"""Command-line front end: ``polymerlab <command> --config FILE``.

Config files are INI-style::

    [experiment]
    beta = 0.3
    dim = 3
    horizon = 50
    seed = 1

    [environment]
    family = Gaussian
    stddev = 1.0

    [grids]
    p = 1, 2
    n = 5, 10, 20

Every artifact carries the hash of the canonical config.  Worker count and
output directory are runtime settings: they are kept out of the hash and of
``config.echo`` so that artifacts do not depend on them.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import condition_lab as cl
from . import oracles, overshoot_lab as ol, polymer_core as pc
from .env_model import (EnvironmentSpec, MomentError, TwoPoint, log_mgf, sample_field,
                        spec_from_config, spec_to_config)

COMMANDS = ("simulate", "moments", "overshoot", "check-conditions", "decompose", "oracle")
EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

# key -> (type, default); None default means required
EXPERIMENT_KEYS = {
    "command": (str, ""),
    "beta": (float, None),
    "dim": (int, 1),
    "horizon": (int, 10),
    "replicas": (int, 100),
    "seed": (int, 0),
    "workers": (int, 1),
    "output_dir": (str, "polymerlab-out"),
    "prune_tol": (float, 0.0),
    "deadline": (float, 0.0),
}
GRID_KEYS = {"p": float, "n": int, "t": float, "A": float, "beta": float}
RUNTIME_KEYS = ("workers", "output_dir")


class ConfigError(ValueError):
    """Parse or validation failure; ``errors`` holds ``(line, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    spec: EnvironmentSpec | None
    beta: float
    dim: int = 1
    horizon: int = 10
    replicas: int = 100
    seed: int = 0
    grids: dict = field(default_factory=dict)
    output_dir: str = "polymerlab-out"
    workers: int = 1
    prune_tol: float = 0.0
    deadline: float = 0.0

    def grid(self, name, default):
        return tuple(self.grids.get(name, default))

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------- parsing

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_numbers(text):
    """(section, key) -> line number, and section -> header line number."""
    where = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip()
            where[section, None] = i
            continue
        m = _KEY.match(line)
        if m and section is not None and not line[:1].isspace():
            where.setdefault((section, m.group(1).strip()), i)
    return where


def _convert(kind, raw):
    if kind is int:
        v = float(raw)
        if not v.is_integer():
            raise ValueError
        return int(v)
    return kind(raw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config; raises :class:`ConfigError` listing every problem."""
    lines = _line_numbers(text)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([(getattr(exc, "lineno", None), str(exc).splitlines()[0])]) from None
    errors = []

    def at(section, key=None):
        return lines.get((section, key))

    for sec in parser.sections():
        if sec not in ("experiment", "environment", "grids"):
            errors.append((at(sec), f"unknown section [{sec}]"))
    if not parser.has_section("experiment"):
        raise ConfigError(errors + [(None, "missing section [experiment]")])

    values = {}
    exp = parser["experiment"]
    for key, raw in exp.items():
        if key not in EXPERIMENT_KEYS:
            errors.append((at("experiment", key), f"unknown key '{key}' in [experiment]"))
            continue
        kind = EXPERIMENT_KEYS[key][0]
        try:
            values[key] = _convert(kind, raw)
        except ValueError:
            errors.append((at("experiment", key), f"'{key}' expects {kind.__name__}, got {raw!r}"))
    for key, (_, default) in EXPERIMENT_KEYS.items():
        if key not in values and key not in exp:
            if default is None:
                errors.append((at("experiment"), f"missing required key '{key}' in [experiment]"))
            else:
                values[key] = default

    grids = {}
    if parser.has_section("grids"):
        for key, raw in parser["grids"].items():
            if key not in GRID_KEYS:
                errors.append((at("grids", key), f"unknown grid '{key}'"))
                continue
            try:
                grids[key] = tuple(_convert(GRID_KEYS[key], v) for v in raw.split(",") if v.strip())
            except ValueError:
                errors.append((at("grids", key), f"grid '{key}' expects a comma-separated list of "
                                                 f"{GRID_KEYS[key].__name__}"))

    spec = None
    if parser.has_section("environment"):
        sec = dict(parser["environment"])
        try:
            spec = spec_from_config(sec)
        except (ValueError, TypeError) as exc:
            bad = [k for k in sec if k != "family" and str(k) in str(exc)]
            ln = at("environment", bad[0]) if bad else at("environment", "family") or at("environment")
            errors.append((ln, f"[environment]: {exc}"))

    if errors:
        raise ConfigError(errors)
    cfg = ExperimentConfig(spec=spec, grids=grids, **values)
    _validate(cfg, at)
    return cfg


def _validate(cfg: ExperimentConfig, at=lambda *a: None):
    errors = []

    def need(ok, key, msg, section="experiment"):
        if not ok:
            errors.append((at(section, key), msg))

    need(cfg.command in COMMANDS + ("",), "command", f"command must be one of {', '.join(COMMANDS)}")
    need(math.isfinite(cfg.beta) and cfg.beta >= 0, "beta", f"beta must be finite and >= 0, got {cfg.beta}")
    need(cfg.dim in (1, 2, 3, 4), "dim", f"dim must be in 1..4, got {cfg.dim}")
    need(cfg.horizon >= 1, "horizon", f"horizon must be >= 1, got {cfg.horizon}")
    need(cfg.replicas >= 1, "replicas", f"replicas must be >= 1, got {cfg.replicas}")
    need(0 <= cfg.seed < 2 ** 64, "seed", f"seed must lie in [0, 2^64), got {cfg.seed}")
    need(cfg.workers >= 1, "workers", f"workers must be >= 1, got {cfg.workers}")
    need(cfg.prune_tol >= 0, "prune_tol", "prune_tol must be >= 0")
    need(cfg.deadline >= 0, "deadline", "deadline must be >= 0 (0 disables it)")
    if cfg.spec is not None and math.isfinite(cfg.beta):
        need(cfg.beta <= cfg.spec.beta_max, "beta",
             f"beta={cfg.beta} exceeds beta_max={cfg.spec.beta_max} for {cfg.spec.family}")
    for p in cfg.grids.get("p", ()):
        need(1 <= p <= 2 or cfg.command == "moments", "p", f"p values must lie in [1, 2], got {p}", "grids")
    for t in cfg.grids.get("t", ()):
        need(t > 1, "t", f"thresholds must exceed 1, got {t}", "grids")
    for n in cfg.grids.get("n", ()):
        need(0 <= n <= cfg.horizon or cfg.command != "moments", "n",
             f"n values must lie in [0, horizon], got {n}", "grids")
    for a in cfg.grids.get("A", ()):
        need(a >= 1, "A", f"A values must be >= 1, got {a}", "grids")
    if cfg.command in ("simulate", "moments", "overshoot", "decompose", "oracle"):
        need(cfg.spec is not None, None, f"command '{cfg.command}' needs an [environment] section",
             "experiment")
    if cfg.command == "oracle":
        need(cfg.horizon <= 8 and cfg.dim <= 2, "horizon", "oracle enumerates paths: need horizon <= 8, dim <= 2")
    if cfg.command == "decompose":
        need(cfg.horizon <= 16, "horizon", "decompose recomputes every restart: need horizon <= 16")
    if errors:
        raise ConfigError(errors)


def format_config(cfg: ExperimentConfig, runtime: bool = True) -> str:
    """Canonical text form; ``parse_config(format_config(c)) == c``."""
    out = ["[experiment]"]
    for key in EXPERIMENT_KEYS:
        if not runtime and key in RUNTIME_KEYS:
            continue
        v = getattr(cfg, key)
        out.append(f"{key} = {repr(v) if isinstance(v, float) else v}")
    if cfg.spec is not None:
        out += ["", "[environment]"]
        out += [f"{k} = {v}" for k, v in spec_to_config(cfg.spec).items()]
    if cfg.grids:
        out += ["", "[grids]"]
        for k in sorted(cfg.grids):
            out.append(f"{k} = " + ", ".join(repr(v) for v in cfg.grids[k]))
    return "\n".join(out) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(format_config(cfg, runtime=False).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- artifacts

class Artifacts:
    def __init__(self, cfg: ExperimentConfig):
        self.dir = Path(cfg.output_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.tag = f"polymerlab {cfg.command} config={config_hash(cfg)}"
        self.files = []

    def csv(self, name, header, rows):
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            fh.write(f"# {self.tag}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self.files.append(name)

    def text(self, name, body):
        (self.dir / name).write_text(body)
        self.files.append(name)

    def json(self, name, obj):
        self.text(name, json.dumps(cl._jsonable(obj), indent=2, sort_keys=True) + "\n")

    def svg(self, name, draw):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        with plt.rc_context({"svg.hashsalt": "polymerlab", "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(6, 4))
            draw(ax)
            fig.tight_layout()
            fig.savefig(self.dir / name, format="svg", metadata={"Date": None, "Creator": None})
            plt.close(fig)
        self.files.append(name)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------- commands

def _trace_records(spec, beta, dim, horizon, seed, prune_tol, start, stop):
    out = np.empty((stop - start, 2, horizon + 1))
    for i, r in enumerate(range(start, stop)):
        tr = pc.run_trace(spec, beta, dim, horizon, seed, replica=r, prune_tol=prune_tol)
        out[i, 0], out[i, 1] = tr.log_scale, tr.mantissa
    return out


def cmd_simulate(cfg, art):
    rec = np.concatenate(ol.map_replicas(_trace_records, (cfg.spec, cfg.beta, cfg.dim, cfg.horizon,
                                                          cfg.seed, cfg.prune_tol), cfg.replicas, cfg.workers))
    art.csv("traces.csv", ["replica", "n", "log_W", "W_mantissa"],
            ((r, n, rec[r, 0, n], rec[r, 1, n]) for r in range(len(rec)) for n in range(cfg.horizon + 1)))
    w_end = np.exp(rec[:, 0, -1] + np.log(rec[:, 1, -1]))
    m, lo, hi, _ = ol.stats.mean_ci(w_end)
    lw = rec[:, 0] + np.log(rec[:, 1])

    def draw(ax):
        for r in range(min(len(rec), 20)):
            ax.plot(np.exp(lw[r]), lw=0.8)
        ax.set_xlabel("n")
        ax.set_ylabel("W_n")
    art.svg("traces.svg", draw)
    summary = {"mean_W_final": m, "ci": [lo, hi], "max_W": float(np.exp(lw.max()))}
    return "PASS", summary


def cmd_moments(cfg, art):
    table = ol.moment_trace(cfg.spec, cfg.beta, cfg.dim, cfg.grid("p", (1.0, 2.0)),
                            cfg.grid("n", sorted({1, cfg.horizon // 4 or 1, cfg.horizon // 2 or 1, cfg.horizon})),
                            cfg.replicas, cfg.seed, cfg.workers, cfg.prune_tol)
    art.csv("moments.csv", ["n", "p", "estimate", "ci_low", "ci_high", "exact_if_p2"],
            [r[:6] for r in table.rows])

    def draw(ax):
        for p in sorted({r[1] for r in table.rows}):
            rs = [r for r in table.rows if r[1] == p]
            ax.errorbar([r[0] for r in rs], [r[2] for r in rs],
                        yerr=[[r[2] - r[3] for r in rs], [r[4] - r[2] for r in rs]], label=f"p={p:g}", capsize=2)
            if p == 2.0 and not math.isnan(rs[0][5]):
                ax.plot([r[0] for r in rs], [r[5] for r in rs], "k--", label="exact p=2")
        ax.set_xlabel("n")
        ax.set_ylabel("E[W_n^p]")
        ax.legend()
    art.svg("moments.svg", draw)
    z = table.z_scores()
    verdict = "PASS" if all(abs(v) <= 4 for _, v in z) else "FAIL"
    return verdict, {"flags": {repr(k): v for k, v in table.flags.items()},
                     "z_scores_p2": [[n, v] for n, v in z]}


def cmd_overshoot(cfg, art):
    A3 = c3 = None
    try:
        chain = cl.condition_chain(cfg.spec, cfg.beta)
        if chain.get("cond2") is not None and chain["cond2"].verdict == "PASS":
            A3, c3 = chain["A3"], chain["c3"]
    except (ValueError, MomentError):
        pass
    exp = ol.martingale_overshoot_experiment(
        cfg.spec, cfg.beta, cfg.dim, cfg.grid("t", (2.0, 4.0, 8.0, 16.0)), cfg.grid("p", (1.0, 1.5, 2.0)),
        cfg.horizon, cfg.replicas, cfg.seed, A3=A3, c3=c3, workers=cfg.workers,
        deadline=cfg.deadline or None, prune_tol=cfg.prune_tol)
    art.csv("overshoot.csv", ["t", "p", "k", "ratio", "ci_low", "ci_high", "hits"], exp.rows)
    art.csv("overshoot_aggregate.csv", ["t", "p", "ratio", "ci_low", "ci_high", "hits"], exp.aggregate)
    if exp.split:
        keys = list(exp.split[0])
        art.csv("overshoot_split.csv", keys, ([s.get(k, math.nan) for k in keys] for s in exp.split))

    def draw(ax):
        ts = sorted({r[0] for r in exp.aggregate})
        ps = sorted({r[1] for r in exp.aggregate})
        grid = np.full((len(ps), len(ts)), np.nan)
        for r in exp.aggregate:
            grid[ps.index(r[1]), ts.index(r[0])] = r[2]
        im = ax.imshow(grid, aspect="auto", origin="lower")
        ax.set_xticks(range(len(ts)), [f"{t:g}" for t in ts])
        ax.set_yticks(range(len(ps)), [f"{p:g}" for p in ps])
        ax.set_xlabel("t")
        ax.set_ylabel("p")
        ax.figure.colorbar(im, ax=ax, label="ratio")
    art.svg("overshoot.svg", draw)
    summary = {"completed": exp.completed, "aborted": exp.aborted, "max_ratio": exp.max_ratio,
               "bookkeeping_gap": exp.bookkeeping_gap, "identity_gap": exp.identity_gap,
               "A3": A3, "c3": c3, "stabilization": exp.details["stabilization"]}
    return exp.verdict, summary


def cmd_check_conditions(cfg, art):
    if cfg.spec is None:
        reports = cl.standard_battery(cfg.grid("beta", (0.5, 1.0))) + cl.prop_battery()
    else:
        reports = [cl.check_condition1(cfg.spec, cfg.beta)]
        try:
            chain = cl.condition_chain(cfg.spec, cfg.beta, p_grid=cfg.grid("p", (1.0, 1.5, 2.0)))
            if chain.get("cond2") is not None:
                reports.append(chain["cond2"])
        except (ValueError, MomentError):
            pass
    art.json("conditions.json", [r.to_dict() for r in reports])
    rows = [(r.condition_id, r.meta.get("family", ""), r.constants.get("beta", ""), r.verdict) for r in reports]
    art.csv("conditions.csv", ["condition", "family", "beta", "verdict"], rows)
    verdicts = [r.verdict for r in reports]
    verdict = "INCONCLUSIVE" if "INCONCLUSIVE" in verdicts else "PASS"
    return verdict, {"reports": [list(r) for r in rows]}


def cmd_decompose(cfg, art):
    rows = []
    worst = 0.0
    for rep in range(cfg.replicas):
        fld = sample_field(cfg.spec, cfg.dim, cfg.horizon, cfg.seed, replica=rep)
        lam = log_mgf(cfg.spec, cfg.beta)
        for n in range(cfg.horizon + 1):
            for k in range(n + 1):
                dec = pc.decompose_at(fld, k, n, cfg.beta, lam)
                err = abs(dec.lhs - dec.rhs) / dec.lhs
                worst = max(worst, err)
                rows.append((rep, k, n, dec.lhs, dec.rhs, err))
    art.csv("decompose.csv", ["replica", "k", "n", "lhs", "rhs", "rel_err"], rows)
    return ("PASS" if worst <= 1e-12 else "FAIL"), {"max_rel_err": worst}


def cmd_oracle(cfg, art):
    rows = []
    worst = 0.0
    lam = log_mgf(cfg.spec, cfg.beta)
    for rep in range(cfg.replicas):
        fld = sample_field(cfg.spec, cfg.dim, cfg.horizon, cfg.seed, replica=rep)
        for n, state in enumerate(pc.states_along(fld, cfg.beta, lam)):
            W_path, _, _ = oracles.path_oracle(fld, cfg.beta, n, lam)
            ls, m = pc.total(state)
            W_dp = m * math.exp(ls)
            err = abs(W_dp - W_path) / W_path
            worst = max(worst, err)
            rows.append((rep, n, W_dp, W_path, err))
    art.csv("oracle.csv", ["replica", "n", "W_dp", "W_paths", "rel_err"], rows)
    summary = {"max_rel_err": worst}
    if isinstance(cfg.spec, TwoPoint) and cfg.dim == 1 and cfg.horizon <= 4:
        means, gap = oracles.martingale_enumeration(cfg.spec, cfg.beta, cfg.horizon)
        summary["martingale_mean_gap"] = float(np.abs(means - 1).max())
        summary["martingale_cond_gap"] = gap
        worst = max(worst, summary["martingale_mean_gap"], gap)
    return ("PASS" if worst <= 1e-12 else "FAIL"), summary


DISPATCH = {"simulate": cmd_simulate, "moments": cmd_moments, "overshoot": cmd_overshoot,
            "check-conditions": cmd_check_conditions, "decompose": cmd_decompose, "oracle": cmd_oracle}


def run(cfg: ExperimentConfig, out=None) -> int:
    """Run one experiment, write artifacts, print a summary and return the exit code.

    0: finished with no INCONCLUSIVE verdict (FAIL is a finding, not an error);
    2: some verdict could not be certified; 1: invalid input or runtime error.
    """
    out = sys.stdout if out is None else out
    art = Artifacts(cfg)
    try:
        verdict, summary = DISPATCH[cfg.command](cfg, art)
    except (ValueError, MomentError, MemoryError, OSError) as exc:
        print(f"polymerlab {cfg.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    art.text("config.echo", format_config(cfg, runtime=False))
    report = {"command": cfg.command, "config_hash": config_hash(cfg), "verdict": verdict,
              "summary": summary, "artifacts": sorted(art.files + ["report.json"])}
    art.json("report.json", report)
    print(f"polymerlab {cfg.command}  [{config_hash(cfg)}]  verdict: {verdict}", file=out)
    for k, v in summary.items():
        if k != "reports":
            print(f"  {k}: {v}", file=out)
    for r in summary.get("reports", []):
        print(f"  {r[0]:<9} {r[1]:<15} beta={r[2]!s:<5} {r[3]}", file=out)
    print(f"  artifacts in {art.dir}", file=out)
    return EXIT_INCONCLUSIVE if verdict == "INCONCLUSIVE" else EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="polymerlab", description="Directed polymer experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--output-dir")
    args = ap.parse_args(argv)
    try:
        text = Path(args.config).read_text()
        cfg = parse_config(text)
    except OSError as exc:
        print(f"polymerlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"polymerlab: invalid config {args.config}:\n{exc}", file=sys.stderr)
        return EXIT_ERROR
    if cfg.command and cfg.command != args.command:
        print(f"polymerlab: config is for '{cfg.command}', not '{args.command}'", file=sys.stderr)
        return EXIT_ERROR
    has_workers = re.search(r"^\s*workers\s*=", text, re.M) is not None
    workers = args.workers or (None if has_workers else os.environ.get("POLYMERLAB_WORKERS"))
    try:
        cfg = cfg.replace(command=args.command,
                          seed=cfg.seed if args.seed is None else args.seed,
                          workers=int(workers) if workers else cfg.workers,
                          output_dir=args.output_dir or cfg.output_dir)
        _validate(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"polymerlab: invalid settings:\n{exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
