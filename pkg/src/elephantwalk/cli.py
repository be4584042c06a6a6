"""Command-line front end: one experiment per invocation, CSV/JSON outputs
plus a JSON manifest that is enough to regenerate every output byte.

    elephantwalk collide --p 0.5 --p2 0.6 --horizon 100000 --replicas 200 --seed 7 --out runs/a
    elephantwalk --config runs/a/manifest.json --out runs/a2     # byte-identical rerun
    elephantwalk report runs/a/manifest.json runs/b/manifest.json --out summary
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .bvn import phi_bound, phi_many, quadrant_prob
from .duo import PairParams, collide_replica, default_grid, lil_constant_theory
from .erw import WalkParams, doubling_horizons, exact_moments, simulate_many
from .errors import NumericalError
from .lil import (GeometricGrid, alpha_diagnostic, block_quantities, delta_sequence,
                  er_ratio_table, lil_statistic)
from .rng import NORMAL_TRANSFORM, StreamKey, parse_seed
from .sgp import Kernel, make_kernel, sample_paths

log = logging.getLogger("elephantwalk")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
MANIFEST_NAME = "manifest.json"


# -- configuration -------------------------------------------------------------

@dataclass
class SimulateParams:
    p: float = 0.5
    q: float = 0.5
    steps: int = 1000


@dataclass
class CollideParams:
    p: float = 0.5
    q: float = 0.5
    p2: float = 0.5
    q2: float = 0.5
    horizon: int = 10000


@dataclass
class KernelChoice:
    variant: str = "fbm"
    H: float = 0.5
    beta: float = 0.0
    gamma: float = 0.0
    p: float = 0.5
    p2: float = 0.6
    alpha_stable: float = 1.0
    r11: float = 1.0

    def build(self) -> Kernel:
        v = self.variant.lower()
        if v == "fbm":
            return make_kernel(v, H=self.H)
        if v == "rlfbm":
            return make_kernel(v, beta=self.beta, gamma=self.gamma)
        if v == "erwdiff":
            return make_kernel(v, p=self.p, p2=self.p2)
        return make_kernel(v, alpha=self.alpha_stable, r11=self.r11)


@dataclass
class KernelParams(KernelChoice):
    tmin: float = 1.0
    tmax: float = 1024.0
    points: int = 64
    spacing: str = "geometric"


@dataclass
class LilParams(KernelChoice):
    alpha: float = 16.0
    nmax: int = 30
    ratio_n: list = field(default_factory=list)


@dataclass
class BvnParams:
    delta: float = 0.0
    a: float = 0.0
    b: float = 0.0


@dataclass
class ReportParams:
    manifests: list = field(default_factory=list)


PARAMS = {
    "simulate": SimulateParams,
    "collide": CollideParams,
    "kernel": KernelParams,
    "lil": LilParams,
    "bvn": BvnParams,
    "report": ReportParams,
}


def _coerce(name: str, kind: str, value):
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{name} must be a number, got {value!r}")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ValueError(f"{name} must be a string, got {value!r}")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise ValueError(f"{name} must be a list, got {value!r}")
        return list(value)
    raise TypeError(kind)


def _params_from_dict(cls, data: dict):
    if not isinstance(data, dict):
        raise ValueError("params must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValueError(f"unknown keys for {cls.__name__}: {unknown}")
    kwargs = {k: _coerce(k, known[k].type, v) for k, v in data.items()}
    return cls(**kwargs)


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one invocation; defaults are explicit."""

    subcommand: str
    seed: int = 0
    replicas: int = 100
    replica_start: int = 0
    threads: int = 1
    params: Any = None

    def __post_init__(self):
        if self.subcommand not in PARAMS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if self.params is None:
            self.params = PARAMS[self.subcommand]()
        parse_seed(self.seed)
        if self.replicas < 0:
            raise ValueError("replicas must be >= 0")
        if self.replica_start < 0 or self.replica_start + self.replicas > 2**32:
            raise ValueError("replica range must lie in [0, 2**32)")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "seed": self.seed,
            "replicas": self.replicas,
            "replica_start": self.replica_start,
            "threads": self.threads,
            "params": dataclasses.asdict(self.params),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        if "config" in data and "subcommand" in data and "outputs" in data:
            data = data["config"]  # a manifest
        allowed = {"subcommand", "seed", "replicas", "replica_start", "threads", "params"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        if "subcommand" not in data:
            raise ValueError("config needs a 'subcommand'")
        sub = data["subcommand"]
        if sub not in PARAMS:
            raise ValueError(f"unknown subcommand {sub!r}")
        seed = parse_seed(data.get("seed", 0))
        ints = {k: _coerce(k, "int", data[k]) for k in ("replicas", "replica_start", "threads") if k in data}
        params = _params_from_dict(PARAMS[sub], data.get("params", {}))
        return cls(sub, seed, params=params, **ints)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @property
    def key(self) -> StreamKey:
        return StreamKey(self.seed, self.replica_start)


# -- output helpers --------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def csv_bytes(header: Sequence[str], rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def json_bytes(obj) -> bytes:
    return (json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n").encode("utf-8")


@dataclass
class Output:
    name: str
    data: bytes
    columns: list | None = None


@dataclass
class RunResult:
    outputs: list
    primary: str | None = None
    keys: list = field(default_factory=list)
    text: str = ""


def _map_ordered(fn: Callable[[int], Any], n: int, threads: int) -> list:
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _chunks(total: int, threads: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(total / max(threads, 1)))
    return [(s, min(size, total - s)) for s in range(0, total, size)]


# -- subcommands -----------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig) -> RunResult:
    prm: SimulateParams = cfg.params
    walk = WalkParams(prm.p, prm.q)
    if prm.steps < 1:
        raise ValueError("steps must be >= 1")
    hz = doubling_horizons(1, prm.steps)
    chunks = _chunks(cfg.replicas, cfg.threads)

    def chunk(i):
        start, size = chunks[i]
        return simulate_many(walk, hz, size, cfg.key.with_replica(cfg.replica_start + start))

    parts = _map_ordered(chunk, len(chunks), cfg.threads)
    pos = np.vstack(parts) if parts else np.empty((0, len(hz)), dtype=np.int64)
    cols = ["replica", "n", "position"]
    rows = ((cfg.replica_start + r, h, pos[r, i]) for r in range(pos.shape[0]) for i, h in enumerate(hz))
    mean, var = exact_moments(walk, prm.steps)
    final = pos[:, -1].astype(float)
    moments = {
        "n": prm.steps, "exact_mean": mean, "exact_variance": var,
        "empirical_mean": float(final.mean()) if final.size else None,
        "empirical_variance": float(final.var(ddof=1)) if final.size > 1 else None,
        "regime": walk.regime.value,
    }
    text = (f"S_{prm.steps}: exact mean {mean:.6g}, variance {var:.6g}; "
            f"{final.size} replicas")
    return RunResult([Output("positions.csv", csv_bytes(cols, rows), cols),
                      Output("moments.json", json_bytes(moments))],
                     "positions.csv", ["n"], text)


def run_collide(cfg: ExperimentConfig) -> RunResult:
    prm: CollideParams = cfg.params
    pair = PairParams.of(prm.p, prm.q, prm.p2, prm.q2)
    if prm.horizon < 1:
        raise ValueError("horizon must be >= 1")
    grid = default_grid(prm.horizon) if prm.horizon >= 16 else None
    base = cfg.key
    rows = _map_ordered(
        lambda r: collide_replica(pair, prm.horizon, base.with_replica(cfg.replica_start + r), grid),
        cfg.replicas, cfg.threads)
    cols = ["replica", "horizon", "count", "last_collision", "stat_plus", "stat_minus"]
    data = csv_bytes(cols, (dataclasses.astuple(r) for r in rows))
    counts = np.array([r.count for r in rows], dtype=float)
    text = f"{len(rows)} pairs to n={prm.horizon}: mean collisions {counts.mean() if counts.size else float('nan'):.6g}"
    return RunResult([Output("collide.csv", data, cols)], "collide.csv", ["horizon"], text)


def _grid(prm: KernelParams) -> np.ndarray:
    if not 0 < prm.tmin < prm.tmax or prm.points < 2:
        raise ValueError("need 0 < tmin < tmax and points >= 2")
    if prm.spacing == "geometric":
        return np.geomspace(prm.tmin, prm.tmax, prm.points)
    if prm.spacing == "linear":
        return np.linspace(prm.tmin, prm.tmax, prm.points)
    raise ValueError(f"spacing must be 'geometric' or 'linear', got {prm.spacing!r}")


def run_kernel(cfg: ExperimentConfig) -> RunResult:
    prm: KernelParams = cfg.params
    kern = prm.build()
    t = _grid(prm)
    cov = kern.cov_matrix(t)
    cov_cols = ["s", "t", "cov"]
    cov_rows = ((t[i], t[j], cov[i, j]) for i in range(t.size) for j in range(i, t.size))
    xs = np.geomspace(1.0, 1e6, 61)
    prof_cols = ["x", "h"]
    prof_rows = ((x, kern.h_log(math.log(x))) for x in xs)
    outputs = [Output("kernel.csv", csv_bytes(cov_cols, cov_rows), cov_cols),
               Output("profile.csv", csv_bytes(prof_cols, prof_rows), prof_cols)]
    primary, keys = "profile.csv", ["x"]
    if cfg.replicas:
        paths = sample_paths(kern, t, cfg.replicas, cfg.key)
        cols = ["replica", "t", "value"]
        rows = ((cfg.replica_start + r, t[i], paths[r, i]) for r in range(cfg.replicas) for i in range(t.size))
        outputs.append(Output("paths.csv", csv_bytes(cols, rows), cols))
        primary, keys = "paths.csv", ["t"]
    return RunResult(outputs, primary, keys, f"{kern!r}: rho={kern.rho:.6g}, {t.size} grid points")


def run_lil(cfg: ExperimentConfig) -> RunResult:
    prm: LilParams = cfg.params
    kern = prm.build()
    if prm.nmax < 3:
        raise ValueError("nmax must be >= 3")
    grid = GeometricGrid(prm.alpha, prm.nmax)
    bq = block_quantities(kern, grid)
    deltas = delta_sequence(kern, prm.alpha, prm.nmax - 1)
    ns = [int(n) for n in prm.ratio_n] or list(range(2, prm.nmax + 1))
    reports = er_ratio_table(kern, prm.alpha, ns)
    blocks_cols = ["k", "t_k", "gamma_k", "a_k"]
    delta_cols = ["j", "delta_j"]
    ratio_cols = ["n", "numerator", "denominator", "ratio"]
    outputs = [
        Output("blocks.csv", csv_bytes(blocks_cols, zip(bq.k, bq.times, bq.gamma, bq.a)), blocks_cols),
        Output("deltas.csv", csv_bytes(delta_cols, enumerate(deltas)), delta_cols),
        Output("ratio.csv", csv_bytes(ratio_cols, ((r.n, r.numerator, r.denominator, r.ratio)
                                                   for r in reports)), ratio_cols),
    ]
    primary, keys = "ratio.csv", ["n"]
    if cfg.replicas:
        paths = sample_paths(kern, grid.times, cfg.replicas, cfg.key)
        st = lil_statistic(kern, grid, paths)
        sigma = bq.sigma
        cols = ["replica", "stat_plus", "stat_minus", "events", "stat_plus_over_sigma"]
        if st.times.size:
            plus, minus = st.running_max_plus[:, -1], st.running_max_minus[:, -1]
        else:
            plus = minus = np.full(cfg.replicas, math.nan)
        rows = ((cfg.replica_start + r, plus[r], minus[r], int(st.events[r].sum()), plus[r] / sigma)
                for r in range(cfg.replicas))
        outputs.append(Output("stats.csv", csv_bytes(cols, rows), cols))
        primary, keys = "stats.csv", []
    diag = {"alpha": prm.alpha, "L0_minus_h1": alpha_diagnostic(kern, prm.alpha),
            "rho": kern.rho, "sigma": bq.sigma}
    outputs.append(Output("diagnostics.json", json_bytes(diag)))
    text = (f"{kern!r}, alpha={prm.alpha:g}: ratio {reports[0].ratio:.4g} (n={reports[0].n}) -> "
            f"{reports[-1].ratio:.4g} (n={reports[-1].n}); L_0 - h(1) = {diag['L0_minus_h1']:.3g}")
    return RunResult(outputs, primary, keys, text)


def run_bvn(cfg: ExperimentConfig) -> RunResult:
    prm: BvnParams = cfg.params
    vals, errs = phi_many(prm.delta, prm.a, prm.b, return_error=True)
    value, err = float(vals), float(errs)
    bound = phi_bound(prm.delta, prm.a, prm.b) if prm.a > 0 and prm.b > 0 else None
    res = {"delta": prm.delta, "a": prm.a, "b": prm.b, "phi": value, "error_estimate": err,
           "bound": bound, "quadrant": quadrant_prob(prm.delta, prm.a, prm.b)}
    cols = ["delta", "a", "b", "phi", "error_estimate", "bound", "quadrant"]
    row = [res[c] for c in cols]
    return RunResult([Output("bvn.json", json_bytes(res)), Output("bvn.csv", csv_bytes(cols, [row]), cols)],
                     "bvn.csv", ["delta", "a", "b"], f"phi({prm.delta:g}, {prm.a:g}, {prm.b:g}) = {value:.17g}")


def run_report(cfg: ExperimentConfig) -> RunResult:
    prm: ReportParams = cfg.params
    if not prm.manifests:
        raise ValueError("report needs at least one manifest")
    groups: dict[str, dict] = {}
    versions = set()
    for mpath in prm.manifests:
        mpath = Path(mpath)
        if mpath.is_dir():
            mpath = mpath / "manifest.json"
        man = json.loads(mpath.read_text(encoding="utf-8"))
        versions.add((man.get("version"), man.get("schema_version")))
        if man.get("primary") is None:
            raise ValueError(f"{mpath} has no tabular output to aggregate")
        conf = man["config"]
        label = json.dumps({"subcommand": conf["subcommand"], "params": conf["params"]}, sort_keys=True)
        g = groups.setdefault(label, {"config": conf, "keys": man.get("keys", []),
                                      "columns": man["columns"][man["primary"]], "rows": [], "sources": []})
        if man["columns"][man["primary"]] != g["columns"]:
            raise ValueError(f"{mpath}: column schema differs from earlier manifests with the same parameters")
        data = (mpath.parent / man["primary"]).read_text(encoding="utf-8")
        g["rows"].extend(list(csv.DictReader(io.StringIO(data))))
        g["sources"].append(str(mpath))
    if len(versions) > 1:
        log.warning("manifests come from different tool/schema versions: %s", sorted(map(str, versions)))
    cols = ["group", "key", "column", "n", "mean", "std_error", "q05", "q50", "q95"]
    out_rows, lines = [], []
    for gi, (label, g) in enumerate(groups.items()):
        keys = g["keys"]
        value_cols = [c for c in g["columns"] if c not in keys and c != "replica"]
        lines.append(f"group {gi}: {label} ({len(g['rows'])} rows from {len(g['sources'])} manifest(s))")
        theory = _theory_line(g["config"])
        if theory:
            lines.append("  " + theory)
        by_key: dict[str, list] = {}
        for row in g["rows"]:
            by_key.setdefault("|".join(row[k] for k in keys), []).append(row)
        for kval, rows in by_key.items():
            for c in value_cols:
                vals = np.array([float(r[c]) for r in rows if r[c] != ""], dtype=float)
                vals = vals[np.isfinite(vals)]
                if vals.size == 0:
                    continue
                se = vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else math.nan
                q = np.quantile(vals, [0.05, 0.5, 0.95])
                out_rows.append([gi, kval, c, vals.size, vals.mean(), se, *q])
                lines.append(f"  {kval or '-':>12} {c:>22}: n={vals.size} mean={vals.mean():.6g} "
                             f"se={se:.3g} q05={q[0]:.4g} q50={q[1]:.4g} q95={q[2]:.4g}")
    text = "\n".join(lines) + "\n"
    return RunResult([Output("summary.csv", csv_bytes(cols, out_rows), cols),
                      Output("summary.txt", text.encode("utf-8"))], "summary.csv", ["group", "key", "column"], text)


def _theory_line(conf: dict) -> str:
    if conf["subcommand"] != "collide":
        return ""
    p = conf["params"]
    pair = PairParams.of(p["p"], p["q"], p["p2"], p["q2"])
    try:
        return f"theoretical LIL constant sqrt(1/(3-4p)+1/(3-4p')) = {lil_constant_theory(pair):.6g}"
    except ValueError as exc:
        return f"no diffusive LIL constant: {exc}"


RUNNERS = {
    "simulate": run_simulate,
    "collide": run_collide,
    "kernel": run_kernel,
    "lil": run_lil,
    "bvn": run_bvn,
    "report": run_report,
}


def run(cfg: ExperimentConfig, out: Path) -> dict:
    """Execute ``cfg``, write outputs and the manifest into ``out``."""
    t0 = time.perf_counter()
    result = RUNNERS[cfg.subcommand](cfg)
    out.mkdir(parents=True, exist_ok=True)
    digests, columns = {}, {}
    for o in result.outputs:
        (out / o.name).write_bytes(o.data)
        digests[o.name] = hashlib.sha256(o.data).hexdigest()
        if o.columns is not None:
            columns[o.name] = o.columns
    manifest = {
        "tool": "elephantwalk",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "subcommand": cfg.subcommand,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "seed_hex": f"0x{cfg.seed:016x}",
        "normal_transform": NORMAL_TRANSFORM,
        "outputs": digests,
        "columns": columns,
        "primary": result.primary,
        "keys": result.keys,
        "duration_seconds": time.perf_counter() - t0,
    }
    (out / MANIFEST_NAME).write_bytes(json_bytes(manifest))
    manifest["text"] = result.text
    return manifest


# -- argument parsing ------------------------------------------------------------

def _add_kernel_flags(p: argparse.ArgumentParser):
    d = KernelChoice()
    p.add_argument("--variant", default=d.variant, choices=["fbm", "rlfbm", "erwdiff", "stable"])
    p.add_argument("--H", type=float, default=d.H, help="fbm Hurst index")
    p.add_argument("--beta", type=float, default=d.beta, help="rlfbm kernel exponent")
    p.add_argument("--gamma", type=float, default=d.gamma, help="rlfbm weight exponent")
    p.add_argument("--p", type=float, default=d.p, help="erwdiff first memory parameter")
    p.add_argument("--p2", type=float, default=d.p2, help="erwdiff second memory parameter")
    p.add_argument("--alpha-stable", type=float, default=d.alpha_stable, help="stable index")
    p.add_argument("--r11", type=float, default=d.r11, help="stable kernel variance at t=1")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=parse_seed, default=0, help="decimal or 0x-hex seed")
    common.add_argument("--replicas", type=int, default=100)
    common.add_argument("--replica-start", type=int, default=0, help="first replica index")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", type=Path, default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="elephantwalk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="experiment config or manifest JSON to run")
    parser.add_argument("--out", type=Path, dest="top_out", default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand")

    s = sub.add_parser("simulate", parents=[common], help="single ERW paths")
    s.add_argument("--p", type=float, default=SimulateParams.p)
    s.add_argument("--q", type=float, default=SimulateParams.q)
    s.add_argument("--steps", type=int, default=SimulateParams.steps)

    c = sub.add_parser("collide", parents=[common], help="pairs of independent ERWs")
    for name in ("p", "q", "p2", "q2"):
        c.add_argument(f"--{name}", type=float, default=getattr(CollideParams, name))
    c.add_argument("--horizon", type=int, default=CollideParams.horizon)

    k = sub.add_parser("kernel", parents=[common], help="kernel tables and exact samples")
    _add_kernel_flags(k)
    kd = KernelParams()
    k.add_argument("--tmin", type=float, default=kd.tmin)
    k.add_argument("--tmax", type=float, default=kd.tmax)
    k.add_argument("--points", type=int, default=kd.points)
    k.add_argument("--spacing", default=kd.spacing, choices=["geometric", "linear"])

    l = sub.add_parser("lil", parents=[common], help="block quantities and Erdos-Renyi ratio")
    _add_kernel_flags(l)
    l.add_argument("--alpha", type=float, default=LilParams.alpha, help="grid ratio")
    l.add_argument("--nmax", type=int, default=LilParams.nmax)
    l.add_argument("--ratio-n", type=int, nargs="+", default=[], help="n values for the ratio table")

    b = sub.add_parser("bvn", parents=[common], help="quadrant tail difference phi")
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--a", type=float, required=True)
    b.add_argument("--b", type=float, required=True)

    r = sub.add_parser("report", parents=[common], help="aggregate runs")
    r.add_argument("manifests", nargs="+", type=Path, help="manifest.json files or run directories")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cls = PARAMS[args.subcommand]
    values = {}
    for f in dataclasses.fields(cls):
        v = getattr(args, f.name)
        values[f.name] = [str(x) for x in v] if f.name == "manifests" else v
    return ExperimentConfig(args.subcommand, args.seed, args.replicas, args.replica_start,
                            args.threads, cls(**values))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is not None:
            if args.subcommand is not None:
                parser.error("--config replaces the subcommand; give one or the other")
            cfg = ExperimentConfig.from_json(args.config.read_text(encoding="utf-8"))
            out = args.top_out
        elif args.subcommand is None:
            parser.error("a subcommand or --config is required")
        else:
            cfg = config_from_args(args)
            out = args.out or args.top_out
        out = out or Path(f"run-{cfg.subcommand}")
        manifest = run(cfg, out)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"elephantwalk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"elephantwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(manifest["text"].rstrip())
    print(f"wrote {', '.join(manifest['outputs'])} and {MANIFEST_NAME} to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
