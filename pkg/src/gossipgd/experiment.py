"""Config-driven sweeps: run replicated simulations and tabulate results.

A config file (INI-style, one section per concern) fixes the problem,
topology, sweep axes, schedule and run budget.  Every (sweep point,
replicate) pair derives its own seed from the master seed by a stable
hash, so runs are reproducible one at a time, in any order, and adding
replicates never changes existing ones.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields as dataclass_fields
from itertools import product
from pathlib import Path

import numpy as np

from . import engine
from .diagnostics import fit_loglog_slope
from .problem import SAMPLERS, make_problem, sample_agent_data
from .topology import (
    TOPOLOGY_KINDS,
    WEIGHT_SCHEMES,
    Topology,
    build_gossip_matrix,
    build_topology,
    chebyshev_accelerate,
)
from .tuning import tune_plan

SCHEMA_VERSION = 1

ETA_AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    # problem
    d: int
    gamma: float
    r: float
    R: float
    noise_sigma: float
    sampler: str
    # topology
    kind: str
    weight_scheme: str
    rows: int | None
    cols: int | None
    degree: int | None
    topology_seed: int
    edges: tuple[tuple[int, int], ...] | None
    chebyshev_k: int
    # sweep
    sweep_n: tuple[int, ...]
    sweep_m: tuple[int, ...]
    # schedule: eta is either the token "auto" (tuned per sweep point) or a number
    theta: float
    eta: str | float
    # run
    t_max: int
    stride: int  # 0 means the default max(1, updates // 200)
    replicates: int
    master_seed: int
    protocol: str
    output: str


@dataclass(frozen=True)
class RunRecord:
    """One recorded iteration of one run; field order is the CSV schema."""

    sweep_index: int
    n: int
    m: int
    replicate: int
    t: int
    excess_mean: float
    excess_max: float
    bias_sq: float
    sample_var: float
    network_err_mean: float
    network_err_max: float
    consensus_err: float
    popcov_err_mean: float
    popcov_err_max: float
    residual_err_mean: float
    residual_err_max: float
    eta: float
    theta: float
    t_stop: int
    t_star: int
    regime: str
    sigma2: float
    diverged_at: int  # -1 when the run completed


RUN_RECORD_COLUMNS = tuple(f.name for f in dataclass_fields(RunRecord))


def derive_seed(master_seed: int, sweep_index: int, replicate: int) -> int:
    """Stable 64-bit run seed; independent of all other (point, replicate) pairs."""
    payload = f"{master_seed}:{sweep_index}:{replicate}".encode("ascii")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def _parse_edges(text: str) -> tuple[tuple[int, int], ...]:
    edges = []
    for chunk in text.replace(",", " ").split():
        a, sep, b = chunk.partition("-")
        if not sep:
            raise ValueError(f"edge {chunk!r} is not of the form v-w")
        edges.append((int(a), int(b)))
    return tuple(edges)


class _Section:
    """Typed accessor over one config section with field-level errors."""

    def __init__(self, name, mapping):
        self.name = name
        self.mapping = dict(mapping)

    def take(self, key, conv, default=None, required=False):
        if key not in self.mapping:
            if required:
                raise ValueError(f"[{self.name}] missing required key {key!r}")
            return default
        raw = self.mapping.pop(key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ValueError(f"[{self.name}] {key} = {raw!r}: {exc}") from None

    def finish(self):
        if self.mapping:
            stray = ", ".join(sorted(self.mapping))
            raise ValueError(f"[{self.name}] unknown keys: {stray}")


def _int_list(text: str) -> tuple[int, ...]:
    values = tuple(int(v) for v in text.replace(",", " ").split())
    if not values:
        raise ValueError("empty list")
    return values


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys like T_max and R are case sensitive
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    known = {"problem", "topology", "sweep", "schedule", "run"}
    extra = set(parser.sections()) - known
    if extra:
        raise ValueError(f"unknown config sections: {sorted(extra)}")
    for section in known:
        if not parser.has_section(section):
            raise ValueError(f"missing config section [{section}]")

    prob = _Section("problem", parser["problem"])
    d = prob.take("d", int, required=True)
    gamma = prob.take("gamma", float, required=True)
    r = prob.take("r", float, required=True)
    R = prob.take("R", float, default=1.0)
    noise_sigma = prob.take("noise_sigma", float, default=0.0)
    sampler = prob.take("sampler", str, default="coordinate")
    prob.finish()
    if sampler not in SAMPLERS:
        raise ValueError(f"[problem] sampler must be one of {SAMPLERS}, got {sampler!r}")

    topo = _Section("topology", parser["topology"])
    kind = topo.take("kind", str, required=True)
    weight_scheme = topo.take("weight_scheme", str, default="metropolis_lazy")
    rows = topo.take("rows", int)
    cols = topo.take("cols", int)
    degree = topo.take("degree", int)
    topology_seed = topo.take("seed", int, default=0)
    edges = topo.take("edges", _parse_edges)
    chebyshev_k = topo.take("chebyshev_k", int, default=0)
    topo.finish()
    if kind not in TOPOLOGY_KINDS:
        raise ValueError(f"[topology] kind must be one of {TOPOLOGY_KINDS}, got {kind!r}")
    if weight_scheme not in WEIGHT_SCHEMES:
        raise ValueError(
            f"[topology] weight_scheme must be one of {WEIGHT_SCHEMES}, got {weight_scheme!r}"
        )
    if chebyshev_k < 0:
        raise ValueError("[topology] chebyshev_k must be >= 0 (0 disables acceleration)")

    sweep = _Section("sweep", parser["sweep"])
    sweep_n = sweep.take("n", _int_list, required=True)
    sweep_m = sweep.take("m", _int_list, required=True)
    sweep.finish()

    sched = _Section("schedule", parser["schedule"])
    theta = sched.take("theta", float, default=0.0)
    eta_raw = sched.take("eta", str, required=True)
    sched.finish()
    if eta_raw == ETA_AUTO:
        eta: str | float = ETA_AUTO
        if theta != 0.0:
            raise ValueError("[schedule] eta = auto requires theta = 0 (constant steps)")
    else:
        try:
            eta = float(eta_raw)
        except ValueError:
            raise ValueError(
                f"[schedule] eta must be a number or {ETA_AUTO!r}, got {eta_raw!r}"
            ) from None
        if eta <= 0.0:
            raise ValueError("[schedule] eta must be positive")

    runsec = _Section("run", parser["run"])
    t_max = runsec.take("T_max", int, required=True)
    stride = runsec.take("stride", int, default=0)
    replicates = runsec.take("replicates", int, default=1)
    master_seed = runsec.take("master_seed", int, default=0)
    protocol = runsec.take("protocol", str, default="gossip_after_gradient")
    output = runsec.take("output", str, default="results.csv")
    runsec.finish()
    if t_max < 1:
        raise ValueError("[run] T_max must be >= 1")
    if stride < 0:
        raise ValueError("[run] stride must be >= 0")
    if replicates < 1:
        raise ValueError("[run] replicates must be >= 1")
    if master_seed < 0:
        raise ValueError("[run] master_seed must be nonnegative")
    if protocol not in engine.PROTOCOL_VARIANTS:
        raise ValueError(
            f"[run] protocol must be one of {engine.PROTOCOL_VARIANTS}, got {protocol!r}"
        )

    return ExperimentConfig(
        d=d,
        gamma=gamma,
        r=r,
        R=R,
        noise_sigma=noise_sigma,
        sampler=sampler,
        kind=kind,
        weight_scheme=weight_scheme,
        rows=rows,
        cols=cols,
        degree=degree,
        topology_seed=topology_seed,
        edges=edges,
        chebyshev_k=chebyshev_k,
        sweep_n=sweep_n,
        sweep_m=sweep_m,
        theta=theta,
        eta=eta,
        t_max=t_max,
        stride=stride,
        replicates=replicates,
        master_seed=master_seed,
        protocol=protocol,
        output=output,
    )


def _config_echo(cfg: ExperimentConfig) -> list[str]:
    """Canonical comment-block echo; fixed order so reruns are byte-identical."""
    sections = {
        "problem": ["d", "gamma", "r", "R", "noise_sigma", "sampler"],
        "topology": [
            "kind",
            "weight_scheme",
            "rows",
            "cols",
            "degree",
            "topology_seed",
            "edges",
            "chebyshev_k",
        ],
        "sweep": ["sweep_n", "sweep_m"],
        "schedule": ["theta", "eta"],
        "run": ["t_max", "stride", "replicates", "master_seed", "protocol", "output"],
    }
    lines = [f"# schema_version = {SCHEMA_VERSION}"]
    for section, keys in sections.items():
        for key in keys:
            value = getattr(cfg, key)
            if isinstance(value, float):
                value = repr(value)
            lines.append(f"# config.{section}.{key} = {value}")
    return lines


def _build_gossip(cfg: ExperimentConfig, n: int):
    top = Topology(
        kind=cfg.kind,
        n=n,
        rows=cfg.rows,
        cols=cfg.cols,
        degree=cfg.degree,
        edges=cfg.edges,
        seed=cfg.topology_seed,
    )
    P = build_gossip_matrix(build_topology(top), cfg.weight_scheme)
    if cfg.chebyshev_k >= 2:
        P = chebyshev_accelerate(P, cfg.chebyshev_k)
    return P


def _run_one(cfg: ExperimentConfig, sweep_index: int, n: int, m: int, replicate: int):
    """Execute one replicate and flatten its records to RunRecord rows."""
    seed = derive_seed(cfg.master_seed, sweep_index, replicate)
    P = _build_gossip(cfg, n)
    problem = make_problem(cfg.d, cfg.gamma, cfg.r, cfg.R, cfg.noise_sigma, cfg.sampler)
    plan = tune_plan(n, m, cfg.r, cfg.gamma, P.sigma2, problem.kappa_sq)
    if cfg.eta == ETA_AUTO:
        eta, updates = plan.eta, min(cfg.t_max, plan.t_stop)
    else:
        eta, updates = float(cfg.eta), cfg.t_max
    sched = engine.StepSchedule(eta=eta, theta=cfg.theta)
    stride = cfg.stride if cfg.stride > 0 else max(1, updates // 200)
    datasets = [sample_agent_data(problem, m, v, seed) for v in range(n)]

    diverged_at = -1
    try:
        result = engine.run(
            problem,
            datasets,
            P,
            sched,
            updates + 1,
            variant=cfg.protocol,
            stride=stride,
        )
        records = result.records
    except engine.DivergenceError as err:
        records = err.records
        diverged_at = err.iteration

    rows = []
    for rec in records:
        rows.append(
            RunRecord(
                sweep_index=sweep_index,
                n=n,
                m=m,
                replicate=replicate,
                t=rec.t,
                excess_mean=float(rec.excess.mean()),
                excess_max=float(rec.excess.max()),
                bias_sq=rec.bias_sq,
                sample_var=rec.sample_var,
                network_err_mean=float(rec.network_err.mean()),
                network_err_max=float(rec.network_err.max()),
                consensus_err=rec.consensus_err,
                popcov_err_mean=float(rec.popcov_err.mean()),
                popcov_err_max=float(rec.popcov_err.max()),
                residual_err_mean=float(rec.residual_err.mean()),
                residual_err_max=float(rec.residual_err.max()),
                eta=eta,
                theta=cfg.theta,
                t_stop=plan.t_stop,
                t_star=plan.t_star,
                regime=plan.regime,
                sigma2=P.sigma2,
                diverged_at=diverged_at,
            )
        )
    return rows


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(cfg: ExperimentConfig, out_dir=".", threads: int = 1) -> Path:
    """Run the full sweep and write one CSV; returns the output path.

    Jobs may execute on ``threads`` workers, but rows are assembled in
    sweep order and each job's randomness is fixed by its derived seed, so
    the output bytes do not depend on the degree of parallelism.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    jobs = []
    for sweep_index, (n, m) in enumerate(product(cfg.sweep_n, cfg.sweep_m)):
        for replicate in range(cfg.replicates):
            jobs.append((sweep_index, n, m, replicate))

    def work(job):
        sweep_index, n, m, replicate = job
        return _run_one(cfg, sweep_index, n, m, replicate)

    if threads == 1:
        blocks = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, jobs))

    out_path = Path(out_dir) / cfg.output
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for line in _config_echo(cfg):
            fh.write(line + "\n")
        fh.write(",".join(RUN_RECORD_COLUMNS) + "\n")
        for block in blocks:
            for row in block:
                fh.write(
                    ",".join(_format_cell(getattr(row, c)) for c in RUN_RECORD_COLUMNS) + "\n"
                )
    return out_path


@dataclass(frozen=True)
class SummaryTable:
    group_by: tuple[str, ...]
    rows: list[dict] = field(repr=False)
    slope_axis: str | None
    slope: tuple[float, float, float] | None

    def render(self) -> str:
        headers = list(self.group_by) + ["runs", "excess_mean", "excess_std"]
        table = [headers]
        for row in self.rows:
            table.append(
                [str(row[k]) for k in self.group_by]
                + [str(row["runs"]), f"{row['excess_mean']:.6e}", f"{row['excess_std']:.6e}"]
            )
        widths = [max(len(line[j]) for line in table) for j in range(len(headers))]
        out = []
        for line in table:
            out.append("  ".join(cell.rjust(w) for cell, w in zip(line, widths)))
        if self.slope is not None:
            slope, intercept, r_sq = self.slope
            out.append(
                f"log-log slope vs {self.slope_axis}: {slope:.4f} "
                f"(intercept {intercept:.4f}, r^2 {r_sq:.4f})"
            )
        return "\n".join(out)


def _read_csv(path):
    """Parse one results CSV to (schema_version, column names, row dicts)."""
    version = None
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                text = line[1:].strip()
                if text.startswith("schema_version"):
                    version = int(text.split("=")[1])
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                continue
            rows.append(dict(zip(header, cells)))
    if version is None or header is None:
        raise ValueError(f"{path}: not a results CSV (missing schema comment or header)")
    return version, header, rows


def _as_number(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def summarize(paths, group_by=("n", "m"), slope_axis: str | None = None) -> SummaryTable:
    """Final-iterate excess risk per group: mean and std over replicates.

    ``slope_axis`` fits a log-log slope of the group means against one of
    'nm', 'm', or 'n' (groups must expose the needed columns).
    """
    group_by = tuple(group_by)
    if slope_axis is not None and slope_axis not in ("nm", "m", "n"):
        raise ValueError("slope_axis must be one of 'nm', 'm', 'n'")

    finals = {}
    schema = None
    for path in paths:
        version, header, rows = _read_csv(path)
        if schema is None:
            schema = version
        elif schema != version:
            raise ValueError(f"mixed schema versions: {schema} vs {version} in {path}")
        missing = [k for k in group_by if k not in header]
        if missing:
            raise ValueError(f"{path}: missing grouping columns {missing}")
        for row in rows:
            key = (str(path), row["sweep_index"], row["replicate"])
            if key not in finals or int(row["t"]) > int(finals[key]["t"]):
                finals[key] = row

    groups: dict[tuple, list[dict]] = {}
    for row in finals.values():
        key = tuple(_as_number(row[k]) for k in group_by)
        groups.setdefault(key, []).append(row)

    out_rows = []
    for key in sorted(groups):
        rows = groups[key]
        values = np.array([float(row["excess_mean"]) for row in rows])
        entry = dict(zip(group_by, key))
        entry["runs"] = len(values)
        entry["excess_mean"] = float(values.mean())
        entry["excess_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        out_rows.append(entry)

    slope = None
    if slope_axis is not None:
        xs = []
        for entry in out_rows:
            if slope_axis == "nm":
                if "n" not in entry or "m" not in entry:
                    raise ValueError("slope over nm needs grouping by n and m")
                xs.append(entry["n"] * entry["m"])
            else:
                if slope_axis not in entry:
                    raise ValueError(f"slope over {slope_axis} needs it in group_by")
                xs.append(entry[slope_axis])
        ys = [entry["excess_mean"] for entry in out_rows]
        slope = fit_loglog_slope(xs, ys)

    return SummaryTable(group_by=group_by, rows=out_rows, slope_axis=slope_axis, slope=slope)
