"""Seeded experiment orchestration on flat INI configs.

A config has an ``[experiment]`` section (``kind``, ``seed``, ``replicas``,
optional ``out``), a ``[params]`` section with the base parameters of the
driver and an optional ``[sweep]`` section mapping parameter names to value
lists. A list is comma separated, or ``start:stop:step`` for an inclusive
arithmetic grid::

    [experiment]
    kind = quench
    seed = 7
    replicas = 1

    [params]
    J = 1.0
    gamma_i = 2.0

    [sweep]
    S = 50, 100
    gamma_f = 0.05:0.45:0.01

Every (sweep point, replica) pair runs with ``derive_seed(seed, point, replica)``.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed
from .records import fmt, read_columns, write_columns

KINDS = ("oracle", "anneal", "pimc", "tdse", "tsp", "kcs", "quench")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration (CLI exit code 2)."""


class OracleLimitError(RuntimeError):
    """A required oracle lies outside the brute-force limits (CLI exit code 3)."""


# ---------------------------------------------------------------- config

def parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_list(text: str) -> list:
    t = text.strip()
    if t.count(":") == 2 and "," not in t:
        a, b, s = (float(x) for x in t.split(":"))
        if s <= 0 or b < a:
            raise ConfigError(f"bad range {text!r}")
        n = int(math.floor((b - a) / s + 1e-9)) + 1
        return [float(np.round(a + k * s, 12)) for k in range(n)]
    return [parse_value(x) for x in t.split(",") if x.strip()]


# required base parameters per kind
_REQUIRED = {
    "oracle": ("problem",),
    "anneal": ("problem", "sweeps"),
    "pimc": ("problem", "sweeps"),
    "tdse": ("task",),
    "tsp": ("n", "method", "sweeps"),
    "kcs": ("n", "mode", "x0", "tau", "max_sweeps"),
    "quench": ("S", "gamma_f"),
}

_KNOWN = {
    "oracle": {"problem", "n", "L", "disorder", "disorder_seed", "J", "p", "instance_seed", "metric"},
    "anneal": {"problem", "n", "L", "disorder", "disorder_seed", "J", "p", "sweeps", "schedule",
               "t_start", "t_end", "restarts", "residual", "e0", "stride", "random_order"},
    "pimc": {"problem", "n", "L", "disorder", "disorder_seed", "J", "p", "sweeps", "M", "T",
             "gamma0", "residual", "e0", "stride"},
    "tdse": {"task", "D", "E", "N", "alpha", "chi0", "gamma", "tau", "target", "l", "clauses",
             "clause_seed", "grid"},
    "tsp": {"n", "metric", "instance_seed", "method", "sweeps", "t_start", "t_end", "M", "T",
            "gamma0", "stride", "optimum"},
    "kcs": {"n", "h", "chi", "g", "mode", "x0", "tau", "max_sweeps", "target", "step_bias"},
    "quench": {"S", "J", "gamma_i", "gamma_f", "periods", "semiclassical"},
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    replicas: int = 1
    params: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an explicit integer in [0, 2^64)")
        if not isinstance(self.replicas, int) or self.replicas < 1:
            raise ConfigError("replicas must be a positive integer")
        names = set(self.params) | set(self.sweep)
        unknown = names - _KNOWN[self.kind]
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.kind}: {sorted(unknown)}")
        missing = [k for k in _REQUIRED[self.kind] if k not in names]
        if missing:
            raise ConfigError(f"missing parameter(s) for {self.kind}: {missing}")
        for k, v in self.sweep.items():
            if not isinstance(v, list) or not v:
                raise ConfigError(f"sweep entry {k!r} must be a non-empty list")

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        if "experiment" not in cp:
            raise ConfigError("missing [experiment] section")
        extra = set(cp.sections()) - {"experiment", "params", "sweep"}
        if extra:
            raise ConfigError(f"unknown section(s): {sorted(extra)}")
        ex = cp["experiment"]
        if "kind" not in ex or "seed" not in ex:
            raise ConfigError("[experiment] needs kind and seed")
        seed = parse_value(ex["seed"])
        reps = parse_value(ex.get("replicas", "1"))
        params = {k: parse_value(v) for k, v in cp["params"].items()} if "params" in cp else {}
        sweep = {k: parse_list(v) for k, v in cp["sweep"].items()} if "sweep" in cp else {}
        return cls(ex["kind"].strip(), seed, reps, params, sweep, ex.get("out"))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_text(text)

    def to_text(self) -> str:
        """Canonical text: fixed section order, sorted keys, 17-digit numbers."""
        def v2s(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, (int, float)):
                return fmt(v)
            return str(v)

        buf = io.StringIO()
        buf.write(f"[experiment]\nkind = {self.kind}\nseed = {self.seed}\nreplicas = {self.replicas}\n")
        if self.out:
            buf.write(f"out = {self.out}\n")
        buf.write("\n[params]\n")
        for k in sorted(self.params):
            buf.write(f"{k} = {v2s(self.params[k])}\n")
        buf.write("\n[sweep]\n")
        for k in sorted(self.sweep):
            buf.write(f"{k} = {', '.join(v2s(x) for x in self.sweep[k])}\n")
        return buf.getvalue()

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def points(self) -> list[dict]:
        """Cartesian product of the sweep lists (sorted names) over the base parameters."""
        names = sorted(self.sweep)
        out = []
        for combo in itertools.product(*(self.sweep[k] for k in names)):
            p = dict(self.params)
            p.update(zip(names, combo))
            out.append(p)
        return out


# ---------------------------------------------------------------- oracles

@dataclass
class OracleRecord:
    kind: str  # "ising" or "tour"
    value: float
    witness: list
    method: str
    size: int
    count: int = 1

    def dumps(self) -> str:
        d = asdict(self)
        d["value"] = fmt(self.value)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "OracleRecord":
        d = json.loads(text)
        d["value"] = float(d["value"])
        return cls(**d)


def precompute_oracle(target) -> OracleRecord:
    """Exhaustive ``E0`` for an Ising problem (N <= 24) or optimal tour (N <= 10)."""
    from .spins import MAX_BRUTE_FORCE, IsingProblem, brute_force_ground_state
    from .tsp import MAX_BRUTE_TOUR, TspInstance, brute_force_tour, count_tours

    if isinstance(target, IsingProblem):
        if target.n > MAX_BRUTE_FORCE:
            raise OracleLimitError(f"N={target.n} exceeds the exhaustive limit {MAX_BRUTE_FORCE}")
        e0, configs = brute_force_ground_state(target)
        return OracleRecord("ising", e0, [int(s) for s in configs[0]],
                            f"gray-code enumeration of 2^{target.n} states", target.n, len(configs))
    if isinstance(target, TspInstance):
        if target.n > MAX_BRUTE_TOUR:
            raise OracleLimitError(f"N={target.n} exceeds the tour enumeration limit {MAX_BRUTE_TOUR}")
        t = brute_force_tour(target)
        return OracleRecord("tour", t.length, [int(c) for c in t.order],
                            f"enumeration of {count_tours(target.n)} tours", target.n)
    raise TypeError("oracle target must be an IsingProblem or a TspInstance")


# ---------------------------------------------------------------- drivers

def build_problem(p: dict):
    from .spins import COMPLETE, SQUARE, DisorderModel, ferromagnet, sample_disorder

    kind = p["problem"]
    if kind == "sk":
        n = int(p.get("n", 0))
        model = DisorderModel(p.get("disorder", "gaussian"), int(p.get("disorder_seed", 0)),
                              float(p.get("J", 1.0)), float(p.get("p", 0.5)))
        return sample_disorder(model, COMPLETE, n)
    if kind == "ea":
        L = int(p.get("L", 0))
        model = DisorderModel(p.get("disorder", "gaussian"), int(p.get("disorder_seed", 0)),
                              float(p.get("J", 1.0)), float(p.get("p", 0.5)))
        return sample_disorder(model, SQUARE, L * L)
    if kind == "ferro":
        return ferromagnet(int(p["n"]), float(p.get("J", 1.0)))
    raise ConfigError(f"unknown problem {kind!r}; expected sk, ea or ferro")


def _oracle_for(p: dict, problem):
    """E0 from an explicit ``e0`` or from enumeration; None when no residual is requested."""
    if not p.get("residual", False):
        return None
    if "e0" in p:
        return OracleRecord("ising", float(p["e0"]), [], "supplied in config", problem.n)
    return precompute_oracle(problem)


def _run_anneal(p, seed):
    from .classical import Schedule, anneal_restarts, default_schedule

    problem = build_problem(p)
    oracle = _oracle_for(p, problem)
    sweeps = int(p["sweeps"])
    kind = p.get("schedule", "exponential")
    if kind == "exponential":
        sched = default_schedule(problem, sweeps, float(p.get("t_start", 3.0)), float(p.get("t_end", 0.02)))
    elif kind == "logarithmic":
        sched = Schedule.logarithmic(float(p.get("t_start", problem.n)))
    elif kind == "linear":
        sched = Schedule.linear(float(p.get("t_start", 3.0)) * problem.energy_scale(), sweeps)
    else:
        raise ConfigError(f"unknown schedule {kind!r}")
    rec = anneal_restarts(problem, sched, sweeps, seed, int(p.get("restarts", 1)),
                          stride=int(p.get("stride", max(1, sweeps // 100))),
                          random_order=bool(p.get("random_order", False)))
    out = {"final_energy": rec.final_energy, "acceptance_rate": rec.extra["acceptance_rate"]}
    if oracle is not None:
        out["residual_energy"] = max(rec.final_energy - oracle.value, 0.0)
    return out, rec.trace, oracle


def _run_pimc(p, seed):
    from .classical import Schedule
    from .pimc import QaParams, pimc_anneal

    problem = build_problem(p)
    oracle = _oracle_for(p, problem)
    sweeps = int(p["sweeps"])
    J = float(p.get("J", 1.0))
    qp = QaParams(int(p.get("M", 20)), float(p.get("T", 0.05 * J)),
                  Schedule.linear(float(p.get("gamma0", 2.5)) * J, sweeps), sweeps)
    rec = pimc_anneal(problem, qp, seed, stride=int(p.get("stride", max(1, sweeps // 100))))
    out = {"final_energy": rec.final_energy}
    if oracle is not None:
        out["residual_energy"] = max(rec.final_energy - oracle.value, 0.0)
    return out, rec.trace, oracle


def _run_tdse(p, seed):
    from . import schrodinger as sc

    task = p["task"]
    if task == "grover":
        D, E = int(p["D"]), float(p.get("E", 1.0))
        H = sc.TimeDependentHamiltonian.constant(sc.grover_hamiltonian(D, 0, E),
                                                 tau=float(p.get("tau", math.pi * math.sqrt(D) / E)))
        steps = sc.default_steps(H)
        st = sc.evolve(H, sc.uniform_state(D), steps, target=0)
        t, P = st.trace["t"], st.trace["P_target"]
        k = int(np.argmax(P))
        return {"t_peak": float(t[k]), "p_peak": float(P[k]),
                "t_predicted": math.pi / 2 * math.sqrt(D) / E}, st.trace, None
    if task == "spatial":
        N = int(p["N"])
        chi0 = float(p["chi0"]) if "chi0" in p else float(p.get("alpha", 1.0)) * N
        gamma = float(p.get("gamma", 0.5))
        if "tau" in p:
            return {"P": sc.spatial_search_run(N, chi0, gamma, float(p["tau"]))}, None, None
        target = float(p.get("target", 0.33))
        tm = sc.tau_min_bisection(lambda tau: sc.spatial_search_run(N, chi0, gamma, tau), target)
        return {"tau_min": tm}, None, None
    if task == "gap":
        l = int(p["l"])
        if "clauses" in p:
            cs = sc.random_exact_cover(l, int(p["clauses"]), int(p.get("clause_seed", seed)))
            H = sc.clause_hamiltonian(cs)
        else:
            H = sc.interpolated_annealer(sc.marked_state_cost(l, 0))
        gmin, smin = sc.min_gap(H, grid=int(p.get("grid", 41)))
        return {"gap_min": gmin, "s_min": smin}, None, None
    raise ConfigError(f"unknown tdse task {task!r}; expected grover, spatial or gap")


def _run_tsp(p, seed):
    from .classical import Schedule
    from .pimc import QaParams
    from .tsp import EUCLIDEAN, ca_tsp, euclidean_instance, greedy_tour, omega, pimc_tsp, random_instance

    n = int(p["n"])
    metric = p.get("metric", EUCLIDEAN)
    iseed = int(p.get("instance_seed", 0))
    inst = euclidean_instance(n, iseed) if metric == EUCLIDEAN else random_instance(n, iseed)
    method = p["method"]
    sweeps = int(p["sweeps"])
    trace = None
    if method == "greedy":
        length = greedy_tour(inst).length
    elif method == "ca":
        scale = float(np.mean(inst.dist))
        sched = Schedule.exponential_between(float(p.get("t_start", 0.1)) * scale,
                                             float(p.get("t_end", 1e-3)) * scale, sweeps)
        rec = ca_tsp(inst, sched, sweeps, seed, stride=int(p.get("stride", max(1, sweeps // 100))))
        length, trace = rec.final_energy, rec.trace
    elif method == "pimc":
        scale = float(np.mean(inst.dist))
        qp = QaParams(int(p.get("M", 20)), float(p.get("T", 0.002)) * scale,
                      Schedule.linear(float(p.get("gamma0", 0.5)) * scale, sweeps), sweeps)
        rec = pimc_tsp(inst, qp, seed, stride=int(p.get("stride", max(1, sweeps // 100))))
        length, trace = rec.final_energy, rec.trace
    else:
        raise ConfigError(f"unknown tsp method {method!r}; expected greedy, ca or pimc")
    out = {"length": length}
    if metric == EUCLIDEAN:
        out["omega"] = omega(length, n, metric)
    oracle = None
    if p.get("optimum", False):
        oracle = precompute_oracle(inst)
        out["excess"] = length - oracle.value
    return out, trace, oracle


def _run_kcs(p, seed):
    from .kcs import KcsChain, KcsSchedule, kcs_anneal

    init_seed, dyn_seed = derive_seed(seed, 0), derive_seed(seed, 1)
    chain = KcsChain.random(int(p["n"]), float(p.get("h", 1.0)), float(p.get("chi", 1000.0)),
                            float(p.get("g", 100.0)), init_seed, bool(p.get("step_bias", True)))
    sched = KcsSchedule(p["mode"], float(p["x0"]), float(p["tau"]))
    res = kcs_anneal(chain, sched, int(p["max_sweeps"]), float(p.get("target", 0.92)), dyn_seed)
    out = {"sweeps": float(res.alignment.size), "reached": float(res.reached),
           "m_final": float(res.alignment[-1])}
    stride = max(1, res.alignment.size // 1000)
    idx = np.unique(np.r_[np.arange(0, res.alignment.size, stride), res.alignment.size - 1])
    trace = {"t": idx + 1, "control": res.controls[idx], "m": res.alignment[idx]}
    return out, trace, None


def _run_quench(p, seed):
    from .quench import QuenchParams, long_time_average_semiclassical, quench_quantum

    J = float(p.get("J", 1.0))
    qp = QuenchParams(J, float(p.get("gamma_i", 2.0)) * J, float(p["gamma_f"]) * J, float(p["S"]))
    res = quench_quantum(qp, periods=int(p.get("periods", 50)))
    out = {"O": res.O, "period": res.period}
    if p.get("semiclassical", False):
        out["O_semiclassical"] = long_time_average_semiclassical(qp.gamma_f, J, qp.S)
    return out, None, None


def _run_oracle(p, seed):
    from .tsp import EUCLIDEAN, euclidean_instance, random_instance

    if p["problem"] == "tour":
        n = int(p["n"])
        iseed = int(p.get("instance_seed", 0))
        metric = p.get("metric", EUCLIDEAN)
        target = euclidean_instance(n, iseed) if metric == EUCLIDEAN else random_instance(n, iseed)
    else:
        target = build_problem(p)
    rec = precompute_oracle(target)
    return {"value": rec.value, "degeneracy": float(rec.count)}, None, rec


_DRIVERS = {"anneal": _run_anneal, "pimc": _run_pimc, "tdse": _run_tdse, "tsp": _run_tsp,
            "kcs": _run_kcs, "quench": _run_quench, "oracle": _run_oracle}


def execute_run(kind: str, params: dict, seed: int):
    """One run: ``(metrics, trace or None, oracle record or None)``."""
    try:
        return _DRIVERS[kind](params, seed)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for {kind}: {exc}") from exc


def _task(args):
    return execute_run(*args)


# ---------------------------------------------------------------- manifest

@dataclass
class ResultManifest:
    config_hash: str
    tool_version: str
    kind: str
    files: dict
    oracles: dict
    summary: str

    def dumps(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "ResultManifest":
        return cls(**json.loads(Path(path).read_text()))

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stats(values):
    v = np.asarray(values, dtype=np.float64)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def run_experiment(config: ExperimentConfig, out_dir=None, workers: int = 1) -> ResultManifest:
    """Run every (point, replica), then write traces, ``summary.tsv`` and ``manifest.json``.

    Runs may execute in worker processes; all files are written here, in
    (point, replica) order, so the output is independent of ``workers``.
    """
    out = Path(out_dir or config.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    (out / "runs").mkdir(exist_ok=True)
    points = config.points()
    reps = 1 if config.kind == "oracle" else config.replicas
    jobs = [(config.kind, p, derive_seed(config.seed, i, r))
            for i, p in enumerate(points) for r in range(reps)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, jobs))
    else:
        results = [_task(j) for j in jobs]

    files: dict[str, str] = {}
    oracles: dict[str, dict] = {}
    cfg_path = out / "config.ini"
    cfg_path.write_text(config.to_text())
    files["config.ini"] = _sha(cfg_path)

    sweep_names = sorted(config.sweep)
    metric_names: list[str] = []
    for m, _, _ in results:
        for k in m:
            if k not in metric_names:
                metric_names.append(k)
    rows = []
    for i, p in enumerate(points):
        chunk = results[i * reps:(i + 1) * reps]
        for r, (metrics, trace, oracle) in enumerate(chunk):
            if trace is not None:
                name = f"runs/p{i:04d}_r{r:04d}.tsv"
                write_columns(out / name, trace, {"point": i, "replica": r,
                                                  "seed": str(jobs[i * reps + r][2]),
                                                  "params": {k: p[k] for k in sorted(p)}})
                files[name] = _sha(out / name)
            if oracle is not None and f"p{i:04d}" not in oracles:
                name = f"oracles/p{i:04d}.json"
                (out / "oracles").mkdir(exist_ok=True)
                (out / name).write_text(oracle.dumps() + "\n")
                files[name] = _sha(out / name)
                oracles[f"p{i:04d}"] = {"file": name, "value": fmt(oracle.value),
                                        "method": oracle.method}
        row = {"point": i}
        for k in sweep_names:
            row[k] = p[k]
        for k in metric_names:
            vals = [m[k] for m, _, _ in chunk if k in m]
            if len(vals) == len(chunk):
                row[f"{k}_mean"], row[f"{k}_stderr"] = _stats(vals)
        rows.append(row)

    cols = list(rows[0])
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    table = {c: [r.get(c, math.nan) for r in rows] for c in cols}
    _write_table(out / "summary.tsv", table, {"kind": config.kind, "replicas": reps})
    files["summary.tsv"] = _sha(out / "summary.tsv")
    man = ResultManifest(config.config_hash(), __version__, config.kind, files, oracles, "summary.tsv")
    (out / "manifest.json").write_text(man.dumps() + "\n")
    return man


def _write_table(path, table: dict, header: dict):
    """Like :func:`write_columns` but string cells pass through unquoted."""
    lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in header.items()]
    names = list(table)
    lines.append(" ".join(names))
    for row in zip(*(table[k] for k in names)):
        lines.append(" ".join(v if isinstance(v, str) else fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_summary(out_dir) -> dict:
    """Summary columns as lists (numeric cells as floats, anything else as strings)."""
    text = (Path(out_dir) / "summary.tsv").read_text().splitlines()
    body = [ln for ln in text if not ln.startswith("# ")]
    names = body[0].split()
    cols = {k: [] for k in names}
    for ln in body[1:]:
        for k, v in zip(names, ln.split()):
            cols[k].append(parse_value(v) if not _is_float(v) else float(v))
    return cols


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def audit(out_dir) -> list[str]:
    """Problems with a result directory; an empty list means it is complete and consistent."""
    out = Path(out_dir)
    problems = []
    mpath = out / "manifest.json"
    if not mpath.exists():
        return ["manifest.json missing"]
    man = ResultManifest.load(mpath)
    for name, digest in sorted(man.files.items()):
        f = out / name
        if not f.exists():
            problems.append(f"missing file {name}")
        elif _sha(f) != digest:
            problems.append(f"checksum mismatch for {name}")
    cfg = out / "config.ini"
    if cfg.exists():
        try:
            h = ExperimentConfig.from_text(cfg.read_text()).config_hash()
        except ConfigError as exc:
            problems.append(f"stored config does not parse: {exc}")
        else:
            if h != man.config_hash:
                problems.append("config hash does not match the stored config")
    for key, o in man.oracles.items():
        if o["file"] not in man.files:
            problems.append(f"oracle {key} not listed among files")
    listed = set(man.files) | {"manifest.json"}
    for f in sorted(out.rglob("*")):
        rel = f.relative_to(out).as_posix()
        if f.is_file() and rel not in listed and not rel.startswith("plot/"):
            problems.append(f"unreferenced file {rel}")
    return problems


def emit_plot_data(out_dir, x: str, y: str, group_by: str | None = None) -> list[Path]:
    """Write ``x, y, y_stderr`` files under ``plot/``, one per ``group_by`` value, sorted by x.

    ``x`` and ``y`` name summary columns (``y`` may be a metric name, its
    ``_mean`` column is used). If the result holds a single run and the names
    are trace columns, that trace is copied instead.
    """
    out = Path(out_dir)
    summ = read_summary(out)
    pdir = out / "plot"
    pdir.mkdir(exist_ok=True)
    ycol = y if y in summ else f"{y}_mean"
    if x not in summ or ycol not in summ:
        man = ResultManifest.load(out / "manifest.json")
        traces = sorted(k for k in man.files if k.startswith("runs/"))
        if len(traces) == 1:
            hdr, cols = read_columns(out / traces[0])
            if x in cols and y in cols:
                path = pdir / f"{x}_{y}.tsv"
                write_columns(path, {x: cols[x], y: cols[y]})
                return [path]
        missing = [c for c in (x, ycol) if c not in summ]
        raise KeyError(f"unknown column(s): {missing}")
    if group_by is not None and group_by not in summ:
        raise KeyError(f"unknown column(s): [{group_by!r}]")
    se = summ.get(f"{y}_stderr", [math.nan] * len(summ[x]))
    groups = sorted(set(summ[group_by]), key=str) if group_by else [None]
    paths = []
    for g in groups:
        idx = [i for i in range(len(summ[x])) if group_by is None or summ[group_by][i] == g]
        idx.sort(key=lambda i: summ[x][i])
        name = f"{y}_vs_{x}.tsv" if g is None else f"{y}_vs_{x}__{group_by}={fmt(g) if not isinstance(g, str) else g}.tsv"
        path = pdir / name.replace("/", "_")
        write_columns(path, {x: [summ[x][i] for i in idx], y: [summ[ycol][i] for i in idx],
                             f"{y}_stderr": [se[i] for i in idx]},
                      None if g is None else {group_by: g})
        paths.append(path)
    return paths
