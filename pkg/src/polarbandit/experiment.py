"""Experiment orchestration: configs, seeded repetitions, sweeps and CSV output.

Every repetition derives five independent streams (graph, opinions, arms,
noise, algorithm) from ``SeedSequence([seed, rep])``. All algorithms in a
repetition share the graph, opinions and arms. Each algorithm gets its own
noise stream, seeded from the repetition's noise child and the algorithm's
fixed slot, so a given (seed, rep, algorithm) always sees the same noise.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arms import generate_diverse, perturb_local
from .environment import Environment
from .errors import ConfigError
from .graph import BUNDLED, bundled_graph, load_edge_list, make_graph
from .opinion import sample_opinions
from .rsc import ConeSpec, kappa_hat_pgd, kappa_min
from .stage2 import LearnerConfig, run_estr, run_full_oful, run_oracle_subspace

log = logging.getLogger(__name__)

ALGORITHMS = ("estr", "full_oful", "oracle")
CHECKPOINTS = (100, 1_000, 10_000)
ROUND_COLUMNS = ("rep", "algo", "t", "chosen_arm", "instant_regret", "cumulative_regret")
SUMMARY_COLUMNS = ("algo", "checkpoint_t", "regret_mean", "regret_std", "runtime_mean_s",
                   "runtime_std_s")


def _tuple_of_str(value):
    if isinstance(value, str):
        return tuple(v.strip() for v in value.split(",") if v.strip())
    return tuple(value)


def _bool(value):
    if isinstance(value, str):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return bool(value)


def _optional(conv):
    def parse(value):
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
            return None
        return conv(value)
    return parse


@dataclass
class ExperimentConfig:
    """One experimental condition. Defaults reproduce the headline local-arm setup."""

    graph: str = "er"
    edge_list: str | None = None
    p: float = 0.2
    frac1: float = 0.75
    p_in: float = 0.5
    p_out: float = 0.07
    n: int = 16
    K: int = 100
    regime: str = "local"
    num_edits: int | None = None
    weight_lo: float = 0.5
    weight_hi: float = 1.5
    allow_edge_removal: bool = False
    opinions: str = "uniform"
    sigma: float = 0.1
    T: int = 10_000
    t1_rule: str = "sqrt"
    T1: int | None = None
    ell_s: float | None = None
    kappa: float | None = None
    delta: float = 1e-3
    lambda_reg: float = 0.1
    lambda_mode: str = "experiment"
    lambda_scale: float = 0.01
    lambda_nuc: float | None = None
    lx_mode: str = "sqrt"
    beta_mode: str = "determinant"
    explore_mode: str = "auto"
    center: bool = True
    warm_start: bool = False
    algorithms: tuple = ALGORITHMS
    repetitions: int = 20
    seed: int | None = None
    output: str = "results"
    workers: int = 1
    dump_stage1: bool = False

    _CONVERTERS = {
        "edge_list": _optional(str), "num_edits": _optional(int), "T1": _optional(int),
        "ell_s": _optional(float), "kappa": _optional(float), "lambda_nuc": _optional(float),
        "seed": _optional(int), "center": _bool, "warm_start": _bool, "dump_stage1": _bool,
        "allow_edge_removal": _bool,
        "algorithms": _tuple_of_str,
    }

    def __post_init__(self):
        self.algorithms = _tuple_of_str(self.algorithms)
        self.validate()

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, mapping, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Build a config from string-or-typed values keyed by field name (kebab or snake)."""
        defaults = dataclasses.asdict(base) if base is not None else {}
        types = {f.name: f.default for f in dataclasses.fields(cls)}
        values = dict(defaults)
        for raw_key, raw in mapping.items():
            key = raw_key.replace("-", "_")
            if key not in types:
                raise ConfigError(raw_key, "unknown configuration key")
            try:
                values[key] = cls._convert(key, raw, types[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, str(exc)) from None
        return cls(**values)

    @classmethod
    def _convert(cls, key, raw, default):
        if key in cls._CONVERTERS:
            return cls._CONVERTERS[key](raw)
        if not isinstance(raw, str):
            return raw
        if isinstance(default, bool):
            return _bool(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # ------------------------------------------------------------------
    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(name, msg)

        need(self.edge_list is not None or self.graph in ("er", "sbm") + BUNDLED, "graph",
             f"expected er, sbm or one of {', '.join(BUNDLED)}")
        need(self.n >= 2, "n", "need at least two nodes")
        need(self.K >= 1, "K", "need at least one arm")
        need(self.regime in ("local", "diverse"), "regime", "expected local or diverse")
        need(self.num_edits is None or self.num_edits >= 1, "num_edits", "must be >= 1")
        need(0 < self.weight_lo <= self.weight_hi, "weight_lo", "need 0 < weight_lo <= weight_hi")
        need(self.opinions in ("uniform", "polarized"), "opinions", "expected uniform or polarized")
        need(self.sigma >= 0, "sigma", "must be >= 0")
        need(0 < self.delta < 1, "delta", "must lie in (0, 1)")
        need(self.T >= 1, "T", "must be >= 1")
        need(self.t1_rule in ("sqrt", "theory", "explicit"), "t1_rule",
             "expected sqrt, theory or explicit")
        if self.t1_rule == "explicit":
            need(self.T1 is not None, "T1", "required when t1_rule=explicit")
        if self.t1_rule == "theory":
            need(self.ell_s is not None and self.ell_s > 0, "ell_s",
                 "a positive lower bound on ||s||^2 is required when t1_rule=theory")
            need(self.kappa is not None and self.kappa > 0, "kappa",
                 "a positive curvature value is required when t1_rule=theory")
        t1 = self.resolved_T1()
        need(self.T >= t1 >= 1, "T1", f"need T >= T1 >= 1 (T={self.T}, T1={t1})")
        need(self.lambda_reg > 0, "lambda_reg", "must be > 0")
        need(self.lambda_mode in ("theory", "experiment"), "lambda_mode",
             "expected theory or experiment")
        need(self.lambda_scale > 0, "lambda_scale", "must be > 0")
        need(self.lambda_nuc is None or self.lambda_nuc >= 0, "lambda_nuc", "must be >= 0")
        need(self.lx_mode in ("sqrt", "n"), "lx_mode", "expected sqrt or n")
        need(self.beta_mode in ("determinant", "dimensional"), "beta_mode",
             "expected determinant or dimensional")
        need(self.explore_mode in ("auto", "with", "without"), "explore_mode",
             "expected auto, with or without")
        need(len(self.algorithms) > 0, "algorithms", "need at least one algorithm")
        for a in self.algorithms:
            need(a in ALGORITHMS, "algorithms", f"unknown algorithm {a!r}")
        need(len(set(self.algorithms)) == len(self.algorithms), "algorithms", "duplicates")
        need(self.repetitions >= 1, "repetitions", "must be >= 1")
        need(self.workers >= 0, "workers", "must be >= 0 (0 means all CPUs)")

    def resolved_T1(self) -> int:
        if self.t1_rule == "explicit":
            return int(self.T1)
        if self.t1_rule == "sqrt":
            return max(1, int(round(math.sqrt(self.T))))
        # T1 = 6 / (ell_s kappa) * sqrt(T log(2n/delta)), clipped to [1, T]
        raw = 6.0 / (self.ell_s * self.kappa) * math.sqrt(self.T * math.log(2 * self.n / self.delta))
        return int(min(max(1, math.ceil(raw)), self.T))

    def learner(self) -> LearnerConfig:
        return LearnerConfig(T=self.T, T1=self.resolved_T1(), delta=self.delta,
                             lambda_reg=self.lambda_reg, lambda_mode=self.lambda_mode,
                             lambda_nuc=self.lambda_nuc, lambda_scale=self.lambda_scale,
                             center=self.center, explore_mode=self.explore_mode,
                             beta_mode=self.beta_mode, lx_mode=self.lx_mode,
                             warm_start=self.warm_start)


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` comments; an optional ``[section]`` header is ignored."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text if text.lstrip().startswith("[") else "[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    out = {}
    for section in parser.sections():
        out.update(parser.items(section))
    return out


# ----------------------------------------------------------------------
# instances


@dataclass
class Instance:
    s: np.ndarray
    arms: object
    noise_seeds: dict
    algo_seed: np.random.SeedSequence


def _base_graph(cfg: ExperimentConfig, rng):
    if cfg.edge_list is not None:
        return load_edge_list(cfg.edge_list)
    if cfg.graph in BUNDLED:
        return bundled_graph(cfg.graph)
    return make_graph(cfg.graph, cfg.n, rng, p=cfg.p, frac1=cfg.frac1, p_in=cfg.p_in,
                      p_out=cfg.p_out)


def effective_n(cfg: ExperimentConfig) -> int:
    if cfg.edge_list is not None:
        return load_edge_list(cfg.edge_list).n
    if cfg.graph in BUNDLED:
        return bundled_graph(cfg.graph).n
    return cfg.n


def build_instance(cfg: ExperimentConfig, rep: int) -> Instance:
    graph_ss, opinion_ss, arms_ss, noise_ss, algo_ss = np.random.SeedSequence([cfg.seed or 0, rep]).spawn(5)
    noise_children = noise_ss.spawn(len(ALGORITHMS))
    base = _base_graph(cfg, np.random.default_rng(graph_ss))
    n = base.n
    s = sample_opinions(n, cfg.opinions, np.random.default_rng(opinion_ss))
    arm_rng = np.random.default_rng(arms_ss)
    if cfg.regime == "local":
        arms = perturb_local(base, cfg.num_edits or n, cfg.weight_lo, cfg.weight_hi, cfg.K,
                             arm_rng, allow_removal=cfg.allow_edge_removal)
    else:
        family = cfg.graph if cfg.graph in ("er", "sbm") else "er"
        arms = generate_diverse(n, cfg.K, family, arm_rng, p=cfg.p, frac1=cfg.frac1,
                                p_in=cfg.p_in, p_out=cfg.p_out)
    seeds = {a: noise_children[i] for i, a in enumerate(ALGORITHMS)}
    return Instance(s, arms, seeds, algo_ss)


@dataclass
class RepResult:
    rep: int
    chosen: dict = field(default_factory=dict)
    instant: dict = field(default_factory=dict)
    runtime: dict = field(default_factory=dict)
    stage1: object = None


def run_repetition(cfg: ExperimentConfig, rep: int) -> RepResult:
    inst = build_instance(cfg, rep)
    learner = cfg.learner()
    out = RepResult(rep)
    for algo in cfg.algorithms:
        env = Environment(inst.s, cfg.sigma, np.random.default_rng(inst.noise_seeds[algo]))
        t0 = time.perf_counter()
        if algo == "estr":
            trace, est = run_estr(env, inst.arms, learner, np.random.default_rng(inst.algo_seed))
            if cfg.dump_stage1:
                out.stage1 = est
        elif algo == "full_oful":
            trace = run_full_oful(env, inst.arms, learner)
        else:
            trace = run_oracle_subspace(env, inst.arms, learner)
        out.runtime[algo] = time.perf_counter() - t0
        out.chosen[algo] = np.asarray(trace.chosen, dtype=np.int64)
        out.instant[algo] = np.asarray(trace.instant, dtype=float)
    return out


def _rep_worker(args):
    cfg, rep = args
    return run_repetition(cfg, rep)


def iter_repetitions(cfg: ExperimentConfig):
    """Yield :class:`RepResult` in repetition order, possibly computed in a process pool."""
    workers = cfg.workers or os.cpu_count() or 1
    jobs = [(cfg, r) for r in range(cfg.repetitions)]
    if workers == 1 or cfg.repetitions == 1:
        for job in jobs:
            yield _rep_worker(job)
        return
    with ProcessPoolExecutor(max_workers=min(workers, cfg.repetitions)) as pool:
        yield from pool.map(_rep_worker, jobs)


# ----------------------------------------------------------------------
# aggregation and output


def _std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def checkpoints(T: int):
    return [c for c in CHECKPOINTS if 1 <= c <= T]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    final_regret: dict
    runtime: dict
    checkpoint_regret: dict
    per_round_path: Path | None = None
    summary_path: Path | None = None

    def mean_final(self, algo) -> float:
        return float(np.mean(self.final_regret[algo]))

    def mean_runtime(self, algo) -> float:
        return float(np.mean(self.runtime[algo]))

    def summary_rows(self):
        rows = []
        for algo in self.config.algorithms:
            rt = self.runtime[algo]
            for c, vals in self.checkpoint_regret[algo].items():
                rows.append((algo, c, float(np.mean(vals)), _std(vals), float(np.mean(rt)),
                             _std(rt)))
        return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rounds(writer, res: RepResult, algorithms):
    for algo in algorithms:
        inst = res.instant[algo]
        cum = np.cumsum(inst)
        chosen = res.chosen[algo]
        writer.writerows((res.rep, algo, t + 1, int(chosen[t]), _fmt(inst[t]), _fmt(cum[t]))
                         for t in range(inst.size))


def write_summary(path, result: ExperimentResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for algo, c, m, sd, rm, rs in result.summary_rows():
            w.writerow((algo, c, _fmt(m), _fmt(sd), _fmt(rm), _fmt(rs)))


def _dump_stage1(directory: Path, res: RepResult):
    """Row-major text dumps of the estimate and its top direction, headed by ``n``."""
    est = res.stage1
    n = est.theta_hat.shape[0]
    for name, arr in (("theta", est.theta_hat), ("shat", est.s_hat[None, :])):
        path = directory / f"stage1_rep{res.rep}_{name}.txt"
        np.savetxt(path, arr, fmt="%.17g", header=str(n), comments="")


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run all repetitions; with ``write`` emit ``rounds.csv`` and ``summary.csv``.

    Rows are flushed per repetition, so an interrupted run leaves the
    completed repetitions on disk (and a summary over them).
    """
    checks = checkpoints(cfg.T)
    finals = {a: [] for a in cfg.algorithms}
    runtimes = {a: [] for a in cfg.algorithms}
    at_checks = {a: {c: [] for c in checks} for a in cfg.algorithms}
    out_dir = Path(cfg.output)
    rounds_path = out_dir / "rounds.csv" if write else None
    summary_path = out_dir / "summary.csv" if write else None
    fh = None
    result = ExperimentResult(cfg, finals, runtimes, at_checks, rounds_path, summary_path)
    try:
        if write:
            out_dir.mkdir(parents=True, exist_ok=True)
            fh = open(rounds_path, "w", newline="")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(ROUND_COLUMNS)
        for res in iter_repetitions(cfg):
            for algo in cfg.algorithms:
                cum = np.cumsum(res.instant[algo])
                finals[algo].append(float(cum[-1]))
                runtimes[algo].append(res.runtime[algo])
                for c in checks:
                    at_checks[algo][c].append(float(cum[c - 1]))
            if write:
                _write_rounds(writer, res, cfg.algorithms)
                fh.flush()
                if cfg.dump_stage1 and res.stage1 is not None:
                    _dump_stage1(out_dir, res)
            log.info("repetition %d done: %s", res.rep,
                     ", ".join(f"{a}={finals[a][-1]:.3f}" for a in cfg.algorithms))
    finally:
        if fh is not None:
            fh.close()
        if write and finals[cfg.algorithms[0]]:
            write_summary(summary_path, result)
    return result


def run_scalability(cfg: ExperimentConfig, ns, repetitions: int | None = None):
    """Wall time of the ESTR pipeline (instance generation included) per ``n``.

    Returns rows ``(n, mean_seconds, std_seconds)``.
    """
    ns = list(ns)
    if not ns:
        raise ConfigError("n", "empty sweep")
    if ns != sorted(ns):
        raise ConfigError("n", "sweep values must be ascending")
    reps = repetitions or cfg.repetitions
    rows = []
    for n in ns:
        sub = cfg.replace(n=n, algorithms=("estr",), repetitions=reps, dump_stage1=False)
        times = []
        for rep in range(reps):
            t0 = time.perf_counter()
            run_repetition(sub, rep)
            times.append(time.perf_counter() - t0)
        rows.append((n, float(np.mean(times)), _std(times)))
        log.info("n=%d: %.3fs", n, rows[-1][1])
    return rows


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def run_sensitivity(cfg: ExperimentConfig, axis: str, values):
    """Final-regret mean and std per algorithm for each value of ``sigma`` or ``K``.

    Rows are ``(axis, value, algo, regret_mean, regret_std)``. Repetition
    seeds are shared across values, so the comparison is paired.
    """
    values = list(values)
    if axis not in ("sigma", "K"):
        raise ConfigError("axis", "expected sigma or K")
    if not values:
        raise ConfigError("values", "need at least one value")
    rows = []
    for v in values:
        sub = cfg.replace(**{axis: float(v) if axis == "sigma" else int(v)})
        res = run_experiment(sub, write=False)
        for algo in sub.algorithms:
            vals = res.final_regret[algo]
            rows.append((axis, v, algo, float(np.mean(vals)), _std(vals)))
    return rows


def run_rsc(family: str, regime: str, n: int, K: int, trials: int, seed: int, *,
            num_edits: int | None = None, restarts: int = 10, iters: int = 300,
            weight_lo: float = 0.5, weight_hi: float = 1.5, cone_factor: float = 3.0):
    """kappa_min and kappa-hat statistics over independent arm sets.

    Returns a dict with ``kappa_min`` (mean over trials), ``kappa_min_centered``
    (mean, restricted to symmetric matrices on the complement of the ones
    vector) and the ``kappa_hat`` mean and std.
    """
    kmins, kcentered, khats = [], [], []
    for trial in range(trials):
        g_ss, s_ss, a_ss, p_ss = np.random.SeedSequence([seed, trial]).spawn(4)
        s = sample_opinions(n, "uniform", np.random.default_rng(s_ss))
        if regime == "local":
            base = make_graph(family, n, np.random.default_rng(g_ss))
            arms = perturb_local(base, num_edits or 2 * n, weight_lo, weight_hi, K,
                                 np.random.default_rng(a_ss))
        elif regime == "diverse":
            arms = generate_diverse(n, K, family, np.random.default_rng(a_ss))
        else:
            raise ConfigError("regime", "expected local or diverse")
        kmins.append(kappa_min(arms))
        kcentered.append(kappa_min(arms, subspace="centered"))
        report = kappa_hat_pgd(arms, ConeSpec.from_opinions(s, cone_factor), restarts=restarts,
                               iters=iters, seed=np.random.default_rng(p_ss))
        khats.append(report.kappa_hat)
    return {"family": family, "regime": regime, "n": n, "K": K,
            "kappa_min": float(np.mean(kmins)), "kappa_min_centered": float(np.mean(kcentered)),
            "kappa_hat_mean": float(np.mean(khats)), "kappa_hat_std": _std(khats),
            "trials": trials}


__all__ = ["ALGORITHMS", "CHECKPOINTS", "ExperimentConfig", "ExperimentResult", "build_instance",
           "checkpoints", "effective_n", "loglog_slope", "read_config_file",
           "run_experiment", "run_repetition", "run_rsc", "run_scalability", "run_sensitivity"]
