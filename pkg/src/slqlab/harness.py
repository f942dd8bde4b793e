"""Named experiment recipes, replication loop and report assembly."""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from slqlab import arrivals as arr
from slqlab import conv_sim, hw_sim, limits
from slqlab.model import InitialLaw, ModelData, derive, validate
from slqlab.rng import make_rng, replication_seed
from slqlab.scaling import conv_scale, default_grid, diffusion_scale_hw, ssc_deviation_hw
from slqlab.stats import KSResult, ks_distance, loss_decay_table, strictly_decreasing, summarize

RECIPES = (
    "hw-counterexample",
    "hw-vs-sde",
    "conventional-limit",
    "ssc",
    "loss-decay",
    "arrival-scaling",
    "skorohod-props",
)

# thresholds checked by the recipes
KS_P_DISTINCT = 0.01
KS_SYMMETRY = 0.07
KS_LIMIT = 0.1
SSC_LEVEL = 0.1
SSC_FRACTION = 0.05
LOSS_MEAN_MAX = 0.01
LIPSCHITZ_C = 1 + math.sqrt(2)


def default_model(recipe: str) -> ModelData:
    if recipe == "conventional-limit":
        return ModelData(mu=(2.0, 2.0), lam=(1.0, 1.0), sigma_sq=(1.0, 1.0), gamma_sq=(1.0, 1.0), beta=1.0)
    return ModelData(mu=(2.0, 2.0), lam=(1.0, 1.0), sigma_sq=(0.0, 0.0), gamma_sq=(1.0, 1.0), beta1=0.5)


DEFAULT_N = {
    "hw-counterexample": (6400,),
    "hw-vs-sde": (6400,),
    "conventional-limit": (400, 1600, 6400),
    "ssc": (400, 1600, 6400),
    "loss-decay": (400, 1600, 6400),
    "arrival-scaling": (100, 1000, 10000, 100000),
    "skorohod-props": (1,),
}


@dataclass
class ExperimentConfig:
    recipe: str
    model: ModelData | None = None
    n_list: tuple[int, ...] | None = None
    a: float = 0.3
    k: int = 1
    source: str = "pattern"
    T: float = 1.0
    replications: int = 1000
    grid_size: int = 2048
    dt: float = 1e-4
    limit_paths: int = 10000
    seed: int = 42
    out: str = "results"

    def __post_init__(self):
        if self.recipe not in RECIPES:
            raise ValueError(f"unknown recipe {self.recipe!r}")
        if self.model is None:
            self.model = default_model(self.recipe)
        if self.n_list is None:
            self.n_list = DEFAULT_N[self.recipe]
        self.n_list = tuple(int(n) for n in self.n_list)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.k not in (1, 2):
            raise ValueError("k must be 1 or 2")
        if self.source not in ("pattern", "poisson"):
            raise ValueError("source must be 'pattern' or 'poisson'")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        rep = validate(self.model)
        if not rep.ok:
            raise ValueError("invalid model: " + "; ".join(rep.violations))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["model"] = self.model.to_dict()
        d["n_list"] = list(self.n_list)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if kw.get("model") is not None:
            kw["model"] = ModelData.from_dict(kw["model"])
        return cls(**kw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    raw: list = field(default_factory=list)
    aggregate: list = field(default_factory=list)
    ks: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    ecdfs: list = field(default_factory=list)
    curves: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_raw(self, n, rep, observable, time, value, seed):
        self.raw.append((self.config.recipe, int(n), int(rep), observable, float(time), float(value), int(seed)))

    def add_agg(self, n, observable, stat, value, lo=math.nan, hi=math.nan):
        self.aggregate.append((self.config.recipe, int(n), observable, stat, float(value), float(lo), float(hi)))

    def add_check(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))
        self.add_agg(0, f"check:{name}", "pass", 1.0 if passed else 0.0)

    def add_ks(self, n, name, a, b) -> KSResult:
        res = ks_distance(a, b)
        self.ks[name] = res
        self.add_agg(n, f"ks:{name}", "statistic", res.statistic)
        self.add_agg(n, f"ks:{name}", "p_value", res.p_value)
        return res

    def add_summary(self, n, observable, values):
        if len(values) < 2:
            return
        s = summarize(values)
        self.add_agg(n, observable, "mean", s.mean, s.ci95[0], s.ci95[1])
        self.add_agg(n, observable, "variance", s.variance)
        for lvl, q in s.quantiles.items():
            self.add_agg(n, observable, f"q{int(round(lvl * 100)):02d}", q)


def pool_map(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Order-preserving map; results never depend on ``workers``."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=chunk))


# ---------------------------------------------------------------- replications

@dataclass
class HwRep:
    seed: int
    x_end: np.ndarray
    r_end: np.ndarray
    ssc: float
    violations: list
    events: int
    lattice_ok: bool
    path: np.ndarray | None = None


def hw_replication(task) -> HwRep:
    model, n, a, k, source, T, grid_size, seed, keep_path = task
    rng = make_rng(seed)
    sources = None
    if source == "poisson":
        p = derive(model, n, a)
        sources = [arr.poisson_source(i, lam) for i, lam in enumerate(p.lambda_n)]
    tr = hw_sim.run_hw(model, n, a, k, T, rng=rng, sources=sources)
    grid = default_grid(T, grid_size)
    xh, qh, _, rh = diffusion_scale_hw(tr, tr.params, grid)
    lattice = hw_sim.losses_on_period_lattice(tr, k - 1) if source == "pattern" else True
    return HwRep(seed, xh.at_end(), rh.at_end(), ssc_deviation_hw(xh, qh), hw_sim.check_invariants(tr, True),
                 tr.num_events, lattice, xh.values if keep_path else None)


@dataclass
class ConvRep:
    seed: int
    x_end: np.ndarray
    xt_end: float
    gap: float
    violations: list
    events: int


def conv_replication(task) -> ConvRep:
    model, n, T, grid_size, seed = task
    tr = conv_sim.run_conventional(model, n, T=T, seed=seed)
    xh, xt, gap = conv_scale(tr, model, n, default_grid(T, grid_size))
    return ConvRep(seed, xh.at_end(), float(xt.at_end()[0]), gap, conv_sim.check_invariants(tr), tr.times.size)


def _stream(tag: int, n: int, k: int = 0) -> int:
    return tag * 1_000_003 + n * 7 + k


def _hw_batch(cfg: ExperimentConfig, n: int, k: int, workers: int, tag: int, keep_first: bool = False) -> list[HwRep]:
    tasks = [
        (cfg.model, n, cfg.a, k, cfg.source, cfg.T, cfg.grid_size, replication_seed(cfg.seed, r, _stream(tag, n, k)),
         keep_first and r == 0)
        for r in range(cfg.replications)
    ]
    return pool_map(hw_replication, tasks, workers)


def _invariant_check(report: ExperimentReport, reps: Sequence, label: str):
    bad = [(r.seed, v) for r in reps for v in r.violations]
    events = sum(r.events for r in reps)
    detail = f"{len(bad)} violations over {len(reps)} trajectories / {events} events"
    if bad:
        detail += f"; first: seed {bad[0][0]}: {bad[0][1]}"
    report.add_check(f"invariants-{label}", not bad, detail)


# ---------------------------------------------------------------- recipes

def _recipe_hw_counterexample(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    n = cfg.n_list[-1]
    grid = default_grid(cfg.T, cfg.grid_size)
    samples = {}
    for k in (1, 2):
        reps = _hw_batch(cfg, n, k, workers, tag=1, keep_first=True)
        _invariant_check(report, reps, f"k{k}")
        x = np.array([r.x_end for r in reps])
        samples[k] = x
        for r_idx, r in enumerate(reps):
            for i in range(x.shape[1]):
                report.add_raw(n, r_idx, f"X{i + 1}hat_k{k}", cfg.T, r.x_end[i], r.seed)
        for j, t in enumerate(grid):
            for i in range(x.shape[1]):
                report.add_raw(n, 0, f"path_X{i + 1}hat_k{k}", t, reps[0].path[j, i], reps[0].seed)
        for i in range(x.shape[1]):
            report.add_summary(n, f"X{i + 1}hat_k{k}", x[:, i])
    if cfg.replications >= 2:
        d = report.add_ks(n, "X1hat_k1_vs_X1hat_k2", samples[1][:, 0], samples[2][:, 0])
        report.add_check("k1-k2-distinguishable", d.p_value < KS_P_DISTINCT,
                         f"KS D={d.statistic:.4f} p={d.p_value:.3g} (need p < {KS_P_DISTINCT})")
        s = report.add_ks(n, "X1hat_k1_vs_X2hat_k2", samples[1][:, 0], samples[2][:, 1])
        report.add_check("k1-k2-symmetry", s.statistic < KS_SYMMETRY,
                         f"KS D={s.statistic:.4f} (need < {KS_SYMMETRY})")
        report.ecdfs.append((f"X1hat({cfg.T:g}), n={n}", {"k=1": samples[1][:, 0], "k=2": samples[2][:, 0]}))
    return samples


def _recipe_hw_vs_sde(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    p = limits.hw_limit_params(cfg.model, cfg.k - 1)
    lim, _ = limits.hw_limit_terminal(p, cfg.dt, cfg.T, cfg.limit_paths, replication_seed(cfg.seed, 0, _stream(9, 0)))
    for i in range(lim.shape[1]):
        report.add_summary(0, f"X{i + 1}_limit", lim[:, i])
    for n in cfg.n_list:
        reps = _hw_batch(cfg, n, cfg.k, workers, tag=2)
        _invariant_check(report, reps, f"n{n}")
        x = np.array([r.x_end for r in reps])
        for r_idx, r in enumerate(reps):
            for i in range(x.shape[1]):
                report.add_raw(n, r_idx, f"X{i + 1}hat", cfg.T, r.x_end[i], r.seed)
        for i in range(x.shape[1]):
            report.add_summary(n, f"X{i + 1}hat", x[:, i])
            if cfg.replications >= 2:
                d = report.add_ks(n, f"X{i + 1}hat_vs_limit_n{n}", x[:, i], lim[:, i])
                if n == cfg.n_list[-1]:
                    report.add_check(f"limit-match-X{i + 1}", d.statistic <= KS_LIMIT,
                                     f"KS D={d.statistic:.4f} at n={n} (need <= {KS_LIMIT})")
                    report.ecdfs.append((f"X{i + 1}({cfg.T:g}), n={n}", {"simulation": x[:, i], "Euler limit": lim[:, i]}))


def _recipe_ssc(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    fractions = []
    for n in cfg.n_list:
        reps = _hw_batch(cfg, n, cfg.k, workers, tag=3)
        _invariant_check(report, reps, f"n{n}")
        dev = np.array([r.ssc for r in reps])
        for r_idx, r in enumerate(reps):
            report.add_raw(n, r_idx, "ssc_dev", cfg.T, r.ssc, r.seed)
        frac = float(np.mean(dev > SSC_LEVEL))
        fractions.append(frac)
        report.add_agg(n, "ssc_dev", "fraction_above_0.1", frac)
        report.add_summary(n, "ssc_dev", dev)
    report.add_check("ssc-fraction", fractions[-1] < SSC_FRACTION,
                     f"fraction above {SSC_LEVEL} at n={cfg.n_list[-1]} is {fractions[-1]:.4f} (need < {SSC_FRACTION})")
    mono = all(b <= a for a, b in zip(fractions, fractions[1:])) and fractions[-1] < fractions[0]
    report.add_check("ssc-decreasing", mono or len(fractions) == 1, f"fractions {fractions}")
    report.curves.append(("SSC: fraction of runs above 0.1", "n", {"fraction": (list(cfg.n_list), fractions)}))


def _recipe_loss_decay(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    spread = 2 - cfg.k
    runs = {}
    lattice_ok = True
    for n in cfg.n_list:
        reps = _hw_batch(cfg, n, cfg.k, workers, tag=4)
        _invariant_check(report, reps, f"n{n}")
        vals = np.array([r.r_end[spread] for r in reps])
        runs[n] = vals
        lattice_ok &= all(r.lattice_ok for r in reps)
        for r_idx, r in enumerate(reps):
            report.add_raw(n, r_idx, f"R{spread + 1}hat", cfg.T, r.r_end[spread], r.seed)
            report.add_raw(n, r_idx, f"R{cfg.k}hat", cfg.T, r.r_end[cfg.k - 1], r.seed)
    if cfg.replications >= 2 and len(runs) >= 2:
        table = loss_decay_table(runs)
        for row in table.rows:
            report.add_agg(row.n, f"R{spread + 1}hat", "mean", row.mean, row.lo95, row.hi95)
        report.add_check("loss-decreasing", table.decreasing, "means " + ", ".join(f"{r.mean:.5f}" for r in table.rows))
        last = table.rows[-1].mean
        report.add_check("loss-small", last < LOSS_MEAN_MAX, f"mean {last:.5f} at n={table.rows[-1].n} (need < {LOSS_MEAN_MAX})")
        report.curves.append((f"mean R{spread + 1}hat({cfg.T:g})", "n",
                              {"mean": ([r.n for r in table.rows], [r.mean for r in table.rows])}))
    if cfg.source == "pattern":
        report.add_check("batch-losses-on-period-lattice", lattice_ok, f"class {cfg.k} losses only at multiples of tau")


def _recipe_conventional(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    alpha, m_t, a_t = conv_sim.conv_limit_params(cfg.model)
    report.add_agg(0, "alpha", "value", alpha)
    report.add_agg(0, "m_tilde", "value", m_t)
    report.add_agg(0, "A_tilde", "value", a_t)
    lim = limits.conv_limit_terminal(limits.ConvLimitParams(m_t, a_t, cfg.model.beta), cfg.dt, cfg.T,
                                     cfg.limit_paths, replication_seed(cfg.seed, 0, _stream(10, 0)))
    report.add_summary(0, "Xtilde_limit", lim)
    medians = []
    for n in cfg.n_list:
        tasks = [(cfg.model, n, cfg.T, cfg.grid_size, replication_seed(cfg.seed, r, _stream(5, n)))
                 for r in range(cfg.replications)]
        reps = pool_map(conv_replication, tasks, workers)
        _invariant_check(report, reps, f"n{n}")
        xt = np.array([r.xt_end for r in reps])
        gaps = np.array([r.gap for r in reps])
        for r_idx, r in enumerate(reps):
            report.add_raw(n, r_idx, "Xtilde", cfg.T, r.xt_end, r.seed)
            report.add_raw(n, r_idx, "max_gap", cfg.T, r.gap, r.seed)
        medians.append(float(np.median(gaps)))
        report.add_summary(n, "Xtilde", xt)
        report.add_summary(n, "max_gap", gaps)
        if cfg.replications >= 2:
            d = report.add_ks(n, f"Xtilde_vs_limit_n{n}", xt, lim)
            if n == cfg.n_list[-1]:
                report.add_check("conv-limit-match", d.statistic <= KS_LIMIT,
                                 f"KS D={d.statistic:.4f} at n={n} (need <= {KS_LIMIT})")
                report.ecdfs.append((f"Xtilde({cfg.T:g}), n={n}", {"simulation": xt, "reflected BM": lim}))
    if len(medians) >= 2:
        report.add_check("collapse-gap-decreasing", strictly_decreasing(medians),
                         "median max|X1hat - X2hat|: " + ", ".join(f"{m:.4f}" for m in medians))
        report.curves.append(("median max|X1hat - X2hat|", "n", {"median": (list(cfg.n_list), medians)}))


def _recipe_arrival_scaling(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    clt = {0: [], 1: []}
    bound_ok = True
    details = []
    for n in cfg.n_list:
        p = derive(ModelData(mu=(2.0, 2.0), lam=(1.0, 1.0)), n, cfg.a)
        src = arr.pattern_source(p, cfg.k)
        bound = n ** (cfg.a - 0.5) + 2 / math.sqrt(n)
        for c in (0, 1):
            lln, dev = arr.scaling_check(src, n, cfg.T, 1.0 / (2 * n), cls=c)
            clt[c].append(dev)
            report.add_raw(n, 0, f"sup_lln_dev_class{c + 1}", cfg.T, lln, 0)
            report.add_raw(n, 0, f"sup_clt_dev_class{c + 1}", cfg.T, dev, 0)
            if dev > bound:
                bound_ok = False
                details.append(f"n={n} class {c + 1}: {dev:.4f} > {bound:.4f}")
    for c in (0, 1):
        report.add_check(f"clt-decreasing-class{c + 1}", strictly_decreasing(clt[c]),
                         ", ".join(f"{v:.4f}" for v in clt[c]))
    report.add_check("clt-bound", bound_ok, "; ".join(details) or "sup_clt_dev <= n^(a-1/2) + 2/sqrt(n) at every n")
    report.curves.append(("pattern sup CLT deviation", "n",
                          {f"class {c + 1}": (list(cfg.n_list), clt[c]) for c in (0, 1)}))


def skorohod_path_check(seed: int, steps: int = 256):
    """Reflection-map properties on one batch of random paths; returns per-property slack."""
    rng = make_rng(seed)
    T = 1.0
    grid = np.linspace(0.0, T, steps + 1)
    dt = T / steps
    # two-sided map: integer-valued walk with integer levels keeps the arithmetic exact
    walk = np.concatenate([[0.0], np.cumsum(rng.choice([-1.0, 1.0], steps))])
    a1 = float(rng.integers(1, 6))
    a2 = a1 + float(rng.integers(1, 6))
    phi1, lo1, hi1 = limits.clamp_recursion(walk, a1)
    phi2, _, _ = limits.clamp_recursion(walk, a2)
    interval_excess = float(np.max(np.abs(phi1 - phi2)) - (a2 - a1))
    d_lo, d_hi = np.diff(lo1, prepend=0.0), np.diff(hi1, prepend=0.0)
    interval_compl = bool(np.all(phi1[d_lo > 0] == 0.0) and np.all(phi1[d_hi > 0] == a1)
                          and np.all(phi1 == walk + lo1 - hi1) and np.all(d_lo >= 0) and np.all(d_hi >= 0))
    # half-space map on Gaussian paths
    beta_total = 1.0
    f = np.cumsum(rng.standard_normal((steps + 1, 2)) * math.sqrt(dt), axis=0) + rng.normal(0, 0.5, 2)
    ft = f + rng.normal(0, 0.3) * np.cumsum(rng.standard_normal((steps + 1, 2)) * math.sqrt(dt), axis=0)
    yf, gf = limits.gamma_halfspace(limits.GridPath(grid, f), beta_total, 0)
    yt, _ = limits.gamma_halfspace(limits.GridPath(grid, ft), beta_total, 0)
    ratio = limits.sup_distance(yf.values, yt.values) / max(limits.sup_distance(f, ft), 1e-300)
    g = gf.values[:, 0]
    dg = np.diff(g, prepend=0.0)
    on_boundary = np.abs(yf.values.sum(axis=1) - beta_total) <= 1e-12
    half_compl = bool(np.all(dg >= 0) and np.all(on_boundary[dg > 0])
                      and np.all(yf.values.sum(axis=1) <= beta_total + 1e-12))
    mod_ratio = max(
        limits.modulus(yf.values, grid, th) / max(limits.modulus(f, grid, th), 1e-300) for th in (T / 8, T / 4)
    )
    return interval_excess, interval_compl, ratio, half_compl, mod_ratio


def _skorohod_task(seed):
    return skorohod_path_check(seed)


def _recipe_skorohod(cfg: ExperimentConfig, report: ExperimentReport, workers: int):
    seeds = [replication_seed(cfg.seed, r, _stream(6, 0)) for r in range(cfg.replications)]
    res = pool_map(_skorohod_task, seeds, workers)
    excess = np.array([r[0] for r in res])
    ratio = np.array([r[2] for r in res])
    mod = np.array([r[4] for r in res])
    for r_idx, (s, r) in enumerate(zip(seeds, res)):
        report.add_raw(0, r_idx, "interval_gap_minus_bound", cfg.T, r[0], s)
        report.add_raw(0, r_idx, "halfspace_lipschitz_ratio", cfg.T, r[2], s)
        report.add_raw(0, r_idx, "halfspace_modulus_ratio", cfg.T, r[4], s)
    report.add_check("interval-comparison", bool(np.all(excess <= 0.0)), f"max excess {excess.max():.3g}")
    report.add_check("interval-complementarity", all(r[1] for r in res))
    report.add_check("halfspace-complementarity", all(r[3] for r in res))
    report.add_check("halfspace-lipschitz", bool(np.all(ratio <= LIPSCHITZ_C)),
                     f"max ratio {ratio.max():.4f} (C = {LIPSCHITZ_C:.4f})")
    report.add_check("halfspace-modulus", bool(np.all(mod <= LIPSCHITZ_C)),
                     f"max ratio {mod.max():.4f} (C = {LIPSCHITZ_C:.4f})")


_DISPATCH: dict[str, Callable[..., Any]] = {
    "hw-counterexample": _recipe_hw_counterexample,
    "hw-vs-sde": _recipe_hw_vs_sde,
    "conventional-limit": _recipe_conventional,
    "ssc": _recipe_ssc,
    "loss-decay": _recipe_loss_decay,
    "arrival-scaling": _recipe_arrival_scaling,
    "skorohod-props": _recipe_skorohod,
}


def run_experiment(config: ExperimentConfig, workers: int = 1, write: bool = True) -> ExperimentReport:
    """Run a recipe; with ``write`` the CSV and SVG outputs land in ``config.out``."""
    report = ExperimentReport(config)
    _DISPATCH[config.recipe](config, report, workers)
    if write:
        from slqlab.output import write_outputs

        write_outputs(report, config.out)
    return report
