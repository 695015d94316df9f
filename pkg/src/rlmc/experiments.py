"""The named experiments behind the CLI.

Each experiment takes an :class:`~rlmc.config.ExperimentConfig` and a worker
count and returns an :class:`ExperimentResult`. Monte Carlo work is cut into
fixed-size blocks whose seeds are derived from the root seed and the block's
coordinates (never from scheduling order), so results do not depend on the
number of workers.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import metrics, oracle, sampler
from .config import ConfigError, ExperimentConfig
from .metrics import loglog_fit, slope_fit
from .potential import Potential
from .schedule import StepSchedule
from .streams import RngStreams, derive_seed

log = logging.getLogger(__name__)


@dataclass
class ResultRecord:
    experiment: str
    params: dict
    statistic: str
    value: float
    std_error: float = 0.0
    passed: bool | None = None

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("standard error must be nonnegative")


@dataclass
class ExperimentResult:
    experiment: str
    records: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    # experiments with a fixed CSV layout put (header, rows) here
    table: tuple | None = None

    @property
    def all_pass(self) -> bool:
        flags = [r.passed for r in self.records if r.passed is not None]
        flags += list(self.checks.values())
        return all(flags)

    def add(self, params, statistic, value, std_error=0.0, passed=None):
        self.records.append(ResultRecord(self.experiment, dict(params), statistic,
                                         float(value), float(std_error), passed))


def pmap(fn, tasks, workers: int = 1):
    """Map ``fn`` over ``tasks`` in order, optionally across worker processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _blocks(total, size):
    return [(b, min(size, total - b * size)) for b in range((total + size - 1) // size)]


def _require_diagonal(p: Potential, what: str):
    if not p.is_diagonal:
        raise ConfigError(f"{what} needs a diagonal quadratic potential (closed-form oracle)")


# --------------------------------------------------------------------------
# drift-check

DRIFT_DEFAULTS = {
    "grid.eta": "0.01,0.05,0.1,0.5,1.0",
    "grid.x": "0,1,-1,3,-3,10,-10",
    "replicas.n_mc": "1000000",
}


def _drift_task(args):
    p, eta, x, n_mc, seed = args
    return metrics.drift_check(p, eta, [x], n_mc, RngStreams(seed))[0]


def drift_check(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    etas = cfg.get_floats("grid.eta")
    xs = cfg.get_floats("grid.x")
    n_mc = cfg.positive_int("replicas.n_mc")
    root = cfg.seed()
    limit = p.m / p.L ** 2
    for eta in etas:
        if not 0 < eta <= limit:
            raise ConfigError(f"grid.eta: eta = {eta:g} outside (0, m/L^2 = {limit:g}]")
    tasks = []
    for i, eta in enumerate(etas):
        for j, x in enumerate(xs):
            tasks.append((p, eta, x, n_mc, derive_seed(root, i, j)))
    for eta in etas:
        lam = metrics.drift_constants(p.m, p.L, p.dim, eta)[0]
        if lam >= 1:
            log.warning("eta = %g gives lambda = %g >= 1; the inequality is checked but is not a contraction",
                        eta, lam)
    recs = pmap(_drift_task, tasks, workers)
    res = ExperimentResult("drift-check")
    for (_, eta, x, _, _), r in zip(tasks, recs):
        lam, b = metrics.drift_constants(p.m, p.L, p.dim, eta)
        prm = {"eta": eta, "x": x}
        res.add(prm, "lambda", lam)
        res.add(prm, "lambda_below_one", float(lam < 1))
        res.add(prm, "b", b)
        res.add(prm, "lambda_V_plus_b", r.lambda_V_plus_b)
        if r.exact is not None:
            res.add(prm, "Q_eta_V_exact", r.exact, 0.0, r.exact_passed)
        res.add(prm, "Q_eta_V_mc", r.Q_eta_V_estimate, r.standard_error, r.passed)
    return res


# --------------------------------------------------------------------------
# bias-sweep

BIAS_DEFAULTS = {
    "grid.eta": "0.4,0.2,0.1,0.05,0.025",
    "bias.bound_constant": "1.0",
    "bias.min_slope": "0.45",
}


def bias_sweep(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    _require_diagonal(p, "bias-sweep")
    etas = cfg.get_floats("grid.eta")
    c_bound = cfg.get_float("bias.bound_constant")
    pi = oracle.target_law(p)
    res = ExperimentResult("bias-sweep")
    biases = []
    for eta in etas:
        try:
            law = oracle.stationary_law(p, eta)
        except ValueError as exc:
            raise ConfigError(f"grid.eta: {exc}") from None
        w2 = oracle.gaussian_w2(law, pi)
        biases.append(w2)
        res.add({"eta": eta}, "stationary_second_moment", law.second_moment())
        res.add({"eta": eta}, "w2_proxy", w2, 0.0, w2 <= c_bound * math.sqrt(eta))
    fit = loglog_fit(etas, biases)
    res.fits["w2_proxy_vs_eta"] = fit
    res.checks["slope_at_least_min"] = fit.slope >= cfg.get_float("bias.min_slope")
    return res


# --------------------------------------------------------------------------
# ergodicity

ERGODICITY_DEFAULTS = {
    "schedule.kind": "constant",
    "schedule.eta": "0.1",
    "ergodicity.x0_a": "10",
    "ergodicity.x0_b": "0",
    "replicas.chains": "100000",
    "replicas.block": "25000",
    "replicas.n_boot": "50",
    "grid.checkpoints": "5,10,20,40,80",
    "ergodicity.min_r_squared": "0.95",
}


def _ensemble_task(args):
    p, sched, x0, n, cps, seed = args
    return sampler.run_ensemble(p, sched, x0, n, cps, RngStreams(seed))


def _w2_multi(a, b):
    # per-coordinate quantile coupling, combined in quadrature
    a = a.reshape(len(a), -1)
    b = b.reshape(len(b), -1)
    return math.sqrt(sum(metrics.empirical_w_1d(a[:, i], b[:, i], 2) ** 2 for i in range(a.shape[1])))


def ergodicity(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """W2 between ensembles started at two points, which both converge to the same law.

    Block ``k`` of either ensemble uses seed ``derive_seed(root, k)``, so chain
    ``i`` from each start shares its noise with chain ``i`` from the other.
    """
    p = cfg.potential()
    sched = cfg.schedule()
    if sched.kind != "constant":
        raise ConfigError("schedule.kind: ergodicity needs a constant step size")
    xa = cfg.vector("ergodicity.x0_a", p.dim)
    xb = cfg.vector("ergodicity.x0_b", p.dim)
    n = cfg.positive_int("replicas.chains")
    block = cfg.positive_int("replicas.block")
    cps = sorted(set(cfg.get_ints("grid.checkpoints")))
    if len(cps) < 3 or cps[0] < 0:
        raise ConfigError("grid.checkpoints: need at least 3 nonnegative checkpoints")
    root = cfg.seed()
    tasks = []
    for x0 in (xa, xb):
        tasks += [(p, sched, x0, k, cps, derive_seed(root, b)) for b, k in _blocks(n, block)]
    outs = pmap(_ensemble_task, tasks, workers)
    nb = len(outs) // 2
    res = ExperimentResult("ergodicity")
    boot = np.random.Generator(np.random.PCG64(derive_seed(root, 1 << 32)))
    n_boot = cfg.get_int("replicas.n_boot")
    w2s = []
    for c in cps:
        a = np.concatenate([o[c] for o in outs[:nb]])
        b = np.concatenate([o[c] for o in outs[nb:]])
        w2 = _w2_multi(a, b)
        se = 0.0
        if n_boot > 1:
            vals = []
            for _ in range(n_boot):
                idx = boot.integers(0, n, n)
                vals.append(_w2_multi(a[idx], b[idx]))
            se = float(np.std(vals, ddof=1))
        w2s.append(w2)
        res.add({"n": c}, "w2_empirical", w2, se)
        if p.is_diagonal:
            res.add({"n": c}, "w2_gaussian_oracle", _ensemble_w2_oracle(p, sched.eta, xa, xb, c))
    if min(w2s) <= 0:
        raise ConfigError("ergodicity: ensembles coincide; cannot fit a log-linear decay")
    fit = slope_fit(np.column_stack([cps, np.log(w2s)]))
    res.fits["log_w2_vs_n"] = fit
    res.checks["negative_slope"] = fit.slope < 0
    res.checks["r_squared_at_least_min"] = fit.r_squared >= cfg.get_float("ergodicity.min_r_squared")
    return res


def _ensemble_w2_oracle(p, eta, xa, xb, n):
    """W2 between moment-matched Gaussians of the two chains' laws after ``n`` steps."""
    lam = p.diagonal()
    ea = 1 - eta * lam + 0.5 * eta * eta * lam * lam
    laws = []
    for x0 in (xa, xb):
        m2 = oracle.moment_recursion(lam, StepSchedule.constant(eta), x0, n, per_coordinate=True)[-1]
        mean = ea ** n * x0
        laws.append(oracle.GaussianLaw(mean, np.maximum(m2 - mean ** 2, 0.0)))
    return oracle.gaussian_w2(*laws)


# --------------------------------------------------------------------------
# one-step-order

ONE_STEP_DEFAULTS = {
    "one_step.x": "3",
    "grid.gamma": "0.2,0.1,0.05,0.025,0.0125",
    "replicas.strong": "1000000",
    "replicas.weak": "10000000",
    "replicas.block": "262144",
    "one_step.strong_slope_range": "1.35,1.65",
    "one_step.increment_slope_range": "0.4,0.6",
    "one_step.min_weak_slope": "1.35",
}

WEAK_FUNCTIONS = ("tanh", "half_logcosh")


def _weak_fns(dim):
    return {"tanh": metrics._coord_tanh(0), "half_logcosh": metrics._coord_half_logcosh(0)}


def _one_step_task(args):
    p, x, gamma, k, seed, weak = args
    xe, y = sampler.coupled_one_step(p, x, gamma, RngStreams(seed), n=k)
    if not weak:
        e = np.einsum("ij,ij->i", xe - y, xe - y)
        ix = np.einsum("ij,ij->i", xe - x, xe - x)
        iy = np.einsum("ij,ij->i", y - x, y - x)
        return {name: (v.sum(), (v * v).sum()) for name, v in
                (("strong", e), ("increment_exact", ix), ("increment_rlmc", iy))}
    out = {}
    for name, f in _weak_fns(p.dim).items():
        dv = f(xe) - f(y)
        out[name] = (dv.sum(), (dv * dv).sum())
    return out


def _mean_se(s1, s2, n):
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def _range(cfg, key):
    lo, hi = cfg.get_floats(key)
    return lo, hi


def one_step_order(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    if not p.is_quadratic:
        raise ConfigError("potential.kind: one-step-order needs a quadratic potential")
    x = cfg.vector("one_step.x", p.dim)
    gammas = cfg.get_floats("grid.gamma")
    if any(not 0 < g < 1 for g in gammas):
        raise ConfigError("grid.gamma: step sizes must lie in (0, 1)")
    n_strong = cfg.positive_int("replicas.strong")
    n_weak = cfg.positive_int("replicas.weak")
    block = cfg.positive_int("replicas.block")
    root = cfg.seed()
    tasks, keys = [], []
    for gi, g in enumerate(gammas):
        for weak, n in ((False, n_strong), (True, n_weak)):
            for b, k in _blocks(n, block):
                tasks.append((p, x, g, k, derive_seed(root, int(weak), gi, b), weak))
                keys.append((gi, weak))
    outs = pmap(_one_step_task, tasks, workers)
    sums = {}
    for key, o in zip(keys, outs):
        acc = sums.setdefault(key, {})
        for name, (s1, s2) in o.items():
            a1, a2 = acc.get(name, (0.0, 0.0))
            acc[name] = (a1 + s1, a2 + s2)

    res = ExperimentResult("one-step-order")
    series = {k: [] for k in ("strong", "increment_exact", "increment_rlmc") + WEAK_FUNCTIONS}
    for gi, g in enumerate(gammas):
        prm = {"gamma": g}
        for name in ("strong", "increment_exact", "increment_rlmc"):
            ms, se = _mean_se(*sums[(gi, False)][name], n_strong)
            l2 = math.sqrt(ms)
            series[name].append(l2)
            res.add(prm, f"{name}_l2", l2, se / (2 * l2) if l2 > 0 else 0.0)
        if p.is_diagonal:
            exact = sum(oracle.coupled_error_second_moment(lam, xi, g)
                        for lam, xi in zip(p.diagonal(), x))
            res.add(prm, "strong_l2_exact", math.sqrt(exact))
        for name in WEAK_FUNCTIONS:
            mean, se = _mean_se(*sums[(gi, True)][name], n_weak)
            series[name].append(abs(mean))
            res.add(prm, f"weak_{name}", abs(mean), se)
    lo, hi = _range(cfg, "one_step.strong_slope_range")
    fit = loglog_fit(gammas, series["strong"])
    res.fits["strong_l2_vs_gamma"] = fit
    res.checks["strong_slope_in_range"] = lo <= fit.slope <= hi
    lo, hi = _range(cfg, "one_step.increment_slope_range")
    fit = loglog_fit(gammas, series["increment_exact"])
    res.fits["increment_exact_l2_vs_gamma"] = fit
    res.checks["increment_slope_in_range"] = lo <= fit.slope <= hi
    res.fits["increment_rlmc_l2_vs_gamma"] = loglog_fit(gammas, series["increment_rlmc"])
    min_weak = cfg.get_float("one_step.min_weak_slope")
    for name in WEAK_FUNCTIONS:
        fit = loglog_fit(gammas, series[name])
        res.fits[f"weak_{name}_vs_gamma"] = fit
        res.checks[f"weak_{name}_slope_at_least_min"] = fit.slope >= min_weak
    return res


# --------------------------------------------------------------------------
# schedule-diag

SCHEDULE_DEFAULTS = {
    "schedule.kind": "polynomial",
    "schedule.c": "2",
    "schedule.alpha": "1",
    "schedule.n_max": "1000000",
    "grid.checkpoints": "1,2,5,10,20,50,100,200,500,1000,2000,5000,10000,20000,50000,"
                        "100000,200000,500000,1000000",
    "schedule.plateau_rtol": "0.01",
    "schedule.omega_rtol": "0.05",
}

SCHEDULE_HEADER = ("n", "gamma_n", "t_n", "u_n", "u_n_over_sqrt_gamma_n", "exp_decay_ratio")


def schedule_diag(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    s = cfg.schedule()
    m = cfg.get_float("schedule.m", p.m)
    n_max = cfg.positive_int("schedule.n_max")
    cps = sorted(c for c in set(cfg.get_ints("grid.checkpoints")) if 1 <= c <= n_max)
    try:
        seq = s.lemma_step_sequence(m, n_max)
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None
    times = s.times(n_max)
    decay = np.exp(-m * times.t[1:]) / np.sqrt(times.gammas)
    rows = [(n, times.gammas[n - 1], times.t[n], seq.u[n], seq.ratio[n - 1], decay[n - 1])
            for n in cps]
    res = ExperimentResult("schedule-diag", table=(SCHEDULE_HEADER, rows))

    diag = s.validate(m)
    res.checks["schedule_valid_for_decreasing"] = diag.valid_for_decreasing
    w = s.omega()
    w_num = float(s.omega_ratio(n_max))
    res.add({"n": n_max}, "omega_analytic", w)
    res.add({"n": n_max}, "omega_numeric", w_num)
    if w > 0:
        res.checks["omega_numeric_matches"] = abs(w_num - w) <= cfg.get_float("schedule.omega_rtol") * w
    elif s.kind == "polynomial":
        res.checks["omega_numeric_matches"] = w_num < 1e-3 / (2 * s.c)
    if n_max >= 100000:
        a, b = seq.running_max[10000 - 1], seq.running_max[100000 - 1]
        res.add({"n": 100000}, "running_max_u_over_sqrt_gamma", b)
        res.add({"n": 10000}, "running_max_u_over_sqrt_gamma", a)
        res.checks["running_max_plateau"] = abs(b - a) <= cfg.get_float("schedule.plateau_rtol") * abs(a)
    decades = [10 ** k for k in range(int(math.log10(n_max)) + 1)]
    dvals = [decay[n - 1] for n in decades]
    res.checks["exp_decay_decreasing_across_decades"] = all(np.diff(dvals) < 0)
    if s.kind == "polynomial" and n_max >= 1000:
        # t_n against an exactly rounded sum; u_n against direct summation
        exact_t = math.fsum(s.gammas(n_max).tolist())
        res.checks["t_n_compensated"] = abs(times.t[-1] - exact_t) <= 1e-12 * exact_t
        nn = min(n_max, 10000)
        direct = float(np.sum(times.gammas[:nn] ** 1.5 * np.exp(-0.5 * m * (times.t[nn] - times.t[1:nn + 1]))))
        res.checks["u_n_recursion_matches_direct_sum"] = abs(seq.u[nn] - direct) <= 1e-10 * direct
    return res


# --------------------------------------------------------------------------
# density-check

DENSITY_DEFAULTS = {
    "density.eta": "0.1",
    "density.x": "1.0",
    "density.grid_points": "101",
    "density.grid_halfwidth_sd": "6",
    "replicas.n_mc": "1000000",
    "density.n_u": "64",
    "density.n_y": "64",
    "density.alpha": "0.01",
}

DENSITY_HEADER = ("x_tilde", "q_eta", "mc_histogram_density")


def _one_step_draws(args):
    p, x, eta, k, seed = args
    rng = RngStreams(seed)
    y, _ = sampler.rlmc_step(p, np.full((k, 1), x), eta, rng.draw_u(k),
                             rng.draw_xi((k, 1)), rng.draw_xi_prime((k, 1)))
    return y[:, 0]


def _merge_small(observed, expected, minimum=5.0):
    obs, exp_ = list(observed), list(expected)
    i = 0
    while i < len(exp_) and len(exp_) > 2:
        if exp_[i] < minimum:
            j = i + 1 if i + 1 < len(exp_) else i - 1
            exp_[j] += exp_[i]
            obs[j] += obs[i]
            del exp_[i], obs[i]
            i = max(i - 1, 0)
        else:
            i += 1
    return np.array(obs, dtype=np.float64), np.array(exp_)


def density_check(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    if p.dim != 1:
        raise ConfigError("potential.dim: density-check is one-dimensional")
    eta = cfg.get_float("density.eta")
    x = cfg.get_float("density.x")
    npts = cfg.positive_int("density.grid_points")
    nsd = cfg.get_float("density.grid_halfwidth_sd")
    n_mc = cfg.positive_int("replicas.n_mc")
    quad = {"n_u": cfg.positive_int("density.n_u"), "n_y": cfg.positive_int("density.n_y")}
    root = cfg.seed()

    # centre and scale from a short deterministic pre-pass over the density itself
    rough = np.linspace(x - 30 * math.sqrt(eta) - 10 * abs(x), x + 30 * math.sqrt(eta) + 10 * abs(x), 4001)
    qr = oracle.transition_density(p, x, rough, eta, **quad)
    h = rough[1] - rough[0]
    mu = float(np.sum(rough * qr) * h)
    sd = float(np.sqrt(np.sum((rough - mu) ** 2 * qr) * h))

    grid = np.linspace(mu - nsd * sd, mu + nsd * sd, npts)
    q = oracle.transition_density(p, x, grid, eta, **quad)
    res = ExperimentResult("density-check")
    res.checks["strictly_positive"] = bool(np.all(q > 0))

    q2 = oracle.transition_density(p, x, grid, eta, n_u=2 * quad["n_u"], n_y=2 * quad["n_y"])
    res.add({}, "node_doubling_max_change", float(np.max(np.abs(q2 - q))))
    res.checks["node_doubling_stable"] = float(np.max(np.abs(q2 - q))) < 1e-8

    wide = np.linspace(mu - 16 * sd, mu + 16 * sd, 401)
    mass = float(oracle.transition_bin_probabilities(p, x, wide, eta, **quad).sum())
    res.add({}, "normalization", mass, 0.0, abs(mass - 1) <= 1e-6)

    if p.is_diagonal:
        ref = oracle.transition_density_quadratic(float(p.diagonal()[0]), x, grid, eta)
        err = float(np.max(np.abs(q - ref)))
        res.add({}, "max_abs_error_vs_u_mixture", err, 0.0, err <= 1e-8)

    blocks = _blocks(n_mc, 1 << 18)
    draws = np.concatenate(pmap(_one_step_draws,
                                [(p, x, eta, k, derive_seed(root, b)) for b, k in blocks], workers))
    step = grid[1] - grid[0]
    edges = np.concatenate(([grid[0] - step / 2], grid + step / 2))
    counts = np.histogram(draws, edges)[0]
    hist_density = counts / (n_mc * step)

    probs = oracle.transition_bin_probabilities(p, x, edges, eta, **quad)
    lo_tail = oracle.transition_bin_probabilities(
        p, x, np.linspace(edges[0] - 16 * sd, edges[0], 129), eta, **quad).sum()
    hi_tail = oracle.transition_bin_probabilities(
        p, x, np.linspace(edges[-1], edges[-1] + 16 * sd, 129), eta, **quad).sum()
    observed = np.concatenate(([np.sum(draws < edges[0])], counts, [np.sum(draws >= edges[-1])]))
    expected = n_mc * np.concatenate(([lo_tail], probs, [hi_tail]))
    obs, exp_ = _merge_small(observed, expected)
    exp_ *= obs.sum() / exp_.sum()
    chi2 = float(np.sum((obs - exp_) ** 2 / exp_))
    dof = len(obs) - 1
    pval = float(stats.chi2.sf(chi2, dof))
    res.add({"dof": dof}, "chi2_statistic", chi2)
    res.add({"dof": dof}, "chi2_p_value", pval, 0.0, pval >= cfg.get_float("density.alpha"))
    rows = list(zip(grid, q, hist_density))
    res.table = (DENSITY_HEADER, rows)
    return res


# --------------------------------------------------------------------------
# moment-check

MOMENT_DEFAULTS = {
    "schedule.kind": "polynomial",
    "schedule.c": "2",
    "schedule.alpha": "1",
    "moment.eta": "0.1",
    "x0": "0",
    "replicas.steps": "10000000",
    "replicas.burn_in": "100000",
    "replicas.bootstrap_blocks": "1000",
    "replicas.n_boot": "1000",
    "replicas.chains": "20000",
    "replicas.block": "10000",
    "grid.checkpoints": "1,2,5,10,20,50,100,200,500,1000",
    "moment.n_se": "3",
    "moment.ensemble_n_se": "4",
    "moment.recursion_n_max": "1000000",
}


def _long_chain_task(args):
    p, eta, x0, steps, burn, seed = args
    run = sampler.run_constant(p, eta, x0, burn + steps, RngStreams(seed))
    return run.states[burn + 1:]


def block_bootstrap_variance(tail, n_blocks, n_boot, gen):
    """Total variance of ``tail`` and its non-overlapping block-bootstrap SE."""
    tail = tail.reshape(len(tail), -1)
    nb = len(tail) // n_blocks
    t = tail[: nb * n_blocks].reshape(n_blocks, nb, -1)
    s1 = t.sum(axis=1)                                  # (blocks, d)
    s2 = np.einsum("bkd,bkd->b", t, t)                  # (blocks,)
    N = nb * n_blocks

    def var(i):
        m1 = s1[i].sum(axis=0) / N
        return s2[i].sum() / N - float(m1 @ m1)

    est = var(np.arange(n_blocks))
    boots = np.array([var(gen.integers(0, n_blocks, n_blocks)) for _ in range(n_boot)])
    return float(est), float(np.std(boots, ddof=1)), float(np.mean(np.einsum("kd,kd->k", tail, tail)))


def moment_check(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    _require_diagonal(p, "moment-check")
    lam_diag = p.diagonal()
    eta = cfg.get_float("moment.eta")
    x0 = cfg.vector("x0", p.dim)
    steps = cfg.positive_int("replicas.steps")
    burn = cfg.get_int("replicas.burn_in")
    root = cfg.seed()
    n_se = cfg.get_float("moment.n_se")
    res = ExperimentResult("moment-check")

    sched = cfg.schedule()
    diag = sched.validate(p.m)
    if not diag:
        raise ConfigError("schedule: " + "; ".join(diag.reasons))
    chains = cfg.positive_int("replicas.chains")
    block = cfg.positive_int("replicas.block")
    cps = sorted(set(cfg.get_ints("grid.checkpoints")))
    tasks = [(p, sched, x0, k, cps, derive_seed(root, 1, b)) for b, k in _blocks(chains, block)]
    tasks.insert(0, (p, eta, x0, steps, burn, derive_seed(root, 0)))
    outs = pmap(_moment_task, tasks, workers)

    # constant step: long-run tail variance against the fixed point
    tail = outs[0]
    gen = np.random.Generator(np.random.PCG64(derive_seed(root, 2)))
    est, se, mean_sq = block_bootstrap_variance(tail, cfg.positive_int("replicas.bootstrap_blocks"),
                                                cfg.positive_int("replicas.n_boot"), gen)
    target = float(oracle.rlmc_stationary_variance(lam_diag, eta).sum())
    prm = {"eta": eta, "n": steps}
    res.add(prm, "stationary_variance_oracle", target)
    res.add(prm, "tail_variance", est, se, abs(est - target) <= n_se * se)

    lam, b = metrics.drift_constants(p.m, p.L, p.dim, eta)
    if eta <= p.m / p.L ** 2 and lam < 1:
        bound = b / (1 - lam)
        res.add(prm, "drift_moment_bound", bound)
        res.add(prm, "tail_mean_square", mean_sq, se, mean_sq <= bound + n_se * se)
    else:
        res.add(prm, "drift_lambda", lam)

    # decreasing step: ensemble second moments against the exact recursion
    n_max = max(cps)
    m_exact = oracle.moment_recursion(lam_diag, sched, x0, n_max)
    ens_n_se = cfg.get_float("moment.ensemble_n_se")
    for c in cps:
        y = np.concatenate([o[c] for o in outs[1:]])
        sq = np.einsum("ij,ij->i", y, y)
        mean = float(sq.mean())
        sem = float(sq.std(ddof=1) / math.sqrt(len(sq))) if len(sq) > 1 else 0.0
        res.add({"n": c}, "second_moment_recursion", m_exact[c])
        res.add({"n": c}, "second_moment_ensemble", mean, sem, abs(mean - m_exact[c]) <= ens_n_se * sem)

    # uniform boundedness of the exact recursion over a long horizon
    n_long = cfg.positive_int("moment.recursion_n_max")
    m_long = oracle.moment_recursion(lam_diag, sched, x0, n_long)
    half = n_long // 2
    res.add({"n": n_long}, "sup_second_moment", float(m_long.max()))
    res.checks["second_moment_bounded"] = bool(np.isfinite(m_long).all()
                                               and m_long[half:].max() <= m_long[: half + 1].max())
    return res


def _moment_task(task):
    if isinstance(task[1], StepSchedule):
        return _ensemble_task(task)
    return _long_chain_task(task)


# --------------------------------------------------------------------------
# decreasing-rate

DECREASING_DEFAULTS = {
    "schedule.kind": "polynomial",
    "schedule.c": "2",
    "schedule.alpha": "1",
    "x0": "0",
    "schedule.n_max": "1000000",
    "rate.n_ref": "1000",
    "rate.max_ratio_factor": "2",
    "grid.checkpoints": "1,10,100,1000,2000,5000,10000,20000,50000,100000,200000,500000,1000000",
}


def decreasing_rate(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    p = cfg.potential()
    _require_diagonal(p, "decreasing-rate")
    s = cfg.schedule()
    diag = s.validate(p.m)
    if not diag:
        raise ConfigError("; ".join(diag.reasons) + ": decreasing-step rate hypothesis violated")
    x0 = cfg.vector("x0", p.dim)
    n_max = cfg.positive_int("schedule.n_max")
    n_ref = cfg.positive_int("rate.n_ref")
    if n_ref >= n_max:
        raise ConfigError("rate.n_ref must be below schedule.n_max")
    lam = p.diagonal()
    m_n = oracle.moment_recursion(lam, s, x0, n_max, per_coordinate=True)
    target = float(np.sum(1.0 / lam))
    total = m_n.sum(axis=1)
    gam = np.concatenate(([np.nan], s.gammas(n_max)))
    err = np.abs(total - target)
    ratio = err / np.sqrt(gam)
    w2 = np.sqrt(np.sum((np.sqrt(m_n) - np.sqrt(1.0 / lam)) ** 2, axis=1))

    res = ExperimentResult("decreasing-rate")
    for c in sorted(set(cfg.get_ints("grid.checkpoints"))):
        if not 1 <= c <= n_max:
            continue
        prm = {"n": c, "gamma_n": gam[c]}
        res.add(prm, "second_moment", total[c])
        res.add(prm, "abs_error_second_moment", err[c])
        res.add(prm, "error_over_sqrt_gamma", ratio[c])
        res.add(prm, "w2_moment_matched_to_target", w2[c])
    r_ref = ratio[n_ref]
    r_max = float(ratio[n_ref:].max())
    res.add({"n": n_ref}, "ratio_reference", r_ref)
    res.add({"n": n_max}, "ratio_max_after_reference", r_max)
    res.checks["ratio_bounded"] = r_max <= cfg.get_float("rate.max_ratio_factor") * r_ref
    res.checks["error_below_C_sqrt_gamma"] = bool(np.all(err[n_ref:] <= r_ref * np.sqrt(gam[n_ref:]) * (1 + 1e-12)))
    idx = np.unique(np.geomspace(n_ref, n_max, 13).astype(int))
    fit = loglog_fit(gam[idx], err[idx])
    res.fits["abs_error_vs_gamma"] = fit
    res.checks["rate_at_least_sqrt_gamma"] = fit.slope >= 0.5
    return res


# --------------------------------------------------------------------------

RUNNERS = {
    "drift-check": (drift_check, DRIFT_DEFAULTS),
    "bias-sweep": (bias_sweep, BIAS_DEFAULTS),
    "ergodicity": (ergodicity, ERGODICITY_DEFAULTS),
    "one-step-order": (one_step_order, ONE_STEP_DEFAULTS),
    "schedule-diag": (schedule_diag, SCHEDULE_DEFAULTS),
    "density-check": (density_check, DENSITY_DEFAULTS),
    "moment-check": (moment_check, MOMENT_DEFAULTS),
    "decreasing-rate": (decreasing_rate, DECREASING_DEFAULTS),
}


def make_config(experiment: str, values: dict | None = None) -> ExperimentConfig:
    """Config for ``experiment`` with its defaults filled in under ``values``."""
    if experiment not in RUNNERS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return ExperimentConfig.build(experiment, values, RUNNERS[experiment][1])


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    if workers < 1:
        raise ConfigError("workers must be positive")
    return RUNNERS[cfg.experiment][0](cfg, workers)
