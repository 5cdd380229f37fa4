"""Named experiment suites.  Each returns PASS/FAIL assertions with the
measured values, plus tables for CSV export."""

from __future__ import annotations

import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.stats import binom, chisquare, linregress

from . import constructions as cons
from .chain import build_chain, heat_kernel_rows
from .distances import HorizonExhausted, mixing_time, tv_profile
from .hitting import (absorption_probabilities, hitting_pmf, local_clt_check, passage_rate,
                      poissonize, quantile_t_delta, verify_return_identity)
from .montecarlo import ImplicitTreeWalker, StopAtEscape, StopAtLevel, mc_hitting
from .network import NetworkBuilder
from .spectral import check_cheeger_inequality, check_relaxation_bounds, spectrum, subchain_radius
from .transforms import lump, nbrw_lift, perturb_edges, stretch_edges


@dataclass
class Assertion:
    name: str
    passed: bool
    measured: dict


@dataclass
class ExperimentReport:
    name: str
    config: dict
    assertions: list[Assertion] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, **measured) -> bool:
        self.assertions.append(Assertion(name, bool(passed), _plain(measured)))
        return bool(passed)

    def to_dict(self) -> dict:
        return {"experiment": self.name, "config": self.config, "config_hash": config_hash(self.config),
                "status": "PASS" if self.passed else "FAIL",
                "assertions": [{"name": a.name, "status": "PASS" if a.passed else "FAIL",
                                "measured": a.measured} for a in self.assertions]}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, HorizonExhausted):
        return {"horizon_exhausted": x.horizon, "final_value": x.final_value}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for a named sub-task of an experiment."""
    return np.random.default_rng([int(seed), zlib.crc32(label.encode())])


def _path_network(weights) -> "cons.WeightedNetwork":
    b = NetworkBuilder()
    for i in range(len(weights) + 1):
        b.add_vertex(f"p{i}")
    for i, w in enumerate(weights):
        b.add_edge(f"p{i}", f"p{i + 1}", float(w))
    return b.build({"family": "path"})


def _binary_tree(depth: int, left_weight: float = 1.0) -> "cons.WeightedNetwork":
    b = NetworkBuilder()
    b.add_vertex("o", {"level:0"})
    frontier = ["o"]
    for lvl in range(1, depth + 1):
        nxt = []
        for u in frontier:
            for side in "LR":
                v = u + side
                b.add_vertex(v, {f"level:{lvl}"})
                b.add_edge(u, v, left_weight if side == "L" else 1.0, {"left" if side == "L" else "right"})
                nxt.append(v)
        frontier = nxt
    return b.build({"family": "binary-tree", "depth": depth})


# return identity -----------------------------------------------------------------

def exp_return_identity(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("lemma32", cfg)
    rng = stream(cfg["seed"], "path")
    w = rng.uniform(0.2, 2.0, cfg["path_states"] - 1)
    ch = build_chain(_path_network(w), 0.5)
    r = verify_return_identity(ch, "p1", "p7", "p4", cfg["t_max"])
    rep.check("A1 separating-vertex equality", r.separating and r.equality_residual <= cfg["tol"],
              residual=r.equality_residual, decomposition_residual=r.decomposition_residual, t_max=r.t_max)

    rng = stream(cfg["seed"], "random-chains")
    worst_b = worst_d = math.inf
    worst_eq = 0.0
    rows = []
    for c in range(cfg["random_chains"]):
        n = int(rng.integers(3, cfg["max_states"] + 1))
        ch = build_chain(cons.random_network(n, rng), 0.5)
        for _ in range(cfg["triples"]):
            x, y, z = (ch.states[i] for i in rng.choice(n, 3, replace=False))
            r = verify_return_identity(ch, x, y, z, cfg["random_t_max"])
            worst_b, worst_d = min(worst_b, r.margin_branched), min(worst_d, r.margin_direct)
            worst_eq = max(worst_eq, r.decomposition_residual)
            rows.append([c, n, x, y, z, r.margin_branched, r.margin_direct, r.decomposition_residual])
    rep.tables["random_chains"] = (["chain", "states", "x", "y", "z", "margin_branched",
                                    "margin_direct", "decomposition_residual"], rows)
    rep.check("A2 lower bounds on random chains", min(worst_b, worst_d) >= -cfg["tol"],
              min_margin_branched=worst_b, min_margin_direct=worst_d, cases=len(rows))
    rep.check("A2 decomposition identity on random chains", worst_eq <= 1e-9, max_residual=worst_eq)
    return rep


# biased double path quantiles and Poissonization ---------------------------------------

def _double_passage(n: int, holding: float, horizon: int):
    ch = build_chain(cons.biased_double_path(n), holding)
    one = hitting_pmf(ch, f"a{n}", ["z"], horizon)
    both = np.convolve(one.masses, one.masses)[:horizon + 1]
    return ch, both


def exp_quantiles(cfg: dict) -> ExperimentReport:
    from .hitting import HittingPMF

    rep = ExperimentReport("example33-quantiles", cfg)
    rows = []
    band: dict[float, list[float]] = {d: [] for d in cfg["deltas"]}
    ok = True
    for n in cfg["ns"]:
        horizon = 16 * n
        _, both = _double_passage(n, 0.5, horizon)
        pmf = HittingPMF(both, max(0.0, 1.0 - float(both.sum())))
        for d in cfg["deltas"]:
            t = quantile_t_delta(pmf, d, n)
            tau = quantile_t_delta(pmf, d, n, continuous=True, rate=2.0)
            good = (not isinstance(t, HorizonExhausted) and not isinstance(tau, HorizonExhausted)
                    and t - 2 * tau > 0 and t < 12 * n and tau < 6 * n)
            ok &= good
            stat = (12 * n - t) / (math.sqrt(d) * n)
            band[d].append(stat)
            rows.append([n, d, t, tau, t - 2 * tau, stat])
    rep.tables["quantiles"] = (["n", "delta", "discrete_quantile", "continuous_quantile", "discrete_minus_twice_continuous", "band_stat"], rows)
    rep.check("A5 quantile ordering", ok, rows=rows)
    spreads = {d: max(v) / min(v) for d, v in band.items()}
    rep.check("A5 common band", all(min(v) > 0 for v in band.values()) and max(spreads.values()) <= 3,
              spreads=spreads)

    # the two-speed identity: continuous time at rate 1 = lazy chain at rate 2
    rng = stream(cfg["seed"], "heat")
    tol = cfg["heat_tol"]
    worst = worst_oracle = 0.0
    for _ in range(cfg["heat_chains"]):
        net = cons.random_network(int(rng.integers(3, 13)), rng)
        fast, lazy = build_chain(net, 0.0), build_chain(net, 0.5)
        times = cfg["heat_times"]
        starts = list(fast.states)
        h1 = heat_kernel_rows(fast, starts, times, tol)
        h2 = heat_kernel_rows(lazy, starts, [2 * t for t in times], tol)
        worst = max(worst, float(np.abs(h1 - h2).max()))
        gen = fast.kernel.toarray() - np.eye(fast.n_states)
        for j, t in enumerate(times):
            worst_oracle = max(worst_oracle, float(np.abs(h1[j] - expm(t * gen)).max()))
    rep.check("A6 two-speed heat kernels", worst <= 2 * tol, max_diff=worst, oracle_diff=worst_oracle)
    rep.check("A6 heat kernel vs matrix exponential", worst_oracle <= 2 * tol, max_diff=worst_oracle)

    rng = stream(cfg["seed"], "poisson-hitting")
    ch = build_chain(cons.random_network(5, rng), 0.0)
    target = ch.states[4]
    pmf = hitting_pmf(ch, ch.states[0], [target], 4000)
    Q = ch.kernel.toarray() - np.eye(5)
    Q[4] = 0.0
    worst_p = 0.0
    for t in cfg["poisson_grid"]:
        exact = float(expm(t * Q)[0, 4])
        worst_p = max(worst_p, abs(poissonize(pmf, 1.0, t).value - exact))
    rep.check("A6 Poissonized hitting CDF", worst_p <= 1e-8, max_diff=worst_p)
    return rep


# spectral suites --------------------------------------------------------------------

def exp_cheeger(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("cheeger-suite", cfg)
    rng = stream(cfg["seed"], "cheeger")
    rows, bad = [], 0
    for i in range(cfg["networks"]):
        n = int(rng.integers(2, cfg["max_states"] + 1))
        holding = float(rng.choice([0.0, 0.25, 0.5]))
        r = check_cheeger_inequality(build_chain(cons.random_network(n, rng), holding), "exact", cfg["slack"])
        bad += (not r.holds) or (not r.exact)
        rows.append([i, n, holding, r.phi, r.lower, r.gap, r.upper, r.holds])
    rep.tables["cheeger"] = (["network", "states", "holding", "phi", "lower", "gap", "upper", "holds"], rows)
    rep.check("A3 Cheeger sandwich", bad == 0, violations=bad, networks=len(rows))
    return rep


def _cycle(n: int):
    b = NetworkBuilder()
    for i in range(n):
        b.add_vertex(f"c{i}")
    for i in range(n):
        b.add_edge(f"c{i}", f"c{(i + 1) % n}", 1.0)
    return b.build({"family": "cycle", "n": n})


def exp_relaxation_bounds(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("trel-bounds", cfg)
    eps = cfg["eps"]
    chains = [("example33", cons.biased_double_path(cfg["example33_n"])),
              ("theorem1", cons.bottleneck_branches(**cfg["theorem1"])),
              ("cycle4", _cycle(4))]
    rng = stream(cfg["seed"], "random")
    chains += [(f"random{i}", cons.random_network(int(rng.integers(3, 13)), rng)) for i in range(cfg["random_chains"])]
    rows, failures = [], []
    for name, net in chains:
        for r in check_relaxation_bounds(build_chain(net, 0.5), eps):
            rows.append([name, r.eps, r.lower, _plain(r.t_mix), r.upper, r.holds])
            if not r.holds:
                failures.append(name)
    rep.tables["bounds"] = (["chain", "eps", "lower", "t_mix", "upper", "holds"], rows)
    rep.check("A4 relaxation-time bounds", not failures, failures=failures, cases=len(rows))
    return rep


# tree harmonic measure --------------------------------------------------------------

def _chi2_binomial(counts: np.ndarray, k: int, p: float = 0.5) -> float:
    n = counts.sum()
    exp = binom.pmf(np.arange(k + 1), k, p) * n
    obs = counts.astype(float)
    # merge sparse tails so every expected count is at least 5
    lo, hi = 0, k
    while exp[lo] < 5 and lo < hi:
        exp[lo + 1] += exp[lo]
        obs[lo + 1] += obs[lo]
        lo += 1
    while exp[hi] < 5 and hi > lo:
        exp[hi - 1] += exp[hi]
        obs[hi - 1] += obs[hi]
        hi -= 1
    return float(chisquare(obs[lo:hi + 1], exp[lo:hi + 1]).pvalue)


def exp_tree_bias(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("fact41", cfg)
    walker = ImplicitTreeWalker(depth=cfg["mc_depth"], stretch_left=cfg["mc_stretch"],
                                stretch_other=cfg["mc_stretch"])
    pvals = {}
    for k in cfg["mc_levels"]:
        sample = mc_hitting(walker, StopAtLevel(k), cfg["mc_samples"], cfg["seed"] * 1000 + k)
        pvals[k] = _chi2_binomial(np.bincount(sample.left_count, minlength=k + 1), k)
    rep.check("A7 crossing law is binomial", min(pvals.values()) > 0.001, p_values=pvals)

    eps = cfg["bias_eps"]
    bias = cons.left_exit_bias(cfg["bias_depth"], eps)
    rep.check("A7 exact left bias at depth", abs(bias.root_value - bias.limit) <= 1e-3,
              value=bias.root_value, closed_form=bias.limit, target=1.1 / 2.1)
    vals = [cons.left_exit_bias(cfg["bias_depth"], e).root_value for e in cfg["monotone_eps"]]
    zero = cons.left_exit_bias(cfg["bias_depth"], 0.0).per_level
    rep.check("A7 bias increases with the perturbation",
              all(a < b for a, b in zip(vals, vals[1:])) and np.all(zero == 0.5), values=vals)

    # the reduction formula against a sparse solve on the explicit tree
    d = cfg["solve_depth"]
    ch = build_chain(_binary_tree(d, 1 + eps), 0.5)
    leaves = [v for v in ch.states if len(v) == d + 1]
    left = [v for v in leaves if v[1] == "L"]
    right = [v for v in leaves if v[1] == "R"]
    solved = absorption_probabilities(ch, "o", [left, right])[0]
    rec = cons.left_exit_bias(d, eps).root_value
    rep.check("A7 reduction matches linear solve", abs(solved - rec) <= 1e-10, solve=solved, reduction=rec)

    # hitting D versus ending below D
    rng = stream(cfg["seed"], "comparability")
    d = cfg["comparability_depth"]
    ch = build_chain(_binary_tree(d), 0.5)
    by_level: dict[int, list[str]] = {}
    for v in ch.states:
        by_level.setdefault(len(v) - 1, []).append(v)
    leaves = by_level[d]
    ratios = []
    for _ in range(cfg["comparability_trials"]):
        lvl = int(rng.integers(2, d - 1))
        level = by_level[lvl]
        size = int(rng.integers(1, len(level) + 1))
        D = sorted(rng.choice(level, size, replace=False).tolist())
        under = [leaf for leaf in leaves if leaf[:lvl + 1] in set(D)]
        others = [leaf for leaf in leaves if leaf[:lvl + 1] not in set(D)]
        last_in = absorption_probabilities(ch, "o", [under, others])[0] if others else 1.0
        visit = absorption_probabilities(ch, "o", [D, leaves])[0]
        ratios.append(last_in / visit)
    rep.check("A7 comparability constant", min(ratios) > cfg["comparability_c"] and max(ratios) <= 1 + 1e-12,
              min_ratio=min(ratios), max_ratio=max(ratios), trials=len(ratios))
    return rep


def exp_local_clt(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("local-clt", cfg)
    C = cfg["C"]
    rows = []
    for n in cfg["ns"]:
        for m in range(1, math.ceil(n ** 0.25) + 1):
            v = local_clt_check(n, m)
            rows.append([n, m, v.tail, v.value])
    rep.tables["local_clt"] = (["n", "m", "tail", "value"], rows)
    vals = [r[3] for r in rows]
    rep.check("A9 scaled tails inside [1/C, C]", all(1 / C <= x <= C for x in vals),
              min=min(vals), max=max(vals), cases=len(rows))
    return rep


# decorated trees -----------------------------------------------------------------------

def _tmix_from(net, start: str, eps_list, holding: float = 0.5):
    prof = tv_profile(build_chain(net, holding), 10 ** 7, starts=[start], stop_below=min(eps_list))
    return [mixing_time(prof, e) for e in eps_list]


def exp_sensitivity(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("thm2a-sensitivity", cfg)
    rows, ratios, windows = [], [], []
    for depth in cfg["depths"]:
        net = cons.decorated_tree(k=cfg["k"], C=cfg["C"], torus_side=cfg["torus_side"], depth_override=depth,
                                  threshold_scale=cfg["threshold_scale"], seed=cfg["seed"] + depth)
        pert = perturb_edges(net, net.metadata["perturbation_selector"], 1 + cfg["eps"])
        b25, b75 = _tmix_from(net, "o", (0.25, 0.75))
        p25, p75 = _tmix_from(pert, "o", (0.25, 0.75))
        ratios.append(p25 / b25)
        windows.append((p25 - p75) / p25)
        rows.append([depth, net.n_vertices, json.dumps(net.metadata["decoration_sizes"], sort_keys=True),
                     b25, b75, p25, p75, ratios[-1], windows[-1]])
    rep.tables["sensitivity"] = (["depth", "states", "decoration_sizes", "base_tmix_quarter", "base_tmix_three_quarters",
                                  "pert_tmix_quarter", "pert_tmix_three_quarters", "ratio", "window"], rows)
    rep.check("A8 ratio increases with depth", all(a < b for a, b in zip(ratios, ratios[1:])), ratios=ratios)
    rep.check("A8 relative window shrinks", all(a > b for a, b in zip(windows, windows[1:])), windows=windows)
    return rep


def _gadget(lumped: bool) -> float:
    b = NetworkBuilder()
    for v in ("u", "vl", "vr"):
        b.add_vertex(v)
    b.add_edge("u", "vl", 1.0, {"left"})
    b.add_edge("u", "vr", 1.0, {"right"})
    net = stretch_edges(b.build(), "*", 3)
    if lumped:
        pair = ["u~vl:1", "u~vl:2"]
        blocks = [pair] + [[v] for v in net.ids if v not in pair]
        net = lump(net, blocks)
    ch = build_chain(net, 0.5)
    return float(absorption_probabilities(ch, "u", [["vl"], ["vr"]])[0])


def exp_lumping(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("thm2c-lumping", cfg)
    rng = stream(cfg["seed"], "lumping")
    worst = math.inf
    for _ in range(cfg["random_pairs"]):
        n = int(rng.integers(3, 13))
        net = cons.random_network(n, rng)
        labels = rng.integers(0, int(rng.integers(2, n + 1)), n)
        blocks = [[net.ids[i] for i in np.flatnonzero(labels == c)] for c in np.unique(labels)]
        holding = float(rng.choice([0.0, 0.5]))
        base = spectrum(build_chain(net, holding)).gap
        lumped = spectrum(build_chain(lump(net, blocks), holding)).gap
        worst = min(worst, lumped - base)
    rep.check("A10 lumping does not shrink the gap", worst >= -1e-9, min_gap_change=worst)

    rows, ratios = [], []
    for depth in cfg["depths"]:
        st, lu = cons.lumped_stretched_pair(k=cfg["k"], C=cfg["C"], torus_side=cfg["torus_side"],
                                            depth_override=depth, threshold_scale=cfg["threshold_scale"],
                                            seed=cfg["seed"] + depth)
        ts = _tmix_from(st, "o", (0.25,))[0]
        tl = _tmix_from(lu, "o", (0.25,))[0]
        ratios.append(tl / ts)
        rows.append([depth, st.n_vertices, lu.n_vertices, ts, tl, ratios[-1]])
    rep.tables["pair"] = (["depth", "stretched_states", "lumped_states", "tmix_stretched", "tmix_lumped", "ratio"], rows)
    rep.check("A10 lumped/stretched ratio increases with depth",
              all(a < b for a, b in zip(ratios, ratios[1:])), ratios=ratios)
    plain, lumped = _gadget(False), _gadget(True)
    rep.check("A10 lumped gadget prefers the left child", lumped > 0.5 and abs(plain - 0.5) < 1e-12,
              lumped=lumped, unlumped=plain)
    return rep


# stretched escape tree -------------------------------------------------------------------

def exp_escape_profile(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("thm3-profile", cfg)
    s, m, b = cfg["s"], cfg["m"], cfg["b"]
    exp = cons.random_regular_expander(cfg["expander_n"], cfg["expander_d"], cfg["seed"], cfg["expander_gap"])
    cert = exp.metadata["certificate"]
    rep.check("A11 expander certificate", cert["gap"] >= cfg["expander_gap"], **cert)

    win = cons.escape_window(m, b)
    K = s * s * b
    stop = StopAtEscape(m, win.cutoff, 2, K)
    samples = {}
    for name, lw in (("base", 1.0), ("perturbed", 1 + b ** (-1 / 3))):
        walker = ImplicitTreeWalker(depth=K * m, branching=5, root_branching=6, left_weight=lw,
                                    bias_min_level=m, bias_max_level=K * m, stretch_left=s, stretch_other=s)
        samples[name] = mc_hitting(walker, stop, cfg["samples"], cfg["seed"] + (0 if name == "base" else 1),
                                   max_steps=cfg["max_steps"])
    base, pert = samples["base"], samples["perturbed"]
    rep.check("A11 no capped walkers", not (base.cap_warning or pert.cap_warning),
              base_capped=float(base.capped.mean()), perturbed_capped=float(pert.capped.mean()))

    unit = 3 * s * s * m
    ks, logs = [], []
    k = 1
    while True:
        surv = float((base.times > unit * k).mean())
        if surv < cfg["min_survival"]:
            break
        ks.append(k)
        logs.append(math.log(surv))
        k += 1
    fit = linregress(ks, logs) if len(ks) >= 3 else None
    r2 = fit.rvalue ** 2 if fit is not None else float("nan")
    rep.tables["survival"] = (["k", "log_survival"], [[a, c] for a, c in zip(ks, logs)])
    rep.check("A11 geometric escape tail", fit is not None and r2 >= 0.9 and fit.slope < 0,
              r_squared=r2, slope=fit.slope if fit else None, points=len(ks))
    rep.check("A11 base escape time spread", base.cv >= 0.6, cv=base.cv, mean=base.mean, ci95=base.ci95)
    rep.check("A11 perturbed escape time concentrates", pert.cv <= 0.35, cv=pert.cv, mean=pert.mean,
              ci95=pert.ci95, boundary_fraction=win.fraction, cutoff=win.cutoff)

    # mixing proxy: escape quantile plus the local mixing radius on the expander
    cheeger_lb = cert["gap"] / 2
    rows = []
    for e in cfg["proxy_eps"]:
        q = float(np.quantile(base.times, 1 - e / 2))
        rad = subchain_radius(cheeger_lb, cfg["expander_d"], cfg["expander_n"], e / 2)
        rows.append([e, q, rad, q + rad])
    half = [r for r in rows if r[0] == 0.5][0][3]
    xs = [abs(math.log(r[0])) for r in rows]
    ys = [r[3] / half for r in rows]
    slope = linregress(xs, ys).slope
    rep.tables["mixing_proxy"] = (["eps", "escape_quantile", "local_radius", "proxy"], rows)
    rep.check("A11 proxy ratio grows with log(1/eps)", slope > 0, slope=slope, ratios=ys)
    return rep


def _nbrw_tree(depth: int, seed: int):
    tree = _binary_tree(depth)
    bld = NetworkBuilder.from_network(tree)
    leaves = [v for v in tree.ids if len(v) == depth + 1]
    exp = cons.random_regular_expander(len(leaves), 3, seed, 0.01)
    for u, v, w, _ in exp.edges():
        bld.add_edge(leaves[int(u[1:])], leaves[int(v[1:])], w, {"expander"})
    return stretch_edges(bld.build(), "right", 2), leaves


def exp_nbrw(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("nbrw-harmonic", cfg)
    net, leaves = _nbrw_tree(cfg["depth"], cfg["seed"])
    left = set(v for v in leaves if v[1] == "L")
    lift = nbrw_lift(net, cfg["holding"])
    into = [[st for st in lift.states if st.split(">")[1] in grp] for grp in (left, set(leaves) - left)]
    start = np.zeros(lift.n_states)
    out_of_root = [st for st in lift.states if st.startswith("o>")]
    start[lift.indices_of(out_of_root)] = 1 / len(out_of_root)
    nb = absorption_probabilities(lift, start, into)
    srw = absorption_probabilities(build_chain(net, cfg["holding"]), "o",
                                   [sorted(left), sorted(set(leaves) - left)])
    rep.check("A12 non-backtracking walk is unbiased", abs(nb[0] - 0.5) <= 1e-12 and abs(nb[1] - 0.5) <= 1e-12,
              left=nb[0], right=nb[1])
    rep.check("A12 simple walk is biased", abs(srw[0] - 0.5) >= 0.05, left=srw[0], right=srw[1])
    return rep


def exp_passage_rate(cfg: dict) -> ExperimentReport:
    rep = ExperimentReport("psi-rate", cfg)
    alpha = cfg["alpha"]
    gaps: dict[float, list[float]] = {r: [] for r in cfg["rs"]}
    rows = []
    for n in cfg["ns"]:
        horizon = int(max(cfg["rs"]) * n) + 1
        _, both = _double_passage(n, alpha, horizon)
        cdf = np.cumsum(both)
        for r in cfg["rs"]:
            emp = -math.log(cdf[int(r * n)]) / n
            target = 2 * passage_rate(alpha, r / 2).value
            gaps[r].append(abs(emp - target))
            rows.append([n, r, emp, target, abs(emp - target)])
    rep.tables["rates"] = (["n", "r", "empirical", "legendre", "gap"], rows)
    shrink = {r: 1 - g[1] / g[0] for r, g in gaps.items()}
    rep.check("A13 empirical rate approaches the transform", all(v >= 0.25 for v in shrink.values()),
              shrink=shrink, gaps=gaps)
    return rep


# registry ------------------------------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "lemma32": {"seed": 1, "path_states": 9, "t_max": 300, "tol": 1e-10, "random_chains": 100,
                "max_states": 12, "triples": 10, "random_t_max": 200},
    "example33-quantiles": {"seed": 2, "ns": [20, 30, 40], "deltas": [0.1, 0.25, 0.4], "heat_chains": 20,
                            "heat_times": [0.5, 1.0, 5.0], "heat_tol": 1e-9,
                            "poisson_grid": [0.5, 1.0, 2.0, 5.0, 10.0, 20.0]},
    "cheeger-suite": {"seed": 3, "networks": 100, "max_states": 12, "slack": 1e-9},
    "trel-bounds": {"seed": 4, "eps": [0.05, 0.25, 0.45], "example33_n": 20,
                    "theorem1": {"n": 16, "delta": 0.125, "s": 2}, "random_chains": 20},
    "fact41": {"seed": 5, "mc_depth": 20, "mc_stretch": 2, "mc_levels": [4, 8, 12], "mc_samples": 100_000,
               "bias_depth": 20, "bias_eps": 0.21, "monotone_eps": [0.0, 0.1, 0.2], "solve_depth": 10,
               "comparability_depth": 12, "comparability_trials": 50, "comparability_c": 0.05},
    "local-clt": {"ns": [100, 400, 1600], "C": 20},
    "thm2a-sensitivity": {"seed": 6, "depths": [8, 10, 12], "torus_side": 2, "eps": 1.0, "k": 2, "C": 1,
                          "threshold_scale": 3.0},
    "thm2c-lumping": {"seed": 7, "random_pairs": 50, "depths": [8, 10, 12], "torus_side": 2, "k": 2, "C": 1,
                      "threshold_scale": 3.0},
    "thm3-profile": {"seed": 8, "expander_n": 256, "expander_d": 6, "expander_gap": 0.05, "s": 3, "m": 10,
                     "b": 4, "samples": 20_000, "max_steps": 2_000_000, "min_survival": 0.005,
                     "proxy_eps": [0.5, 0.25, 0.125, 0.0625, 0.03125]},
    "nbrw-harmonic": {"seed": 9, "depth": 8, "holding": 0.5},
    "psi-rate": {"alpha": 0.5, "ns": [40, 80], "rs": [4, 6, 8]},
}

RUNNERS: dict[str, Callable[[dict], ExperimentReport]] = {
    "lemma32": exp_return_identity,
    "example33-quantiles": exp_quantiles,
    "cheeger-suite": exp_cheeger,
    "trel-bounds": exp_relaxation_bounds,
    "fact41": exp_tree_bias,
    "local-clt": exp_local_clt,
    "thm2a-sensitivity": exp_sensitivity,
    "thm2c-lumping": exp_lumping,
    "thm3-profile": exp_escape_profile,
    "nbrw-harmonic": exp_nbrw,
    "psi-rate": exp_passage_rate,
}


class UnknownExperiment(KeyError):
    def __str__(self) -> str:
        return f"unknown experiment {self.args[0]!r}; registered: {', '.join(sorted(RUNNERS))}"


def run_experiment(name: str, overrides: dict | None = None) -> ExperimentReport:
    if name not in RUNNERS:
        raise UnknownExperiment(name)
    cfg = json.loads(json.dumps(DEFAULTS[name]))
    for key, value in (overrides or {}).items():
        if key not in cfg:
            raise ValueError(f"experiment {name!r} has no parameter {key!r}; known: {', '.join(sorted(cfg))}")
        cfg[key] = value
    return RUNNERS[name](cfg)
