"""Inequality suites: seeded instances, both sides of each inequality, fitted constants.

A suite measures, per instance, a left side ``lhs`` and the right side
without its unknown constant (``rhs_shape``).  The fitted constant is the
largest ratio ``lhs / rhs_shape``, so it admits no violation by
construction.  Constant-free statements are recorded as named boolean
checks and every failed check counts as a violation.

Quantities that cannot be computed exactly are replaced by a bound whose
direction can only raise the fitted constant (an upper bound on ``lhs``,
a lower bound on ``rhs_shape``), and the record says so in ``direction``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from vce.convex import (CubeSearch, convex_vc, default_t_grid, dudley_bound, elton_extract,
                        gaussian_mean_norm, min_signs_norm, probe_certificate, rudelson_instance,
                        sphere_mean_width, vc_thresholds, SymmetricPolytope)
from vce.coverings import BallShape
from vce.dimensions import boolean_vc, sauer_shelah_bound, vc_inflated, vc_limit, vc_scaled
from vce.empirical import fat_shattering, vc_fat_chain
from vce.errors import Budget, BudgetExceeded, PreconditionError, SizeLimitError, VceError
from vce.extraction import extract_cubes
from vce.harness import bounds, generators as gen
from vce.io import SCHEMA_VERSION
from vce.rng import derive_seed, generator
from vce.spaces import PointSet, QuasiMetric

SUITES = ("sauer_shelah", "in_product", "in_lattice", "in_binfty", "convex_body", "binfty_thm",
          "linfty_vs_l1", "dudley", "talagrand_E", "elton_frontier", "sign_comparison", "fat_chain",
          "thm_fat", "haussler")


def fit_constant(records) -> float:
    """``max lhs / rhs_shape`` over ``(lhs, rhs_shape)`` pairs."""
    records = list(records)
    if not records:
        raise PreconditionError("cannot fit a constant to no records")
    best = -math.inf
    for lhs, shape in records:
        if not shape > 0:
            raise PreconditionError(f"rhs shape must be positive, got {shape}")
        best = max(best, lhs / shape)
    return best


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SuiteConfig:
    """Which suite to run, how many seeded instances, and the instance ranges.

    Ranges are inclusive ``(low, high)`` pairs; ``None`` takes the suite
    default.  ``options`` holds suite-specific knobs (Monte Carlo trials,
    the cutoff constant, the instance family).
    """

    suite_id: str
    trials: int = 20
    seed: int = 0
    n_range: tuple[int, int] | None = None
    size_range: tuple[int, int] | None = None
    alphabet_range: tuple[int, int] | None = None
    m_range: tuple[int, int] | None = None
    t_grid: tuple[float, ...] | None = None
    eps_grid: tuple[float, ...] | None = None
    instance_budget_ms: float | None = None
    options: dict = field(default_factory=dict)

    def resolved(self) -> "SuiteConfig":
        """Defaults filled in and every range checked against the suite limits."""
        sid = self.suite_id.replace("-", "_")
        if sid not in SUITES:
            raise PreconditionError(f"unknown suite {self.suite_id!r}; choose from {', '.join(SUITES)}")
        if self.trials < 1:
            raise PreconditionError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise PreconditionError("seed must be non-negative")
        d = DEFAULTS[sid]
        cfg = replace(
            self, suite_id=sid,
            n_range=_pair(self.n_range or d.get("n")),
            size_range=_pair(self.size_range or d.get("size")),
            alphabet_range=_pair(self.alphabet_range or d.get("alphabet")),
            m_range=_pair(self.m_range or d.get("m")),
            t_grid=tuple(float(t) for t in (self.t_grid or d.get("t", ()))),
            eps_grid=tuple(float(e) for e in (self.eps_grid or d.get("eps", ()))),
            options={**d.get("options", {}), **self.options})
        for name, lim in LIMITS.get(sid, {}).items():
            rng = getattr(cfg, name)
            if rng is not None and not (lim[0] <= rng[0] <= rng[1] <= lim[1]):
                raise PreconditionError(f"{sid}: {name} {rng} must lie within {lim}")
        for t in cfg.t_grid + cfg.eps_grid:
            if not 0 < t < 2:
                raise PreconditionError(f"{sid}: grid value {t} must lie in (0, 2)")
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return {"suite_id": self.suite_id, "trials": self.trials, "seed": self.seed,
                "n_range": self.n_range, "size_range": self.size_range,
                "alphabet_range": self.alphabet_range, "m_range": self.m_range,
                "t_grid": list(self.t_grid or ()), "eps_grid": list(self.eps_grid or ()),
                "instance_budget_ms": self.instance_budget_ms, "options": dict(self.options)}


def _pair(r):
    if r is None:
        return None
    lo, hi = (int(v) for v in r)
    return (lo, hi)


DEFAULTS: dict[str, dict] = {
    "sauer_shelah": {"n": (1, 12), "size": (1, 512)},
    "in_product": {"n": (2, 8), "size": (2, 40), "alphabet": (2, 4), "eps": (0.25, 0.5)},
    "in_lattice": {"n": (2, 10), "size": (2, 48), "alphabet": (2, 5), "eps": (0.25, 0.5),
                   "options": {"q_values": [1, 2]}},
    "in_binfty": {"n": (2, 4), "size": (4, 16), "t": (0.5, 0.8), "eps": (0.1, 0.25)},
    "convex_body": {"n": (2, 4), "m": (2, 6), "t": (0.5, 0.75)},
    "binfty_thm": {"n": (2, 4), "m": (2, 6), "t": (0.4, 0.6, 0.9)},
    "linfty_vs_l1": {"n": (2, 6), "size": (4, 30), "t": (0.5, 0.8), "eps": (0.05, 0.1)},
    "dudley": {"n": (2, 5), "m": (2, 8), "options": {"mc_trials": 20000, "sample": 200,
                                                     "cutoff_constants": [0.125, 0.25, 0.5, 1.0]}},
    "talagrand_E": {"n": (2, 5), "m": (2, 8), "options": {"mc_trials": 20000, "cutoff_constant": 0.25,
                                                          "iterations": 2}},
    "elton_frontier": {"n": (3, 6), "m": (3, 12), "options": {"mc_trials": 20000, "grid_size": 16,
                                                               "family": "gaussian", "probes": 1000}},
    "sign_comparison": {"n": (4, 8), "m": (3, 12), "options": {"mc_trials": 20000}},
    "fat_chain": {"n": (2, 8), "m": (2, 40), "t": (0.5, 0.8), "options": {"step": 0.05}},
    "thm_fat": {"n": (2, 8), "m": (2, 40), "t": (0.25, 0.5, 0.8), "options": {"step": 0.05}},
    "haussler": {"n": (2, 8), "m": (2, 40), "eps": (0.25, 0.5)},
}

# exact solvers: covers need |A| <= 64; cube searches and threshold profiles small n
LIMITS: dict[str, dict[str, tuple[int, int]]] = {
    "sauer_shelah": {"n_range": (1, 24), "size_range": (1, 4096)},
    "in_product": {"n_range": (1, 16), "size_range": (1, 64), "alphabet_range": (2, 8)},
    "in_lattice": {"n_range": (1, 24), "size_range": (1, 4096), "alphabet_range": (2, 16)},
    "in_binfty": {"n_range": (1, 8), "size_range": (1, 64)},
    "convex_body": {"n_range": (1, 6), "m_range": (1, 64)},
    "binfty_thm": {"n_range": (1, 6), "m_range": (1, 64)},
    "linfty_vs_l1": {"n_range": (1, 8), "size_range": (1, 64)},
    "dudley": {"n_range": (1, 8), "m_range": (1, 64)},
    "talagrand_E": {"n_range": (1, 8), "m_range": (1, 64)},
    "elton_frontier": {"n_range": (1, 16), "m_range": (1, 4096)},
    "sign_comparison": {"n_range": (2, 14), "m_range": (1, 4096)},
    "fat_chain": {"n_range": (1, 16), "m_range": (2, 64)},
    "thm_fat": {"n_range": (1, 16), "m_range": (2, 64)},
    "haussler": {"n_range": (1, 16), "m_range": (2, 64)},
}


def _draw(rng: np.random.Generator, r: tuple[int, int]) -> int:
    return int(rng.integers(r[0], r[1] + 1))


def _log2sq(x: float) -> float:
    return math.log(x) ** 2


# --------------------------------------------------------------------------
# per-instance measurements; each returns (descriptor, rows)


def _sauer_shelah(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    size = min(_draw(rng, cfg.size_range), 1 << n)
    A = gen.boolean_set(rng, n, size)
    v = boolean_vc(A, budget).dimension
    bound = sauer_shelah_bound(n, v)
    checks = {"sauer_shelah": len(A) <= bound}
    if 1 <= v <= n / 2:
        checks["log_form"] = math.log(len(A)) <= 2 * v * math.log(n / v) + 1e-12
    return {"n": n, "size": len(A), "vc": v}, [{"lhs": len(A), "rhs_shape": bound, "checks": checks,
                                                "direction": "exact"}]


def _in_product(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    T = _draw(rng, cfg.alphabet_range)
    metric = gen.quasi_metric_table(rng, T)
    eps = float(rng.choice(cfg.eps_grid))
    A = gen.separated_set(rng, n, T, metric, eps, _draw(rng, cfg.size_range))
    v = vc_limit(A, metric, budget).dimension
    cov = bounds.cover_with_sandwich(A, BallShape.hamming(metric), eps, budget)
    checks = {"sandwich": cov["sandwich"]}
    if len(A) >= 2:
        rep = extract_cubes(A, metric, eps, seed=int(rng.integers(1 << 31)))
        checks["cube_count"] = rep.achieved >= rep.guarantee
        checks["cube_dimension_le_vc"] = rep.details["max_dimension"] <= v
    row = {"lhs": math.log(cov["value"]), "rhs_shape": _log2sq(T / eps) * v, "checks": checks,
           "direction": "exact" if cov["family"] == "T^n" else "safe: restricted centres bound N from above"}
    return {"n": n, "alphabet": T, "size": len(A), "eps": eps, "vc": v, "metric": metric.to_dict()}, [row]


def _in_lattice(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    p = _draw(rng, cfg.alphabet_range)
    q = int(rng.choice([q for q in cfg.options["q_values"] if q < p] or [1]))
    eps = float(rng.choice(cfg.eps_grid))
    A = gen.separated_set(rng, n, p, QuasiMetric.zero_one(q), eps, _draw(rng, cfg.size_range))
    v = vc_scaled(A, QuasiMetric.absolute(), q, budget).dimension
    row = {"lhs": math.log(len(A)), "rhs_shape": _log2sq(p / eps) * v, "checks": {}, "direction": "exact"}
    return {"n": n, "p": p, "q": q, "eps": eps, "size": len(A), "vc": v}, [row]


def _in_binfty(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    A = gen.box_points(rng, n, _draw(rng, cfg.size_range))
    shape = BallShape.empirical_l2()
    rows = []
    for t in cfg.t_grid:
        cov = bounds.cover_with_sandwich(A, shape, t, budget)
        for eps in cfg.eps_grid:
            v = vc_inflated(A, eps, t / 2, budget).dimension
            rows.append({"t": t, "eps": eps, "vc": v, "lhs": math.log(cov["value"]),
                         "rhs_shape": _log2sq(2 / (t * eps)) * v, "checks": {"sandwich": cov["sandwich"]},
                         "direction": "safe: candidate centres bound N from above"})
    return {"n": n, "size": len(A)}, rows


def _minkowski_sum(P: SymmetricPolytope, b: float) -> SymmetricPolytope:
    """``K + b B_inf^n`` as the hull of ``v_j + b s`` over sign vectors ``s``."""
    n = P.n
    signs = 1.0 - 2.0 * ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1)
    return SymmetricPolytope((P.generators[:, None, :] + b * signs[None, :, :]).reshape(-1, n))


def _convex_body(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    P = gen.polytope(rng, n, _draw(rng, cfg.m_range))
    search = CubeSearch(P, budget)
    rows = []
    for t in cfg.t_grid:
        cells = bounds.box_cell_cover(P, t)
        v = convex_vc(P, t / 4, search).dimension
        # VC(K + b B_inf, a) <= VC(K, a - 2b): a cube of half-width a/2 loses b per side; a = t/2, b = t/8
        inflated = convex_vc(_minkowski_sum(P, t / 8), t / 2).dimension
        rows.append({"t": t, "vc": v, "lhs": math.log(cells), "rhs_shape": _log2sq(2 / t) * v,
                     "checks": {"inflation": inflated <= v},
                     "direction": "safe: grid cells bound N from above"})
    return {"n": n, "m": len(P.generators)}, rows


def _binfty_thm(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    P = gen.polytope(rng, n, _draw(rng, cfg.m_range))
    search = CubeSearch(P, budget)
    rows = []
    for t in cfg.t_grid:
        cells = bounds.box_cell_cover(P, t)
        v = convex_vc(P, t / 8, search).dimension
        shape = v * _log2sq(n / (t * v)) if v else 0.0
        rows.append({"t": t, "vc": v, "lhs": math.log(cells), "rhs_shape": shape, "checks": {},
                     "direction": "safe: grid cells bound N from above"})
    return {"n": n, "m": len(P.generators)}, rows


def _linfty_vs_l1(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    A = gen.box_points(rng, n, _draw(rng, cfg.size_range))
    sup, l1 = BallShape.lp(math.inf), BallShape.lp(1, "n_to_1_over_p")
    rows = []
    for t in cfg.t_grid:
        cov = bounds.cover_with_sandwich(A, sup, t, budget)
        for eps in cfg.eps_grid:
            if not eps < t / 8:
                continue
            small = bounds.cover_with_sandwich(A, l1, eps, budget)
            k = 2 * eps * n / t
            # N_inf <= (C / eps)^k N_1  <=>  C >= eps (N_inf / N_1)^(1/k)
            c = eps * (cov["value"] / small["packing"]) ** (1 / k)
            rows.append({"t": t, "eps": eps, "cover_sup": cov["value"], "packing_l1": small["packing"],
                         "lhs": c, "rhs_shape": 1.0,
                         "checks": {"sandwich": cov["sandwich"] and small["sandwich"]},
                         "direction": "safe: sup-norm cover from above, l1 cover from below by packing"})
    return {"n": n, "size": len(A)}, rows


def _dudley(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    P = gen.polytope(rng, n, _draw(rng, cfg.m_range))
    trials = int(cfg.options["mc_trials"])
    seed = int(rng.integers(1 << 31))
    ell, ell_se = gaussian_mean_norm(P, n, trials, seed)
    mstar, m_se = sphere_mean_width(P, trials, derive_seed(seed, 1))
    sample = bounds.body_sample(P, rng, int(cfg.options["sample"]))
    l2 = BallShape.lp(2)
    radius = float(np.linalg.norm(P.generators, axis=1).max())
    # grid of scales; on [e_i, e_{i+1}] the entropy is at least its value at e_{i+1}
    scales = np.linspace(0.0, radius, 65)[1:]
    packs = {float(e): math.log(bounds.packing_lower(sample, l2, float(e))) for e in scales}

    def entropy_lower(e: float) -> float:
        return math.log(bounds.packing_lower(sample, l2, e))

    checks = {}
    for e in (0.1 * radius, 0.25 * radius, 0.5 * radius):
        vol = n * math.log(1 + 2 * (mstar + 3 * m_se) / e)
        checks[f"volumetric@{e / radius:g}"] = entropy_lower(e) <= vol + 1e-12
    rows = []
    for c in cfg.options["cutoff_constants"]:
        cutoff = c * (mstar + 3 * m_se)
        integral = float(sum(math.sqrt(packs[float(hi)]) * (hi - max(lo, cutoff))
                             for lo, hi in zip(np.concatenate([[0.0], scales[:-1]]), scales) if hi > cutoff))
        rows.append({"cutoff_constant": c, "lhs": ell + 3 * ell_se, "rhs_shape": integral,
                     "checks": dict(checks) if c == cfg.options["cutoff_constants"][0] else {},
                     "direction": "safe: mean width +3 stderr, entropy from below by packing"})
    return {"n": n, "m": len(P.generators), "ell_polar": ell, "ell_stderr": ell_se,
            "mstar": mstar, "mstar_stderr": m_se}, rows


def vc_integral(thresholds: list[float], n: int, c: float, cutoff: float) -> float:
    """``sqrt(n) int_cutoff^1 sqrt(VC(K, c t)) log(2/t) dt`` with ``VC`` from its thresholds."""
    if cutoff >= 1:
        return 0.0
    # VC(K, c t) = k exactly for t in (thr[k] / c, thr[k-1] / c]
    cuts = sorted({min(max(thr / c, cutoff), 1.0) for thr in thresholds} | {cutoff, 1.0})
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        mid = (lo + hi) / 2
        k = sum(1 for thr in thresholds if thr >= c * mid)
        if k:
            total += dudley_bound(lambda t, k=k: k * math.log(2 / t) ** 2, lo, hi)
    return math.sqrt(n) * total


def _talagrand_E(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    P = gen.polytope(rng, n, _draw(rng, cfg.m_range))
    E, se = gaussian_mean_norm(P, n, int(cfg.options["mc_trials"]), int(rng.integers(1 << 31)))
    thr = vc_thresholds(P, budget)
    c = float(cfg.options["cutoff_constant"])
    row = {"E": E, "E_stderr": se, "lhs": E + 3 * se, "cutoff": c * E / n,
           "rhs_shape": vc_integral(thr, n, c, c * E / n), "checks": {},
           "direction": "safe: E +3 stderr, thresholds rounded down"}
    return {"n": n, "m": len(P.generators), "thresholds": thr}, [row]


def _talagrand_finalize(cfg: SuiteConfig, done: list[dict]) -> dict:
    """Iterate the self-referential cutoff: bound ``B = C shape(cB/n)``, starting from ``B = E``."""
    c = float(cfg.options["cutoff_constant"])
    history = []
    for _ in range(int(cfg.options["iterations"])):
        pos = [(r["lhs"], r["rhs_shape"]) for rec in done for r in rec["rows"] if r["rhs_shape"] > 0]
        if not pos:
            break
        C = fit_constant(pos)
        history.append(C)
        for rec in done:
            n = rec["descriptor"]["n"]
            for r in rec["rows"]:
                bound = C * r["rhs_shape"] if r["rhs_shape"] > 0 else r["E"]
                r["cutoff"] = min(c * bound / n, 1.0)
                r["rhs_shape"] = vc_integral(rec["descriptor"]["thresholds"], n, c, r["cutoff"])
    return {"cutoff_constant": c, "C_per_iteration": history}


def _elton_instance(rng, cfg):
    n = _draw(rng, cfg.n_range)
    if cfg.options["family"] == "rudelson":
        delta = float(rng.choice(cfg.options.get("deltas", [0.3, 0.5, 0.8])))
        return rudelson_instance(n, delta, int(rng.integers(1 << 31)))
    return gen.normed_instance(rng, n, _draw(rng, cfg.m_range))


def _elton_frontier(rng, cfg, budget):
    inst = _elton_instance(rng, cfg)
    seed = int(rng.integers(1 << 31))
    cert = elton_extract(inst, int(cfg.options["mc_trials"]), seed,
                         default_t_grid(int(cfg.options["grid_size"])), budget=budget)
    bad, low = probe_certificate(inst, cert, int(cfg.options["probes"]), derive_seed(seed, 2))
    checks = {"probes": bad == 0}
    if cfg.options["family"] == "rudelson":
        ceiling = cert.delta_hat ** 2 + 3 * cert.stderr
        checks["rudelson"] = all(s * t * t <= ceiling for _, s, t, _ in cert.frontier)
    d = cert.delta_hat
    row = {"delta_hat": d, "stderr": cert.stderr, "s": cert.s, "t": cert.t, "objective": cert.objective,
           "lhs": d, "rhs_shape": cert.objective, "t_over_delta": cert.t / d, "s_over_delta_sq": cert.s / d ** 2,
           "frontier_complete": cert.frontier_complete, "checks": checks,
           "direction": "safe: certified pairs bound the best objective from below"}
    return {"n": inst.n, "label": inst.label, "sigma": list(cert.sigma)}, [row]


def _sign_comparison(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    inst = gen.normed_instance(rng, n, _draw(rng, cfg.m_range))
    E, se = gaussian_mean_norm(inst, n, int(cfg.options["mc_trials"]), int(rng.integers(1 << 31)))
    X = np.eye(n)
    per_size = [0.0] * (n + 1)
    for mask in range(1, 1 << n):
        budget.check("sign minimization")
        sigma = [i for i in range(n) if (mask >> i) & 1]
        val, _ = min_signs_norm(X[sigma], inst.norm)
        k = len(sigma)
        per_size[k] = max(per_size[k], val / math.sqrt(k))
    rows = []
    for k in range(1, n + 1):
        lam = k / n
        m_hyp = max(per_size[1:k + 1])
        # lambda < log^-4(n / M^2) holds once M^2 > n exp(-lambda^(-1/4))
        m_cond = math.sqrt(n * math.exp(-lam ** -0.25)) * (1 + 1e-9)
        M = max(m_hyp, m_cond)
        rows.append({"lambda": lam, "M": M, "M_hypothesis": m_hyp, "lhs": E + 3 * se,
                     "rhs_shape": M * math.sqrt(n / lam), "checks": {},
                     "direction": "safe: E +3 stderr, exact sign minima"})
    return {"n": n, "E": E, "E_stderr": se}, rows


def _function_class(rng, cfg):
    return gen.function_class(rng, _draw(rng, cfg.m_range), _draw(rng, cfg.n_range),
                              step=cfg.options.get("step"))


def _fat_chain(rng, cfg, budget):
    F = _function_class(rng, cfg)
    rows = []
    for t in cfg.t_grid:
        ch = vc_fat_chain(F, t, budget)
        rows.append({"t": t, "lhs": ch["vc_inflated"], "rhs_shape": ch["fat"],
                     "checks": {"chain": ch["holds"]}, "direction": "exact"})
    return {"m": F.m, "n": F.n}, rows


def _thm_fat(rng, cfg, budget):
    F = _function_class(rng, cfg)
    A = F.as_points()
    shape = BallShape.empirical_l2()
    rows = []
    for t in cfg.t_grid:
        cov = bounds.cover_with_sandwich(A, shape, t, budget)
        fat, _ = fat_shattering(F, t / 8, budget)
        row = {"t": t, "fat": fat, "cover": cov["value"], "packing": cov["packing"],
               "lhs": math.log(cov["value"]), "rhs_shape": fat * _log2sq(2 / t),
               "checks": {"sandwich": cov["sandwich"]},
               "direction": "safe: candidate centres bound N from above"}
        if 16 * t <= 1:
            row["fat_16t"] = fat_shattering(F, 16 * t, budget)[0]
        rows.append(row)
    return {"m": F.m, "n": F.n}, rows


def _haussler(rng, cfg, budget):
    n = _draw(rng, cfg.n_range)
    F = gen.boolean_class(rng, _draw(rng, cfg.m_range), n)
    d = boolean_vc(PointSet(F.values.astype(int), 2), budget).dimension
    shape = BallShape.empirical_l2()
    rows = []
    for eps in cfg.eps_grid:
        cov = bounds.cover_with_sandwich(F.as_points(), shape, eps, budget)
        fat, _ = fat_shattering(F, min(eps, 0.5), budget)
        rows.append({"eps": eps, "vc": d, "lhs": cov["value"],
                     "rhs_shape": d * (4 * math.e) ** d * eps ** (-2 * d),
                     "checks": {"sandwich": cov["sandwich"], "fat_equals_vc": fat == d},
                     "direction": "safe: candidate centres bound N from above"})
    return {"m": F.m, "n": n, "vc": d}, rows


@dataclass(frozen=True)
class _Suite:
    measure: Callable
    # extra fitted quantities: name -> (row key, "max" | "min")
    extra: dict = field(default_factory=dict)
    finalize: Callable | None = None


REGISTRY: dict[str, _Suite] = {
    "sauer_shelah": _Suite(_sauer_shelah),
    "in_product": _Suite(_in_product),
    "in_lattice": _Suite(_in_lattice),
    "in_binfty": _Suite(_in_binfty),
    "convex_body": _Suite(_convex_body),
    "binfty_thm": _Suite(_binfty_thm),
    "linfty_vs_l1": _Suite(_linfty_vs_l1),
    "dudley": _Suite(_dudley),
    "talagrand_E": _Suite(_talagrand_E, finalize=_talagrand_finalize),
    "elton_frontier": _Suite(_elton_frontier, {"c_t": ("t_over_delta", "min"),
                                               "c_s": ("s_over_delta_sq", "min")}),
    "sign_comparison": _Suite(_sign_comparison),
    "fat_chain": _Suite(_fat_chain),
    "thm_fat": _Suite(_thm_fat),
    "haussler": _Suite(_haussler),
}


# --------------------------------------------------------------------------
# running and reporting


@dataclass
class VerificationReport:
    suite_id: str
    seed: int
    config: dict
    records: list
    fitted_constants: dict
    violations: int
    max_ratio: float | None
    argmax: dict | None
    completed: int
    skipped: int
    monitors: dict
    runtime_ms: float

    TIMING_FIELDS = ("runtime_ms",)

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        out = {"schema": SCHEMA_VERSION, "suite_id": self.suite_id, "seed": self.seed,
               "config": self.config, "records": self.records, "fitted_constants": self.fitted_constants,
               "violations": self.violations, "max_ratio": self.max_ratio, "argmax": self.argmax,
               "completed": self.completed, "skipped": self.skipped, "monitors": self.monitors}
        if timing:
            out["runtime_ms"] = self.runtime_ms
        return out


def _run_instance(suite: _Suite, cfg: SuiteConfig, index: int) -> dict:
    seed = derive_seed(cfg.seed, index)
    budget = Budget.from_env(cfg.instance_budget_ms)
    try:
        descriptor, rows = suite.measure(generator(seed), cfg, budget)
    except BudgetExceeded as exc:
        return {"index": index, "seed": seed, "status": "skipped", "reason": f"budget: {exc}"}
    except SizeLimitError as exc:
        return {"index": index, "seed": seed, "status": "skipped", "reason": f"size limit: {exc}"}
    return {"index": index, "seed": seed, "status": "ok", "descriptor": descriptor, "rows": rows}


def run_suite(cfg: SuiteConfig, threads: int = 1) -> VerificationReport:
    """Run every seeded instance, fit the constants and count violations.

    Instance ``i`` draws only from the stream derived from ``(seed, i)``
    and results are merged in index order, so the report does not depend
    on ``threads``.
    """
    start = time.monotonic()
    cfg = cfg.resolved()
    suite = REGISTRY[cfg.suite_id]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda i: _run_instance(suite, cfg, i), range(cfg.trials)))
    else:
        records = [_run_instance(suite, cfg, i) for i in range(cfg.trials)]
    done = [r for r in records if r["status"] == "ok"]
    if not done:
        reasons = sorted({r["reason"] for r in records})
        raise VceError(f"suite {cfg.suite_id}: no instance completed ({'; '.join(reasons)})")
    monitors = suite.finalize(cfg, done) if suite.finalize else {}

    violations = 0
    ratios = []
    for rec in done:
        for j, row in enumerate(rec["rows"]):
            failed = sorted(k for k, ok in row["checks"].items() if not ok)
            row["failed_checks"] = failed
            violations += len(failed)
            lhs, shape = row["lhs"], row["rhs_shape"]
            if shape > 0:
                row["ratio"] = lhs / shape
                ratios.append((lhs / shape, rec["index"], j))
            else:
                row["ratio"] = None
                if lhs > 0:
                    # a positive side against a vanishing shape: no constant fits
                    row["failed_checks"].append("unbounded")
                    violations += 1
    fitted: dict[str, Any] = {}
    max_ratio, argmax = None, None
    if ratios:
        fitted["C"] = fit_constant((rec_row["lhs"], rec_row["rhs_shape"]) for rec in done
                                   for rec_row in rec["rows"] if rec_row["rhs_shape"] > 0)
        max_ratio, idx, j = max(ratios, key=lambda r: (r[0], -r[1], -r[2]))
        rec = next(r for r in done if r["index"] == idx)
        argmax = {"index": idx, "row": j, "seed": rec["seed"], "descriptor": rec["descriptor"]}
    for name, (key, kind) in suite.extra.items():
        vals = [row[key] for rec in done for row in rec["rows"] if key in row]
        if vals:
            fitted[name] = min(vals) if kind == "min" else max(vals)
    if cfg.suite_id == "thm_fat":
        lower = [math.log(max(row["packing"], 1)) / row["fat_16t"] for rec in done for row in rec["rows"]
                 if row.get("fat_16t")]
        monitors["c_lower_fat_16t"] = min(lower) if lower else None
    if cfg.suite_id == "dudley":
        for c in cfg.options["cutoff_constants"]:
            pos = [(row["lhs"], row["rhs_shape"]) for rec in done for row in rec["rows"]
                   if row["cutoff_constant"] == c and row["rhs_shape"] > 0]
            if pos:
                fitted[f"C[c={c:g}]"] = fit_constant(pos)
    return VerificationReport(cfg.suite_id, cfg.seed, cfg.to_dict(), records, fitted, violations,
                              max_ratio, argmax, len(done), len(records) - len(done), monitors,
                              (time.monotonic() - start) * 1000.0)


def seed_stability(cfg: SuiteConfig, seeds, threads: int = 1) -> dict[str, Any]:
    """Fitted ``C`` per seed and whether the largest is within a factor 2 of the smallest."""
    per_seed = {}
    for s in seeds:
        rep = run_suite(replace(cfg, seed=int(s)), threads)
        per_seed[int(s)] = rep.fitted_constants.get("C")
    vals = [v for v in per_seed.values() if v is not None and v > 0]
    spread = max(vals) / min(vals) if vals else None
    return {"constants": per_seed, "spread": spread, "stable": spread is not None and spread <= 2.0}
