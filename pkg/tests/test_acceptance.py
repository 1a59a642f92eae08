"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line shown in the terminal summary and
then asserts.  Long criteria carry the ``slow`` marker.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import (GAUSS_ABS_MEAN, GAUSS_PLANE_NORM_MEAN, cross_polytope_vc, cube_guarantee, fat_oracle,
                     sauer_shelah_sum)
from vce import io
from vce.cli import main
from vce.convex import (SymmetricPolytope, convex_vc, elton_extract, gaussian_mean_norm, l1_instance,
                        probe_certificate, rudelson_instance)
from vce.dimensions import embeds
from vce.empirical import fat_shattering
from vce.extraction import SetSystem, coordinate_attempt, extract_cubes
from vce.harness import SuiteConfig, run_suite
from vce.harness.generators import normed_instance, quasi_metric_table, separated_set
from vce.harness.suites import _function_class
from vce.rng import derive_seed, generator
from vce.spaces import QuasiMetric


def record(name: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    ACCEPTANCE.append((name, ok, detail))
    assert ok, line


def test_criterion_1_cross_polytope_identity():
    start = time.monotonic()
    bad = []
    for n in (2, 4, 6):
        P = SymmetricPolytope.cross_polytope(n)
        for t in (0.25, 0.4, 0.5, 0.6, 1.0):
            got = convex_vc(P, t).dimension
            if got != cross_polytope_vc(n, t):
                bad.append((n, t, got))
    secs = time.monotonic() - start
    record("criterion 1", not bad and secs < 10, f"15 (n, t) cases, mismatches={bad}, {secs:.1f}s (< 10s)")


def test_criterion_2_sauer_shelah_suite():
    start = time.monotonic()
    rep = run_suite(SuiteConfig("sauer_shelah", trials=500, seed=2026))
    secs = time.monotonic() - start
    n_max = max(rec["descriptor"]["n"] for rec in rep.records if rec["status"] == "ok")
    # independent recount of the bound on every record
    recount = sum(1 for rec in rep.records if rec["status"] == "ok"
                  if rec["descriptor"]["size"] > sauer_shelah_sum(rec["descriptor"]["n"], rec["descriptor"]["vc"]))
    ok = rep.completed == 500 and rep.violations == 0 and recount == 0 and n_max <= 12 and secs < 60
    record("criterion 2", ok, f"{rep.completed} sets (n <= {n_max}), violations={rep.violations}, "
                              f"recount={recount}, {secs:.1f}s (< 60s)")


def _separated_instance(index: int):
    rng = generator(derive_seed(31, index))
    T = int(rng.integers(2, 5))
    n = int(rng.integers(2, 13))
    eps = float(rng.choice([0.25, 0.5, 0.75]))
    metric = QuasiMetric.zero_one() if rng.random() < 0.3 else quasi_metric_table(rng, T)
    B = separated_set(rng, n, T, metric, eps, int(rng.integers(4, 513)))
    return B, metric, eps, T


@pytest.mark.slow
def test_criterion_3_cube_extraction_guarantee():
    start = time.monotonic()
    short, unembedded, sizes = [], 0, []
    for i in range(200):
        B, metric, eps, T = _separated_instance(i)
        rep = extract_cubes(B, metric, eps, seed=i)
        sizes.append(len(B))
        need = cube_guarantee(len(B), T, eps) if len(B) >= 2 else 0
        if rep.achieved < need:
            short.append((i, rep.achieved, need))
        unembedded += sum(1 for c in rep.output["cubes"]
                          if not (embeds(c, B) and all(metric.distance(np.array(a), np.array(b)) > 0 for a, b in c.pairs)))
    secs = time.monotonic() - start
    ok = not short and unembedded == 0 and secs < 300
    record("criterion 3", ok, f"200 instances (|B| up to {max(sizes)}), below guarantee={short}, "
                              f"failed re-checks={unembedded}, {secs:.1f}s (< 300s)")


def _coordinate_instance(seed: int, n: int, eps: float, count: int) -> SetSystem:
    rng = generator(seed)
    size = math.ceil(eps * n)
    return SetSystem.of(n, [rng.choice(n, size=size, replace=False) for _ in range(count)])


def _success_rate(S: SetSystem, eps: float, k: int, seed: int, attempts: int) -> float:
    M = S.incidence()
    return float(np.mean([coordinate_attempt(S, eps, k, seed, a, M)[1] for a in range(attempts)]))


@pytest.mark.slow
def test_criterion_4_coordinate_sampling_success():
    # calibration: the largest ratio log|S| / (eps k) below which every instance succeeds w.p. > 1/2
    # with 3-sigma confidence over 400 attempts
    calib = []
    for i, (eps, k, count) in enumerate((e, k, c) for e in (0.2, 0.35, 0.5) for k in (20, 60, 120)
                                        for c in (2, 4, 16, 64, 256)):
        S = _coordinate_instance(derive_seed(404, i), 240, eps, count)
        f = _success_rate(S, eps, k, derive_seed(405, i), 400)
        calib.append((math.log(count) / (eps * k), f - 3 * math.sqrt(f * (1 - f) / 400)))
    calib.sort()
    c_hat = 0.0
    for ratio, low in calib:
        if low <= 0.5:
            break
        c_hat = ratio
    # evaluation: fresh instances and seeds, different n, every one inside the calibrated region
    failures, checked = [], 0
    for i, (n, eps, k, count) in enumerate((n, e, k, c) for n in (160, 320) for e in (0.25, 0.4)
                                           for k in (30, 90) for c in (1, 3, 10, 40, 160)):
        if math.log(count) > c_hat * eps * k:
            continue
        S = _coordinate_instance(derive_seed(777, i), n, eps, count)
        f = _success_rate(S, eps, k, derive_seed(778, i), 1000)
        se = math.sqrt(0.25 / 1000)
        checked += 1
        if f < 0.5 - 3 * se:
            failures.append((n, eps, k, count, f))
    ok = c_hat > 0 and checked >= 10 and not failures
    record("criterion 4", ok, f"fitted c_hat={c_hat:.3f}, {checked} fresh instances x 1000 attempts, "
                              f"below 0.5 - 3se: {failures}")


def test_criterion_5_gaussian_closed_forms():
    start = time.monotonic()
    m1, s1 = gaussian_mean_norm(SymmetricPolytope(np.array([[1.0]])), 1, 100_000, 5)
    m2, s2 = gaussian_mean_norm(lambda g: np.linalg.norm(g, axis=1), 2, 100_000, 6)
    secs = time.monotonic() - start
    ok = (abs(m1 - GAUSS_ABS_MEAN) <= 3 * s1 and abs(m2 - GAUSS_PLANE_NORM_MEAN) <= 3 * s2
          and s1 < 0.005 and s2 < 0.005 and secs < 5)
    record("criterion 5", ok, f"E|g|={m1:.5f}+-{s1:.5f} (ref {GAUSS_ABS_MEAN:.5f}), "
                              f"E||g||_2={m2:.5f}+-{s2:.5f} (ref {GAUSS_PLANE_NORM_MEAN:.5f}), {secs:.2f}s (< 5s)")


def test_criterion_6_elton_certificates():
    cert = elton_extract(l1_instance(4), 100_000, 0)
    exact = cert.s == 1.0 and cert.t == 1.0
    instances = [l1_instance(4), rudelson_instance(8, 0.5, 1)] + \
                [normed_instance(generator(derive_seed(66, i)), 5 + i % 3, 8 + 2 * i) for i in range(8)]
    violations = 0
    for j, inst in enumerate(instances):
        c = cert if j == 0 else elton_extract(inst, 20_000, j)
        violations += probe_certificate(inst, c, 1000, j)[0]
    record("criterion 6", exact and violations == 0,
           f"l1^4 gives s={cert.s}, t={cert.t}; {len(instances)} instances x 1000 probes, violations={violations}")


@pytest.mark.slow
def test_criterion_7_rudelson_frontier():
    start = time.monotonic()
    bad, points, incomplete = [], 0, 0
    for delta in (0.3, 0.5, 0.8):
        inst = rudelson_instance(16, delta, 7)
        cert = elton_extract(inst, 100_000, 7)
        bound = cert.delta_hat ** 2 + 3 * cert.stderr
        for sigma, s, t, complete in cert.frontier:
            points += 1
            incomplete += not complete
            if s * t * t > bound:
                bad.append((delta, s, t, bound))
    secs = time.monotonic() - start
    ok = not bad and secs < 600
    record("criterion 7", ok, f"{points} certified (s, t) pairs ({incomplete} not proven maximal), "
                              f"above delta_hat^2 + 3se: {bad}, {secs:.0f}s (< 600s)")


def _criterion_classes():
    cfg = SuiteConfig("thm_fat", trials=100, seed=0).resolved()
    return [_function_class(generator(derive_seed(0, i)), cfg) for i in range(100)]


@pytest.mark.slow
def test_criterion_8_fat_shattering_oracle():
    start = time.monotonic()
    mismatches = []
    classes = _criterion_classes()
    for i, F in enumerate(classes):
        for eps in (0.03125, 0.0625, 0.1, 0.2, 0.4):
            got = fat_shattering(F, eps)[0]
            want = fat_oracle(F.values, eps, 160)
            if got != want:
                mismatches.append((i, eps, got, want))
    secs = time.monotonic() - start
    ok = not mismatches and secs < 600 and max(F.m for F in classes) <= 40 and max(F.n for F in classes) <= 8
    record("criterion 8", ok, f"100 classes x 5 eps, discrepancies={mismatches}, {secs:.0f}s (< 600s)")


@pytest.mark.slow
def test_criterion_9_entropy_fat_chain():
    constants, violations = {}, 0
    for seed in range(5):
        rep = run_suite(SuiteConfig("thm_fat", trials=100, seed=seed))
        constants[seed] = rep.fitted_constants["C"]
        violations += rep.violations
    chain = run_suite(SuiteConfig("fat_chain", trials=100, seed=0))
    # the classes above are the seed-0 classes of both suites
    same = [rec["descriptor"] for rec in chain.records] == [{"m": F.m, "n": F.n} for F in _criterion_classes()]
    spread = max(constants.values()) / min(constants.values())
    monitor = "stable" if spread <= 2 else "UNSTABLE (monitored, not a failure)"
    ok = chain.violations == 0 and violations == 0 and same
    record("criterion 9", ok, f"C_hat per seed={ {k: round(v, 4) for k, v in constants.items()} }, "
                              f"spread={spread:.2f} {monitor}; chain violations={chain.violations}, "
                              f"entropy-suite violations={violations}")


COVERING_SUITES = ("in_product", "in_lattice", "in_binfty", "linfty_vs_l1", "thm_fat", "haussler")


@pytest.mark.slow
def test_criterion_10_duality_sandwiches():
    checked, failed = 0, []
    for suite in COVERING_SUITES:
        rep = run_suite(SuiteConfig(suite, trials=40, seed=10))
        for rec in rep.records:
            for row in rec.get("rows", []):
                if "sandwich" in row["checks"]:
                    checked += 1
                    if not row["checks"]["sandwich"]:
                        failed.append((suite, rec["index"]))
    record("criterion 10", checked > 0 and not failed,
           f"{checked} sandwich checks across {len(COVERING_SUITES)} suites, violations={failed}")


CLI_COMMANDS = [
    ["vc", "--input", "pts.json"],
    ["vc", "--input", "pts.json", "--scale", "0.5"],
    ["fat", "--class", "cls.csv", "--eps", "0.1"],
    ["cover", "--input", "real.csv", "--gauge", '{"kind":"lp","p":2}', "--radius", "0.4"],
    ["pack", "--input", "real.csv", "--gauge", '{"kind":"lp","p":1}', "--radius", "0.4", "--bracket"],
    ["extract-cubes", "--input", "sep.json", "--eps", "0.3"],
    ["extract-coords", "--sets", "sets.json", "--eps", "0.5", "-k", "3"],
    ["refine", "--input", "real.csv", "--t", "0.1", "-k", "1"],
    ["elton", "--instance", "inst.json", "--trials", "5000", "--probes", "200"],
    ["minsigns", "--instance", "inst.json"],
    ["entropy", "--class", "cls.csv", "--radius", "0.3"],
    ["dudley", "--polytope", "poly.json", "--trials", "5000"],
] + [["verify", "--suite", s, "--trials", "3"] for s in
     ("sauer-shelah", "in-product", "convex-body", "dudley", "talagrand-E", "elton-frontier", "fat-chain", "haussler")]

TIMING_KEYS = ("elapsed_ms", "runtime_ms")


def _strip_timing(text: str, fmt: str) -> str:
    if fmt == "csv":
        return "\n".join(l for l in text.splitlines() if not l.startswith("# elapsed_ms"))
    doc = json.loads(text)
    doc.pop("elapsed_ms")
    if isinstance(doc["result"], dict):
        doc["result"].pop("runtime_ms", None)
    return io.dumps_json(doc)


@pytest.mark.slow
def test_criterion_11_cli_determinism(tmp_path, monkeypatch, capsys):
    rng = np.random.default_rng(11)
    (tmp_path / "pts.json").write_text(json.dumps({"alphabet": {"kind": "finite", "size": 3},
                                                   "points": rng.integers(0, 3, size=(12, 5)).tolist()}))
    (tmp_path / "real.csv").write_text("\n".join(",".join(f"{v:.3f}" for v in row)
                                                 for row in rng.uniform(-1, 1, size=(10, 3))) + "\n")
    (tmp_path / "cls.csv").write_text("\n".join(",".join(f"{v:.2f}" for v in row)
                                                for row in np.round(rng.uniform(-1, 1, size=(12, 4)) * 20) / 20) + "\n")
    sep = separated_set(rng, 6, 3, QuasiMetric.zero_one(), 0.3, 40)
    (tmp_path / "sep.json").write_text(json.dumps({"alphabet": {"kind": "finite", "size": 3},
                                                   "points": sep.points.tolist()}))
    (tmp_path / "sets.json").write_text(json.dumps({"n": 6, "sets": [[0, 1, 2], [2, 3, 4], [1, 4, 5]]}))
    (tmp_path / "inst.json").write_text(json.dumps(normed_instance(rng, 5, 7).to_dict()))
    (tmp_path / "poly.json").write_text(json.dumps({"generators": rng.uniform(-1, 1, size=(4, 3)).tolist()}))
    monkeypatch.chdir(tmp_path)
    differing, runs = [], 0
    for args in CLI_COMMANDS:
        for fmt in ("json", "csv"):
            outputs = []
            for threads in ("1", "2", "4"):
                out = f"out-{threads}.{fmt}"
                code = main(args + ["--seed", "5", "--threads", threads, "--format", fmt, "--out", out])
                assert code == 0, capsys.readouterr().err
                outputs.append(_strip_timing((tmp_path / out).read_text(), fmt))
                runs += 1
            if len(set(outputs)) != 1:
                differing.append((args[0], args[-1], fmt))
    record("criterion 11", not differing, f"{runs} runs of {len(CLI_COMMANDS)} invocations x 2 formats "
                                          f"x threads 1/2/4, differing={differing}")
