"""``vce`` command line: one subcommand per operation.

Exit status: 0 on success, 1 on domain or input errors, 2 when the time
budget (``--budget-ms`` or ``VCE_BUDGET_MS``) runs out.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
import numpy as np

from vce import io
from vce.convex import (DEFAULT_SOLVES_PER_T, NormedInstance, SymmetricPolytope, default_t_grid,
                        dudley_bound, elton_extract, gaussian_mean_norm, min_signs_norm,
                        probe_certificate, sphere_mean_width)
from vce.coverings import BallShape, covering_number, maximal_separated_subset, packing_cover_bracket
from vce.dimensions import boolean_vc, vc_limit, vc_scaled
from vce.empirical import FunctionClassSample, fat_shattering, witness_is_valid, empirical_entropy
from vce.errors import Budget, BudgetExceeded, VceError
from vce.extraction import SetSystem, extract_coordinates, extract_cubes, refine_separation
from vce.harness.suites import SUITES, SuiteConfig, run_suite, seed_stability
from vce.spaces import Alphabet, PointSet, QuasiMetric

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1, keeping 2 for budget exhaustion."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


class _Run:
    """Per-invocation context: input digests and the budget."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.budget = Budget.from_env(args.budget_ms)

    def path(self, p: str) -> str:
        if not Path(p).is_file():
            raise io.InputError(f"{p}: no such file")
        self.inputs[p] = io.digest(p)
        return p

    def json_arg(self, value: str) -> dict:
        """Inline JSON object or a path to one."""
        if value.lstrip().startswith("{"):
            try:
                return json.loads(value)
            except json.JSONDecodeError as exc:
                raise io.InputError(f"inline JSON: {exc.msg} at column {exc.colno}") from None
        data = io.load_json(self.path(value))
        if not isinstance(data, dict):
            raise io.InputError(f"{value}: expected a JSON object")
        return data

    def points(self, p: str, real: bool = False) -> PointSet:
        data = io.load_table(self.path(p), "points")
        if real and "alphabet" not in data:
            data = {**data, "alphabet": {"kind": "real"}}
        return io.wrap(PointSet.from_dict, p, data)

    def function_class(self, p: str) -> FunctionClassSample:
        return io.wrap(FunctionClassSample.from_dict, p, io.load_table(self.path(p), "values"))

    def metric(self, value: str | None, A: PointSet) -> QuasiMetric:
        if value is None:
            return QuasiMetric.zero_one() if A.alphabet.finite else QuasiMetric.absolute()
        return io.wrap(QuasiMetric.from_dict, value, self.json_arg(value))


# --------------------------------------------------------------------------
# commands; each returns (result dict, optional csv rows)


def cmd_vc(run: _Run, a) -> tuple[dict, list | None]:
    A = run.points(a.input)
    if a.boolean:
        res = boolean_vc(A, run.budget)
    else:
        m = run.metric(a.metric, A)
        res = vc_scaled(A, m, a.scale, run.budget) if a.scale is not None else vc_limit(A, m, run.budget)
    return res.to_dict(), None


def cmd_fat(run: _Run, a):
    F = run.function_class(getattr(a, "class"))
    dim, w = fat_shattering(F, a.eps, run.budget)
    out = {"dimension": dim, "eps": a.eps, "witness": w.to_dict() if w else None,
           "witness_valid": witness_is_valid(F, w) if w else None}
    return out, None


def _gauge(run: _Run, value: str) -> BallShape:
    return io.wrap(BallShape.from_dict, value, run.json_arg(value))


def cmd_cover(run: _Run, a):
    A = run.points(a.input, real=True)
    res = covering_number(A, _gauge(run, a.gauge), a.radius, restricted=a.restricted, mode=a.mode,
                          budget=run.budget)
    return {"radius": a.radius, **res.to_dict()}, None


def cmd_pack(run: _Run, a):
    A = run.points(a.input, real=True)
    shape = _gauge(run, a.gauge)
    kept = maximal_separated_subset(A, shape, a.radius, a.strategy, budget=run.budget)
    out = {"radius": a.radius, "strategy": a.strategy, "size": len(kept), "indices": kept}
    if a.bracket:
        out["bracket"] = packing_cover_bracket(A, shape, a.radius, run.budget).to_dict()
    return out, [{"index": i} for i in kept]


def cmd_extract_cubes(run: _Run, a):
    B = run.points(a.input)
    rep = extract_cubes(B, run.metric(a.metric, B), a.eps, seed=a.seed, cap=a.cap)
    rows = [{"dimension": c.dimension, "sigma": " ".join(map(str, c.sigma))} for c in rep.output["cubes"]]
    return rep.to_dict(), rows


def cmd_extract_coords(run: _Run, a):
    S = io.wrap(SetSystem.from_dict, a.sets, io.load_table(run.path(a.sets), "sets"))
    rep = extract_coordinates(S, a.eps, a.k, a.seed, a.max_attempts)
    return rep.to_dict(), [{"coordinate": i} for i in rep.output]


def cmd_refine(run: _Run, a):
    A = run.points(a.input)
    if A.alphabet.finite:
        A = PointSet(A.points.astype(float), Alphabet(None))
    rep = refine_separation(A, a.t, a.k)
    return rep.to_dict(), [{"index": i} for i in rep.details["indices"]]


def _instance(run: _Run, p: str) -> NormedInstance:
    return io.wrap(NormedInstance.from_dict, p, io.load_json(run.path(p)))


def cmd_elton(run: _Run, a):
    inst = _instance(run, a.instance)
    limit = None if a.solves_per_t == 0 else a.solves_per_t
    cert = elton_extract(inst, a.trials, a.seed, default_t_grid(a.t_grid_size), a.exponent,
                         run.budget, limit)
    bad, low = probe_certificate(inst, cert, a.probes, a.seed)
    out = {**cert.to_dict(), "probes": a.probes, "probe_violations": bad, "probe_min_norm": low}
    rows = [{"s": s, "t": t, "complete": ok, "sigma": " ".join(map(str, sg))} for sg, s, t, ok in cert.frontier]
    return out, rows


def cmd_minsigns(run: _Run, a):
    inst = _instance(run, a.instance)
    val, eta = min_signs_norm(inst)
    return {"n": inst.n, "min_norm": val, "signs": list(eta)}, None


def cmd_entropy(run: _Run, a):
    F = run.function_class(getattr(a, "class"))
    res = empirical_entropy(F, a.radius, a.mode, restricted=not a.unrestricted, budget=run.budget)
    return {"radius": a.radius, "log_value": math.log(res.value), **res.to_dict()}, None


def _entropy_table(run: _Run, p: str):
    rows = io.parse_csv_rows(io.read_text(run.path(p)), p)
    if any(len(r) != 2 for r in rows):
        raise io.InputError(f"{p}: entropy table rows must be 't,log_N' pairs")
    rows.sort()
    ts = np.array([r[0] for r in rows])
    vals = np.array([r[1] for r in rows])

    def entropy(t: float) -> float:
        # value at the largest tabulated scale <= t: an upper bound for non-increasing entropy
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return float(vals[i]) if i >= 0 else float(vals[0])

    return entropy


def cmd_dudley(run: _Run, a):
    P = io.wrap(SymmetricPolytope.from_dict, a.polytope, io.load_json(run.path(a.polytope)))
    ell, ell_se = gaussian_mean_norm(P, P.n, a.trials, a.seed)
    mstar, m_se = sphere_mean_width(P, a.trials, a.seed + 1)
    upper = float(np.linalg.norm(P.generators, axis=1).max())
    if a.entropy:
        entropy = _entropy_table(run, a.entropy)
        source = "table"
    else:
        def entropy(t: float) -> float:
            # K lies in the Euclidean ball of radius ``upper``
            return P.n * math.log(1 + 2 * upper / t)
        source = "volumetric"
    cutoff = a.cutoff_constant * mstar
    integral = dudley_bound(entropy, cutoff, upper)
    return {"ell_polar": ell, "ell_stderr": ell_se, "mstar": mstar, "mstar_stderr": m_se,
            "cutoff_constant": a.cutoff_constant, "cutoff": cutoff, "upper": upper,
            "entropy_source": source, "integral": integral,
            "ratio": ell / integral if integral > 0 else None}, None


CONFIG_FIELDS = {"trials", "n_range", "size_range", "alphabet_range", "m_range", "t_grid", "eps_grid",
                 "instance_budget_ms", "options"}


def cmd_verify(run: _Run, a):
    fields = dict(run.json_arg(a.config)) if a.config else {}
    unknown = set(fields) - CONFIG_FIELDS
    if unknown:
        raise io.InputError(f"{a.config}: unknown config fields {', '.join(sorted(unknown))}")
    for key in ("n_range", "size_range", "alphabet_range", "m_range", "t_grid", "eps_grid"):
        if fields.get(key) is not None:
            fields[key] = tuple(fields[key])
    if a.options:
        fields["options"] = {**fields.get("options", {}), **run.json_arg(a.options)}
    if a.trials is not None:
        fields["trials"] = a.trials
    if a.instance_budget_ms is not None:
        fields["instance_budget_ms"] = a.instance_budget_ms
    cfg = io.wrap(lambda: SuiteConfig(a.suite, seed=a.seed, **fields), a.config or "--options")
    rep = run_suite(cfg, a.threads)
    out = rep.to_dict()
    if a.stability:
        stab = seed_stability(cfg, [a.seed + i for i in range(a.stability)], a.threads)
        out["stability"] = {**stab, "constants": {str(k): v for k, v in stab["constants"].items()}}
    rows = [{"index": rec["index"], "row": j, "status": rec["status"], "lhs": r["lhs"],
             "rhs_shape": r["rhs_shape"], "ratio": r.get("ratio"), "failed": " ".join(r["failed_checks"])}
            for rec in rep.records if rec["status"] == "ok" for j, r in enumerate(rec["rows"])]
    return out, rows


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")
    common.add_argument("--out", help="write the result here instead of standard output")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--budget-ms", type=float, default=None,
                        help="time cap in milliseconds (falls back to VCE_BUDGET_MS)")

    p = _Parser(prog="vce", description="Combinatorial dimensions and metric entropy on finite instances.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("vc", cmd_vc, "scaled VC dimension of a point set")
    sp.add_argument("--input", required=True, help="points as JSON or CSV")
    sp.add_argument("--metric", help="quasi-metric as inline JSON or a file")
    sp.add_argument("--scale", type=float, help="scale t; omitted means the t -> 0 limit")
    sp.add_argument("--boolean", action="store_true", help="classical VC dimension of a 0/1 set")

    sp = add("fat", cmd_fat, "fat-shattering dimension of a function sample")
    sp.add_argument("--class", required=True, help="m x n values as CSV or JSON")
    sp.add_argument("--eps", type=float, required=True)

    sp = add("cover", cmd_cover, "covering number of a point set")
    sp.add_argument("--input", required=True)
    sp.add_argument("--gauge", required=True, help='e.g. {"kind":"lp","p":2,"normalization":"unit"}')
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--mode", choices=("exact", "bounds"), default="exact")
    sp.add_argument("--restricted", action="store_true", help="centres drawn from the set itself")

    sp = add("pack", cmd_pack, "separated subset and packing/covering bracket")
    sp.add_argument("--input", required=True)
    sp.add_argument("--gauge", required=True)
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--strategy", choices=("greedy", "exact"), default="greedy")
    sp.add_argument("--bracket", action="store_true", help="also report the packing/covering bracket")

    sp = add("extract-cubes", cmd_extract_cubes, "harvest large cubes from a separated set")
    sp.add_argument("--input", required=True)
    sp.add_argument("--metric")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--cap", type=int, default=1_000_000, help="largest cube family kept in memory")

    sp = add("extract-coords", cmd_extract_coords, "random coordinate set meeting every set")
    sp.add_argument("--sets", required=True, help='JSON {"n": .., "sets": [[..], ..]}')
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("--max-attempts", type=int, default=64)

    sp = add("refine", cmd_refine, "greedy subset separated on many coordinates")
    sp.add_argument("--input", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("-k", type=int, required=True)

    sp = add("elton", cmd_elton, "certified l1 subsystem of a normed instance")
    sp.add_argument("--instance", required=True)
    sp.add_argument("--trials", type=int, default=100_000, help="Monte Carlo trials for the Gaussian mean")
    sp.add_argument("--t-grid-size", type=int, default=32)
    sp.add_argument("--exponent", type=float, default=2.1)
    sp.add_argument("--solves-per-t", type=int, default=DEFAULT_SOLVES_PER_T,
                    help="linear programs per grid value; 0 searches exhaustively")
    sp.add_argument("--probes", type=int, default=1000)

    sp = add("minsigns", cmd_minsigns, "minimum norm over sign combinations")
    sp.add_argument("--instance", required=True)

    sp = add("entropy", cmd_entropy, "empirical L2 covering number of a function sample")
    sp.add_argument("--class", required=True)
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--mode", choices=("exact", "bounds"), default="exact")
    sp.add_argument("--unrestricted", action="store_true", help="allow centres outside the sample")

    sp = add("dudley", cmd_dudley, "entropy integral with the mean-width cutoff")
    sp.add_argument("--polytope", required=True)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--cutoff-constant", type=float, default=0.25)
    sp.add_argument("--entropy", help="CSV of 't,log_N' rows; default is the volumetric bound")

    sp = add("verify", cmd_verify, "run an inequality suite and fit its constants")
    sp.add_argument("--suite", required=True, choices=[s.replace("_", "-") for s in SUITES] + list(SUITES))
    sp.add_argument("--trials", type=int, default=None, help="instances to draw (default 20)")
    sp.add_argument("--config", help="JSON object of ranges, grids and options; flags override it")
    sp.add_argument("--instance-budget-ms", type=float, default=None)
    sp.add_argument("--options", help="suite options as inline JSON or a file")
    sp.add_argument("--stability", type=int, default=0, help="also fit over this many consecutive seeds")
    return p


def _csv_text(header: dict, rows: list | None, result: dict) -> str:
    lines = "".join(f"# {k}: {v}\n" for k, v in header.items())
    if rows is None:
        rows = [{k: (v if isinstance(v, (int, float, str, bool)) or v is None else json.dumps(io.to_jsonable(v),
                                                                                          sort_keys=True))
                 for k, v in result.items()}]
    return lines + io.dumps_csv(rows)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.monotonic()
    run = _Run(args)
    try:
        result, rows = args.fn(run, args)
    except BudgetExceeded as exc:
        print(f"vce {args.command}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (VceError, ValueError) as exc:
        print(f"vce {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    elapsed = (time.monotonic() - start) * 1000.0
    if args.format == "json":
        text = io.dumps_json({"schema": io.SCHEMA_VERSION, "command": args.command, "seed": args.seed,
                              "inputs": run.inputs, "result": result, "elapsed_ms": elapsed})
    else:
        header = {"schema": io.SCHEMA_VERSION, "command": args.command, "seed": args.seed,
                  **{f"input {k}": v for k, v in run.inputs.items()}, "elapsed_ms": elapsed}
        text = _csv_text(header, rows, result)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"vce {args.command}: cannot write {args.out} ({exc.strerror})", file=sys.stderr)
            return EXIT_DOMAIN
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
