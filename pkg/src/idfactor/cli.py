"""Command-line surface: decisions, certificates, recovery, census, experiments.

Exit codes: 0 = evaluated (regardless of verdict), 2 = input error,
3 = capacity guard.  All randomness is seeded via --seed; the default seed
is printed with every report that uses it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import (
    certificate_from_dict,
    check_ar,
    check_bb,
    check_extended_m,
    check_m_identifiable,
    unsolved_after,
)
from .enumeration import (
    EnumConvention,
    census_totals,
    classify_census,
    enumerate_graphs,
    run_random_experiment,
)
from .errors import CapacityError, GraphInputError
from .graph import (
    FactorGraph,
    canonical_form,
    find_zuta_ordering,
    is_full_zuta,
    min_children_precheck,
)
from .recovery import (
    CovarianceMatrix,
    graph_from_loadings,
    read_loadings_csv,
    read_sigma_csv,
    recover,
    write_loadings_csv,
)

DEFAULT_SEED = 2024

CRITERIA = ("zuta", "full_zuta", "ar", "bb", "m", "extm")


def _default_jobs() -> int:
    env = os.environ.get("ID_FACTOR_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _load_graph(path: str) -> FactorGraph:
    text = Path(path).read_text()
    if path.endswith(".json") or text.lstrip().startswith("{"):
        return FactorGraph.from_json(text)
    return FactorGraph.from_compact(text)


def _emit(data, out: str | None, fmt: str = "json") -> None:
    if fmt == "json":
        payload = json.dumps(data, indent=2) + "\n"
    else:
        payload = data if isinstance(data, str) else json.dumps(data, indent=2) + "\n"
    if out:
        Path(out).write_text(payload)
    else:
        sys.stdout.write(payload)


def _verdict_label(name: str, holds: bool, precheck_ok: bool) -> str:
    if holds:
        return "certified"
    if name in ("zuta", "full_zuta"):
        return "false"
    if not precheck_ok:
        return "not-identifiable"
    return "not-certified"


def cmd_check(args) -> int:
    graph = _load_graph(args.graph)
    wanted = CRITERIA if args.criterion == "all" else (args.criterion,)
    precheck_ok = min_children_precheck(graph)
    verdicts: dict[str, bool] = {}
    labels: dict[str, str] = {}
    for name in wanted:
        if name == "zuta":
            holds = find_zuta_ordering(graph) is not None
        elif name == "full_zuta":
            holds = is_full_zuta(graph)
        elif name == "ar":
            holds = check_ar(graph)
        elif name == "bb":
            holds = check_bb(graph)
        elif name == "m":
            holds, _ = check_m_identifiable(graph, args.k)
        else:
            holds, _ = check_extended_m(graph, args.k, args.l)
        verdicts[name] = holds
        labels[name] = _verdict_label(name, holds, precheck_ok)
    report = dict(verdicts)
    report["labels"] = labels
    _emit(report, args.out)
    return 0


def cmd_certify(args) -> int:
    graph = _load_graph(args.graph)
    ok, certs = check_extended_m(graph, args.k, args.l)
    unsolved = sorted(unsolved_after(graph, certs))
    report = {
        "extended_m": ok,
        "solved": [h for h in graph.latent if h not in set(unsolved)],
        "unsolved": unsolved,
        "certificates": [c.to_dict() for c in certs],
    }
    _emit(report, args.out)
    return 0


def cmd_recover(args) -> int:
    graph = _load_graph(args.graph)
    sigma = read_sigma_csv(Path(args.sigma).read_text())
    if tuple(sigma.observed) != graph.observed:
        if set(sigma.observed) != set(graph.observed):
            raise GraphInputError("covariance nodes do not match the graph")
        order = [sigma.observed.index(v) for v in graph.observed]
        vals = sigma.values[np.ix_(order, order)]
        sigma = CovarianceMatrix(observed=graph.observed, values=vals)
    if args.certs:
        data = json.loads(Path(args.certs).read_text())
        certs = [certificate_from_dict(c) for c in data["certificates"]]
    else:
        _, certs = check_extended_m(graph, args.k, args.l)
    result = recover(sigma, graph, certs, fit_seed=args.seed)
    lam_csv = write_loadings_csv(
        result.lambda_hat, list(graph.latent), list(graph.observed)
    )
    if args.out:
        Path(args.out).write_text(lam_csv)
    report = {
        "column_status": result.column_status,
        "residual": result.residual,
        "omega_hat": None
        if result.omega_hat is None
        else [float(x) for x in result.omega_hat],
        "errors": result.errors,
        "seed": args.seed,
    }
    if not args.out:
        report["lambda_csv"] = lam_csv
    _emit(report, None if args.out is None else args.out + ".report.json")
    return 0


def _census_csv(rows, convention) -> str:
    import io

    buf = io.StringIO()
    buf.write("# " + json.dumps(convention.describe()) + "\n")
    has_oracle = any(r.gen_sign_id is not None for r in rows)
    cols = ["edge_count", "total", "zuta", "ar", "m", "ext_m", "ext_m_zuta"]
    if has_oracle:
        cols.append("gen_sign_id")
    buf.write(",".join(cols) + "\n")
    for r in rows + [census_totals(rows)]:
        d = r.as_dict()
        label = "total" if r.edge_count < 0 else str(r.edge_count)
        buf.write(",".join([label] + [str(d.get(c, "")) for c in cols[1:]]) + "\n")
    return buf.getvalue()


def cmd_enumerate(args) -> int:
    convention = EnumConvention(
        max_observed=args.max_observed,
        max_latent=args.max_latent,
        exact_sizes=args.exact_sizes,
        allow_childless_latent=args.allow_childless_latent,
        allow_isolated_observed=args.allow_isolated_observed,
    )
    if args.stream:
        out = open(args.out, "w") if args.out else sys.stdout
        try:
            for i, graph in enumerate(enumerate_graphs(convention)):
                from .criteria import decide_extended_m, decide_m_identifiable

                zuta = find_zuta_ordering(graph) is not None
                pre = min_children_precheck(graph)
                record = {
                    "id": i,
                    "canonical": canonical_form(graph).key(),
                    "observed": list(graph.observed),
                    "latent": list(graph.latent),
                    "edges": [[h, v] for h, v in graph.edges()],
                    "edge_count": graph.edge_count,
                    "zuta": zuta,
                    "ar": bool(zuta and pre and check_ar(graph)),
                    "m": bool(zuta and pre and decide_m_identifiable(graph, args.k)),
                    "ext_m": bool(pre and decide_extended_m(graph, args.k, args.l)),
                }
                out.write(json.dumps(record) + "\n")
        finally:
            if args.out:
                out.close()
        return 0
    oracle = None
    if args.oracle:
        oracle = {}
        with open(args.oracle) as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                oracle[rec["canonical"]] = rec["verdict"] == "identifiable"
    rows = classify_census(convention, args.k, args.l, oracle_verdicts=oracle, jobs=args.jobs)
    if args.format == "csv":
        _emit(_census_csv(rows, convention), args.out, fmt="csv")
    else:
        report = {
            "convention": convention.describe(),
            "rows": [r.as_dict() for r in rows],
            "totals": census_totals(rows).as_dict(),
        }
        _emit(report, args.out)
    return 0


def cmd_random_exp(args) -> int:
    report = run_random_experiment(
        p=args.p,
        m=args.m,
        edge_probs=args.edge_probs,
        samples=args.samples,
        k=args.k if args.k is not None else 4,
        max_children=args.max_children,
        seed=args.seed,
        jobs=args.jobs,
    )
    data = report.as_dict()
    if args.format == "csv":
        lines = ["edge_prob,ext_m_count,percentage"]
        for row in data["rows"]:
            lines.append(
                f"{row['edge_prob']},{row['ext_m_count']},{row['percentage']:.1f}"
            )
        _emit("\n".join(lines) + "\n", args.out, fmt="csv")
    else:
        _emit(data, args.out)
    return 0


def cmd_threshold_sweep(args) -> int:
    values, latent, observed = read_loadings_csv(Path(args.loadings).read_text())
    grid = args.grid or [round(0.05 + 0.01 * i, 2) for i in range(46)]
    results = []
    for thr in grid:
        graph = graph_from_loadings(
            values, thr, observed=observed, latent=latent, mode=args.mode
        )
        ok, _ = check_extended_m(graph, args.k, args.l)
        zuta = find_zuta_ordering(graph) is not None
        results.append(
            {
                "threshold": thr,
                "ext_m": ok,
                "zuta": zuta,
                "edge_count": graph.edge_count,
            }
        )
    intervals = []
    start = None
    for r in results + [{"ext_m": False, "threshold": None}]:
        if r["ext_m"] and start is None:
            start = r["threshold"]
            end = r["threshold"]
        elif r["ext_m"]:
            end = r["threshold"]
        elif start is not None:
            intervals.append([start, end])
            start = None
    _emit({"grid": results, "identifiable_intervals": intervals}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idfactor",
        description="Sign-identifiability of sparse factor analysis graphs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_graph=True):
        if needs_graph:
            p.add_argument("--graph", required=True, help="graph file (JSON or compact text)")
        p.add_argument("--k", type=int, default=None, help="matching-criterion size bound (default |H|)")
        p.add_argument("--l", type=int, default=None, help="local-BB size bound (default |V|)")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("check", help="evaluate identifiability criteria")
    common(p)
    p.add_argument("--criterion", choices=("all",) + CRITERIA, default="all")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("certify", help="emit an ordered certificate list")
    common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("recover", help="recover loadings from a covariance CSV")
    common(p)
    p.add_argument("--sigma", required=True, help="covariance CSV")
    p.add_argument("--certs", default=None, help="certificate JSON from `certify`")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("enumerate", help="unlabeled census with classification")
    common(p, needs_graph=False)
    p.add_argument("--max-observed", type=int, required=True)
    p.add_argument("--max-latent", type=int, required=True)
    p.add_argument("--exact-sizes", action="store_true")
    p.add_argument("--allow-childless-latent", action="store_true")
    p.add_argument("--allow-isolated-observed", action="store_true")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--stream", action="store_true", help="emit one JSON line per class")
    p.add_argument("--oracle", default=None, help="JSONL oracle verdicts to join (by canonical key)")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("random-exp", help="random-graph extended-M experiment")
    common(p, needs_graph=False)
    p.add_argument("--p", type=int, default=25, help="observed nodes")
    p.add_argument("--m", type=int, default=10, help="latent nodes")
    p.add_argument("--edge-probs", type=float, nargs="+",
                   default=[0.2, 0.25, 0.3, 0.35, 0.4, 0.45])
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--max-children", type=int, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_random_exp)

    p = sub.add_parser("threshold-sweep", help="identifiability across loading thresholds")
    common(p, needs_graph=False)
    p.add_argument("--loadings", required=True, help="loadings CSV")
    p.add_argument("--grid", type=float, nargs="+", default=None,
                   help="thresholds (default 0.05..0.50 step 0.01)")
    p.add_argument("--mode", choices=("magnitude", "signed"), default="magnitude",
                   help="compare |loading| (default) or the signed loading to the cutoff")
    p.set_defaults(func=cmd_threshold_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "k", None) is not None and args.k < 1:
            raise GraphInputError("k must be at least 1")
        if getattr(args, "l", None) is not None and args.l < 4:
            raise GraphInputError("l must be at least 4")
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity guard: {exc}", file=sys.stderr)
        return 3
    except (GraphInputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
