"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 guard exceeded, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from peermech.env import Environment, WeightVector, _read_json, environment_from_json, load_instance
from peermech.errors import GuardExceeded, PeerMechError
from peermech.fgraph import build_graph, components_of, find_odd_holes, format_vertex, parse_vertex

EXIT_OK, EXIT_DOMAIN, EXIT_GUARD, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- rendering -----------------------------------------------------------------------


def _floatify(obj):
    """Add a decimal rendering next to every exact rational string."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out[k] = _floatify(v)
            if isinstance(v, str):
                try:
                    out[f"{k}_float"] = float(Fraction(v))
                except (ValueError, ZeroDivisionError):
                    pass
        return out
    if isinstance(obj, list):
        return [_floatify(x) for x in obj]
    return obj


def _text(obj, indent=0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _scalar(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if v is None:
        return "-"
    return str(v)


def emit(obj, args, out) -> None:
    if getattr(args, "float", False):
        obj = _floatify(obj)
    fmt = getattr(args, "format", "json")
    if fmt == "text":
        out.write("\n".join(_text(obj)) + "\n")
    elif fmt == "csv":
        raise UsageError("csv output is only available for rank-table and simulate")
    else:
        out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- helpers -------------------------------------------------------------------------


def _instance(args):
    return load_instance(args.env)


def _env_only(args) -> Environment:
    inst = _instance(args)
    if not isinstance(inst, Environment):
        raise PeerMechError("this command needs an environment file, not a weight file")
    return inst


def _type_spaces(args):
    if getattr(args, "types", None):
        try:
            sizes = [int(x) for x in args.types.split(",")]
        except ValueError as exc:
            raise UsageError(f"--types expects comma-separated sizes, got {args.types!r}") from exc
        return [list(range(k)) for k in sizes]
    if getattr(args, "env", None):
        return [list(ts) for ts in _instance(args).type_spaces]
    raise UsageError("give --env or --types")


def _vertices(text: str, type_spaces):
    return [parse_vertex(part.strip(), type_spaces) for part in text.split(";") if part.strip()]


def _guarded(report, args, out) -> int:
    emit(report.to_json(), args, out)
    return EXIT_GUARD if report.status == "guard-exceeded" else EXIT_OK


# -- commands ------------------------------------------------------------------------


def cmd_solve(args, out):
    from peermech.solve import solve_lp

    rep = solve_lp(_instance(args), args.mode, guard=args.guard, check_unique=args.unique)
    return _guarded(rep, args, out)


def cmd_solve_det(args, out):
    from peermech.solve import solve_deterministic

    rep = solve_deterministic(_instance(args), args.mode, node_guard=args.guard, lp_threshold=args.lp_threshold)
    return _guarded(rep, args, out)


def cmd_jury(args, out):
    from peermech.mech import jury_mechanism_for, utility
    from peermech.solve import solve_jury

    env = _env_only(args)
    if args.jurors is not None:
        jurors = [int(x) for x in args.jurors.split(",") if x.strip()]
        m = jury_mechanism_for(env, jurors, args.mode)
        emit({"jurors": sorted(set(jurors)), "mode": args.mode, "objective": str(utility(env, m)), "mechanism": m.to_json()}, args, out)
        return EXIT_OK
    return _guarded(solve_jury(env, args.mode), args, out)


def cmd_ranking(args, out):
    from peermech.mech import ranking_mechanism, utility
    from peermech.env import parse_rational

    env = _env_only(args)
    m = ranking_mechanism(env, parse_rational(args.p))
    emit({"p": str(parse_rational(args.p)), "objective": str(utility(env, m)), "mechanism": m.to_json()}, args, out)
    return EXIT_OK


def cmd_rank_table(args, out):
    from peermech.mech import rank_table

    table = rank_table(_env_only(args))
    if args.format == "csv":
        out.write(table.to_csv())
        return EXIT_OK
    rows = [
        {
            "theta": list(r.theta),
            "prob": str(r.prob),
            "peer_values": [str(x) for x in r.peer_values],
            "ranks": [str(x) for x in r.ranks],
            "robust_ranks": [str(x) for x in r.robust_ranks],
            "delta": str(r.delta),
        }
        for r in table.rows
    ]
    emit({"rows": rows}, args, out)
    return EXIT_OK


def cmd_bound(args, out):
    from peermech.solve import upper_bound

    emit({"mode": args.mode, "upper_bound": str(upper_bound(_env_only(args), args.mode))}, args, out)
    return EXIT_OK


def cmd_graph(args, out):
    ts = _type_spaces(args)
    g = build_graph(ts, min_types=1)
    if args.action == "export":
        if args.format == "dot":
            out.write(g.to_dot())
        else:
            out.write(g.export_json() + "\n")
        return EXIT_OK
    if args.action == "holes":
        subset = _vertices(args.vertices, ts) if args.vertices else None
        holes = find_odd_holes(g, subset, max_len=args.max_len, first_only=args.first_only, guard=args.guard)
        emit({"count": len(holes), "holes": [[format_vertex(v) for v in h] for h in holes]}, args, out)
        return EXIT_OK
    # components
    if args.mechanism:
        from peermech.mech import load_mechanism

        subset = load_mechanism(args.mechanism, ts).stochastic_vertices()
    elif args.vertices:
        subset = _vertices(args.vertices, ts)
    else:
        raise UsageError("graph components needs --vertices or --mechanism")
    comps = components_of(g, subset)
    emit({"components": [[format_vertex(v) for v in c] for c in comps]}, args, out)
    return EXIT_OK


def cmd_extreme(args, out):
    from peermech import extremal
    from peermech.mech import MAY, load_mechanism

    ts = _type_spaces(args)
    g = build_graph(ts, min_types=1)
    if args.action == "verify":
        if not args.mechanism:
            raise UsageError("extreme verify needs --mechanism")
        m = load_mechanism(args.mechanism, ts)
        cert = extremal.is_extreme(g, m, args.mode)
        res = cert.to_json()
        if args.holes:
            res["hole_characterization"] = extremal.check_hole_characterization(g, m).to_json()
        emit(res, args, out)
        return EXIT_OK
    if args.action == "enumerate":
        pts = extremal.enumerate_extreme_points(g, args.mode or MAY, guard=args.guard)
        stochastic = [p for p in pts if not p.is_deterministic()]
        emit(
            {
                "count": len(pts),
                "stochastic": len(stochastic),
                "points": [p.to_json() for p in (stochastic if args.stochastic_only else pts)],
            },
            args,
            out,
        )
        return EXIT_OK
    if not args.hole:
        raise UsageError("extreme construct needs --hole")
    hole = _vertices(args.hole, ts)
    stable = _vertices(args.stable, ts) if args.stable else []
    m = extremal.construct_hole_mechanism(g, hole, stable)
    emit({"extreme": extremal.is_extreme(g, m).extreme, "mechanism": m.to_json()}, args, out)
    return EXIT_OK


def cmd_reduce(args, out):
    from peermech import hardness

    src = hardness.load_source_graph(args.graph)
    inst = hardness.reduce(src, args.k)
    if args.output:
        Path(args.output).write_text(json.dumps(inst.to_json(), indent=2, sort_keys=True) + "\n")
    check = hardness.verify_reduction(src, args.k) if args.verify else None
    if args.format == "text":
        line = f"k={inst.k}"
        if check is not None:
            line += f", equivalence={str(check.equivalent).lower()}"
        out.write(line + "\n")
        if check is not None:
            out.write(f"alpha={check.alpha}, reduced_optimum={check.reduced_optimum}\n")
        return EXIT_OK if check is None or check.equivalent else EXIT_DOMAIN
    res = {"k": inst.k, "k_hat": args.k, "instance": inst.to_json()}
    if check is not None:
        res["verification"] = check.to_json()
    emit(res, args, out)
    return EXIT_OK if check is None or check.equivalent else EXIT_DOMAIN


def _need_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for this stochastic command")


def cmd_gen(args, out):
    from peermech import simgen

    if args.kind == "group":
        env = simgen.gen_group_env(args.ell)
    elif args.kind == "network":
        if not args.uniform:
            _need_seed(args)
        topo = {"ring": simgen.ring, "star": simgen.star, "empty": simgen.empty_network}[args.topology]
        levels = args.levels.split(",")
        env = simgen.gen_network_env(topo(args.n), levels, args.noise, None if args.uniform else args.seed, args.observe_own)
    elif args.kind == "ci":
        if args.structure:
            structure = simgen.structure_from_json(_read_json(args.structure))
        else:
            _need_seed(args)
            size = 2 * args.n if args.replication else args.n
            structure = simgen.random_structure(size, args.seed, args.structure_kind)
        if args.replication:
            emit(simgen.jury_replication_check(structure, args.n).to_json(), args, out)
            return EXIT_OK
        env = simgen.gen_ci_env(structure, args.n)
    else:
        _need_seed(args)
        env = simgen.gen_symmetric_env(args.n, args.alphabet.split(","), args.seed)
    text = json.dumps(env.to_json(), indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_simulate(args, out):
    from peermech import simgen

    _need_seed(args)
    data = _read_json(args.config)
    data["seed"] = args.seed
    if args.output:
        data["output"] = args.output
    config = simgen.ExperimentConfig.from_json(data)
    rows = simgen.run_scaling_experiment(config, jobs=args.jobs)
    if args.format == "json":
        emit({"rows": rows}, args, out)
    else:
        text = simgen.rows_to_csv(rows)
        if args.float:
            text = _csv_with_floats(text)
        out.write(text)
    return EXIT_OK


def _csv_with_floats(text: str) -> str:
    import csv
    import io

    rows = list(csv.reader(io.StringIO(text)))
    head, body = rows[0], rows[1:]
    exact = ["ranking_utility", "jury_value", "lp_value", "upper_bound", "analytic_lb"]
    idx = [head.index(c) for c in exact]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head + [c + "_float" for c in exact])
    for r in body:
        w.writerow(r + [repr(float(Fraction(r[k]))) if r[k] else "" for k in idx])
    return buf.getvalue()


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    from peermech.errors import BB_NODE_GUARD, HOLE_SEARCH_GUARD, LP_VARIABLE_GUARD
    from peermech.mech import MODES

    p = _Parser(prog="peermech", description="Exact tools for DIC allocation mechanisms without transfers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, formats=("json", "text"), default="json"):
        sp.add_argument("--format", choices=formats, default=default)
        sp.add_argument("--float", action="store_true", help="add decimal renderings next to exact values")

    def mode(sp, default="may-withhold"):
        sp.add_argument("--mode", choices=MODES, default=default)

    sp = sub.add_parser("solve", help="optimal stochastic mechanism (exact LP)")
    sp.add_argument("--env", required=True)
    mode(sp)
    sp.add_argument("--unique", action="store_true", help="also decide whether the optimum is unique")
    sp.add_argument("--guard", type=int, default=LP_VARIABLE_GUARD)
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("solve-det", help="optimal deterministic mechanism (branch and bound)")
    sp.add_argument("--env", required=True)
    mode(sp)
    sp.add_argument("--guard", type=int, default=BB_NODE_GUARD)
    sp.add_argument("--lp-threshold", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_solve_det)

    sp = sub.add_parser("jury", help="best jury mechanism, or the one for given jurors")
    sp.add_argument("--env", required=True)
    mode(sp)
    sp.add_argument("--jurors", default=None, help="comma-separated juror indices")
    common(sp)
    sp.set_defaults(func=cmd_jury)

    sp = sub.add_parser("ranking", help="ranking-based mechanism with threshold p")
    sp.add_argument("--env", required=True)
    sp.add_argument("--p", required=True)
    common(sp)
    sp.set_defaults(func=cmd_ranking)

    sp = sub.add_parser("rank-table", help="peer values, ranks, robust ranks, informational size")
    sp.add_argument("--env", required=True)
    common(sp, ("csv", "json", "text"), "csv")
    sp.set_defaults(func=cmd_rank_table)

    sp = sub.add_parser("bound", help="highest-peer-value upper bound")
    sp.add_argument("--env", required=True)
    mode(sp)
    common(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("graph", help="feasibility graph queries")
    sp.add_argument("action", choices=("holes", "export", "components"))
    sp.add_argument("--env")
    sp.add_argument("--types", help="comma-separated type-space sizes, labels 0..k-1")
    sp.add_argument("--max-len", type=int, default=7)
    sp.add_argument("--first-only", action="store_true")
    sp.add_argument("--vertices", help="semicolon-separated vertices like '0:(0,1);1:(1,1)'")
    sp.add_argument("--mechanism", help="mechanism file; components of its fractional part")
    sp.add_argument("--guard", type=int, default=HOLE_SEARCH_GUARD)
    common(sp, ("json", "text", "dot"))
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("extreme", help="extreme-point tools")
    sp.add_argument("action", choices=("verify", "enumerate", "construct"))
    sp.add_argument("--env")
    sp.add_argument("--types")
    sp.add_argument("--mode", choices=MODES, default=None)
    sp.add_argument("--mechanism")
    sp.add_argument("--holes", action="store_true", help="also run the odd-hole characterization")
    sp.add_argument("--hole", help="semicolon-separated hole vertices")
    sp.add_argument("--stable", help="semicolon-separated stable-set vertices")
    sp.add_argument("--guard", type=int, default=None)
    sp.add_argument("--stochastic-only", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_extreme)

    sp = sub.add_parser("reduce", help="stable-set reduction to the 3-agent deterministic problem")
    sp.add_argument("--graph", required=True, help="edge-list text or JSON file")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--verify", action="store_true")
    sp.add_argument("--output", help="write the reduced weight file here")
    common(sp, ("text", "json"), "text")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("gen", help="environment generators")
    sp.add_argument("kind", choices=("group", "network", "ci", "symmetric"))
    sp.add_argument("--ell", type=int, default=1)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--topology", choices=("ring", "star", "empty"), default="ring")
    sp.add_argument("--levels", default="-1,1")
    sp.add_argument("--noise", default="1/4")
    sp.add_argument("--observe-own", action="store_true")
    sp.add_argument("--uniform", action="store_true", help="uniform value priors (network)")
    sp.add_argument("--structure", help="information-structure JSON file (ci)")
    sp.add_argument("--structure-kind", choices=("suppliers", "recipients", "general"), default="suppliers")
    sp.add_argument("--replication", action="store_true", help="run the jury replication check (ci)")
    sp.add_argument("--alphabet", default="0,1")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--output")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("simulate", help="scaling experiment from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--output")
    common(sp, ("csv", "json"), "csv")
    sp.set_defaults(func=cmd_simulate)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except GuardExceeded as exc:
        err.write(f"guard exceeded: {exc}\n")
        return EXIT_GUARD
    except PeerMechError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except BrokenPipeError:
        return EXIT_OK
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
