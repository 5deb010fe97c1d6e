"""Command-line front end: ``permlat <verb> [subverb] ...``.

Exit codes: 0 success, 1 property violation (counterexample JSON written), 2 usage error,
3 missing input file, 4 malformed or invalid input, 5 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Any, Callable

from . import amalgam, encoder, generator, graphlib, jepgadget, lattice, permtypes
from . import subquotient, ultrametric

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_MISSING, EXIT_MALFORMED, EXIT_BUDGET = range(6)


class UsageError(Exception):
    pass


class Violated(Exception):
    def __init__(self, payload: Any):
        super().__init__("property violation")
        self.payload = payload


# ---------------------------------------------------------------------------
# input helpers


def _load(path: str) -> Any:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(path)
    return json.loads(p.read_text())


def _lattice(src: str) -> lattice.Lattice:
    """A lattice JSON file, or one of the built-in names (chain2, boolean, m3, ...)."""
    if not Path(src).is_file() and src in lattice.NAMED:
        return lattice.named_lattice(src)
    return lattice.Lattice.from_json(_load(src))


def _pairs(items: list[str] | None) -> list[tuple[str, str]]:
    out = []
    for it in items or []:
        if ":" not in it:
            raise UsageError(f"sqo pair {it!r} must look like E:F")
        e, f = it.split(":", 1)
        out.append((e, f))
    return out


def _descriptor(args) -> generator.LatticeLiftDescriptor | generator.ForbiddenListDescriptor:
    if getattr(args, "catalog", None):
        found = [d for d in generator.catalog_3dim() if d.name == args.catalog]
        if not found:
            raise UsageError(f"no catalog entry named {args.catalog!r}")
        return found[0]
    if getattr(args, "linear_orders", False):
        return generator.linear_order_descriptor()
    if not getattr(args, "lattice", None):
        raise UsageError("give --lattice (with --pair E:F ...), --catalog NAME or --linear-orders")
    return generator.lift_descriptor(_lattice(args.lattice), _pairs(args.pair))


def _tiling(path: str) -> jepgadget.TilingProblem:
    data = _load(path)
    try:
        return jepgadget.TilingProblem.from_json(data)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed tiling JSON: {exc}") from None


def _graph(path: str) -> graphlib.ColoredGraph:
    return graphlib.ColoredGraph.from_json(_load(path))


def _theta(spec: str | None, P: jepgadget.TilingProblem) -> jepgadget.TilingFn:
    if spec is None or spec == "checkerboard":
        return jepgadget.TilingFn.checkerboard() if spec else jepgadget.TilingFn.constant(1)
    if spec.startswith("constant:"):
        return jepgadget.TilingFn.constant(int(spec.split(":", 1)[1]))
    data = _load(spec)
    table = {(int(c[0]), int(c[1])): int(c[2]) for c in data["cells"]}
    period = tuple(data["period"]) if "period" in data else None
    return jepgadget.TilingFn.from_table(table, period)


def _lattice_dot(L: lattice.Lattice) -> str:
    lines = ["digraph L {", "  rankdir=BT;"]
    n = L.size
    for e in L.elements:
        lines.append(f'  "{e}";')
    for i in range(n):
        for j in range(n):
            if i != j and L.leq[i][j] and not any(
                    k not in (i, j) and L.leq[i][k] and L.leq[k][j] for k in range(n)):
                lines.append(f'  "{L.elements[i]}" -> "{L.elements[j]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# verbs; each returns a JSON-able payload or a ColoredGraph / Lattice


def cmd_lattice(args):
    if args.sub == "enumerate":
        return [L.to_json() for L in lattice.enumerate_lattices(args.max)]
    L = _lattice(args.input)
    if args.sub == "validate":
        forb = lattice.find_forbidden_sublattice(L)
        return {"elements": list(L.elements), "distributive": lattice.is_distributive(L),
                "forbidden_sublattice": list(forb) if forb else None,
                "meet_irreducibles": list(lattice.meet_irreducibles(L)),
                "width": lattice.max_antichain_size(L),
                "chain_cover": lattice.chain_cover(L).to_json()}
    if args.sub == "failure":
        f = ultrametric.find_amalgamation_failure(L)
        if f is not None:
            raise Violated(f.to_json())
        return {"distributive": True, "failure": None}
    if args.sub == "show":
        return L
    raise UsageError(f"unknown lattice subcommand {args.sub!r}")


def cmd_space(args):
    data = _load(args.input)
    S = ultrametric.UltraSpace.from_json(data)
    if args.sub == "validate":
        ok, v = ultrametric.validate_space(S)
        if not ok:
            raise Violated(v.to_json())
        return {"valid": True, "points": len(S)}
    if args.sub == "equiv":
        return ultrametric.to_equiv(S).to_json()
    raise UsageError(f"unknown space subcommand {args.sub!r}")


def cmd_lift(args):
    Ls = subquotient.LiftedStructure.from_json(_load(args.input))
    if args.sub == "validate":
        ok, v = subquotient.validate_lift(Ls)
        if not ok:
            idx, viol = v
            raise Violated({"sqo": idx, **viol.to_json()})
        return {"valid": True, "points": len(Ls.space), "sqos": len(Ls.sqos)}
    if args.sub == "orders":
        return [{"label": o.label, "order": list(o.order)}
                for o in subquotient.to_linear_orders(Ls)]
    raise UsageError(f"unknown lift subcommand {args.sub!r}")


def cmd_amalgamate(args):
    data = _load(args.input)
    if "factor1" in data:
        return ultrametric.canonical_amalgam(ultrametric.AmalgamProblem.from_json(data)).to_json()
    if "a1" in data:
        return amalgam.two_point_amalgam(amalgam.LiftAmalgamProblem.from_json(data)).to_json()
    raise ValueError("amalgamation problem needs base/factor1/factor2 or base/a1/a2")


def cmd_checkap(args):
    desc = _descriptor(args)
    rep = amalgam.check_AP(desc, args.n)
    if not rep.holds:
        raise Violated(rep.to_json())
    return rep.to_json()


def cmd_types(args):
    if args.sub == "closure":
        given = list(args.types) + [f for a in args.allow or [] for f in a.split(",") if f]
        if not given:
            raise UsageError("closure needs types (sign strings after --, or --allow 0,1,2)")
        S = {permtypes.named(int(t)) if t.isdigit() else permtypes.TwoType.from_signs(t)
             for t in given}
        S |= {permtypes.opposite(t) for t in S}
        C = permtypes.closure_under_majority(S)
        return {"closure": sorted(t.signs for t in C),
                "identifications": sorted(map(list, permtypes.identifications_of(C)))}
    if args.sub == "majority":
        if len(args.types) != 3:
            raise UsageError("majority needs three types (sign strings or named indices 0-3)")
        p, q, r = (permtypes.named(int(t)) if t.isdigit() else permtypes.TwoType.from_signs(t)
                   for t in args.types)
        m = permtypes.majority_solve(p, q, r)
        return {"types": [p.signs, q.signs, r.signs], "solution": m.signs}
    if args.sub == "threshold":
        return {"k": args.k, "threshold": permtypes.lemma4gen_threshold(args.k)}
    if args.sub == "pairing":
        rng = random.Random(args.seed)
        n = args.n or permtypes.lemma4gen_threshold(args.k)
        out = []
        for _ in range(args.samples):
            ps = permtypes.PermStructure.random(n, args.k, rng)
            p = permtypes.separated_pairing(ps)
            out.append({"orders": [list(o) for o in ps.orders],
                        "pairing": [list(x) for x in p] if p is not None else None})
        missing = [o for o in out if o["pairing"] is None]
        if missing:
            raise Violated(missing[0])
        return out
    raise UsageError(f"unknown types subcommand {args.sub!r}")


def cmd_encode(args):
    if args.random:
        rng = random.Random(args.seed)
        C = encoder.random_chain_structure(rng, args.points, args.height)
    else:
        if not args.input:
            raise UsageError("encode needs an input file or --random")
        C = encoder.ChainStructure.from_json(_load(args.input))
    enc = encoder.encode_chain(C)
    back = encoder.decode_chain(enc, C.order)
    if not encoder.same_chain_structure(C, back):
        raise Violated({"input": C.to_json(), "decoded": back.to_json()})
    return {"structure": C.to_json(), "encoding": enc.to_json(), "orders": len(enc.orders)}


def cmd_bound(args):
    L = _lattice(args.input)
    cover = [c.split(",") for c in args.chain] if args.chain else lattice.chain_cover(L)
    return {"elements": list(L.elements), "bound": encoder.representation_bound(L, cover)}


def cmd_gen(args):
    if args.sub == "catalog":
        return [d.to_json() for d in generator.catalog_3dim()]
    desc = _descriptor(args)
    if args.sub == "build":
        ap = generator.build_universal(desc, args.n, check_ap=not args.no_check, seed=args.seed or 0)
        return ap.to_json()
    if args.sub == "members":
        return [A.to_json() for A in generator.members(desc, args.n)]
    if args.sub == "jep":
        r = generator.check_JEP(desc, args.n, args.budget)
        payload = {"verdict": r.verdict, "pairs_checked": r.pairs_checked,
                   "counterexample": r.counterexample}
        if r.verdict == "no":
            raise Violated(payload)
        if r.verdict == "unresolved":
            raise graphlib.BudgetExceeded("JEP search budget exhausted")
        return payload
    if args.sub == "equivalences":
        ap = generator.build_universal(desc, args.n, check_ap=False, seed=args.seed or 0)
        rels = generator.definable_equivalences(ap)
        RL = generator.relation_lattice(rels)
        out = {"points": generator.size_of(ap.structure), "relations": len(rels),
               "relation_lattice": RL.to_json()}
        if isinstance(desc, generator.LatticeLiftDescriptor):
            out["matches_lattice"] = generator.lattices_isomorphic(RL, desc.lattice)
            if not out["matches_lattice"]:
                raise Violated(out)
        return out
    raise UsageError(f"unknown gen subcommand {args.sub!r}")


def cmd_graph(args):
    if args.sub == "random":
        rng = random.Random(args.seed)
        n = args.vertices
        edges = [(str(a), str(b)) for a in range(n) for b in range(a + 1, n) if rng.random() < args.p]
        cols = {str(v): rng.choice(graphlib.PALETTE[:args.colors]) for v in range(n)} if args.colors else {}
        return graphlib.graph(n, edges, cols)
    G = _graph(args.input)
    if args.sub == "show":
        return G
    if args.sub == "core":
        c = graphlib.core(G, args.budget) if args.budget is not None else graphlib.core(G)
        if isinstance(c, graphlib.Unresolved):
            raise graphlib.BudgetExceeded(c.reason)
        return c
    if args.sub == "embed":
        H = _graph(args.target)
        m = graphlib.first_induced_embedding(G, H, budget=args.budget)
        return {"embeds": m is not None, "map": m}
    if args.sub == "hom":
        H = _graph(args.target)
        m = graphlib.first_homomorphism(G, H, budget=args.budget)
        return {"exists": m is not None, "map": m}
    if args.sub == "wedge":
        return jepgadget.wedge(G)
    if args.sub == "vee":
        return jepgadget.vee(G)
    raise UsageError(f"unknown graph subcommand {args.sub!r}")


def cmd_jep(args):
    if args.sub == "necklace":
        return jepgadget.necklace(args.n)
    P = _tiling(args.tiling)
    K = jepgadget.GadgetClass(P)
    if args.sub == "compile":
        return {"problem": P.to_json(), "constraints": list(range(1, 10)),
                "palette": list(graphlib.PALETTE) + [graphlib.DUMMY]}
    if args.sub == "models":
        which = args.which or "A"
        if which == "A":
            return jepgadget.canonical_A(args.n)
        if which == "B":
            return jepgadget.canonical_B(args.n, P.T)
        if which == "A+":
            return jepgadget.canonical_A_plus(args.n)
        return jepgadget.canonical_B_plus(args.n, P.T)
    if args.sub == "verify":
        ok, v = jepgadget.verify_membership(_graph(args.graph), K)
        if not ok:
            raise Violated(v.to_json())
        return {"member": True}
    if args.sub == "embed":
        A, B = jepgadget.canonical_A(args.n), jepgadget.canonical_B(args.n, P.T)
        C = jepgadget.joint_embed(A, B, _theta(args.theta, P), K)
        ok, v = jepgadget.verify_membership(C, K)
        if not ok:
            raise Violated(v.to_json())
        return C
    if args.sub == "extract":
        tiling = jepgadget.extract_tiling(_graph(args.graph), args.n, K)
        return {"cells": [[i, j, k] for (i, j), k in sorted(tiling.items())]}
    if args.sub == "certify":
        A, B = jepgadget.canonical_A(args.n), jepgadget.canonical_B(args.n, P.T)
        r = jepgadget.certify_no_joint_embedding(A, B, K)
        return r.summary()
    if args.sub == "purify":
        pure = jepgadget.compile_pure_graph_class(K, h_limit=args.k)
        return {"palette_size": pure.palette_size,
                "antichain": [N.to_json() for N, _ in pure.antichain.values()],
                "h1": [g.to_json() for g in pure.h1], "h2": [g.to_json() for g in pure.h2]}
    if args.sub == "jhp":
        J = jepgadget.jhp_gadget(P, k=args.k)
        return {"problem": P.to_json(), "degraded": J.degraded,
                "antichain": [g.to_json() for g in J.antichain]}
    raise UsageError(f"unknown jep subcommand {args.sub!r}")


SAMPLING = {("types", "pairing"), ("graph", "random"), ("encode", "random")}


def build_parser() -> argparse.ArgumentParser:
    def flags(top: bool) -> argparse.ArgumentParser:
        # global flags work before or after the verb, so subparsers must not reset them
        d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--seed", type=int, default=d(None))
        p.add_argument("--jobs", type=int, default=d(1))
        p.add_argument("--out", default=d(None))
        p.add_argument("--format", choices=("json", "dot"), default=d("json"))
        return p

    common = flags(False)
    ap = argparse.ArgumentParser(prog="permlat", parents=[flags(True)])
    verbs = ap.add_subparsers(dest="verb", required=True)

    def verb(name: str, fn: Callable, subs: list[str] | None = None) -> argparse.ArgumentParser:
        p = verbs.add_parser(name, parents=[common])
        p.set_defaults(fn=fn)
        if subs:
            p.add_argument("sub", choices=subs)
        return p

    def desc_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--lattice")
        p.add_argument("--pair", action="append", help="sqo interval E:F, repeatable")
        p.add_argument("--catalog")
        p.add_argument("--linear-orders", action="store_true")
        p.add_argument("--n", type=int, default=4)

    p = verb("lattice", cmd_lattice, ["validate", "failure", "show", "enumerate"])
    p.add_argument("input", nargs="?")
    p.add_argument("--max", type=int, default=5)
    p = verb("space", cmd_space, ["validate", "equiv"])
    p.add_argument("input")
    p = verb("lift", cmd_lift, ["validate", "orders"])
    p.add_argument("input")
    p = verb("amalgamate", cmd_amalgamate)
    p.add_argument("input")
    p = verb("checkap", cmd_checkap)
    desc_opts(p)
    p = verb("types", cmd_types, ["closure", "majority", "threshold", "pairing"])
    p.add_argument("types", nargs="*")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--allow", action="append", help="comma-separated named type indices")
    p = verb("encode", cmd_encode)
    p.add_argument("input", nargs="?")
    p.add_argument("--random", action="store_true")
    p.add_argument("--points", type=int, default=8)
    p.add_argument("--height", type=int, default=3)
    p = verb("bound", cmd_bound)
    p.add_argument("input")
    p.add_argument("--chain", action="append", help="comma-separated chain, repeatable")
    p = verb("gen", cmd_gen, ["build", "members", "jep", "equivalences", "catalog"])
    desc_opts(p)
    p.add_argument("--no-check", action="store_true")
    p.add_argument("--budget", type=int, default=200_000)
    p = verb("graph", cmd_graph, ["show", "core", "embed", "hom", "wedge", "vee", "random"])
    p.add_argument("input", nargs="?")
    p.add_argument("target", nargs="?")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--vertices", type=int, default=6)
    p.add_argument("--p", type=float, default=0.4)
    p.add_argument("--colors", type=int, default=0)
    p = verb("jep", cmd_jep, ["compile", "models", "verify", "embed", "extract", "certify",
                              "purify", "jhp", "necklace"])
    p.add_argument("--tiling")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--which", choices=("A", "B", "A+", "B+"))
    p.add_argument("--theta", help="checkerboard, constant:K, or a JSON file with cells")
    p.add_argument("--graph")
    return ap


def _render(result: Any, fmt: str) -> str:
    if fmt == "dot":
        if isinstance(result, graphlib.ColoredGraph):
            return result.to_dot()
        if isinstance(result, lattice.Lattice):
            return _lattice_dot(result)
        raise UsageError("dot output is only available for graphs and lattices")
    if hasattr(result, "to_json"):
        result = result.to_json()
    return json.dumps(result, indent=2, sort_keys=True, default=str) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    sub = getattr(args, "sub", None)
    sampling = (args.verb, sub) in SAMPLING or (args.verb == "encode" and args.random)
    if sampling and args.seed is None:
        print("permlat: sampling commands require --seed", file=sys.stderr)
        return EXIT_USAGE
    if args.verb == "jep" and sub not in ("necklace",) and not args.tiling:
        print("permlat: jep commands need --tiling", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = args.fn(args)
        _emit(_render(result, args.format), args.out)
        return EXIT_OK
    except Violated as v:
        _emit(json.dumps({"violation": v.payload}, indent=2, sort_keys=True, default=str) + "\n",
              args.out)
        return EXIT_VIOLATION
    except UsageError as exc:
        print(f"permlat: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"permlat: no such file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except json.JSONDecodeError as exc:
        print(f"permlat: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except graphlib.BudgetExceeded as exc:
        print(f"permlat: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, KeyError, TypeError) as exc:
        print(f"permlat: invalid input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


def main() -> None:
    sys.exit(run())
