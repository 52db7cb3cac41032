"""Batch command line front end.

Subcommands: validate, homology, free, minimal-model, check-formality,
enumerate, alt-check.  Exit codes: 0 success, 1 validation or semantic
failure, 2 malformed input.  Diagnostics go to stderr; results go to
stdout or to --out.  The environment variable OPERAD_FORGE_FIXTURES
names a directory in which input files are looked up when they are not
found as given.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction

from . import document as doc_mod
from .chain import homology_dims
from .document import DocumentError
from .free import free_modular_operad, free_operad
from .minimal import minimal_model
from .operad import ModularOperad, validate
from .sigma import ModularSigmaModule, SigmaModule, validate_action
from .trees import enumerate_stable_graphs, enumerate_trees
from .weight import formality_check

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MALFORMED = 2


class SystemExit2(Exception):
    """Semantic misuse of a command (mapped to exit code 1)."""


def _resolve_input(path):
    if os.path.exists(path):
        return path
    fixtures = os.environ.get("OPERAD_FORGE_FIXTURES")
    if fixtures:
        candidate = os.path.join(fixtures, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load(path):
    return doc_mod.load(_resolve_input(path))


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    obj, meta = _load(args.file)
    if isinstance(obj, (SigmaModule, ModularSigmaModule)):
        report = validate_action(obj)
    else:
        report = validate(obj)
    if report:
        _emit("\n".join(report) + "\n", args.out)
        return EXIT_FAILURE
    _emit("ok\n", args.out)
    return EXIT_OK


def cmd_homology(args):
    obj, meta = _load(args.file)
    if isinstance(obj, (SigmaModule, ModularSigmaModule)):
        keys = obj.keys()
        component = obj.component
    else:
        keys = (obj.indices if isinstance(obj, ModularOperad)
                else obj.arities)
        component = obj.component
    lines = ["component\tdegree\tdim"]
    for key in keys:
        comp = component(key)
        if comp.is_zero():
            continue
        hd = homology_dims(comp)
        if not hd:
            lines.append(f"{doc_mod._key_to_str(key)}\t-\t0")
        for d in sorted(hd):
            lines.append(f"{doc_mod._key_to_str(key)}\t{d}\t{hd[d]}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_free(args):
    obj, meta = _load(args.file)
    if isinstance(obj, ModularSigmaModule):
        if args.max_dim is None:
            raise SystemExit2("--max-dim is required for modular generators")
        op = free_modular_operad(obj, args.max_dim)
    elif isinstance(obj, SigmaModule):
        if args.max_arity is None:
            raise SystemExit2("--max-arity is required for operad generators")
        op = free_operad(obj, args.max_arity)
    else:
        raise SystemExit2("free construction expects a sigma-module document")
    out_doc = doc_mod.to_document(op, name=f"free({meta.get('name', '')})",
                                  seed=meta.get("seed", 0))
    _emit(doc_mod.dumps(out_doc), args.out)
    return EXIT_OK


def cmd_minimal_model(args):
    obj, meta = _load(args.file)
    if isinstance(obj, (SigmaModule, ModularSigmaModule)):
        raise SystemExit2("minimal-model expects an operad document")
    mm = minimal_model(obj, args.max, seed=args.seed)
    tower_doc = []
    for rec in mm.tower:
        entry = {"level": rec.level, "components": {}}
        for key, dims in rec.generator_dims.items():
            entry["components"][doc_mod._key_to_str(key)] = {
                "dims": {str(d): n for d, n in sorted(dims.items())},
                "attachment": {
                    str(d): doc_mod.matrix_to_lists(m)
                    for d, m in sorted(rec.attachments.get(key, {}).items())},
            }
        tower_doc.append(entry)
    out_doc = doc_mod.to_document(
        mm.operad, name=f"minimal-model({meta.get('name', '')})",
        seed=args.seed, tower=tower_doc)
    _emit(doc_mod.dumps(out_doc), args.out)
    return EXIT_OK


def cmd_check_formality(args):
    obj, meta = _load(args.file)
    if isinstance(obj, (SigmaModule, ModularSigmaModule)):
        raise SystemExit2("check-formality expects an operad document")
    alpha = Fraction(args.alpha)
    witness = formality_check(obj, up_to=args.max, alpha=alpha,
                              seed=args.seed)
    if witness is None:
        _emit("inconclusive\n", args.out)
        return EXIT_OK
    out_doc = doc_mod.witness_to_document(
        witness, alpha, name=meta.get("name", ""), seed=args.seed)
    _emit(doc_mod.dumps(out_doc), args.out)
    return EXIT_OK


def _tree_to_text(tree):
    if tree.is_leaf:
        return str(tree.label)
    return "(" + " ".join(_tree_to_text(c) for c in tree.children) + ")"


def cmd_enumerate(args):
    if args.trees is not None:
        trees = enumerate_trees(args.trees)
        if args.json:
            import json
            payload = [{"leaves": args.trees,
                        "vertices": t.vertex_valences(),
                        "tree": _tree_to_text(t)} for t in trees]
            _emit(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                  args.out)
        else:
            lines = [f"reduced trees with {args.trees} leaves: {len(trees)}"]
            lines.extend(_tree_to_text(t) for t in trees)
            _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK
    g, l = args.stable_graphs
    graphs = enumerate_stable_graphs(g, l)
    if args.json:
        import json
        payload = []
        for gr in graphs:
            from .trees import graph_automorphisms
            payload.append({"genera": list(gr.genera),
                            "legs": list(gr.legs),
                            "edges": [list(e) for e in gr.edges],
                            "automorphisms": len(graph_automorphisms(gr))})
        _emit(json.dumps(payload, indent=1, sort_keys=True) + "\n", args.out)
    else:
        lines = [f"stable graphs of genus {g} with {l} legs: {len(graphs)}"]
        for gr in graphs:
            from .trees import graph_automorphisms
            lines.append(f"genera={gr.genera} legs={gr.legs} "
                         f"edges={gr.edges} |Aut|={len(graph_automorphisms(gr))}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_alt_check(args):
    from .cubical import (CubicChain, alt, boundary, interval_power,
                          sigma_tau_r_i, compose_maps, perm_map, delta_map)
    from .sigma import all_permutations
    rng = random.Random(args.seed)
    failures = []
    space = interval_power(args.dim)
    cubes = [c for c in space.cubes(args.dim)
             if not space.is_degenerate(c)]
    for trial in range(args.trials):
        coeffs = {rng.choice(cubes): Fraction(rng.randint(-3, 3))
                  for _ in range(3)}
        chain = CubicChain(space, args.dim, coeffs)
        if boundary(alt(chain)) != alt(boundary(chain)):
            failures.append(f"trial {trial}: d(alt) != alt(d)")
    n = min(args.dim + 1, 4)
    for tau in all_permutations(n - 1):
        for r in range(1, n + 1):
            for i in range(1, n + 1):
                sigma = sigma_tau_r_i(tau, r, i)
                for eps in (0, 1):
                    lhs = compose_maps(perm_map(sigma), delta_map(n, i, eps))
                    rhs = compose_maps(delta_map(n, r, eps), perm_map(tau))
                    if lhs != rhs:
                        failures.append(
                            f"face identity fails at n={n}, tau={tau.images},"
                            f" r={r}, i={i}")
    if failures:
        _emit("\n".join(failures) + "\n", args.out)
        return EXIT_FAILURE
    _emit(f"alt-check passed: dim={args.dim} trials={args.trials} "
          f"seed={args.seed}\n", args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="operad-forge",
        description="computer algebra for dg operads and modular operads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the axioms of a document")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("homology", help="per-component homology dimensions")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("free", help="free operad on a sigma-module")
    p.add_argument("file")
    p.add_argument("--max-arity", type=int)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_free)

    p = sub.add_parser("minimal-model", help="inductive minimal model")
    p.add_argument("file")
    p.add_argument("--max", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_minimal_model)

    p = sub.add_parser("check-formality",
                       help="search for a formality witness")
    p.add_argument("file")
    p.add_argument("--alpha", default="2")
    p.add_argument("--max", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_formality)

    p = sub.add_parser("enumerate", help="trees or stable graphs")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--trees", type=int, metavar="N")
    group.add_argument("--stable-graphs", type=int, nargs=2,
                       metavar=("G", "L"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("alt-check",
                       help="alternating-operator identities on products")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_alt_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except FileNotFoundError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except SystemExit2 as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
