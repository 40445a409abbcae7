"""Command line entry point.

Subcommands wrap one library operation each; inputs and outputs are the
JSON documents defined by the owning modules. Exit codes: 2 for unreadable
or malformed inputs, 3 for mesh validation failures, 4 for compilation
errors, 5 for verification failures; 0 means every requested check passed.
All commands are deterministic given their flags and seed, and identical
invocations write byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import docio, networks
from .errors import (CompileError, DocumentError, MeshError, ReluFemError,
                     VerifyError)
from .compiler import compile_compact_support, compile_weak_representation
from .mesh import PolytopeMesh, freudenthal_mesh, validate_mesh
from .pwl import PiecewiseLinear
from .tensorfe import TensorFE, compile_tnn
from .verify import (check_counts, check_weak_representation,
                     convergence_experiment)

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_COMPILE = 4
EXIT_VERIFY = 5

TARGETS = {
    "sinpi": lambda x: float(np.prod(np.sin(np.pi * np.asarray(x)))),
    "quadratic": lambda x: float(np.sum(np.asarray(x) ** 2)),
    "affine": lambda x: float(1.0 + np.sum(np.asarray(x) * 0.75)),
    "exp": lambda x: float(math.exp(np.sum(np.asarray(x)) / 2.0)),
}


def _default_threads() -> int:
    env = os.environ.get("RELUFEM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="relufem",
        description="Compile finite element functions into exact-size ReLU "
                    "networks and verify them numerically.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, mesh=True, function=True, epsilon=True, output=False):
        if mesh:
            p.add_argument("--mesh", required=True, help="mesh JSON file")
        if function:
            p.add_argument("--function", required=True,
                           help="function JSON file")
        if epsilon:
            p.add_argument("--epsilon", type=float, required=True)
        if output:
            p.add_argument("--output", required=True, help="output file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=200)
        p.add_argument("--threads", type=int, default=_default_threads())

    p = sub.add_parser("build", help="validate, compile, self-check, write")
    add_common(p, output=True)
    p.add_argument("--output-bias", action="store_true",
                   help="fold the -R constant into an output bias")
    p.add_argument("--compact-support", action="store_true",
                   help="build the compactly supported variant")

    p = sub.add_parser("verify", help="check a network file against a function")
    add_common(p)
    p.add_argument("--network", required=True)
    p.add_argument("--compact-support", action="store_true")

    p = sub.add_parser("counts", help="check layer sizes against mesh counts")
    p.add_argument("--mesh", required=True)
    p.add_argument("--network", required=True)

    p = sub.add_parser("freudenthal", help="write a standard simplicial mesh")
    p.add_argument("--n", type=int, required=True, help="dimension")
    p.add_argument("--N", type=int, required=True, help="grid resolution")
    p.add_argument("--output", required=True)

    p = sub.add_parser("convergence", help="mesh refinement error study")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--Ns", default="2,4,8,16",
                   help="comma separated resolutions")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--target", choices=sorted(TARGETS), default="sinpi")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="CSV output path")

    p = sub.add_parser("tnn-build", help="compile a tensor FE function")
    p.add_argument("--function", required=True, help="tensor FE JSON file")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--whole-space-rank", action="store_true",
                   help="pad the rank up to the matricization bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("tnn-verify", help="check a tensor network file")
    p.add_argument("--function", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="evaluate a network file on points")
    p.add_argument("--network", required=True)
    p.add_argument("--points", required=True, help="JSON points file")

    return ap


def _load_doc(path) -> dict:
    try:
        return docio.load(path)
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}") from exc


def _load_mesh(path) -> PolytopeMesh:
    return PolytopeMesh.from_doc(_load_doc(path))


def cmd_build(args) -> int:
    mesh = _load_mesh(args.mesh)
    v = PiecewiseLinear.from_doc(_load_doc(args.function), mesh)
    report = validate_mesh(mesh, samples=max(args.samples * 100, 10_000),
                           seed=args.seed)
    if not report.ok:
        for issue in report.issues:
            print(f"validation: {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.compact_support:
        if args.output_bias:
            raise CompileError(
                "--output-bias is not available with --compact-support "
                "(the constant row is replaced by the hull bump)")
        net = compile_compact_support(mesh, v, args.epsilon,
                                      threads=args.threads)
    else:
        net = compile_weak_representation(mesh, v, args.epsilon,
                                          use_output_bias=args.output_bias,
                                          threads=args.threads)
    rep = check_weak_representation(net, v, mesh, args.epsilon,
                                    samples_per_cell=args.samples,
                                    seed=args.seed,
                                    compact=args.compact_support)
    counts = check_counts(mesh, net)
    networks.save(net, args.output)
    hi, hb, nt = mesh.counts()
    print(f"h1={net.h1} h2={net.h2} Hi={hi} Hb={hb} NT={nt}")
    if not rep.passed or not counts.passed:
        sys.stderr.write(rep.as_text())
        sys.stderr.write(counts.as_text())
        return EXIT_VERIFY
    return 0


def cmd_verify(args) -> int:
    mesh = _load_mesh(args.mesh)
    v = PiecewiseLinear.from_doc(_load_doc(args.function), mesh)
    net = networks.ReluNet2.from_doc(_load_doc(args.network))
    rep = check_weak_representation(net, v, mesh, args.epsilon,
                                    samples_per_cell=args.samples,
                                    seed=args.seed,
                                    compact=args.compact_support)
    sys.stdout.write(rep.as_text())
    return 0 if rep.passed else EXIT_VERIFY


def cmd_counts(args) -> int:
    mesh = _load_mesh(args.mesh)
    net = networks.ReluNet2.from_doc(_load_doc(args.network))
    res = check_counts(mesh, net)
    sys.stdout.write(res.as_text())
    return 0 if res.passed else EXIT_VERIFY


def cmd_freudenthal(args) -> int:
    mesh = freudenthal_mesh(args.n, args.N)
    mesh.save(args.output)
    hi, hb, nt = mesh.counts()
    print(f"cells={nt} Hi={hi} Hb={hb}")
    return 0


def cmd_convergence(args) -> int:
    Ns = [int(tok) for tok in args.Ns.split(",") if tok.strip()]
    table = convergence_experiment(TARGETS[args.target], args.p, Ns, args.n,
                                   samples=args.samples, seed=args.seed)
    sys.stdout.write(table.as_text())
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(table.to_csv())
    return 0


def cmd_tnn_build(args) -> int:
    u = TensorFE.from_doc(_load_doc(args.function))
    net = compile_tnn(u, target_tol=args.tol, seed=args.seed,
                      whole_space_rank=args.whole_space_rank)
    networks.save(net, args.output)
    widths = "x".join(str(w) for w in net.widths)
    print(f"rank={net.rank} widths={widths}")
    return 0


def cmd_tnn_verify(args) -> int:
    u = TensorFE.from_doc(_load_doc(args.function))
    net = networks.TensorNet.from_doc(_load_doc(args.network))
    rng = np.random.default_rng(args.seed)
    los = [g[0] for g in u.mesh.grids]
    his = [g[-1] for g in u.mesh.grids]
    X = rng.uniform(los, his, size=(args.samples, u.mesh.n))
    nodes = np.array(np.meshgrid(*u.mesh.grids, indexing="ij"))
    nodes = nodes.reshape(u.mesh.n, -1).T
    X = np.vstack([nodes, X])
    dev = float(np.max(np.abs(net(X) - u(X))))
    tol = 1e-9 * (1.0 + float(np.max(np.abs(u.coefficients))))
    print(f"max_deviation={dev!r}")
    print(f"tolerance={tol!r}")
    print(f"passed={dev <= tol}")
    return 0 if dev <= tol else EXIT_VERIFY


def cmd_eval(args) -> int:
    net = networks.load(args.network)
    doc = _load_doc(args.points)
    X = docio.as_float_array(docio.get(doc, "points"), "points")
    X = np.atleast_2d(X)
    for val in net(X):
        print(repr(float(val)))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "build": cmd_build,
        "verify": cmd_verify,
        "counts": cmd_counts,
        "freudenthal": cmd_freudenthal,
        "convergence": cmd_convergence,
        "tnn-build": cmd_tnn_build,
        "tnn-verify": cmd_tnn_verify,
        "eval": cmd_eval,
    }
    try:
        return handlers[args.command](args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CompileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    except VerifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ReluFemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
