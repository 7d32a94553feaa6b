"""Command-line front end: ``eulerlat build|sample|count|mix|analyze|reduce``.

Every command prints one JSON document on stdout with a ``manifest`` block.
Exit status is 0 on success, 1 on domain errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import __version__
from .errors import EulerLatError, ParseError, ValidationError

BLOCK = 25  # replicas per independent random stream in `mix`


@dataclass
class RunManifest:
    command: str
    argv: list
    seed: int
    graph_hash: str | None
    version: str = __version__
    wall_clock: float = 0.0
    outputs: list = field(default_factory=list)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    return x


# -- input ---------------------------------------------------------------------------------


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _unwrap(data):
    # the output of `build` nests the graph under "graph"
    if isinstance(data, dict) and isinstance(data.get("graph"), dict) and "kind" not in data:
        return data["graph"]
    return data


def load_graph(path: str):
    """A :class:`LatticeGraph`, or a :class:`DrawnGraph` for drawing files."""
    from .lattice import graph_from_spec
    from .reduction import DrawnGraph

    data = _unwrap(_read_json(path))
    if isinstance(data, dict) and (data.get("kind") == "drawing" or "crossings" in data):
        return DrawnGraph.from_dict(data)
    g = graph_from_spec(data)
    if "orientation" in data:
        load_orientation(g, data["orientation"])
    return g


def load_orientation(g, raw):
    from .orientation import Orientation

    if not isinstance(raw, list) or len(raw) != g.n_edges:
        raise ValidationError(f"orientation: expected a list of {g.n_edges} bits")
    for pos, b in enumerate(raw):
        if b not in (0, 1):
            raise ValidationError(f"orientation[{pos}]: {b!r} is not 0 or 1")
    o = Orientation.from_list(g, raw)
    if not o.is_eulerian():
        raise ValidationError("orientation: not Eulerian")
    return o


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValidationError(f"EO_SEED={env!r} is not an integer") from None


# -- commands --------------------------------------------------------------------------------


def cmd_build(args, seed):
    from .lattice import graph_from_spec

    spec = {"kind": args.kind}
    if args.k is not None:
        spec["k"] = args.k
    if args.n is not None:
        spec["n"] = args.n
    if args.side is not None:
        spec["side"] = args.side
    if args.faces is not None:
        spec["faces"] = _read_json(args.faces)
    g = graph_from_spec(spec)
    return g, {"graph": g.to_dict(), "n_vertices": len(g.vertices), "n_edges": g.n_edges, "n_faces": g.n_faces}


def cmd_sample(args, seed):
    from .chains import RngStream, mixing_budget, run_chain, SOLID_KINDS
    from .errors import NonSolidWarning
    from .orientation import extremal_orientation

    g = load_graph(args.graph)
    data = _unwrap(_read_json(args.graph))
    start = load_orientation(g, data["orientation"]) if "orientation" in data else extremal_orientation(g, "min")
    steps = args.steps if args.steps is not None else mixing_budget(g.n_faces, args.eps, args.chain, args.c)
    notes = []
    if g.kind not in SOLID_KINDS:
        notes.append(NonSolidWarning.__doc__)
    stats = {}
    out = run_chain(start, args.chain, steps, RngStream(seed), stats)
    return g, {"orientation": out.to_list(), "steps": steps, "stats": stats, "warnings": notes}


def cmd_count(args, seed):
    from .chains import RngStream
    from .counting import count_approx_fpras, count_exact_bruteforce, count_exact_lattice

    g = load_graph(args.graph)
    if args.method == "exact":
        res = count_exact_lattice(g, cap=args.cap)
    elif args.method == "brute":
        res = count_exact_bruteforce(g, cap_edges=args.cap_edges)
    else:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = count_approx_fpras(g, args.eps, args.delta, RngStream(seed), kind=args.chain, c=args.c, stop_at=args.stop_at)
        res.stats["warnings"] = [str(w.message) for w in caught]
    return g, res.to_dict()


def _mix_block(payload):
    graph_dict, metric, chain, n, max_steps, seed, block = payload
    from .chains import RngStream
    from .coupling import coalescence_experiment, escape_experiment
    from .lattice import graph_from_dict

    g = graph_from_dict(graph_dict)
    rng = RngStream(seed, block)
    fn = coalescence_experiment if metric == "coalescence" else escape_experiment
    return fn(g, n, max_steps, rng, kind=chain).times


def cmd_mix(args, seed):
    from .coupling import CoalescenceStats

    g = load_graph(args.graph)
    if args.metric == "tv":
        from .analysis import transition_matrix, tv_mixing_time

        m = transition_matrix(g, args.chain, cap=args.cap)
        return g, {"metric": "tv", "states": m.size, "eps": args.eps, "tau": tv_mixing_time(m, args.eps)}
    blocks = []
    for b, lo in enumerate(range(0, args.replicas, BLOCK)):
        n = min(BLOCK, args.replicas - lo)
        blocks.append((g.to_dict(), args.metric, args.chain, n, args.max_steps, seed, b))
    if args.jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            parts = list(pool.map(_mix_block, blocks))
    else:
        parts = [_mix_block(p) for p in blocks]
    times = [t for part in parts for t in part]
    st = CoalescenceStats.from_times(times, args.max_steps)
    outputs = []
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["replica", "coalesce_step", "censored"])
            w.writeheader()
            w.writerows(st.rows())
        outputs.append(args.csv)
    body = {
        "metric": args.metric,
        "chain": args.chain,
        "replicas": args.replicas,
        "max_steps": args.max_steps,
        "censored": st.censored,
        "mean": st.mean,
        "median": st.median,
        "quantiles": st.quantiles,
    }
    return g, body, outputs


def cmd_analyze(args, seed):
    from . import analysis

    if args.what == "census":
        if args.n is not None:
            rep = analysis.hn_cut_census(args.n)
        elif args.k is not None:
            rep = analysis.cut_census(args.k)
        else:
            raise ValidationError("census needs --k or --n")
        return None, {"what": "census", "k": rep.k, "S": str(rep.S_size), "boundary": str(rep.boundary_size),
                      "ratio": str(rep.ratio), "bound": rep.bound}
    if args.graph is None:
        raise ValidationError(f"{args.what} needs --graph")
    g = load_graph(args.graph)
    if args.what == "cut":
        m = analysis.transition_matrix(g, args.chain, cap=args.cap)
        rep = analysis.conductance_cut(g, m)
        return g, {"what": "cut", "k": rep.k, "S": str(rep.S_size), "boundary": str(rep.boundary_size),
                   "omega": str(rep.omega_size),
                   "ratio": str(rep.ratio), "conductance": str(rep.conductance), "checks": rep.checks}
    if args.what == "congestion":
        rep = analysis.congestion_constant(g, cap=args.cap)
        return g, {"what": "congestion", "A": str(rep.A), "closed_form_holds": rep.closed_form_holds,
                   "max_gamma": rep.max_gamma, "m_edges": len(rep.per_edge)}
    if args.what == "audit":
        from .coupling import contraction_audit

        reps = contraction_audit(g, cap=args.cap)
        return g, {"what": "audit", "pairs": len(reps), "max_total": str(max((r.total for r in reps), default=0))}
    m = analysis.transition_matrix(g, args.chain, cap=args.cap)
    return g, {"what": "kernel", "states": m.size, "symmetric": m.is_symmetric(),
               "doubly_stochastic": m.is_doubly_stochastic(), "min_diagonal": str(m.min_diagonal())}


def _count_planar(payload):
    from .counting import count_exact_bruteforce
    from .reduction import planarize

    d, k, cap = payload
    return count_exact_bruteforce(planarize(d, k), cap_edges=cap).value


def cmd_reduce(args, seed):
    from .reduction import DrawnGraph, recover_counts

    d = load_graph(args.drawing)
    if not isinstance(d, DrawnGraph):
        raise ValidationError(f"{args.drawing}: not a drawing (needs 'crossings')")
    payloads = [(d, k, args.cap_edges) for k in range(d.l + 2)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            values = list(pool.map(_count_planar, payloads))
    else:
        values = [_count_planar(p) for p in payloads]
    table = dict(enumerate(values))
    res = recover_counts(d, planar_counter=_Lookup(d, table))
    return None, res.to_dict()


class _Lookup:
    """Counter that replays precomputed ``#EO(G_k)`` values in order."""

    def __init__(self, d, table):
        self.table = table
        self.k = 0

    def __call__(self, graph):
        v = self.table[self.k]
        self.k += 1
        return v


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulerlat", description="Eulerian orientations of triangular-lattice graphs")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $EO_SEED or 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent rows")
    common.add_argument("--out", help="also write the JSON result to this file")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build and serialize a graph")
    b.add_argument("--kind", required=True, choices=["solid", "holes", "g_ring", "h_family", "triangle"])
    b.add_argument("--k", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--side", type=int)
    b.add_argument("--faces", help="JSON file with a list of [i, j, 'up'|'down']")

    s = sub.add_parser("sample", parents=[common], help="run a chain from E_min")
    s.add_argument("--graph", required=True)
    s.add_argument("--eps", type=float, default=0.25)
    s.add_argument("--chain", choices=["face", "tower"], default="tower")
    s.add_argument("--steps", type=int)
    s.add_argument("--c", type=float, default=1.0, help="mixing constant in the step budget")

    c = sub.add_parser("count", parents=[common], help="count Eulerian orientations")
    c.add_argument("--graph", required=True)
    c.add_argument("--method", choices=["exact", "brute", "approx"], default="exact")
    c.add_argument("--eps", type=float, default=0.2)
    c.add_argument("--delta", type=float, default=0.05)
    c.add_argument("--chain", choices=["face", "tower"], default="tower")
    c.add_argument("--c", type=float, default=1.0)
    c.add_argument("--stop-at", type=int, default=1, help="count exactly once this many faces remain")
    c.add_argument("--cap", type=int, default=200_000)
    c.add_argument("--cap-edges", type=int, default=32)

    m = sub.add_parser("mix", parents=[common], help="coalescence, escape or exact TV mixing")
    m.add_argument("--graph", required=True)
    m.add_argument("--metric", choices=["coalescence", "escape", "tv"], default="coalescence")
    m.add_argument("--chain", choices=["face", "tower"], default="tower")
    m.add_argument("--replicas", type=int, default=100)
    m.add_argument("--max-steps", type=int, default=100_000)
    m.add_argument("--eps", type=float, default=0.25)
    m.add_argument("--cap", type=int, default=20_000)
    m.add_argument("--csv", help="per-replica rows: replica, coalesce_step, censored")

    a = sub.add_parser("analyze", parents=[common], help="exact analyses")
    a.add_argument("--what", choices=["census", "cut", "congestion", "audit", "kernel"], required=True)
    a.add_argument("--graph")
    a.add_argument("--k", type=int)
    a.add_argument("--n", type=int)
    a.add_argument("--chain", choices=["face", "tower"], default="face")
    a.add_argument("--cap", type=int, default=50_000)

    r = sub.add_parser("reduce", parents=[common], help="recover #EO of a drawn graph by interpolation")
    r.add_argument("--drawing", required=True)
    r.add_argument("--cap-edges", type=int, default=64)
    return p


COMMANDS = {
    "build": cmd_build,
    "sample": cmd_sample,
    "count": cmd_count,
    "mix": cmd_mix,
    "analyze": cmd_analyze,
    "reduce": cmd_reduce,
}


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.jobs < 1:
        parser.print_usage(sys.stderr)
        print("eulerlat: error: --jobs must be >= 1", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        seed = _seed(args)
        result = COMMANDS[args.command](args, seed)
    except EulerLatError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    g, body = result[0], result[1]
    outputs = list(result[2]) if len(result) > 2 else []
    if args.out:
        outputs.append(args.out)
    manifest = RunManifest(
        command=args.command,
        argv=argv,
        seed=seed,
        graph_hash=g.digest() if hasattr(g, "digest") else None,
        wall_clock=round(time.perf_counter() - t0, 6),
        outputs=outputs,
    )
    body = dict(_jsonable(body))
    body["manifest"] = asdict(manifest)
    text = json.dumps(body, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
