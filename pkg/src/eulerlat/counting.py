"""Exact and approximate counting of Eulerian orientations.

Two exact oracles that share no code: a breadth-first search over
single-face reversals (planar lattice graphs only) and a frontier
dynamic programme over edges (any multigraph). The approximate counter
peels boundary faces and estimates each peel ratio from samples.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chains import TOWER, BatchChain, RngStream, mixing_budget
from .errors import CapExceeded, NonSolid, RatioFloorViolated
from .lattice import OUTER, LatticeGraph, remove_face_edges
from .orientation import enumerate_states, face_state, NOT_DIRECTED


@dataclass
class CountResult:
    value: int | float
    method: str
    exact: bool = True
    eps: float | None = None
    delta: float | None = None
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"method": self.method, "exact": self.exact}
        if self.exact:
            out["value"] = str(self.value)
        else:
            out["estimate"] = self.value
            out["eps"] = self.eps
            out["delta"] = self.delta
            out["ci"] = [self.value / (1 + self.eps), self.value / (1 - self.eps)] if self.eps < 1 else None
        out.update(self.stats)
        return out


def count_exact_lattice(g: LatticeGraph, cap: int = 200_000) -> CountResult:
    states = enumerate_states(g, cap)
    return CountResult(len(states), "lattice", stats={"states": len(states)})


def _edge_list(g) -> tuple:
    if isinstance(g, tuple):
        return g
    return list(g.vertices), list(g.edges)


def count_exact_bruteforce(g, cap_edges: int = 32) -> CountResult:
    """Count balanced orientations of any multigraph.

    ``g`` is anything with ``vertices`` and ``edges`` attributes, or a
    ``(vertices, edges)`` pair. Edges are oriented one at a time; each
    vertex keeps a running in-minus-out balance that may never leave
    ``[-r, r]`` where ``r`` is its number of unprocessed edges, and vertices
    whose edges are all placed must sit at zero. Partial states with the
    same frontier balances are merged.
    """
    vertices, edges = _edge_list(g)
    if len(edges) > cap_edges:
        raise CapExceeded(f"{len(edges)} edges exceed the cap of {cap_edges}")
    loops = sum(1 for a, b in edges if a == b)
    edges = [(a, b) for a, b in edges if a != b]
    deg = {v: 0 for v in vertices}
    for a, b in edges:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    if any(d % 2 for d in deg.values()):
        return CountResult(0, "bruteforce", stats={"edges": len(edges) + loops})
    order = _edge_order(edges)
    remaining = dict(deg)
    # frontier state: tuple of (vertex, balance) for touched, unfinished vertices
    states = {(): 1}
    peak = 1
    for k in order:
        a, b = edges[k]
        remaining[a] -= 1
        remaining[b] -= 1
        nxt = {}
        for st, n in states.items():
            bal = dict(st)
            for tail, head in ((a, b), (b, a)):
                ba = bal.get(tail, 0) - 1
                bb = bal.get(head, 0) + 1
                if abs(ba) > remaining[tail] or abs(bb) > remaining[head]:
                    continue
                new = dict(bal)
                new[tail], new[head] = ba, bb
                for v in (tail, head):
                    if remaining[v] == 0:
                        del new[v]
                key = tuple(sorted(new.items(), key=lambda kv: repr(kv[0])))
                nxt[key] = nxt.get(key, 0) + n
        states = nxt
        peak = max(peak, len(states))
    total = sum(states.values()) * 2**loops
    return CountResult(total, "bruteforce", stats={"edges": len(edges) + loops, "peak_frontier": peak})


def _edge_order(edges) -> list:
    """Greedy order that keeps the set of half-processed vertices small."""
    adj = {}
    for k, (a, b) in enumerate(edges):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    done = [False] * len(edges)
    order = []
    touched = set()
    while len(order) < len(edges):
        best = None
        for k in range(len(edges)):
            if done[k]:
                continue
            a, b = edges[k]
            score = (a in touched) + (b in touched)
            if best is None or score > best[0]:
                best = (score, k)
                if score == 2:
                    break
        k = best[1]
        done[k] = True
        order.append(k)
        touched.update(edges[k])
    return order


# -- approximate counting -------------------------------------------------------------


def boundary_edge_count(g: LatticeGraph, fi: int) -> int:
    return sum(1 for e in g.faces[fi].edges if OUTER in g.sides[e])


def is_free_triangle(g: LatticeGraph, fi: int) -> bool:
    """Every edge of the face borders the outer face, so the face is a block of its own.

    Its boundary is then a directed cycle in every EO and peeling it halves
    the count exactly.
    """
    return boundary_edge_count(g, fi) == len(g.faces[fi].edges)


def choose_peel_face(g: LatticeGraph) -> int:
    """Boundary face whose removal loses the most faces; then most outer edges, then face order."""
    best = None
    for fi in range(g.n_faces):
        b = boundary_edge_count(g, fi)
        if not b:
            continue
        key = (g.n_faces - remove_face_edges(g, fi).n_faces, b)
        if best is None or key > best[0]:
            best = (key, fi)
    if best is None:
        raise NonSolid("no bounded face touches the outer face")
    return best[1]


def peel_sequence(g: LatticeGraph, stop_at: int = 1) -> list:
    """``[(G_0, F_0), (G_1, F_1), ..., (G_k, None)]`` peeling until at most ``stop_at`` faces remain."""
    out = []
    cur = g
    while cur.n_faces > stop_at:
        fi = choose_peel_face(cur)
        out.append((cur, fi))
        cur = remove_face_edges(cur, fi)
    out.append((cur, None))
    return out


def exact_peel_ratios(g: LatticeGraph, stop_at: int = 1) -> list:
    """Exact ``(p_i, |EO(G_{i+1})| / |EO(G_i)|)`` along the peel sequence."""
    seq = peel_sequence(g, stop_at)
    out = []
    for (gi, fi), (gn, _) in zip(seq, seq[1:]):
        states = enumerate_states(gi)
        p = Fraction(sum(1 for s in states if face_state(gi, s, fi) != NOT_DIRECTED), len(states))
        ratio = Fraction(count_exact_bruteforce(gn, cap_edges=10**6).value, len(states))
        out.append((p, ratio))
    return out


def single_peel_ratios(g: LatticeGraph) -> dict:
    """Exact ``|EO(G - E(F))| / |EO(G)|`` for every boundary face ``F``."""
    total = count_exact_lattice(g).value
    out = {}
    for fi in range(g.n_faces):
        if boundary_edge_count(g, fi):
            rest = remove_face_edges(g, fi)
            out[g.faces[fi].id] = Fraction(count_exact_bruteforce(rest, cap_edges=10**6).value, total)
    return out


def fpras_plan(g: LatticeGraph, eps: float, delta: float, stop_at: int = 1, kind: str = TOWER, c: float = 1.0) -> dict:
    """Levels, samples per level and chain steps per sample for the approximate counter.

    Only levels that peel an ear are sampled; free triangles contribute an
    exact factor 2. Per sampled level the relative error is ``eps/(2k)`` for
    sampling noise, sized by the two-sided Chernoff bound with the 1/2 floor
    on ``p_i``, plus at most ``eps/(4k)`` from the sampler's distance to uniform.
    """
    seq = peel_sequence(g, stop_at)
    sampled = [i for i, (gi, fi) in enumerate(seq[:-1]) if not is_free_triangle(gi, fi)]
    k = len(sampled)
    plan = {
        "levels": k,
        "free_levels": len(seq) - 1 - k,
        "samples_per_level": 0,
        "steps": [],
        "eps_level": None,
        "eps_mix": None,
        "sequence": seq,
        "sampled": sampled,
    }
    if k == 0:
        return plan
    eps_l = eps / (2 * k)
    plan["eps_level"] = eps_l
    plan["eps_mix"] = eps / (8 * k)
    plan["samples_per_level"] = math.ceil(6 * math.log(2 * k / delta) / eps_l**2)
    plan["steps"] = [mixing_budget(seq[i][0].n_faces, plan["eps_mix"], kind, c) for i in sampled]
    return plan


def count_approx_fpras(
    g: LatticeGraph,
    eps: float,
    delta: float,
    rng: RngStream,
    kind: str = TOWER,
    c: float = 1.0,
    stop_at: int = 1,
    samples: int | None = None,
    steps: list | None = None,
    trials: int = 1,
    chunk: int = 1_000_000,
):
    """Product-of-ratios estimate of ``|EO(g)|``.

    With ``trials > 1`` a list of independent estimates is returned; the
    trials share chain sweeps, which only changes the cost.
    """
    if g.kind not in ("solid", "g_ring", "general"):
        raise NonSolid(f"graph kind {g.kind!r} is not a solid region")
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError("eps and delta must lie in (0, 1)")
    plan = fpras_plan(g, eps, delta, stop_at, kind, c)
    k = plan["levels"]
    if steps is not None:
        if len(steps) != k:
            raise ValueError(f"need {k} per-level step counts, got {len(steps)}")
        plan["steps"] = list(steps)
    seq = plan["sequence"]
    base = count_exact_lattice(seq[-1][0]).value * 2 ** plan["free_levels"]
    n = samples or plan["samples_per_level"]
    logs = np.zeros(trials)
    p_hat = []
    per_chunk = max(1, chunk // max(n, 1))
    for level, i in enumerate(plan["sampled"]):
        gi, fi = seq[i]
        hits = np.empty(trials)
        for lo in range(0, trials, per_chunk):
            m = min(per_chunk, trials - lo)
            chain = BatchChain(gi, kind, n * m, rng.gen)
            chain.step(plan["steps"][level])
            hits[lo:lo + m] = chain.directed(fi).reshape(m, n).mean(axis=1)
        p_hat.append(hits.tolist())
        if (hits < 0.5 * (1 - plan["eps_level"])).any():
            warnings.warn(
                f"level {level}: estimated p = {hits.min():.4f} below the 1/2 floor",
                RatioFloorViolated,
                stacklevel=2,
            )
        with np.errstate(divide="ignore"):
            logs += np.log(2.0 / hits)
    estimates = (base * np.exp(logs)).tolist()
    stats = {
        "levels": k,
        "free_levels": plan["free_levels"],
        "samples_per_level": n,
        "steps_per_sample": plan["steps"],
        "eps_level": plan["eps_level"],
        "eps_mix": plan["eps_mix"],
        "mix_constant": c if steps is None else None,
        "chain": kind,
        "base_count": base,
        "p_hat": [p[0] for p in p_hat] if trials == 1 else p_hat,
    }
    results = [CountResult(v, "approx", exact=False, eps=eps, delta=delta, stats=dict(stats)) for v in estimates]
    return results[0] if trials == 1 else results


def calibrated_steps(g: LatticeGraph, eps: float, delta: float, kind: str = TOWER, stop_at: int = 1) -> list:
    """Exact worst-start mixing time at ``eps_mix`` for every peel level.

    A drop-in replacement for the heuristic ``c * f^4`` budget on graphs small
    enough to build the exact kernel.
    """
    from .analysis import transition_matrix, tv_mixing_time

    plan = fpras_plan(g, eps, delta, stop_at, kind)
    if not plan["levels"]:
        return []
    return [tv_mixing_time(transition_matrix(plan["sequence"][i][0], kind), plan["eps_mix"]) for i in plan["sampled"]]


__all__ = [
    "calibrated_steps",
    "CountResult",
    "count_exact_lattice",
    "count_exact_bruteforce",
    "count_approx_fpras",
    "fpras_plan",
    "peel_sequence",
    "exact_peel_ratios",
    "single_peel_ratios",
    "choose_peel_face",
    "is_free_triangle",
]
