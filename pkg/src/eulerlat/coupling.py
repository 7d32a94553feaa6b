"""Path coupling for the tower-moves chain and coalescence measurements.

``coupled_step`` and ``contraction_audit`` implement the adjacent-pair
coupling: the disagreement face ``F_a`` is moved in one chain only, every
other face is attempted in both chains with a shared acceptance uniform.

``coalescence_experiment`` couples arbitrary pairs differently (a grand
coupling with a shared up/down coin, see its docstring); it is a valid
coupling for measuring coalescence but is not the proof's path coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .chains import FACE, TOWER, BatchChain, RngStream, move_at, tower_from
from .errors import AuditFailed, GraphMismatch, NotAdjacent
from .lattice import OUTER, LatticeGraph
from .orientation import (
    NOT_DIRECTED,
    Orientation,
    enumerate_states,
    extremal_orientation,
    face_state,
    potential_of,
    potential_values,
)


@dataclass(frozen=True)
class CoupledPair:
    x: Orientation
    y: Orientation
    delta: int

    @classmethod
    def of(cls, x: Orientation, y: Orientation) -> "CoupledPair":
        if x.graph is not y.graph and x.graph != y.graph:
            raise GraphMismatch("orientations live on different graphs")
        px, py = potential_of(x).values, potential_of(y).values
        return cls(x, y, sum(abs(a - b) for a, b in zip(px, py)))


def disagreement_face(x: Orientation, y: Orientation) -> int:
    """Index of the single face whose reversal maps ``x`` to ``y``."""
    g = x.graph
    diff = {e for e in range(g.n_edges) if x.bits[e] != y.bits[e]}
    if diff:
        e0 = min(diff)
        for fi in g.sides[e0]:
            if fi != OUTER and set(g.faces[fi].edges) == diff and face_state(g, x.bits, fi) != NOT_DIRECTED:
                return fi
    raise NotAdjacent("the two orientations are not at distance 1")


def coupled_step(p: CoupledPair, rng: RngStream, kind: str = TOWER) -> CoupledPair:
    """One step of the adjacent-pair coupling. Coalesced pairs move together."""
    g = p.x.graph
    f = g.n_faces
    if p.x.bits == p.y.bits:
        _, new, _ = _draw(g, p.x.bits, kind, rng)
        o = Orientation(g, new)
        return CoupledPair(o, o, 0)
    fa = disagreement_face(p.x, p.y)
    r = rng.random()
    if r < 0.5 - 1 / (2 * f):
        return p
    if r < 0.5:
        return CoupledPair(p.y, p.y, 0)
    if r < 0.5 + 1 / (2 * f):
        return CoupledPair(p.x, p.x, 0)
    others = [fi for fi in range(f) if fi != fa]
    gf = others[rng.integers(len(others))]
    u = rng.random()
    ax, nx, _ = move_at(g, p.x.bits, gf, kind)
    ay, ny, _ = move_at(g, p.y.bits, gf, kind)
    x2 = Orientation(g, nx) if u < ax else p.x
    y2 = Orientation(g, ny) if u < ay else p.y
    return CoupledPair.of(x2, y2)


def _draw(g, bits, kind, rng):
    if rng.random() < 0.5:
        return Fraction(0), bits, None
    fi = rng.integers(g.n_faces)
    acc, new, out = move_at(g, bits, fi, kind)
    if acc and rng.random() < acc:
        return acc, new, out
    return acc, bits, out


# -- exact audit ---------------------------------------------------------------------


@dataclass
class ContractionReport:
    pair: tuple  # (index of x, index of y) into the enumerated states
    disagreement_face: int
    per_neighbor: dict  # face index -> E[delta_C]
    through: dict  # face index -> contribution of G != C whose move involves C
    directed_in: dict  # face index -> "x", "y" or None
    unattributed: Fraction
    total: Fraction


def _involved(g, bits, gf, kind, nbrs):
    if face_state(g, bits, gf) != NOT_DIRECTED:
        return {gf} & nbrs
    if kind != TOWER:
        return set()
    t = tower_from(g, bits, gf)
    if t is None or t.length < 2:
        return set()
    return set(t.faces) & nbrs


def contraction_audit(g: LatticeGraph, kind: str = TOWER, cap: int = 50_000, strict: bool = True) -> list:
    """Exact expected change of the distance for every adjacent pair.

    ``strict`` raises :class:`AuditFailed` on the first pair whose total
    expected change is positive or whose per-neighbour values break the
    1/(3f) bounds.
    """
    states = enumerate_states(g, cap)
    index = {s: i for i, s in enumerate(states)}
    min_bits = extremal_orientation(g, "min").bits
    pots = [potential_values(g, s, min_bits) for s in states]
    f = g.n_faces
    pick = Fraction(1, 2 * f)
    third = Fraction(1, 3 * f)

    def dist(a, b):
        pa, pb = pots[index[a]], pots[index[b]]
        return sum(abs(s - t) for s, t in zip(pa, pb))

    reports = []
    for i, xb in enumerate(states):
        for fa in range(f):
            if face_state(g, xb, fa) == NOT_DIRECTED:
                continue
            yb = _flip(xb, g.faces[fa].edges)
            j = index[yb]
            nbrs = {n for n in g.face_neighbors(fa) if n != OUTER}
            per = {c: Fraction(0) for c in nbrs}
            through = {c: Fraction(0) for c in nbrs}
            loose = Fraction(0)
            total = -2 * pick  # either chain reverses F_a alone
            for gf in range(f):
                if gf == fa:
                    continue
                ax, nx, _ = move_at(g, xb, gf, kind)
                ay, ny, _ = move_at(g, yb, gf, kind)
                lo, hi = min(ax, ay), max(ax, ay)
                exp = Fraction(0)
                if lo:
                    exp += lo * (dist(nx, ny) - 1)
                if hi > lo:
                    if ax > ay:
                        exp += (hi - lo) * (dist(nx, yb) - 1)
                    else:
                        exp += (hi - lo) * (dist(xb, ny) - 1)
                exp *= pick
                total += exp
                inv = _involved(g, xb, gf, kind, nbrs) | _involved(g, yb, gf, kind, nbrs)
                if len(inv) == 1:
                    (c,) = inv
                    per[c] += exp
                    if gf != c:
                        through[c] += exp
                else:
                    loose += exp
            directed_in = {
                c: "x" if face_state(g, xb, c) != NOT_DIRECTED else "y" if face_state(g, yb, c) != NOT_DIRECTED else None
                for c in nbrs
            }
            rep = ContractionReport((i, j), fa, per, through, directed_in, loose, total)
            reports.append(rep)
            if strict:
                problem = _problems(rep, third)
                if problem:
                    raise AuditFailed(f"pair {(i, j)} at face {g.faces[fa].id!r}: {problem}")
    return reports


def _problems(rep: ContractionReport, third: Fraction) -> str:
    if rep.total > 0:
        return f"expected change {rep.total} > 0"
    if rep.unattributed:
        return f"contribution {rep.unattributed} not attributable to one neighbour"
    for c, v in rep.per_neighbor.items():
        if rep.directed_in[c] and (v != third or rep.through[c] != 0):
            return f"directed neighbour {c}: E = {v}, through-tower part {rep.through[c]}"
        if v > third:
            return f"undirected neighbour {c}: E = {v} > 1/(3f)"
    return ""


def _flip(bits, edges):
    buf = bytearray(bits)
    for e in edges:
        buf[e] ^= 1
    return bytes(buf)


def coupled_marginals(g: LatticeGraph, x: Orientation, y: Orientation, kind: str = TOWER):
    """Exact one-step distributions of both coordinates under the coupling."""
    f = g.n_faces
    fa = disagreement_face(x, y)
    pick = Fraction(1, 2 * f)
    mx, my = {}, {}

    def add(d, k, p):
        d[k] = d.get(k, Fraction(0)) + p

    add(mx, x.bits, Fraction(1, 2) - pick)
    add(my, y.bits, Fraction(1, 2) - pick)
    add(mx, y.bits, pick)
    add(my, y.bits, pick)
    add(mx, x.bits, pick)
    add(my, x.bits, pick)
    for gf in range(f):
        if gf == fa:
            continue
        for bits, d in ((x.bits, mx), (y.bits, my)):
            acc, new, _ = move_at(g, bits, gf, kind)
            add(d, new, pick * acc)
            add(d, bits, pick * (1 - acc))
    return mx, my


# -- coalescence ------------------------------------------------------------------------


@dataclass
class CoalescenceStats:
    times: list  # per replica; None when censored
    max_steps: int
    censored: int = 0
    mean: float | None = None
    median: float | None = None
    quantiles: dict = field(default_factory=dict)

    @classmethod
    def from_times(cls, times, max_steps: int) -> "CoalescenceStats":
        st = cls(list(times), max_steps)
        st.censored = sum(t is None for t in times)
        if times:
            # censored runs count as max_steps, so the median is a lower bound
            arr = np.array([max_steps if t is None else t for t in times], dtype=float)
            st.mean = float(arr.mean())
            st.median = float(np.median(arr))
            st.quantiles = {q: float(np.quantile(arr, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
        return st

    def rows(self):
        for r, t in enumerate(self.times):
            yield {"replica": r, "coalesce_step": self.max_steps if t is None else t, "censored": int(t is None)}


def _run_until(batches, gen, max_steps, kind, done_fn):
    R = batches[0].bits.shape[0]
    nf = batches[0].g.n_faces
    times = np.full(R, -1, dtype=np.int64)
    pending = ~done_fn()
    times[~pending] = 0
    t = 0
    while pending.any() and t < max_steps:
        t += 1
        face = gen.integers(nf, size=R)
        coin = np.where(gen.random(R) < 0.5, 1, -1).astype(np.int8)
        u = gen.random(R)
        move = np.ones(R, dtype=bool)
        for b in batches:
            b.advance(move, face, u, coin)
        hit = pending & done_fn()
        times[hit] = t
        pending &= ~hit
    return [None if v < 0 else int(v) for v in times]


def coalescence_experiment(g: LatticeGraph, replicas: int, max_steps: int, rng: RngStream, kind: str = TOWER) -> CoalescenceStats:
    """Coalescence times of two copies started at ``E_min`` and ``E_max``.

    Each step draws a face, a uniform and a fair up/down coin shared by both
    copies; a copy performs its move at that face only when the move's
    direction matches the coin and the uniform is below the acceptance
    probability. Each copy on its own is exactly the lazy chain (holding
    probability at least 1/2), and equal copies stay equal.
    """
    if replicas <= 0:
        return CoalescenceStats.from_times([], max_steps)
    lo = BatchChain(g, kind, replicas, rng.gen, extremal_orientation(g, "min").bits)
    hi = BatchChain(g, kind, replicas, rng.gen, extremal_orientation(g, "max").bits)
    times = _run_until((lo, hi), rng.gen, max_steps, kind, lambda: ~(lo.bits != hi.bits).any(axis=1))
    return CoalescenceStats.from_times(times, max_steps)


def central_potential_form(g: LatticeGraph, face="C"):
    """Edges and signs with ``phi(face) = sum sign * (bit xor min_bit)`` along a dual path."""
    from collections import deque

    target = g.face_index[face]
    min_bits = extremal_orientation(g, "min").bits
    prev = {OUTER: None}
    queue = deque([OUTER])
    outer_edges = [e for e, (l, r) in enumerate(g.sides) if OUTER in (l, r)]
    while queue:
        cur = queue.popleft()
        if cur == target:
            break
        edges = outer_edges if cur == OUTER else g.faces[cur].edges
        for e in edges:
            l, r = g.sides[e]
            nxt = r if l == cur else l
            if nxt not in prev:
                prev[nxt] = (cur, e)
                queue.append(nxt)
    path = []
    cur = target
    while prev[cur] is not None:
        back, e = prev[cur]
        left, right = g.sides[e]
        hi = left if min_bits[e] else right
        path.append((e, 1 if hi == cur else -1))
        cur = back
    edges = np.array([e for e, _ in path], dtype=np.int64)
    signs = np.array([s for _, s in path], dtype=np.int64)
    return edges, signs, np.frombuffer(min_bits, dtype=np.uint8)[edges]


def escape_experiment(g: LatticeGraph, replicas: int, max_steps: int, rng: RngStream, kind: str = FACE, level: int = 1) -> CoalescenceStats:
    """Steps until ``phi(C)`` first exceeds ``level``, starting from ``E_min``."""
    if replicas <= 0:
        return CoalescenceStats.from_times([], max_steps)
    edges, signs, mins = central_potential_form(g)
    b = BatchChain(g, kind, replicas, rng.gen)

    def phi():
        return ((b.bits[:, edges] ^ mins) * signs).sum(axis=1)

    R = replicas
    nf = g.n_faces
    times = np.full(R, -1, dtype=np.int64)
    pending = np.ones(R, dtype=bool)
    t = 0
    while pending.any() and t < max_steps:
        t += 1
        b.advance(rng.gen.random(R) >= 0.5, rng.gen.integers(nf, size=R), rng.gen.random(R))
        hit = pending & (phi() > level)
        times[hit] = t
        pending &= ~hit
    return CoalescenceStats.from_times([None if v < 0 else int(v) for v in times], max_steps)


def fit_power(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


__all__ = [
    "CoupledPair",
    "ContractionReport",
    "CoalescenceStats",
    "coupled_step",
    "contraction_audit",
    "coupled_marginals",
    "coalescence_experiment",
    "escape_experiment",
    "disagreement_face",
    "fit_power",
]
