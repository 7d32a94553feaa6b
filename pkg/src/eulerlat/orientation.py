"""Eulerian orientations, the face potential bijection and the lattice metric.

Chirality convention used throughout the package: the minimum orientation
``E_min`` has no clockwise directed face, the maximum ``E_max`` has no
counter-clockwise one. Reversing a counter-clockwise directed face is an
"up" move and raises that face's potential by one.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import (
    BudgetExceeded,
    GraphMismatch,
    InconsistentPotential,
    InvalidPotential,
    NonTermination,
    NotEulerian,
    UnknownFace,
)
from .lattice import OUTER, LatticeGraph

CCW = 1
CW = -1
NOT_DIRECTED = 0


@dataclass(frozen=True)
class Orientation:
    """One direction bit per edge; ``bits[e] == 1`` follows the reference direction."""

    graph: LatticeGraph
    bits: bytes

    def __eq__(self, other):
        if not isinstance(other, Orientation):
            return NotImplemented
        return self.bits == other.bits and (self.graph is other.graph or self.graph == other.graph)

    def __hash__(self):
        return hash(self.bits)

    def flip(self, edges) -> "Orientation":
        buf = bytearray(self.bits)
        for e in edges:
            buf[e] ^= 1
        return Orientation(self.graph, bytes(buf))

    def reverse_face(self, fi: int) -> "Orientation":
        return self.flip(self.graph.faces[fi].edges)

    def face_state(self, fi: int) -> int:
        return face_state(self.graph, self.bits, fi)

    def is_eulerian(self) -> bool:
        return is_balanced(self.graph, self.bits)

    def to_list(self) -> list:
        return list(self.bits)

    @classmethod
    def from_list(cls, g: LatticeGraph, bits) -> "Orientation":
        bits = bytes(int(bool(b)) for b in bits)
        if len(bits) != g.n_edges:
            raise GraphMismatch(f"expected {g.n_edges} direction bits, got {len(bits)}")
        return cls(g, bits)


def face_state(g: LatticeGraph, bits: bytes, fi: int) -> int:
    face = g.faces[fi]
    agree = sum(1 for e, s in zip(face.edges, face.signs) if bits[e] == s)
    if agree == len(face.edges):
        return CCW
    if agree == 0:
        return CW
    return NOT_DIRECTED


def is_balanced(g: LatticeGraph, bits: bytes) -> bool:
    bal = dict.fromkeys(g.vertices, 0)
    for (a, b), bit in zip(g.edges, bits):
        if bit:
            bal[a] += 1
            bal[b] -= 1
        else:
            bal[a] -= 1
            bal[b] += 1
    return not any(bal.values())


def directed_face_chirality(e: Orientation, fid) -> str:
    """``"CCW"``, ``"CW"`` or ``"NotDirected"`` for the face with id ``fid``."""
    try:
        fi = e.graph.face_index[fid]
    except (KeyError, TypeError):
        raise UnknownFace(f"{fid!r} is not a bounded face") from None
    return {CCW: "CCW", CW: "CW", NOT_DIRECTED: "NotDirected"}[e.face_state(fi)]


def any_eulerian_orientation(g: LatticeGraph) -> Orientation:
    """Orient each closed trail of a greedy trail decomposition consistently."""
    deg = g.degree()
    if any(d % 2 for d in deg.values()):
        raise NotEulerian("graph has a vertex of odd degree")
    incident = {v: [] for v in g.vertices}
    for k, (a, b) in enumerate(g.edges):
        incident[a].append(k)
        incident[b].append(k)
    used = [False] * g.n_edges
    ptr = dict.fromkeys(g.vertices, 0)
    bits = bytearray(g.n_edges)
    for start in range(g.n_edges):
        if used[start]:
            continue
        origin = g.edges[start][0]
        v = origin
        while True:
            lst = incident[v]
            while ptr[v] < len(lst) and used[lst[ptr[v]]]:
                ptr[v] += 1
            if ptr[v] == len(lst):
                break
            k = lst[ptr[v]]
            used[k] = True
            a, b = g.edges[k]
            bits[k] = 1 if v == a else 0
            v = b if v == a else a
        if v != origin:
            raise NotEulerian("trail got stuck away from its origin")
    return Orientation(g, bytes(bits))


def _iteration_cap(g: LatticeGraph) -> int:
    dist = g.dual_distances()
    return (sum(d or 0 for d in dist) + 1) * max(1, g.n_faces)


def push_to_extreme(e: Orientation, which: str) -> Orientation:
    """Greedily reverse directed faces until none of the wrong chirality remains."""
    g = e.graph
    target = CW if which == "min" else CCW
    bits = bytearray(e.bits)
    cap = _iteration_cap(g)
    work = deque(range(g.n_faces))
    queued = [True] * g.n_faces
    moves = 0
    while work:
        fi = work.popleft()
        queued[fi] = False
        if face_state(g, bits, fi) != target:
            continue
        for k in g.faces[fi].edges:
            bits[k] ^= 1
        moves += 1
        if moves > cap:
            raise NonTermination(f"no extreme reached after {cap} reversals")
        for nb in g.face_neighbors(fi) + [fi]:
            if not queued[nb]:
                queued[nb] = True
                work.append(nb)
    return Orientation(g, bytes(bits))


def extremal_orientation(g: LatticeGraph, which: str = "min") -> Orientation:
    which = which.lower()
    if which not in ("min", "max"):
        raise ValueError("which must be 'min' or 'max'")
    key = ("extreme", which)
    if key not in g.cache:
        g.cache[key] = push_to_extreme(any_eulerian_orientation(g), which)
    return g.cache[key]


@dataclass(frozen=True)
class Potential:
    """Potential of every bounded face, indexed like ``graph.faces``."""

    graph: LatticeGraph
    values: tuple

    def __getitem__(self, fid) -> int:
        return self.values[self.graph.face_index[fid]]

    def as_dict(self) -> dict:
        return {f.id: v for f, v in zip(self.graph.faces, self.values)}

    def total(self) -> int:
        return sum(self.values)


def _up_face(g: LatticeGraph, min_bits: bytes, e: int) -> tuple:
    """(face that is larger when edge ``e`` is flipped, the other face)."""
    left, right = g.sides[e]
    return (left, right) if min_bits[e] else (right, left)


def potential_values(g: LatticeGraph, bits: bytes, min_bits: bytes) -> tuple:
    vals = [None] * g.n_faces

    def value(fi):
        return 0 if fi == OUTER else vals[fi]

    queue = deque()
    for e, (l, r) in enumerate(g.sides):
        if OUTER in (l, r):
            queue.append(e)
    incident = [[] for _ in range(g.n_faces)]
    for fi, face in enumerate(g.faces):
        incident[fi] = face.edges
    while queue:
        e = queue.popleft()
        hi, lo = _up_face(g, min_bits, e)
        step = 0 if bits[e] == min_bits[e] else 1
        vh, vl = value(hi), value(lo)
        if vh is None and vl is None:
            continue
        if vh is None:
            vals[hi] = vl + step
            queue.extend(incident[hi])
        elif vl is None:
            vals[lo] = vh - step
            queue.extend(incident[lo])
    if any(v is None for v in vals):
        raise InconsistentPotential("some faces are unreachable from the outer face")
    for e in range(g.n_edges):
        hi, lo = _up_face(g, min_bits, e)
        step = 0 if bits[e] == min_bits[e] else 1
        if value(hi) - value(lo) != step:
            raise InconsistentPotential(f"edge {g.edges[e]!r} disagrees with the local rule")
    if any(v < 0 for v in vals):
        raise InconsistentPotential("negative potential")
    return tuple(vals)


def potential_of(e: Orientation) -> Potential:
    g = e.graph
    emin = extremal_orientation(g, "min")
    return Potential(g, potential_values(g, e.bits, emin.bits))


def potential_violations(g: LatticeGraph, values) -> list:
    """Violations of the three potential conditions, with the outer face pinned at 0."""
    emin = extremal_orientation(g, "min").bits
    out = []
    if len(values) != g.n_faces:
        return [f"expected {g.n_faces} values, got {len(values)}"]
    for fi, v in enumerate(values):
        if not isinstance(v, int) or v < 0:
            out.append(f"face {g.faces[fi].id!r}: value {v!r} is not a non-negative integer")
    if out:
        return out

    def value(fi):
        return 0 if fi == OUTER else values[fi]

    for e in range(g.n_edges):
        hi, lo = _up_face(g, emin, e)
        d = value(hi) - value(lo)
        if abs(d) > 1:
            out.append(f"edge {g.edges[e]!r}: neighbouring values differ by {abs(d)}")
        elif d < 0:
            out.append(f"edge {g.edges[e]!r}: order condition fails")
    for fi in range(g.n_faces):
        if g.is_boundary_face(fi) and values[fi] > 1:
            out.append(f"boundary face {g.faces[fi].id!r} has value {values[fi]}")
    return out


def orientation_from_potential(g: LatticeGraph, p) -> Orientation:
    values = tuple(p.values) if isinstance(p, Potential) else _as_values(g, p)
    bad = potential_violations(g, values)
    if bad:
        raise InvalidPotential("; ".join(bad[:5]))
    emin = extremal_orientation(g, "min").bits
    bits = bytearray(emin)
    for e, (l, r) in enumerate(g.sides):
        vl = 0 if l == OUTER else values[l]
        vr = 0 if r == OUTER else values[r]
        if (vl + vr) % 2:
            bits[e] ^= 1
    if not is_balanced(g, bits):
        raise InvalidPotential("potential does not correspond to an Eulerian orientation")
    return Orientation(g, bytes(bits))


def _as_values(g: LatticeGraph, p) -> tuple:
    if isinstance(p, dict):
        try:
            return tuple(p[f.id] for f in g.faces)
        except KeyError as exc:
            raise InvalidPotential(f"missing value for face {exc.args[0]!r}") from None
    return tuple(p)


def max_potential_profile(g: LatticeGraph) -> Potential:
    if g.kind in ("solid", "g_ring"):
        return Potential(g, tuple(g.dual_distances()))
    return potential_of(extremal_orientation(g, "max"))


def distance(e1: Orientation, e2: Orientation) -> int:
    if e1.graph is not e2.graph and e1.graph != e2.graph:
        raise GraphMismatch("orientations live on different graphs")
    p1 = potential_of(e1).values
    p2 = potential_of(e2).values
    return sum(abs(a - b) for a, b in zip(p1, p2))


def enumerate_states(g: LatticeGraph, cap: int = 200_000) -> list:
    """All Eulerian orientations as ``bytes``, by BFS over single-face reversals from ``E_min``."""
    key = ("states", cap)
    if key in g.cache:
        return g.cache[key]
    start = extremal_orientation(g, "min").bits
    seen = {start}
    order = [start]
    queue = deque([start])
    faces = [f.edges for f in g.faces]
    while queue:
        bits = queue.popleft()
        for fi in range(g.n_faces):
            if face_state(g, bits, fi) == NOT_DIRECTED:
                continue
            buf = bytearray(bits)
            for k in faces[fi]:
                buf[k] ^= 1
            nb = bytes(buf)
            if nb not in seen:
                seen.add(nb)
                if len(seen) > cap:
                    raise BudgetExceeded(f"more than {cap} Eulerian orientations")
                order.append(nb)
                queue.append(nb)
    g.cache[key] = order
    return order
