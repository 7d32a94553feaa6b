"""Finite subgraphs of the triangular lattice and their planar face structure.

Vertices of the lattice are integer pairs ``(i, j)``; the three edge
directions are ``(1, 0)``, ``(0, 1)`` and ``(1, -1)``. In the standard
embedding vertex ``(i, j)`` sits at ``(i + j/2, j*sqrt(3)/2)``, so the unit
triangles come in two flavours::

    up   (i, j):  (i, j) -> (i+1, j) -> (i, j+1)          (counter-clockwise)
    down (i, j):  (i+1, j) -> (i+1, j+1) -> (i, j+1)      (counter-clockwise)

A :class:`LatticeGraph` stores every bounded face as a counter-clockwise
vertex cycle together with the indices of its boundary edges. Graphs that
are not built from unit triangles (the ``H_N`` family, peeled graphs) use the
same structure with opaque vertex and face identifiers.
"""
from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, NamedTuple

from .errors import (
    ConstructionInvariantViolated,
    Disconnected,
    NotEulerian,
    NotSimplyConnected,
    ValidationError,
)

OUTER = -1


class Tri(NamedTuple):
    """A unit triangle named by its anchor cell and pointing direction."""

    i: int
    j: int
    up: bool

    def vertices(self) -> tuple:
        i, j = self.i, self.j
        if self.up:
            return ((i, j), (i + 1, j), (i, j + 1))
        return ((i + 1, j), (i + 1, j + 1), (i, j + 1))

    def neighbors(self) -> tuple:
        i, j = self.i, self.j
        if self.up:
            return (Tri(i, j - 1, False), Tri(i, j, False), Tri(i - 1, j, False))
        return (Tri(i, j, True), Tri(i + 1, j, True), Tri(i, j + 1, True))

    def to_json(self) -> list:
        return [self.i, self.j, "up" if self.up else "down"]

    @classmethod
    def from_json(cls, item) -> "Tri":
        try:
            i, j, orient = item
        except (TypeError, ValueError):
            raise ValidationError(f"face entry {item!r} is not [i, j, 'up'|'down']") from None
        if orient not in ("up", "down") or not isinstance(i, int) or not isinstance(j, int):
            raise ValidationError(f"face entry {item!r} is not [i, j, 'up'|'down']")
        return cls(i, j, orient == "up")


def up(i: int, j: int) -> Tri:
    return Tri(i, j, True)


def down(i: int, j: int) -> Tri:
    return Tri(i, j, False)


@dataclass(frozen=True)
class Face:
    id: Hashable
    cycle: tuple
    edges: tuple
    # signs[k] is True when edge k's reference direction runs along the cycle
    signs: tuple


@dataclass(frozen=True, eq=False)
class LatticeGraph:
    """Planar embedded Eulerian graph with its bounded faces.

    ``edges[e] = (a, b)`` with ``a < b``; the reference direction of edge
    ``e`` is ``a -> b``. ``sides[e] = (left, right)`` gives the bounded face
    on each side of that direction, or ``OUTER``.
    """

    vertices: tuple
    edges: tuple
    faces: tuple
    kind: str = "general"
    params: dict = field(default_factory=dict)
    sides: tuple = ()
    edge_index: dict = field(default_factory=dict, repr=False)
    face_index: dict = field(default_factory=dict, repr=False)
    # derived objects (extremal orientations, state lists) memoised per graph
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def face_ids(self) -> tuple:
        return tuple(f.id for f in self.faces)

    def face(self, fid) -> int:
        return self.face_index[fid]

    def degree(self) -> dict:
        deg = {v: 0 for v in self.vertices}
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    @property
    def outer_boundary(self) -> frozenset:
        return frozenset(e for e, (l, r) in enumerate(self.sides) if l == OUTER or r == OUTER)

    def is_boundary_face(self, fi: int) -> bool:
        return any(OUTER in self.sides[e] for e in self.faces[fi].edges)

    def across(self, fi: int, e: int) -> int:
        """Face on the other side of edge ``e`` from face ``fi``."""
        l, r = self.sides[e]
        return r if l == fi else l

    def face_neighbors(self, fi: int) -> list:
        out = []
        for e in self.faces[fi].edges:
            g = self.across(fi, e)
            if g != OUTER and g not in out:
                out.append(g)
        return out

    def dual_distances(self) -> list:
        """Crossing distance of every face from the outer face."""
        dist = [None] * self.n_faces
        queue = deque()
        for fi in range(self.n_faces):
            if self.is_boundary_face(fi):
                dist[fi] = 1
                queue.append(fi)
        while queue:
            fi = queue.popleft()
            for g in self.face_neighbors(fi):
                if dist[g] is None:
                    dist[g] = dist[fi] + 1
                    queue.append(g)
        return dist

    def _key(self):
        return (
            tuple(self.vertices),
            tuple(self.edges),
            tuple((f.id, f.cycle) for f in self.faces),
        )

    def __eq__(self, other):
        if not isinstance(other, LatticeGraph):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "vertices": [_jsonable(v) for v in self.vertices],
            "edges": [[_jsonable(a), _jsonable(b)] for a, b in self.edges],
            "faces": [
                {
                    "id": _jsonable(f.id),
                    "cycle": [_jsonable(v) for v in f.cycle],
                    "edges": list(f.edges),
                }
                for f in self.faces
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, Tri):
        return x.to_json()
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    return x


def _hashable(x):
    if isinstance(x, list):
        return tuple(_hashable(y) for y in x)
    return x


def assemble(face_cycles, kind="general", params=None, extra_edges=(), vertices=None) -> LatticeGraph:
    """Build a validated graph from counter-clockwise face cycles.

    ``face_cycles`` is a sequence of ``(face_id, vertex_cycle)``. Extra edges
    lying in no bounded face may be supplied separately.
    """
    directed = {}
    edge_set = set()
    for fid, cycle in face_cycles:
        n = len(cycle)
        if n < 2 or len(set(cycle)) != n:
            raise ConstructionInvariantViolated(f"face {fid!r} has a non-simple boundary {cycle!r}")
        for k in range(n):
            a, b = cycle[k], cycle[(k + 1) % n]
            if (a, b) in directed:
                raise ConstructionInvariantViolated(
                    f"edge {a!r}->{b!r} traversed counter-clockwise by two faces"
                )
            directed[(a, b)] = fid
            edge_set.add((a, b) if a < b else (b, a))
    for a, b in extra_edges:
        edge_set.add((a, b) if a < b else (b, a))
    edges = tuple(sorted(edge_set))
    edge_index = {e: k for k, e in enumerate(edges)}
    verts = set(vertices or ())
    for a, b in edges:
        verts.add(a)
        verts.add(b)

    faces = []
    face_index = {}
    left = [OUTER] * len(edges)
    right = [OUTER] * len(edges)
    for fi, (fid, cycle) in enumerate(face_cycles):
        n = len(cycle)
        eids, signs = [], []
        for k in range(n):
            a, b = cycle[k], cycle[(k + 1) % n]
            sign = a < b
            e = edge_index[(a, b) if sign else (b, a)]
            eids.append(e)
            signs.append(sign)
            if sign:
                left[e] = fi
            else:
                right[e] = fi
        if fid in face_index:
            raise ConstructionInvariantViolated(f"duplicate face id {fid!r}")
        face_index[fid] = fi
        faces.append(Face(fid, tuple(cycle), tuple(eids), tuple(signs)))

    g = LatticeGraph(
        vertices=tuple(sorted(verts)),
        edges=edges,
        faces=tuple(faces),
        kind=kind,
        params=dict(params or {}),
        sides=tuple(zip(left, right)),
        edge_index=edge_index,
        face_index=face_index,
    )
    _check_eulerian(g)
    return g


def _components(vertices, edges) -> int:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in vertices})


def _check_eulerian(g: LatticeGraph) -> None:
    odd = [v for v, d in g.degree().items() if d % 2]
    if odd:
        raise NotEulerian(f"vertices with odd degree: {odd[:6]!r}")
    comps = _components(g.vertices, g.edges)
    euler = len(g.vertices) - len(g.edges) + g.n_faces + 1
    if euler != 1 + comps:
        raise ConstructionInvariantViolated(
            f"Euler characteristic {euler} does not match {comps} component(s)"
        )


def _face_components(faces: set) -> list:
    seen, comps = set(), []
    for t in sorted(faces):
        if t in seen:
            continue
        comp, stack = [], [t]
        seen.add(t)
        while stack:
            s = stack.pop()
            comp.append(s)
            for n in s.neighbors():
                if n in faces and n not in seen:
                    seen.add(n)
                    stack.append(n)
        comps.append(comp)
    return comps


def _holes(faces: set) -> list:
    """Edge-connected regions of missing triangles enclosed by ``faces``."""
    ii = [t.i for t in faces]
    jj = [t.j for t in faces]
    i0, i1 = min(ii) - 2, max(ii) + 2
    j0, j1 = min(jj) - 2, max(jj) + 2

    def inside(t):
        return i0 <= t.i <= i1 and j0 <= t.j <= j1

    outside = set()
    stack = []
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            if i in (i0, i1) or j in (j0, j1):
                for u in (True, False):
                    t = Tri(i, j, u)
                    if t not in faces:
                        outside.add(t)
                        stack.append(t)
    while stack:
        t = stack.pop()
        for n in t.neighbors():
            if inside(n) and n not in faces and n not in outside:
                outside.add(n)
                stack.append(n)
    missing = set()
    for t in faces:
        for n in t.neighbors():
            if n not in faces and n not in outside:
                missing.add(n)
    # grow each enclosed region to its full extent
    holes, seen = [], set()
    for t in sorted(missing):
        if t in seen:
            continue
        comp, stack = set([t]), [t]
        seen.add(t)
        while stack:
            s = stack.pop()
            for n in s.neighbors():
                if n not in faces and n not in seen:
                    seen.add(n)
                    comp.add(n)
                    stack.append(n)
        holes.append(comp)
    return holes


def _hole_cycle(hole: set, faces: set) -> tuple:
    succ = {}
    for t in hole:
        for n in t.neighbors():
            if n in faces:
                a, b = _shared_edge(t, n)
                if a in succ:
                    raise ConstructionInvariantViolated(
                        f"hole boundary is not a simple cycle at vertex {a!r}"
                    )
                succ[a] = b
    start = min(succ)
    cycle, v = [start], succ[start]
    while v != start:
        cycle.append(v)
        v = succ[v]
    if len(cycle) != len(succ):
        raise ConstructionInvariantViolated("hole boundary splits into several cycles")
    return tuple(cycle)


def _shared_edge(t: Tri, n: Tri) -> tuple:
    """The edge of ``t`` shared with ``n``, directed counter-clockwise on ``t``."""
    vs = t.vertices()
    ns = set(n.vertices())
    for k in range(3):
        a, b = vs[k], vs[(k + 1) % 3]
        if a in ns and b in ns:
            return a, b
    raise ValueError(f"{t} and {n} are not adjacent")


def _check_region(faces) -> set:
    faces = set(faces)
    if not faces:
        raise ValidationError("empty face set")
    if not all(isinstance(t, Tri) for t in faces):
        faces = {t if isinstance(t, Tri) else Tri(*t) for t in faces}
    if len(_face_components(faces)) > 1:
        raise Disconnected("faces are not edge-connected")
    return faces


def build_solid(faces: Iterable[Tri], kind: str = "solid", params=None) -> LatticeGraph:
    faces = _check_region(faces)
    if _holes(faces):
        raise NotSimplyConnected("the face set encloses missing triangles")
    cycles = [(t, t.vertices()) for t in sorted(faces)]
    return assemble(cycles, kind=kind, params=params)


def build_with_holes(faces: Iterable[Tri]) -> LatticeGraph:
    """Like :func:`build_solid`, but each enclosed gap becomes one large face."""
    faces = _check_region(faces)
    cycles = [(t, t.vertices()) for t in sorted(faces)]
    for n, hole in enumerate(sorted(_holes(faces), key=min)):
        cycles.append((("hole", n), _hole_cycle(hole, faces)))
    return assemble(cycles, kind="holes")


def g_ring_faces(k: int) -> set:
    """Faces within crossing distance ``k - 1`` of the up-triangle at the origin."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    centre = up(0, 0)
    ball = {centre}
    frontier = [centre]
    for _ in range(k - 1):
        nxt = []
        for t in frontier:
            for n in t.neighbors():
                if n not in ball:
                    ball.add(n)
                    nxt.append(n)
        frontier = nxt
    return ball


def build_g_ring(k: int) -> LatticeGraph:
    """Smallest solid region containing a face whose maximum potential is ``k``.

    ``G_1`` is a single triangle and ``G_{k+1}`` adds every face adjacent to
    the boundary of ``G_k``; the central face is ``up(0, 0)``.
    """
    g = build_solid(g_ring_faces(k), kind="g_ring", params={"k": k})
    expected = 1 + 3 * k * (k - 1) // 2
    if g.n_faces != expected:
        raise ConstructionInvariantViolated(f"G_{k} has {g.n_faces} faces, expected {expected}")
    return g


def triangle_region(side: int, i0: int = 0, j0: int = 0) -> set:
    """Faces of the up-pointing triangle of the given side length."""
    faces = set()
    for j in range(side):
        for i in range(side - j):
            faces.add(up(i0 + i, j0 + j))
            if i < side - j - 1:
                faces.add(down(i0 + i, j0 + j))
    return faces


def h_family_cycles(N: int) -> tuple:
    """Face cycles of ``H_N`` laid out as an annulus around the central face.

    Vertex classes: ``("v", t)`` on the inner cycle (``6(2N+1)`` of them),
    ``("u", t)`` on the outer cycle (``6(2N+2)``) and ``("w", t)`` outside
    it (``6N``). The third cycle zig-zags ``v, u, w, u, v, ...``; each of the
    six sectors holds ``N`` repetitions, the first spanning three inner edges
    and the last closing with three outer edges so the counts come out exact.
    """
    nv, nu, nw = 6 * (2 * N + 1), 6 * (2 * N + 2), 6 * N

    def v(t):
        return ("v", t % nv + 1)

    def u(t):
        return ("u", t % nu + 1)

    cycles = [("C", tuple(v(t) for t in range(nv)))]
    a_faces, b_faces, c_faces = [], [], []
    vi = ui = 0
    label = 0
    for _sector in range(6):
        for p in range(N):
            label += 1
            a_span = 3 if p == 0 else 2
            b_span = 3 if p == N - 1 else 1
            w = ("w", label)
            a_cycle = tuple(v(vi + s) for s in range(a_span, -1, -1)) + (u(ui), u(ui + 1))
            c_cycle = (u(ui + 1), u(ui), w)
            vc = vi + a_span
            b_cycle = (v(vc),) + tuple(u(ui + 1 + s) for s in range(b_span + 1))
            a_faces.append((f"A{label}", a_cycle))
            c_faces.append((f"C{label}", c_cycle))
            b_faces.append((f"B{label}", b_cycle))
            vi += a_span
            ui += 1 + b_span
    assert vi == nv and ui == nu and label == nw
    return tuple(cycles + a_faces + b_faces + c_faces)


def build_h_family(N: int) -> LatticeGraph:
    if N < 1:
        raise ValidationError("N must be >= 1")
    g = assemble(h_family_cycles(N), kind="h_family", params={"n": N})
    check_h_labeling(g, N)
    return g


def check_h_labeling(g: LatticeGraph, N: int) -> None:
    """Verify the C / A_i / B_i / C_i dual adjacency of ``H_N``."""
    k = 6 * N

    def idx(name):
        return g.face_index[name]

    def nbrs(name):
        return {g.faces[x].id for x in g.face_neighbors(idx(name))}

    problems = []
    if g.n_faces != 1 + 3 * k:
        problems.append(f"{g.n_faces} faces, expected {1 + 3 * k}")
    if nbrs("C") != {f"A{i}" for i in range(1, k + 1)}:
        problems.append("C is not adjacent to exactly the A faces")
    if g.is_boundary_face(idx("C")):
        problems.append("C touches the outer face")
    for i in range(1, k + 1):
        prev = (i - 2) % k + 1
        nxt = i % k + 1
        if nbrs(f"A{i}") != {"C", f"B{prev}", f"B{i}", f"C{i}"}:
            problems.append(f"A{i} has neighbours {sorted(nbrs(f'A{i}'))}")
        if g.is_boundary_face(idx(f"A{i}")):
            problems.append(f"A{i} touches the outer face")
        if nbrs(f"B{i}") != {f"A{i}", f"A{nxt}"}:
            problems.append(f"B{i} has neighbours {sorted(nbrs(f'B{i}'))}")
        if nbrs(f"C{i}") != {f"A{i}"}:
            problems.append(f"C{i} has neighbours {sorted(nbrs(f'C{i}'))}")
        for name in (f"B{i}", f"C{i}"):
            if not g.is_boundary_face(idx(name)):
                problems.append(f"{name} is not on the outer boundary")
    if problems:
        raise ConstructionInvariantViolated("; ".join(problems))


def remove_face_edges(g: LatticeGraph, fi: int) -> LatticeGraph:
    """Delete the boundary edges of face ``fi`` and any vertex left isolated.

    Faces sharing an edge with ``fi`` merge into the outer face.
    """
    gone = set(g.faces[fi].edges)
    keep_faces = [
        (f.id, f.cycle) for f in g.faces if not gone.intersection(f.edges)
    ]
    extra = [g.edges[e] for e in range(g.n_edges) if e not in gone]
    return assemble(keep_faces, kind="general", params={"peeled_from": g.kind}, extra_edges=extra)


def graph_from_spec(spec: dict) -> LatticeGraph:
    """Build a graph from the JSON graph description used by the CLI."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("graph spec must be an object with a 'kind' field")
    if "vertices" in spec and "edges" in spec:
        return graph_from_dict(spec)
    kind = spec["kind"]
    if kind in ("solid", "holes"):
        raw = spec.get("faces")
        if not isinstance(raw, list):
            raise ValidationError("'faces' must be a list of [i, j, 'up'|'down']")
        faces = []
        for pos, item in enumerate(raw):
            try:
                faces.append(Tri.from_json(item))
            except ValidationError as exc:
                raise ValidationError(f"faces[{pos}]: {exc}") from None
        return build_solid(faces) if kind == "solid" else build_with_holes(faces)
    if kind == "h_family":
        n = spec.get("n")
        if not isinstance(n, int) or n < 1:
            raise ValidationError("h_family needs a positive integer 'n'")
        return build_h_family(n)
    if kind == "g_ring":
        k = spec.get("k")
        if not isinstance(k, int) or k < 1:
            raise ValidationError("g_ring needs a positive integer 'k'")
        return build_g_ring(k)
    if kind == "triangle":
        side = spec.get("side")
        if not isinstance(side, int) or side < 1:
            raise ValidationError("triangle needs a positive integer 'side'")
        return build_solid(triangle_region(side))
    raise ValidationError(f"unknown graph kind {kind!r}")


def graph_from_dict(d: dict) -> LatticeGraph:
    """Inverse of :meth:`LatticeGraph.to_dict`."""
    try:
        cycles = [(_hashable(f["id"]), tuple(_hashable(v) for v in f["cycle"])) for f in d["faces"]]
        verts = [_hashable(v) for v in d["vertices"]]
        edges = [(_hashable(a), _hashable(b)) for a, b in d["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed serialized graph: {exc}") from None
    cycles = [(Tri(*fid[:2], fid[2] == "up") if _looks_like_tri(fid) else fid, c) for fid, c in cycles]
    return assemble(cycles, kind=d.get("kind", "general"), params=d.get("params"), extra_edges=edges, vertices=verts)


def _looks_like_tri(fid) -> bool:
    return isinstance(fid, tuple) and len(fid) == 3 and fid[2] in ("up", "down")
