"""Crossover gadgets and the interpolation that recovers ``#EO`` of a drawn graph.

A crossing of edges ``{x, y}`` and ``{u, v}`` is replaced by ``H_k``:
``H_0`` is a vertex ``s`` joined to ``x, u, y, v``; ``H_k`` wraps ``H_{k-1}``
in a 4-cycle ``a_x a_u a_y a_v`` whose vertex ``a_t`` takes over the
terminal edge towards ``t`` and is joined to ``t``. For one terminal
pattern this layer has 4 completions leading to a valid inner pattern and
2 (valid outer) or 3 (invalid outer) leading to an invalid one, which is
where the recurrences come from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .counting import count_exact_bruteforce
from .errors import NonIntegerCoefficients, OracleFailure, ValidationError

ROLES = ("x", "u", "y", "v")


@dataclass(frozen=True)
class DrawnGraph:
    """A graph plus a drawing summarised by its crossing pairs ``((x, y), (u, v))``."""

    vertices: tuple
    edges: tuple
    crossings: tuple = ()

    def __post_init__(self):
        es = {frozenset(e) for e in self.edges}
        seen = set()
        for pos, (e1, e2) in enumerate(self.crossings):
            for e in (e1, e2):
                key = frozenset(e)
                if key not in es:
                    raise ValidationError(f"crossings[{pos}]: {tuple(e)!r} is not an edge")
                if key in seen:
                    raise ValidationError(f"crossings[{pos}]: edge {tuple(e)!r} is crossed twice")
                seen.add(key)
            if len(set(e1) | set(e2)) != 4:
                raise ValidationError(f"crossings[{pos}]: crossing edges must have four distinct ends")

    @property
    def l(self) -> int:
        return len(self.crossings)

    @classmethod
    def from_dict(cls, d: dict) -> "DrawnGraph":
        try:
            vertices = tuple(d["vertices"])
            edges = tuple(tuple(e) for e in d["edges"])
            crossings = tuple((tuple(a), tuple(b)) for a, b in d.get("crossings", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad drawing: {exc}") from None
        for pos, e in enumerate(edges):
            if len(e) != 2:
                raise ValidationError(f"edges[{pos}]: expected a vertex pair")
        return cls(vertices, edges, crossings)

    def to_dict(self) -> dict:
        return {
            "kind": "drawing",
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edges],
            "crossings": [[list(a), list(b)] for a, b in self.crossings],
        }


@dataclass(frozen=True)
class PlainGraph:
    vertices: tuple
    edges: tuple


def _gadget(tag, k: int, ends: dict):
    """Vertices and edges of ``H_k`` attached to ``ends`` (role -> outer vertex)."""
    centre = ("s", tag)
    verts = [centre]
    edges = []
    inner = {t: centre for t in ROLES}
    for level in range(1, k + 1):
        ring = {t: ("g", tag, level, t) for t in ROLES}
        verts.extend(ring[t] for t in ROLES)
        for t in ROLES:
            edges.append((ring[t], inner[t]))
        for a, b in zip(ROLES, ROLES[1:] + ROLES[:1]):
            edges.append((ring[a], ring[b]))
        inner = ring
    for t in ROLES:
        edges.append((ends[t], inner[t]))
    return verts, edges


def planarize(d: DrawnGraph, k: int) -> PlainGraph:
    if k < 0:
        raise ValueError("k must be >= 0")
    crossed = set()
    for e1, e2 in d.crossings:
        crossed.add(frozenset(e1))
        crossed.add(frozenset(e2))
    verts = list(d.vertices)
    edges = [tuple(e) for e in d.edges if frozenset(e) not in crossed]
    for c, ((x, y), (u, v)) in enumerate(d.crossings):
        gv, ge = _gadget(c, k, {"x": x, "u": u, "y": y, "v": v})
        verts.extend(gv)
        edges.extend(ge)
    return PlainGraph(tuple(verts), tuple(edges))


@dataclass(frozen=True)
class GadgetCounts:
    k: int
    x: int
    y: int


def gadget_counts(k: int) -> GadgetCounts:
    if k < 0:
        raise ValueError("k must be >= 0")
    x, y = 1, 1
    for _ in range(k):
        x, y = 4 * x + 2 * y, 4 * x + 3 * y
    return GadgetCounts(k, x, y)


def is_valid_pattern(pattern: dict) -> bool:
    """Terminal pattern (role -> True if the edge points into the box) routes both edges through."""
    return pattern["x"] != pattern["y"] and pattern["u"] != pattern["v"]


def gadget_census(k: int) -> dict:
    """Brute-force completions of ``H_k`` for each balanced terminal pattern.

    Returns ``{pattern_tuple: completions}`` with patterns ordered as ``ROLES``.
    """
    ends = {t: ("end", t) for t in ROLES}
    verts, edges = _gadget("census", k, ends)
    internal = [e for e in edges if not any(isinstance(w, tuple) and w[0] == "end" for w in e)]
    terminal = {t: e[1] for e in edges for t in ROLES if e[0] == ends[t]}
    out = {}
    for bits in product((True, False), repeat=4):
        pattern = dict(zip(ROLES, bits))
        if sum(bits) != 2:
            continue
        # an edge into the box adds one incoming arc at its inner vertex
        target = {w: 0 for w in verts}
        for t in ROLES:
            target[terminal[t]] -= 1 if pattern[t] else -1
        out[bits] = count_with_excess(verts, internal, target)
    return out


def count_with_excess(vertices, edges, target: dict) -> int:
    """Orientations whose in-minus-out at each vertex equals ``target``."""
    remaining = {v: 0 for v in vertices}
    for a, b in edges:
        remaining[a] += 1
        remaining[b] += 1
    states = {(): 1}
    for a, b in edges:
        remaining[a] -= 1
        remaining[b] -= 1
        nxt = {}
        for st, n in states.items():
            bal = dict(st)
            for tail, head in ((a, b), (b, a)):
                new = dict(bal)
                new[tail] = new.get(tail, 0) - 1
                new[head] = new.get(head, 0) + 1
                if any(abs(new[w] - target.get(w, 0)) > remaining[w] for w in (tail, head)):
                    continue
                for w in (tail, head):
                    if remaining[w] == 0:
                        del new[w]
                key = tuple(sorted(new.items(), key=repr))
                nxt[key] = nxt.get(key, 0) + n
        states = nxt
    return sum(states.values())


def census_counts(k: int) -> GadgetCounts:
    """``(x_k, y_k)`` from the census; raises if patterns in one class disagree."""
    census = gadget_census(k)
    valid = {n for p, n in census.items() if is_valid_pattern(dict(zip(ROLES, p)))}
    invalid = {n for p, n in census.items() if not is_valid_pattern(dict(zip(ROLES, p)))}
    if len(valid) != 1 or len(invalid) != 1:
        raise OracleFailure(f"census not constant on pattern classes: valid {valid}, invalid {invalid}")
    return GadgetCounts(k, valid.pop(), invalid.pop())


@dataclass
class Recovery:
    evaluations: list  # (k, #EO(G_k))
    coefficients: list  # N_0 .. N_l
    eo: int
    residual: Fraction = Fraction(0)
    sizes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "evaluations": [{"k": k, "count": str(c)} for k, c in self.evaluations],
            "coefficients": [str(n) for n in self.coefficients],
            "eo": str(self.eo),
            "residual": str(self.residual),
            "sizes": self.sizes,
        }


def _poly_mul_linear(poly, root):
    out = [Fraction(0)] * (len(poly) + 1)
    for i, c in enumerate(poly):
        out[i + 1] += c
        out[i] -= c * root
    return out


def lagrange_coefficients(points) -> list:
    """Monomial coefficients of the interpolating polynomial through ``(z, p(z))`` pairs."""
    n = len(points)
    coeffs = [Fraction(0)] * n
    for i, (zi, pi) in enumerate(points):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (zj, _) in enumerate(points):
            if j != i:
                basis = _poly_mul_linear(basis, zj)
                denom *= zi - zj
        for t, c in enumerate(basis):
            coeffs[t] += pi * c / denom
    return coeffs


def evaluate(coeffs, z):
    return sum(c * z**i for i, c in enumerate(coeffs))


def _default_counter(graph):
    return count_exact_bruteforce(graph, cap_edges=64).value


def recover_counts(d: DrawnGraph, planar_counter=None) -> Recovery:
    """Interpolate ``p(z) = sum N_i z^i`` from ``#EO(G_k) / y_k^l`` at ``k = 0 .. l+1``."""
    counter = planar_counter or _default_counter
    l = d.l
    evals, points, sizes = [], [], []
    for k in range(l + 2):
        gk = planarize(d, k)
        sizes.append({"k": k, "vertices": len(gk.vertices), "edges": len(gk.edges)})
        try:
            value = int(counter(gk))
        except Exception as exc:
            raise OracleFailure(f"planar counter failed on G_{k}: {exc}") from exc
        gc = gadget_counts(k)
        evals.append((k, value))
        points.append((Fraction(gc.x, gc.y), Fraction(value, gc.y**l)))
    coeffs = lagrange_coefficients(points[: l + 1])
    residual = evaluate(coeffs, points[-1][0]) - points[-1][1]
    if residual:
        raise OracleFailure(f"interpolation residual {residual} at the check point")
    if any(c.denominator != 1 or c < 0 for c in coeffs):
        raise NonIntegerCoefficients(f"coefficients {[str(c) for c in coeffs]} are not non-negative integers")
    ints = [int(c) for c in coeffs]
    return Recovery(evals, ints, ints[-1], residual, sizes)


def k5_drawing() -> DrawnGraph:
    """``K_5`` with vertex 4 inside the quadrilateral 0123; only the diagonals cross."""
    vs = tuple(range(5))
    es = tuple((a, b) for a in vs for b in vs if a < b)
    return DrawnGraph(vs, es, (((0, 2), (1, 3)),))


def circulant_drawing() -> DrawnGraph:
    """The 4-regular circulant ``C_7(1, 2)`` drawn with a single crossing."""
    vs = tuple(range(7))
    es = tuple(sorted({tuple(sorted((i, (i + s) % 7))) for i in vs for s in (1, 2)}))
    return DrawnGraph(vs, es, (((0, 5), (1, 6)),))


__all__ = [
    "DrawnGraph",
    "PlainGraph",
    "GadgetCounts",
    "Recovery",
    "planarize",
    "gadget_counts",
    "gadget_census",
    "census_counts",
    "recover_counts",
    "lagrange_coefficients",
    "k5_drawing",
    "circulant_drawing",
]
