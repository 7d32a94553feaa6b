"""Exact finite-state analysis of the two chains.

Everything here enumerates the full state space, so it is meant for
desk-scale instances: transition kernels in exact rationals, worst-start
total-variation mixing, the central-face cut of ``H_N`` and its closed-form
census, and the congestion constant comparing the two chains.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np

from .chains import FACE, TOWER, move_at, tower_from
from .errors import BudgetExceeded, InvalidArgs, InvalidTower, NoCentralFace
from .lattice import LatticeGraph
from .orientation import (
    NOT_DIRECTED,
    Orientation,
    enumerate_states,
    extremal_orientation,
    face_state,
    potential_values,
)


@dataclass
class TransitionMatrix:
    graph: LatticeGraph
    kind: str
    states: list
    rows: list  # rows[i] = {j: Fraction}
    index: dict = field(repr=False, default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.states)

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i].get(j, Fraction(0))

    def is_symmetric(self) -> bool:
        return all(self.rows[j].get(i) == p for i, row in enumerate(self.rows) for j, p in row.items())

    def is_doubly_stochastic(self) -> bool:
        cols = defaultdict(Fraction)
        for row in self.rows:
            if sum(row.values()) != 1:
                return False
            for j, p in row.items():
                cols[j] += p
        return all(cols[j] == 1 for j in range(self.size))

    def min_diagonal(self) -> Fraction:
        return min(row.get(i, Fraction(0)) for i, row in enumerate(self.rows))

    def support(self) -> set:
        return {(i, j) for i, row in enumerate(self.rows) for j, p in row.items() if i != j and p}

    def dense(self) -> np.ndarray:
        P = np.zeros((self.size, self.size))
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                P[i, j] = float(p)
        return P


def transition_matrix(g: LatticeGraph, kind: str, cap: int = 50_000) -> TransitionMatrix:
    """Exact kernel of the face-reversal (``"face"``) or tower-moves (``"tower"``) chain."""
    try:
        states = enumerate_states(g, cap)
    except BudgetExceeded:
        raise
    index = {s: i for i, s in enumerate(states)}
    pick = Fraction(1, 2 * g.n_faces)
    rows = []
    for i, bits in enumerate(states):
        row = defaultdict(Fraction)
        stay = Fraction(1, 2)
        for fi in range(g.n_faces):
            acc, new, _ = move_at(g, bits, fi, kind)
            if acc:
                row[index[new]] += pick * acc
            stay += pick * (1 - acc)
        row[i] += stay
        rows.append(dict(row))
    return TransitionMatrix(g, kind, states, rows, index)


def tv_profile(m: TransitionMatrix, t_max: int) -> list:
    """Worst-start total-variation distance to uniform for ``t = 0 .. t_max``."""
    P = m.dense()
    n = m.size
    D = np.eye(n)
    out = []
    for _ in range(t_max + 1):
        out.append(0.5 * np.abs(D - 1.0 / n).sum(axis=1).max())
        D = D @ P
    return out


def tv_mixing_time(m: TransitionMatrix, eps: float, t_max: int = 1_000_000) -> int:
    """Smallest ``t`` with worst-start TV distance at most ``eps``.

    Float64 powers; rounding error stays below ``n * t * 1e-16``.
    """
    if eps >= 1:
        return 0
    P = m.dense()
    n = m.size
    D = np.eye(n)
    for t in range(t_max + 1):
        if 0.5 * np.abs(D - 1.0 / n).sum(axis=1).max() <= eps:
            return t
        D = D @ P
    raise BudgetExceeded(f"TV distance still above {eps} after {t_max} steps")


def conductance(m: TransitionMatrix, members) -> Fraction:
    """Flow out of the state set over its stationary mass (uniform stationary law)."""
    inside = set(members)
    flow = sum(p for i in inside for j, p in m.rows[i].items() if j not in inside)
    return Fraction(flow) / len(inside)


# -- the central-face cut of H_N ------------------------------------------------------------


@dataclass
class CutReport:
    k: int
    S_size: int
    boundary_size: int
    omega_size: int | None = None
    ratio: Fraction | None = None
    bound: float | None = None
    census: dict = field(default_factory=dict)
    conductance: Fraction | None = None
    checks: dict = field(default_factory=dict)


def circular_successions(k: int, j: int, m: int) -> int:
    """Number of ``j``-subsets of the ``k``-cycle with exactly ``m`` circular successions."""
    if k < 1 or j < 0 or m < 0 or m > max(j, 0):
        if k >= 1 and j > k:
            return 0
        raise InvalidArgs(f"invalid arguments c({k}, {j}, {m})")
    if j > k:
        return 0
    if j == 0:
        return 1 if m == 0 else 0
    if m < 2 * j - k:
        return 0
    if j == k:
        return 1 if m == k else 0
    if m == j:
        return 0
    value = Fraction(k, j) * comb(j, m) * comb(k - j - 1, j - m - 1)
    assert value.denominator == 1
    return int(value)


def circular_successions_brute(k: int, j: int, m: int) -> int:
    return sum(
        1 for sub in combinations(range(k), j)
        if sum(1 for i in sub if (i + 1) % k in sub) == m
    )


def successions(subset, k: int) -> int:
    s = set(subset)
    return sum(1 for i in s if (i + 1) % k in s)


def cut_census(k: int) -> CutReport:
    """Closed-form sizes of the cut ``S = {phi(C) <= 1}`` for a ring of ``k`` A-faces."""
    if k < 1:
        raise InvalidArgs("k must be >= 1")
    S = 1 + sum(
        2 ** (j + m) * circular_successions(k, j, m) for j in range(k + 1) for m in range(j + 1)
    )
    boundary = 2 ** (2 * k)
    return CutReport(
        k=k,
        S_size=S,
        boundary_size=boundary,
        omega_size=2 * S,
        ratio=Fraction(boundary, S),
        bound=8 * 2 ** (-k / 17),
    )


def hn_cut_census(N: int) -> CutReport:
    """Closed-form census for ``H_N``; its ring of A-faces has ``k = 6N`` members."""
    if N < 1:
        raise InvalidArgs("N must be >= 1")
    return cut_census(6 * N)


def conductance_cut(g: LatticeGraph, m: TransitionMatrix | None = None) -> CutReport:
    """Enumerate the cut ``S = {phi(C) <= 1}`` on an ``H_N`` graph and audit it."""
    if "C" not in g.face_index:
        raise NoCentralFace("graph has no face labelled 'C'")
    states = m.states if m is not None else enumerate_states(g)
    nf = g.n_faces
    c = g.face_index["C"]
    a_faces = sorted(
        (fid for fid in g.face_index if isinstance(fid, str) and fid.startswith("A")),
        key=lambda s: int(s[1:]),
    )
    k = len(a_faces)
    a_idx = [g.face_index[a] for a in a_faces]
    min_bits = extremal_orientation(g, "min").bits
    pots = [potential_values(g, s, min_bits) for s in states]
    pmax = potential_values(g, extremal_orientation(g, "max").bits, min_bits)
    members = [i for i, p in enumerate(pots) if p[c] <= 1]
    member_set = set(members)

    boundary = []
    for i in members:
        bits = states[i]
        if face_state(g, bits, c) != NOT_DIRECTED:
            new = _flip_face(g, bits, c)
            if potential_values(g, new, min_bits)[c] > 1:
                boundary.append(i)
                continue
        if m is not None and any(j not in member_set for j in m.rows[i]):
            boundary.append(i)

    census = defaultdict(int)
    for i in members:
        p = pots[i]
        if p[c] == 1:
            census[frozenset(t for t, a in enumerate(a_idx) if p[a] == 1)] += 1
    census_ok = all(census[I] == 2 ** (len(I) + successions(I, k)) for I in census)
    all_subsets = len(census) == 2**k

    complement = {tuple(pm - v for pm, v in zip(pmax, p)) for p in (pots[i] for i in members)}
    outside = {tuple(pots[i]) for i in range(len(states)) if i not in member_set}

    report = CutReport(
        k=k,
        S_size=len(members),
        boundary_size=len(boundary),
        omega_size=len(states),
        ratio=Fraction(len(boundary), len(members)),
        bound=8 * 2 ** (-k / 17),
        census={tuple(sorted(I)): n for I, n in census.items()},
    )
    if m is not None:
        report.conductance = conductance(m, members)
    report.checks = {
        "half": 2 * len(members) == len(states),
        "complement_bijection": complement == outside,
        "census_matches": census_ok and all_subsets,
        "phi_max_C": pmax[c],
        "faces": nf,
    }
    return report


def _flip_face(g, bits, fi):
    buf = bytearray(bits)
    for e in g.faces[fi].edges:
        buf[e] ^= 1
    return bytes(buf)


# -- comparison of the two chains -------------------------------------------------------------


def tower_decomposition(e: Orientation, t) -> list:
    """Single-face reversals ``F_h, F_{h-1}, ..., F_1`` realising the tower move.

    Returns ``[(orientation_after_step, face_index), ...]`` of length ``h``.
    """
    g = e.graph
    bits = e.bits
    out = []
    for fi in reversed(t.faces):
        if face_state(g, bits, fi) == NOT_DIRECTED:
            raise InvalidTower(f"face {g.faces[fi].id!r} is not directed when its turn comes")
        bits = _flip_face(g, bits, fi)
        out.append((Orientation(g, bits), fi))
    if bits != t.reverse(e).bits:
        raise InvalidTower("face reversals do not compose to the tower reversal")
    return out


@dataclass
class CongestionReport:
    A: Fraction
    per_edge: dict  # (x, y) -> (A_xy, |Gamma(x, y)|)
    closed_form_holds: bool
    max_gamma: int


def congestion_constant(g: LatticeGraph, cap: int = 50_000) -> CongestionReport:
    """Congestion of routing every tower move along its face decomposition."""
    states = enumerate_states(g, cap)
    index = {s: i for i, s in enumerate(states)}
    f = g.n_faces
    gamma = defaultdict(list)  # M-edge -> list of (path length, P~(u, v))
    face_move = Fraction(1, 2 * f)
    for u, bits in enumerate(states):
        for fi in range(f):
            if face_state(g, bits, fi) != NOT_DIRECTED:
                v = index[_flip_face(g, bits, fi)]
                gamma[(u, v)].append((1, face_move))
                continue
            t = tower_from(g, bits, fi)
            if t is None or t.length < 2:
                continue
            prob = Fraction(1, 2 * f) * Fraction(1, 3 * t.length)
            prev = u
            for o, _ in tower_decomposition(Orientation(g, bits), t):
                nxt = index[o.bits]
                gamma[(prev, nxt)].append((t.length, prob))
                prev = nxt
    per_edge = {}
    ok = True
    for xy, members in gamma.items():
        a_xy = 2 * f * sum(length * p for length, p in members)
        per_edge[xy] = (a_xy, len(members))
        if a_xy != 1 + Fraction(len(members) - 1, 3):
            ok = False
    A = max((a for a, _ in per_edge.values()), default=Fraction(0))
    return CongestionReport(A, per_edge, ok, max((n for _, n in per_edge.values()), default=0))


def spectral_gap_lazy(m: TransitionMatrix) -> tuple:
    """(second largest eigenvalue, smallest eigenvalue) of the symmetric kernel."""
    w = np.linalg.eigvalsh(m.dense())
    return float(w[-2]) if len(w) > 1 else 1.0, float(w[0])


def loglog_slope(xs, ys) -> float:
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    return float(np.polyfit(lx, ly, 1)[0])


__all__ = [
    "FACE",
    "TOWER",
    "TransitionMatrix",
    "transition_matrix",
    "tv_profile",
    "tv_mixing_time",
    "conductance",
    "CutReport",
    "circular_successions",
    "circular_successions_brute",
    "cut_census",
    "hn_cut_census",
    "conductance_cut",
    "tower_decomposition",
    "congestion_constant",
    "CongestionReport",
]
