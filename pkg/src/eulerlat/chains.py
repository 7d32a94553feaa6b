"""The face-reversal chain, the tower-moves chain and seeded simulation.

Both chains are lazy: with probability 1/2 nothing happens, otherwise a
bounded face is drawn uniformly. A directed face is always reversed. In the
tower-moves chain an undirected face that starts a tower of length ``h``
additionally reverses the tower's boundary cycle with probability
``1/(3h)``.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NonSolidWarning, UnknownFace, WalkDidNotTerminate
from .lattice import OUTER, LatticeGraph, Tri
from .orientation import (
    CCW,
    CW,
    NOT_DIRECTED,
    Orientation,
    extremal_orientation,
    face_state,
)

FACE = "face"
TOWER = "tower"
CHAIN_KINDS = (FACE, TOWER)
SOLID_KINDS = ("solid", "g_ring")


class RngStream:
    """Seeded PCG64 stream; ``(seed, stream)`` pairs give independent replicas."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def random(self) -> float:
        return self.gen.random()

    def integers(self, n: int) -> int:
        return int(self.gen.integers(n))

    def spawn(self, replica: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + replica + 1)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class Tower:
    """Faces ``F_1 .. F_h`` (bottom to top) and the blocking edges between them."""

    faces: tuple
    blocking_edges: tuple
    cycle: tuple
    chirality: int

    @property
    def length(self) -> int:
        return len(self.faces)

    def reverse(self, e: Orientation) -> Orientation:
        return e.flip(self.cycle)


@dataclass(frozen=True)
class StepOutcome:
    kind: str  # "hold", "face", "tower"
    chosen_face: int | None = None
    tower: Tower | None = None


HOLD = StepOutcome("hold")


def resolve_face(g: LatticeGraph, f) -> int:
    if isinstance(f, (int, np.integer)) and not isinstance(f, bool):
        if 0 <= f < g.n_faces:
            return int(f)
        raise UnknownFace(f"face index {f} out of range")
    try:
        return g.face_index[f]
    except (KeyError, TypeError):
        raise UnknownFace(f"{f!r} is not a bounded face") from None


def blocking_edge(g: LatticeGraph, bits: bytes, fi: int):
    """The single disagreeing edge of an almost-directed face, else ``None``."""
    face = g.faces[fi]
    agree = [bits[e] == s for e, s in zip(face.edges, face.signs)]
    n = len(agree)
    a = sum(agree)
    if a == n - 1 and n > 2:
        return face.edges[agree.index(False)]
    if a == 1 and n > 2:
        return face.edges[agree.index(True)]
    return None


def _tower(g: LatticeGraph, faces: list, blocks: list, chirality: int) -> Tower:
    parity = Counter()
    for fi in faces:
        for e in g.faces[fi].edges:
            parity[e] ^= 1
    cycle = tuple(sorted(e for e, p in parity.items() if p))
    return Tower(tuple(faces), tuple(blocks), cycle, chirality)


def tower_from(g: LatticeGraph, bits: bytes, start: int):
    state = face_state(g, bits, start)
    if state != NOT_DIRECTED:
        return _tower(g, [start], [], state)
    faces, blocks = [start], []
    visited = {start}
    prev = None
    cur = start
    for _ in range(g.n_faces + 1):
        blk = blocking_edge(g, bits, cur)
        if blk is None or blk == prev:
            return None
        nxt = g.across(cur, blk)
        if nxt == OUTER:
            return None
        if nxt in visited:
            raise WalkDidNotTerminate(f"tower walk from face {start} revisited face {nxt}")
        visited.add(nxt)
        faces.append(nxt)
        blocks.append(blk)
        state = face_state(g, bits, nxt)
        if state != NOT_DIRECTED:
            return _tower(g, faces, blocks, state)
        prev, cur = blk, nxt
    raise WalkDidNotTerminate(f"tower walk from face {start} exceeded {g.n_faces} faces")


def find_tower(e: Orientation, start) -> Tower | None:
    return tower_from(e.graph, e.bits, resolve_face(e.graph, start))


def _direction(a, b) -> tuple:
    di, dj = b[0] - a[0], b[1] - a[1]
    return (di, dj) if (di, dj) > (0, 0) else (-di, -dj)


def tower_is_collinear(g: LatticeGraph, t: Tower) -> bool:
    """All middle faces of the tower keep their free edge parallel to one lattice direction."""
    if not all(isinstance(g.faces[fi].id, Tri) for fi in t.faces):
        return True
    free = set()
    for pos in range(1, t.length - 1):
        face = g.faces[t.faces[pos]]
        used = {t.blocking_edges[pos - 1], t.blocking_edges[pos]}
        for e in face.edges:
            if e not in used:
                free.add(_direction(*g.edges[e]))
    return len(free) <= 1


def move_at(g: LatticeGraph, bits: bytes, fi: int, kind: str):
    """The move attempted when face ``fi`` is drawn: ``(acceptance, new_bits, outcome)``.

    ``acceptance`` is an exact :class:`Fraction`; it is 0 for a hold.
    """
    state = face_state(g, bits, fi)
    if state != NOT_DIRECTED:
        return Fraction(1), _flip(bits, g.faces[fi].edges), StepOutcome(FACE, fi)
    if kind == TOWER:
        t = tower_from(g, bits, fi)
        if t is not None and t.length >= 2:
            return Fraction(1, 3 * t.length), _flip(bits, t.cycle), StepOutcome(TOWER, fi, t)
    return Fraction(0), bits, StepOutcome("hold", fi)


def move_direction(g: LatticeGraph, bits: bytes, outcome: StepOutcome) -> int:
    """+1 if the move raises potentials (reverses a counter-clockwise cycle), -1 otherwise."""
    if outcome.kind == FACE:
        return 1 if face_state(g, bits, outcome.chosen_face) == CCW else -1
    if outcome.kind == TOWER:
        return 1 if outcome.tower.chirality == CCW else -1
    return 0


def _flip(bits: bytes, edges) -> bytes:
    buf = bytearray(bits)
    for k in edges:
        buf[k] ^= 1
    return bytes(buf)


def _step(g: LatticeGraph, bits: bytes, kind: str, rng: RngStream):
    if rng.random() < 0.5:
        return bits, HOLD
    fi = rng.integers(g.n_faces)
    acc, new, outcome = move_at(g, bits, fi, kind)
    if acc == 1:
        return new, outcome
    if acc == 0:
        return bits, StepOutcome("hold", fi)
    if rng.random() < acc:
        return new, outcome
    return bits, StepOutcome("hold", fi)


def step_face_reversal(e: Orientation, rng: RngStream):
    bits, outcome = _step(e.graph, e.bits, FACE, rng)
    return Orientation(e.graph, bits), outcome


def step_tower_moves(e: Orientation, rng: RngStream):
    bits, outcome = _step(e.graph, e.bits, TOWER, rng)
    return Orientation(e.graph, bits), outcome


def run_chain(e0: Orientation, kind: str, steps: int, rng: RngStream, stats: dict | None = None) -> Orientation:
    """Apply ``steps`` transitions; per-outcome counts are added to ``stats`` if given."""
    if kind not in CHAIN_KINDS:
        raise ValueError(f"unknown chain kind {kind!r}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    g = e0.graph
    bits = e0.bits
    counts = Counter()
    for _ in range(steps):
        bits, outcome = _step(g, bits, kind, rng)
        counts[outcome.kind] += 1
    if stats is not None:
        for k, v in counts.items():
            stats[k] = stats.get(k, 0) + v
        stats["steps"] = stats.get("steps", 0) + steps
    return Orientation(g, bits)


def mixing_budget(f: int, eps: float, kind: str, c: float = 1.0) -> int:
    """Step budget ``c * f^6 * ln(1/eps)`` (face chain) or ``c * f^4 * ln(1/eps)`` (tower chain)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    power = 6 if kind == FACE else 4
    return max(0, math.ceil(c * f**power * math.log(1 / eps) - 1e-9))


def sample_uniform(g: LatticeGraph, eps: float, kind: str, rng: RngStream, c: float = 1.0, steps: int | None = None) -> Orientation:
    """Run the chosen chain from ``E_min`` for its mixing budget and return the final state."""
    if g.kind not in SOLID_KINDS:
        warnings.warn(f"mixing bound not established for kind {g.kind!r}", NonSolidWarning, stacklevel=2)
    if steps is None:
        steps = mixing_budget(g.n_faces, eps, kind, c)
    return run_chain(extremal_orientation(g, "min"), kind, steps, rng)


class BatchChain:
    """Many independent replicas of one chain advanced together with numpy.

    Replica ``r`` uses the same transition rule as :func:`step_face_reversal`
    or :func:`step_tower_moves`; only the random stream differs.
    """

    def __init__(self, g: LatticeGraph, kind: str, replicas: int, gen: np.random.Generator, start: bytes | None = None):
        if kind not in CHAIN_KINDS:
            raise ValueError(f"unknown chain kind {kind!r}")
        self.g = g
        self.kind = kind
        self.gen = gen
        width = max(len(f.edges) for f in g.faces)
        nf = g.n_faces
        self.size = np.array([len(f.edges) for f in g.faces])
        self.fe = np.zeros((nf, width), dtype=np.int64)
        self.sg = np.zeros((nf, width), dtype=np.uint8)
        self.mask = np.zeros((nf, width), dtype=bool)
        self.nb = np.full((nf, width), OUTER, dtype=np.int64)
        for fi, face in enumerate(g.faces):
            n = len(face.edges)
            self.fe[fi, :n] = face.edges
            self.sg[fi, :n] = face.signs
            self.mask[fi, :n] = True
            self.nb[fi, :n] = [g.across(fi, e) for e in face.edges]
        if start is None:
            start = extremal_orientation(g, "min").bits
        self.bits = np.tile(np.frombuffer(start, dtype=np.uint8), (replicas, 1))

    def _agree(self, rows, faces):
        vals = self.bits[rows[:, None], self.fe[faces]]
        return (vals == self.sg[faces]) & self.mask[faces]

    def step(self, steps: int = 1) -> None:
        R = self.bits.shape[0]
        nf = self.g.n_faces
        for _ in range(steps):
            move = self.gen.random(R) >= 0.5
            face = self.gen.integers(nf, size=R)
            u = self.gen.random(R)
            self.advance(move, face, u)

    def advance(self, move, face, u, coin=None) -> np.ndarray:
        """Apply one transition per replica from supplied randomness.

        ``move`` selects the replicas that act, ``face`` the drawn face and ``u``
        the acceptance uniform. With ``coin`` (+1 up / -1 down per replica) a
        move is taken only if its direction matches. Returns the per-replica
        direction actually applied (0 for a hold).
        """
        R = self.bits.shape[0]
        applied = np.zeros(R, dtype=np.int8)
        rows = np.flatnonzero(move)
        if rows.size == 0:
            return applied
        faces = face[rows]
        agree = self._agree(rows, faces)
        count = agree.sum(axis=1)
        size = self.size[faces]
        directed = (count == size) | (count == 0)
        sign = np.where(count == size, 1, -1).astype(np.int8)
        ok = directed.copy()
        if coin is not None:
            ok &= sign == coin[rows]
        if ok.any():
            self._flip_faces(rows[ok], faces[ok])
            applied[rows[ok]] = sign[ok]
        if self.kind == TOWER:
            und = ~directed
            if und.any():
                r = rows[und]
                found, length, flips, top_sign = self._towers(r, faces[und], agree[und], count[und])
                take = found & (u[r] < 1.0 / (3.0 * length))
                if coin is not None:
                    take &= top_sign == coin[r]
                if take.any():
                    self.bits[r[take]] ^= flips[take]
                    applied[r[take]] = top_sign[take]
        return applied

    def _flip_faces(self, rows, faces):
        for k in range(self.fe.shape[1]):
            m = self.mask[faces, k]
            self.bits[rows[m], self.fe[faces[m], k]] ^= 1

    def _towers(self, rows, faces, agree, count):
        width = self.fe.shape[1]
        flips = np.zeros((rows.size, self.bits.shape[1]), dtype=np.uint8)
        idx = np.arange(rows.size)
        length = np.ones(rows.size, dtype=np.int64)
        active = np.ones(rows.size, dtype=bool)
        found = np.zeros(rows.size, dtype=bool)
        top_sign = np.zeros(rows.size, dtype=np.int8)
        prev = np.full(rows.size, -1, dtype=np.int64)
        cur = faces.copy()
        cur_agree, cur_count = agree, count
        for _ in range(self.g.n_faces + 1):
            if not active.any():
                break
            a = active
            size = self.size[cur[a]]
            maj_ccw = cur_count[a] == size - 1
            maj_cw = cur_count[a] == 1
            almost = (maj_ccw | maj_cw) & (size > 2)
            # slot of the blocking edge: the disagreeing one under the majority
            odd = np.where(maj_ccw[:, None], ~cur_agree[a], cur_agree[a]) & self.mask[cur[a]]
            slot = odd.argmax(axis=1)
            blk = self.fe[cur[a], slot]
            nxt = self.nb[cur[a], slot]
            ok = almost & (blk != prev[a]) & (nxt != OUTER)
            sub = idx[a]
            stop = sub[~ok]
            active[stop] = False
            sub = sub[ok]
            if sub.size == 0:
                break
            # accumulate the current face into the cycle
            for k in range(width):
                m = self.mask[cur[sub], k]
                flips[sub[m], self.fe[cur[sub[m]], k]] ^= 1
            prev[sub] = blk[ok]
            cur[sub] = nxt[ok]
            length[sub] += 1
            cur_agree_full = self._agree(rows[sub], cur[sub])
            cnt = cur_agree_full.sum(axis=1)
            top = (cnt == self.size[cur[sub]]) | (cnt == 0)
            done = sub[top]
            for k in range(width):
                m = self.mask[cur[done], k]
                flips[done[m], self.fe[cur[done[m]], k]] ^= 1
            found[done] = True
            top_sign[done] = np.where(cnt[top] == self.size[cur[done]], 1, -1)
            active[done] = False
            cur_agree = np.zeros((rows.size, width), dtype=bool)
            cur_count = np.zeros(rows.size, dtype=np.int64)
            cur_agree[sub] = cur_agree_full
            cur_count[sub] = cnt
        else:
            raise WalkDidNotTerminate("batched tower walk exceeded the face count")
        return found, length, flips, top_sign

    def directed(self, fi: int) -> np.ndarray:
        """Boolean per replica: is face ``fi`` directed right now?"""
        face = self.g.faces[fi]
        vals = self.bits[:, list(face.edges)] == np.array(face.signs, dtype=np.uint8)
        c = vals.sum(axis=1)
        return (c == len(face.edges)) | (c == 0)

    def states(self) -> list:
        return [row.tobytes() for row in self.bits]
