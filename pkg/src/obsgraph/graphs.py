"""Finite graphs, combinatorial Laplacians and observation sets.

Graphs are simple and undirected. The Laplacian follows the convention

    (Δf)(x) = Σ_{y~x} (f(y) − f(x)),

so it is negative semidefinite with zero row sums.

Torus vertices ``(x_0, ..., x_{d-1}) ∈ (ℤ/Nℤ)^d`` are numbered row-major,
``index = Σ_j x_j N^(d-1-j)``, which matches ``numpy.unravel_index`` on shape
``(N,)*d`` in C order.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSetError, InvalidSpecError

__all__ = [
    "GraphSpec",
    "ObservationSet",
    "path",
    "cycle",
    "torus",
    "complete",
    "star",
    "custom",
    "build_graph",
    "adjacency",
    "laplacian",
    "parse_set",
]


@dataclass(frozen=True)
class GraphSpec:
    """Immutable simple graph on vertices ``0..n-1``.

    ``edges`` is a sorted tuple of pairs ``(i, j)`` with ``i < j``.
    ``shape`` is ``(N,)*d`` for tori and ``None`` otherwise.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    label: str = "custom"
    shape: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpecError(f"vertex count must be positive, got {self.n}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise InvalidSpecError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise InvalidSpecError(f"edge ({i}, {j}) out of range for n={self.n}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvalidSpecError(f"duplicate edge {key}")
            seen.add(key)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [list(e) for e in self.edges], "label": self.label})

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        try:
            data = json.loads(text)
            return custom(int(data["n"]), data["edges"], label=data.get("label", "custom"))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"malformed graph JSON: {exc}") from exc


def _normalized(n, pairs, label, shape=None):
    edges = sorted({(min(i, j), max(i, j)) for i, j in pairs})
    return GraphSpec(n=n, edges=tuple(edges), label=label, shape=shape)


def _positive(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidSpecError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def path(n: int) -> GraphSpec:
    n = _positive("n", n)
    return _normalized(n, [(i, i + 1) for i in range(n - 1)], f"path({n})")


def cycle(n: int) -> GraphSpec:
    """Cycle on ``n`` vertices; ``cycle(2)`` is a single edge (no parallel edges)."""
    n = _positive("n", n, minimum=2)
    return _normalized(n, [(i, (i + 1) % n) for i in range(n)], f"cycle({n})", shape=(n,))


def torus(N: int, d: int) -> GraphSpec:
    """Discrete torus (ℤ/Nℤ)^d with nearest-neighbour adjacency ``x ~ x ± e_j``."""
    N = _positive("N", N, minimum=2)
    d = _positive("d", d)
    shape = (N,) * d
    n = N**d
    idx = np.arange(n)
    coords = np.stack(np.unravel_index(idx, shape))
    pairs = []
    for j in range(d):
        nb = coords.copy()
        nb[j] = (nb[j] + 1) % N
        pairs.extend(zip(idx.tolist(), np.ravel_multi_index(tuple(nb), shape).tolist()))
    return _normalized(n, pairs, f"torus({N},{d})", shape=shape)


def complete(n: int) -> GraphSpec:
    n = _positive("n", n)
    return _normalized(n, itertools.combinations(range(n), 2), f"complete({n})")


def star(n: int) -> GraphSpec:
    """Star with centre 0 and ``n - 1`` leaves."""
    n = _positive("n", n)
    return _normalized(n, [(0, i) for i in range(1, n)], f"star({n})")


def custom(n: int, edges, label: str = "custom") -> GraphSpec:
    n = _positive("n", n)
    pairs = [(int(i), int(j)) for i, j in edges]
    # explicit edge lists must not repeat an edge, so validate before normalizing
    spec = GraphSpec(n=n, edges=tuple(pairs), label=label)
    return _normalized(spec.n, spec.edges, label)


_BUILDERS = {"path": path, "cycle": cycle, "complete": complete, "star": star}


def build_graph(descriptor) -> GraphSpec:
    """Build a graph from a descriptor.

    Accepted forms: ``"path:5"``, ``"cycle:8"``, ``"complete:4"``, ``"star:6"``,
    ``"torus:8,2"`` (N, d), a path to a JSON file (``{"n", "edges", "label"}``),
    a JSON string, or a dict with the same keys.
    """
    if isinstance(descriptor, GraphSpec):
        return descriptor
    if isinstance(descriptor, dict):
        return GraphSpec.from_json(json.dumps(descriptor))
    text = str(descriptor).strip()
    if text.startswith("{"):
        return GraphSpec.from_json(text)
    if text.endswith(".json"):
        p = Path(text)
        if not p.exists():
            raise InvalidSpecError(f"graph file not found: {text}")
        return GraphSpec.from_json(p.read_text())
    m = re.fullmatch(r"(\w+)\s*[:(]\s*([-\d\s,x]+?)\s*\)?", text)
    if not m:
        raise InvalidSpecError(f"cannot parse graph descriptor {text!r}")
    kind = m.group(1).lower()
    try:
        args = [int(a) for a in re.split(r"[,x\s]+", m.group(2).strip()) if a]
    except ValueError as exc:
        raise InvalidSpecError(f"bad parameters in {text!r}") from exc
    if kind == "torus":
        if len(args) != 2:
            raise InvalidSpecError("torus descriptor needs N and d, e.g. 'torus:8,2'")
        return torus(*args)
    if kind not in _BUILDERS or len(args) != 1:
        raise InvalidSpecError(f"unknown graph descriptor {text!r}")
    return _BUILDERS[kind](args[0])


def adjacency(graph: GraphSpec) -> np.ndarray:
    A = np.zeros((graph.n, graph.n), dtype=np.int64)
    if graph.edges:
        e = np.asarray(graph.edges)
        A[e[:, 0], e[:, 1]] = 1
        A[e[:, 1], e[:, 0]] = 1
    return A


def laplacian(graph: GraphSpec) -> np.ndarray:
    """Dense Laplacian ``A − D`` as float64.

    Assembled in integer arithmetic so the zero row sums are exact.
    """
    A = adjacency(graph)
    L = A - np.diag(A.sum(axis=1))
    assert not L.sum(axis=1).any()
    out = L.astype(np.float64)
    out.flags.writeable = False
    return out


class ObservationSet:
    """Subset of ``{0..n-1}`` backed by a boolean mask."""

    __slots__ = ("_mask",)

    def __init__(self, mask):
        m = np.array(mask, dtype=bool).reshape(-1)
        m.flags.writeable = False
        self._mask = m

    @classmethod
    def from_indices(cls, n: int, indices) -> "ObservationSet":
        mask = np.zeros(n, dtype=bool)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            bad = idx[(idx < 0) | (idx >= n)]
            raise InvalidSetError(f"indices {bad.tolist()} out of range for n={n}")
        mask[idx] = True
        return cls(mask)

    @classmethod
    def full(cls, n: int) -> "ObservationSet":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def empty(cls, n: int) -> "ObservationSet":
        return cls(np.zeros(n, dtype=bool))

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def n(self) -> int:
        return self._mask.size

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self._mask)

    def complement(self) -> "ObservationSet":
        return ObservationSet(~self._mask)

    def issubset(self, other: "ObservationSet") -> bool:
        return bool(np.all(other.mask[self._mask]))

    def __len__(self):
        return int(self._mask.sum())

    def __contains__(self, i):
        return 0 <= i < self.n and bool(self._mask[i])

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other):
        return isinstance(other, ObservationSet) and np.array_equal(self._mask, other._mask)

    def __hash__(self):
        return hash(self._mask.tobytes())

    def __repr__(self):
        items = self.indices.tolist()
        shown = ",".join(map(str, items[:16])) + (",..." if len(items) > 16 else "")
        return f"ObservationSet(n={self.n}, {{{shown}}})"


_INT_LIST = r"\{\s*(?:-?\d+(?:\s*\.\.\s*-?\d+)?(?:\s*,\s*-?\d+(?:\s*\.\.\s*-?\d+)?)*)?\s*\}"


def _int_list(text: str) -> list[int]:
    body = text.strip()[1:-1].strip()
    out = []
    if not body:
        return out
    for part in body.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(v) for v in part.split(".."))
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def _residue_mask(graph: GraphSpec, residues, p: int) -> np.ndarray:
    if p < 1:
        raise InvalidSetError(f"modulus must be positive, got {p}")
    res = {r % p for r in residues}
    if graph.shape is not None and len(graph.shape) > 1:
        # tori: x belongs when ANY coordinate lies in the residue class
        coords = np.stack(np.unravel_index(np.arange(graph.n), graph.shape), axis=1)
        return np.isin(coords % p, list(res)).any(axis=1)
    return np.isin(np.arange(graph.n) % p, list(res))


def _parse(expr: str, graph: GraphSpec) -> np.ndarray:
    s = expr.strip()
    m = re.fullmatch(r"complement\s*\((.*)\)", s, flags=re.S)
    if m:
        return ~_parse(m.group(1), graph)
    if s in ("all", "V"):
        return np.ones(graph.n, dtype=bool)
    if s in ("empty", "{}"):
        return np.zeros(graph.n, dtype=bool)
    m = re.fullmatch(rf"({_INT_LIST}|-?\d+)\s*mod\s*(\d+)", s)
    if m:
        lhs = m.group(1)
        residues = _int_list(lhs) if lhs.startswith("{") else [int(lhs)]
        if not residues:
            raise InvalidSetError("residue rule needs at least one residue")
        return _residue_mask(graph, residues, int(m.group(2)))
    if re.fullmatch(_INT_LIST, s):
        return ObservationSet.from_indices(graph.n, _int_list(s)).mask.copy()
    raise InvalidSetError(f"cannot parse set descriptor {expr!r}")


def parse_set(expr, graph: GraphSpec) -> ObservationSet:
    """Parse a set descriptor against ``graph``.

    Grammar::

        DESC    := LIST | RESIDUE | "complement(" DESC ")" | "all" | "empty"
        LIST    := "{" i, j, a..b, ... "}"
        RESIDUE := (LIST | r) "mod" p

    Residue rules act on the vertex index for one-dimensional graphs. On a
    torus of dimension ``d >= 2`` a vertex is selected when any of its
    coordinates falls in the residue class, so ``"0 mod 2"`` on
    ``torus:8,2`` is the union of the hyperplanes ``x_j`` even.
    """
    if isinstance(expr, ObservationSet):
        if expr.n != graph.n:
            raise InvalidSetError(f"set has n={expr.n}, graph has n={graph.n}")
        return expr
    if not isinstance(expr, str):
        return ObservationSet.from_indices(graph.n, expr)
    return ObservationSet(_parse(expr, graph))
