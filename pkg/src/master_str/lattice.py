"""Planar graphs with rapidity data, small partition functions and star-triangle moves.

Each edge carries a type (``"first"`` or ``"second"``) and the rapidities
``(p, q)`` of the two medial lines crossing it.  With the difference
property the spectral variable of an edge is ``p - q`` for the first type
and ``eta - p + q`` for the second.

Partition functions are evaluated by the nested periodic trapezoid rule.
On a product grid that rule is a tensor contraction of per-edge weight
matrices, which is how it is computed here.
"""
from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .errors import BadDomain, NotAStar, QuadratureNotConverged, TooManyInternalSites
from .master_weights import QuadratureControl, WeightSpec, log_weight_S, log_weight_W
from .special_fn import EllipticParams

EdgeType = Literal["first", "second"]
MAX_INTERNAL = 4
# point cap per internal-site count, keeps intermediate tensors small
_POINT_CAP = {1: 8192, 2: 2048, 3: 512, 4: 256}


@dataclass(frozen=True)
class Site:
    id: str
    boundary: bool = False
    spin: float = 0.0


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    type: EdgeType
    p: float
    q: float

    def __post_init__(self):
        if self.type not in ("first", "second"):
            raise ValueError(f"edge type must be 'first' or 'second', got {self.type!r}")
        if self.a == self.b:
            raise ValueError("self-loops are not allowed")

    def other(self, site: str) -> str:
        return self.b if site == self.a else self.a


@dataclass(frozen=True)
class LatticeGraph:
    sites: tuple[Site, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [s.id for s in self.sites]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate site ids")
        known = set(ids)
        for e in self.edges:
            if e.a not in known or e.b not in known:
                raise ValueError(f"edge {e.a}-{e.b} refers to an unknown site")
        for s in self.internal:
            if not self.incident(s.id):
                raise ValueError(f"internal site {s.id} has no edges")

    @property
    def internal(self) -> list[Site]:
        return [s for s in self.sites if not s.boundary]

    @property
    def M(self) -> int:
        return len(self.internal)

    def site(self, sid: str) -> Site:
        for s in self.sites:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def incident(self, sid: str) -> list[int]:
        return [k for k, e in enumerate(self.edges) if sid in (e.a, e.b)]

    # JSON round trip -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "sites": [{"id": s.id, "boundary": s.boundary, "spin": s.spin} for s in self.sites],
            "edges": [{"from": e.a, "to": e.b, "type": e.type, "p": e.p, "q": e.q} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeGraph":
        sites = [Site(str(s["id"]), bool(s.get("boundary", False)), float(s.get("spin", 0.0)))
                 for s in d["sites"]]
        edges = [Edge(str(e["from"]), str(e["to"]), e["type"], float(e["p"]), float(e["q"]))
                 for e in d["edges"]]
        return cls(tuple(sites), tuple(edges))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LatticeGraph":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SpectralAssignment:
    alphas: tuple[complex, ...]
    eta: complex = field(default=0j)


def assign_alphas(g: LatticeGraph, params: EllipticParams, physical: bool = True) -> SpectralAssignment:
    """Spectral variable per edge: ``p - q`` (first type) or ``eta - p + q`` (second type).

    With ``physical=True`` every value must lie in ``(0, Re eta)``.
    """
    eta = params.eta
    out = []
    for e in g.edges:
        d = e.p - e.q
        a = complex(d) if e.type == "first" else eta - d
        if physical and not (abs(a.imag) < 1e-12 and 0 < a.real < eta.real):
            raise BadDomain(f"edge {e.a}-{e.b}: alpha = {a} outside (0, Re eta)")
        out.append(a)
    return SpectralAssignment(tuple(out), eta)


def check_sum_rule(g: LatticeGraph, a: SpectralAssignment) -> dict[str, float]:
    """``|sum_j alpha_ij - 2 Re eta|`` for every internal site."""
    res = {}
    for s in g.internal:
        tot = sum(a.alphas[k] for k in g.incident(s.id))
        res[s.id] = float(abs(tot - 2 * a.eta.real))
    return res


def _letters(n: int) -> str:
    pool = string.ascii_letters
    if n > len(pool):
        raise TooManyInternalSites("too many sites for an einsum contraction")
    return pool[:n]


def _contract(g: LatticeGraph, params: EllipticParams, alphas: tuple, n: int, shift: float) -> complex:
    nodes = 2 * math.pi * np.arange(n) / n + 1j * shift
    internal = [s.id for s in g.internal]
    index = {sid: k for k, sid in enumerate(internal)}
    letters = _letters(len(internal))
    log_const = 0j
    # per-site vectors: S(x) dx times boundary edge weights
    site_log = [log_weight_S(params, nodes) + math.log(2 * math.pi / n) for _ in internal]
    operands, subs = [], []
    for e, al in zip(g.edges, alphas):
        spec = WeightSpec(params, al)
        ia, ib = index.get(e.a), index.get(e.b)
        if ia is None and ib is None:
            log_const += log_weight_W(spec, g.site(e.a).spin, g.site(e.b).spin)
        elif ia is None or ib is None:
            k = ia if ia is not None else ib
            fixed = g.site(e.a if ia is None else e.b).spin
            site_log[k] = site_log[k] + log_weight_W(spec, nodes, fixed)
        else:
            operands.append(np.exp(log_weight_W(spec, nodes[:, None], nodes[None, :])))
            subs.append(letters[ia] + letters[ib])
    for k, sl in enumerate(site_log):
        operands.append(np.exp(sl))
        subs.append(letters[k])
    if not operands:
        return complex(np.exp(log_const))
    val = np.einsum(",".join(subs) + "->", *operands, optimize="greedy")
    return complex(val * np.exp(log_const))


def partition_function(g: LatticeGraph, params: EllipticParams,
                       ctl: QuadratureControl = QuadratureControl(points=64),
                       alphas: SpectralAssignment | None = None,
                       trace: list | None = None) -> complex:
    """Integral over internal spins of ``prod W_alpha(x_i, x_j) prod S(x_m)``.

    Boundary spins are held at their ``spin`` values.  The trapezoid grid is
    doubled until successive values agree to ``ctl.rel_tol``.
    """
    M = g.M
    if M > MAX_INTERNAL:
        raise TooManyInternalSites(f"{M} internal sites; at most {MAX_INTERNAL} supported")
    a = alphas if alphas is not None else assign_alphas(g, params)
    if M == 0:
        return _contract(g, params, a.alphas, 1, 0.0)
    cap = min(ctl.max_points, _POINT_CAP[M])
    n = min(ctl.points, cap)
    prev = None
    while True:
        val = _contract(g, params, a.alphas, n, ctl.contour_shift)
        if trace is not None:
            trace.append((n, val))
        if not np.isfinite(val):
            raise QuadratureNotConverged("non-finite partition function")
        if prev is not None and abs(val - prev) <= max(ctl.rel_tol * abs(val), ctl.abs_tol):
            return val
        if 2 * n > cap:
            raise QuadratureNotConverged(f"partition function not converged at {n} points per site")
        prev = val
        n *= 2


def star_triangle_move(g: LatticeGraph, center: str) -> LatticeGraph:
    """Replace a three-legged internal site by a triangle.

    The star must consist of two second-type legs with rapidities ``(p, q)``
    and ``(q, r)`` and one first-type leg ``(p, r)``.  Calling their outer
    sites ``c``, ``a`` and ``b``, the triangle has first-type edges
    ``b-a (p, q)`` and ``b-c (q, r)`` and a second-type edge ``a-c (p, r)``.
    """
    s = g.site(center)
    if s.boundary:
        raise NotAStar(f"site {center} is a boundary site")
    legs = g.incident(center)
    if len(legs) != 3:
        raise NotAStar(f"site {center} has {len(legs)} edges, need 3")
    first = [k for k in legs if g.edges[k].type == "first"]
    second = [k for k in legs if g.edges[k].type == "second"]
    if len(first) != 1 or len(second) != 2:
        raise NotAStar("a star needs one first-type and two second-type legs")
    ef = g.edges[first[0]]
    P, R = ef.p, ef.q
    e1, e2 = (g.edges[k] for k in second)
    tol = 1e-12
    match = None
    for x, y in ((e1, e2), (e2, e1)):
        if abs(x.p - P) < tol and abs(y.q - R) < tol and abs(x.q - y.p) < tol:
            match = (x, y)
            break
    if match is None:
        raise NotAStar("leg rapidities do not form a (p,q), (q,r), (p,r) pattern")
    e_pq, e_qr = match
    Q = e_pq.q
    c, a, b = e_pq.other(center), e_qr.other(center), ef.other(center)
    if len({a, b, c}) != 3:
        raise NotAStar("star legs must end on three distinct sites")
    keep = [e for k, e in enumerate(g.edges) if k not in legs]
    new = [Edge(b, a, "first", P, Q), Edge(a, c, "second", P, R), Edge(b, c, "first", Q, R)]
    sites = [t for t in g.sites if t.id != center]
    return LatticeGraph(tuple(sites), tuple(keep + new))


def star_graph(alpha1: float, alpha3: float, spins: Iterable[float] = (0.0, 0.0, 0.0),
               r: float = 0.0) -> LatticeGraph:
    """Canonical star: centre ``d`` joined to boundary sites ``a``, ``b``, ``c``.

    Rapidities ``q = r + alpha1`` and ``p = q + alpha3``, so the legs carry
    ``eta - alpha1`` (to ``a``), ``alpha1 + alpha3`` (to ``b``) and
    ``eta - alpha3`` (to ``c``).
    """
    sa, sb, sc = spins
    q = r + alpha1
    p = q + alpha3
    sites = (Site("a", True, sa), Site("b", True, sb), Site("c", True, sc), Site("d"))
    edges = (Edge("d", "c", "second", p, q), Edge("b", "d", "first", p, r), Edge("a", "d", "second", q, r))
    return LatticeGraph(sites, edges)


def square_lattice(rows: int, cols: int, p: float, q: float,
                   boundary_spin: float = 0.0) -> LatticeGraph:
    """Homogeneous ``rows x cols`` block of internal sites with a fixed boundary ring.

    Horizontal edges are of the first type and vertical edges of the second,
    so they carry ``alpha = p - q`` and ``eta - alpha``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("need at least one row and one column")
    sites, edges = [], []
    for i in range(rows):
        for j in range(cols):
            sites.append(Site(f"s{i}_{j}"))
    bset = {}

    def bsite(i, j):
        sid = f"b{i}_{j}"
        if sid not in bset:
            bset[sid] = Site(sid, True, boundary_spin)
        return sid

    def sid(i, j):
        if 0 <= i < rows and 0 <= j < cols:
            return f"s{i}_{j}"
        return bsite(i, j)

    for i in range(rows):
        for j in range(-1, cols):
            edges.append(Edge(sid(i, j), sid(i, j + 1), "first", p, q))
    for i in range(-1, rows):
        for j in range(cols):
            edges.append(Edge(sid(i, j), sid(i + 1, j), "second", p, q))
    return LatticeGraph(tuple(sites) + tuple(bset.values()), tuple(edges))
