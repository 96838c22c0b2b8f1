"""SCC machinery, reachability tables, product graphs, and the two scanners
used by the graph-route deciders.

Pair graph and triple graph nodes are encoded as mixed-radix integers with
the leading tuple component most significant: ``(p, q) -> p*n + q`` and
``(p, q, r) -> (p*n + q)*n + r``.  Scan orders are pinned everywhere: nodes
ascending, letters ascending; the first violation in that order is the
canonical witness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._kernels import get_kernels
from .automaton import UNDEFINED, Dfa
from .errors import CapExceeded

DEFAULT_NODE_CAP = 2_000_000


@dataclass(frozen=True, eq=False)
class Digraph:
    """Edge-labelled digraph in CSR form, edges sorted by (source, label)."""

    node_count: int
    indptr: np.ndarray
    targets: np.ndarray
    labels: np.ndarray

    @property
    def edge_count(self) -> int:
        return len(self.targets)


def _csr_from_edges(n, srcs, dsts, labels):
    order = np.lexsort((labels, srcs))
    srcs = srcs[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(srcs, minlength=n), out=indptr[1:])
    return Digraph(n, indptr, np.ascontiguousarray(dsts[order]),
                   np.ascontiguousarray(labels[order]))


def dfa_graph(d: Dfa) -> Digraph:
    """Transition graph of the automaton (one node per state)."""
    srcs, letters = np.nonzero(d.delta != UNDEFINED)
    return _csr_from_edges(
        d.state_count,
        srcs.astype(np.int64),
        d.delta[srcs, letters].astype(np.int64),
        letters.astype(np.int16),
    )


@dataclass(frozen=True, eq=False)
class SccIndex:
    """SCC decomposition with deterministic numbering.

    Component ids are in reverse topological order of the condensation
    (every condensation edge goes from a higher id to a lower id), as
    produced by a fixed-order Tarjan pass.  ``on_cycle[u]`` is true iff u
    lies on a nonempty cycle, i.e. its SCC is nontrivial or it carries a
    self-loop.
    """

    scc_id: np.ndarray
    scc_count: int
    on_cycle: np.ndarray
    condensation: Digraph


def scc(g: Digraph, backend: str | None = None) -> SccIndex:
    K = get_kernels(backend)
    comp64, ncomp = K.tarjan_scc(g.indptr, g.targets.astype(np.int64), g.node_count)
    comp = comp64.astype(np.int64)
    ncomp = int(ncomp)

    sizes = np.bincount(comp, minlength=ncomp)
    on_cycle = sizes[comp] > 1
    srcs = np.repeat(np.arange(g.node_count, dtype=np.int64), np.diff(g.indptr))
    self_loops = srcs[g.targets == srcs]
    on_cycle[self_loops] = True

    cs, ct = comp[srcs], comp[g.targets]
    cross = cs != ct
    if cross.any():
        pairs = np.unique(np.stack([cs[cross], ct[cross]], axis=1), axis=0)
        cond = _csr_from_edges(ncomp, pairs[:, 0], pairs[:, 1],
                               np.zeros(len(pairs), dtype=np.int16))
    else:
        cond = Digraph(ncomp, np.zeros(ncomp + 1, dtype=np.int64),
                       np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int16))
    return SccIndex(comp, ncomp, on_cycle, cond)


@dataclass(frozen=True, eq=False)
class ReachTable:
    """Reflexive-transitive reachability, stored as one packed bitset row
    per SCC (all nodes of a component share a row)."""

    node_count: int
    scc_id: np.ndarray
    comp_bits: np.ndarray

    def contains(self, u, v):
        """Vectorized test of ``u`` reaches ``v`` (or u == v)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        words = self.comp_bits[self.scc_id[u], v >> 6]
        return ((words >> (v & 63).astype(np.uint64)) & 1).astype(bool)

    def row_bits(self, u: int) -> np.ndarray:
        return self.comp_bits[self.scc_id[u]]

    def dense(self) -> np.ndarray:
        rows = self.comp_bits[self.scc_id]
        bits = np.unpackbits(rows.view(np.uint8).reshape(self.node_count, -1),
                             axis=1, bitorder="little")
        return bits[:, : self.node_count].astype(bool)


def _pack_membership(scc_index: SccIndex, n: int) -> np.ndarray:
    nwords = (n + 63) // 64 or 1
    seed = np.zeros((scc_index.scc_count, nwords), dtype=np.uint64)
    nodes = np.arange(n, dtype=np.int64)
    order = np.argsort(scc_index.scc_id, kind="stable")
    comps = scc_index.scc_id[order]
    bitrows = np.zeros((n, nwords), dtype=np.uint64)
    bitrows[nodes, nodes >> 6] = np.uint64(1) << (nodes & 63).astype(np.uint64)
    starts = np.searchsorted(comps, np.arange(scc_index.scc_count))
    np.bitwise_or.reduceat(bitrows[order], starts, axis=0, out=seed)
    return seed


def reach_table(g: Digraph, scc_index: SccIndex | None = None,
                backend: str | None = None) -> ReachTable:
    """Reachability via set-union propagation over the condensation DAG."""
    si = scc_index if scc_index is not None else scc(g, backend)
    seed = _pack_membership(si, g.node_count)
    K = get_kernels(backend)
    bits = K.dag_or_propagate(si.condensation.indptr,
                              si.condensation.targets.astype(np.int64), seed)
    return ReachTable(g.node_count, si.scc_id, bits)


@dataclass(frozen=True, eq=False)
class ProductGraph:
    """Direct product of ``arity`` copies of the transition graph.

    An edge exists for letter a iff every component transition is defined,
    and then maps componentwise.
    """

    arity: int
    base: Dfa
    graph: Digraph

    def encode(self, tup) -> int:
        n = self.base.state_count
        code = 0
        for c in tup:
            code = code * n + int(c)
        return code

    def decode(self, code: int) -> tuple:
        n = self.base.state_count
        out = []
        for _ in range(self.arity):
            out.append(code % n)
            code //= n
        return tuple(reversed(out))


def _tuple_components(n, arity):
    codes = np.arange(n**arity, dtype=np.int64)
    comps = []
    for i in range(arity):
        comps.append((codes // n ** (arity - 1 - i)) % n)
    return comps


def product(d: Dfa, arity: int, node_cap: int = DEFAULT_NODE_CAP) -> ProductGraph:
    if arity not in (2, 3):
        raise ValueError("arity must be 2 or 3")
    n = d.state_count
    total = n**arity
    if total > node_cap:
        raise CapExceeded(f"product graph of arity {arity}", node_cap, total)
    comps = _tuple_components(n, arity)
    src_parts, dst_parts, lab_parts = [], [], []
    for a in range(d.alphabet_size):
        step = d.delta[:, a].astype(np.int64)
        imgs = [step[c] for c in comps]
        valid = imgs[0] >= 0
        for img in imgs[1:]:
            valid &= img >= 0
        if not valid.any():
            continue
        dst = imgs[0][valid]
        for img in imgs[1:]:
            dst = dst * n + img[valid]
        src_parts.append(np.flatnonzero(valid))
        dst_parts.append(dst)
        lab_parts.append(np.full(len(dst), a, dtype=np.int16))
    if src_parts:
        g = _csr_from_edges(total, np.concatenate(src_parts),
                            np.concatenate(dst_parts), np.concatenate(lab_parts))
    else:
        g = Digraph(total, np.zeros(total + 1, dtype=np.int64),
                    np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int16))
    return ProductGraph(arity, d, g)


def scc_nodes(pg: ProductGraph, scc_index: SccIndex | None = None) -> list[tuple]:
    """Tuples lying on a cycle of the product graph, ascending."""
    si = scc_index if scc_index is not None else scc(pg.graph)
    return [pg.decode(int(c)) for c in np.flatnonzero(si.on_cycle)]


def bfs_word(g: Digraph, src: int, dst: int, require_nonempty: bool = False):
    """Shortest word labelling a path src -> dst, or None if unreachable.

    Ties are broken by CSR edge order (letters ascending), so the result is
    deterministic.  With ``require_nonempty`` the empty path is not accepted
    even when src == dst.
    """
    if src == dst and not require_nonempty:
        return []
    n = g.node_count
    parent_edge = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    queue = deque()

    def expand(u):
        for e in range(g.indptr[u], g.indptr[u + 1]):
            v = int(g.targets[e])
            if v == dst and not seen[v]:
                parent_edge[v] = e
                seen[v] = True
                return True
            if not seen[v]:
                seen[v] = True
                parent_edge[v] = e
                queue.append(v)
        return False

    found = expand(src)
    while queue and not found:
        found = expand(queue.popleft())
    if not seen[dst]:
        return None
    word = []
    cur = dst
    while True:
        e = int(parent_edge[cur])
        word.append(int(g.labels[e]))
        srcs_before = np.searchsorted(g.indptr, e, side="right") - 1
        cur = int(srcs_before)
        if cur == src and (word or not require_nonempty):
            break
    return list(reversed(word))


def _reachable_from(g: Digraph, src: int) -> np.ndarray:
    """Boolean mask of nodes reachable from src (including src)."""
    seen = np.zeros(g.node_count, dtype=bool)
    seen[src] = True
    frontier = [src]
    while frontier:
        nxt = []
        for u in frontier:
            for e in range(g.indptr[u], g.indptr[u + 1]):
                v = int(g.targets[e])
                if not seen[v]:
                    seen[v] = True
                    nxt.append(v)
        frontier = nxt
    return seen


class GraphContext:
    """Lazy cache of the per-automaton structures the deciders share."""

    def __init__(self, d: Dfa, node_cap: int = DEFAULT_NODE_CAP,
                 backend: str | None = None):
        self.dfa = d
        self.node_cap = node_cap
        self.backend = backend
        self._cache: dict[str, object] = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def gamma(self) -> Digraph:
        return self._get("gamma", lambda: dfa_graph(self.dfa))

    @property
    def scc1(self) -> SccIndex:
        return self._get("scc1", lambda: scc(self.gamma, self.backend))

    @property
    def reach1(self) -> ReachTable:
        return self._get("reach1", lambda: reach_table(self.gamma, self.scc1, self.backend))

    @property
    def pg2(self) -> ProductGraph:
        return self._get("pg2", lambda: product(self.dfa, 2, self.node_cap))

    @property
    def scc2(self) -> SccIndex:
        return self._get("scc2", lambda: scc(self.pg2.graph, self.backend))

    @property
    def reach2(self) -> ReachTable:
        return self._get("reach2", lambda: reach_table(self.pg2.graph, self.scc2, self.backend))

    @property
    def pg3(self) -> ProductGraph:
        return self._get("pg3", lambda: product(self.dfa, 3, self.node_cap))

    @property
    def scc3(self) -> SccIndex:
        return self._get("scc3", lambda: scc(self.pg3.graph, self.backend))


class ScanMode(Enum):
    """Follower-scan flavors.

    IMPLICATION: whenever the first component's move still reaches the
    root's target, the second component's move must too.  EQUIVALENCE:
    both moves must agree on whether they reach the root's target.  An
    undefined move never reaches anything.
    """

    IMPLICATION = "implication"
    EQUIVALENCE = "equivalence"


@dataclass(frozen=True)
class ScanViolation:
    root: tuple[int, int]
    pair: tuple[int, int]
    letter: int
    word: list[int]


def _group_or(bits: np.ndarray, groups: np.ndarray, ngroups: int) -> np.ndarray:
    """OR-reduce rows of ``bits`` by group id."""
    out = np.zeros((ngroups, bits.shape[1]), dtype=np.uint64)
    order = np.argsort(groups, kind="stable")
    sorted_groups = groups[order]
    starts = np.searchsorted(sorted_groups, np.arange(ngroups))
    present = np.ones(ngroups, dtype=bool)
    present[sorted_groups[starts % len(sorted_groups)] != np.arange(ngroups)] = False
    np.bitwise_or.reduceat(bits[order], starts, axis=0, out=out)
    out[~present] = 0
    return out


def follower_scan(d: Dfa, mode: ScanMode, ctx: GraphContext | None = None):
    """Scan the pair graph for follower violations.

    Roots are cycle pairs (p, q) with p reaching q.  For every pair (r, s)
    reachable from a root and every letter, compare whether r's move and
    s's move reach q, per ``mode``.  Returns the first violation with roots,
    pairs, and letters all ascending, or None.
    """
    ctx = ctx or GraphContext(d)
    n = d.state_count
    if n == 0:
        return None
    N = n * n
    codes = np.arange(N, dtype=np.int64)
    ps, qs = codes // n, codes % n

    roots_mask = ctx.scc2.on_cycle & ctx.reach1.contains(ps, qs)
    if not roots_mask.any():
        return None

    nwords = (n + 63) // 64 or 1
    reach_rows = np.zeros((n + 1, nwords), dtype=np.uint64)
    reach_rows[:n] = ctx.reach1.comp_bits[ctx.reach1.scc_id]
    delta_ext = np.where(d.delta == UNDEFINED, n, d.delta).astype(np.int64)

    bad = np.zeros((N, nwords), dtype=np.uint64)
    for a in range(d.alphabet_size):
        rr = reach_rows[delta_ext[ps, a]]
        rs = reach_rows[delta_ext[qs, a]]
        if mode is ScanMode.IMPLICATION:
            bad |= rr & ~rs
        else:
            bad |= rr ^ rs

    comp_bad = _group_or(bad, ctx.scc2.scc_id, ctx.scc2.scc_count)
    K = get_kernels(ctx.backend)
    cond = ctx.scc2.condensation
    bad_up = K.dag_or_propagate(cond.indptr, cond.targets.astype(np.int64), comp_bad)

    root_codes = codes[roots_mask]
    root_q = qs[roots_mask]
    words = bad_up[ctx.scc2.scc_id[root_codes], root_q >> 6]
    failing = ((words >> (root_q & 63).astype(np.uint64)) & 1).astype(bool)
    if not failing.any():
        return None

    root_code = int(root_codes[np.argmax(failing)])
    root = (root_code // n, root_code % n)
    q = root[1]

    # Second pass inside the first failing root: locate the first violating
    # (pair, letter) in ascending order, then a shortest connecting word.
    reach_mask = _reachable_from(ctx.pg2.graph, root_code)
    cand = np.flatnonzero(reach_mask)
    cr, cs_ = cand // n, cand % n
    col_q = np.zeros(n + 1, dtype=bool)
    col_q[:n] = ctx.reach1.contains(np.arange(n, dtype=np.int64), np.full(n, q, dtype=np.int64))
    viol = np.zeros((len(cand), d.alphabet_size), dtype=bool)
    for a in range(d.alphabet_size):
        vr = col_q[delta_ext[cr, a]]
        vs = col_q[delta_ext[cs_, a]]
        viol[:, a] = (vr & ~vs) if mode is ScanMode.IMPLICATION else (vr ^ vs)
    flat = int(np.argmax(viol))
    assert viol.reshape(-1)[flat], "propagation and rescan disagree"
    pair_code = int(cand[flat // d.alphabet_size])
    letter = flat % d.alphabet_size
    word = bfs_word(ctx.pg2.graph, root_code, pair_code)
    return ScanViolation(root=root, pair=(pair_code // n, pair_code % n),
                         letter=letter, word=word)


class TripleKind(Enum):
    """Which reachability pattern a triple records.

    LOC_IDEM: (p, q) reaches (q, r) in the pair graph (overlapping shift).
    LEFT: (p, q) reaches (r, q) (source replaced, target kept).
    Members are additionally cycle nodes of the triple graph with pairwise
    distinct components.
    """

    LOC_IDEM = "loc-idem"
    LEFT = "left"


@dataclass(frozen=True, eq=False)
class TripleSet:
    kind: TripleKind
    triples: np.ndarray  # (k, 3), ascending by encoded triple

    @property
    def members(self) -> set[tuple]:
        return {tuple(int(x) for x in row) for row in self.triples}

    def __len__(self):
        return len(self.triples)


def triple_sets(d: Dfa, kind: TripleKind, ctx: GraphContext | None = None) -> TripleSet:
    """All recorded triples of the given kind, ascending."""
    ctx = ctx or GraphContext(d)
    n = d.state_count
    ps, qs, rs = _tuple_components(n, 3)
    distinct = (ps != qs) & (qs != rs) & (ps != rs)
    mask = distinct & ctx.scc3.on_cycle
    if mask.any():
        src = ps * n + qs
        dst = (qs * n + rs) if kind is TripleKind.LOC_IDEM else (rs * n + qs)
        sel = np.flatnonzero(mask)
        reach_ok = ctx.reach2.contains(src[sel], dst[sel])
        sel = sel[reach_ok]
    else:
        sel = np.empty(0, dtype=np.int64)
    triples = np.stack([ps[sel], qs[sel], rs[sel]], axis=1).astype(np.int64)
    return TripleSet(kind, triples)
