"""Hot graph kernels with a numba fast path and a pure-Python/numpy fallback.

The backend is picked once per process from the ``LOCTEST_BACKEND``
environment variable: ``numba`` (require numba, fail if missing), ``numpy``
(never JIT), or unset/``auto`` (use numba when importable).  Both backends
run the same source, so results are bit-identical; only speed differs.

Kernels are written in nopython-friendly style: flat numpy arrays, no
dicts, no closures.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_KERNEL_NAMES = ("tarjan_scc", "dag_or_propagate")


def _tarjan_scc(indptr, targets, n):
    """Strongly connected components of a CSR digraph, iteratively.

    Component ids are assigned in completion order, so they form a reverse
    topological order of the condensation: every edge leaving a component
    goes to a component with a smaller id.  Nodes are visited in ascending
    order and edges in CSR order, which pins the numbering.
    """
    NIL = np.int64(-1)
    index = np.full(n, NIL, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    comp = np.full(n, NIL, dtype=np.int64)
    on_stack = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    sp = 0
    work_v = np.empty(n, dtype=np.int64)
    work_e = np.empty(n, dtype=np.int64)
    counter = np.int64(0)
    ncomp = np.int64(0)
    for root in range(n):
        if index[root] != NIL:
            continue
        wp = 0
        work_v[0] = root
        work_e[0] = indptr[root]
        index[root] = counter
        low[root] = counter
        counter += 1
        stack[sp] = root
        sp += 1
        on_stack[root] = True
        while wp >= 0:
            v = work_v[wp]
            e = work_e[wp]
            if e < indptr[v + 1]:
                work_e[wp] = e + 1
                w = targets[e]
                if index[w] == NIL:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack[sp] = w
                    sp += 1
                    on_stack[w] = True
                    wp += 1
                    work_v[wp] = w
                    work_e[wp] = indptr[w]
                elif on_stack[w]:
                    if index[w] < low[v]:
                        low[v] = index[w]
            else:
                if low[v] == index[v]:
                    while True:
                        u = stack[sp - 1]
                        sp -= 1
                        on_stack[u] = False
                        comp[u] = ncomp
                        if u == v:
                            break
                    ncomp += 1
                wp -= 1
                if wp >= 0:
                    pv = work_v[wp]
                    if low[v] < low[pv]:
                        low[pv] = low[v]
    return comp, ncomp


def _dag_or_propagate(indptr, targets, seed):
    """Union bitset rows along a DAG whose node ids are reverse topological.

    ``seed`` is a (C, W) uint64 matrix of per-component bitsets; every edge
    c -> c2 satisfies c2 < c, so a single ascending pass accumulates, for
    each component, the union of its seed with all seeds reachable from it.
    Modifies ``seed`` in place and returns it.
    """
    ncomp = seed.shape[0]
    nwords = seed.shape[1]
    for c in range(ncomp):
        for e in range(indptr[c], indptr[c + 1]):
            c2 = targets[e]
            for w in range(nwords):
                seed[c, w] |= seed[c2, w]
    return seed


def _dag_or_propagate_np(indptr, targets, seed):
    """Row-vectorized variant of :func:`_dag_or_propagate` for the numpy
    backend.  Output is identical; bitset unions are exact either way."""
    for c in range(seed.shape[0]):
        lo, hi = indptr[c], indptr[c + 1]
        if hi > lo:
            seed[c] |= np.bitwise_or.reduce(seed[targets[lo:hi]], axis=0)
    return seed


def _resolve_backend():
    choice = os.environ.get("LOCTEST_BACKEND", "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"LOCTEST_BACKEND must be 'numba', 'numpy', or 'auto', not {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"


_cache: dict[str, SimpleNamespace] = {}


def get_kernels(backend: str | None = None) -> SimpleNamespace:
    """Return the kernel namespace for ``backend`` (default: env selection)."""
    name = backend or _resolve_backend()
    if name in _cache:
        return _cache[name]
    if name == "numba":
        from numba import njit

        ns = SimpleNamespace(
            backend="numba",
            tarjan_scc=njit(cache=True, nogil=True)(_tarjan_scc),
            dag_or_propagate=njit(cache=True, nogil=True)(_dag_or_propagate),
        )
    elif name == "numpy":
        ns = SimpleNamespace(
            backend="numpy",
            tarjan_scc=_tarjan_scc,
            dag_or_propagate=_dag_or_propagate_np,
        )
    else:
        raise ValueError(f"unknown backend {name!r}")
    _cache[name] = ns
    return ns
