"""Network data model: single-source DAGs with terminal demands.

A network is a directed acyclic graph with one source node whose outgoing
edges carry the messages (edge i of ``source_edge_order`` carries message i,
1-based), and terminal nodes that each demand an ordered list of message
indices.  The file order of the ``edges`` array is semantically significant:
it fixes the order of a node's incoming edges, which in turn fixes the
meaning of non-symmetric coding functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

ROLES = ("source", "internal", "terminal")


class NetworkFormatError(ValueError):
    """Raised when a network document does not match the on-disk schema."""


class NetworkCycleError(ValueError):
    """Raised when an operation requires a DAG but the graph has a cycle."""


@dataclass(frozen=True)
class Node:
    id: str
    role: str


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str


@dataclass(frozen=True)
class Violation:
    """One broken invariant, naming the rule and the offending element."""

    rule: str
    element: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.element}: {self.detail}"


@dataclass(frozen=True)
class Network:
    name: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    source_edge_order: tuple[str, ...]
    demands: dict[str, tuple[int, ...]]
    base: int = 2

    @cached_property
    def node_by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_by_id(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        """Position of each edge in the canonical (file) order."""
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def incoming(self) -> dict[str, tuple[str, ...]]:
        """Incoming edge ids per node, in canonical order."""
        inc: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.head in inc:
                inc[e.head].append(e.id)
        return {k: tuple(v) for k, v in inc.items()}

    @cached_property
    def outgoing(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            if e.tail in out:
                out[e.tail].append(e.id)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def source(self) -> str:
        for n in self.nodes:
            if n.role == "source":
                return n.id
        raise NetworkFormatError("network has no source node")

    @property
    def terminals(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes if n.role == "terminal")

    @property
    def message_count(self) -> int:
        return len(self.source_edge_order)

    def demand_list(self, terminal: str) -> tuple[int, ...]:
        return self.demands.get(terminal, ())


@dataclass(frozen=True)
class DepthPartition:
    """Layering of edges by longest-path depth from the source."""

    depth_of_node: dict[str, int]
    depth_of_edge: dict[str, int]
    depth: int

    @cached_property
    def layers(self) -> tuple[tuple[str, ...], ...]:
        out: list[list[str]] = [[] for _ in range(self.depth)]
        for eid, d in self.depth_of_edge.items():
            out[d].append(eid)
        return tuple(tuple(layer) for layer in out)


def _topological_order(net: Network) -> list[str] | None:
    """Kahn's algorithm; None if the graph has a cycle."""
    indeg = {n.id: 0 for n in net.nodes}
    for e in net.edges:
        if e.head in indeg:
            indeg[e.head] += 1
    ready = [n.id for n in net.nodes if indeg[n.id] == 0]
    order: list[str] = []
    while ready:
        v = ready.pop()
        order.append(v)
        for eid in net.outgoing.get(v, ()):
            h = net.edge_by_id[eid].head
            indeg[h] -= 1
            if indeg[h] == 0:
                ready.append(h)
    if len(order) != len(net.nodes):
        return None
    return order


def validate(net: Network) -> list[Violation]:
    """Check every structural invariant; an empty list means the network is valid."""
    out: list[Violation] = []

    if net.base < 2:
        out.append(Violation("base", str(net.base), "base must be an integer >= 2"))

    seen_nodes: set[str] = set()
    for n in net.nodes:
        if n.id in seen_nodes:
            out.append(Violation("duplicate-node", n.id, "node id appears twice"))
        seen_nodes.add(n.id)
        if n.role not in ROLES:
            out.append(Violation("node-role", n.id, f"unknown role {n.role!r}"))

    seen_edges: set[str] = set()
    for e in net.edges:
        if e.id in seen_edges:
            out.append(Violation("duplicate-edge", e.id, "edge id appears twice"))
        seen_edges.add(e.id)
        for endpoint in (e.tail, e.head):
            if endpoint not in seen_nodes:
                out.append(Violation("edge-endpoint", e.id, f"unknown node {endpoint!r}"))
    if any(v.rule in ("duplicate-node", "duplicate-edge", "edge-endpoint") for v in out):
        return out

    sources = [n.id for n in net.nodes if n.role == "source"]
    if len(sources) != 1:
        out.append(Violation("unique-source", ",".join(sources) or "<none>",
                             "exactly one source node is required"))
        return out
    s = sources[0]

    indeg = {n.id: 0 for n in net.nodes}
    for e in net.edges:
        indeg[e.head] += 1
    if indeg[s] != 0:
        out.append(Violation("unique-source", s, "source node has incoming edges"))
    for n in net.nodes:
        if n.id != s and indeg[n.id] == 0:
            out.append(Violation("unique-source", n.id,
                                 "only the source may have in-degree 0"))

    k = len(net.outgoing[s])
    if sorted(net.source_edge_order) != sorted(net.outgoing[s]):
        out.append(Violation("source-edge-order", s,
                             "source_edge_order is not a permutation of out(source)"))
    if k == 0:
        out.append(Violation("source-edges", s, "source has no outgoing edges"))

    terminal_ids = set(net.terminals)
    for t in terminal_ids:
        if indeg[t] == 0:
            out.append(Violation("terminal-in-degree", t, "terminal has no incoming edges"))
        if t not in net.demands:
            out.append(Violation("demands", t, "terminal missing from demands"))
    for t, wants in net.demands.items():
        if t not in terminal_ids:
            out.append(Violation("demands", t, "demand key is not a terminal node"))
            continue
        if not wants:
            out.append(Violation("demands", t, "empty demand list"))
        for w in wants:
            if not 1 <= w <= k:
                out.append(Violation("demands", t,
                                     f"demand index {w} out of range [1, {k}]"))

    order = _topological_order(net)
    if order is None:
        out.append(Violation("acyclicity", net.name, "graph contains a cycle"))
        return out

    if not out:
        dp = depth_partition(net)
        deepest = dp.layers[-1] if dp.depth else ()
        if not any(net.edge_by_id[eid].head in terminal_ids for eid in deepest):
            out.append(Violation("deepest-layer", net.name,
                                 "no edge of the deepest layer ends in a terminal"))
    return out


def depth_partition(net: Network) -> DepthPartition:
    """Longest-path depths of nodes and edges; fails on cyclic input."""
    order = _topological_order(net)
    if order is None:
        raise NetworkCycleError(f"network {net.name!r} contains a cycle")
    depth_node = {v: 0 for v in order}
    for v in order:
        dv = depth_node[v]
        for eid in net.outgoing[v]:
            h = net.edge_by_id[eid].head
            depth_node[h] = max(depth_node[h], dv + 1)
    # an edge sits at the depth of its tail node
    depth_edge = {e.id: depth_node[e.tail] for e in net.edges}
    d = max(depth_node.values(), default=0)
    return DepthPartition(depth_node, depth_edge, d)


def _expect(doc: dict, key: str, kind: type, where: str):
    if key not in doc:
        raise NetworkFormatError(f"{where}: missing field {key!r}")
    val = doc[key]
    if kind is int and isinstance(val, bool):
        raise NetworkFormatError(f"{where}.{key}: expected integer, got bool")
    if not isinstance(val, kind):
        raise NetworkFormatError(f"{where}.{key}: expected {kind.__name__}, got "
                                 f"{type(val).__name__}")
    return val


def from_json_dict(doc: dict) -> Network:
    """Build a Network from a parsed document, checking the schema."""
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level: expected an object")
    name = _expect(doc, "name", str, "network")
    base = _expect(doc, "base", int, "network")

    nodes = []
    node_ids = set()
    for i, nd in enumerate(_expect(doc, "nodes", list, "network")):
        where = f"nodes[{i}]"
        if not isinstance(nd, dict):
            raise NetworkFormatError(f"{where}: expected an object")
        nid = _expect(nd, "id", str, where)
        role = _expect(nd, "role", str, where)
        if role not in ROLES:
            raise NetworkFormatError(f"{where}.role: {role!r} is not one of {ROLES}")
        nodes.append(Node(nid, role))
        node_ids.add(nid)

    edges = []
    edge_ids = set()
    for i, ed in enumerate(_expect(doc, "edges", list, "network")):
        where = f"edges[{i}]"
        if not isinstance(ed, dict):
            raise NetworkFormatError(f"{where}: expected an object")
        eid = _expect(ed, "id", str, where)
        tail = _expect(ed, "from", str, where)
        head = _expect(ed, "to", str, where)
        for endpoint in (tail, head):
            if endpoint not in node_ids:
                raise NetworkFormatError(f"{where}: unknown node {endpoint!r}")
        if eid in edge_ids:
            raise NetworkFormatError(f"{where}: duplicate edge id {eid!r}")
        edge_ids.add(eid)
        edges.append(Edge(eid, tail, head))

    seo = []
    for i, eid in enumerate(_expect(doc, "source_edge_order", list, "network")):
        if not isinstance(eid, str) or eid not in edge_ids:
            raise NetworkFormatError(f"source_edge_order[{i}]: unknown edge {eid!r}")
        seo.append(eid)
    k = len(seo)

    demands = {}
    for t, wants in _expect(doc, "demands", dict, "network").items():
        if t not in node_ids:
            raise NetworkFormatError(f"demands.{t}: unknown node")
        if not isinstance(wants, list):
            raise NetworkFormatError(f"demands.{t}: expected a list of message indices")
        idx = []
        for j, w in enumerate(wants):
            if not isinstance(w, int) or isinstance(w, bool):
                raise NetworkFormatError(f"demands.{t}[{j}]: expected integer")
            if not 1 <= w <= k:
                raise NetworkFormatError(f"demands.{t}[{j}]: demand out of range "
                                         f"[1, {k}]")
            idx.append(w)
        demands[t] = tuple(idx)

    return Network(name=name, nodes=tuple(nodes), edges=tuple(edges),
                   source_edge_order=tuple(seo), demands=demands, base=base)


def to_json_dict(net: Network) -> dict:
    return {
        "name": net.name,
        "base": net.base,
        "nodes": [{"id": n.id, "role": n.role} for n in net.nodes],
        "edges": [{"id": e.id, "from": e.tail, "to": e.head} for e in net.edges],
        "source_edge_order": list(net.source_edge_order),
        "demands": {t: list(w) for t, w in net.demands.items()},
    }


def load(path) -> Network:
    """Read a network file; raises NetworkFormatError with field diagnostics."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return from_json_dict(doc)


def save(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(net), fh, indent=2)
        fh.write("\n")
