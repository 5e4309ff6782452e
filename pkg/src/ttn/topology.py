"""
Tree Topology

The unrooted tree that carries a tree tensor network: n leaves (one per
qudit, named ``q<k>``), n-2 internal degree-3 vertices (named ``v<k>``) and
n-3 internal edges.

Each vertex keeps an ordered neighbor list. That order is the index order of
the tensor stored at the vertex, so it is part of the topology's identity.
"""

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx

from config import get_logger
from errors import ValidationError

logger = get_logger(__name__)

Edge = Tuple[str, str]

_NODE_NAME = re.compile(r"^([qv])(\d+)$")

LAYOUTS = ("caterpillar", "balanced-binary")


def edge_key(u: str, w: str) -> Edge:
    """Normalized identifier of the edge joining u and w."""
    return (u, w) if u <= w else (w, u)


def leaf_name(q: int) -> str:
    return f"q{q}"


def is_leaf(node: str) -> bool:
    return node.startswith("q")


def qudit_of(node: str) -> int:
    match = _NODE_NAME.match(node)
    if not match or match.group(1) != "q":
        raise ValidationError(f"{node!r} is not a leaf name")
    return int(match.group(2))


@dataclass
class ValidationReport:
    """Outcome of checking every TreeTopology invariant."""

    valid: bool
    violations: List[str] = field(default_factory=list)
    n: int = 0
    vertex_count: int = 0
    internal_edge_count: int = 0

    def to_dict(self) -> Dict:
        return {
            'valid': self.valid,
            'violations': list(self.violations),
            'n': self.n,
            'vertex_count': self.vertex_count,
            'internal_edge_count': self.internal_edge_count,
        }


@dataclass(frozen=True)
class Bipartition:
    """Qudit sets on the two sides of an internal edge."""

    edge: Edge
    side_a: FrozenSet[int]
    side_b: FrozenSet[int]


class TreeTopology:
    """An unrooted tree with ordered neighbor lists."""

    def __init__(self, adjacency: Dict[str, List[str]], edges: Sequence[Edge]):
        """
        Build a topology from ordered adjacency lists.

        Use ``from_edges`` or ``layout`` instead of calling this directly.

        Args:
            adjacency: node -> ordered neighbor list
            edges: edge list in input order (defines deterministic numbering)
        """
        self._adjacency = {node: tuple(neighbors) for node, neighbors in adjacency.items()}
        self._edges = [edge_key(u, w) for u, w in edges]
        self._graph = nx.Graph()
        self._graph.add_nodes_from(self._adjacency)
        self._graph.add_edges_from(self._edges)
        self._leaves = sorted((node for node in self._adjacency if is_leaf(node)), key=_node_number)
        self._vertices = [node for node in self._adjacency if not is_leaf(node)]

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Sequence[Tuple[str, str]]) -> "TreeTopology":
        """Build a topology; neighbor order follows the order edges are listed."""
        adjacency: Dict[str, List[str]] = {}
        for u, w in edges:
            adjacency.setdefault(u, []).append(w)
            adjacency.setdefault(w, []).append(u)
        return cls(adjacency, list(edges))

    @classmethod
    def from_text(cls, text: str) -> "TreeTopology":
        """Parse the one-edge-per-line format (``v0 q1``); ``#`` starts a comment."""
        edges = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"line {lineno}: expected two endpoints, got {line!r}")
            edges.append((parts[0], parts[1]))
        return cls.from_edges(edges)

    @classmethod
    def from_file(cls, path: str) -> "TreeTopology":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        return "\n".join(f"{u} {w}" for u, w in self._edges) + "\n"

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._leaves)

    @property
    def vertices(self) -> List[str]:
        return list(self._vertices)

    @property
    def leaves(self) -> List[str]:
        return list(self._leaves)

    @property
    def edges(self) -> List[Edge]:
        return list(self._edges)

    @property
    def internal_edges(self) -> List[Edge]:
        return [e for e in self._edges if not is_leaf(e[0]) and not is_leaf(e[1])]

    @property
    def leaf_map(self) -> Dict[str, int]:
        """Leaf label -> qudit index."""
        return {leaf: qudit_of(leaf) for leaf in self._leaves}

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def neighbors(self, node: str) -> Tuple[str, ...]:
        try:
            return self._adjacency[node]
        except KeyError:
            raise ValidationError(f"unknown node {node!r}") from None

    def index_of(self, vertex: str, neighbor: str) -> int:
        """Position of ``neighbor`` in the tensor index order of ``vertex``."""
        try:
            return self.neighbors(vertex).index(neighbor)
        except ValueError:
            raise ValidationError(f"{neighbor!r} is not adjacent to {vertex!r}") from None

    def is_internal_edge(self, edge: Edge) -> bool:
        u, w = edge
        return (not is_leaf(u) and not is_leaf(w)
                and self._graph.has_edge(u, w))

    def leaf_vertex(self, q: int) -> str:
        """Internal vertex that hosts qudit q."""
        name = leaf_name(q)
        if name not in self._adjacency:
            raise ValidationError(f"unknown qudit {q}")
        return self._adjacency[name][0]

    def require_internal_edge(self, edge: Edge) -> Edge:
        edge = edge_key(*edge)
        if not self.is_internal_edge(edge):
            raise ValidationError(f"{edge} is not an internal edge")
        return edge

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Check every invariant and list all violations found."""
        violations = []
        for node in self._adjacency:
            if not _NODE_NAME.match(node):
                violations.append(f"malformed node name {node!r} (expected q<k> or v<k>)")

        seen = set()
        for u, w in self._edges:
            if u == w:
                violations.append(f"self-loop on {u}")
            if (u, w) in seen:
                violations.append(f"duplicate edge {u} {w}")
            seen.add((u, w))

        n = self.n
        if n < 3:
            violations.append(f"too few qudits: n={n} (need n >= 3)")
        labels = sorted(_node_number(leaf) for leaf in self._leaves)
        if labels != list(range(n)):
            violations.append(f"leaf labels must be q0..q{n - 1}, got {self._leaves}")

        for node, neighbors in self._adjacency.items():
            if is_leaf(node) and len(neighbors) != 1:
                violations.append(f"leaf degree violated: {node} has degree {len(neighbors)}")
            elif not is_leaf(node) and len(neighbors) != 3:
                violations.append(f"vertex degree violated: {node} has degree {len(neighbors)}")
            if is_leaf(node) and any(is_leaf(nb) for nb in neighbors):
                violations.append(f"leaf {node} is attached to another leaf")

        if self._graph.number_of_nodes() and not nx.is_connected(self._graph):
            violations.append("connectivity violated")
        if self._graph.number_of_nodes() and nx.cycle_basis(self._graph):
            violations.append("acyclicity violated")

        if len(self._vertices) != n - 2:
            violations.append(f"vertex count violated: {len(self._vertices)} != n-2 = {n - 2}")
        internal = len(self.internal_edges)
        if internal != n - 3:
            violations.append(f"internal edge count violated: {internal} != n-3 = {n - 3}")

        report = ValidationReport(
            valid=not violations,
            violations=violations,
            n=n,
            vertex_count=len(self._vertices),
            internal_edge_count=internal,
        )
        if violations:
            logger.debug(f"Topology invalid: {violations}")
        return report

    def require_valid(self) -> "TreeTopology":
        report = self.validate()
        if not report.valid:
            raise ValidationError("invalid topology: " + "; ".join(report.violations))
        return self

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def bipartition_of(self, edge: Edge) -> Bipartition:
        """Qudit sets of the two components left after cutting an internal edge."""
        edge = self.require_internal_edge(edge)
        side_a = frozenset(self.qudits_behind(edge[0], edge[1]))
        side_b = frozenset(range(self.n)) - side_a
        return Bipartition(edge=edge, side_a=side_a, side_b=side_b)

    def qudits_behind(self, node: str, parent: str) -> List[int]:
        """Qudits in the component containing ``node`` once the edge to ``parent`` is cut."""
        qudits = []
        stack = [(node, parent)]
        while stack:
            current, came_from = stack.pop()
            if is_leaf(current):
                qudits.append(qudit_of(current))
                continue
            stack.extend((nb, current) for nb in self._adjacency[current] if nb != came_from)
        return sorted(qudits)

    def path_between(self, q1: int, q2: int) -> List[str]:
        """Internal vertices on the unique path from q1's leaf to q2's leaf."""
        if q1 == q2:
            raise ValidationError("path_between needs two distinct qudits")
        for q in (q1, q2):
            if leaf_name(q) not in self._adjacency:
                raise ValidationError(f"unknown qudit {q}")
        path = nx.shortest_path(self._graph, leaf_name(q1), leaf_name(q2))
        return path[1:-1]

    def max_path_length(self) -> int:
        """Largest number of internal vertices between any two qudits."""
        longest = 0
        for leaf, lengths in nx.all_pairs_shortest_path_length(self._graph):
            if not is_leaf(leaf):
                continue
            for other, length in lengths.items():
                if is_leaf(other) and other != leaf:
                    longest = max(longest, length - 1)
        return longest

    def diameter(self) -> int:
        """Number of edges on the longest path in the tree (always leaf to leaf)."""
        return nx.diameter(self._graph)

    def rooted_order(self, root: Optional[str] = None) -> List[Tuple[str, Optional[str]]]:
        """(vertex, parent) pairs over internal vertices in breadth-first order."""
        root = root or self._vertices[0]
        order = [(root, None)]
        queue = deque([root])
        visited = {root}
        while queue:
            vertex = queue.popleft()
            for nb in self._adjacency[vertex]:
                if is_leaf(nb) or nb in visited:
                    continue
                visited.add(nb)
                order.append((nb, vertex))
                queue.append(nb)
        return order

    def rewired(self, a: str, b: str, on_a: str, on_b: str) -> "TreeTopology":
        """
        Exchange neighbor ``on_a`` of vertex a with neighbor ``on_b`` of vertex b.

        a and b must be adjacent. Each moved neighbor takes the index position
        of the one it replaces, and the edge list keeps its order.
        """
        if not self._graph.has_edge(a, b):
            raise ValidationError(f"{a} and {b} are not adjacent")
        if on_a == b or on_a not in self._adjacency[a]:
            raise ValidationError(f"{on_a!r} is not a movable neighbor of {a}")
        if on_b == a or on_b not in self._adjacency[b]:
            raise ValidationError(f"{on_b!r} is not a movable neighbor of {b}")

        adjacency = {node: list(nbs) for node, nbs in self._adjacency.items()}
        adjacency[a][adjacency[a].index(on_a)] = on_b
        adjacency[b][adjacency[b].index(on_b)] = on_a
        adjacency[on_a][adjacency[on_a].index(a)] = b
        adjacency[on_b][adjacency[on_b].index(b)] = a

        moved = {edge_key(a, on_a): edge_key(b, on_a), edge_key(b, on_b): edge_key(a, on_b)}
        edges = [moved.get(e, e) for e in self._edges]
        return TreeTopology(adjacency, edges)

    def __eq__(self, other) -> bool:
        return isinstance(other, TreeTopology) and self._adjacency == other._adjacency

    def __repr__(self) -> str:
        return f"TreeTopology(n={self.n}, vertices={len(self._vertices)})"


def _node_number(node: str) -> int:
    match = _NODE_NAME.match(node)
    return int(match.group(2)) if match else -1


def layout(kind: str, n: int) -> TreeTopology:
    """
    Deterministic topology of a standard family.

    Args:
        kind: "caterpillar" (emulates a 1D chain) or "balanced-binary" (minimal diameter)
        n: Number of qudits, at least 3
    """
    if n < 3:
        raise ValidationError(f"layout needs n >= 3, got {n}")
    if kind == "caterpillar":
        edges = _caterpillar_edges(n)
    elif kind == "balanced-binary":
        edges = _balanced_binary_edges(n)
    else:
        raise ValidationError(f"unknown layout {kind!r} (expected one of {', '.join(LAYOUTS)})")
    topology = TreeTopology.from_edges(edges)
    logger.debug(f"Built {kind} layout for n={n}")
    return topology


def _caterpillar_edges(n: int) -> List[Edge]:
    m = n - 2
    if m == 1:
        return [("v0", "q0"), ("v0", "q1"), ("v0", "q2")]
    edges = [("v0", "q0"), ("v0", "q1")]
    for k in range(1, m):
        edges.append((f"v{k - 1}", f"v{k}"))
        if k < m - 1:
            edges.append((f"v{k}", f"q{k + 1}"))
    edges.extend([(f"v{m - 1}", f"q{n - 2}"), (f"v{m - 1}", f"q{n - 1}")])
    return edges


def _balanced_binary_edges(n: int) -> List[Edge]:
    """Halve the qudit range recursively, then splice out the degree-2 root."""
    counter = [0]
    children: Dict[str, Tuple[str, str]] = {}

    def build(lo: int, hi: int) -> str:
        if hi - lo == 1:
            return f"q{lo}"
        name = f"v{counter[0]}"
        counter[0] += 1
        mid = (lo + hi + 1) // 2
        children[name] = (build(lo, mid), build(mid, hi))
        return name

    root = build(0, n)
    left, right = children.pop(root)
    # Renumber so vertex names stay contiguous after the root is removed
    rename = {old: f"v{i}" for i, old in enumerate(sorted(children, key=_node_number))}
    rename.update({leaf: leaf for pair in children.values() for leaf in pair if is_leaf(leaf)})

    def name(node: str) -> str:
        return rename.get(node, node)

    edges = [(name(left), name(right))] if not is_leaf(left) else [(name(right), name(left))]
    queue = deque(v for v in (left, right) if not is_leaf(v))
    while queue:
        vertex = queue.popleft()
        for child in children[vertex]:
            edges.append((name(vertex), name(child)))
            if not is_leaf(child):
                queue.append(child)
    return edges
