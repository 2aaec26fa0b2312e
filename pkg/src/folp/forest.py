"""Shared tableau state for the satisfiability engines.

Extended forests (one tree per root constant plus extra arcs back to
roots), node/arc content maps over signed predicates, the ground-atom
dependency graph with memoized reachability, and trail-based undo.

A state instance is confined to one search task; nothing here is
thread-safe across tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

from .syntax import FolpError


class StructureError(FolpError):
    """Malformed mutation of the tableau state (duplicate arc, unknown node)."""


class ClashError(FolpError):
    """A clash on the current branch: contradiction, cycle, or redundancy."""


@dataclass(frozen=True, order=True)
class NodeId:
    """A node c.i1.i2...: a root name plus a path of positive integers.

    Prefix closure holds by construction: children are only ever created
    under existing nodes."""

    root: str
    path: tuple[int, ...] = ()

    @property
    def is_root(self) -> bool:
        return not self.path

    @property
    def depth(self) -> int:
        return len(self.path)

    def parent(self) -> Optional["NodeId"]:
        if not self.path:
            return None
        return NodeId(self.root, self.path[:-1])

    def child(self, index: int) -> "NodeId":
        return NodeId(self.root, self.path + (index,))

    def ancestors(self) -> Iterator["NodeId"]:
        """Proper ancestors, nearest first."""
        node = self.parent()
        while node is not None:
            yield node
            node = node.parent()

    def is_proper_prefix_of(self, other: "NodeId") -> bool:
        return (
            self.root == other.root
            and len(self.path) < len(other.path)
            and other.path[: len(self.path)] == self.path
        )

    def __str__(self) -> str:
        return ".".join([self.root, *map(str, self.path)])


ArcId = tuple[NodeId, NodeId]
Key = Union[NodeId, ArcId]


@dataclass(frozen=True)
class Signed:
    """A predicate symbol or its negation-as-failure."""

    name: str
    positive: bool

    def negated(self) -> "Signed":
        return Signed(self.name, not self.positive)

    def __str__(self) -> str:
        return self.name if self.positive else f"not {self.name}"


def signed_sort_key(sp: Signed) -> tuple[str, int]:
    return (sp.name, 0 if sp.positive else 1)


def format_content(content: Iterable[Signed]) -> str:
    return "{" + ", ".join(str(sp) for sp in sorted(content, key=signed_sort_key)) + "}"


@dataclass(frozen=True, order=True)
class GroundAtom:
    pred: str
    args: tuple[NodeId, ...]

    def __str__(self) -> str:
        return f"{self.pred}({','.join(str(a) for a in self.args)})"


class Trail:
    """Undo log. Mutators push closures; undo_to replays them in reverse."""

    def __init__(self) -> None:
        self._log: list[Callable[[], None]] = []

    def mark(self) -> int:
        return len(self._log)

    def push(self, undo: Callable[[], None]) -> None:
        self._log.append(undo)

    def undo_to(self, mark: int) -> None:
        while len(self._log) > mark:
            self._log.pop()()


class ExtendedForest:
    """Trees over the root constants (plus possibly one anonymous root)
    and extra arcs from arbitrary nodes back to root constants."""

    def __init__(self, roots: Iterable[str], constants: Iterable[str], trail: Trail):
        self.trail = trail
        self.roots: tuple[str, ...] = tuple(roots)
        self.constants: frozenset[str] = frozenset(constants)
        if len(set(self.roots)) != len(self.roots):
            raise StructureError("duplicate root names")
        self._children: dict[NodeId, list[NodeId]] = {
            NodeId(r): [] for r in self.roots
        }
        self._next_index: dict[NodeId, int] = {NodeId(r): 1 for r in self.roots}
        self._es: dict[NodeId, list[NodeId]] = {}
        self._es_set: set[ArcId] = set()

    def root_nodes(self) -> list[NodeId]:
        return [NodeId(r) for r in self.roots]

    def is_constant_node(self, node: NodeId) -> bool:
        return node.is_root and node.root in self.constants

    def has_node(self, node: NodeId) -> bool:
        return node in self._children

    def nodes(self) -> Iterator[NodeId]:
        """Deterministic order: roots first (declaration order), then the
        anonymous interiors of each tree in preorder."""
        for root in self.root_nodes():
            yield root
        for root in self.root_nodes():
            yield from self._interior(root)

    def _interior(self, node: NodeId) -> Iterator[NodeId]:
        for child in self._children[node]:
            yield child
            yield from self._interior(child)

    def add_child(self, node: NodeId) -> NodeId:
        if node not in self._children:
            raise StructureError(f"unknown node {node}")
        index = self._next_index[node]
        child = node.child(index)
        self._next_index[node] = index + 1
        self._children[node].append(child)
        self._children[child] = []
        self._next_index[child] = 1

        def undo() -> None:
            self._children[node].pop()
            del self._children[child]
            del self._next_index[child]
            self._next_index[node] = index

        self.trail.push(undo)
        return child

    def add_es(self, node: NodeId, target: NodeId) -> None:
        if node not in self._children:
            raise StructureError(f"unknown node {node}")
        if not self.is_constant_node(target):
            raise StructureError(f"extra arcs may only target root constants: {target}")
        arc = (node, target)
        if arc in self._es_set:
            raise StructureError(f"duplicate extra arc {node} -> {target}")
        self._es_set.add(arc)
        self._es.setdefault(node, []).append(target)

        def undo() -> None:
            self._es_set.discard(arc)
            self._es[node].pop()

        self.trail.push(undo)

    def has_es(self, node: NodeId, target: NodeId) -> bool:
        return (node, target) in self._es_set

    def children(self, node: NodeId) -> list[NodeId]:
        return list(self._children.get(node, ()))

    def es_targets(self, node: NodeId) -> list[NodeId]:
        return list(self._es.get(node, ()))

    def successors(self, node: NodeId) -> list[NodeId]:
        """Tree children in creation order, then extra-arc targets."""
        return self.children(node) + self.es_targets(node)

    def tree_arcs(self) -> Iterator[ArcId]:
        for node in self.nodes():
            for child in self._children[node]:
                yield (node, child)

    def es_arcs(self) -> Iterator[ArcId]:
        for node in self.nodes():
            for target in self._es.get(node, ()):
                yield (node, target)

    def arcs(self) -> Iterator[ArcId]:
        yield from self.tree_arcs()
        yield from self.es_arcs()

    def arcs_from(self, node: NodeId) -> list[ArcId]:
        return [(node, y) for y in self.successors(node)]

    def node_count(self) -> int:
        return len(self._children)


class DependencyGraph:
    """Directed graph over ground atoms with reachability queries.

    Reachability is memoized per (source, sink); the memo is invalidated
    by any arc insertion, including undone ones."""

    def __init__(self, trail: Trail):
        self.trail = trail
        self._succ: dict[GroundAtom, list[GroundAtom]] = {}
        self._version = 0
        self._cache_version = -1
        self._reach_cache: dict[tuple[GroundAtom, GroundAtom], bool] = {}

    def vertices(self) -> list[GroundAtom]:
        return list(self._succ.keys())

    def has_vertex(self, atom: GroundAtom) -> bool:
        return atom in self._succ

    def arcs(self) -> Iterator[tuple[GroundAtom, GroundAtom]]:
        for src, targets in self._succ.items():
            for dst in targets:
                yield (src, dst)

    def arc_count(self) -> int:
        return sum(len(t) for t in self._succ.values())

    def _touch(self) -> None:
        self._version += 1

    def add_vertex(self, atom: GroundAtom) -> None:
        if atom in self._succ:
            return
        self._succ[atom] = []

        def undo() -> None:
            del self._succ[atom]

        self.trail.push(undo)

    def add_arc(self, src: GroundAtom, dst: GroundAtom) -> None:
        self.add_vertex(src)
        self.add_vertex(dst)
        if dst in self._succ[src]:
            return
        self._succ[src].append(dst)
        self._touch()

        def undo() -> None:
            self._succ[src].remove(dst)
            self._touch()

        self.trail.push(undo)

    def successors(self, atom: GroundAtom) -> list[GroundAtom]:
        return list(self._succ.get(atom, ()))

    def reaches(self, src: GroundAtom, dst: GroundAtom) -> bool:
        """Reflexive-transitive reachability."""
        if src == dst:
            return src in self._succ
        if self._cache_version != self._version:
            self._reach_cache.clear()
            self._cache_version = self._version
        key = (src, dst)
        cached = self._reach_cache.get(key)
        if cached is not None:
            return cached
        seen = {src}
        stack = [src]
        found = False
        while stack:
            for nxt in self._succ.get(stack.pop(), ()):
                if nxt == dst:
                    found = True
                    stack.clear()
                    break
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        self._reach_cache[key] = found
        return found

    def paths_set(
        self, y: NodeId, x: NodeId, free_preds: frozenset[str]
    ) -> set[tuple[str, str]]:
        """Pairs (p, q) with a path from p(y) to q(x) and q not free."""
        sources = [a for a in self._succ if a.args == (y,)]
        sinks = [a for a in self._succ if a.args == (x,) and a.pred not in free_preds]
        return {
            (p.pred, q.pred)
            for p in sources
            for q in sinks
            if self.reaches(p, q)
        }

    def has_cycle(self) -> bool:
        WHITE, GREY, BLACK = 0, 1, 2
        color = {v: WHITE for v in self._succ}
        for start in self._succ:
            if color[start] != WHITE:
                continue
            stack: list[tuple[GroundAtom, Iterator[GroundAtom]]] = [
                (start, iter(self._succ[start]))
            ]
            color[start] = GREY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color[nxt] == GREY:
                        return True
                    if color[nxt] == WHITE:
                        color[nxt] = GREY
                        stack.append((nxt, iter(self._succ[nxt])))
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
        return False


def naive_reachable(
    arcs: Iterable[tuple[GroundAtom, GroundAtom]],
    src: GroundAtom,
    dst: GroundAtom,
    vertices: Iterable[GroundAtom] = (),
) -> bool:
    """Transitive-closure recomputation used as a test oracle for reaches."""
    adjacency: dict[GroundAtom, set[GroundAtom]] = {}
    vertices = set(vertices)
    for a, b in arcs:
        adjacency.setdefault(a, set()).add(b)
        vertices.update((a, b))
    if src == dst:
        return src in vertices
    closure = {src}
    frontier = [src]
    while frontier:
        node = frontier.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in closure:
                closure.add(nxt)
                frontier.append(nxt)
    return dst in closure


class ForestState:
    """Extended forest plus contents and the dependency graph.

    Invariant kept by `insert`: the graph's vertices are exactly the
    positive content entries (as ground atoms over nodes and arcs)."""

    def __init__(
        self,
        roots: Iterable[str],
        constants: Iterable[str],
        free_preds: frozenset[str],
    ):
        self.trail = Trail()
        self.forest = ExtendedForest(roots, constants, self.trail)
        self.g = DependencyGraph(self.trail)
        self.free_preds = free_preds
        self.ct: dict[Key, set[Signed]] = {}

    def content(self, key: Key) -> set[Signed]:
        return self.ct.get(key, set())

    def content_of_node(self, node: NodeId) -> frozenset[Signed]:
        return frozenset(self.ct.get(node, ()))

    @staticmethod
    def atom_for(key: Key, name: str) -> GroundAtom:
        if isinstance(key, NodeId):
            return GroundAtom(name, (key,))
        return GroundAtom(name, key)

    def insert(self, key: Key, sp: Signed) -> bool:
        """Add a signed predicate to a node/arc content. Returns True when
        the entry is new; raises ClashError on contradiction."""
        content = self.ct.get(key)
        if content is None:
            content = set()
            self.ct[key] = content

            def undo_new() -> None:
                del self.ct[key]

            self.trail.push(undo_new)
        if sp in content:
            return False
        if sp.negated() in content:
            raise ClashError(f"contradiction: {sp} and {sp.negated()} at {_key_str(key)}")
        content.add(sp)

        def undo() -> None:
            content.discard(sp)

        self.trail.push(undo)
        if sp.positive:
            self.g.add_vertex(self.atom_for(key, sp.name))
        return True

    def positive_atoms(self) -> Iterator[GroundAtom]:
        for key, content in self.ct.items():
            for sp in content:
                if sp.positive:
                    yield self.atom_for(key, sp.name)

    # -- blocking -----------------------------------------------------

    def find_blocking_pair(self, x: NodeId) -> Optional[NodeId]:
        """Nearest anonymous ancestor y with ct(x) included in ct(y) and an
        empty non-free path set from y-atoms to x-atoms."""
        content_x = self.content(x)
        for y in x.ancestors():
            if self.forest.is_constant_node(y):
                continue
            if content_x <= self.content(y) and not self.g.paths_set(
                y, x, self.free_preds
            ):
                return y
        return None

    def is_blocked(self, x: NodeId) -> bool:
        return self.find_blocking_pair(x) is not None

    def blocked_nodes(self) -> list[NodeId]:
        return [x for x in self.forest.nodes() if self.is_blocked(x)]

    # -- model extraction ----------------------------------------------

    def induced_interpretation(self):
        """The finite open interpretation this structure denotes: the
        universe is the node set, the atoms its positive contents. Only
        meaningful without blocking pairs (a blocked structure stands for
        its infinite unraveling), so those are refused."""
        from .oracle import OpenInterpretation, Universe

        blocked = self.blocked_nodes()
        if blocked:
            raise StructureError(
                "structure contains blocking pairs; its model is the infinite "
                f"unraveling (blocked: {', '.join(map(str, blocked))})"
            )
        elements = tuple(str(n) for n in self.forest.nodes())
        atoms = frozenset(
            (atom.pred, tuple(str(a) for a in atom.args))
            for atom in self.positive_atoms()
        )
        return OpenInterpretation(Universe(elements), atoms)

    # -- debugging output ----------------------------------------------

    def to_dot(self) -> str:
        """Two digraphs: `forest` (nodes labeled with contents, tree arcs
        solid, extra arcs dashed and labeled with arc contents) and
        `dependencies` (the atom dependency graph)."""
        lines = ["digraph forest {"]
        for node in self.forest.nodes():
            label = f"{node}\\n{format_content(self.content(node))}"
            lines.append(f'  "{node}" [label="{label}"];')
        for src, dst in self.forest.tree_arcs():
            label = format_content(self.content((src, dst)))
            lines.append(f'  "{src}" -> "{dst}" [style=solid, label="{label}"];')
        for src, dst in self.forest.es_arcs():
            label = format_content(self.content((src, dst)))
            lines.append(f'  "{src}" -> "{dst}" [style=dashed, label="{label}"];')
        lines.append("}")
        lines.append("digraph dependencies {")
        for vertex in sorted(self.g.vertices(), key=str):
            lines.append(f'  "{vertex}";')
        for src, dst in sorted(self.g.arcs(), key=lambda a: (str(a[0]), str(a[1]))):
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _key_str(key: Key) -> str:
    if isinstance(key, NodeId):
        return str(key)
    return f"({key[0]},{key[1]})"
