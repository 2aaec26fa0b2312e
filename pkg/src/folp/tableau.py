"""The direct tableau engine (algorithm a1).

Builds completion structures by justifying every signed predicate in
node and arc contents with the program rules: positive entries by
enforcing the body of one defining rule instance, negative entries by
refuting every defining rule instance, undecided predicates by explicit
sign choice. Blocking stops expansion below a node subsumed by an
ancestor; the redundancy bound turns overly long equal-content chains
into a clash.

The search is chronological depth-first backtracking over a trail of
undoable mutations. Choice order: rules in program order, groundings
preferring existing successors, then fresh successors, then constants;
sign choices take the negative branch first. Runs are deterministic.

Verdicts: without an explicit depth bound the driver deepens iteratively
and reports UNSAT only from an exhausted search in which the bound never
pruned anything, which makes UNSAT sound. With an explicit bound,
exhaustion after pruning yields DEPTH_BOUNDED_UNKNOWN. A redundancy
override below the sound bound marks the verdict bounded-incomplete.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional

from .forest import (
    ArcId,
    ClashError,
    ForestState,
    GroundAtom,
    Key,
    NodeId,
    Signed,
    signed_sort_key,
)
from .syntax import (
    BinaryShape,
    FolpError,
    Literal,
    Program,
    RuleKind,
    UnaryShape,
    binary_shape,
    unary_shape,
)

EXP = "exp"
UNEXP = "unexp"


class EngineBudgetError(FolpError):
    """Deadline or task budget exceeded."""


def redundancy_bound(p: int) -> int:
    """Maximum number of equal-content ancestors a node may have before
    it counts as redundant, as a function of the unary predicate count."""
    return 2**p * (2 ** (p * p) - 1) + 3


@dataclass(frozen=True)
class RedundancyPolicy:
    """k_override and max_depth, when set, must be >= 1 and mark the run
    as bounded-incomplete. `time_limit` (seconds) and `max_tasks` bound
    resources; exceeding them raises EngineBudgetError."""

    k_override: Optional[int] = None
    max_depth: Optional[int] = None
    time_limit: Optional[float] = None
    max_tasks: Optional[int] = None

    def __post_init__(self) -> None:
        if self.k_override is not None and self.k_override < 1:
            raise ValueError("k_override must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def effective_k(self, program: Program) -> int:
        if self.k_override is not None:
            return self.k_override
        return redundancy_bound(len(program.upreds))

    @property
    def bounded_incomplete(self) -> bool:
        return self.k_override is not None or self.max_depth is not None


@dataclass
class SearchStats:
    nodes_created: int = 0
    choice_points: int = 0
    backtracks: int = 0
    tasks: int = 0
    max_depth_seen: int = 0
    redundancy_events: list = field(default_factory=list)
    units_tried: int = 0
    matches: int = 0
    units_used: set = field(default_factory=set)

    @property
    def reuse_count(self) -> int:
        return self.matches - len(self.units_used)

    def to_record(self) -> dict:
        return {
            "nodes_created": self.nodes_created,
            "choice_points": self.choice_points,
            "backtracks": self.backtracks,
            "tasks": self.tasks,
            "max_depth": self.max_depth_seen,
            "redundancy_clashes": len(self.redundancy_events),
        }


class VerdictKind(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    DEPTH_BOUNDED_UNKNOWN = "DEPTH_BOUNDED_UNKNOWN"


@dataclass
class Verdict:
    kind: VerdictKind
    algorithm: str
    predicate: str
    stats: SearchStats
    witness: Optional[ForestState] = None
    bounded_incomplete: bool = False
    depth_used: Optional[int] = None

    @property
    def exit_code(self) -> int:
        return {
            VerdictKind.SAT: 0,
            VerdictKind.UNSAT: 1,
            VerdictKind.DEPTH_BOUNDED_UNKNOWN: 2,
        }[self.kind]

    def to_record(self) -> dict:
        record = {
            "record": "verdict",
            "algorithm": self.algorithm,
            "predicate": self.predicate,
            "verdict": self.kind.value,
            "bounded_incomplete": self.bounded_incomplete,
        }
        record.update(self.stats.to_record())
        if self.algorithm == "a2":
            record["units_tried"] = self.stats.units_tried
            record["unit_matches"] = self.stats.matches
            record["unit_reuse"] = self.stats.reuse_count
        return record


def anonymous_root_name(constants: Iterable[str]) -> str:
    taken = set(constants)
    if "x" not in taken:
        return "x"
    i = 1
    while f"x{i}" in taken:
        i += 1
    return f"x{i}"


def signed_of(lit: Literal) -> Signed:
    return Signed(lit.atom.pred, lit.positive)


@dataclass
class Alternative:
    description: str
    apply_fn: Callable[[], None]

    def apply(self) -> None:
        self.apply_fn()


@dataclass
class Task:
    description: str
    alternatives: list[Alternative]


# grounding target descriptors: ("node", NodeId) or ("fresh", position)
_Desc = tuple


class A1CompletionStructure(ForestState):
    """Tableau state for the direct engine.

    The status map tracks every content entry; negative non-free entries
    additionally carry a ledger of already refuted rule instances, so a
    fresh successor re-arms them for the new instances only."""

    algorithm = "a1"

    def __init__(
        self,
        program: Program,
        *,
        pred: Optional[str] = None,
        epsilon: Optional[str] = None,
        k: Optional[int] = None,
        max_depth: Optional[int] = None,
        stats: Optional[SearchStats] = None,
        deadline: Optional[float] = None,
        max_tasks: Optional[int] = None,
    ):
        if epsilon is None:
            anon = anonymous_root_name(program.constants)
            roots = [anon] + list(program.constants)
            self.epsilon = NodeId(anon)
        else:
            if epsilon not in program.constants:
                raise ValueError(f"unknown constant {epsilon!r}")
            roots = list(program.constants)
            self.epsilon = NodeId(epsilon)
        super().__init__(roots, program.constants, program.free_preds)
        self.program = program
        self.k = k if k is not None else redundancy_bound(len(program.upreds))
        self.max_depth = max_depth
        self.stats = stats if stats is not None else SearchStats()
        self.deadline = deadline
        self.max_tasks = max_tasks
        self.pruned = False
        self.st: dict[tuple[Key, Signed], str] = {}
        self.handled: dict[tuple[Key, Signed], set] = {}
        if pred is not None:
            self.insert_tracked(self.epsilon, Signed(pred, True))

    # -- bookkeeping ----------------------------------------------------

    def set_status(self, key: Key, sp: Signed, value: str) -> None:
        skey = (key, sp)
        old = self.st.get(skey)
        self.st[skey] = value

        def undo() -> None:
            if old is None:
                del self.st[skey]
            else:
                self.st[skey] = old

        self.trail.push(undo)

    def status(self, key: Key, sp: Signed) -> Optional[str]:
        return self.st.get((key, sp))

    def insert_tracked(self, key: Key, sp: Signed) -> bool:
        """Insert content; new non-free entries start unexpanded, free
        predicates are trivially expanded by their choice rule."""
        new = self.insert(key, sp)
        if new:
            status = EXP if sp.name in self.free_preds else UNEXP
            self.set_status(key, sp, status)
        return new

    def _mark_handled(self, okey: tuple[Key, Signed], instance_key) -> None:
        ledger = self.handled.get(okey)
        if ledger is None:
            ledger = set()
            self.handled[okey] = ledger

            def undo_new() -> None:
                del self.handled[okey]

            self.trail.push(undo_new)
        ledger.add(instance_key)

        def undo() -> None:
            ledger.discard(instance_key)

        self.trail.push(undo)

    def handled_set(self, okey: tuple[Key, Signed]) -> set:
        return self.handled.get(okey, set())

    def decided(self, key: Key, name: str) -> bool:
        content = self.content(key)
        return Signed(name, True) in content or Signed(name, False) in content

    # -- saturation and applicability ------------------------------------

    def is_saturated(self, x: NodeId) -> bool:
        """Every unary predicate decided and expanded at x, every binary
        predicate decided and expanded on every outgoing arc."""
        for q in self.program.upreds:
            if not self.decided(x, q):
                return False
        for sp in self.content(x):
            if self.st.get((x, sp)) != EXP:
                return False
        for arc in self.forest.arcs_from(x):
            for f in self.program.bpreds:
                if not self.decided(arc, f):
                    return False
            for sp in self.content(arc):
                if self.st.get((arc, sp)) != EXP:
                    return False
        return True

    def is_redundant_node(self, x: NodeId) -> bool:
        """Saturated, unblocked, and owning at least k equal-content
        ancestors. Blocking is checked first: a blocked node is never
        redundant."""
        if not self.is_saturated(x):
            return False
        if self.is_blocked(x):
            return False
        content = self.content_of_node(x)
        equal = sum(
            1 for y in x.ancestors() if self.content_of_node(y) == content
        )
        return equal >= self.k

    # -- grounding helpers ------------------------------------------------

    def _head_matches_node(self, term, x: NodeId) -> bool:
        return term.is_variable or NodeId(term.name) == x

    def _fresh_allowed(self, x: NodeId) -> bool:
        if self.max_depth is None or x.depth + 1 <= self.max_depth:
            return True
        self.pruned = True
        return False

    def _positive_candidates(self, x: NodeId, position: int) -> list[_Desc]:
        """Existing successors first, then a fresh child, then constants
        not yet linked from x."""
        existing = self.forest.successors(x)
        out: list[_Desc] = [("node", y) for y in existing]
        if self._fresh_allowed(x):
            out.append(("fresh", position))
        linked = set(existing)
        for c in self.program.constants:
            node = NodeId(c)
            if node not in linked:
                out.append(("node", node))
        return out

    def _instance_candidates(self, x: NodeId) -> list[NodeId]:
        """Ground targets a rule instance may use at x: tree children and
        all constants (absent extra arcs are created lazily when a
        connecting literal gets refuted)."""
        return self.forest.children(x) + [NodeId(c) for c in self.program.constants]

    @staticmethod
    def _ineqs_ok(shape: UnaryShape, resolve) -> bool:
        for ineq in shape.inequalities:
            if resolve(ineq.left) == resolve(ineq.right):
                return False
        return True

    def _groundings(self, x: NodeId, shape: UnaryShape) -> list[tuple[_Desc, ...]]:
        per_term: list[list[_Desc]] = []
        position: dict = {}
        for i, spec in enumerate(shape.successors):
            position[spec.term] = i
            if spec.term.is_variable:
                per_term.append(self._positive_candidates(x, i))
            else:
                per_term.append([("node", NodeId(spec.term.name))])
        out = []
        for combo in itertools.product(*per_term):

            def resolve(term, combo=combo):
                if term.is_variable:
                    return combo[position[term]]
                return ("node", NodeId(term.name))

            if self._ineqs_ok(shape, resolve):
                out.append(combo)
        return out

    def _instance_groundings(
        self, x: NodeId, shape: UnaryShape
    ) -> list[tuple[NodeId, ...]]:
        per_term: list[list[NodeId]] = []
        position: dict = {}
        for i, spec in enumerate(shape.successors):
            position[spec.term] = i
            if spec.term.is_variable:
                per_term.append(self._instance_candidates(x))
            else:
                per_term.append([NodeId(spec.term.name)])
        out = []
        for combo in itertools.product(*per_term):

            def resolve(term, combo=combo):
                if term.is_variable:
                    return combo[position[term]]
                return NodeId(term.name)

            if self._ineqs_ok(shape, resolve):
                out.append(combo)
        return out

    def _ensure_arc(self, x: NodeId, y: NodeId) -> None:
        if y.parent() == x:
            return
        if not self.forest.has_es(x, y):
            self.forest.add_es(x, y)

    # -- expansion rules ---------------------------------------------------

    def expand_unary_positive(self, x: NodeId, p: str) -> list[Alternative]:
        """Choice points justifying p at x: one per defining rule whose
        head term matches x and per admissible grounding of its successor
        terms."""
        sp = Signed(p, True)
        alternatives: list[Alternative] = []
        for rule in self.program.rules_for_head(p):
            if rule.kind is RuleKind.FREE:
                if all(self._head_matches_node(t, x) for t in rule.head.args):
                    alternatives.append(
                        Alternative(
                            f"{p} at {x} by choice rule",
                            lambda x=x, sp=sp: self.set_status(x, sp, EXP),
                        )
                    )
                continue
            shape = unary_shape(rule)
            if not self._head_matches_node(shape.head_term, x):
                continue
            for binding in self._groundings(x, shape):
                alternatives.append(
                    Alternative(
                        f"{p} at {x} by rule line {rule.line}",
                        lambda x=x, sp=sp, shape=shape, binding=binding: (
                            self._apply_unary_positive(x, sp, shape, binding)
                        ),
                    )
                )
        return alternatives

    def _materialize(self, x: NodeId, desc: _Desc) -> NodeId:
        if desc[0] == "fresh":
            child = self.forest.add_child(x)
            self.stats.nodes_created += 1
            self.stats.max_depth_seen = max(self.stats.max_depth_seen, child.depth)
            self._rearm_negatives(x)
            return child
        y = desc[1]
        self._ensure_arc(x, y)
        return y

    def _rearm_negatives(self, x: NodeId) -> None:
        # a new successor creates new ground instances for every negative
        # unary obligation at x
        for sp in self.content(x):
            if sp.positive or sp.name in self.free_preds:
                continue
            if self.st.get((x, sp)) == EXP:
                self.set_status(x, sp, UNEXP)

    def _apply_unary_positive(
        self, x: NodeId, sp: Signed, shape: UnaryShape, binding: tuple[_Desc, ...]
    ) -> None:
        head_atom = GroundAtom(sp.name, (x,))
        body_positive: list[GroundAtom] = []
        for lit in shape.beta:
            self.insert_tracked(x, signed_of(lit))
            if lit.positive:
                body_positive.append(GroundAtom(lit.atom.pred, (x,)))
        for spec, desc in zip(shape.successors, binding):
            y = self._materialize(x, desc)
            arc = (x, y)
            for lit in spec.gamma:
                self.insert_tracked(arc, signed_of(lit))
                if lit.positive:
                    body_positive.append(GroundAtom(lit.atom.pred, (x, y)))
            for lit in spec.delta:
                self.insert_tracked(y, signed_of(lit))
                if lit.positive:
                    body_positive.append(GroundAtom(lit.atom.pred, (y,)))
        self.set_status(x, sp, EXP)
        for atom in body_positive:
            self.g.add_arc(head_atom, atom)
        if body_positive and self.g.has_cycle():
            raise ClashError(f"dependency cycle while justifying {head_atom}")

    def expand_unary_negative(self, x: NodeId, p: str) -> list[Alternative]:
        """Refutation choices for the first pending instance of a rule
        defining p at x; with nothing pending, a single bookkeeping
        alternative closes the obligation."""
        sp = Signed(p, False)
        okey = (x, sp)
        pending = self._pending_instances(x, p, okey)
        if not pending:
            return [
                Alternative(
                    f"not {p} at {x}: all instances refuted",
                    lambda: self.set_status(x, sp, EXP),
                )
            ]
        instance_key, shape, targets = pending[0]
        ground_literals = self._ground_body(x, shape, targets)
        for key, lit_sp in ground_literals:
            if lit_sp.negated() in self.content(key):
                return [
                    Alternative(
                        f"not {p} at {x}: instance already refuted",
                        lambda okey=okey, ik=instance_key: self._finish_instance(
                            okey, ik
                        ),
                    )
                ]
        alternatives = []
        for key, lit_sp in ground_literals:
            if lit_sp in self.content(key):
                continue  # the complement would contradict present content
            alternatives.append(
                Alternative(
                    f"not {p} at {x}: refute {lit_sp} at {key}",
                    lambda okey=okey, ik=instance_key, key=key, comp=lit_sp.negated(): (
                        self._apply_refutation(okey, ik, key, comp)
                    ),
                )
            )
        return alternatives

    def _pending_instances(self, x: NodeId, p: str, okey) -> list:
        handled = self.handled_set(okey)
        pending = []
        for rule_index, rule in enumerate(self.program.rules_for_head(p)):
            if rule.kind is RuleKind.FREE:
                continue  # a choice rule never forces the atom
            shape = unary_shape(rule)
            if not self._head_matches_node(shape.head_term, x):
                continue
            for targets in self._instance_groundings(x, shape):
                instance_key = (rule_index, targets)
                if instance_key not in handled:
                    pending.append((instance_key, shape, targets))
        return pending

    def _ground_body(
        self, x: NodeId, shape: UnaryShape, targets: tuple[NodeId, ...]
    ) -> list[tuple[Key, Signed]]:
        out: list[tuple[Key, Signed]] = []
        for lit in shape.beta:
            out.append((x, signed_of(lit)))
        for spec, y in zip(shape.successors, targets):
            for lit in spec.gamma:
                out.append(((x, y), signed_of(lit)))
            for lit in spec.delta:
                out.append((y, signed_of(lit)))
        return out

    def _finish_instance(self, okey, instance_key) -> None:
        self._mark_handled(okey, instance_key)
        x = okey[0]
        if not self._pending_instances(x, okey[1].name, okey):
            self.set_status(x, okey[1], EXP)

    def _apply_refutation(self, okey, instance_key, key: Key, comp: Signed) -> None:
        if isinstance(key, tuple):
            self._ensure_arc(key[0], key[1])
        self.insert_tracked(key, comp)
        self._finish_instance(okey, instance_key)

    def choose_unary(self, x: NodeId) -> list[Alternative]:
        """Inject a sign for the first undecided unary predicate;
        negative branch first."""
        for q in self.program.upreds:
            if not self.decided(x, q):
                return [
                    Alternative(
                        f"choose not {q} at {x}",
                        lambda x=x, q=q: self.insert_tracked(x, Signed(q, False)),
                    ),
                    Alternative(
                        f"choose {q} at {x}",
                        lambda x=x, q=q: self.insert_tracked(x, Signed(q, True)),
                    ),
                ]
        return []

    def expand_binary_positive(self, arc: ArcId, f: str) -> list[Alternative]:
        x, y = arc
        sp = Signed(f, True)
        alternatives: list[Alternative] = []
        for rule in self.program.rules_for_head(f):
            if rule.kind is RuleKind.FREE:
                if self._head_matches_node(
                    rule.head.args[0], x
                ) and self._head_matches_node(rule.head.args[1], y):
                    alternatives.append(
                        Alternative(
                            f"{f} on {x}->{y} by choice rule",
                            lambda arc=arc, sp=sp: self.set_status(arc, sp, EXP),
                        )
                    )
                continue
            shape = binary_shape(rule)
            if not (
                self._head_matches_node(shape.s, x)
                and self._head_matches_node(shape.t, y)
            ):
                continue
            alternatives.append(
                Alternative(
                    f"{f} on {x}->{y} by rule line {rule.line}",
                    lambda arc=arc, sp=sp, shape=shape: self._apply_binary_positive(
                        arc, sp, shape
                    ),
                )
            )
        return alternatives

    def _apply_binary_positive(self, arc: ArcId, sp: Signed, shape: BinaryShape):
        x, y = arc
        head_atom = GroundAtom(sp.name, (x, y))
        body_positive: list[GroundAtom] = []
        for lit in shape.beta:
            self.insert_tracked(x, signed_of(lit))
            if lit.positive:
                body_positive.append(GroundAtom(lit.atom.pred, (x,)))
        for lit in shape.gamma:
            self.insert_tracked(arc, signed_of(lit))
            if lit.positive:
                body_positive.append(GroundAtom(lit.atom.pred, (x, y)))
        for lit in shape.delta:
            self.insert_tracked(y, signed_of(lit))
            if lit.positive:
                body_positive.append(GroundAtom(lit.atom.pred, (y,)))
        self.set_status(arc, sp, EXP)
        for atom in body_positive:
            self.g.add_arc(head_atom, atom)
        if body_positive and self.g.has_cycle():
            raise ClashError(f"dependency cycle while justifying {head_atom}")

    def expand_binary_negative(self, arc: ArcId, f: str) -> list[Alternative]:
        """Both arc endpoints are fixed, so each defining rule contributes
        at most one instance to refute."""
        x, y = arc
        sp = Signed(f, False)
        okey = (arc, sp)
        handled = self.handled_set(okey)
        pending = []
        for rule_index, rule in enumerate(self.program.rules_for_head(f)):
            if rule.kind is RuleKind.FREE:
                continue
            shape = binary_shape(rule)
            if not (
                self._head_matches_node(shape.s, x)
                and self._head_matches_node(shape.t, y)
            ):
                continue
            if rule_index not in handled:
                pending.append((rule_index, shape))
        if not pending:
            return [
                Alternative(
                    f"not {f} on {x}->{y}: all instances refuted",
                    lambda: self.set_status(arc, sp, EXP),
                )
            ]
        rule_index, shape = pending[0]
        last = len(pending) == 1
        literals: list[tuple[Key, Signed]] = []
        for lit in shape.beta:
            literals.append((x, signed_of(lit)))
        for lit in shape.gamma:
            literals.append((arc, signed_of(lit)))
        for lit in shape.delta:
            literals.append((y, signed_of(lit)))

        def finish(ik=rule_index) -> None:
            self._mark_handled(okey, ik)
            if last:
                self.set_status(arc, sp, EXP)

        for key, lit_sp in literals:
            if lit_sp.negated() in self.content(key):
                return [
                    Alternative(f"not {f} on {x}->{y}: already refuted", finish)
                ]
        def refute(key: Key, comp: Signed) -> None:
            self.insert_tracked(key, comp)
            finish()

        alternatives = []
        for key, lit_sp in literals:
            if lit_sp in self.content(key):
                continue
            alternatives.append(
                Alternative(
                    f"not {f} on {x}->{y}: refute {lit_sp} at {key}",
                    lambda key=key, comp=lit_sp.negated(): refute(key, comp),
                )
            )
        return alternatives

    def choose_binary(self, arc: ArcId) -> list[Alternative]:
        for f in self.program.bpreds:
            if not self.decided(arc, f):
                return [
                    Alternative(
                        f"choose not {f} on {arc[0]}->{arc[1]}",
                        lambda arc=arc, f=f: self.insert_tracked(arc, Signed(f, False)),
                    ),
                    Alternative(
                        f"choose {f} on {arc[0]}->{arc[1]}",
                        lambda arc=arc, f=f: self.insert_tracked(arc, Signed(f, True)),
                    ),
                ]
        return []

    # -- task discovery ----------------------------------------------------

    def node_task(self, x: NodeId) -> Optional[Task]:
        """The first applicable expansion at x: pending content entries,
        then arc entries, then sign choices. None when x is saturated."""
        for sp in sorted(self.content(x), key=signed_sort_key):
            if self.st.get((x, sp)) != UNEXP:
                continue
            if sp.positive:
                alts = self.expand_unary_positive(x, sp.name)
            else:
                alts = self.expand_unary_negative(x, sp.name)
            return Task(f"expand {sp} at {x}", alts)
        for arc in self.forest.arcs_from(x):
            for sp in sorted(self.content(arc), key=signed_sort_key):
                if self.st.get((arc, sp)) != UNEXP:
                    continue
                if sp.positive:
                    alts = self.expand_binary_positive(arc, sp.name)
                else:
                    alts = self.expand_binary_negative(arc, sp.name)
                return Task(f"expand {sp} on {arc[0]}->{arc[1]}", alts)
        choice = self.choose_unary(x)
        if choice:
            return Task(f"choose unary at {x}", choice)
        for arc in self.forest.arcs_from(x):
            choice = self.choose_binary(arc)
            if choice:
                return Task(f"choose binary on {arc[0]}->{arc[1]}", choice)
        return None

    def check_budget(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EngineBudgetError("time limit exceeded")
        if self.max_tasks is not None and self.stats.tasks > self.max_tasks:
            raise EngineBudgetError("task budget exceeded")

    def next_task(self) -> Optional[Task]:
        self.check_budget()
        # no mutation happens during one scan, so blocking and saturation
        # can be derived once per node
        blocked: dict[NodeId, bool] = {}
        saturated: dict[NodeId, bool] = {}

        def is_blocked(x: NodeId) -> bool:
            if x not in blocked:
                blocked[x] = self.is_blocked(x)
            return blocked[x]

        def is_saturated(x: NodeId) -> bool:
            if x not in saturated:
                saturated[x] = self.is_saturated(x)
            return saturated[x]

        for x in self.forest.nodes():
            parent = x.parent()
            if parent is not None and not is_saturated(parent):
                continue
            if is_blocked(x):
                continue
            task = None if is_saturated(x) else self.node_task(x)
            if task is not None:
                return task
            if is_saturated(x) and not is_blocked(x):
                content = self.content_of_node(x)
                equal = sum(
                    1
                    for y in x.ancestors()
                    if self.content_of_node(y) == content
                )
                if equal >= self.k:
                    self.stats.redundancy_events.append(
                        {
                            "node": str(x),
                            "equal_ancestors": equal,
                            "chain_position": equal + 1,
                        }
                    )
                    raise ClashError(
                        f"redundant node {x} ({equal} equal ancestors)"
                    )
        return None

    # -- final audit ---------------------------------------------------------

    def arc_positivity_ok(self) -> bool:
        """Every tree arc of a saturated source carries a positive binary
        predicate (a tree successor exists only to support such an atom)."""
        for x, y in self.forest.tree_arcs():
            if not self.is_saturated(x):
                continue
            if not any(sp.positive for sp in self.content((x, y))):
                return False
        return True

    def is_complete_clash_free(self) -> bool:
        """Re-derive every clash-freeness condition from scratch on the
        final structure: acyclic dependency graph, every node blocked or
        saturated, no redundant nodes."""
        if self.g.has_cycle():
            return False
        assert self.arc_positivity_ok()
        for x in self.forest.nodes():
            if self.is_blocked(x):
                continue
            if not self.is_saturated(x):
                return False
            if self.is_redundant_node(x):
                return False
        return True


# ----------------------------------------------------------------------
# Generic chronological backtracking over tasks


def run_search(
    state,
    next_task_fn: Callable[[], Optional[Task]],
    stats: SearchStats,
    on_complete: Callable[[], bool],
) -> bool:
    """Depth-first search: one stack frame per task, iterating its
    alternatives with trail-based undo. on_complete decides whether a
    completed structure ends the search (its state is left intact) or is
    recorded and searched past (unit enumeration)."""
    trail = state.trail
    base = trail.mark()

    def make_frame():
        try:
            task = next_task_fn()
        except ClashError:
            return "clash"
        if task is None:
            return "complete"
        if len(task.alternatives) > 1:
            stats.choice_points += 1
        return [trail.mark(), iter(task.alternatives)]

    frame = make_frame()
    if frame == "complete":
        if on_complete():
            return True
        trail.undo_to(base)
        return False
    if frame == "clash":
        trail.undo_to(base)
        return False
    stack = [frame]
    while stack:
        top = stack[-1]
        trail.undo_to(top[0])
        alternative = next(top[1], None)
        if alternative is None:
            stack.pop()
            stats.backtracks += 1
            continue
        stats.tasks += 1
        try:
            alternative.apply()
        except ClashError:
            continue
        nxt = make_frame()
        if nxt == "clash":
            continue
        if nxt == "complete":
            if on_complete():
                return True
            continue
        stack.append(nxt)
    trail.undo_to(base)
    return False


# ----------------------------------------------------------------------
# Satisfiability driver


def _check_engine_input(program: Program, pred: str) -> None:
    if program.has_constraints():
        raise ValueError(
            "the engines require a constraint-free program; apply "
            "eliminate_constraints first"
        )
    if pred not in program.upreds:
        raise ValueError(f"{pred!r} is not a unary predicate of the program")


def _depth_schedule(explicit: Optional[int]) -> Iterator[Optional[int]]:
    if explicit is not None:
        yield explicit
        return
    depth = 0
    while True:
        yield depth
        depth = max(1, depth * 2)


def check_sat_a1(
    program: Program, pred: str, policy: Optional[RedundancyPolicy] = None
) -> Verdict:
    """Satisfiability of a unary predicate by the direct tableau engine.

    Tries an anonymous root first, then each constant as the root where
    the predicate must hold. Without an explicit depth bound the driver
    deepens iteratively; see the module docstring for verdict semantics.
    """
    policy = policy or RedundancyPolicy()
    _check_engine_input(program, pred)
    k = policy.effective_k(program)
    stats = SearchStats()
    deadline = (
        time.monotonic() + policy.time_limit if policy.time_limit is not None else None
    )
    epsilon_choices: list[Optional[str]] = [None] + list(program.constants)
    for depth in _depth_schedule(policy.max_depth):
        pruned_any = False
        for epsilon in epsilon_choices:
            cs = A1CompletionStructure(
                program,
                pred=pred,
                epsilon=epsilon,
                k=k,
                max_depth=depth,
                stats=stats,
                deadline=deadline,
                max_tasks=policy.max_tasks,
            )
            found = run_search(cs, cs.next_task, stats, cs.is_complete_clash_free)
            if found:
                return Verdict(
                    VerdictKind.SAT,
                    "a1",
                    pred,
                    stats,
                    witness=cs,
                    bounded_incomplete=policy.bounded_incomplete,
                    depth_used=depth,
                )
            pruned_any = pruned_any or cs.pruned
        if not pruned_any:
            return Verdict(
                VerdictKind.UNSAT,
                "a1",
                pred,
                stats,
                bounded_incomplete=policy.bounded_incomplete,
                depth_used=depth,
            )
        if policy.max_depth is not None:
            return Verdict(
                VerdictKind.DEPTH_BOUNDED_UNKNOWN,
                "a1",
                pred,
                stats,
                bounded_incomplete=True,
                depth_used=depth,
            )
    raise AssertionError("unreachable: the depth schedule is infinite")
