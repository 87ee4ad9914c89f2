"""Goldberg-Jerrum style analysis of straight-line programs.

A :class:`GjProgram` is a DAG of nodes over ``{+, -, *, /}`` with
conditional nodes that branch on the sign of an earlier node.  Every
arithmetic node computes a rational function of the inputs; the analyzer
tracks a formal (numerator degree, denominator degree) pair per node,
propagated by common-denominator rules with no cancellation:

* input: (1, 0); constant: (0, 0)
* a +/- b: (max(na + db, nb + da), da + db)
* a * b:   (na + nb, da + db)
* a / b:   (na + db, da + nb)
* conditional: componentwise max over the two branches

so a node's tracked degree ``max(n, d)`` upper-bounds its true degree and
matches it for generic coefficients.  The predicate complexity counts
*distinct tested nodes*: two conditionals branching on the same node id
share one predicate, while structurally different nodes count separately
even if they happen to compute equal functions (structural identity is
what a program analysis can certify without deciding polynomial identity).

Nodes can only reference earlier nodes, so programs are acyclic by
construction and serialized programs are validated the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .bounds import BoundReport

_ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class GjNode:
    kind: str  # "input" | "const" | "arith" | "cond"
    index: int = -1  # input only
    value: float = 0.0  # const only
    op: str = ""  # arith only
    left: int = -1
    right: int = -1
    test: int = -1  # cond only
    if_nonneg: int = -1
    if_neg: int = -1
    num_deg: int = 0
    den_deg: int = 0

    @property
    def tracked_degree(self) -> int:
        return max(self.num_deg, self.den_deg)


class GjProgram:
    """Builder and analyzer for sign-conditional rational straight-line code."""

    def __init__(self, n_inputs: int):
        if n_inputs < 1:
            raise ValueError(f"need at least one input, got {n_inputs}")
        self.n_inputs = int(n_inputs)
        self.nodes: list[GjNode] = []
        self._output: int | None = None

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def _push(self, node: GjNode) -> int:
        self.nodes.append(node)
        self._output = len(self.nodes) - 1
        return self._output

    def _ref(self, node_id: int) -> GjNode:
        if not 0 <= node_id < len(self.nodes):
            raise ValueError(
                f"node id {node_id} is not defined yet; references must point "
                "to earlier nodes (programs are acyclic by construction)"
            )
        return self.nodes[node_id]

    def input(self, index: int) -> int:
        if not 0 <= index < self.n_inputs:
            raise ValueError(f"input index {index} out of range")
        return self._push(GjNode(kind="input", index=index, num_deg=1, den_deg=0))

    def const(self, value: float) -> int:
        return self._push(GjNode(kind="const", value=float(value)))

    def arith(self, op: str, left: int, right: int) -> int:
        if op not in _ARITH_OPS:
            raise ValueError(f"unknown operation {op!r}")
        a, b = self._ref(left), self._ref(right)
        if op in ("+", "-"):
            num = max(a.num_deg + b.den_deg, b.num_deg + a.den_deg)
            den = a.den_deg + b.den_deg
        elif op == "*":
            num = a.num_deg + b.num_deg
            den = a.den_deg + b.den_deg
        else:  # division
            num = a.num_deg + b.den_deg
            den = a.den_deg + b.num_deg
        return self._push(
            GjNode(kind="arith", op=op, left=left, right=right, num_deg=num, den_deg=den)
        )

    def cond(self, test: int, if_nonneg: int, if_neg: int) -> int:
        """Select ``if_nonneg`` where node ``test`` >= 0, else ``if_neg``."""
        self._ref(test)
        t, e = self._ref(if_nonneg), self._ref(if_neg)
        return self._push(
            GjNode(
                kind="cond",
                test=test,
                if_nonneg=if_nonneg,
                if_neg=if_neg,
                num_deg=max(t.num_deg, e.num_deg),
                den_deg=max(t.den_deg, e.den_deg),
            )
        )

    def set_output(self, node_id: int) -> None:
        self._ref(node_id)
        self._output = node_id

    @property
    def output(self) -> int:
        if self._output is None:
            raise ValueError("program has no nodes")
        return self._output

    # ------------------------------------------------------------------
    # analysis
    # ------------------------------------------------------------------

    def degree(self) -> int:
        """Max tracked degree over all nodes (an upper bound on true degrees)."""
        if not self.nodes:
            raise ValueError("program has no nodes")
        return max(node.tracked_degree for node in self.nodes)

    def predicate_complexity(self) -> int:
        """Number of distinct node ids appearing as conditional tests."""
        return len({node.test for node in self.nodes if node.kind == "cond"})

    def pdim_bound(self, p: int | None = None, c: float = 1.0) -> BoundReport:
        """Pseudo-dimension bound ``c * p * log2(max(degree * predicates, 2))``.

        ``p`` is the parameter count the program is interpreted over and
        defaults to the number of inputs.
        """
        p = self.n_inputs if p is None else p
        if p <= 0:
            raise ValueError(f"p must be positive, got {p}")
        degree = self.degree()
        predicates = self.predicate_complexity()
        guarded = max(degree * predicates, 2)
        return BoundReport(
            bound_value=c * p * math.log2(guarded),
            formula_id="gj-program",
            inputs={"p": p, "degree": degree, "predicates": predicates},
            log2_intermediates={"log2_guarded_product": math.log2(guarded)},
            constant_c=c,
        )

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for i, node in enumerate(self.nodes):
            entry: dict = {"id": i, "kind": node.kind}
            if node.kind == "input":
                entry["index"] = node.index
            elif node.kind == "const":
                entry["value"] = node.value
            elif node.kind == "arith":
                entry.update({"op": node.op, "left": node.left, "right": node.right})
            else:
                entry.update(
                    {
                        "test": node.test,
                        "if_nonneg": node.if_nonneg,
                        "if_neg": node.if_neg,
                    }
                )
            nodes.append(entry)
        return {"n_inputs": self.n_inputs, "output": self.output, "nodes": nodes}

    @classmethod
    def from_json(cls, obj: Mapping) -> "GjProgram":
        prog = cls(obj["n_inputs"])
        for expected_id, entry in enumerate(obj["nodes"]):
            if entry["id"] != expected_id:
                raise ValueError(
                    f"node ids must be dense and ordered; got {entry['id']} "
                    f"at position {expected_id}"
                )
            kind = entry["kind"]
            if kind == "input":
                prog.input(entry["index"])
            elif kind == "const":
                prog.const(entry["value"])
            elif kind == "arith":
                # _ref inside arith rejects forward references, i.e. cycles
                prog.arith(entry["op"], entry["left"], entry["right"])
            elif kind == "cond":
                prog.cond(entry["test"], entry["if_nonneg"], entry["if_neg"])
            else:
                raise ValueError(f"unknown node kind {kind!r}")
        prog.set_output(obj["output"])
        return prog
