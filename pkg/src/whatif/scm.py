"""Random binary structural causal models for benchmarking.

A model is a topologically ordered list of blocks.  A prior block is a
root Bernoulli(p).  A dependent block computes the linear threshold
f = [sum_k theta_k * parent_k > 0.5] and emits f xor noise with noise ~
Bernoulli(q), expressed as an observable procedure so that evidence
inverts the noise instead of rejecting, and counterfactuals rerun f
under the abducted noise.

Queries pick evidence by independent inclusion, one intervention node
with at least one admissible descendant, and a descendant target.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from functools import partial

from .errors import DegenerateGraphError

PRIOR = "prior"
DEPENDENT = "dependent"

_THETA_TOL = 1e-9


def linear_threshold(theta: tuple[float, ...], parent_values) -> bool:
    """f = [sum of theta over true parents > 0.5].

    Accumulates in declaration order; the exact oracle evaluates the
    same function so borderline sums agree bitwise with the engine.
    """
    acc = 0.0
    for t, v in zip(theta, parent_values):
        if v:
            acc += t
    return acc > 0.5


@dataclass(frozen=True)
class ScmNode:
    id: str
    kind: str
    p: float | None = None
    parents: tuple[str, ...] = ()
    theta: tuple[float, ...] = ()
    q: float | None = None


@dataclass(frozen=True)
class ScmSpec:
    """Validated SCM; node order is the topological order."""

    nodes: tuple[ScmNode, ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        seen: set[str] = set()
        for node in self.nodes:
            ctx = f"node {node.id!r}"
            if node.id in seen:
                raise ValueError(f"model: duplicate node id {node.id!r}")
            if node.kind == PRIOR:
                if node.p is None or not 0.0 <= node.p <= 1.0:
                    raise ValueError(f"model: {ctx}: p must lie in [0, 1], got {node.p}")
                if node.parents:
                    raise ValueError(f"model: {ctx}: prior nodes take no parents")
            elif node.kind == DEPENDENT:
                if not node.parents:
                    raise ValueError(f"model: {ctx}: dependent nodes need parents")
                for par in node.parents:
                    if par not in seen:
                        raise ValueError(
                            f"model: {ctx}: parent {par!r} is not an earlier node"
                        )
                if len(node.theta) != len(node.parents):
                    raise ValueError(
                        f"model: {ctx}: got {len(node.theta)} theta values for "
                        f"{len(node.parents)} parents"
                    )
                if abs(sum(node.theta) - 1.0) > _THETA_TOL:
                    raise ValueError(
                        f"model: {ctx}: theta must sum to 1, got {sum(node.theta)!r}"
                    )
                if node.q is None or not 0.0 <= node.q <= 1.0:
                    raise ValueError(f"model: {ctx}: q must lie in [0, 1], got {node.q}")
            else:
                raise ValueError(f"model: {ctx}: unknown kind {node.kind!r}")
            seen.add(node.id)
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> ScmNode:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"model has no node {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for node in self.nodes:
            for par in node.parents:
                out[par].append(node.id)
        return out


@dataclass
class BenchQuery:
    evidence: dict[str, bool]
    intervention: tuple[str, bool]
    target: str
    kind: str = "cf"


def descendants(scm: ScmSpec, node_id: str) -> set[str]:
    """Strict descendants of node_id under the model edges."""
    scm.node(node_id)
    children = scm.children()
    out: set[str] = set()
    frontier = [node_id]
    while frontier:
        for child in children[frontier.pop()]:
            if child not in out:
                out.add(child)
                frontier.append(child)
    return out


def has_directed_path(scm: ScmSpec, src: str, dst: str) -> bool:
    """True iff a directed path of one or more edges runs src -> dst."""
    scm.node(dst)
    return dst in descendants(scm, src)


# -- generation ------------------------------------------------------------


def generate_scm(
    rng: random.Random,
    n_blocks: int = 15,
    edge_density: float = 0.3,
    max_parents: int = 4,
) -> ScmSpec:
    """Draw a random model: first node prior, later nodes dependent when
    edge sampling gives them parents.

    Edge j -> i (j < i) is included with probability edge_density, then
    parent sets are thinned to max_parents.  p and q are U[0.3, 0.7];
    theta is unit-normalized Beta(5, 5).
    """
    if n_blocks < 1:
        raise ValueError(f"n_blocks must be positive, got {n_blocks}")
    nodes: list[ScmNode] = []
    for i in range(n_blocks):
        nid = f"n{i}"
        parents: list[int] = []
        if i > 0:
            parents = [j for j in range(i) if rng.random() < edge_density]
            if len(parents) > max_parents:
                parents = sorted(rng.sample(parents, max_parents))
        if not parents:
            nodes.append(ScmNode(nid, PRIOR, p=rng.uniform(0.3, 0.7)))
            continue
        raw = [rng.betavariate(5.0, 5.0) for _ in parents]
        total = sum(raw)
        nodes.append(
            ScmNode(
                nid,
                DEPENDENT,
                parents=tuple(f"n{j}" for j in parents),
                theta=tuple(t / total for t in raw),
                q=rng.uniform(0.3, 0.7),
            )
        )
    return ScmSpec(tuple(nodes))


def generate_query(rng: random.Random, scm: ScmSpec) -> BenchQuery:
    """Draw evidence, one intervention, and a downstream target.

    Evidence includes each node independently with probability 0.3 and
    is resampled whole until non-empty.  The target must be a strict
    descendant of the intervention node and not among the first two
    nodes in topological order; if no node admits such a target the
    graph is degenerate and the caller should regenerate.
    """
    ids = [n.id for n in scm.nodes]
    while True:
        evidence = {nid: rng.random() < 0.5 for nid in ids if rng.random() < 0.3}
        if evidence:
            break
    excluded = set(ids[:2])
    candidates = [nid for nid in ids if descendants(scm, nid) - excluded]
    if not candidates:
        raise DegenerateGraphError(
            "degenerate graph: no node has an admissible descendant target"
        )
    d = rng.choice(candidates)
    if d in evidence:
        d_value = not evidence[d]
    else:
        d_value = rng.random() < 0.5
    targets = sorted(descendants(scm, d) - excluded)
    target = rng.choice(targets)
    return BenchQuery(evidence=evidence, intervention=(d, d_value), target=target)


def derive_seed(base: int, *parts) -> int:
    """Stable 63-bit sub-seed from a base seed and a label path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(base).encode())
    for part in parts:
        h.update(b"/")
        h.update(repr(part).encode())
    return int.from_bytes(h.digest(), "little") >> 1


# -- programs --------------------------------------------------------------


def _eager_program(ctx, scm: ScmSpec, query: BenchQuery):
    """Every node instantiated in topological order, then the statements."""
    evidence = query.evidence
    choices = {}
    for node in scm.nodes:
        if node.kind == PRIOR:
            ev = evidence.get(node.id)
            choices[node.id] = ctx.bernoulli(
                node.p,
                name=node.id,
                proposal_p=None if ev is None else (1.0 if ev else 0.0),
            )
        else:
            pars = [choices[p] for p in node.parents]
            f_val = linear_threshold(node.theta, [c.value for c in pars])
            choices[node.id] = ctx.observable_bernoulli(
                f_val, node.q, name=node.id, depends_on=pars
            )
    for nid, val in evidence.items():
        if scm.node(nid).kind == DEPENDENT:
            ctx.observe(choices[nid], val)
    d, d_value = query.intervention
    ctx.do(choices[d], d_value, kind=query.kind)
    ctx.predict(choices[query.target].value, label=query.target, counterfactual=True)


def _lazy_program(ctx, scm: ScmSpec, query: BenchQuery):
    """Only ancestors of the statements actually issued get evaluated.

    Observing a root is conditioning-by-proposal on the node itself, so
    roots under evidence are built with a pinned proposal rather than
    observed; the importance weight is the same log-mass either way.
    """
    evidence = query.evidence

    def compute(nid):
        def thunk():
            node = scm.node(nid)
            if node.kind == PRIOR:
                ev = evidence.get(nid)
                return ctx.bernoulli(
                    node.p,
                    name=nid,
                    proposal_p=None if ev is None else (1.0 if ev else 0.0),
                )
            pars = [compute(p) for p in node.parents]
            f_val = linear_threshold(node.theta, [c.value for c in pars])
            return ctx.observable_bernoulli(
                f_val, node.q, name=nid, depends_on=pars
            )

        return ctx.value_if_needed(nid, thunk)

    if ctx.observing():
        for nid, val in evidence.items():
            choice = compute(nid)
            if scm.node(nid).kind == DEPENDENT:
                ctx.observe(choice, val)
    if ctx.intervening():
        d, d_value = query.intervention
        ctx.do(compute(d), d_value, kind=query.kind)
    ctx.predict(compute(query.target).value, label=query.target, counterfactual=True)


def build_program(scm: ScmSpec, query: BenchQuery, style: str = "eager"):
    """Picklable program closure for one (model, query) pair."""
    if query.intervention[0] not in scm:
        raise ValueError(f"query: intervention node {query.intervention[0]!r} unknown")
    if query.target not in scm:
        raise ValueError(f"query: predict node {query.target!r} unknown")
    for nid in query.evidence:
        if nid not in scm:
            raise ValueError(f"query: evidence node {nid!r} unknown")
    if style == "eager":
        return partial(_eager_program, scm=scm, query=query)
    if style == "lazy":
        return partial(_lazy_program, scm=scm, query=query)
    raise ValueError(f"style must be 'eager' or 'lazy', got {style!r}")


# -- JSON ------------------------------------------------------------------


def scm_to_json(scm: ScmSpec) -> dict:
    nodes = []
    for node in scm.nodes:
        if node.kind == PRIOR:
            nodes.append({"id": node.id, "kind": PRIOR, "p": node.p})
        else:
            nodes.append(
                {
                    "id": node.id,
                    "kind": DEPENDENT,
                    "parents": list(node.parents),
                    "theta": list(node.theta),
                    "q": node.q,
                }
            )
    return {"nodes": nodes}


def _require(cond: bool, message: str):
    if not cond:
        raise ValueError(message)


def scm_from_json(doc) -> ScmSpec:
    _require(isinstance(doc, dict), "model: top level must be an object")
    _require(isinstance(doc.get("nodes"), list), "model: 'nodes' must be a list")
    nodes = []
    for i, item in enumerate(doc["nodes"]):
        _require(isinstance(item, dict), f"model: nodes[{i}] must be an object")
        nid = item.get("id")
        _require(
            isinstance(nid, str) and nid != "", f"model: nodes[{i}]: missing id"
        )
        kind = item.get("kind")
        if kind == PRIOR:
            _require(
                isinstance(item.get("p"), (int, float)),
                f"model: node {nid!r}: prior nodes need numeric p",
            )
            nodes.append(ScmNode(nid, PRIOR, p=float(item["p"])))
        elif kind == DEPENDENT:
            parents = item.get("parents")
            theta = item.get("theta")
            _require(
                isinstance(parents, list) and parents,
                f"model: node {nid!r}: dependent nodes need a parents list",
            )
            _require(
                isinstance(theta, list)
                and all(isinstance(t, (int, float)) for t in theta),
                f"model: node {nid!r}: theta must be a list of numbers",
            )
            _require(
                isinstance(item.get("q"), (int, float)),
                f"model: node {nid!r}: dependent nodes need numeric q",
            )
            nodes.append(
                ScmNode(
                    nid,
                    DEPENDENT,
                    parents=tuple(parents),
                    theta=tuple(float(t) for t in theta),
                    q=float(item["q"]),
                )
            )
        else:
            raise ValueError(f"model: node {nid!r}: kind must be 'prior' or 'dependent'")
    return ScmSpec(tuple(nodes))


def _coerce_binary(value, where: str) -> bool:
    if isinstance(value, bool):
        return value
    if value in (0, 1):
        return bool(value)
    raise ValueError(f"query: {where} must be 0 or 1, got {value!r}")


def query_to_json(query: BenchQuery) -> dict:
    return {
        "evidence": {nid: int(v) for nid, v in query.evidence.items()},
        "do": {
            "id": query.intervention[0],
            "value": int(query.intervention[1]),
            "type": query.kind.upper(),
        },
        "predict": query.target,
    }


def query_from_json(doc) -> BenchQuery:
    _require(isinstance(doc, dict), "query: top level must be an object")
    evidence_doc = doc.get("evidence", {})
    _require(isinstance(evidence_doc, dict), "query: 'evidence' must be an object")
    evidence = {
        nid: _coerce_binary(v, f"evidence[{nid!r}]") for nid, v in evidence_doc.items()
    }
    do_doc = doc.get("do")
    _require(isinstance(do_doc, dict), "query: 'do' must be an object")
    _require(isinstance(do_doc.get("id"), str), "query: do.id must be a node id")
    kind = str(do_doc.get("type", "CF")).lower()
    _require(kind in ("cf", "iv"), "query: do.type must be 'CF' or 'IV'")
    target = doc.get("predict")
    _require(isinstance(target, str), "query: 'predict' must be a node id")
    return BenchQuery(
        evidence=evidence,
        intervention=(do_doc["id"], _coerce_binary(do_doc.get("value"), "do.value")),
        target=target,
        kind=kind,
    )


def load_model(path: str) -> ScmSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"model: {path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return scm_from_json(doc)


def load_query(path: str) -> BenchQuery:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"query: {path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return query_from_json(doc)
