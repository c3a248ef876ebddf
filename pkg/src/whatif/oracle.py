"""Exact inference over benchmark models by exogenous enumeration.

Every model in the benchmark class has one exogenous bit per node: the
value itself for prior nodes, the flip noise for dependent nodes.  With
m nodes the joint has 2^m worlds; endogenous values follow
deterministically, so posteriors and counterfactuals reduce to sums of
world probabilities.  Probabilities are kept in linear space and summed
with compensated summation.

Dependent-node functions are evaluated through small per-node lookup
tables built with the same scalar threshold arithmetic the engine uses,
so borderline theta sums agree with sampled runs bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleEvidenceError
from .scm import DEPENDENT, PRIOR, ScmSpec, linear_threshold

MAX_NODES = 25
_CHUNK = 1 << 16


@dataclass(frozen=True)
class DiscreteWorld:
    """One exogenous assignment with its induced node values.

    Exogenous keys are node ids for prior nodes and "<id>::noise" for
    dependent nodes, matching engine trace addresses.
    """

    exogenous: dict[str, bool]
    values: dict[str, bool]
    probability: float


def _check_size(scm: ScmSpec) -> int:
    m = len(scm.nodes)
    if m > MAX_NODES:
        raise ValueError(
            f"enumeration bound exceeded: {m} exogenous bits (max {MAX_NODES})"
        )
    return m


def _f_tables(scm: ScmSpec):
    """Per dependent node: parent column indices and a 2^k output table."""
    index = {n.id: i for i, n in enumerate(scm.nodes)}
    tables = {}
    for node in scm.nodes:
        if node.kind != DEPENDENT:
            continue
        k = len(node.parents)
        if k <= 12:
            table = np.array(
                [
                    linear_threshold(node.theta, [(pat >> j) & 1 for j in range(k)])
                    for pat in range(1 << k)
                ],
                dtype=bool,
            )
        else:
            table = None  # fall back to a dot product for very wide nodes
        tables[node.id] = ([index[p] for p in node.parents], table, node.theta)
    return tables


def _world_bits(m: int, lo: int, hi: int) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.uint64)[:, None]
    shifts = np.arange(m, dtype=np.uint64)[None, :]
    return ((idx >> shifts) & np.uint64(1)).astype(bool)


def _node_values(scm: ScmSpec, bits: np.ndarray, tables, forced: dict[str, bool]):
    """Endogenous values per world, with forced overrides applied."""
    values: dict[str, np.ndarray] = {}
    for i, node in enumerate(scm.nodes):
        if node.id in forced:
            col = np.full(bits.shape[0], forced[node.id], dtype=bool)
        elif node.kind == PRIOR:
            col = bits[:, i]
        else:
            cols, table, theta = tables[node.id]
            if table is not None:
                pattern = np.zeros(bits.shape[0], dtype=np.int64)
                for j, ci in enumerate(cols):
                    pattern |= values[scm.nodes[ci].id].astype(np.int64) << j
                f_val = table[pattern]
            else:
                stack = np.stack([values[scm.nodes[ci].id] for ci in cols], axis=1)
                f_val = stack.astype(float) @ np.asarray(theta) > 0.5
            col = f_val ^ bits[:, i]
        values[node.id] = col
    return values


def _world_probs(scm: ScmSpec, bits: np.ndarray) -> np.ndarray:
    probs = np.ones(bits.shape[0])
    for i, node in enumerate(scm.nodes):
        on = node.p if node.kind == PRIOR else node.q
        probs *= np.where(bits[:, i], on, 1.0 - on)
    return probs


def _validate_nodes(scm: ScmSpec, evidence, interventions, target=None):
    for nid in evidence:
        scm.node(nid)
    for nid in interventions:
        scm.node(nid)
    if target is not None:
        scm.node(target)


def _accumulate(scm: ScmSpec, evidence: dict[str, bool], interventions: dict[str, bool],
                target: str | None, condition_on_intervened: bool):
    """Chunked pass over all worlds.

    Returns (total evidence mass, mass where the target is true after
    forcing interventions).  Evidence is checked against the original
    world unless condition_on_intervened, which checks it against the
    mutilated one (post-surgery conditioning).
    """
    m = _check_size(scm)
    tables = _f_tables(scm)
    totals: list[float] = []
    hits: list[float] = []
    n_worlds = 1 << m
    for lo in range(0, n_worlds, _CHUNK):
        bits = _world_bits(m, lo, min(lo + _CHUNK, n_worlds))
        probs = _world_probs(scm, bits)
        forced_values = _node_values(scm, bits, tables, interventions)
        if condition_on_intervened:
            base_values = forced_values
        elif interventions:
            base_values = _node_values(scm, bits, tables, {})
        else:
            base_values = forced_values
        mask = np.ones(bits.shape[0], dtype=bool)
        for nid, val in evidence.items():
            mask &= base_values[nid] == val
        totals.append(math.fsum(probs[mask]))
        if target is not None:
            hits.append(math.fsum(probs[mask & forced_values[target]]))
    total = math.fsum(totals)
    hit = math.fsum(hits) if target is not None else 0.0
    return total, hit


def enumerate_posterior(scm: ScmSpec, evidence: dict[str, bool]) -> list[DiscreteWorld]:
    """Worlds consistent with the evidence, probabilities renormalized.

    Zero-probability worlds are omitted.  Raises ImpossibleEvidenceError
    when the evidence itself has probability zero.
    """
    m = _check_size(scm)
    _validate_nodes(scm, evidence, {})
    tables = _f_tables(scm)
    kept: list[tuple[dict, dict, float]] = []
    n_worlds = 1 << m
    for lo in range(0, n_worlds, _CHUNK):
        bits = _world_bits(m, lo, min(lo + _CHUNK, n_worlds))
        probs = _world_probs(scm, bits)
        values = _node_values(scm, bits, tables, {})
        mask = probs > 0.0
        for nid, val in evidence.items():
            mask &= values[nid] == val
        for row in np.nonzero(mask)[0]:
            exo = {}
            vals = {}
            for i, node in enumerate(scm.nodes):
                key = node.id if node.kind == PRIOR else node.id + "::noise"
                exo[key] = bool(bits[row, i])
                vals[node.id] = bool(values[node.id][row])
            kept.append((exo, vals, float(probs[row])))
    total = math.fsum(p for _, _, p in kept)
    if total <= 0.0:
        raise ImpossibleEvidenceError(
            f"impossible evidence: {evidence!r} has probability zero"
        )
    return [
        DiscreteWorld(exogenous=exo, values=vals, probability=p / total)
        for exo, vals, p in kept
    ]


def exact_counterfactual(
    scm: ScmSpec,
    evidence: dict[str, bool],
    interventions: dict[str, bool],
    target: str,
) -> float:
    """P(target = 1 in the intervened world | evidence in the factual one).

    The three-step reading: posterior over exogenous worlds given the
    evidence, interventions forced, endogenous values recomputed per
    world, and the target averaged under the posterior.
    """
    _validate_nodes(scm, evidence, interventions, target)
    total, hit = _accumulate(
        scm, evidence, interventions, target, condition_on_intervened=False
    )
    if total <= 0.0:
        raise ImpossibleEvidenceError(
            f"impossible evidence: {evidence!r} has probability zero"
        )
    return hit / total


def exact_interventional(
    scm: ScmSpec,
    evidence: dict[str, bool],
    interventions: dict[str, bool],
    target: str,
) -> float:
    """P(target = 1 | evidence) in the mutilated (surgically edited) model."""
    _validate_nodes(scm, evidence, interventions, target)
    total, hit = _accumulate(
        scm, evidence, interventions, target, condition_on_intervened=True
    )
    if total <= 0.0:
        raise ImpossibleEvidenceError(
            f"impossible evidence: {evidence!r} has probability zero under "
            "the intervened model"
        )
    return hit / total


def exact_observational(scm: ScmSpec, evidence: dict[str, bool], target: str) -> float:
    """Posterior marginal P(target = 1 | evidence)."""
    return exact_counterfactual(scm, evidence, {}, target)
