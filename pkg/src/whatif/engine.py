"""Inference engine for observational, interventional, and counterfactual queries.

A program is a callable taking an execution context.  It instantiates
random procedures (each yielding a realized value), declares parents via
explicit depends_on lists, and issues observe / do / predict statements.
One inference call executes the program in three phases:

  discovery   one execution that records the query structure: which
              addresses are observed or intervened, the predict labels,
              and the declared dependency edges.
  abduction   N importance-sampling executions of the posterior given
              the evidence.  Observable procedures absorb their
              observation by inverting the noise; do(..., "cf")
              interventions are ignored here, do(..., "iv") are forced.
  replay      for counterfactual queries, each abducted trace is run
              once more with interventions forced: non-descendants keep
              their abducted values bitwise, deterministic descendants
              are recomputed, observable descendants rerun their
              function under the abducted noise, and log-weights carry
              over unchanged.

So a counterfactual query costs 2N + 1 program executions, anything
else N + 1.  Every random draw comes from a stream keyed by (seed,
sample_index, address), which makes results independent of evaluation
order and of how samples are split across workers.
"""

from __future__ import annotations

import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dists import (
    Beta,
    Bernoulli,
    Delta,
    Normal,
    ObservableBernoulli,
    ObservableNormal,
    ObservableNoisyOr,
    Uniform,
    invert_observable_bernoulli,
    invert_observable_normal,
    noisy_or_pack,
    noisy_or_propose_noise,
    noisy_or_unpack,
    sample_and_score,
)
from .errors import (
    EngineError,
    NoSurvivingSamplesError,
    UnobservableProcedureError,
    StaleTraceError,
)
from .rng import rng_for_address
from .trace import (
    INTERVENED,
    LATENT,
    OBSERVED,
    Address,
    AddressCounter,
    Trace,
    TraceEntry,
    Value,
)

_NEG_INF = float("-inf")

DISCOVERY, ABDUCTION, REPLAY = 0, 1, 2

CF = "cf"
IV = "iv"

NOISE_SUFFIX = "::noise"
REPLAY_STREAM_SUFFIX = "@cf"

_PLAIN = (Normal, Bernoulli, Uniform, Beta)
_PLAIN_NAMES = frozenset(t.__name__ for t in _PLAIN)
_OBSERVABLE_NAMES = frozenset(
    t.__name__ for t in (ObservableNormal, ObservableBernoulli, ObservableNoisyOr)
)


@dataclass(slots=True)
class Intervention:
    value: Value
    kind: str  # CF or IV


@dataclass
class QueryPlan:
    """Query structure extracted by the discovery pass."""

    observed: dict[Address, Value] = field(default_factory=dict)
    interventions: dict[Address, Intervention] = field(default_factory=dict)
    predicts: list[tuple[str, bool]] = field(default_factory=list)
    parents: dict[Address, tuple[Address, ...]] = field(default_factory=dict)
    families: dict[Address, str] = field(default_factory=dict)
    cf_descendants: frozenset[Address] = frozenset()
    needs_replay: bool = False


class Choice:
    """Handle to one instantiated procedure: its address and realized value."""

    __slots__ = ("address", "value")

    def __init__(self, address: Address, value):
        self.address = address
        self.value = value

    def __repr__(self):
        return f"Choice({self.address!r}, {self.value!r})"


def descendant_closure(
    parents: dict[Address, tuple[Address, ...]], roots
) -> frozenset[Address]:
    """All strict descendants of the roots under the declared edges."""
    children: dict[Address, list[Address]] = {}
    for child, pars in parents.items():
        for p in pars:
            children.setdefault(p, []).append(child)
    out: set[Address] = set()
    frontier = list(roots)
    while frontier:
        node = frontier.pop()
        for c in children.get(node, ()):
            if c not in out:
                out.add(c)
                frontier.append(c)
    return frozenset(out)


def _delta_match(computed, observed, tol: float) -> bool:
    if (
        tol > 0.0
        and isinstance(computed, (int, float))
        and isinstance(observed, (int, float))
        and not isinstance(computed, bool)
        and not isinstance(observed, bool)
    ):
        return abs(computed - observed) <= tol
    return computed == observed


class ExecutionContext:
    """One program execution: issues addresses, records a trace.

    Programs should treat this as their sole source of randomness and
    side effects; the same program must request the same addresses in
    every execution, except where an intervention changes control flow.
    """

    __slots__ = (
        "phase",
        "plan",
        "trace",
        "seed",
        "sample_index",
        "counter",
        "abducted",
        "delta_tolerance",
        "_memo",
        "_pred_i",
    )

    def __init__(
        self,
        phase: int,
        plan: QueryPlan,
        seed: int,
        sample_index: int,
        *,
        abducted: Trace | None = None,
        delta_tolerance: float = 0.0,
    ):
        self.phase = phase
        self.plan = plan
        self.trace = Trace()
        self.seed = seed
        self.sample_index = sample_index
        self.counter = AddressCounter()
        self.abducted = abducted
        self.delta_tolerance = delta_tolerance
        self._memo: dict[Address, Choice] = {}
        self._pred_i = 0

    # -- procedure constructors -------------------------------------------

    def sample(self, spec, *, name=None, depends_on=(), proposal=None) -> Choice:
        """Instantiate a procedure from an explicit distribution spec."""
        addr = self.counter.fresh(name)
        parents = tuple(c.address for c in depends_on)
        phase = self.phase
        if phase == DISCOVERY:
            self.plan.parents[addr] = parents
            self.plan.families[addr] = type(spec).__name__
            return self._forward(addr, spec, parents, proposal)
        if phase == ABDUCTION:
            return self._abduct(addr, spec, parents, proposal)
        return self._replay(addr, spec, parents)

    def normal(
        self,
        mean,
        std,
        *,
        name=None,
        depends_on=(),
        proposal_mean=None,
        proposal_std=None,
    ) -> Choice:
        prior = Normal(mean, std)
        if proposal_mean is None and proposal_std is None:
            proposal = None
        else:
            proposal = Normal(
                mean if proposal_mean is None else proposal_mean,
                std if proposal_std is None else proposal_std,
            )
        return self.sample(prior, name=name, depends_on=depends_on, proposal=proposal)

    def bernoulli(self, p, *, name=None, depends_on=(), proposal_p=None) -> Choice:
        proposal = None if proposal_p is None else Bernoulli(proposal_p)
        return self.sample(
            Bernoulli(p), name=name, depends_on=depends_on, proposal=proposal
        )

    def uniform(self, lo, hi, *, name=None, depends_on=()) -> Choice:
        return self.sample(Uniform(lo, hi), name=name, depends_on=depends_on)

    def beta(self, a, b, *, name=None, depends_on=()) -> Choice:
        return self.sample(Beta(a, b), name=name, depends_on=depends_on)

    def delta(self, value, *, name=None, depends_on=()) -> Choice:
        return self.sample(Delta(value), name=name, depends_on=depends_on)

    def observable_normal(self, mean, noise_std, *, name=None, depends_on=()) -> Choice:
        return self.sample(
            ObservableNormal(mean, noise_std), name=name, depends_on=depends_on
        )

    def observable_bernoulli(
        self, f_value, flip_prob, *, name=None, depends_on=()
    ) -> Choice:
        return self.sample(
            ObservableBernoulli(bool(f_value), flip_prob),
            name=name,
            depends_on=depends_on,
        )

    def observable_noisy_or(
        self, lambda0, lambdas, parent_states, *, name=None, depends_on=()
    ) -> Choice:
        return self.sample(
            ObservableNoisyOr(lambda0, tuple(lambdas), tuple(parent_states)),
            name=name,
            depends_on=depends_on,
        )

    # -- phase-specific instantiation -------------------------------------

    def _stream(self, addr: Address):
        return rng_for_address(self.seed, self.sample_index, addr)

    def _record(self, addr, value, lp, lq, role, parents) -> Choice:
        self.trace.record(TraceEntry(addr, value, lp, lq, role, parents))
        return Choice(addr, value)

    def _forward(self, addr, spec, parents, proposal) -> Choice:
        """Sample with no evidence or interventions applied (discovery)."""
        fam = type(spec)
        if fam is Delta:
            return self._record(addr, spec.value, 0.0, 0.0, LATENT, parents)
        if fam in _PLAIN:
            value, lp, lq = sample_and_score(spec, self._stream(addr), proposal)
            return self._record(addr, value, lp, lq, LATENT, parents)
        noise_addr = addr + NOISE_SUFFIX
        noise = spec.sample_noise(self._stream(noise_addr))
        stored = noisy_or_pack(noise) if fam is ObservableNoisyOr else noise
        self.trace.record(TraceEntry(noise_addr, stored, 0.0, 0.0, LATENT, ()))
        return self._record(addr, spec.output(noise), 0.0, 0.0, LATENT, parents)

    def _abduct(self, addr, spec, parents, proposal) -> Choice:
        plan = self.plan
        iv = plan.interventions.get(addr)
        if iv is not None and iv.kind == IV:
            return self._record(addr, iv.value, 0.0, 0.0, INTERVENED, parents)
        if addr in plan.observed:
            return self._absorb(addr, spec, parents, plan.observed[addr])
        return self._forward(addr, spec, parents, proposal)

    def _absorb(self, addr, spec, parents, observed) -> Choice:
        """Condition the procedure at addr on its observed value.

        Observable families invert their noise and score the observation
        by the prior-to-proposal ratio of the forced noise assignment.
        The ratio goes on the observed output entry; the pinned noise
        entry scores zero so the weight is not double counted.
        """
        fam = type(spec)
        if fam is Delta:
            loglik = 0.0 if _delta_match(spec.value, observed, self.delta_tolerance) else _NEG_INF
            return self._record(addr, spec.value, loglik, 0.0, OBSERVED, parents)
        noise_addr = addr + NOISE_SUFFIX
        if fam is ObservableNormal:
            inv = invert_observable_normal(spec.mean, observed)
            loglik = spec.noise_log_prior(inv.noise_value) - inv.log_proposal
            self.trace.record(
                TraceEntry(noise_addr, inv.noise_value, 0.0, 0.0, LATENT, ())
            )
            return self._record(addr, float(observed), loglik, inv.log_proposal, OBSERVED, parents)
        if fam is ObservableBernoulli:
            inv = invert_observable_bernoulli(spec.f_value, observed)
            loglik = spec.noise_log_prior(inv.noise_value) - inv.log_proposal
            self.trace.record(
                TraceEntry(noise_addr, inv.noise_value, 0.0, 0.0, LATENT, ())
            )
            return self._record(addr, bool(observed), loglik, inv.log_proposal, OBSERVED, parents)
        if fam is ObservableNoisyOr:
            noise, log_q, _ = noisy_or_propose_noise(
                bool(observed),
                spec.lambda0,
                spec.lambdas,
                spec.parent_states,
                self._stream(noise_addr),
            )
            loglik = spec.noise_log_prior(noise) - log_q
            self.trace.record(
                TraceEntry(noise_addr, noisy_or_pack(noise), 0.0, 0.0, LATENT, ())
            )
            return self._record(addr, bool(observed), loglik, log_q, OBSERVED, parents)
        raise UnobservableProcedureError(
            f"unobservable procedure: cannot absorb evidence at {addr!r} "
            f"({fam.__name__} has implicit randomness)"
        )

    def _replay(self, addr, spec, parents) -> Choice:
        plan = self.plan
        iv = plan.interventions.get(addr)
        if iv is not None:
            return self._record(addr, iv.value, 0.0, 0.0, INTERVENED, parents)
        abducted = self.abducted
        prev = abducted.entries.get(addr)
        fam = type(spec)
        if prev is None:
            # Control flow opened by an intervention: no abducted value
            # exists, so the choice falls back to its prior.
            if not plan.interventions:
                raise StaleTraceError(
                    f"stale trace: address {addr!r} missing from the abducted "
                    "trace with no intervention to explain it"
                )
            if fam is Delta:
                return self._record(addr, spec.value, 0.0, 0.0, LATENT, parents)
            if fam in _PLAIN:
                stream = rng_for_address(
                    self.seed, self.sample_index, addr + REPLAY_STREAM_SUFFIX
                )
                value, lp, lq = sample_and_score(spec, stream)
                return self._record(addr, value, lp, lq, LATENT, parents)
            noise_addr = addr + NOISE_SUFFIX
            stream = rng_for_address(
                self.seed, self.sample_index, noise_addr + REPLAY_STREAM_SUFFIX
            )
            noise = spec.sample_noise(stream)
            stored = noisy_or_pack(noise) if fam is ObservableNoisyOr else noise
            self.trace.record(TraceEntry(noise_addr, stored, 0.0, 0.0, LATENT, ()))
            return self._record(addr, spec.output(noise), 0.0, 0.0, LATENT, parents)
        if addr in plan.cf_descendants:
            if fam is Delta:
                return self._record(addr, spec.value, 0.0, 0.0, LATENT, parents)
            if fam in _PLAIN:
                # An implicit-noise procedure downstream of an intervention
                # has no shared noise to carry into the new world; it is
                # redrawn from its prior on a replay-specific stream.
                stream = rng_for_address(
                    self.seed, self.sample_index, addr + REPLAY_STREAM_SUFFIX
                )
                value, lp, lq = sample_and_score(spec, stream)
                return self._record(addr, value, lp, lq, LATENT, parents)
            noise_addr = addr + NOISE_SUFFIX
            noise_prev = abducted.entries[noise_addr].value
            if fam is ObservableNoisyOr:
                noise = noisy_or_unpack(noise_prev, len(spec.parent_states))
                self.trace.record(TraceEntry(noise_addr, noise_prev, 0.0, 0.0, LATENT, ()))
                return self._record(addr, spec.output(noise), 0.0, 0.0, LATENT, parents)
            self.trace.record(TraceEntry(noise_addr, noise_prev, 0.0, 0.0, LATENT, ()))
            return self._record(addr, spec.output(noise_prev), 0.0, 0.0, LATENT, parents)
        # Outside the intervened closure: the abducted world carries over.
        if fam in (ObservableNormal, ObservableBernoulli, ObservableNoisyOr):
            noise_addr = addr + NOISE_SUFFIX
            self.trace.record(
                TraceEntry(noise_addr, abducted.entries[noise_addr].value, 0.0, 0.0, LATENT, ())
            )
        return self._record(addr, prev.value, 0.0, 0.0, prev.role, parents)

    # -- statements --------------------------------------------------------

    def observe(self, choice: Choice, value) -> None:
        """Condition the procedure behind choice on an observed value."""
        addr = choice.address
        plan = self.plan
        if self.phase == DISCOVERY:
            fam = plan.families.get(addr)
            if fam not in _OBSERVABLE_NAMES and fam != "Delta":
                raise UnobservableProcedureError(
                    f"unobservable procedure: cannot observe {fam} at {addr!r}; "
                    "only observable and Delta procedures absorb evidence"
                )
            if addr in plan.interventions:
                raise EngineError(f"cannot observe intervened address {addr!r}")
            if addr in plan.observed:
                raise EngineError(f"duplicate observation at address {addr!r}")
            plan.observed[addr] = value
        elif self.phase == ABDUCTION:
            if addr not in plan.observed:
                raise StaleTraceError(
                    f"stale trace: observation at {addr!r} was not present "
                    "during discovery"
                )
        # Replay never absorbs evidence.

    def do(self, choice: Choice, value, kind: str = CF) -> None:
        """Force the value at choice's address.

        kind "cf" forces only in the replay phase (three-step
        counterfactual); kind "iv" forces in every phase, equivalent to
        editing the model.
        """
        kind = kind.lower()
        if kind not in (CF, IV):
            raise ValueError(f"intervention kind must be 'cf' or 'iv', got {kind!r}")
        if self.phase != DISCOVERY:
            return
        plan = self.plan
        addr = choice.address
        if addr in plan.interventions:
            raise EngineError(f"duplicate intervention at address {addr!r}")
        if kind == IV and addr in plan.observed:
            raise EngineError(
                f"cannot iv-intervene observed address {addr!r}; evidence on a "
                "surgically forced value has no effect"
            )
        plan.interventions[addr] = Intervention(value, kind)

    def predict(self, value, *, label: str | None = None, counterfactual: bool = True) -> None:
        """Register value under label in the result.

        counterfactual=True reports the value from the replay execution
        when one runs; otherwise the abduction-phase value is reported.
        """
        plan = self.plan
        if self.phase == DISCOVERY:
            if label is None:
                label = f"predict:{len(plan.predicts)}"
            if any(label == lab for lab, _ in plan.predicts):
                raise EngineError(f"duplicate predict label {label!r}")
            plan.predicts.append((label, counterfactual))
            return
        i = self._pred_i
        self._pred_i = i + 1
        if i >= len(plan.predicts):
            raise StaleTraceError("predict statement not present during discovery")
        planned_label, planned_cf = plan.predicts[i]
        if label is not None and label != planned_label:
            raise StaleTraceError(
                f"predict label changed between executions: {label!r} vs "
                f"{planned_label!r}"
            )
        if self.phase == ABDUCTION:
            # Counterfactual labels recorded here are fallbacks; replay
            # overwrites them when it runs.
            self.trace.predictions.append((planned_label, value))
        elif planned_cf:
            self.trace.predictions.append((planned_label, value))

    # -- lazy evaluation gates ---------------------------------------------

    def value_if_needed(self, name: Address, thunk) -> Choice:
        """Memoized access to the procedure at a known address.

        For an address forced by an intervention in the current phase the
        forced value is returned directly and the thunk never runs, so
        none of its ancestors are evaluated on its account.
        """
        memo = self._memo
        got = memo.get(name)
        if got is not None:
            return got
        if self.phase != DISCOVERY:
            iv = self.plan.interventions.get(name)
            if iv is not None and (self.phase == REPLAY or iv.kind == IV):
                self.counter.fresh(name)
                choice = self._record(name, iv.value, 0.0, 0.0, INTERVENED, ())
                memo[name] = choice
                return choice
        choice = thunk()
        if not isinstance(choice, Choice) or choice.address != name:
            raise EngineError(
                f"value_if_needed thunk for {name!r} produced "
                f"{getattr(choice, 'address', choice)!r}"
            )
        memo[name] = choice
        return choice

    def observing(self) -> bool:
        """True in phases that absorb evidence (discovery, abduction)."""
        return self.phase != REPLAY

    def intervening(self) -> bool:
        """True only while interventions are being recorded (discovery)."""
        return self.phase == DISCOVERY


# -- plan construction -----------------------------------------------------


def discover(program, *, seed: int = 0, delta_tolerance: float = 0.0,
             strict_endogeneity: bool = False) -> QueryPlan:
    """Run the discovery pass and return the finalized query plan."""
    plan = QueryPlan()
    ctx = ExecutionContext(DISCOVERY, plan, seed, -1, delta_tolerance=delta_tolerance)
    program(ctx)
    cf_roots = [a for a, iv in plan.interventions.items() if iv.kind == CF]
    plan.cf_descendants = descendant_closure(plan.parents, cf_roots)
    plan.needs_replay = bool(cf_roots)
    if strict_endogeneity:
        _check_endogeneity(plan)
    return plan


def _check_endogeneity(plan: QueryPlan) -> None:
    """Reject structures whose counterfactual would lean on implicit noise.

    Implicit-noise procedures with parents are simultaneously exogenous
    (their own randomness) and endogenous (their hyperparameters), so
    forcing them or re-evaluating them downstream of an intervention has
    no clean twin-world reading.  Parentless ones are purely exogenous
    and stay fair game.
    """
    for addr in plan.interventions:
        fam = plan.families.get(addr)
        if fam in _PLAIN_NAMES and plan.parents.get(addr):
            raise EngineError(
                f"cannot intervene on {addr!r}: {fam} with parents has "
                "implicit randomness; give it an explicit noise split"
            )
    for addr in sorted(plan.cf_descendants):
        fam = plan.families.get(addr)
        if fam in _PLAIN_NAMES:
            raise EngineError(
                f"descendant {addr!r} of an intervened address is a {fam} "
                "with implicit randomness; give it an explicit noise split"
            )


# -- sampling --------------------------------------------------------------


def abduction_sample(program, plan: QueryPlan, seed: int, sample_index: int,
                     *, delta_tolerance: float = 0.0) -> Trace:
    """One importance sample of the posterior described by the plan."""
    ctx = ExecutionContext(
        ABDUCTION, plan, seed, sample_index, delta_tolerance=delta_tolerance
    )
    program(ctx)
    return ctx.trace


def counterfactual_replay(trace: Trace, plan: QueryPlan, program, seed: int,
                          sample_index: int) -> Trace:
    """Re-execute under forced interventions against an abducted trace.

    The returned trace keeps the abducted log-weight bitwise: replayed
    draws either carry over, are recomputed deterministically, or are
    prior draws whose contribution is exactly zero.
    """
    ctx = ExecutionContext(REPLAY, plan, seed, sample_index, abducted=trace)
    ctx.trace.accumulate(trace.log_weight)
    program(ctx)
    return ctx.trace


@dataclass
class InferenceResult:
    """Per-sample predictions and weights from one inference run."""

    predictions: list[dict[str, Value]]
    log_weights: np.ndarray
    n_samples: int
    n_rejected: int
    wall_seconds: float
    degenerate: bool = False
    traces: list | None = None


def _run_chunk(program, plan, seed, lo, hi, delta_tolerance, keep_traces):
    preds: list[dict[str, Value]] = []
    lws: list[float] = []
    traces = [] if keep_traces else None
    n_rejected = 0
    for i in range(lo, hi):
        abd = abduction_sample(
            program, plan, seed, i, delta_tolerance=delta_tolerance
        )
        rejected = abd.rejected
        if rejected:
            n_rejected += 1
        merged = dict(abd.predictions)
        rep = None
        if plan.needs_replay and not rejected:
            rep = counterfactual_replay(abd, plan, program, seed, i)
            merged.update(rep.predictions)
        preds.append(merged)
        lws.append(abd.log_weight)
        if traces is not None:
            traces.append((abd, rep))
    return preds, lws, n_rejected, traces


def run_inference(
    program,
    n_samples: int,
    *,
    seed: int = 0,
    workers: int = 1,
    delta_tolerance: float = 0.0,
    keep_traces: bool = False,
    strict_endogeneity: bool = False,
) -> InferenceResult:
    """Estimate the program's query from n_samples importance samples.

    Results are a pure function of (program, n_samples, seed): the
    worker count only partitions the sample indices and never changes a
    single bit of the output.  Rejected samples (log-weight -inf) are
    retained with zero normalized weight; if every sample is rejected
    the result is flagged degenerate.
    """
    plan = discover(
        program,
        seed=seed,
        delta_tolerance=delta_tolerance,
        strict_endogeneity=strict_endogeneity,
    )
    t0 = time.perf_counter()
    if workers <= 1 or n_samples < 2:
        parts = [
            _run_chunk(program, plan, seed, 0, n_samples, delta_tolerance, keep_traces)
        ]
    else:
        bounds = np.linspace(0, n_samples, min(workers, n_samples) + 1).astype(int)
        jobs = [
            (program, plan, seed, int(lo), int(hi), delta_tolerance, keep_traces)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        ctx = multiprocessing.get_context(
            "fork" if "fork" in multiprocessing.get_all_start_methods() else None
        )
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = list(pool.map(_run_chunk_star, jobs))
    wall = time.perf_counter() - t0
    predictions: list[dict[str, Value]] = []
    lws: list[float] = []
    n_rejected = 0
    traces = [] if keep_traces else None
    for preds, chunk_lws, rej, chunk_traces in parts:
        predictions.extend(preds)
        lws.extend(chunk_lws)
        n_rejected += rej
        if traces is not None:
            traces.extend(chunk_traces)
    log_weights = np.asarray(lws, dtype=float)
    degenerate = n_samples > 0 and n_rejected == n_samples
    return InferenceResult(
        predictions=predictions,
        log_weights=log_weights,
        n_samples=n_samples,
        n_rejected=n_rejected,
        wall_seconds=wall,
        degenerate=degenerate,
        traces=traces,
    )


def _run_chunk_star(args):
    return _run_chunk(*args)


# -- estimators ------------------------------------------------------------


def ess(log_weights) -> float:
    """Effective sample size (sum w)^2 / sum w^2, from log-weights."""
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0:
        return 0.0
    finite = lw[np.isfinite(lw)]
    if finite.size == 0:
        return 0.0
    m = finite.max()
    w = np.exp(finite - m)
    s1 = w.sum()
    return float(s1 * s1 / (w * w).sum())


def estimate_expectation(result: InferenceResult, label: str | None = None) -> float:
    """Self-normalized importance estimate of the labeled prediction."""
    labels = {lab for p in result.predictions for lab in p}
    if label is None:
        if len(labels) != 1:
            raise ValueError(
                f"result has predictions {sorted(labels)}; pass label explicitly"
            )
        label = labels.pop()
    lw = result.log_weights
    finite = np.isfinite(lw)
    if not finite.any():
        raise NoSurvivingSamplesError(
            "no surviving samples: every log-weight is -inf"
        )
    values = np.array([float(p[label]) for p in result.predictions])
    m = lw[finite].max()
    w = np.exp(lw - m)  # rejected samples underflow to exactly 0
    return float((values * w).sum() / w.sum())


# -- dependency declaration checking ---------------------------------------


def verify_declared_dependencies(program, *, seed: int = 0) -> list[str]:
    """Cross-check depends_on declarations by perturb-and-compare.

    Intended for small discrete models in tests: each boolean latent is
    flipped by a surgical intervention and the program re-executed with
    identical streams; any other address whose value moves must be a
    declared (transitive) descendant of the flipped one.  Returns
    human-readable violation descriptions, empty when all declarations
    cover the true dependencies.
    """
    base_plan = discover(program, seed=seed)
    structural = QueryPlan(
        parents=base_plan.parents, families=base_plan.families, predicts=base_plan.predicts
    )
    base = abduction_sample(program, structural, seed, 0)
    violations: list[str] = []
    for addr, entry in base.entries.items():
        if entry.role != LATENT or not isinstance(entry.value, bool):
            continue
        if addr.endswith(NOISE_SUFFIX):
            continue
        forced = QueryPlan(
            parents=base_plan.parents,
            families=base_plan.families,
            predicts=base_plan.predicts,
            interventions={addr: Intervention(not entry.value, IV)},
        )
        flipped = abduction_sample(program, forced, seed, 0)
        allowed = descendant_closure(base_plan.parents, [addr])
        for other, fent in flipped.entries.items():
            if other == addr or other.endswith(NOISE_SUFFIX):
                continue
            bent = base.entries.get(other)
            changed = bent is None or bent.value != fent.value
            if changed and other not in allowed:
                violations.append(
                    f"flipping {addr!r} changed {other!r}, which does not "
                    f"declare a dependency on it"
                )
    return violations
