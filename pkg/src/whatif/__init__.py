"""Interventional and counterfactual inference on generative programs.

Programs are plain callables taking an ExecutionContext.  The engine
runs importance sampling with inverse-noise proposals for observed
procedures and answers counterfactuals by replaying abducted traces
under interventions.  An exact enumeration oracle covers the binary
benchmark model class.
"""

from .dists import (
    Bernoulli,
    Beta,
    Delta,
    Normal,
    ObservableBernoulli,
    ObservableNoisyOr,
    ObservableNormal,
    Uniform,
    invert_observable_bernoulli,
    invert_observable_normal,
    noisy_or_false_prob,
    noisy_or_propose_noise,
)
from .engine import (
    CF,
    IV,
    Choice,
    ExecutionContext,
    InferenceResult,
    Intervention,
    QueryPlan,
    abduction_sample,
    counterfactual_replay,
    descendant_closure,
    discover,
    ess,
    estimate_expectation,
    run_inference,
    verify_declared_dependencies,
)
from .errors import (
    AddressCollisionError,
    DegenerateGraphError,
    EngineError,
    ImpossibleEvidenceError,
    InvalidWeightError,
    NoSurvivingSamplesError,
    StaleTraceError,
    UnobservableProcedureError,
)
from .oracle import (
    DiscreteWorld,
    enumerate_posterior,
    exact_counterfactual,
    exact_interventional,
    exact_observational,
)
from .scm import (
    BenchQuery,
    ScmNode,
    ScmSpec,
    build_program,
    derive_seed,
    descendants,
    generate_query,
    generate_scm,
    has_directed_path,
    linear_threshold,
    load_model,
    load_query,
    query_from_json,
    query_to_json,
    scm_from_json,
    scm_to_json,
)
from .trace import Trace, TraceEntry, entry_contribution

__all__ = [
    "AddressCollisionError",
    "BenchQuery",
    "Bernoulli",
    "Beta",
    "CF",
    "Choice",
    "DegenerateGraphError",
    "Delta",
    "DiscreteWorld",
    "EngineError",
    "ExecutionContext",
    "IV",
    "ImpossibleEvidenceError",
    "InferenceResult",
    "Intervention",
    "InvalidWeightError",
    "NoSurvivingSamplesError",
    "Normal",
    "ObservableBernoulli",
    "ObservableNoisyOr",
    "ObservableNormal",
    "QueryPlan",
    "ScmNode",
    "ScmSpec",
    "StaleTraceError",
    "Trace",
    "TraceEntry",
    "Uniform",
    "UnobservableProcedureError",
    "abduction_sample",
    "build_program",
    "counterfactual_replay",
    "derive_seed",
    "descendant_closure",
    "descendants",
    "discover",
    "enumerate_posterior",
    "entry_contribution",
    "ess",
    "estimate_expectation",
    "exact_counterfactual",
    "exact_interventional",
    "exact_observational",
    "generate_query",
    "generate_scm",
    "has_directed_path",
    "invert_observable_bernoulli",
    "invert_observable_normal",
    "linear_threshold",
    "load_model",
    "load_query",
    "noisy_or_false_prob",
    "noisy_or_propose_noise",
    "query_from_json",
    "query_to_json",
    "run_inference",
    "scm_from_json",
    "scm_to_json",
    "verify_declared_dependencies",
]
