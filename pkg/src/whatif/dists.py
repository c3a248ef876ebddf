"""Distribution families for program random choices.

Two kinds of family live here.  Plain families (Normal, Bernoulli,
Uniform, Beta, Delta) score and sample scalar values.  Observable
families model an endogenous quantity as a deterministic function of its
parents composed with an explicit noise variable; because the noise is
explicit, observing the output pins the noise exactly (no rejection) and
counterfactual replay can rerun the function under new parent values
while holding the abducted noise fixed.

Densities are returned in nats.  Zero-probability outcomes score -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rng import RandomStream

_NEG_INF = float("-inf")
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _bernoulli_log_mass(p_true: float, value: bool) -> float:
    if value:
        return math.log(p_true) if p_true > 0.0 else _NEG_INF
    return math.log1p(-p_true) if p_true < 1.0 else _NEG_INF


@dataclass(frozen=True, slots=True)
class Normal:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0.0:
            raise ValueError(f"Normal std must be positive, got {self.std}")

    def log_density(self, x: float) -> float:
        z = (x - self.mean) / self.std
        return -0.5 * z * z - math.log(self.std) - _HALF_LOG_2PI

    def sample(self, stream: RandomStream) -> float:
        return stream.normal(self.mean, self.std)


@dataclass(frozen=True, slots=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def log_density(self, value: bool) -> float:
        return _bernoulli_log_mass(self.p, bool(value))

    def sample(self, stream: RandomStream) -> bool:
        return stream.bernoulli(self.p)


@dataclass(frozen=True, slots=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got [{self.lo}, {self.hi}]")

    def log_density(self, x: float) -> float:
        if self.lo <= x <= self.hi:
            return -math.log(self.hi - self.lo)
        return _NEG_INF

    def sample(self, stream: RandomStream) -> float:
        return self.lo + stream.uniform() * (self.hi - self.lo)


def _gamma_sample(stream: RandomStream, shape: float) -> float:
    # Marsaglia-Tsang squeeze; shapes below 1 are boosted through
    # G(a) = G(a+1) * U^(1/a).
    if shape < 1.0:
        u = stream.uniform_pos()
        return _gamma_sample(stream, shape + 1.0) * u ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = stream.normal()
        t = 1.0 + c * x
        if t <= 0.0:
            continue
        v = t * t * t
        u = stream.uniform_pos()
        if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
            return d * v


@dataclass(frozen=True, slots=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError(f"Beta needs positive shapes, got ({self.a}, {self.b})")

    def log_density(self, x: float) -> float:
        if not 0.0 < x < 1.0:
            return _NEG_INF
        a, b = self.a, self.b
        lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lbeta

    def sample(self, stream: RandomStream) -> float:
        g1 = _gamma_sample(stream, self.a)
        g2 = _gamma_sample(stream, self.b)
        return g1 / (g1 + g2)


@dataclass(frozen=True, slots=True)
class Delta:
    """Point mass; scoring compares values exactly (no tolerance)."""

    value: object

    def log_density(self, x) -> float:
        return 0.0 if x == self.value else _NEG_INF

    def sample(self, stream: RandomStream):
        return self.value


@dataclass(frozen=True, slots=True)
class ObservableNormal:
    """output = mean + noise, noise ~ Normal(0, noise_std)."""

    mean: float
    noise_std: float

    def __post_init__(self):
        if not self.noise_std > 0.0:
            raise ValueError(
                f"ObservableNormal noise_std must be positive, got {self.noise_std}"
            )

    def noise_prior(self) -> Normal:
        return Normal(0.0, self.noise_std)

    def noise_log_prior(self, noise: float) -> float:
        z = noise / self.noise_std
        return -0.5 * z * z - math.log(self.noise_std) - _HALF_LOG_2PI

    def sample_noise(self, stream: RandomStream) -> float:
        return stream.normal(0.0, self.noise_std)

    def output(self, noise: float) -> float:
        return self.mean + noise


@dataclass(frozen=True, slots=True)
class ObservableBernoulli:
    """output = f_value xor noise, noise ~ Bernoulli(flip_prob).

    f_value is the already-computed deterministic function of the
    parents; the family only models the flip noise around it.
    """

    f_value: bool
    flip_prob: float

    def __post_init__(self):
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError(
                f"ObservableBernoulli flip_prob must lie in [0, 1], got {self.flip_prob}"
            )

    def noise_log_prior(self, noise: bool) -> float:
        return _bernoulli_log_mass(self.flip_prob, noise)

    def sample_noise(self, stream: RandomStream) -> bool:
        return stream.bernoulli(self.flip_prob)

    def output(self, noise: bool) -> bool:
        return bool(self.f_value) != bool(noise)


@dataclass(frozen=True, slots=True)
class ObservableNoisyOr:
    """Noisy-OR gate with explicit activation noises.

    noise_0 ~ Bernoulli(1 - lambda0) is the leak activation; noise_j ~
    Bernoulli(1 - lambdas[j]) is the activation of parent j.  The output
    is true iff the leak fires or any active parent's noise fires, so

        P(output = False | parents) = lambda0 * prod_{j active} lambdas[j]
    """

    lambda0: float
    lambdas: tuple[float, ...]
    parent_states: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(self.lambdas))
        object.__setattr__(
            self, "parent_states", tuple(bool(s) for s in self.parent_states)
        )
        if len(self.lambdas) != len(self.parent_states):
            raise ValueError(
                f"ObservableNoisyOr got {len(self.lambdas)} lambdas for "
                f"{len(self.parent_states)} parents"
            )
        for lam in (self.lambda0, *self.lambdas):
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"noisy-or lambda must lie in [0, 1], got {lam}")

    def sample_noise(self, stream: RandomStream) -> tuple[bool, ...]:
        out = [stream.bernoulli(1.0 - self.lambda0)]
        for lam in self.lambdas:
            out.append(stream.bernoulli(1.0 - lam))
        return tuple(out)

    def output(self, noise: tuple[bool, ...]) -> bool:
        if noise[0]:
            return True
        return any(
            noise[j + 1] and self.parent_states[j]
            for j in range(len(self.parent_states))
        )

    def noise_log_prior(self, noise: tuple[bool, ...]) -> float:
        total = _bernoulli_log_mass(1.0 - self.lambda0, noise[0])
        for j, lam in enumerate(self.lambdas):
            total += _bernoulli_log_mass(1.0 - lam, noise[j + 1])
        return total


PLAIN_FAMILIES = (Normal, Bernoulli, Uniform, Beta, Delta)
OBSERVABLE_FAMILIES = (ObservableNormal, ObservableBernoulli, ObservableNoisyOr)


def sample_and_score(spec, stream: RandomStream, proposal=None):
    """Draw from proposal (default: the prior) and score both densities.

    Returns (value, log_prior, log_proposal).  With no proposal override
    the two densities are the same float object, so prior == proposal
    holds bitwise by construction.
    """
    if proposal is None:
        value = spec.sample(stream)
        lp = spec.log_density(value)
        return value, lp, lp
    if type(proposal) is not type(spec):
        raise ValueError(
            f"proposal family {type(proposal).__name__} does not match "
            f"prior family {type(spec).__name__}"
        )
    value = proposal.sample(stream)
    return value, spec.log_density(value), proposal.log_density(value)


@dataclass(frozen=True, slots=True)
class NoiseInversion:
    """Result of forcing an observable's noise to match an observation."""

    noise_value: object
    log_proposal: float
    feasible: bool


def invert_observable_normal(mean: float, observed: float) -> NoiseInversion:
    """The unique noise with mean + noise == observed."""
    return NoiseInversion(observed - mean, 0.0, True)


def invert_observable_bernoulli(f_value: bool, observed: bool) -> NoiseInversion:
    """The unique flip with f_value xor flip == observed."""
    return NoiseInversion(bool(f_value) != bool(observed), 0.0, True)


def noisy_or_false_prob(
    lambda0: float, lambdas: tuple[float, ...], parent_states: tuple[bool, ...]
) -> float:
    """P(output = False): no activation among the leak and active parents."""
    prob = lambda0
    for lam, state in zip(lambdas, parent_states):
        if state:
            prob *= lam
    return prob


def noisy_or_propose_noise(
    observed: bool,
    lambda0: float,
    lambdas: tuple[float, ...],
    parent_states: tuple[bool, ...],
    stream: RandomStream,
):
    """Constructive noise proposal consistent with the observed output.

    observed False: the leak and every active parent's noise are forced
    off; inactive parents' noises are free and drawn from their priors.
    observed True: parent noises are drawn from their priors first (in
    index order), then the leak is forced on only if no active parent
    noise already produced a True output.

    Returns (noise, log_proposal, feasible) with noise[0] the leak.
    Feasibility is always true; an impossible observation surfaces as a
    -inf prior mass on a forced noise, not as a rejection here.
    """
    n = len(lambdas)
    if observed:
        parts = [False] * (n + 1)
        log_q = 0.0
        hot = False
        for j in range(n):
            eps = stream.bernoulli(1.0 - lambdas[j])
            parts[j + 1] = eps
            log_q += _bernoulli_log_mass(1.0 - lambdas[j], eps)
            if eps and parent_states[j]:
                hot = True
        if hot:
            eps0 = stream.bernoulli(1.0 - lambda0)
            parts[0] = eps0
            log_q += _bernoulli_log_mass(1.0 - lambda0, eps0)
        else:
            parts[0] = True
        return tuple(parts), log_q, True
    parts = [False] * (n + 1)
    log_q = 0.0
    for j in range(n):
        if parent_states[j]:
            continue
        eps = stream.bernoulli(1.0 - lambdas[j])
        parts[j + 1] = eps
        log_q += _bernoulli_log_mass(1.0 - lambdas[j], eps)
    return tuple(parts), log_q, True


def noisy_or_pack(noise: tuple[bool, ...]) -> int:
    """Pack a noise vector into one integer so it fits one trace slot."""
    bits = 0
    for j, eps in enumerate(noise):
        if eps:
            bits |= 1 << j
    return bits


def noisy_or_unpack(bits: int, n_parents: int) -> tuple[bool, ...]:
    return tuple(bool(bits >> j & 1) for j in range(n_parents + 1))
