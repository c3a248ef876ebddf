"""Program traces: addressed random choices plus a running log-weight.

An address is a plain string, either supplied by the program author or
auto-generated in execution order.  Each entry records the value at an
address together with the log densities that justify its contribution to
the importance weight:

    latent      contributes log_prior - log_proposal
    observed    contributes log_prior (the absorbed likelihood)
    intervened  contributes nothing

The total log-weight is the exact (fsum) sum of the contributions, so it
does not depend on the order entries were recorded in.  That exactness is
load-bearing: lazy and eager evaluation record the same entries in
different orders and must end up with bitwise-equal weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import AddressCollisionError, InvalidWeightError

Address = str
Value = Union[bool, int, float]

LATENT = "latent"
OBSERVED = "observed"
INTERVENED = "intervened"

_NEG_INF = float("-inf")


@dataclass(slots=True)
class TraceEntry:
    address: Address
    value: Value
    log_prior: float
    log_proposal: float
    role: str
    parents: tuple[Address, ...] = ()


def entry_contribution(entry: TraceEntry) -> float:
    """Log-weight contribution of a single entry, per its role."""
    if entry.role == LATENT:
        if entry.log_prior == _NEG_INF:
            return _NEG_INF
        return entry.log_prior - entry.log_proposal
    if entry.role == OBSERVED:
        return entry.log_prior
    return 0.0


class AddressCounter:
    """Issues addresses for one program execution.

    Auto addresses are "auto:<k>" with k counting only auto requests, so
    interleaved user keys do not shift them.  Reusing any key within one
    execution is an address collision.
    """

    __slots__ = ("_n", "_seen")

    def __init__(self):
        self._n = 0
        self._seen: set[str] = set()

    def fresh(self, user_key: str | None = None) -> Address:
        if user_key is None:
            key = f"auto:{self._n}"
            self._n += 1
        else:
            key = user_key
        if key in self._seen:
            raise AddressCollisionError(f"address collision: {key!r} already used")
        self._seen.add(key)
        return key


class Trace:
    """Ordered map of trace entries with an accumulated log-weight."""

    __slots__ = ("entries", "predictions", "_terms", "_running", "_cached")

    def __init__(self):
        self.entries: dict[Address, TraceEntry] = {}
        self.predictions: list[tuple[str, Value]] = []
        self._terms: list[float] = []
        self._running = 0.0
        self._cached: float | None = 0.0

    def record(self, entry: TraceEntry) -> None:
        """Insert an entry and accumulate its weight contribution."""
        if entry.address in self.entries:
            raise AddressCollisionError(
                f"address collision: {entry.address!r} already recorded"
            )
        self.entries[entry.address] = entry
        self.accumulate(entry_contribution(entry))

    def accumulate(self, delta: float) -> None:
        """Add a log-weight increment; -inf absorbs, NaN is an error."""
        if math.isnan(delta):
            raise InvalidWeightError("invalid weight increment: NaN")
        self._terms.append(delta)
        self._running += delta  # -inf + anything-but-nan stays -inf
        self._cached = None

    @property
    def log_weight(self) -> float:
        """Exact order-independent sum of all accumulated increments."""
        if self._cached is None:
            if self._running == _NEG_INF:
                self._cached = _NEG_INF
            else:
                self._cached = math.fsum(self._terms)
        return self._cached

    @property
    def rejected(self) -> bool:
        return self._running == _NEG_INF

    def weight_terms(self) -> list[float]:
        return list(self._terms)

    def __contains__(self, address: Address) -> bool:
        return address in self.entries

    def __getitem__(self, address: Address) -> TraceEntry:
        return self.entries[address]

    def __len__(self) -> int:
        return len(self.entries)
