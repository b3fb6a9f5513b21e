"""Shared data records: measurement outcomes, records, Fock distributions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

RYDBERG = "Rydberg"
NO_RYDBERG = "NoRydberg"
OUTCOMES = (NO_RYDBERG, RYDBERG)


@dataclass
class MeasurementRecord:
    """Ordered list of (drive time, outcome) pairs; cycle 0 convention is NoRydberg."""

    entries: list[tuple[float, str]] = field(default_factory=list)
    params: dict | None = None

    def __post_init__(self):
        for i, (tau, outcome) in enumerate(self.entries):
            if tau < 0:
                raise DomainError(f"entry {i}: drive time must be non-negative")
            if outcome not in OUTCOMES:
                raise DomainError(f"entry {i}: unknown outcome {outcome!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, tau: float, outcome: str) -> None:
        if tau < 0 or outcome not in OUTCOMES:
            raise DomainError("invalid record entry")
        self.entries.append((tau, outcome))

    def to_json(self) -> str:
        doc = {"entries": [{"tau_s": tau, "outcome": m} for tau, m in self.entries]}
        if self.params is not None:
            doc["params"] = self.params
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "MeasurementRecord":
        doc = json.loads(text)
        entries = [(e["tau_s"], e["outcome"]) for e in doc["entries"]]
        return MeasurementRecord(entries, params=doc.get("params"))


@dataclass
class FockDistribution:
    """Candidate initial photon-number distribution (p_0, ..., p_nmax)."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 1 or self.p.size == 0:
            raise DomainError("distribution must be a non-empty vector")
        if np.any(self.p < -1e-15):
            raise DomainError("probabilities must be non-negative")
        if abs(self.p.sum() - 1.0) > 1e-12:
            raise DomainError(f"probabilities must sum to 1, got {self.p.sum()}")
        self.p = np.clip(self.p, 0.0, None)

    @staticmethod
    def delta(n: int, n_max: int) -> "FockDistribution":
        p = np.zeros(n_max + 1)
        p[n] = 1.0
        return FockDistribution(p)

    @property
    def n_max(self) -> int:
        return self.p.size - 1

    def support(self) -> list[int]:
        return [int(n) for n in np.nonzero(self.p)[0]]

    def tolist(self) -> list[float]:
        return self.p.tolist()


@dataclass
class Posterior:
    """Normalized weights over a list of candidate distributions."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < -1e-15):
            raise DomainError("posterior weights must be non-negative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError("posterior weights must sum to 1")
        self.weights = np.clip(self.weights, 0.0, None)

    @staticmethod
    def uniform(k: int) -> "Posterior":
        return Posterior(np.full(k, 1.0 / k))

    def to_json(self, candidates: list[FockDistribution] | None = None) -> str:
        doc: dict = {"weights": self.weights.tolist()}
        if candidates is not None:
            doc["candidates"] = [c.tolist() for c in candidates]
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Posterior":
        return Posterior(np.array(json.loads(text)["weights"]))
