"""Herbrand certificates and their canonical JSON form.

A certificate records a formula phi(x, y), a tolerance eps and a finite list
of witness tuples t_1..t_k such that, at every checked x with
inf_y phi(x, y) small, some t_i brings phi(x, t_i(x)) to at most eps. How
"every checked x" was obtained is part of the record: ``exact`` means the
whole finite universe, ``sampled`` means ``samples`` points drawn from
``seed``.

The JSON form is canonical (sorted keys, two-space indent, floats via
``repr``), so equal certificates give equal bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

FORMAT = "metricherb-certificate/1"


class CoverNotFound(Exception):
    """The search ran out of candidates or budget before covering every point.

    ``uncovered`` lists the offending points (external form) and ``partial``
    is the certificate built so far, or None.
    """

    def __init__(self, message: str, uncovered: Sequence, partial: "HerbrandCertificate | None" = None):
        super().__init__(message)
        self.uncovered = list(uncovered)
        self.partial = partial


class AlphaContradiction(Exception):
    def __init__(self, message: str, pairs: Sequence):
        super().__init__(message)
        self.pairs = list(pairs)


@dataclass(frozen=True)
class AlphaEnvelope:
    """Piecewise-linear nondecreasing map on [0, 1] through ``knots``; alpha(0) = 0."""

    knots: tuple[tuple[float, float], ...]
    violations: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        xs = [k[0] for k in self.knots]
        ys = [k[1] for k in self.knots]
        if not self.knots or xs[0] != 0.0 or ys[0] != 0.0:
            raise ValueError("envelope must start at (0, 0)")
        if any(b <= a for a, b in zip(xs, xs[1:])) or any(b < a for a, b in zip(ys, ys[1:])):
            raise ValueError("knots must be strictly increasing in s and nondecreasing in alpha")

    def __call__(self, s):
        xs = np.array([k[0] for k in self.knots])
        ys = np.array([k[1] for k in self.knots])
        return np.interp(s, xs, ys)

    def to_json(self) -> dict:
        return {"knots": [list(k) for k in self.knots], "violations": [list(v) for v in self.violations]}

    @classmethod
    def from_json(cls, data) -> "AlphaEnvelope":
        return cls(tuple((float(a), float(b)) for a, b in data["knots"]),
                   tuple((float(a), float(b)) for a, b in data.get("violations", [])))


@dataclass(frozen=True)
class WitnessTerm:
    """One witness tuple: a term text per y-variable, plus normal forms when known."""

    text: tuple[str, ...]
    normal_form: tuple[dict, ...] | None = None

    def to_json(self) -> dict:
        return {"text": list(self.text), "normal_form": None if self.normal_form is None else list(self.normal_form)}

    @classmethod
    def from_json(cls, data) -> "WitnessTerm":
        nf = data.get("normal_form")
        return cls(tuple(data["text"]), None if nf is None else tuple(nf))


@dataclass(frozen=True)
class HerbrandCertificate:
    formula: str
    x_vars: tuple[str, ...]
    y_vars: tuple[str, ...]
    epsilon: float
    terms: tuple[WitnessTerm, ...]
    mode: str
    max_residual: float
    samples: int
    gated: int
    seed: int
    model: dict
    delta_gate: float | None = None
    target: str | None = None
    theory: str | None = None
    alpha: AlphaEnvelope | None = None
    flags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.terms)

    @property
    def vacuous(self) -> bool:
        return "vacuous" in self.flags

    def with_alpha(self, env: AlphaEnvelope) -> "HerbrandCertificate":
        return replace(self, alpha=env)

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "formula": self.formula,
            "target": self.target,
            "x_vars": list(self.x_vars),
            "y_vars": list(self.y_vars),
            "epsilon": self.epsilon,
            "delta_gate": self.delta_gate,
            "mode": self.mode,
            "terms": [t.to_json() for t in self.terms],
            "residual": {"max": self.max_residual, "samples": self.samples, "gated": self.gated, "seed": self.seed},
            "theory": self.theory,
            "alpha": None if self.alpha is None else self.alpha.to_json(),
            "flags": list(self.flags),
            "extra": self.extra,
            "model": self.model,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> str:
        text = self.dumps()
        Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, data: dict) -> "HerbrandCertificate":
        if data.get("format") != FORMAT:
            raise ValueError(f"not a certificate (format {data.get('format')!r})")
        r = data["residual"]
        return cls(
            formula=data["formula"],
            x_vars=tuple(data["x_vars"]),
            y_vars=tuple(data["y_vars"]),
            epsilon=float(data["epsilon"]),
            terms=tuple(WitnessTerm.from_json(t) for t in data["terms"]),
            mode=data["mode"],
            max_residual=float(r["max"]),
            samples=int(r["samples"]),
            gated=int(r["gated"]),
            seed=int(r["seed"]),
            model=data["model"],
            delta_gate=data.get("delta_gate"),
            target=data.get("target"),
            theory=data.get("theory"),
            alpha=None if data.get("alpha") is None else AlphaEnvelope.from_json(data["alpha"]),
            flags=tuple(data.get("flags", ())),
            extra=data.get("extra", {}),
        )

    @classmethod
    def load(cls, path) -> "HerbrandCertificate":
        with open(path) as fh:
            return cls.from_json(json.load(fh))
