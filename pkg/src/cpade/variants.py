"""Algorithm variant strings.

Grammar (whitespace separates the head from ``key=value`` options)::

    CPA[_k_R_AS_RP]-DE_<M>^<N>  [EV=<alpha>] [K=<lo>..<hi>] [X=bin|exp]
    SHADE_<M>^<N>               [H=<slots>] [X=bin|exp]
    DE_<M>^<N>                  [F=<F>] [CR=<CR>] [X=bin|exp]

Mutation codes ``<M>``: ``R`` rand/1, ``C`` current-to-pbest/1 with
external archive, ``P`` current-to-pbest/1 without archive, ``R2`` rand/2,
``B1`` best/1, ``B2`` best/2, ``CB`` current-to-best/1.  SHADE accepts only
``R`` and ``C``.  A bare ``CPA-DE_R^60`` uses the defaults
k=8, R=0.2, AS=50, RP=200, EV=0.5.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import EvalBudget, RunRecord
from .cpa import CpaConfig, cpa_run
from .de import Crossover, Mutation, MutationKind, de_run
from .shade import shade_run

__all__ = ["AlgorithmSpec", "VariantError", "parse_variant"]


class VariantError(ValueError):
    def __init__(self, spec: str, position: int, message: str):
        self.spec = spec
        self.position = position
        token = spec[position:].split(" ", 1)[0] if position < len(spec) else "<end>"
        super().__init__(f"{message} at position {position} (near {token!r}) in {spec!r}")


MUTATION_CODES = {
    "R": MutationKind(Mutation.RAND1),
    "C": MutationKind(Mutation.CURRENT_TO_PBEST1, p=0.1, archive=True),
    "P": MutationKind(Mutation.CURRENT_TO_PBEST1, p=0.1, archive=False),
    "R2": MutationKind(Mutation.RAND2),
    "B1": MutationKind(Mutation.BEST1),
    "B2": MutationKind(Mutation.BEST2),
    "CB": MutationKind(Mutation.CURRENT_TO_BEST1),
}

_NUMBER = r"[0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?"
_HEAD = re.compile(
    rf"(?P<family>CPA|SHADE|DE)"
    rf"(?:_(?P<k>[0-9]+)_(?P<R>{_NUMBER})_(?P<AS>[0-9]+)_(?P<RP>[0-9]+))?"
    rf"(?P<de>-DE)?"
    rf"_(?P<code>[A-Z][A-Z0-9]?)\^(?P<N>[0-9]+)$"
)


@dataclass(frozen=True)
class AlgorithmSpec:
    """A parsed variant string, runnable on any problem."""

    label: str
    family: str
    mutation_code: str
    population_size: int
    crossover: Crossover
    cpa: Optional[CpaConfig] = None
    F: Optional[float] = None
    CR: Optional[float] = None
    H: Optional[int] = None
    options: dict = field(default_factory=dict)

    @property
    def mutation(self) -> MutationKind:
        return self.cpa.mutation if self.cpa is not None else MUTATION_CODES[self.mutation_code]

    def run(self, problem, budget: EvalBudget, rng: np.random.Generator, seed: Optional[int] = None) -> RunRecord:
        if self.family == "CPA":
            return cpa_run(problem, self.cpa, budget, rng, seed=seed)
        if self.family == "SHADE":
            return shade_run(problem, self.mutation.variant, self.population_size, budget, rng,
                             crossover=self.crossover, H=self.H, seed=seed)
        record = de_run(problem, self.F, self.CR, self.mutation, self.crossover, self.population_size,
                        budget, rng, seed=seed)
        record.config.update({"algorithm": "DE", "F": self.F, "CR": self.CR,
                              "mutation": self.mutation.variant.value, "crossover": self.crossover.value,
                              "N": self.population_size})
        return record

    def describe(self) -> dict:
        out = {
            "label": self.label,
            "family": self.family,
            "mutation": self.mutation.variant.value,
            "external_archive": self.mutation.archive,
            "crossover": self.crossover.value,
            "N": self.population_size,
        }
        if self.cpa is not None:
            out.update(k=self.cpa.k, k_range=self.cpa.k_range, R=self.cpa.R, AS=self.cpa.AS,
                       RP=self.cpa.RP, EV=self.cpa.alpha)
        if self.family == "DE":
            out.update(F=self.F, CR=self.CR)
        if self.family == "SHADE":
            out.update(H=self.H)
        return out


def _parse_options(spec: str, start: int) -> dict:
    options = {}
    for m in re.finditer(r"\S+", spec[start:]):
        pos = start + m.start()
        token = m.group()
        if "=" not in token:
            raise VariantError(spec, pos, "expected key=value option")
        key, value = token.split("=", 1)
        if key in options:
            raise VariantError(spec, pos, f"duplicate option {key}")
        if not value:
            raise VariantError(spec, pos, f"empty value for {key}")
        options[key] = (value, pos)
    return options


def _number(spec, options, key, cast=float):
    value, pos = options[key]
    try:
        return cast(value)
    except ValueError:
        raise VariantError(spec, pos, f"{key} needs a {cast.__name__}") from None


def parse_variant(spec: str) -> AlgorithmSpec:
    """Resolve a variant string to a fully populated configuration."""
    spec = " ".join(spec.split())
    head, _, _ = spec.partition(" ")
    m = _HEAD.match(head)
    if m is None:
        # locate the first offending character for the diagnostic
        family = re.match(r"CPA|SHADE|DE", head)
        pos = family.end() if family else 0
        raise VariantError(spec, pos, "malformed algorithm head")
    family = m.group("family")
    code = m.group("code")
    n = int(m.group("N"))
    if code not in MUTATION_CODES:
        raise VariantError(spec, m.start("code"), f"unknown mutation code {code}")
    if family == "CPA" and m.group("de") is None:
        raise VariantError(spec, m.end("RP") if m.group("RP") else 3, "CPA variants need the -DE suffix")
    if family != "CPA" and (m.group("de") or m.group("k")):
        raise VariantError(spec, m.end("family"), f"{family} takes no CPA fields")
    if family == "SHADE" and code not in ("R", "C"):
        raise VariantError(spec, m.start("code"), "SHADE supports only R and C")

    options = _parse_options(spec, len(head))
    allowed = {"CPA": {"EV", "K", "X"}, "SHADE": {"H", "X"}, "DE": {"F", "CR", "X"}}[family]
    for key, (_, pos) in options.items():
        if key not in allowed:
            raise VariantError(spec, pos, f"option {key} not valid for {family}")

    if "X" in options:
        value, pos = options["X"]
        try:
            crossover = Crossover(value)
        except ValueError:
            raise VariantError(spec, pos, "X must be bin or exp") from None
    elif family == "SHADE" and code == "C":
        crossover = Crossover.BINOMIAL
    else:
        crossover = Crossover.EXPONENTIAL

    kind = MUTATION_CODES[code]
    try:
        if family == "CPA":
            fields = {}
            if m.group("k"):
                fields = dict(k=int(m.group("k")), R=float(m.group("R")), AS=int(m.group("AS")), RP=int(m.group("RP")))
            if "EV" in options:
                fields["alpha"] = _number(spec, options, "EV")
            if "K" in options:
                value, pos = options["K"]
                km = re.fullmatch(r"([0-9]+)\.\.([0-9]+)", value)
                if km is None:
                    raise VariantError(spec, pos, "K must look like lo..hi")
                fields["k_range"] = (int(km.group(1)), int(km.group(2)))
            config = CpaConfig(population_size=n, mutation=kind, crossover=crossover, **fields)
            return AlgorithmSpec(spec, family, code, n, crossover, cpa=config, options={k: v for k, (v, _) in options.items()})
        if family == "SHADE":
            H = _number(spec, options, "H", int) if "H" in options else 100
            if n < kind.min_population or H < 1:
                raise ValueError("population or memory size too small")
            return AlgorithmSpec(spec, family, code, n, crossover, H=H)
        F = _number(spec, options, "F") if "F" in options else 0.5
        CR = _number(spec, options, "CR") if "CR" in options else 0.9
        if n < kind.min_population or not (0 < F <= 1 and 0 < CR <= 1):
            raise ValueError("need 0 < F, CR <= 1 and a population large enough for the mutation")
        return AlgorithmSpec(spec, family, code, n, crossover, F=F, CR=CR)
    except VariantError:
        raise
    except ValueError as exc:
        raise VariantError(spec, 0, str(exc)) from None
