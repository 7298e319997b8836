"""Regularity verdicts for CR maps into the smooth boundary parts.

Given the target family, its dimensions and the number ``n_plus`` of positive
Levi eigenvalues of the source hypersurface, :func:`classify` says whether
CR-transversal maps are guaranteed to be generically smooth, whether
nowhere-smooth counterexamples exist, whether no CR-transversal map exists at
all, or whether the case is not covered.

For kinds I-III the transversality and minimality flags do not enter the
verdict (the regularity statement is about CR-transversal maps throughout).
"""

from __future__ import annotations

from dataclasses import dataclass

from .domains import BadDimensions, DomainModel

VERDICTS = (
    "RegularityGuaranteed",
    "CounterexampleRegime",
    "NoTransversalMap",
    "DichotomyRegime",
    "OutsideTheorem",
)


@dataclass(frozen=True)
class Verdict:
    value: str
    citation: str

    def __post_init__(self):
        if self.value not in VERDICTS:
            raise ValueError(f"unknown verdict {self.value!r}")
        if self.value != "OutsideTheorem" and not self.citation:
            raise ValueError("a verdict needs a citation")

    def to_json(self) -> dict:
        return {"verdict": self.value, "citation": self.citation}


def _no_map(bound: str) -> Verdict:
    return Verdict(
        "NoTransversalMap",
        f"n_plus exceeds {bound}, the positive Levi eigenvalue count of the target; "
        "a CR-transversal map cannot lower it",
    )


def classify(kind: str, m: int, n: int | None, n_plus: int, transversal: bool = True, minimal: bool = True) -> Verdict:
    model = DomainModel(kind, m, n if kind == "I" else None)
    if isinstance(n_plus, bool) or int(n_plus) != n_plus or n_plus < 0:
        raise BadDimensions("n_plus must be a nonnegative integer")
    n_plus = int(n_plus)
    if kind == "I":
        top = m + n - 2
        if n_plus > top:
            return _no_map("m+n-2")
        if n_plus >= top - 1:
            return Verdict("RegularityGuaranteed", "kind I with n_plus in {m+n-3, m+n-2}: nu = m+n-4 < n_plus")
        return Verdict(
            "CounterexampleRegime",
            "kind I with n_plus < m+n-3: block maps diag(Z, phi) from rank-one unit matrices are nowhere smooth",
        )
    if kind == "II":
        top = 2 * m - 4
        if n_plus > top:
            return _no_map("2m-4")
        if n_plus >= top - 3:
            return Verdict("RegularityGuaranteed", "kind II with n_plus in {2m-7, ..., 2m-4}: nu = 2m-8 < n_plus")
        if n_plus == top - 4:
            return Verdict(
                "CounterexampleRegime",
                "kind II with n_plus = 2m-8: block maps with a skew phi block from rank-two unit matrices are nowhere smooth",
            )
        return Verdict("OutsideTheorem", "")
    if kind == "III":
        top = m - 1
        if n_plus > top:
            return _no_map("m-1")
        if n_plus == top:
            return Verdict("RegularityGuaranteed", "kind III with n_plus = m-1: nu = m-2 < n_plus")
        if n_plus == top - 1:
            return Verdict(
                "CounterexampleRegime",
                "kind III with n_plus = m-2: the sphere embedding with a phi-weighted second rank-one term is nowhere smooth",
            )
        return Verdict("OutsideTheorem", "")
    # IV and the tube (biholomorphic to IV) have nu = 0
    bound = "m-2" if kind == "IV" else "N'-2"
    if transversal and n_plus > model.expected_positive:
        return _no_map(bound)
    if minimal and transversal:
        return Verdict("RegularityGuaranteed", f"kind {kind}: nu = 0, minimal source, CR-transversal map")
    if minimal:
        return Verdict(
            "DichotomyRegime",
            f"kind {kind}: nu = 0 and minimal source; a map is generically smooth or maps into a single leaf",
        )
    return Verdict("OutsideTheorem", "")
