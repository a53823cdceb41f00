"""Linear stability of periodic linearizations ``J dPhi' = L(t) dPhi``."""

from __future__ import annotations

from dataclasses import dataclass

from ..floquet import (
    DECAYING,
    GROWING,
    TOL_CIRCLE,
    MonodromyAnalysis,
    SolutionClassification,
    classify,
    monodromy,
)
from ..integrate import DEFAULT_SCHEME, DEFAULT_STEPS_PER_PERIOD
from ..system import LinearSystem

_VERDICTS = {
    DECAYING: "exponentially stable",
    GROWING: "unstable",
}


def multiplier_verdict(cls: str) -> str:
    return _VERDICTS.get(cls, "marginally stable")


@dataclass
class StabilityReport:
    analysis: MonodromyAnalysis
    classification: SolutionClassification

    @property
    def verdicts(self) -> list[str]:
        return [multiplier_verdict(r.cls) for r in self.classification.records]

    @property
    def witness(self) -> int:
        return self.classification.witness

    @property
    def witness_verdict(self) -> str:
        """Stability of the perturbation that is guaranteed not to grow."""
        return self.verdicts[self.witness]

    @property
    def overall(self) -> str:
        return self.classification.verdict


def stability_report(
    system: LinearSystem,
    steps_per_period: int = DEFAULT_STEPS_PER_PERIOD,
    scheme: str = DEFAULT_SCHEME,
    tol_circle: float = TOL_CIRCLE,
) -> StabilityReport:
    """Monodromy plus classification, phrased as per-multiplier stability verdicts.

    The Hessian of the Hamiltonian plays the role of ``H``; the witness
    multiplier always has modulus at most one, so at least one perturbation
    is exponentially or marginally stable.
    """
    analysis = monodromy(system, steps_per_period, scheme)
    return StabilityReport(analysis, classify(analysis, tol_circle))
