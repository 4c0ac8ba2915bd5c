"""Classification outcomes, certificates and their text/CSV serializations."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable


class Outcome(str, Enum):
    STRICT_WEAK = "StrictWeakMinimizer"
    NOT_WEAK = "NotWeakMinimizer"
    DEGENERATE = "Degenerate"
    STRONG = "StrongMinimizer"
    GLOBAL = "GlobalMinimizer"
    WEAK_NOT_STRONG = "WeakNotStrong"
    MINIMIZER = "Minimizer"
    NOT_MINIMIZER = "NotMinimizer"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value

    @property
    def is_minimizer(self) -> bool:
        return self in (Outcome.STRICT_WEAK, Outcome.STRONG, Outcome.GLOBAL,
                        Outcome.WEAK_NOT_STRONG, Outcome.MINIMIZER)


CSV_FIELDS = ("outcome", "margin_D", "eig_A", "certificate", "payload")


def format_number(value: Any) -> str:
    """Ten significant digits, locale independent."""
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, (int, float)):
        return f"{float(value):.10g}"
    return str(value)


@dataclass(frozen=True)
class Certificate:
    """Evidence behind an outcome.

    ``kind`` names the route; ``payload`` holds scalar data.  When a witness
    function exists it is produced lazily by ``build``.
    """

    kind: str = "none"
    payload: dict = field(default_factory=dict)
    build: Callable[[], Any] | None = field(default=None, repr=False, compare=False)

    def witness(self):
        return None if self.build is None else self.build()

    def payload_text(self) -> str:
        return ";".join(f"{k}={format_number(v)}" for k, v in self.payload.items())


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    certificate: Certificate = field(default_factory=Certificate)
    diagnostics: dict = field(default_factory=dict)
    trail: tuple[str, ...] = ()

    @property
    def margin_D(self) -> float:
        return float(self.diagnostics.get("margin_D", float("nan")))

    @property
    def eig_A(self) -> float:
        return float(self.diagnostics.get("eig_A", float("nan")))

    def witness(self):
        return self.certificate.witness()

    def detached(self) -> "Verdict":
        """Copy without the lazy witness builder, safe to send between processes."""
        cert = Certificate(self.certificate.kind, dict(self.certificate.payload))
        return Verdict(self.outcome, cert, dict(self.diagnostics), self.trail)

    def with_trail(self, *notes: str) -> "Verdict":
        return Verdict(self.outcome, self.certificate, self.diagnostics, self.trail + notes)

    def csv_row(self) -> list[str]:
        return [self.outcome.value, format_number(self.margin_D), format_number(self.eig_A),
                self.certificate.kind, self.certificate.payload_text()]

    def report(self) -> str:
        lines = [f"outcome: {self.outcome.value}",
                 f"certificate: {self.certificate.kind}"]
        if self.certificate.payload:
            lines.append(f"payload: {self.certificate.payload_text()}")
        for key, value in self.diagnostics.items():
            lines.append(f"{key}: {format_number(value)}")
        for note in self.trail:
            lines.append(f"note: {note}")
        return "\n".join(lines)
