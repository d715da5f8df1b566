"""Structured pass/fail reports with per-condition residuals."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    tag: str
    where: str
    residual: float

    def as_dict(self) -> dict:
        return {"tag": self.tag, "where": self.where, "residual": self.residual}


@dataclass
class ValidationReport:
    """Violations plus free-form info (tolerance, seed, measured residuals)."""

    violations: list[Violation] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def fail(self, tag: str, where: str, residual: float) -> None:
        self.violations.append(Violation(tag, where, float(residual)))

    def check(self, tag: str, where: str, residual: float, tol: float) -> None:
        """Record a violation unless residual <= tol, and track the worst residual per tag."""
        residual = float(residual)
        worst = self.info.setdefault("max_residual", {})
        worst[tag] = max(worst.get(tag, 0.0), residual)
        if not residual <= tol:
            self.fail(tag, where, residual)

    def extend(self, other: "ValidationReport", prefix: str = "") -> None:
        for v in other.violations:
            self.violations.append(Violation(v.tag, f"{prefix}{v.where}", v.residual))
        worst = self.info.setdefault("max_residual", {})
        for tag, r in other.info.get("max_residual", {}).items():
            worst[tag] = max(worst.get(tag, 0.0), r)

    def tags(self) -> set[str]:
        return {v.tag for v in self.violations}

    def as_dict(self) -> dict:
        return {"passed": self.passed, "violations": [v.as_dict() for v in self.violations], "info": self.info}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=str)

    def to_text(self) -> str:
        lines = ["PASSED" if self.passed else f"FAILED ({len(self.violations)} violations)"]
        for v in self.violations:
            lines.append(f"  {v.tag} at {v.where}: residual {v.residual:.3e}")
        for key, value in sorted(self.info.items()):
            if key == "max_residual":
                for tag, r in sorted(value.items()):
                    lines.append(f"  max residual [{tag}]: {r:.3e}")
            elif isinstance(value, float):
                lines.append(f"  {key}: {value:.3e}")
            else:
                lines.append(f"  {key}: {value}")
        return "\n".join(lines)
