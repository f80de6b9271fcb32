"""Check results and the JSON/text report envelope."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: str | None = None

    def to_json(self):
        return {"name": self.name, "pass": self.passed, "residual": self.residual}


@dataclass
class Report:
    command: str
    weight: int
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, residual: str | None = None) -> Check:
        c = Check(name, bool(passed), None if passed else residual)
        self.checks.append(c)
        return c

    def extend(self, checks):
        self.checks.extend(checks)

    def warn(self, message: str):
        self.data.setdefault("warnings", []).append(message)

    def to_json(self):
        return {
            "command": self.command,
            "weight": self.weight,
            "checks": [c.to_json() for c in self.checks],
            "data": self.data,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, ensure_ascii=False)

    def text(self) -> str:
        lines = [f"{self.command} (W={self.weight}): {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"  [{mark}] {c.name}")
            if c.residual:
                lines.append(f"         residual: {c.residual}")
        for w in self.data.get("warnings", []):
            lines.append(f"  warning: {w}")
        for key in sorted(self.data):
            if key == "warnings":
                continue
            lines.append(f"  {key}: {json.dumps(self.data[key], sort_keys=True, ensure_ascii=False)}")
        return "\n".join(lines)


def matrix_residual(D) -> str | None:
    """Render the nonzero entries of a difference matrix, or None if it vanishes."""
    parts = [f"[{i}][{k}] {f}" for i, k, f in D.nonzero_entries()]
    return "; ".join(parts) if parts else None
