from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """One verified relation; ``status`` is PASS, FAIL or SKIPPED."""

    name: str
    status: str
    params: dict = field(default_factory=dict)
    detail: str = ""

    @classmethod
    def of(cls, name: str, ok: bool, detail: str = "", **params) -> "Check":
        return cls(name, "PASS" if ok else "FAIL", params, detail)

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"

    def line(self) -> str:
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items())
        out = f"{self.name}: {self.status}"
        if ps:
            out += f" ({ps})"
        if self.detail:
            out += f" {self.detail}"
        return out


def all_passed(checks) -> bool:
    return all(c.passed for c in checks)


def format_report(checks) -> str:
    return "\n".join(c.line() for c in checks) + "\n"
