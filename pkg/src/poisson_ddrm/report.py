"""Pass/fail records produced by the Monte-Carlo verifiers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)


@dataclass
class Report:
    target: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, passed, **stats) -> Check:
        c = Check(name, bool(passed), _plain(stats))
        self.checks.append(c)
        return c

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"target": self.target, "passed": self.passed, "info": _plain(self.info),
                "checks": [asdict(c) for c in self.checks]}

    def summary_lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {self.target}:{c.name}" for c in self.checks]


def _plain(obj):
    """Convert numpy scalars/arrays nested in dicts and lists to JSON-able values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj
