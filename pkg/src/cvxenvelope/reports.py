"""Verifier reports shared by every check."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class Report:
    check: str
    worst_violation: float
    passed: bool
    location: list = field(default_factory=list)
    status: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        doc = {
            "check": self.check,
            "worst_violation": _clean(self.worst_violation),
            "pass": bool(self.passed),
            "location": [int(i) for i in self.location],
            "status": self.status,
        }
        if self.details:
            doc["details"] = {k: _clean(v) for k, v in self.details.items()}
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _clean(v: Any):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "tolist") and getattr(v, "ndim", 0) > 0:
        return _clean(v.tolist())
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v
