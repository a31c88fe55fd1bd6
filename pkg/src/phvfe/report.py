"""Report assembly: deterministic JSON (schema 1) and verdict bookkeeping."""
from __future__ import annotations

import json
import platform
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .ff_core import FiniteField
from .func_eq import CharSumTable, _fmt

SCHEMA = 1


def field_json(F: FiniteField) -> dict:
    return {"p": F.p, "e": F.e, "q": F.q, "modulus": list(F.modulus), "generator": F.generator}


def table_summary(table: CharSumTable) -> dict:
    return {
        "instance": table.instance,
        "rho": table.rho_name,
        "q": table.field.q,
        "rows": len(table.rows),
        "dual_twist": table.twist,
        "valid_twists": table.valid_twists,
        "candidate_residuals": {k: _fmt(v) for k, v in sorted(table.candidate_residuals.items())},
        "max_ratio_residual": _fmt(table.max_ratio_residual),
        "C": [{"k": r.k, "re": _fmt(r.C.real), "im": _fmt(r.C.imag), "abs": _fmt(abs(r.C))}
              for r in table.rows],
    }


@dataclass
class VerificationReport:
    command: str
    seed: int
    instance: str | None = None
    rho: str | None = None
    field: dict | None = None
    sections: dict = dc_field(default_factory=dict)
    verdicts: dict[str, bool] = dc_field(default_factory=dict)

    def check(self, name: str, passed: bool) -> None:
        self.verdicts[name] = bool(passed)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "meta": {
                "command": self.command,
                "package_version": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "seed": self.seed,
            },
            "instance": self.instance,
            "rho": self.rho,
            "field": self.field,
            **self.sections,
            "verdicts": dict(sorted(self.verdicts.items())),
            "verdict": "pass" if self.passed else "fail",
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"
