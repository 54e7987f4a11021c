"""Verification reports: one record per trial, JSON and CSV output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

DISCLAIMER = (
    "Numerical certification of sampled instances at the stated tolerances; "
    "not a proof of the underlying statements."
)


@dataclass
class TrialRecord:
    """One comparison ``lhs <relation> rhs``.

    ``relation`` is ``"le"`` (margin ``lhs - rhs``, violated above ``tol``),
    ``"eq"`` (margin ``|lhs - rhs|``, violated above ``tol``) or ``"gt"``
    (margin ``rhs - lhs``, violated when not strictly negative).
    """

    trial: int
    seed: int
    label: str
    lhs: float
    rhs: float
    relation: str
    tol: float
    summary: str = ""
    item: int = 0
    margin: float = field(init=False)
    status: str = field(init=False)

    def __post_init__(self) -> None:
        self.lhs, self.rhs = float(self.lhs), float(self.rhs)
        if self.relation == "le":
            self.margin = self.lhs - self.rhs
            bad = self.margin > self.tol
        elif self.relation == "eq":
            self.margin = abs(self.lhs - self.rhs)
            bad = self.margin > self.tol
        elif self.relation == "gt":
            self.margin = self.rhs - self.lhs
            bad = self.margin >= 0.0
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        self.status = "violation" if bad else "ok"


@dataclass
class VerificationReport:
    check: str
    records: list[TrialRecord]
    wall_time: float = 0.0
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def n_trials(self) -> int:
        return len(self.records)

    @property
    def n_violations(self) -> int:
        return sum(r.status == "violation" for r in self.records)

    @property
    def worst_margin(self) -> float:
        return max((r.margin for r in self.records), default=float("-inf"))

    @property
    def tolerances(self) -> dict:
        return {r.label: r.tol for r in self.records}

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def worst(self, label: str | None = None) -> float:
        sel = [r.margin for r in self.records if label is None or r.label == label]
        return max(sel, default=float("-inf"))

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "check": self.check,
            "n_trials": self.n_trials,
            "n_violations": self.n_violations,
            "worst_margin": self.worst_margin,
            "tolerances": self.tolerances,
            "params": self.params,
            "extra": self.extra,
            "note": DISCLAIMER,
            "records": [asdict(r) for r in self.records],
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "seed", "lhs", "rhs", "margin", "status"])
        for r in self.records:
            w.writerow([r.trial, r.seed, repr(r.lhs), repr(r.rhs), repr(r.margin), r.status])
        return buf.getvalue()

    def render(self, fmt: str = "json", timing: bool = True) -> str:
        if fmt == "json":
            return self.to_json(timing)
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")

    def summary_line(self) -> str:
        return (
            f"{self.check}: {self.n_trials} comparisons, {self.n_violations} violations, "
            f"worst margin {self.worst_margin:.3g}"
        )


def _jsonable(obj):
    try:
        import numpy as np

        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"not serializable: {type(obj)!r}")
