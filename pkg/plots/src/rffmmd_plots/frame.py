"""Typed view over the result CSV schema emitted by the experiment harness."""

from __future__ import annotations

import csv
from dataclasses import dataclass

REQUIRED_COLUMNS = (
    "scenario",
    "estimator",
    "param_name",
    "param_value",
    "n1",
    "n2",
    "R",
    "B",
    "alpha",
    "reps",
    "reject_rate",
    "se",
    "mean_stat",
    "mean_time_s",
    "seed",
)

_FLOAT_FIELDS = ("param_value", "alpha", "reject_rate", "se", "mean_stat", "mean_time_s")


class SchemaError(ValueError):
    """CSV does not conform to the harness result schema."""


@dataclass
class ResultFrame:
    """Parsed result rows; empty cells become None."""

    rows: list[dict]

    @classmethod
    def read_csv(cls, path) -> "ResultFrame":
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"{path}: missing columns {missing}")
            rows = []
            for raw in reader:
                row = dict(raw)
                for field in _FLOAT_FIELDS:
                    row[field] = _maybe_float(row[field], field, path)
                rows.append(row)
        for row in rows:
            rate = row["reject_rate"]
            if rate is not None and not (0.0 <= rate <= 1.0):
                raise SchemaError(f"{path}: reject_rate {rate} outside [0, 1]")
        return cls(rows)

    def estimators(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row["estimator"] not in seen:
                seen.append(row["estimator"])
        return seen

    def groups(self) -> list[tuple[str, str]]:
        """Distinct (scenario, param_name) pairs in row order."""
        seen = []
        for row in self.rows:
            key = (row["scenario"], row["param_name"])
            if key not in seen:
                seen.append(key)
        return seen

    def select(self, scenario: str, param_name: str, estimator: str) -> list[dict]:
        return [
            r
            for r in self.rows
            if r["scenario"] == scenario
            and r["param_name"] == param_name
            and r["estimator"] == estimator
        ]


def _maybe_float(text, field, path):
    if text is None or text == "":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise SchemaError(f"{path}: bad value {text!r} in column {field}") from exc
