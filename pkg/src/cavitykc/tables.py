"""Column tables shared by the sweeps and the command line front end."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass
class ResultTable:
    """Named numeric columns plus a free-form metadata block.

    ``rows`` is a 2-D float array in row-major order.
    """

    columns: list[str]
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = [str(c) for c in self.columns]
        r = np.asarray(self.rows, dtype=float)
        if r.ndim == 1:
            r = r.reshape(-1, len(self.columns)) if r.size else np.zeros((0, len(self.columns)))
        if r.ndim != 2 or r.shape[1] != len(self.columns):
            raise ValueError(f"rows of shape {r.shape} do not fit {len(self.columns)} columns")
        self.rows = r

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def to_csv(self) -> str:
        out = io.StringIO()
        for k in sorted(self.meta):
            out.write(f"# {k}: {json.dumps(_jsonable(self.meta[k]), sort_keys=True)}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.rows:
            out.write(",".join(format(float(x), ".17g") for x in row) + "\n")
        return out.getvalue()

    def to_json(self) -> str:
        doc = {"meta": _jsonable(self.meta), "columns": self.columns, "rows": self.rows.tolist()}
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        doc = json.loads(text)
        rows = np.array(doc["rows"], dtype=float).reshape(-1, len(doc["columns"]))
        return cls(doc["columns"], rows, doc["meta"])

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        meta = {}
        lines = text.splitlines()
        i = 0
        while i < len(lines) and lines[i].startswith("#"):
            key, _, val = lines[i][2:].partition(": ")
            meta[key] = json.loads(val)
            i += 1
        columns = lines[i].split(",")
        data = [[float(x) for x in ln.split(",")] for ln in lines[i + 1 :] if ln]
        return cls(columns, np.array(data, dtype=float).reshape(-1, len(columns)), meta)
