"""Node-indexed value fields with solve metadata and JSON/CSV output."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .spaces import Space


@dataclass
class ValueField:
    """Solution values over a space, plus how they were obtained.

    ``direction`` records the monotonicity of the iteration that produced
    the field: ``from_below`` (started at the minimal extension),
    ``from_above`` (started at the maximal one) or ``unspecified``.
    """

    space: Space
    values: np.ndarray
    iterations: int = 0
    residual: float = float("nan")
    direction: str = "unspecified"
    converged: bool = True
    equation_residual: float = float("nan")
    flag: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n,):
            raise ValueError("values must have one entry per node")

    def value(self, node_id) -> float:
        return float(self.values[self.space.id_index[node_id]])

    def as_dict(self) -> dict:
        return {self.space.ids[i]: float(self.values[i])
                for i in range(self.space.n)}

    def copy_with(self, **kw) -> "ValueField":
        out = replace(self, **kw)
        out.values = np.array(out.values, dtype=float)
        return out

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "values": {str(k): v for k, v in self.as_dict().items()},
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "direction": self.direction,
            "converged": bool(self.converged),
            "equation_residual": float(self.equation_residual),
            "flag": self.flag,
        }

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path: str) -> None:
        """Write one row per node in canonical order, 17 significant digits.

        Grids emit coordinate columns; graphs emit the node id.
        """
        with open(path, "w", newline="") as fh:
            if self.space.is_grid:
                cols = ["x", "y"][: self.space.dim]
                fh.write(",".join(cols + ["value"]) + "\n")
                for i in range(self.space.n):
                    pos = self.space.positions[i]
                    row = [f"{p:.17g}" for p in pos] + [f"{self.values[i]:.17g}"]
                    fh.write(",".join(row) + "\n")
            else:
                fh.write("node_id,value\n")
                for i in range(self.space.n):
                    fh.write(f"{self.space.ids[i]},{self.values[i]:.17g}\n")

    @classmethod
    def from_json(cls, space: Space, path_or_dict) -> "ValueField":
        if isinstance(path_or_dict, str):
            with open(path_or_dict) as fh:
                d = json.load(fh)
        else:
            d = path_or_dict
        vals = np.empty(space.n)
        by_str = {str(v): i for v, i in space.id_index.items()}
        for k, v in d["values"].items():
            vals[by_str[k]] = float(v)
        return cls(space, vals,
                   iterations=d.get("iterations", 0),
                   residual=d.get("residual", float("nan")),
                   direction=d.get("direction", "unspecified"),
                   converged=d.get("converged", True),
                   equation_residual=d.get("equation_residual", float("nan")),
                   flag=d.get("flag", ""))


def as_values(space: Space, u) -> np.ndarray:
    """Coerce a field, mapping or array to a node-aligned float array."""
    if isinstance(u, ValueField):
        return u.values
    if isinstance(u, Mapping):
        vals = np.empty(space.n)
        for k, v in u.items():
            vals[space.id_index[k]] = float(v)
        return vals
    arr = np.asarray(u, dtype=float)
    if arr.shape != (space.n,):
        raise ValueError("value array must have one entry per node")
    return arr
